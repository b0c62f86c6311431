#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace roomsense::net {

struct NetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  /// "host:port"; port 0 asks the OS for an ephemeral port when listening.
  static std::optional<Endpoint> parse(std::string_view text);
  std::string to_string() const;
  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

/// Owning file descriptor.
class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  ~Fd() { reset(); }
  Fd(Fd&& o) noexcept : fd_(o.release()) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) reset(o.release());
    return *this;
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;

  int get() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release() {
    int f = fd_;
    fd_ = -1;
    return f;
  }
  void reset(int fd = -1);

 private:
  int fd_ = -1;
};

enum class IoStatus { ok, timeout, closed };

class TcpStream {
 public:
  TcpStream() = default;
  explicit TcpStream(Fd fd) : fd_(std::move(fd)) {}

  /// Throws NetError when the peer cannot be reached within `timeout`.
  static TcpStream connect(const Endpoint& ep, std::chrono::milliseconds timeout);

  bool is_open() const { return fd_.valid(); }

  /// Fills `buf` completely, or reports timeout/closed. A timeout after a partial
  /// read leaves the stream in an undefined framing state; callers reconnect.
  IoStatus read_exact(std::span<std::uint8_t> buf, std::chrono::milliseconds timeout);

  /// Waits until at least one byte is readable.
  IoStatus wait_readable(std::chrono::milliseconds timeout);

  /// Throws NetError on failure.
  void write_all(std::span<const std::uint8_t> data);

  void shutdown();
  void close() { fd_.reset(); }

 private:
  Fd fd_;
};

class TcpListener {
 public:
  /// Throws NetError when the address cannot be bound.
  static TcpListener bind(const Endpoint& ep);

  Endpoint local_endpoint() const;

  /// Empty when no client arrived within `timeout`.
  std::optional<TcpStream> accept(std::chrono::milliseconds timeout);

  void close() { fd_.reset(); }

 private:
  Fd fd_;
  std::string host_;
};

}  // namespace roomsense::net
