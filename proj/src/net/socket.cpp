#include "roomsense/net/socket.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

#include <fmt/format.h>

namespace roomsense::net {

std::optional<Endpoint> Endpoint::parse(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0) return std::nullopt;
  const auto port_text = text.substr(colon + 1);
  unsigned port = 0;
  auto [p, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc{} || p != port_text.data() + port_text.size() || port > 65535)
    return std::nullopt;
  return Endpoint{std::string(text.substr(0, colon)), static_cast<std::uint16_t>(port)};
}

std::string Endpoint::to_string() const { return fmt::format("{}:{}", host, port); }

void Fd::reset(int fd) {
  if (fd_ >= 0) ::close(fd_);
  fd_ = fd;
}

namespace {

sockaddr_in make_addr(const Endpoint& ep) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  const std::string host = ep.host == "localhost" ? "127.0.0.1" : ep.host;
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    throw NetError(fmt::format("not an IPv4 address: {}", ep.host));
  return addr;
}

int poll_one(int fd, short events, std::chrono::milliseconds timeout) {
  pollfd pfd{fd, events, 0};
  for (;;) {
    const int rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
    if (rc < 0 && errno == EINTR) continue;
    return rc;
  }
}

}  // namespace

TcpStream TcpStream::connect(const Endpoint& ep, std::chrono::milliseconds timeout) {
  const sockaddr_in addr = make_addr(ep);
  Fd fd{::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC | SOCK_NONBLOCK, 0)};
  if (!fd.valid()) throw NetError(std::strerror(errno));
  const int rc = ::connect(fd.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr);
  if (rc < 0 && errno != EINPROGRESS)
    throw NetError(fmt::format("connect {}: {}", ep.to_string(), std::strerror(errno)));
  if (rc < 0) {
    if (poll_one(fd.get(), POLLOUT, timeout) <= 0)
      throw NetError(fmt::format("connect {}: timeout", ep.to_string()));
    int err = 0;
    socklen_t len = sizeof err;
    ::getsockopt(fd.get(), SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) throw NetError(fmt::format("connect {}: {}", ep.to_string(), std::strerror(err)));
  }
  const int flags = ::fcntl(fd.get(), F_GETFL);
  ::fcntl(fd.get(), F_SETFL, flags & ~O_NONBLOCK);
  const int one = 1;
  ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return TcpStream{std::move(fd)};
}

IoStatus TcpStream::wait_readable(std::chrono::milliseconds timeout) {
  if (!fd_.valid()) return IoStatus::closed;
  const int rc = poll_one(fd_.get(), POLLIN, timeout);
  if (rc == 0) return IoStatus::timeout;
  if (rc < 0) return IoStatus::closed;
  return IoStatus::ok;
}

IoStatus TcpStream::read_exact(std::span<std::uint8_t> buf, std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::size_t got = 0;
  while (got < buf.size()) {
    if (!fd_.valid()) return IoStatus::closed;
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return IoStatus::timeout;
    const int rc = poll_one(fd_.get(), POLLIN, left);
    if (rc == 0) return IoStatus::timeout;
    if (rc < 0) return IoStatus::closed;
    const ssize_t n = ::recv(fd_.get(), buf.data() + got, buf.size() - got, 0);
    if (n == 0) return IoStatus::closed;
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      return IoStatus::closed;
    }
    got += static_cast<std::size_t>(n);
  }
  return IoStatus::ok;
}

void TcpStream::write_all(std::span<const std::uint8_t> data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    if (!fd_.valid()) throw NetError("write on closed stream");
    const ssize_t n = ::send(fd_.get(), data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw NetError(fmt::format("send: {}", std::strerror(errno)));
    }
    sent += static_cast<std::size_t>(n);
  }
}

void TcpStream::shutdown() {
  if (fd_.valid()) ::shutdown(fd_.get(), SHUT_RDWR);
}

TcpListener TcpListener::bind(const Endpoint& ep) {
  const sockaddr_in addr = make_addr(ep);
  TcpListener l;
  l.fd_ = Fd{::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0)};
  if (!l.fd_.valid()) throw NetError(std::strerror(errno));
  const int one = 1;
  ::setsockopt(l.fd_.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(l.fd_.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) < 0)
    throw NetError(fmt::format("bind {}: {}", ep.to_string(), std::strerror(errno)));
  if (::listen(l.fd_.get(), 16) < 0)
    throw NetError(fmt::format("listen {}: {}", ep.to_string(), std::strerror(errno)));
  l.host_ = ep.host;
  return l;
}

Endpoint TcpListener::local_endpoint() const {
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  ::getsockname(fd_.get(), reinterpret_cast<sockaddr*>(&addr), &len);
  return Endpoint{host_, ntohs(addr.sin_port)};
}

std::optional<TcpStream> TcpListener::accept(std::chrono::milliseconds timeout) {
  if (!fd_.valid()) return std::nullopt;
  if (poll_one(fd_.get(), POLLIN, timeout) <= 0) return std::nullopt;
  Fd client{::accept4(fd_.get(), nullptr, nullptr, SOCK_CLOEXEC)};
  if (!client.valid()) return std::nullopt;
  const int one = 1;
  ::setsockopt(client.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return TcpStream{std::move(client)};
}

}  // namespace roomsense::net
