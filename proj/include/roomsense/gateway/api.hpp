#pragma once

#include <memory>
#include <thread>

#include "roomsense/gateway/gateway.hpp"
#include "roomsense/net/socket.hpp"

namespace httplib {
class Server;
}

namespace roomsense::gateway {

/// HTTP/1.1 JSON API under /api/v1 plus the line-delimited reading stream.
class ApiServer {
 public:
  /// Binds immediately (port 0 picks a free port). Throws net::NetError on failure.
  ApiServer(Gateway& gateway, const net::Endpoint& bind);
  ~ApiServer();

  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  net::Endpoint endpoint() const { return endpoint_; }
  void stop();

 private:
  void routes();

  Gateway& gw_;
  std::unique_ptr<httplib::Server> server_;
  net::Endpoint endpoint_;
  std::thread thread_;
};

}  // namespace roomsense::gateway
