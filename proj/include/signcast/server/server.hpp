#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>

namespace signcast::server {

struct ServerConfig {
  std::string bind = "0.0.0.0:8765";  // port 0 picks an ephemeral port
  std::size_t max_room_members = 64;
  std::chrono::milliseconds heartbeat_interval{15000};
  std::chrono::milliseconds timeout{45000};
  /// Outbound messages buffered per connection before it is dropped.
  std::size_t max_outbound_queue = 4096;
  std::size_t threads = 1;

  /// timeout > heartbeat_interval > 0, max_room_members >= 1.
  void validate() const;
};

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};

/// "host:port"; IPv6 hosts in brackets, e.g. "[::1]:8765".
Endpoint parse_bind(const std::string& bind);

class ServerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ServerStats {
  std::size_t open_connections = 0;
  std::size_t rooms = 0;
  std::size_t joined = 0;
};

/// WebSocket endpoint at /ws serving the caption protocol, one text frame
/// per message. Room state is guarded by a single mutex and deliveries are
/// queued while it is held, so all members of a room observe one order.
class BroadcastServer {
 public:
  explicit BroadcastServer(ServerConfig config);
  ~BroadcastServer();
  BroadcastServer(const BroadcastServer&) = delete;
  BroadcastServer& operator=(const BroadcastServer&) = delete;

  /// Binds and starts the I/O threads; returns once listening.
  void start();
  /// Closes every connection and joins the I/O threads. Idempotent.
  void stop();
  /// start(), then block until SIGINT/SIGTERM or stop().
  void run();

  /// Bound port (useful with port 0).
  std::uint16_t port() const;
  ServerStats stats() const;
  const ServerConfig& config() const noexcept;

  class Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace signcast::server
