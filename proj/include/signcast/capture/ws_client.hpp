#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "signcast/protocol/messages.hpp"

namespace signcast::capture {

struct WsUrl {
  std::string host;
  std::uint16_t port = 80;
  std::string target = "/ws";
};

/// Accepts ws://host[:port][/path]; an empty path maps to /ws.
WsUrl parse_ws_url(const std::string& url);

class ConnectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// WebSocket client running its own I/O thread. Incoming text frames are
/// queued and handed out by receive(); send() never blocks on the network.
class WsClient {
 public:
  WsClient();
  ~WsClient();
  WsClient(const WsClient&) = delete;
  WsClient& operator=(const WsClient&) = delete;

  /// Resolves, connects and performs the handshake; throws ConnectionError.
  /// A client connects at most once.
  void connect(const std::string& url, std::chrono::milliseconds timeout = std::chrono::seconds(5));

  void send_text(std::string text);
  void send(const protocol::Message& message);

  /// Next text frame, or nullopt on timeout or once closed and drained.
  std::optional<std::string> receive_text(std::chrono::milliseconds timeout);
  /// Next frame decoded; throws ProtocolError on undecodable payloads.
  std::optional<protocol::Message> receive(std::chrono::milliseconds timeout);

  bool is_open() const;
  /// Sends a close frame and joins the I/O thread. Idempotent.
  void close();

  class Impl;

 private:
  std::shared_ptr<Impl> impl_;
};

}  // namespace signcast::capture
