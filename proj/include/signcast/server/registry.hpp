#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "signcast/protocol/messages.hpp"

namespace signcast::server {

/// Server-wide connection id; doubles as the peer id announced to rooms.
using ConnId = std::uint64_t;

struct Delivery {
  ConnId to = 0;
  protocol::Message message;
};

/// Wall clock in ms since the Unix epoch.
std::uint64_t system_now_ms();

/// Room bookkeeping without I/O. Every call returns the messages to send, in
/// order. Not thread-safe; the network layer serializes calls.
class RoomRegistry {
 public:
  using Clock = std::function<std::uint64_t()>;

  explicit RoomRegistry(std::size_t max_room_members = 64, Clock clock = system_now_ms);

  /// Decodes and handles one text payload. Undecodable payloads produce an
  /// Error to the sender carrying the decode error code.
  std::vector<Delivery> on_payload(ConnId conn, std::string_view payload);
  std::vector<Delivery> on_message(ConnId conn, const protocol::Message& message);
  /// Idempotent; unknown connections produce nothing.
  std::vector<Delivery> on_disconnect(ConnId conn);

  std::size_t room_count() const noexcept { return rooms_.size(); }
  std::size_t joined_count() const noexcept { return members_.size(); }
  bool empty() const noexcept { return rooms_.empty() && members_.empty(); }
  /// Member ids of `room` in join order; empty when the room does not exist.
  std::vector<ConnId> members(const std::string& room) const;
  std::optional<std::string> room_of(ConnId conn) const;

 private:
  struct MemberInfo {
    std::string room;
    std::string name;
    protocol::Role role;
  };
  struct Room {
    std::vector<ConnId> order;  // join order
    std::map<ConnId, std::uint64_t> last_seq;
  };

  std::vector<Delivery> handle_join(ConnId conn, const protocol::Join& join);
  std::vector<Delivery> handle_caption(ConnId conn, const protocol::Caption& caption);
  static Delivery error(ConnId conn, std::string code, std::string message);

  std::size_t max_room_members_;
  Clock clock_;
  std::map<std::string, Room> rooms_;
  std::map<ConnId, MemberInfo> members_;
};

}  // namespace signcast::server
