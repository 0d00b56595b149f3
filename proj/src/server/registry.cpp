#include "signcast/server/registry.hpp"

#include <algorithm>
#include <chrono>

namespace signcast::server {

using namespace protocol;

std::uint64_t system_now_ms() {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
          .count());
}

RoomRegistry::RoomRegistry(std::size_t max_room_members, Clock clock)
    : max_room_members_(max_room_members), clock_(std::move(clock)) {}

Delivery RoomRegistry::error(ConnId conn, std::string code, std::string message) {
  return {conn, Error{std::move(code), std::move(message)}};
}

std::vector<Delivery> RoomRegistry::on_payload(ConnId conn, std::string_view payload) {
  try {
    return on_message(conn, decode(payload));
  } catch (const ProtocolError& e) {
    return {error(conn, std::string(wire_code(e.code())), e.what())};
  }
}

std::vector<Delivery> RoomRegistry::on_message(ConnId conn, const Message& message) {
  if (const auto* join = std::get_if<Join>(&message)) return handle_join(conn, *join);
  if (const auto* caption = std::get_if<Caption>(&message)) return handle_caption(conn, *caption);
  if (std::holds_alternative<Ping>(message)) return {{conn, Pong{}}};
  return {error(conn, "unexpected_type", "'" + std::string(type_name(message)) + "' is a server-to-client message")};
}

std::vector<Delivery> RoomRegistry::handle_join(ConnId conn, const Join& join) {
  if (members_.count(conn)) return {error(conn, "already_joined", "connection already joined a room")};
  if (!valid_room_id(join.room)) return {error(conn, "invalid_room", "room id must match [a-zA-Z0-9_-]{1,64}")};
  auto it = rooms_.find(join.room);
  if (it != rooms_.end() && it->second.order.size() >= max_room_members_) {
    return {error(conn, "room_full", "room '" + join.room + "' is full")};
  }

  Room& room = rooms_[join.room];
  std::vector<Delivery> out;
  Welcome welcome{join.room, conn, {}};
  for (ConnId other : room.order) {
    const MemberInfo& info = members_.at(other);
    welcome.members.push_back({other, info.name, info.role});
  }
  out.push_back({conn, std::move(welcome)});
  for (ConnId other : room.order) out.push_back({other, PeerJoined{conn, join.name, join.role}});

  room.order.push_back(conn);
  members_[conn] = {join.room, join.name, join.role};
  return out;
}

std::vector<Delivery> RoomRegistry::handle_caption(ConnId conn, const Caption& caption) {
  const auto member = members_.find(conn);
  if (member == members_.end()) return {error(conn, "not_joined", "join a room before sending captions")};
  if (member->second.role != Role::kPublisher) return {error(conn, "not_publisher", "only publishers may caption")};
  Room& room = rooms_.at(member->second.room);
  auto& last = room.last_seq[conn];
  if (caption.event.seq <= last) {
    return {error(conn, "stale_seq",
                  "seq " + std::to_string(caption.event.seq) + " is not above " + std::to_string(last))};
  }
  last = caption.event.seq;

  CaptionBroadcast broadcast{member->second.room, conn, member->second.name, caption.event, clock_()};
  std::vector<Delivery> out;
  out.reserve(room.order.size());
  for (ConnId to : room.order) out.push_back({to, broadcast});
  return out;
}

std::vector<Delivery> RoomRegistry::on_disconnect(ConnId conn) {
  const auto member = members_.find(conn);
  if (member == members_.end()) return {};
  const std::string room_id = member->second.room;
  members_.erase(member);
  Room& room = rooms_.at(room_id);
  room.order.erase(std::remove(room.order.begin(), room.order.end(), conn), room.order.end());
  room.last_seq.erase(conn);
  std::vector<Delivery> out;
  for (ConnId to : room.order) out.push_back({to, PeerLeft{conn}});
  if (room.order.empty()) rooms_.erase(room_id);
  return out;
}

std::vector<ConnId> RoomRegistry::members(const std::string& room) const {
  const auto it = rooms_.find(room);
  return it == rooms_.end() ? std::vector<ConnId>{} : it->second.order;
}

std::optional<std::string> RoomRegistry::room_of(ConnId conn) const {
  const auto it = members_.find(conn);
  if (it == members_.end()) return std::nullopt;
  return it->second.room;
}

}  // namespace signcast::server
