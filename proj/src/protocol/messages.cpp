#include "signcast/protocol/messages.hpp"

#include <cmath>

#include "json.hpp"

namespace signcast::protocol {

using json = nlohmann::json;
using Code = ProtocolError::Code;

std::string_view to_string(Role role) { return role == Role::kPublisher ? "publisher" : "viewer"; }

std::string_view wire_code(ProtocolError::Code code) {
  switch (code) {
    case Code::kMalformed: return "malformed";
    case Code::kUnknownType: return "unknown_type";
    case Code::kMissingField: return "missing_field";
    case Code::kInvalidField: return "invalid_field";
    case Code::kOutOfRange: return "out_of_range";
    case Code::kInvalidRoom: return "invalid_room";
  }
  return "malformed";
}

bool valid_room_id(std::string_view room) {
  if (room.empty() || room.size() > 64) return false;
  for (char c : room) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

namespace {

struct TypeNameVisitor {
  std::string_view operator()(const Join&) const { return "join"; }
  std::string_view operator()(const Caption&) const { return "caption"; }
  std::string_view operator()(const Ping&) const { return "ping"; }
  std::string_view operator()(const Welcome&) const { return "welcome"; }
  std::string_view operator()(const CaptionBroadcast&) const { return "caption_broadcast"; }
  std::string_view operator()(const PeerJoined&) const { return "peer_joined"; }
  std::string_view operator()(const PeerLeft&) const { return "peer_left"; }
  std::string_view operator()(const Error&) const { return "error"; }
  std::string_view operator()(const Pong&) const { return "pong"; }
};

void check_room(const std::string& room) {
  if (!valid_room_id(room)) throw ProtocolError(Code::kInvalidRoom, "room", "room id must match [a-zA-Z0-9_-]{1,64}");
}

void check_event(const CaptionEvent& e) {
  if (e.word.empty()) throw ProtocolError(Code::kInvalidField, "word", "caption word must not be empty");
  if (!std::isfinite(e.confidence) || e.confidence < 0.0 || e.confidence > 1.0) {
    throw ProtocolError(Code::kOutOfRange, "confidence", "confidence must be within [0, 1]");
  }
}

void put_event(json& j, const CaptionEvent& e) {
  check_event(e);
  j["word"] = e.word;
  j["confidence"] = e.confidence;
  j["seq"] = e.seq;
  j["ts_ms"] = e.ts_ms;
}

json encode_member(const Member& m) { return {{"peer_id", m.peer_id}, {"name", m.name}, {"role", to_string(m.role)}}; }

struct EncodeVisitor {
  json& j;
  void operator()(const Join& m) const {
    check_room(m.room);
    j["room"] = m.room;
    j["role"] = to_string(m.role);
    j["name"] = m.name;
  }
  void operator()(const Caption& m) const { put_event(j, m.event); }
  void operator()(const Ping&) const {}
  void operator()(const Welcome& m) const {
    check_room(m.room);
    j["room"] = m.room;
    j["peer_id"] = m.peer_id;
    j["members"] = json::array();
    for (const auto& member : m.members) j["members"].push_back(encode_member(member));
  }
  void operator()(const CaptionBroadcast& m) const {
    check_room(m.room);
    j["room"] = m.room;
    j["speaker"] = m.speaker;
    j["name"] = m.name;
    put_event(j, m.event);
    j["server_ts_ms"] = m.server_ts_ms;
  }
  void operator()(const PeerJoined& m) const {
    j["peer_id"] = m.peer_id;
    j["name"] = m.name;
    j["role"] = to_string(m.role);
  }
  void operator()(const PeerLeft& m) const { j["peer_id"] = m.peer_id; }
  void operator()(const Error& m) const {
    if (m.code.empty()) throw ProtocolError(Code::kInvalidField, "code", "error code must not be empty");
    j["code"] = m.code;
    j["message"] = m.message;
  }
  void operator()(const Pong&) const {}
};

// Decoding helpers; each names the field it inspects.

const json& require(const json& j, const char* field) {
  const auto it = j.find(field);
  if (it == j.end()) throw ProtocolError(Code::kMissingField, field, std::string("missing field '") + field + "'");
  return *it;
}

std::string get_string(const json& j, const char* field) {
  const json& v = require(j, field);
  if (!v.is_string()) throw ProtocolError(Code::kInvalidField, field, std::string("field '") + field + "' must be a string");
  return v.get<std::string>();
}

std::uint64_t get_uint(const json& j, const char* field) {
  const json& v = require(j, field);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    throw ProtocolError(Code::kOutOfRange, field, std::string("field '") + field + "' must not be negative");
  }
  throw ProtocolError(Code::kInvalidField, field, std::string("field '") + field + "' must be an unsigned integer");
}

double get_number(const json& j, const char* field) {
  const json& v = require(j, field);
  if (!v.is_number()) throw ProtocolError(Code::kInvalidField, field, std::string("field '") + field + "' must be a number");
  return v.get<double>();
}

Role get_role(const json& j, const char* field) {
  const std::string role = get_string(j, field);
  if (role == "publisher") return Role::kPublisher;
  if (role == "viewer") return Role::kViewer;
  throw ProtocolError(Code::kInvalidField, field, "role must be 'publisher' or 'viewer'");
}

std::string get_room(const json& j) {
  std::string room = get_string(j, "room");
  check_room(room);
  return room;
}

CaptionEvent get_event(const json& j) {
  CaptionEvent e;
  e.word = get_string(j, "word");
  e.confidence = get_number(j, "confidence");
  e.seq = get_uint(j, "seq");
  e.ts_ms = get_uint(j, "ts_ms");
  check_event(e);
  return e;
}

}  // namespace

std::string_view type_name(const Message& message) { return std::visit(TypeNameVisitor{}, message); }

std::string encode(const Message& message) {
  json j = json::object();
  j["type"] = type_name(message);
  std::visit(EncodeVisitor{j}, message);
  try {
    return j.dump();
  } catch (const json::type_error& e) {
    throw ProtocolError(Code::kInvalidField, "", std::string("message is not valid UTF-8: ") + e.what());
  }
}

Message decode(std::string_view payload) {
  json j;
  try {
    j = json::parse(payload.begin(), payload.end());
  } catch (const json::exception& e) {
    throw ProtocolError(Code::kMalformed, "", std::string("payload is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError(Code::kMalformed, "", "payload must be a JSON object");
  const auto type_it = j.find("type");
  if (type_it == j.end() || !type_it->is_string()) {
    throw ProtocolError(Code::kUnknownType, "type", "payload has no string 'type'");
  }
  const std::string type = type_it->get<std::string>();

  if (type == "join") return Join{get_room(j), get_role(j, "role"), get_string(j, "name")};
  if (type == "caption") return Caption{get_event(j)};
  if (type == "ping") return Ping{};
  if (type == "pong") return Pong{};
  if (type == "welcome") {
    Welcome w{get_room(j), get_uint(j, "peer_id"), {}};
    const json& members = require(j, "members");
    if (!members.is_array()) throw ProtocolError(Code::kInvalidField, "members", "field 'members' must be an array");
    for (const json& m : members) {
      if (!m.is_object()) throw ProtocolError(Code::kInvalidField, "members", "member entries must be objects");
      w.members.push_back({get_uint(m, "peer_id"), get_string(m, "name"), get_role(m, "role")});
    }
    return w;
  }
  if (type == "caption_broadcast") {
    CaptionBroadcast b;
    b.room = get_room(j);
    b.speaker = get_uint(j, "speaker");
    b.name = get_string(j, "name");
    b.event = get_event(j);
    b.server_ts_ms = get_uint(j, "server_ts_ms");
    return b;
  }
  if (type == "peer_joined") return PeerJoined{get_uint(j, "peer_id"), get_string(j, "name"), get_role(j, "role")};
  if (type == "peer_left") return PeerLeft{get_uint(j, "peer_id")};
  if (type == "error") {
    Error e{get_string(j, "code"), get_string(j, "message")};
    if (e.code.empty()) throw ProtocolError(Code::kInvalidField, "code", "error code must not be empty");
    return e;
  }
  throw ProtocolError(Code::kUnknownType, "type", "unknown message type '" + type + "'");
}

}  // namespace signcast::protocol
