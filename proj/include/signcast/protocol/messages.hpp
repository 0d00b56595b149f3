#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace signcast::protocol {

enum class Role { kPublisher, kViewer };

std::string_view to_string(Role role);

struct CaptionEvent {
  std::string word;
  double confidence = 0.0;  // [0, 1]
  std::uint64_t seq = 0;
  std::uint64_t ts_ms = 0;  // sender wall clock, ms since the Unix epoch

  friend bool operator==(const CaptionEvent&, const CaptionEvent&) = default;
};

struct Member {
  std::uint64_t peer_id = 0;
  std::string name;
  Role role = Role::kViewer;

  friend bool operator==(const Member&, const Member&) = default;
};

// client -> server

struct Join {
  std::string room;
  Role role = Role::kViewer;
  std::string name;

  friend bool operator==(const Join&, const Join&) = default;
};

struct Caption {
  CaptionEvent event;

  friend bool operator==(const Caption&, const Caption&) = default;
};

struct Ping {
  friend bool operator==(const Ping&, const Ping&) = default;
};

// server -> client

struct Welcome {
  std::string room;
  std::uint64_t peer_id = 0;
  std::vector<Member> members;  // everyone already in the room

  friend bool operator==(const Welcome&, const Welcome&) = default;
};

struct CaptionBroadcast {
  std::string room;
  std::uint64_t speaker = 0;
  std::string name;
  CaptionEvent event;
  std::uint64_t server_ts_ms = 0;

  friend bool operator==(const CaptionBroadcast&, const CaptionBroadcast&) = default;
};

struct PeerJoined {
  std::uint64_t peer_id = 0;
  std::string name;
  Role role = Role::kViewer;

  friend bool operator==(const PeerJoined&, const PeerJoined&) = default;
};

struct PeerLeft {
  std::uint64_t peer_id = 0;

  friend bool operator==(const PeerLeft&, const PeerLeft&) = default;
};

struct Error {
  std::string code;
  std::string message;

  friend bool operator==(const Error&, const Error&) = default;
};

struct Pong {
  friend bool operator==(const Pong&, const Pong&) = default;
};

using Message = std::variant<Join, Caption, Ping, Welcome, CaptionBroadcast, PeerJoined, PeerLeft, Error, Pong>;

/// Wire "type" tag of the alternative held by `message`.
std::string_view type_name(const Message& message);

class ProtocolError : public std::runtime_error {
 public:
  enum class Code {
    kMalformed,     // not a JSON object
    kUnknownType,   // missing or unrecognized "type"
    kMissingField,
    kInvalidField,  // wrong JSON type or unusable value
    kOutOfRange,    // confidence outside [0, 1], negative integers
    kInvalidRoom,   // room id outside [a-zA-Z0-9_-]{1,64}
  };

  ProtocolError(Code code, std::string field, const std::string& what)
      : std::runtime_error(what), code_(code), field_(std::move(field)) {}

  Code code() const noexcept { return code_; }
  /// Offending field name; empty when not field-specific.
  const std::string& field() const noexcept { return field_; }

 private:
  Code code_;
  std::string field_;
};

/// Snake-case error code as sent in Error messages, e.g. "out_of_range".
std::string_view wire_code(ProtocolError::Code code);

bool valid_room_id(std::string_view room);

/// Single-line JSON object. Throws ProtocolError for messages that break an
/// invariant (empty word, bad room, confidence outside [0, 1], invalid UTF-8).
std::string encode(const Message& message);

/// Parses and validates one payload. Unknown extra fields are ignored.
Message decode(std::string_view payload);

}  // namespace signcast::protocol
