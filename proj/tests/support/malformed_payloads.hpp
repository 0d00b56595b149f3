#pragma once

#include <string>
#include <vector>

#include "signcast/protocol/messages.hpp"

namespace signcast::testing {

struct MalformedCase {
  std::string payload;
  protocol::ProtocolError::Code expected;
};

/// Payloads that must be rejected, each with the error it has to produce.
inline std::vector<MalformedCase> malformed_cases() {
  using Code = protocol::ProtocolError::Code;
  return {
      {"", Code::kMalformed},
      {"{", Code::kMalformed},
      {"[1,2]", Code::kMalformed},
      {"\"ping\"", Code::kMalformed},
      {"{\"type\":\"ping\"} trailing", Code::kMalformed},
      {std::string("{\"type\":\"join\",\"room\":\"a\",\"role\":\"viewer\",\"name\":\"\xff\"}"), Code::kMalformed},
      {R"({"type":"unknown_kind"})", Code::kUnknownType},
      {R"({"kind":"ping"})", Code::kUnknownType},
      {R"({"type":3})", Code::kUnknownType},
      {R"({"type":"caption","confidence":0.5,"seq":1,"ts_ms":2})", Code::kMissingField},
      {R"({"type":"join","room":"a","role":"viewer"})", Code::kMissingField},
      {R"({"type":"welcome","room":"a","peer_id":1})", Code::kMissingField},
      {R"({"type":"peer_left"})", Code::kMissingField},
      {R"({"type":"caption","word":"hi","confidence":1.5,"seq":1,"ts_ms":2})", Code::kOutOfRange},
      {R"({"type":"caption","word":"hi","confidence":-0.1,"seq":1,"ts_ms":2})", Code::kOutOfRange},
      {R"({"type":"caption","word":"hi","confidence":0.5,"seq":-1,"ts_ms":2})", Code::kOutOfRange},
      {R"({"type":"caption","word":"hi","confidence":"0.5","seq":1,"ts_ms":2})", Code::kInvalidField},
      {R"({"type":"caption","word":"","confidence":0.5,"seq":1,"ts_ms":2})", Code::kInvalidField},
      {R"({"type":"caption","word":"hi","confidence":0.5,"seq":1.5,"ts_ms":2})", Code::kInvalidField},
      {R"({"type":"join","room":"a","role":"admin","name":"x"})", Code::kInvalidField},
      {R"({"type":"welcome","room":"a","peer_id":1,"members":{}})", Code::kInvalidField},
      {R"({"type":"error","code":"","message":"m"})", Code::kInvalidField},
      {R"({"type":"join","room":"has space","role":"viewer","name":"x"})", Code::kInvalidRoom},
      {R"({"type":"join","room":"","role":"viewer","name":"x"})", Code::kInvalidRoom},
      {"{\"type\":\"join\",\"room\":\"" + std::string(65, 'a') + "\",\"role\":\"viewer\",\"name\":\"x\"}", Code::kInvalidRoom},
  };
}

}  // namespace signcast::testing
