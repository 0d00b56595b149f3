#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "signcast/capture/ws_client.hpp"
#include "signcast/server/server.hpp"

namespace signcast::testing {

using namespace std::chrono_literals;
using SteadyClock = std::chrono::steady_clock;

inline server::ServerConfig loopback_config() {
  server::ServerConfig config;
  config.bind = "127.0.0.1:0";
  return config;
}

inline std::string ws_url(const server::BroadcastServer& s) {
  return "ws://127.0.0.1:" + std::to_string(s.port()) + "/ws";
}

/// Next message of type T, skipping others (e.g. PeerJoined noise).
template <typename T>
std::optional<T> receive_as(capture::WsClient& client, std::chrono::milliseconds timeout) {
  const auto deadline = SteadyClock::now() + timeout;
  while (SteadyClock::now() < deadline) {
    auto m = client.receive(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - SteadyClock::now()));
    if (!m) return std::nullopt;
    if (auto* t = std::get_if<T>(&*m)) return *t;
  }
  return std::nullopt;
}

struct Joined {
  std::unique_ptr<capture::WsClient> client;
  protocol::Welcome welcome;
};

inline Joined join_room(const std::string& url, const std::string& room, protocol::Role role,
                        const std::string& name) {
  Joined j{std::make_unique<capture::WsClient>(), {}};
  j.client->connect(url);
  j.client->send(protocol::Join{room, role, name});
  auto w = receive_as<protocol::Welcome>(*j.client, 2000ms);
  if (!w) throw std::runtime_error("no welcome for " + name);
  j.welcome = *w;
  return j;
}

/// Nearest-rank percentile.
inline double percentile(std::vector<double> xs, double p) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(xs.size())));
  return xs[std::clamp<std::size_t>(rank, 1, xs.size()) - 1];
}

struct BroadcastOutcome {
  std::vector<std::vector<std::uint64_t>> viewer_seqs;  // per viewer, in receipt order
  std::vector<std::uint64_t> publisher_echoes;
  std::vector<double> latencies_ms;  // send -> receipt, one per viewer per caption
  bool complete = false;             // every viewer got every caption
  bool strictly_increasing = false;
  bool identical_order = false;
  double p95_ms = 0.0;
};

/// One publisher and `viewers` viewers in one room; the publisher sends
/// `captions` captions one at a time and each is awaited on every viewer.
/// Receipt is observed from this thread, so latencies are upper bounds.
inline BroadcastOutcome run_broadcast(const std::string& url, std::size_t viewers, std::size_t captions,
                                      const std::string& room = "bcast") {
  BroadcastOutcome out;
  std::vector<Joined> vs;
  for (std::size_t v = 0; v < viewers; ++v) {
    vs.push_back(join_room(url, room, protocol::Role::kViewer, "viewer" + std::to_string(v)));
  }
  auto pub = join_room(url, room, protocol::Role::kPublisher, "signer");
  out.viewer_seqs.resize(viewers);
  for (std::size_t i = 1; i <= captions; ++i) {
    const auto sent = SteadyClock::now();
    pub.client->send(protocol::Caption{{"word" + std::to_string(i % 7), 0.9, i, 0}});
    for (std::size_t v = 0; v < viewers; ++v) {
      auto b = receive_as<protocol::CaptionBroadcast>(*vs[v].client, 2000ms);
      if (!b) continue;
      out.latencies_ms.push_back(std::chrono::duration<double, std::milli>(SteadyClock::now() - sent).count());
      out.viewer_seqs[v].push_back(b->event.seq);
    }
    if (auto echo = receive_as<protocol::CaptionBroadcast>(*pub.client, 2000ms)) {
      out.publisher_echoes.push_back(echo->event.seq);
    }
  }
  out.complete = std::all_of(out.viewer_seqs.begin(), out.viewer_seqs.end(),
                             [&](const auto& s) { return s.size() == captions; });
  out.strictly_increasing = std::all_of(out.viewer_seqs.begin(), out.viewer_seqs.end(), [](const auto& s) {
    return std::adjacent_find(s.begin(), s.end(), std::greater_equal<>()) == s.end();
  });
  out.identical_order = std::all_of(out.viewer_seqs.begin(), out.viewer_seqs.end(),
                                    [&](const auto& s) { return s == out.viewer_seqs.front(); });
  out.p95_ms = percentile(out.latencies_ms, 95.0);
  pub.client->close();
  for (auto& v : vs) v.client->close();
  return out;
}

struct IsolationOutcome {
  std::size_t leaks = 0;     // captions seen outside their room
  bool complete = false;     // every viewer saw all of its own room's captions
};

/// Two rooms publishing concurrently; viewers check the room and word tags
/// of everything they receive.
inline IsolationOutcome run_isolation(const std::string& url, std::size_t captions) {
  const std::vector<std::string> rooms = {"alpha", "beta"};
  std::vector<Joined> pubs;
  std::vector<std::vector<Joined>> viewers(rooms.size());
  for (std::size_t r = 0; r < rooms.size(); ++r) {
    for (int v = 0; v < 2; ++v) viewers[r].push_back(join_room(url, rooms[r], protocol::Role::kViewer, "v"));
    pubs.push_back(join_room(url, rooms[r], protocol::Role::kPublisher, "p"));
  }
  std::vector<std::thread> senders;
  for (std::size_t r = 0; r < rooms.size(); ++r) {
    senders.emplace_back([&, r] {
      for (std::size_t i = 1; i <= captions; ++i) {
        pubs[r].client->send(protocol::Caption{{rooms[r] + "_word", 0.8, i, 0}});
      }
    });
  }
  for (auto& t : senders) t.join();

  IsolationOutcome out;
  out.complete = true;
  for (std::size_t r = 0; r < rooms.size(); ++r) {
    for (auto& v : viewers[r]) {
      std::size_t own = 0;
      while (auto b = receive_as<protocol::CaptionBroadcast>(*v.client, own < captions ? 2000ms : 200ms)) {
        if (b->room != rooms[r] || b->event.word != rooms[r] + "_word") {
          ++out.leaks;
        } else {
          ++own;
        }
      }
      out.complete = out.complete && own == captions;
    }
  }
  for (auto& p : pubs) p.client->close();
  for (auto& vr : viewers) {
    for (auto& v : vr) v.client->close();
  }
  return out;
}

/// Polls until the server holds no connections, rooms or members.
inline bool wait_until_empty(const server::BroadcastServer& s, std::chrono::milliseconds timeout) {
  const auto deadline = SteadyClock::now() + timeout;
  while (SteadyClock::now() < deadline) {
    const auto st = s.stats();
    if (st.open_connections == 0 && st.rooms == 0 && st.joined == 0) return true;
    std::this_thread::sleep_for(5ms);
  }
  return false;
}

}  // namespace signcast::testing
