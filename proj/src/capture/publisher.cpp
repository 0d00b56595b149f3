#include "signcast/capture/publisher.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

#include "signcast/capture/ws_client.hpp"

namespace signcast::capture {

using Clock = std::chrono::steady_clock;

class NetworkPublisher::Impl {
 public:
  explicit Impl(PublisherOptions o) : options(std::move(o)) {}

  PublisherOptions options;
  std::unique_ptr<WsClient> client;  // sender thread only once started
  std::thread sender;

  mutable std::mutex mu;
  std::condition_variable wake;     // queue or stop changed
  std::condition_variable settled;  // acks, failure
  std::deque<protocol::CaptionEvent> queue;     // not yet sent
  std::deque<protocol::CaptionEvent> inflight;  // sent, awaiting echo
  bool stopping = false;
  bool failed = false;
  std::size_t dropped = 0;
  std::atomic<std::uint64_t> peer_id{0};

  /// One connection attempt: connect, join, wait for Welcome.
  std::unique_ptr<WsClient> try_connect(std::string& why) {
    auto c = std::make_unique<WsClient>();
    try {
      c->connect(options.url, options.connect_timeout);
      c->send(protocol::Join{options.room, protocol::Role::kPublisher, options.name});
      const auto deadline = Clock::now() + options.connect_timeout;
      while (Clock::now() < deadline) {
        auto reply = c->receive(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()));
        if (!reply) break;
        if (auto* welcome = std::get_if<protocol::Welcome>(&*reply)) {
          peer_id = welcome->peer_id;
          return c;
        }
        if (auto* error = std::get_if<protocol::Error>(&*reply)) {
          why = "server refused join: " + error->code + " (" + error->message + ")";
          return nullptr;
        }
      }
      why = "no welcome from server";
    } catch (const std::exception& e) {
      why = e.what();
    }
    return nullptr;
  }

  /// Initial attempt plus `retries` more with doubling backoff.
  std::unique_ptr<WsClient> connect_with_retries() {
    auto backoff = options.initial_backoff;
    for (std::size_t attempt = 0;; ++attempt) {
      std::string why;
      if (auto c = try_connect(why)) return c;
      spdlog::warn("publisher: connection attempt {} to {} failed: {}", attempt + 1, options.url, why);
      if (attempt == options.retries) return nullptr;
      {
        std::unique_lock lock(mu);
        if (wake.wait_for(lock, backoff, [&] { return stopping; })) return nullptr;
      }
      backoff *= 2;
    }
  }

  void handle_incoming() {
    while (auto text = client->receive_text(std::chrono::milliseconds(0))) {
      protocol::Message message;
      try {
        message = protocol::decode(*text);
      } catch (const protocol::ProtocolError& e) {
        spdlog::warn("publisher: undecodable message from server: {}", e.what());
        continue;
      }
      if (auto* b = std::get_if<protocol::CaptionBroadcast>(&message)) {
        if (b->speaker != peer_id) continue;
        std::lock_guard lock(mu);
        while (!inflight.empty() && inflight.front().seq <= b->event.seq) inflight.pop_front();
        settled.notify_all();
      } else if (auto* e = std::get_if<protocol::Error>(&message)) {
        spdlog::warn("publisher: server error {}: {}", e->code, e->message);
      }
    }
  }

  void run() {
    auto last_ping = Clock::now();
    for (;;) {
      std::deque<protocol::CaptionEvent> batch;
      {
        std::unique_lock lock(mu);
        wake.wait_for(lock, std::chrono::milliseconds(10), [&] { return stopping || !queue.empty(); });
        if (stopping) return;
        batch.swap(queue);
        for (const auto& e : batch) inflight.push_back(e);
      }
      for (const auto& e : batch) client->send(protocol::Caption{e});
      if (Clock::now() - last_ping >= options.ping_interval) {
        client->send(protocol::Ping{});
        last_ping = Clock::now();
      }
      handle_incoming();
      if (!client->is_open()) {
        spdlog::warn("publisher: connection lost, reconnecting");
        client.reset();
        client = connect_with_retries();
        if (!client) {
          std::lock_guard lock(mu);
          failed = !stopping;
          settled.notify_all();
          return;
        }
        std::deque<protocol::CaptionEvent> resend;
        {
          std::lock_guard lock(mu);
          resend = inflight;
        }
        for (const auto& e : resend) client->send(protocol::Caption{e});
        last_ping = Clock::now();
      }
    }
  }
};

NetworkPublisher::NetworkPublisher(PublisherOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

NetworkPublisher::~NetworkPublisher() { stop(); }

void NetworkPublisher::start() {
  if (impl_->sender.joinable() || impl_->client) {
    throw CaptureError(CaptureError::Code::kConfig, "publisher already started");
  }
  impl_->client = impl_->connect_with_retries();
  if (!impl_->client) {
    throw CaptureError(CaptureError::Code::kConnection,
                       "cannot reach " + impl_->options.url + " after " +
                           std::to_string(impl_->options.retries + 1) + " attempts");
  }
  impl_->sender = std::thread([this] { impl_->run(); });
}

void NetworkPublisher::publish(const protocol::CaptionEvent& event) {
  std::lock_guard lock(impl_->mu);
  if (impl_->queue.size() >= impl_->options.queue_capacity) {
    spdlog::warn("publisher: send queue full, dropping caption seq {}", impl_->queue.front().seq);
    impl_->queue.pop_front();
    ++impl_->dropped;
  }
  impl_->queue.push_back(event);
  impl_->wake.notify_all();
}

bool NetworkPublisher::flush(std::chrono::milliseconds timeout) {
  std::unique_lock lock(impl_->mu);
  return impl_->settled.wait_for(lock, timeout, [&] {
    return impl_->failed || (impl_->queue.empty() && impl_->inflight.empty());
  }) && !impl_->failed;
}

void NetworkPublisher::stop() {
  {
    std::lock_guard lock(impl_->mu);
    impl_->stopping = true;
  }
  impl_->wake.notify_all();
  if (impl_->sender.joinable()) impl_->sender.join();
  if (impl_->client) impl_->client->close();
}

bool NetworkPublisher::failed() const {
  std::lock_guard lock(impl_->mu);
  return impl_->failed;
}

std::size_t NetworkPublisher::dropped() const {
  std::lock_guard lock(impl_->mu);
  return impl_->dropped;
}

std::uint64_t NetworkPublisher::peer_id() const { return impl_->peer_id; }

}  // namespace signcast::capture
