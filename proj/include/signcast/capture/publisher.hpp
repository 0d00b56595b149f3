#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>

#include "signcast/capture/capture.hpp"

namespace signcast::capture {

struct PublisherOptions {
  std::string url;
  std::string room;
  std::string name = "signer";
  std::size_t queue_capacity = 256;
  std::size_t retries = 3;                         // after the first failed attempt
  std::chrono::milliseconds initial_backoff{200};  // doubled before each retry
  std::chrono::milliseconds connect_timeout{2000};
  std::chrono::milliseconds ping_interval{5000};
};

/// Publishes captions from a background sender thread. publish() only
/// touches a bounded queue; when full the oldest unsent caption is dropped.
/// Captions sent but not yet echoed are resent after a reconnect. A lost
/// connection is retried with the same backoff schedule; when every retry
/// fails the publisher is marked failed.
class NetworkPublisher : public CaptionSink {
 public:
  explicit NetworkPublisher(PublisherOptions options);
  ~NetworkPublisher() override;

  /// Connects and joins as publisher; throws CaptureError(kConnection) after
  /// the last failed retry.
  void start();
  void publish(const protocol::CaptionEvent& event) override;
  /// Waits until every queued caption has been echoed back by the server.
  bool flush(std::chrono::milliseconds timeout);
  void stop();

  bool failed() const;
  std::size_t dropped() const;
  std::uint64_t peer_id() const;

 private:
  class Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace signcast::capture
