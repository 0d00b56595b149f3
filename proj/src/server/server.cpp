#include "signcast/server/server.hpp"

#include <atomic>
#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <optional>
#include <spdlog/spdlog.h>
#include <thread>
#include <unordered_map>

#include "signcast/server/registry.hpp"

namespace signcast::server {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using SteadyClock = std::chrono::steady_clock;

void ServerConfig::validate() const {
  if (max_room_members == 0) throw ServerError("max room size must be at least 1");
  if (heartbeat_interval.count() <= 0) throw ServerError("heartbeat interval must be positive");
  if (timeout <= heartbeat_interval) throw ServerError("timeout must exceed the heartbeat interval");
  if (max_outbound_queue == 0) throw ServerError("outbound queue bound must be positive");
  if (threads == 0) throw ServerError("need at least one I/O thread");
  (void)parse_bind(bind);
}

Endpoint parse_bind(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == bind.size()) {
    throw ServerError("bind address must look like host:port, got '" + bind + "'");
  }
  Endpoint ep;
  ep.host = bind.substr(0, colon);
  if (ep.host.front() == '[' && ep.host.back() == ']') ep.host = ep.host.substr(1, ep.host.size() - 2);
  const std::string port = bind.substr(colon + 1);
  if (port.size() > 5 || port.find_first_not_of("0123456789") != std::string::npos || std::stoul(port) > 65535) {
    throw ServerError("invalid port in bind address '" + bind + "'");
  }
  ep.port = static_cast<std::uint16_t>(std::stoul(port));
  return ep;
}

class Session;

class BroadcastServer::Impl {
 public:
  explicit Impl(ServerConfig c) : config(std::move(c)), registry(config.max_room_members) {}

  void do_accept();
  void handle_payload(ConnId id, const std::string& payload);
  void handle_disconnect(ConnId id);
  void forget(ConnId id);
  void send_to(ConnId id, const protocol::Message& message);
  /// Caller holds `mu`.
  void dispatch(const std::vector<Delivery>& deliveries);

  ServerConfig config;
  net::io_context ioc;
  std::optional<tcp::acceptor> acceptor;
  std::vector<std::thread> threads;
  std::uint16_t bound_port = 0;
  bool running = false;

  mutable std::mutex mu;  // registry and sessions
  RoomRegistry registry;
  std::unordered_map<ConnId, std::weak_ptr<Session>> sessions;
  std::atomic<ConnId> next_id{1};
  std::atomic<bool> accepting{false};

  std::mutex stop_mu;
  std::condition_variable stop_cv;
  bool stop_requested = false;
};

class Session : public std::enable_shared_from_this<Session> {
 public:
  Session(tcp::socket&& socket, BroadcastServer::Impl& server, ConnId id)
      : ws_(std::move(socket)), timer_(ws_.get_executor()), server_(server), id_(id) {}

  ConnId id() const noexcept { return id_; }

  void start() {
    net::dispatch(ws_.get_executor(), [self = shared_from_this()] { self->read_request(); });
  }

  /// Thread-safe. Posts to the session strand; posts issued in order run in
  /// order.
  void enqueue(std::string text) {
    net::post(ws_.get_executor(), [self = shared_from_this(), text = std::move(text)]() mutable {
      self->push(std::move(text));
    });
  }

  void close() {
    net::post(ws_.get_executor(), [self = shared_from_this()] { self->force_close(); });
  }

 private:
  void read_request() {
    beast::get_lowest_layer(ws_).expires_after(std::chrono::seconds(10));
    http::async_read(ws_.next_layer(), buffer_, request_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_request(ec); });
  }

  void on_request(beast::error_code ec) {
    if (ec) return finish();
    const std::string_view target(request_.target().data(), request_.target().size());
    const std::string_view path = target.substr(0, target.find('?'));
    if (path != "/ws") return reject(http::status::not_found, "not found\n");
    if (!websocket::is_upgrade(request_)) return reject(http::status::upgrade_required, "websocket upgrade required\n");

    beast::get_lowest_layer(ws_).expires_never();
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.set_option(websocket::stream_base::decorator(
        [](websocket::response_type& res) { res.set(http::field::server, "signcast-server"); }));
    ws_.text(true);
    ws_.async_accept(request_, [self = shared_from_this()](beast::error_code e) { self->on_accept(e); });
  }

  void reject(http::status status, const char* body) {
    auto res = std::make_shared<http::response<http::string_body>>(status, request_.version());
    res->set(http::field::content_type, "text/plain");
    res->keep_alive(false);
    res->body() = body;
    res->prepare_payload();
    http::async_write(ws_.next_layer(), *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ignored;
      beast::get_lowest_layer(self->ws_).socket().shutdown(tcp::socket::shutdown_both, ignored);
      self->finish();
    });
  }

  void on_accept(beast::error_code ec) {
    if (ec) return finish();
    open_ = true;
    last_activity_ = SteadyClock::now();
    arm_heartbeat();
    do_read();
  }

  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      if (ec != websocket::error::closed && ec != net::error::operation_aborted) {
        spdlog::debug("connection {} read ended: {}", id_, ec.message());
      }
      return force_close();
    }
    last_activity_ = SteadyClock::now();
    if (ws_.got_text()) {
      server_.handle_payload(id_, beast::buffers_to_string(buffer_.data()));
    } else {
      server_.send_to(id_, protocol::Error{"malformed", "binary frames are not supported"});
    }
    buffer_.consume(buffer_.size());
    do_read();
  }

  void push(std::string text) {
    if (closing_ || !open_) return;
    if (queue_.size() >= server_.config.max_outbound_queue) {
      spdlog::warn("connection {} outbound queue overflow ({} messages), disconnecting", id_, queue_.size());
      return force_close();
    }
    queue_.push_back(std::move(text));
    if (queue_.size() == 1) do_write();
  }

  void do_write() {
    ws_.async_write(net::buffer(queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_write(ec); });
  }

  void on_write(beast::error_code ec) {
    if (ec) return force_close();
    queue_.pop_front();
    if (!queue_.empty() && !closing_) do_write();
  }

  void arm_heartbeat() {
    timer_.expires_after(server_.config.heartbeat_interval);
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || self->closing_) return;
      if (SteadyClock::now() - self->last_activity_ > self->server_.config.timeout) {
        spdlog::info("connection {} silent beyond timeout, closing", self->id_);
        return self->force_close();
      }
      self->arm_heartbeat();
    });
  }

  void force_close() {
    if (closing_) return;
    closing_ = true;
    timer_.cancel();
    beast::error_code ignored;
    beast::get_lowest_layer(ws_).socket().shutdown(tcp::socket::shutdown_both, ignored);
    beast::get_lowest_layer(ws_).close();
    finish();
  }

  void finish() {
    if (finished_) return;
    finished_ = true;
    if (open_) {
      server_.handle_disconnect(id_);
    } else {
      server_.forget(id_);
    }
  }

  websocket::stream<beast::tcp_stream> ws_;
  net::steady_timer timer_;
  BroadcastServer::Impl& server_;
  ConnId id_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
  std::deque<std::string> queue_;
  SteadyClock::time_point last_activity_;
  bool open_ = false;
  bool closing_ = false;
  bool finished_ = false;
};

void BroadcastServer::Impl::do_accept() {
  acceptor->async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (ec) {
      if (ec != net::error::operation_aborted) spdlog::warn("accept failed: {}", ec.message());
      if (!acceptor->is_open()) return;
    } else {
      const ConnId id = next_id++;
      auto session = std::make_shared<Session>(std::move(socket), *this, id);
      {
        std::lock_guard lock(mu);
        sessions[id] = session;
      }
      session->start();
    }
    do_accept();
  });
}

void BroadcastServer::Impl::dispatch(const std::vector<Delivery>& deliveries) {
  for (const auto& d : deliveries) {
    const auto it = sessions.find(d.to);
    if (it == sessions.end()) continue;
    auto session = it->second.lock();
    if (!session) continue;
    try {
      session->enqueue(protocol::encode(d.message));
    } catch (const protocol::ProtocolError& e) {
      spdlog::error("dropping unencodable {} for {}: {}", protocol::type_name(d.message), d.to, e.what());
    }
  }
}

void BroadcastServer::Impl::handle_payload(ConnId id, const std::string& payload) {
  std::lock_guard lock(mu);
  const auto deliveries = registry.on_payload(id, payload);
  dispatch(deliveries);
}

void BroadcastServer::Impl::send_to(ConnId id, const protocol::Message& message) {
  std::lock_guard lock(mu);
  dispatch({{id, message}});
}

void BroadcastServer::Impl::handle_disconnect(ConnId id) {
  std::lock_guard lock(mu);
  sessions.erase(id);
  const auto deliveries = registry.on_disconnect(id);
  dispatch(deliveries);
}

void BroadcastServer::Impl::forget(ConnId id) {
  std::lock_guard lock(mu);
  sessions.erase(id);
}

BroadcastServer::BroadcastServer(ServerConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {
  impl_->config.validate();
}

BroadcastServer::~BroadcastServer() { stop(); }

const ServerConfig& BroadcastServer::config() const noexcept { return impl_->config; }

void BroadcastServer::start() {
  Impl& s = *impl_;
  if (s.running) return;
  const Endpoint ep = parse_bind(s.config.bind);
  beast::error_code ec;
  const auto address = net::ip::make_address(ep.host == "localhost" ? "127.0.0.1" : ep.host, ec);
  if (ec) throw ServerError("cannot parse bind host '" + ep.host + "': " + ec.message());
  const tcp::endpoint endpoint(address, ep.port);

  s.acceptor.emplace(s.ioc);
  s.acceptor->open(endpoint.protocol(), ec);
  if (!ec) s.acceptor->set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) s.acceptor->bind(endpoint, ec);
  if (!ec) s.acceptor->listen(net::socket_base::max_listen_connections, ec);
  if (ec) throw ServerError("cannot listen on " + s.config.bind + ": " + ec.message());
  s.bound_port = s.acceptor->local_endpoint().port();

  s.ioc.restart();
  s.do_accept();
  s.running = true;
  s.accepting = true;
  s.stop_requested = false;
  for (std::size_t i = 0; i < s.config.threads; ++i) s.threads.emplace_back([&s] { s.ioc.run(); });
  spdlog::info("listening on {}:{} (ws path /ws)", ep.host, s.bound_port);
}

void BroadcastServer::stop() {
  Impl& s = *impl_;
  if (!s.running) return;
  s.running = false;
  net::post(s.ioc, [&s] {
    beast::error_code ignored;
    s.acceptor->close(ignored);
    s.accepting = false;
    std::lock_guard lock(s.mu);
    for (auto& [id, weak] : s.sessions) {
      if (auto session = weak.lock()) session->close();
    }
  });
  // Give sessions a moment to unwind, then stop whatever remains.
  const auto deadline = SteadyClock::now() + std::chrono::seconds(2);
  while (SteadyClock::now() < deadline) {
    {
      std::lock_guard lock(s.mu);
      if (s.sessions.empty() && !s.accepting) break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  s.ioc.stop();
  for (auto& t : s.threads) t.join();
  s.threads.clear();
  {
    std::lock_guard lock(s.mu);
    s.sessions.clear();
  }
  s.acceptor.reset();
  spdlog::info("server stopped");
  {
    std::lock_guard lock(s.stop_mu);
    s.stop_requested = true;
  }
  s.stop_cv.notify_all();
}

void BroadcastServer::run() {
  Impl& s = *impl_;
  start();
  net::signal_set signals(s.ioc, SIGINT, SIGTERM);
  signals.async_wait([&s](beast::error_code ec, int sig) {
    if (ec) return;
    spdlog::info("signal {} received, shutting down", sig);
    {
      std::lock_guard lock(s.stop_mu);
      s.stop_requested = true;
    }
    s.stop_cv.notify_all();
  });
  {
    std::unique_lock lock(s.stop_mu);
    s.stop_cv.wait(lock, [&s] { return s.stop_requested; });
  }
  stop();
}

std::uint16_t BroadcastServer::port() const { return impl_->bound_port; }

ServerStats BroadcastServer::stats() const {
  std::lock_guard lock(impl_->mu);
  return {impl_->sessions.size(), impl_->registry.room_count(), impl_->registry.joined_count()};
}

}  // namespace signcast::server
