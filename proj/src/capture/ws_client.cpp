#include "signcast/capture/ws_client.hpp"

#include <atomic>
#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

namespace signcast::capture {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

WsUrl parse_ws_url(const std::string& url) {
  const std::string scheme = "ws://";
  if (url.rfind(scheme, 0) != 0) throw ConnectionError("server URL must start with ws://, got '" + url + "'");
  std::string rest = url.substr(scheme.size());
  WsUrl out;
  const auto slash = rest.find('/');
  if (slash != std::string::npos) {
    out.target = rest.substr(slash);
    rest = rest.substr(0, slash);
  }
  if (out.target.empty() || out.target == "/") out.target = "/ws";
  const auto colon = rest.rfind(':');
  const bool bracketed = !rest.empty() && rest.front() == '[';
  if (colon != std::string::npos && (!bracketed || colon > rest.find(']'))) {
    const std::string port = rest.substr(colon + 1);
    if (port.empty() || port.size() > 5 || port.find_first_not_of("0123456789") != std::string::npos ||
        std::stoul(port) > 65535) {
      throw ConnectionError("invalid port in server URL '" + url + "'");
    }
    out.port = static_cast<std::uint16_t>(std::stoul(port));
    rest = rest.substr(0, colon);
  }
  if (bracketed && rest.size() >= 2 && rest.back() == ']') rest = rest.substr(1, rest.size() - 2);
  if (rest.empty()) throw ConnectionError("server URL has no host: '" + url + "'");
  out.host = rest;
  return out;
}

class WsClient::Impl : public std::enable_shared_from_this<Impl> {
 public:
  net::io_context ioc;
  websocket::stream<beast::tcp_stream> ws{ioc};
  std::thread thread;
  beast::flat_buffer buffer;
  std::deque<std::string> outbox;  // I/O thread only
  bool closing = false;            // I/O thread only
  bool used = false;

  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::string> inbox;
  std::atomic<bool> open{false};

  void mark_closed() {
    {
      std::lock_guard lock(mu);
      open = false;
    }
    cv.notify_all();
  }

  void do_read() {
    ws.async_read(buffer, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->mark_closed();
      {
        std::lock_guard lock(self->mu);
        self->inbox.push_back(beast::buffers_to_string(self->buffer.data()));
      }
      self->cv.notify_all();
      self->buffer.consume(self->buffer.size());
      self->do_read();
    });
  }

  void do_write() {
    ws.async_write(net::buffer(outbox.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->mark_closed();
      self->outbox.pop_front();
      if (!self->outbox.empty()) {
        self->do_write();
      } else if (self->closing) {
        self->do_close();
      }
    });
  }

  void do_close() {
    ws.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {
      beast::error_code ignored;
      beast::get_lowest_layer(self->ws).socket().shutdown(tcp::socket::shutdown_both, ignored);
      beast::get_lowest_layer(self->ws).close();
      self->mark_closed();
    });
  }
};

WsClient::WsClient() : impl_(std::make_shared<Impl>()) {}

WsClient::~WsClient() { close(); }

void WsClient::connect(const std::string& url, std::chrono::milliseconds timeout) {
  if (impl_->used) throw ConnectionError("a client connects once; create a new one to reconnect");
  const WsUrl parsed = parse_ws_url(url);
  Impl& s = *impl_;
  s.used = true;
  tcp::resolver resolver(s.ioc);
  beast::error_code result;
  const std::string host_header = parsed.host + ":" + std::to_string(parsed.port);

  resolver.async_resolve(parsed.host, std::to_string(parsed.port),
                         [&](beast::error_code ec, tcp::resolver::results_type endpoints) {
                           if (ec) {
                             result = ec;
                             return;
                           }
                           beast::get_lowest_layer(s.ws).expires_after(timeout);
                           beast::get_lowest_layer(s.ws).async_connect(
                               endpoints, [&](beast::error_code ec2, const tcp::endpoint&) {
                                 if (ec2) {
                                   result = ec2;
                                   return;
                                 }
                                 beast::get_lowest_layer(s.ws).expires_never();
                                 websocket::stream_base::timeout opts{timeout, websocket::stream_base::none(), false};
                                 s.ws.set_option(opts);
                                 s.ws.text(true);
                                 s.ws.async_handshake(host_header, parsed.target,
                                                      [&](beast::error_code ec3) { result = ec3; });
                               });
                         });
  s.ioc.run();
  if (result) {
    beast::get_lowest_layer(s.ws).close();
    throw ConnectionError("cannot connect to " + url + ": " + result.message());
  }
  s.ioc.restart();
  s.open = true;
  s.do_read();
  s.thread = std::thread([&s] { s.ioc.run(); });
}

void WsClient::send_text(std::string text) {
  net::post(impl_->ioc, [self = impl_, text = std::move(text)]() mutable {
    if (!self->open || self->closing) return;
    self->outbox.push_back(std::move(text));
    if (self->outbox.size() == 1) self->do_write();
  });
}

void WsClient::send(const protocol::Message& message) { send_text(protocol::encode(message)); }

std::optional<std::string> WsClient::receive_text(std::chrono::milliseconds timeout) {
  std::unique_lock lock(impl_->mu);
  impl_->cv.wait_for(lock, timeout, [&] { return !impl_->inbox.empty() || !impl_->open; });
  if (impl_->inbox.empty()) return std::nullopt;
  std::string text = std::move(impl_->inbox.front());
  impl_->inbox.pop_front();
  return text;
}

std::optional<protocol::Message> WsClient::receive(std::chrono::milliseconds timeout) {
  auto text = receive_text(timeout);
  if (!text) return std::nullopt;
  return protocol::decode(*text);
}

bool WsClient::is_open() const { return impl_->open; }

void WsClient::close() {
  if (!impl_->thread.joinable()) return;
  net::post(impl_->ioc, [self = impl_] {
    if (!self->open || self->closing) return;
    self->closing = true;
    if (self->outbox.empty()) self->do_close();
  });
  impl_->thread.join();
}

}  // namespace signcast::capture
