#pragma once

#include <atomic>
#include <functional>
#include <iostream>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "ikbd/serve/protocol.hpp"

namespace ikbd::serve {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

/// WebSocket decode service: one session per connection, one thread per
/// connection, all sharing one frozen model. stop() closes open sessions
/// and joins their threads.
class DecodeServer {
 public:
  using Logger = std::function<void(const std::string&)>;

  DecodeServer(std::shared_ptr<const dnd::DndModel<float>> model, const std::string& address,
               unsigned short port, Logger log = {})
      : model_(std::move(model)),
        ids_(std::make_shared<SessionIds>()),
        acceptor_(ioc_, tcp::endpoint(net::ip::make_address(address), port)),
        log_(std::move(log)) {}

  ~DecodeServer() { stop(); }

  unsigned short port() const { return acceptor_.local_endpoint().port(); }

  /// Starts accepting on a background thread.
  void start() {
    if (accept_thread_.joinable()) return;
    accept_thread_ = std::thread([this] { accept_loop(); });
  }

  /// Blocks the caller while accepting connections.
  void run() { accept_loop(); }

  void stop() {
    if (stopping_.exchange(true)) return;
    // wake a blocking accept()
    try {
      net::io_context ioc;
      tcp::socket s(ioc);
      s.connect(tcp::endpoint(acceptor_.local_endpoint().address(), port()));
    } catch (const std::exception&) {
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    boost::system::error_code ec;
    acceptor_.close(ec);
    {
      std::lock_guard lock(mu_);
      for (auto* s : open_) s->shutdown(tcp::socket::shutdown_both, ec);
    }
    for (auto& w : workers_) w.thread.join();
    workers_.clear();
  }

 private:
  void accept_loop() {
    while (!stopping_) {
      tcp::socket socket(ioc_);
      boost::system::error_code ec;
      acceptor_.accept(socket, ec);
      if (stopping_) break;
      if (ec) {
        if (log_) log_("accept failed: " + ec.message());
        continue;
      }
      reap();
      auto done = std::make_shared<std::atomic<bool>>(false);
      workers_.push_back({std::thread([this, done, s = std::move(socket)]() mutable {
                            session_loop(std::move(s));
                            *done = true;
                          }),
                          done});
    }
  }

  void reap() {
    std::erase_if(workers_, [](Worker& w) {
      if (!*w.done) return false;
      w.thread.join();
      return true;
    });
  }

  // keeps a session's socket visible to stop() while the session runs
  class OpenGuard {
   public:
    OpenGuard(DecodeServer& s, tcp::socket* sock) : s_(s), sock_(sock) {
      std::lock_guard lock(s_.mu_);
      if (s_.stopping_) throw std::runtime_error("server stopping");
      s_.open_.insert(sock_);
    }
    ~OpenGuard() {
      std::lock_guard lock(s_.mu_);
      s_.open_.erase(sock_);
    }
    OpenGuard(const OpenGuard&) = delete;
    OpenGuard& operator=(const OpenGuard&) = delete;

   private:
    DecodeServer& s_;
    tcp::socket* sock_;
  };

  void session_loop(tcp::socket socket) {
    const Logger& log = log_;
    try {
      websocket::stream<tcp::socket> ws(std::move(socket));
      OpenGuard guard(*this, &ws.next_layer());
      ws.accept();
      ws.text(true);
      SessionHandler handler(model_, ids_);
      for (;;) {
        beast::flat_buffer buffer;
        ws.read(buffer);
        const std::string reply = handler.handle(beast::buffers_to_string(buffer.data()));
        ws.write(net::buffer(reply));
        if (handler.closed()) {
          ws.close(websocket::close_code::normal);
          break;
        }
      }
    } catch (const beast::system_error& e) {
      if (e.code() != websocket::error::closed && log) log(std::string("session ended: ") + e.what());
    } catch (const std::exception& e) {
      if (log) log(std::string("session failed: ") + e.what());
    }
  }

  std::shared_ptr<const dnd::DndModel<float>> model_;
  std::shared_ptr<SessionIds> ids_;
  net::io_context ioc_;
  tcp::acceptor acceptor_;
  Logger log_;
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;

  struct Worker {
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };
  std::vector<Worker> workers_;  // accept thread only, then stop()
  std::mutex mu_;
  std::set<tcp::socket*> open_;
};

}  // namespace ikbd::serve
