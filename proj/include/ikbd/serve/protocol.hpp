#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "ikbd/dnd/decoder.hpp"

namespace ikbd::serve {

struct Session {
  std::string session_id;
  dnd::DecodeState state;
  std::optional<std::pair<double, double>> screen_mm;
  std::chrono::system_clock::time_point created_at;
};

/// Issues "s1", "s2", ... across all connections of one server.
class SessionIds {
 public:
  std::string next() { return "s" + std::to_string(++counter_); }

 private:
  std::atomic<unsigned long> counter_{0};
};

/// Lowest index at which `now` differs from `before`; if one is a prefix of
/// the other, the length of the shorter.
inline std::size_t first_revision(std::string_view before, std::string_view now) {
  const std::size_t n = std::min(before.size(), now.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (before[i] != now[i]) return i;
  }
  return n;
}

/// Protocol state machine for one channel. Messages are JSON objects with a
/// "type" of hello, touch, reset or bye; every message gets exactly one
/// reply. Errors never drop an open session.
class SessionHandler {
 public:
  SessionHandler(std::shared_ptr<const dnd::DndModel<float>> model, std::shared_ptr<SessionIds> ids)
      : model_(std::move(model)), ids_(std::move(ids)) {}

  std::string handle(std::string_view text) { return handle_json(text).dump(); }

  nlohmann::json handle_json(std::string_view text) {
    nlohmann::json msg;
    try {
      msg = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
      return error("malformed", "message is not valid JSON");
    }
    if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
      return error("malformed", "message must be an object with a string \"type\"");
    }
    const std::string type = msg["type"].get<std::string>();
    if (type == "hello") return hello(msg);
    if (type == "touch") return touch(msg);
    if (type == "reset") {
      if (!session_) return error("no-session", "send hello first");
      session_->state.reset();
      return {{"type", "ok"}};
    }
    if (type == "bye") {
      session_.reset();
      closed_ = true;
      return {{"type", "ok"}};
    }
    return error("unknown-type", "unsupported message type '" + type + "'");
  }

  bool closed() const { return closed_; }
  const std::optional<Session>& session() const { return session_; }

 private:
  static nlohmann::json error(const std::string& code, const std::string& detail) {
    return {{"type", "error"}, {"code", code}, {"detail", detail}};
  }

  nlohmann::json hello(const nlohmann::json& msg) {
    Session s;
    s.session_id = ids_->next();
    s.state = dnd::DecodeState(std::size_t(model_->config().window));
    s.created_at = std::chrono::system_clock::now();
    if (msg.contains("screen_mm")) {
      const auto& mm = msg["screen_mm"];
      if (!mm.is_array() || mm.size() != 2 || !mm[0].is_number() || !mm[1].is_number()) {
        return error("malformed", "screen_mm must be [width, height]");
      }
      s.screen_mm = {mm[0].get<double>(), mm[1].get<double>()};
    }
    session_ = std::move(s);
    closed_ = false;
    return {{"type", "ready"},
            {"session_id", session_->session_id},
            {"window", model_->config().window},
            {"dict_size", model_->config().dict_size}};
  }

  nlohmann::json touch(const nlohmann::json& msg) {
    if (!session_) return error("no-session", "send hello first");
    if (!msg.contains("x") || !msg.contains("y") || !msg["x"].is_number() || !msg["y"].is_number()) {
      return error("malformed", "touch needs numeric x and y");
    }
    TouchPoint p{msg["x"].get<double>(), msg["y"].get<double>(), std::nullopt};
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || p.x < 0.0 || p.x > 1.0 || p.y < 0.0 || p.y > 1.0) {
      return error("bad-touch", "coordinates must be normalized to [0, 1]");
    }
    if (msg.contains("t_ms")) {
      if (!msg["t_ms"].is_number()) return error("malformed", "t_ms must be a number");
      p.t_ms = msg["t_ms"].get<double>();
    }
    const std::string before = session_->state.decoded;
    const std::string& now = dnd::decode_stream(*model_, session_->state, p);
    return {{"type", "decoded"}, {"text", now}, {"revised_from", first_revision(before, now)}};
  }

  std::shared_ptr<const dnd::DndModel<float>> model_;
  std::shared_ptr<SessionIds> ids_;
  std::optional<Session> session_;
  bool closed_ = false;
};

}  // namespace ikbd::serve
