#include "woc/bus/broker.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "woc/bus/topic.hpp"
#include "woc/util/text.hpp"

namespace woc::bus {

std::string_view to_string(Pacing pacing) { return pacing == Pacing::Fast ? "fast" : "paced"; }

std::optional<Pacing> pacing_from_string(std::string_view text) {
  if (text == "fast") return Pacing::Fast;
  if (text == "paced") return Pacing::Paced;
  return std::nullopt;
}

SyncState sync_advance(SyncState state) {
  if (!state.pending.empty()) {
    throw std::logic_error(fmt::format("cannot advance past step {}: {} acknowledgement(s) pending",
                                       state.current_step, state.pending.size()));
  }
  if (state.current_step >= state.schedule.steps) {
    throw std::logic_error("schedule already complete");
  }
  ++state.current_step;
  state.pending = state.stepped;
  return state;
}

void EventLog::append(LogEntry entry) {
  entry.index = entries_.size();
  entries_.push_back(std::move(entry));
}

namespace {

std::string entry_text(const LogEntry& e) {
  std::string out = fmt::format("{} {} conn={} client={}", e.index, e.kind, e.conn, e.client.empty() ? "-" : e.client);
  if (e.step) out += fmt::format(" step={}", *e.step);
  if (e.kind == "STEP") out += fmt::format(" pending=[{}]", fmt::join(e.pending, ","));
  if (!e.detail.empty()) out += " " + e.detail;
  return out;
}

}  // namespace

std::string EventLog::routing_text() const {
  std::string out;
  for (const auto& e : entries_) {
    out += entry_text(e);
    out += '\n';
  }
  return out;
}

std::string EventLog::timed_text() const {
  std::string out;
  for (const auto& e : entries_) {
    out += fmt::format("{:.3f} ", e.clock * 1000.0);
    out += entry_text(e);
    out += '\n';
  }
  return out;
}

Broker::Broker(Manifest manifest, SendFn send, ClockFn clock)
    : manifest_(std::move(manifest)), send_(std::move(send)), clock_(std::move(clock)) {
  sync_.schedule = manifest_.schedule;
  if (!(sync_.schedule.speedup > 0.0)) sync_.schedule.speedup = 1.0;
}

void Broker::record(std::string kind, ConnId conn, std::string client, std::optional<std::uint64_t> step,
                    std::string detail, std::vector<std::string> pending) {
  LogEntry e;
  e.clock = clock_ ? clock_() : 0.0;
  e.kind = std::move(kind);
  e.conn = conn;
  e.client = std::move(client);
  e.step = step;
  e.detail = std::move(detail);
  e.pending = std::move(pending);
  log_.append(std::move(e));
}

void Broker::send(ConnId conn, const BusMessage& msg) {
  if (send_) send_(conn, encode(msg));
}

void Broker::begin() {
  if (begun_) return;
  begun_ = true;
  record("BEGIN", 0, "", std::nullopt,
         fmt::format("steps={} step_seconds={} pacing={} expected={}", manifest_.schedule.steps,
                     util::format_double(manifest_.schedule.step_seconds), to_string(manifest_.schedule.pacing),
                     manifest_.clients.size()));
  start_if_ready();
}

void Broker::open(ConnId conn) {
  sessions_[conn] = Session{};
  record("OPEN", conn, "", std::nullopt, "");
}

void Broker::close(ConnId conn) {
  auto it = sessions_.find(conn);
  if (it == sessions_.end()) return;
  leave(conn, "disconnected");
}

void Broker::leave(ConnId conn, const std::string& why) {
  auto it = sessions_.find(conn);
  if (it == sessions_.end()) return;
  Session s = std::move(it->second);
  sessions_.erase(it);
  record("CLOSE", conn, s.name, std::nullopt, why);
  if (!s.registered) return;
  if (started_ && !done()) {
    if (s.mode == ClientMode::Stepped && sync_.stepped.count(s.name)) {
      abort(fmt::format("stepped client '{}' {}", s.name, why));
    } else {
      sync_.free_running.erase(s.name);
    }
  }
}

void Broker::reject(ConnId conn, const std::string& client, const std::string& reason) {
  record("REJECT", conn, client, std::nullopt, reason);
  BusMessage err = BusMessage::plain(MsgType::Error, "broker", ++broker_seq_);
  err.error = reason;
  send(conn, err);
}

void Broker::receive(ConnId conn, std::string_view line) {
  auto it = sessions_.find(conn);
  if (it == sessions_.end()) {
    record("DROP", conn, "", std::nullopt, "message on unknown connection");
    return;
  }
  BusMessage msg;
  try {
    msg = decode(line);
  } catch (const ProtocolError& e) {
    record("RECV", conn, it->second.name, std::nullopt, std::string(line));
    reject(conn, it->second.name, fmt::format("protocol error: {}", e.what()));
    return;
  }
  record("RECV", conn, it->second.name, msg.step, encode(msg));
  handle(conn, msg, line);
}

void Broker::handle(ConnId conn, const BusMessage& msg, std::string_view) {
  Session& s = sessions_.at(conn);
  if (msg.type == MsgType::Register) {
    handle_register(conn, msg);
    return;
  }
  if (!s.registered) {
    reject(conn, msg.from, "not registered");
    return;
  }
  if (msg.from != s.name) {
    reject(conn, s.name, fmt::format("sender '{}' does not match session '{}'", msg.from, s.name));
    return;
  }
  if (msg.seq <= s.last_seq) {
    reject(conn, s.name, fmt::format("sequence number {} not above {}", msg.seq, s.last_seq));
    return;
  }
  s.last_seq = msg.seq;

  switch (msg.type) {
    case MsgType::Publish:
      handle_publish(conn, s, msg);
      break;
    case MsgType::Subscribe:
      for (const auto& p : msg.subs) {
        if (!valid_pattern(p)) {
          reject(conn, s.name, fmt::format("malformed topic pattern '{}'", p));
          return;
        }
      }
      s.subs.insert(s.subs.end(), msg.subs.begin(), msg.subs.end());
      break;
    case MsgType::StepDone:
      handle_step_done(s, msg);
      break;
    case MsgType::Shutdown:
      leave(conn, "left");
      break;
    case MsgType::Error:
      record("CLIENT_ERROR", conn, s.name, std::nullopt, msg.error);
      break;
    default:
      reject(conn, s.name, fmt::format("unexpected {} from client", to_string(msg.type)));
      break;
  }
}

void Broker::handle_register(ConnId conn, const BusMessage& msg) {
  Session& s = sessions_.at(conn);
  if (s.registered) {
    reject(conn, s.name, "already registered");
    return;
  }
  if (msg.from.empty()) {
    reject(conn, "", "empty client name");
    return;
  }
  for (const auto& [c, other] : sessions_) {
    if (other.registered && other.name == msg.from) {
      reject(conn, msg.from, "duplicate client");
      return;
    }
  }
  const ClientMode mode = msg.mode.value_or(ClientMode::Stepped);
  auto entry = std::find_if(manifest_.clients.begin(), manifest_.clients.end(),
                            [&](const ManifestEntry& e) { return e.name == msg.from; });
  if (entry == manifest_.clients.end() && manifest_.strict) {
    reject(conn, msg.from, "unknown client");
    return;
  }
  if (entry != manifest_.clients.end() && entry->mode != mode) {
    reject(conn, msg.from, fmt::format("mode mismatch: manifest expects {}", to_string(entry->mode)));
    return;
  }
  if (started_) {
    if (manifest_.strict) {
      reject(conn, msg.from, "experiment already started");
      return;
    }
    if (mode == ClientMode::Stepped) {
      reject(conn, msg.from, "stepped clients cannot join a running experiment");
      return;
    }
  }
  for (const auto& p : msg.subs) {
    if (!valid_pattern(p)) {
      reject(conn, msg.from, fmt::format("malformed topic pattern '{}'", p));
      return;
    }
  }
  s.name = msg.from;
  s.mode = mode;
  s.subs = msg.subs;
  s.last_seq = msg.seq;
  s.registered = true;
  if (started_) sync_.free_running.insert(s.name);
  record("REGISTER", conn, s.name, std::nullopt, fmt::format("mode={} subs=[{}]", to_string(mode), fmt::join(s.subs, ",")));

  BusMessage ack = BusMessage::plain(MsgType::RegisterAck, "broker", ++broker_seq_);
  ack.steps = manifest_.schedule.steps;
  ack.step_seconds = manifest_.schedule.step_seconds;
  send(conn, ack);
  start_if_ready();
}

void Broker::handle_publish(ConnId conn, Session& s, const BusMessage& msg) {
  if (!valid_topic(msg.topic)) {
    reject(conn, s.name, fmt::format("malformed topic '{}'", msg.topic));
    return;
  }
  const std::string line = encode(msg);
  for (const auto& [target, session] : sessions_) {
    if (target == conn || !session.registered) continue;
    const bool match = std::any_of(session.subs.begin(), session.subs.end(),
                                   [&](const std::string& p) { return topic_matches(p, msg.topic); });
    if (!match) continue;
    record("ROUTE", target, session.name, msg.step, fmt::format("from={} seq={} topic={}", msg.from, msg.seq, msg.topic));
    if (send_) send_(target, line);
  }
}

void Broker::handle_step_done(Session& s, const BusMessage& msg) {
  const auto step = msg.step.value_or(0);
  if (!started_ || done() || s.mode != ClientMode::Stepped || step != sync_.current_step ||
      !sync_.pending.count(s.name)) {
    record("STALE", 0, s.name, step, fmt::format("current={}", sync_.current_step));
    return;
  }
  sync_.pending.erase(s.name);
  record("DONE", 0, s.name, step, fmt::format("remaining={}", sync_.pending.size()));
  if (sync_.pending.empty()) try_advance();
}

void Broker::start_if_ready() {
  if (!begun_ || started_ || done()) return;
  std::set<std::string> registered;
  for (const auto& [c, s] : sessions_) {
    if (s.registered) registered.insert(s.name);
  }
  for (const auto& e : manifest_.clients) {
    if (!registered.count(e.name)) return;
  }
  started_ = true;
  start_clock_ = clock_ ? clock_() : 0.0;
  for (const auto& [c, s] : sessions_) {
    if (!s.registered) continue;
    (s.mode == ClientMode::Stepped ? sync_.stepped : sync_.free_running).insert(s.name);
  }
  record("START", 0, "", std::nullopt,
         fmt::format("stepped=[{}] free=[{}]", fmt::join(sync_.stepped, ","), fmt::join(sync_.free_running, ",")));
  try_advance();
}

void Broker::tick() {
  if (!deadline_ || done()) return;
  if (clock_ && clock_() < *deadline_) return;
  deadline_.reset();
  try_advance();
}

void Broker::try_advance() {
  while (started_ && !done() && sync_.pending.empty()) {
    if (sync_.current_step >= sync_.schedule.steps) {
      finish();
      return;
    }
    if (sync_.schedule.pacing == Pacing::Paced) {
      const double due = start_clock_ + static_cast<double>(sync_.current_step) * sync_.schedule.step_seconds /
                                            sync_.schedule.speedup;
      if (clock_ && clock_() < due) {
        deadline_ = due;
        return;
      }
    }
    deadline_.reset();
    sync_ = sync_advance(std::move(sync_));
    const auto step = sync_.current_step;
    record("STEP", 0, "sync", step, "",
           std::vector<std::string>(sync_.pending.begin(), sync_.pending.end()));
    const BusMessage msg = BusMessage::step_msg(MsgType::Step, "sync", ++sync_seq_, step);
    for (const auto& [conn, s] : sessions_) {
      if (s.registered && sync_.stepped.count(s.name)) send(conn, msg);
    }
  }
}

void Broker::finish() {
  finished_ = true;
  deadline_.reset();
  record("FINISH", 0, "sync", sync_.current_step, "");
  const BusMessage msg = BusMessage::plain(MsgType::Shutdown, "broker", ++broker_seq_);
  for (const auto& [conn, s] : sessions_) {
    if (s.registered) send(conn, msg);
  }
}

void Broker::abort(const std::string& reason) {
  if (done()) return;
  aborted_ = true;
  abort_reason_ = reason;
  deadline_.reset();
  record("ABORT", 0, "", sync_.current_step, reason);
  BusMessage err = BusMessage::plain(MsgType::Error, "broker", ++broker_seq_);
  err.error = reason;
  const BusMessage bye = BusMessage::plain(MsgType::Shutdown, "broker", ++broker_seq_);
  for (const auto& [conn, s] : sessions_) {
    if (!s.registered) continue;
    send(conn, err);
    send(conn, bye);
  }
}

}  // namespace woc::bus
