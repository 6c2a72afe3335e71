#include "woc/bus/inprocess.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <stdexcept>
#include <thread>
#include <utility>

#include <fmt/format.h>

#include "woc/ppvc/splitmix.hpp"
#include "woc/util/text.hpp"

namespace woc::bus {

namespace {

std::string_view kind_name(TranscriptEvent::Kind k) {
  switch (k) {
    case TranscriptEvent::Kind::Begin: return "BEGIN";
    case TranscriptEvent::Kind::Open: return "OPEN";
    case TranscriptEvent::Kind::Line: return "LINE";
    case TranscriptEvent::Kind::Close: return "CLOSE";
    case TranscriptEvent::Kind::Tick: return "TICK";
    case TranscriptEvent::Kind::Abort: return "ABORT";
  }
  return "LINE";
}

double steady_seconds() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

}  // namespace

void apply_event(Broker& b, const TranscriptEvent& ev) {
  switch (ev.kind) {
    case TranscriptEvent::Kind::Begin: b.begin(); break;
    case TranscriptEvent::Kind::Open: b.open(ev.conn); break;
    case TranscriptEvent::Kind::Line: b.receive(ev.conn, ev.text); break;
    case TranscriptEvent::Kind::Close: b.close(ev.conn); break;
    case TranscriptEvent::Kind::Tick: b.tick(); break;
    case TranscriptEvent::Kind::Abort: b.abort(ev.text); break;
  }
}

std::string transcript_text(const Transcript& t) {
  std::string out;
  for (const auto& ev : t) {
    out += fmt::format("{} {} {}", util::format_double(ev.clock), kind_name(ev.kind), ev.conn);
    if (!ev.text.empty()) {
      out += ' ';
      out += ev.text;
    }
    out += '\n';
  }
  return out;
}

Transcript parse_transcript(const std::string& text) {
  Transcript t;
  std::size_t pos = 0;
  std::size_t lineno = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++lineno;
    if (line.empty()) continue;
    auto bad = [&] { return std::runtime_error(fmt::format("transcript line {}: malformed", lineno)); };
    auto s1 = line.find(' ');
    if (s1 == std::string_view::npos) throw bad();
    auto s2 = line.find(' ', s1 + 1);
    auto s3 = s2 == std::string_view::npos ? std::string_view::npos : line.find(' ', s2 + 1);
    TranscriptEvent ev;
    if (!util::parse_double(line.substr(0, s1), ev.clock) || s2 == std::string_view::npos) throw bad();
    auto kind = line.substr(s1 + 1, s2 - s1 - 1);
    bool found = false;
    for (auto k : {TranscriptEvent::Kind::Begin, TranscriptEvent::Kind::Open, TranscriptEvent::Kind::Line,
                   TranscriptEvent::Kind::Close, TranscriptEvent::Kind::Tick, TranscriptEvent::Kind::Abort}) {
      if (kind_name(k) == kind) {
        ev.kind = k;
        found = true;
      }
    }
    if (!found) throw bad();
    auto conn = line.substr(s2 + 1, s3 == std::string_view::npos ? std::string_view::npos : s3 - s2 - 1);
    if (!util::parse_u64(conn, ev.conn)) throw bad();
    if (s3 != std::string_view::npos) ev.text = std::string(line.substr(s3 + 1));
    t.push_back(std::move(ev));
  }
  return t;
}

EventLog replay_transcript(const Manifest& manifest, const Transcript& transcript) {
  double clock = 0.0;
  Broker b(manifest, [](ConnId, const std::string&) {}, [&clock] { return clock; });
  for (const auto& ev : transcript) {
    clock = ev.clock;
    apply_event(b, ev);
  }
  return b.log();
}

InProcessHub::InProcessHub(Manifest manifest, HubOptions options)
    : manifest_(std::move(manifest)), options_(options) {
  epoch_ = options_.logical_clock ? 0.0 : steady_seconds();
  rng_state_ = options_.shuffle_seed.value_or(0);
  broker_ = std::make_unique<Broker>(
      manifest_,
      [this](ConnId conn, const std::string& line) { queue_.push_back(Item{false, conn, line}); },
      [this] { return now(); });
}

InProcessHub::~InProcessHub() = default;

double InProcessHub::now() const {
  if (options_.logical_clock) return static_cast<double>(logical_ms_) / 1000.0;
  return steady_seconds() - epoch_;
}

void InProcessHub::apply(TranscriptEvent ev) {
  ev.clock = now();
  apply_event(*broker_, ev);
  transcript_.push_back(std::move(ev));
}

ConnId InProcessHub::attach(Client& client) {
  sessions_.push_back(std::make_unique<ClientSession>(client, [this] { return now(); }));
  const ConnId conn = sessions_.size();
  apply({TranscriptEvent::Kind::Open, conn, 0.0, {}});
  for (auto& line : sessions_.back()->start()) queue_.push_back(Item{true, conn, std::move(line)});
  return conn;
}

const std::vector<std::string>& InProcessHub::client_errors(ConnId conn) const {
  return sessions_.at(conn - 1)->errors();
}

void InProcessHub::abort(const std::string& reason) { apply({TranscriptEvent::Kind::Abort, 0, 0.0, reason}); }

InProcessHub::Item InProcessHub::pop() {
  if (!options_.shuffle_seed || queue_.size() == 1) {
    Item it = std::move(queue_.front());
    queue_.pop_front();
    return it;
  }
  std::set<std::pair<bool, ConnId>> seen;
  std::vector<std::size_t> heads;
  for (std::size_t i = 0; i < queue_.size(); ++i) {
    if (seen.insert({queue_[i].to_broker, queue_[i].conn}).second) heads.push_back(i);
  }
  ppvc::SplitMix64 rng(rng_state_);
  const std::size_t pick = heads[rng.below(heads.size())];
  rng_state_ = rng.next();
  Item it = std::move(queue_[pick]);
  queue_.erase(queue_.begin() + static_cast<std::ptrdiff_t>(pick));
  return it;
}

HubOutcome InProcessHub::run() {
  HubOutcome out;
  apply({TranscriptEvent::Kind::Begin, 0, 0.0, {}});
  while (!broker_->done() || !queue_.empty()) {
    if (options_.max_events && out.events >= options_.max_events && !broker_->done()) {
      abort(fmt::format("event budget of {} exhausted", options_.max_events));
      continue;
    }
    if (auto deadline = broker_->next_deadline(); deadline && now() >= *deadline) {
      apply({TranscriptEvent::Kind::Tick, 0, 0.0, {}});
      continue;
    }
    if (queue_.empty()) {
      if (auto deadline = broker_->next_deadline()) {
        if (options_.logical_clock) {
          logical_ms_ = std::max(logical_ms_ + 1, static_cast<std::uint64_t>(std::ceil(*deadline * 1000.0)));
        } else {
          std::this_thread::sleep_for(std::chrono::duration<double>(*deadline - now()));
        }
        continue;
      }
      abort("stalled: no client can make progress");
      continue;
    }
    Item item = pop();
    ++ticks_;
    ++logical_ms_;
    ++out.events;
    if (item.to_broker) {
      apply({TranscriptEvent::Kind::Line, item.conn, 0.0, std::move(item.line)});
      continue;
    }
    auto& session = *sessions_.at(item.conn - 1);
    const bool was_closed = session.closed();
    std::vector<std::string> lines;
    try {
      lines = session.deliver(item.line);
    } catch (const std::exception& e) {
      abort(fmt::format("client '{}' failed: {}", session.client().name(), e.what()));
      apply({TranscriptEvent::Kind::Close, item.conn, 0.0, {}});
      continue;
    }
    for (auto& line : lines) queue_.push_back(Item{true, item.conn, std::move(line)});
    if (!was_closed && session.closed()) apply({TranscriptEvent::Kind::Close, item.conn, 0.0, {}});
  }
  out.finished = broker_->finished();
  out.aborted = broker_->aborted();
  out.reason = broker_->abort_reason();
  return out;
}

}  // namespace woc::bus
