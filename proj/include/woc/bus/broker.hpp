#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "woc/bus/message.hpp"

namespace woc::bus {

enum class Pacing { Fast, Paced };

std::string_view to_string(Pacing pacing);
std::optional<Pacing> pacing_from_string(std::string_view text);

struct Schedule {
  std::uint64_t steps = 1440;
  double step_seconds = 60.0;
  Pacing pacing = Pacing::Fast;
  double speedup = 1.0;
};

struct ManifestEntry {
  std::string name;
  ClientMode mode = ClientMode::Stepped;
};

/// Expected clients of one experiment. The synchronization host starts once
/// every listed client has registered. With `strict`, unlisted names and
/// any registration after the start are rejected.
struct Manifest {
  Schedule schedule;
  std::vector<ManifestEntry> clients;
  bool strict = true;
};

/// Barrier bookkeeping of the synchronization host. Steps run 1..N.
struct SyncState {
  std::uint64_t current_step = 0;
  std::set<std::string> stepped;
  std::set<std::string> pending;
  std::set<std::string> free_running;
  Schedule schedule;
};

/// Moves to the next step and re-arms the barrier with the full stepped
/// roster. Throws std::logic_error while acknowledgements are pending or
/// the schedule is exhausted.
SyncState sync_advance(SyncState state);

using ConnId = std::uint64_t;

struct LogEntry {
  std::uint64_t index = 0;
  double clock = 0.0;
  std::string kind;
  ConnId conn = 0;
  std::string client;
  std::optional<std::uint64_t> step;
  std::vector<std::string> pending;  // STEP entries: barrier set just armed
  std::string detail;
};

class EventLog {
 public:
  void append(LogEntry entry);
  const std::vector<LogEntry>& entries() const noexcept { return entries_; }

  /// One line per entry, clock omitted; identical for identical input
  /// event sequences.
  std::string routing_text() const;
  /// Same with the transport clock in milliseconds.
  std::string timed_text() const;

 private:
  std::vector<LogEntry> entries_;
};

/// Transport-independent broker + synchronization host. Every call mutates
/// state and must be serialized by the owning transport (one event loop).
/// Outgoing lines are handed to `send` without the trailing newline.
class Broker {
 public:
  using SendFn = std::function<void(ConnId, const std::string&)>;
  using ClockFn = std::function<double()>;

  Broker(Manifest manifest, SendFn send, ClockFn clock);

  /// Enables starting; an empty manifest starts here.
  void begin();
  void open(ConnId conn);
  void receive(ConnId conn, std::string_view line);
  void close(ConnId conn);
  /// Fires a paced step whose wall-clock deadline has passed.
  void tick();
  /// Supervisor abort.
  void abort(const std::string& reason);

  /// Clock value at which tick() has work, if any.
  std::optional<double> next_deadline() const noexcept { return deadline_; }
  bool started() const noexcept { return started_; }
  bool finished() const noexcept { return finished_; }
  bool aborted() const noexcept { return aborted_; }
  bool done() const noexcept { return finished_ || aborted_; }
  const std::string& abort_reason() const noexcept { return abort_reason_; }
  const SyncState& sync_state() const noexcept { return sync_; }
  const EventLog& log() const noexcept { return log_; }
  const Manifest& manifest() const noexcept { return manifest_; }

 private:
  struct Session {
    std::string name;
    ClientMode mode = ClientMode::Stepped;
    std::vector<std::string> subs;
    std::uint64_t last_seq = 0;
    bool registered = false;
  };

  void handle(ConnId conn, const BusMessage& msg, std::string_view raw);
  void handle_register(ConnId conn, const BusMessage& msg);
  void handle_publish(ConnId conn, Session& s, const BusMessage& msg);
  void handle_step_done(Session& s, const BusMessage& msg);
  void leave(ConnId conn, const std::string& why);
  void reject(ConnId conn, const std::string& client, const std::string& reason);
  void start_if_ready();
  void try_advance();
  void finish();
  void send(ConnId conn, const BusMessage& msg);
  void record(std::string kind, ConnId conn, std::string client, std::optional<std::uint64_t> step,
              std::string detail, std::vector<std::string> pending = {});

  Manifest manifest_;
  SendFn send_;
  ClockFn clock_;
  EventLog log_;
  SyncState sync_;
  std::map<ConnId, Session> sessions_;
  bool begun_ = false;
  bool started_ = false;
  bool finished_ = false;
  bool aborted_ = false;
  std::string abort_reason_;
  double start_clock_ = 0.0;
  std::optional<double> deadline_;
  std::uint64_t broker_seq_ = 0;
  std::uint64_t sync_seq_ = 0;
};

}  // namespace woc::bus
