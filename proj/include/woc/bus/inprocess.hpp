#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "woc/bus/broker.hpp"
#include "woc/bus/client.hpp"

namespace woc::bus {

// Broker-side input events in the order the event loop applied them.
struct TranscriptEvent {
  enum class Kind { Begin, Open, Line, Close, Tick, Abort };
  Kind kind = Kind::Line;
  ConnId conn = 0;
  double clock = 0.0;
  std::string text;
};

using Transcript = std::vector<TranscriptEvent>;

std::string transcript_text(const Transcript& t);
Transcript parse_transcript(const std::string& text);

void apply_event(Broker& broker, const TranscriptEvent& ev);

// Re-applies a transcript to a fresh broker; outgoing lines are dropped.
EventLog replay_transcript(const Manifest& manifest, const Transcript& transcript);

struct HubOptions {
  // Fast mode: logical clock advancing 1 ms per delivered event.
  // Paced mode: steady clock with sleeps until the next deadline.
  bool logical_clock = true;
  // Randomized interleaving of per-connection channels (per-channel order kept).
  std::optional<std::uint64_t> shuffle_seed;
  std::uint64_t max_events = 0;  // 0: unlimited
};

struct HubOutcome {
  bool finished = false;
  bool aborted = false;
  std::string reason;
  std::uint64_t events = 0;
};

// Single-threaded transport: every line travels through one FIFO.
class InProcessHub {
 public:
  explicit InProcessHub(Manifest manifest, HubOptions options = {});
  ~InProcessHub();

  ConnId attach(Client& client);
  HubOutcome run();
  void abort(const std::string& reason);

  const Broker& broker() const noexcept { return *broker_; }
  const Transcript& transcript() const noexcept { return transcript_; }
  double now() const;
  const std::vector<std::string>& client_errors(ConnId conn) const;

 private:
  struct Item {
    bool to_broker = true;
    ConnId conn = 0;
    std::string line;
  };

  void apply(TranscriptEvent ev);
  Item pop();

  Manifest manifest_;
  HubOptions options_;
  std::unique_ptr<Broker> broker_;
  std::vector<std::unique_ptr<ClientSession>> sessions_;
  std::deque<Item> queue_;
  Transcript transcript_;
  std::uint64_t ticks_ = 0;
  std::uint64_t logical_ms_ = 0;
  double epoch_ = 0.0;
  std::uint64_t rng_state_ = 0;
};

}  // namespace woc::bus
