#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "woc/bus/message.hpp"

namespace woc::bus {

// Outgoing queue of one session; stamps sender and seq (first message is 1).
class Outbox {
 public:
  using ClockFn = std::function<double()>;

  explicit Outbox(std::string name, ClockFn clock = {});

  const std::string& name() const noexcept { return name_; }
  // Transport clock in seconds (0 without one).
  double now() const { return clock_ ? clock_() : 0.0; }

  void register_client(ClientMode mode, std::vector<std::string> subs);
  void subscribe(std::vector<std::string> patterns);
  void publish(std::string topic, std::uint64_t step, Json val);
  void step_done(std::uint64_t step);
  void shutdown();
  void error(std::string what);

  std::vector<BusMessage> take();
  bool empty() const noexcept { return queue_.empty(); }
  std::uint64_t last_seq() const noexcept { return seq_; }

 private:
  BusMessage stamp(MsgType type);

  std::string name_;
  ClockFn clock_;
  std::uint64_t seq_ = 0;
  std::deque<BusMessage> queue_;
};

class Client {
 public:
  virtual ~Client() = default;

  virtual std::string name() const = 0;
  virtual ClientMode mode() const = 0;
  virtual std::vector<std::string> subscriptions() const = 0;

  virtual void on_registered(const BusMessage&, Outbox&) {}
  // Stepped clients acknowledge with out.step_done(step), possibly later.
  virtual void on_step(std::uint64_t, Outbox&) {}
  virtual void on_publish(const BusMessage&, Outbox&) {}
  virtual void on_shutdown() {}
  virtual void on_error(const std::string&) {}
};

// Transport-independent client side: lines in, lines out.
class ClientSession {
 public:
  ClientSession(Client& client, Outbox::ClockFn clock = {});

  // REGISTER line.
  std::vector<std::string> start();
  std::vector<std::string> deliver(std::string_view line);

  bool closed() const noexcept { return closed_; }
  bool registered() const noexcept { return registered_; }
  const std::vector<std::string>& errors() const noexcept { return errors_; }
  Client& client() noexcept { return client_; }

 private:
  std::vector<std::string> flush();

  Client& client_;
  Outbox out_;
  bool registered_ = false;
  bool closed_ = false;
  std::vector<std::string> errors_;
};

}  // namespace woc::bus
