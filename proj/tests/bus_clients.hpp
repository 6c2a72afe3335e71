#pragma once

#include <chrono>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "woc/bus/client.hpp"

namespace testing {

// Stepped client: optionally sleeps, publishes `signal/<name>/tick` and acks.
class Ticker : public woc::bus::Client {
 public:
  explicit Ticker(std::string name, int delay_ms = 0, int publishes_per_step = 1)
      : name_(std::move(name)), delay_ms_(delay_ms), per_step_(publishes_per_step) {}

  std::string name() const override { return name_; }
  woc::bus::ClientMode mode() const override { return woc::bus::ClientMode::Stepped; }
  std::vector<std::string> subscriptions() const override { return subs_; }
  void on_step(std::uint64_t step, woc::bus::Outbox& out) override {
    steps.push_back(step);
    if (delay_ms_ > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms_));
    for (int i = 0; i < per_step_; ++i) out.publish("signal/" + name_ + "/tick", step, static_cast<double>(i));
    out.step_done(step);
  }
  void on_shutdown() override { shutdown = true; }

  std::vector<std::string> subs_;
  std::vector<std::uint64_t> steps;
  bool shutdown = false;

 private:
  std::string name_;
  int delay_ms_;
  int per_step_;
};

// Free-running client recording every delivery.
class Listener : public woc::bus::Client {
 public:
  explicit Listener(std::string name = "listener", std::vector<std::string> subs = {"signal/#"})
      : name_(std::move(name)), subs_(std::move(subs)) {}

  std::string name() const override { return name_; }
  woc::bus::ClientMode mode() const override { return woc::bus::ClientMode::FreeRunning; }
  std::vector<std::string> subscriptions() const override { return subs_; }
  void on_publish(const woc::bus::BusMessage& msg, woc::bus::Outbox&) override {
    seqs[msg.from].push_back(msg.seq);
    topics.push_back(msg.topic);
  }
  void on_shutdown() override { shutdown = true; }

  std::map<std::string, std::vector<std::uint64_t>> seqs;
  std::vector<std::string> topics;
  bool shutdown = false;

 private:
  std::string name_;
  std::vector<std::string> subs_;
};

}  // namespace testing
