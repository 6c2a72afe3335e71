#include "woc/bus/client.hpp"

namespace woc::bus {

Outbox::Outbox(std::string name, ClockFn clock) : name_(std::move(name)), clock_(std::move(clock)) {}

BusMessage Outbox::stamp(MsgType type) { return BusMessage::plain(type, name_, ++seq_); }

void Outbox::register_client(ClientMode mode, std::vector<std::string> subs) {
  BusMessage m = stamp(MsgType::Register);
  m.mode = mode;
  m.subs = std::move(subs);
  queue_.push_back(std::move(m));
}

void Outbox::subscribe(std::vector<std::string> patterns) {
  BusMessage m = stamp(MsgType::Subscribe);
  m.subs = std::move(patterns);
  queue_.push_back(std::move(m));
}

void Outbox::publish(std::string topic, std::uint64_t step, Json val) {
  queue_.push_back(BusMessage::publish(name_, ++seq_, std::move(topic), step, std::move(val)));
}

void Outbox::step_done(std::uint64_t step) {
  queue_.push_back(BusMessage::step_msg(MsgType::StepDone, name_, ++seq_, step));
}

void Outbox::shutdown() { queue_.push_back(stamp(MsgType::Shutdown)); }

void Outbox::error(std::string what) {
  BusMessage m = stamp(MsgType::Error);
  m.error = std::move(what);
  queue_.push_back(std::move(m));
}

std::vector<BusMessage> Outbox::take() {
  std::vector<BusMessage> out(std::make_move_iterator(queue_.begin()), std::make_move_iterator(queue_.end()));
  queue_.clear();
  return out;
}

ClientSession::ClientSession(Client& client, Outbox::ClockFn clock)
    : client_(client), out_(client.name(), std::move(clock)) {}

std::vector<std::string> ClientSession::flush() {
  std::vector<std::string> lines;
  for (const auto& m : out_.take()) lines.push_back(encode(m));
  return lines;
}

std::vector<std::string> ClientSession::start() {
  out_.register_client(client_.mode(), client_.subscriptions());
  return flush();
}

std::vector<std::string> ClientSession::deliver(std::string_view line) {
  if (closed_) return {};
  BusMessage msg;
  try {
    msg = decode(line);
  } catch (const ProtocolError& e) {
    errors_.emplace_back(e.what());
    client_.on_error(e.what());
    return {};
  }
  switch (msg.type) {
    case MsgType::RegisterAck:
      registered_ = true;
      client_.on_registered(msg, out_);
      break;
    case MsgType::Step:
      if (msg.step) client_.on_step(*msg.step, out_);
      break;
    case MsgType::Publish:
      client_.on_publish(msg, out_);
      break;
    case MsgType::Shutdown:
      closed_ = true;
      client_.on_shutdown();
      return {};
    case MsgType::Error:
      errors_.push_back(msg.error);
      client_.on_error(msg.error);
      break;
    default:
      break;
  }
  return flush();
}

}  // namespace woc::bus
