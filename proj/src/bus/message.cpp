#include "woc/bus/message.hpp"

#include <fmt/format.h>

namespace woc::bus {

std::string_view to_string(MsgType type) {
  switch (type) {
    case MsgType::Register: return "REGISTER";
    case MsgType::RegisterAck: return "REGISTER_ACK";
    case MsgType::Subscribe: return "SUBSCRIBE";
    case MsgType::Publish: return "PUBLISH";
    case MsgType::Step: return "STEP";
    case MsgType::StepDone: return "STEP_DONE";
    case MsgType::Shutdown: return "SHUTDOWN";
    case MsgType::Error: return "ERROR";
  }
  return "ERROR";
}

std::optional<MsgType> msg_type_from_string(std::string_view text) {
  for (auto t : {MsgType::Register, MsgType::RegisterAck, MsgType::Subscribe, MsgType::Publish,
                 MsgType::Step, MsgType::StepDone, MsgType::Shutdown, MsgType::Error}) {
    if (to_string(t) == text) return t;
  }
  return std::nullopt;
}

std::string_view to_string(ClientMode mode) {
  return mode == ClientMode::Stepped ? "stepped" : "free-running";
}

std::optional<ClientMode> client_mode_from_string(std::string_view text) {
  if (text == "stepped") return ClientMode::Stepped;
  if (text == "free-running") return ClientMode::FreeRunning;
  return std::nullopt;
}

BusMessage BusMessage::publish(std::string from, std::uint64_t seq, std::string topic, std::uint64_t step, Json val) {
  BusMessage m;
  m.type = MsgType::Publish;
  m.from = std::move(from);
  m.seq = seq;
  m.topic = std::move(topic);
  m.step = step;
  m.val = std::move(val);
  return m;
}

BusMessage BusMessage::step_msg(MsgType type, std::string from, std::uint64_t seq, std::uint64_t step) {
  BusMessage m;
  m.type = type;
  m.from = std::move(from);
  m.seq = seq;
  m.step = step;
  return m;
}

BusMessage BusMessage::plain(MsgType type, std::string from, std::uint64_t seq) {
  BusMessage m;
  m.type = type;
  m.from = std::move(from);
  m.seq = seq;
  return m;
}

std::string encode(const BusMessage& msg) {
  Json j;
  j["t"] = to_string(msg.type);
  j["from"] = msg.from;
  j["seq"] = msg.seq;
  switch (msg.type) {
    case MsgType::Register:
      j["mode"] = to_string(msg.mode.value_or(ClientMode::Stepped));
      j["subs"] = msg.subs;
      break;
    case MsgType::Subscribe:
      j["subs"] = msg.subs;
      break;
    case MsgType::RegisterAck:
      j["steps"] = msg.steps.value_or(0);
      j["step_seconds"] = msg.step_seconds.value_or(0.0);
      break;
    case MsgType::Publish:
      j["topic"] = msg.topic;
      j["step"] = msg.step.value_or(0);
      j["val"] = msg.val;
      break;
    case MsgType::Step:
    case MsgType::StepDone:
      j["step"] = msg.step.value_or(0);
      break;
    case MsgType::Error:
      j["msg"] = msg.error;
      break;
    case MsgType::Shutdown:
      break;
  }
  return j.dump();
}

namespace {

std::uint64_t require_u64(const Json& j, const char* key, std::string_view type) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number_unsigned()) {
    if (it != j.end() && it->is_number_integer() && it->get<std::int64_t>() >= 0) {
      return static_cast<std::uint64_t>(it->get<std::int64_t>());
    }
    throw ProtocolError(fmt::format("{} requires unsigned integer field '{}'", type, key));
  }
  return it->get<std::uint64_t>();
}

std::string require_string(const Json& j, const char* key, std::string_view type) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw ProtocolError(fmt::format("{} requires string field '{}'", type, key));
  }
  return it->get<std::string>();
}

std::vector<std::string> string_list(const Json& j, const char* key) {
  std::vector<std::string> out;
  auto it = j.find(key);
  if (it == j.end()) return out;
  if (!it->is_array()) throw ProtocolError(fmt::format("field '{}' must be an array", key));
  for (const auto& e : *it) {
    if (!e.is_string()) throw ProtocolError(fmt::format("field '{}' must hold strings", key));
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace

BusMessage decode(std::string_view line) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
  Json j;
  try {
    j = Json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(fmt::format("malformed JSON: {}", e.what()));
  }
  if (!j.is_object()) {
    throw ProtocolError("message must be a JSON object");
  }
  BusMessage m;
  const auto t = require_string(j, "t", "message");
  auto type = msg_type_from_string(t);
  if (!type) throw ProtocolError(fmt::format("unknown message type '{}'", t));
  m.type = *type;
  m.from = require_string(j, "from", t);
  if (m.type == MsgType::Register && !j.contains("seq")) {
    m.seq = 0;
  } else {
    m.seq = require_u64(j, "seq", t);
  }
  switch (m.type) {
    case MsgType::Register: {
      auto mode_text = j.value("mode", std::string("stepped"));
      m.mode = client_mode_from_string(mode_text);
      if (!m.mode) throw ProtocolError(fmt::format("unknown client mode '{}'", mode_text));
      m.subs = string_list(j, "subs");
      break;
    }
    case MsgType::Subscribe:
      m.subs = string_list(j, "subs");
      break;
    case MsgType::RegisterAck:
      m.steps = require_u64(j, "steps", t);
      if (auto it = j.find("step_seconds"); it != j.end() && it->is_number()) m.step_seconds = it->get<double>();
      break;
    case MsgType::Publish:
      m.topic = require_string(j, "topic", t);
      m.step = require_u64(j, "step", t);
      if (auto it = j.find("val"); it != j.end()) {
        if (!it->is_number() && !it->is_object()) {
          throw ProtocolError("PUBLISH 'val' must be a number or an object");
        }
        m.val = *it;
      } else {
        throw ProtocolError("PUBLISH requires field 'val'");
      }
      break;
    case MsgType::Step:
    case MsgType::StepDone:
      m.step = require_u64(j, "step", t);
      break;
    case MsgType::Error:
      m.error = j.value("msg", std::string());
      break;
    case MsgType::Shutdown:
      break;
  }
  return m;
}

}  // namespace woc::bus
