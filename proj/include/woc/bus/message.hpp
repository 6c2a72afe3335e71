#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace woc::bus {

using Json = nlohmann::ordered_json;

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class MsgType { Register, RegisterAck, Subscribe, Publish, Step, StepDone, Shutdown, Error };
enum class ClientMode { Stepped, FreeRunning };

std::string_view to_string(MsgType type);
std::optional<MsgType> msg_type_from_string(std::string_view text);
std::string_view to_string(ClientMode mode);
std::optional<ClientMode> client_mode_from_string(std::string_view text);

/// Wire envelope. One JSON object per `\n`-terminated line:
///   t     message type            (all)
///   from  sender name             (all)
///   seq   per-sender counter      (all; REGISTER may omit it -> 0)
///   topic, step, val              PUBLISH
///   step                          STEP, STEP_DONE
///   mode, subs                    REGISTER
///   subs                          SUBSCRIBE
///   steps, step_seconds           REGISTER_ACK
///   msg                           ERROR
/// Unknown fields are ignored.
struct BusMessage {
  MsgType type = MsgType::Publish;
  std::string from;
  std::uint64_t seq = 0;
  std::string topic;
  std::optional<std::uint64_t> step;
  Json val;
  std::optional<ClientMode> mode;
  std::vector<std::string> subs;
  std::optional<std::uint64_t> steps;
  std::optional<double> step_seconds;
  std::string error;

  static BusMessage publish(std::string from, std::uint64_t seq, std::string topic, std::uint64_t step, Json val);
  static BusMessage step_msg(MsgType type, std::string from, std::uint64_t seq, std::uint64_t step);
  static BusMessage plain(MsgType type, std::string from, std::uint64_t seq);
};

/// Serialises without the trailing newline.
std::string encode(const BusMessage& msg);

/// Parses one line (a trailing "\r" or "\n" is tolerated).
BusMessage decode(std::string_view line);

}  // namespace woc::bus
