#include "woc/bus/topic.hpp"

#include "woc/util/text.hpp"

namespace woc::bus {

bool valid_topic(std::string_view topic) {
  if (topic.empty()) return false;
  for (auto level : util::split(topic, '/')) {
    if (level.empty() || level.find_first_of("+#") != std::string_view::npos) return false;
  }
  return true;
}

bool valid_pattern(std::string_view pattern) {
  if (pattern.empty()) return false;
  auto levels = util::split(pattern, '/');
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto level = levels[i];
    if (level.empty()) return false;
    if (level == "#") {
      if (i + 1 != levels.size()) return false;
      continue;
    }
    if (level == "+") continue;
    if (level.find_first_of("+#") != std::string_view::npos) return false;
  }
  return true;
}

bool topic_matches(std::string_view pattern, std::string_view topic) {
  const auto p = util::split(pattern, '/');
  const auto t = util::split(topic, '/');
  std::size_t i = 0;
  for (; i < p.size(); ++i) {
    if (p[i] == "#") return true;
    if (i >= t.size()) return false;
    if (p[i] != "+" && p[i] != t[i]) return false;
  }
  return i == t.size();
}

}  // namespace woc::bus
