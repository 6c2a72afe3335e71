#pragma once

#include <string_view>

namespace woc::bus {

/// Concrete topic: non-empty '/'-separated levels, no wildcards.
bool valid_topic(std::string_view topic);

/// Pattern: like a topic, but a level may be `+` (exactly one level) and
/// the last level may be `#` (zero or more remaining levels).
bool valid_pattern(std::string_view pattern);

bool topic_matches(std::string_view pattern, std::string_view topic);

}  // namespace woc::bus
