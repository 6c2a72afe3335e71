#pragma once

#include <string>
#include <string_view>

#include "woc/grid/network.hpp"

namespace woc::grid {

/// Reads the sectioned network format. Syntax problems raise
/// util::ParseError (with line/column); invariant violations raise
/// NetworkError.
Network parse_network(const std::string& path);
Network parse_network_text(std::string_view text, std::string source = "<input>");

/// Canonical form: records sorted by id, numbers in shortest round-trip
/// notation. parse(serialize(n)) reproduces n up to record order.
std::string serialize_network(const Network& net);

}  // namespace woc::grid
