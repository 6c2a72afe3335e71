#include "woc/clients/profile.hpp"

#include <cmath>

#include <fmt/format.h>

#include "woc/util/text.hpp"

namespace woc::clients {

double Profile::at(std::uint64_t step) const {
  if (step < 1 || step > values.size()) {
    throw ProfileError(fmt::format("profile has no value for step {} (length {})", step, values.size()));
  }
  return values[step - 1];
}

Profile Profile::constant(double value, std::size_t steps, double step_seconds) {
  return Profile{std::vector<double>(steps, value), step_seconds};
}

Profile parse_profile(const std::string& text, const std::string& source) {
  Profile p;
  bool header = false;
  std::size_t lineno = 0;
  for (auto raw : util::split(text, '\n')) {
    ++lineno;
    auto line = util::trim(raw);
    if (line.empty()) continue;
    auto fail = [&](const std::string& what) {
      return ProfileError(fmt::format("{}:{}: {}", source, lineno, what));
    };
    if (line.front() == '#') {
      auto body = util::trim(line.substr(1));
      constexpr std::string_view key = "step_seconds=";
      if (body.substr(0, key.size()) == key) {
        if (!util::parse_double(util::trim(body.substr(key.size())), p.step_seconds) || !(p.step_seconds > 0)) {
          throw fail("step_seconds must be a positive number");
        }
      }
      continue;
    }
    auto fields = util::split(line, ',');
    if (!header) {
      if (fields.size() != 2 || util::trim(fields[0]) != "step" || util::trim(fields[1]) != "value") {
        throw fail("expected header 'step,value'");
      }
      header = true;
      continue;
    }
    if (fields.size() != 2) throw fail("expected 2 fields");
    std::uint64_t step = 0;
    double value = 0.0;
    if (!util::parse_u64(util::trim(fields[0]), step)) throw fail("step is not an integer");
    if (!util::parse_double(util::trim(fields[1]), value) || !std::isfinite(value)) throw fail("value is not finite");
    if (step != p.values.size() + 1) throw fail(fmt::format("expected step {}, found {}", p.values.size() + 1, step));
    p.values.push_back(value);
  }
  if (!header) throw ProfileError(fmt::format("{}: missing header", source));
  if (p.values.empty()) throw ProfileError(fmt::format("{}: no data rows", source));
  return p;
}

Profile load_profile(const std::string& path) {
  std::string text;
  try {
    text = util::read_file(path);
  } catch (const std::exception& e) {
    throw ProfileError(e.what());
  }
  return parse_profile(text, path);
}

std::string serialize_profile(const Profile& p) {
  std::string out = fmt::format("# step_seconds={}\nstep,value\n", util::format_double(p.step_seconds));
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    out += fmt::format("{},{}\n", i + 1, util::format_double(p.values[i]));
  }
  return out;
}

}  // namespace woc::clients
