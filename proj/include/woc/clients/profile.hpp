#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace woc::clients {

class ProfileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Step-indexed series; steps run 1..size().
struct Profile {
  std::vector<double> values;
  double step_seconds = 60.0;

  std::size_t size() const noexcept { return values.size(); }
  double at(std::uint64_t step) const;
  static Profile constant(double value, std::size_t steps, double step_seconds = 60.0);
};

// Header `step,value`, optional `# step_seconds=<s>` comment, steps 1..N in order.
Profile parse_profile(const std::string& text, const std::string& source = "<profile>");
Profile load_profile(const std::string& path);
std::string serialize_profile(const Profile& p);

}  // namespace woc::clients
