#pragma once

#include <stdexcept>
#include <string>

namespace aoi {

/// Transmission decision taken at the start of a slot.
/// kSkip (0): drop the new arrival, keep transmitting (or stay idle).
/// kSwitch (1): drop the unfinished update and start the new arrival.
enum class Action : int {
  kSkip = 0,
  kSwitch = 1,
};

inline int to_int(Action w) { return static_cast<int>(w); }

inline Action action_from_int(int v) {
  if (v != 0 && v != 1) throw std::invalid_argument("action must be 0 or 1");
  return v == 0 ? Action::kSkip : Action::kSwitch;
}

/// Thrown when a policy table that should be threshold-form in the arrival
/// slot turns out not to be (a switch above a skip with the same service
/// start slot).
class StructureViolation : public std::runtime_error {
 public:
  explicit StructureViolation(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace aoi
