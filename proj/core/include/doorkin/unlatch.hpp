#pragma once

#include <string_view>
#include <utility>
#include <vector>

namespace doorkin {

enum class MechanismKind { kLeverCcw, kLeverCw, kKnobEither, kFixed };
enum class TurnDirection { kCcw, kCw };
enum class UnlatchState { kUnlatchedCcw, kUnlatchedCw, kNoActuationRequired };

std::string_view to_string(MechanismKind k);
std::string_view to_string(TurnDirection d);
std::string_view to_string(UnlatchState s);
MechanismKind parse_mechanism_kind(std::string_view s);

/// Simulated handle. Torque is constant per direction: resist_torque the free
/// way, block_torque the blocked way. lever_ccw turns only ccw, lever_cw only
/// cw, knob_either both ways, fixed neither.
struct HandleMechanism {
  MechanismKind kind = MechanismKind::kLeverCcw;
  double required_angle = 0.5;  // rad
  double resist_torque = 0.5;   // N m
  double block_torque = 5.0;    // N m

  /// Throws Error(kInvalidArgument) unless block > resist > 0 and required_angle > 0.
  void validate() const;
  bool free_in(TurnDirection d) const;
};

inline constexpr double kDefaultTorqueThreshold = 2.0;  // N m

struct TurnResult {
  bool succeeded = false;
  double peak_torque = 0.0;
};

/// Throws Error(kInvalidArgument) unless threshold > 0.
TurnResult attempt_turn(const HandleMechanism& mech, TurnDirection direction, double threshold);

struct UnlatchOutcome {
  UnlatchState state = UnlatchState::kNoActuationRequired;
  std::vector<std::pair<TurnDirection, double>> attempts;
};

/// ccw first, then cw; if both abort the handle needs no actuation.
UnlatchOutcome unlatch(const HandleMechanism& mech, double threshold = kDefaultTorqueThreshold);

}  // namespace doorkin
