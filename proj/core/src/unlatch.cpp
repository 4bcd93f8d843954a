#include "doorkin/unlatch.hpp"

#include <string>

#include "doorkin/error.hpp"

namespace doorkin {

std::string_view to_string(MechanismKind k) {
  switch (k) {
    case MechanismKind::kLeverCcw: return "lever_ccw";
    case MechanismKind::kLeverCw: return "lever_cw";
    case MechanismKind::kKnobEither: return "knob_either";
    case MechanismKind::kFixed: return "fixed";
  }
  return "?";
}

std::string_view to_string(TurnDirection d) { return d == TurnDirection::kCcw ? "ccw" : "cw"; }

std::string_view to_string(UnlatchState s) {
  switch (s) {
    case UnlatchState::kUnlatchedCcw: return "unlatched_ccw";
    case UnlatchState::kUnlatchedCw: return "unlatched_cw";
    case UnlatchState::kNoActuationRequired: return "no_actuation_required";
  }
  return "?";
}

MechanismKind parse_mechanism_kind(std::string_view s) {
  for (auto k : {MechanismKind::kLeverCcw, MechanismKind::kLeverCw, MechanismKind::kKnobEither, MechanismKind::kFixed}) {
    if (to_string(k) == s) return k;
  }
  throw Error(ErrorCode::kParse, "unknown mechanism '" + std::string(s) + "'");
}

void HandleMechanism::validate() const {
  if (!(resist_torque > 0.0) || !(block_torque > resist_torque)) {
    throw Error(ErrorCode::kInvalidArgument, "mechanism needs block_torque > resist_torque > 0");
  }
  if (!(required_angle > 0.0)) throw Error(ErrorCode::kInvalidArgument, "required_angle must be > 0");
}

bool HandleMechanism::free_in(TurnDirection d) const {
  switch (kind) {
    case MechanismKind::kLeverCcw: return d == TurnDirection::kCcw;
    case MechanismKind::kLeverCw: return d == TurnDirection::kCw;
    case MechanismKind::kKnobEither: return true;
    case MechanismKind::kFixed: return false;
  }
  return false;
}

TurnResult attempt_turn(const HandleMechanism& mech, TurnDirection direction, double threshold) {
  mech.validate();
  if (!(threshold > 0.0)) throw Error(ErrorCode::kInvalidArgument, "torque threshold must be > 0");
  const double torque = mech.free_in(direction) ? mech.resist_torque : mech.block_torque;
  return {torque <= threshold, torque};
}

UnlatchOutcome unlatch(const HandleMechanism& mech, double threshold) {
  UnlatchOutcome out;
  const TurnResult ccw = attempt_turn(mech, TurnDirection::kCcw, threshold);
  out.attempts.emplace_back(TurnDirection::kCcw, ccw.peak_torque);
  if (ccw.succeeded) {
    out.state = UnlatchState::kUnlatchedCcw;
    return out;
  }
  const TurnResult cw = attempt_turn(mech, TurnDirection::kCw, threshold);
  out.attempts.emplace_back(TurnDirection::kCw, cw.peak_torque);
  out.state = cw.succeeded ? UnlatchState::kUnlatchedCw : UnlatchState::kNoActuationRequired;
  return out;
}

}  // namespace doorkin
