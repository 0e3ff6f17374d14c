#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace circstab {

enum class ErrorCode {
  BadSetup,
  OutOfDomain,
  DistributionalPoint,
  Unbounded,
  NotRegularValue,
  TangencySuspected,
  SingularCoefficient,
  InterfaceZero,
  IntegratorFailure,
  InsufficientTrace,
  BadParams,
  StableBranchMissing,
  NoComplexPair,
  NoSolution,
  BoundaryRootSuspected,
  NonConvergence,
  IdentityDrift,
  HypothesisViolated,
  ZeroPrediction,
  NewtonDiverged,
  LeftHalfPlane,
  ConfigInvalid,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadSetup: return "BadSetup";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::DistributionalPoint: return "DistributionalPoint";
    case ErrorCode::Unbounded: return "Unbounded";
    case ErrorCode::NotRegularValue: return "NotRegularValue";
    case ErrorCode::TangencySuspected: return "TangencySuspected";
    case ErrorCode::SingularCoefficient: return "SingularCoefficient";
    case ErrorCode::InterfaceZero: return "InterfaceZero";
    case ErrorCode::IntegratorFailure: return "IntegratorFailure";
    case ErrorCode::InsufficientTrace: return "InsufficientTrace";
    case ErrorCode::BadParams: return "BadParams";
    case ErrorCode::StableBranchMissing: return "StableBranchMissing";
    case ErrorCode::NoComplexPair: return "NoComplexPair";
    case ErrorCode::NoSolution: return "NoSolution";
    case ErrorCode::BoundaryRootSuspected: return "BoundaryRootSuspected";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::IdentityDrift: return "IdentityDrift";
    case ErrorCode::HypothesisViolated: return "HypothesisViolated";
    case ErrorCode::ZeroPrediction: return "ZeroPrediction";
    case ErrorCode::NewtonDiverged: return "NewtonDiverged";
    case ErrorCode::LeftHalfPlane: return "LeftHalfPlane";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

/// Every failure in the library is reported through this type; the code
/// identifies the contract that was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace circstab
