#pragma once

// Shared vocabulary: dense matrix aliases, tolerance policy, error type.

#include <Eigen/Dense>

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mobius {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;
using ColVector = Eigen::VectorXd;
using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

// Largest state space for which dense M x M storage is offered.
inline constexpr std::size_t kMaxDenseStates = std::size_t{1} << 14;

enum class Direction { down, up };

inline const char* to_string(Direction d) { return d == Direction::down ? "down" : "up"; }

/// Numerical tolerance policy. `row` is used when validating stochastic
/// rows and probability vectors, `identity` for derived algebraic identities
/// (duality residuals, inversion round trips), `mono` for sign decisions.
struct Tolerances {
  double row = 1e-12;
  double identity = 1e-10;
  double mono = 1e-10;
};

enum class ErrorKind {
  CycleError,
  DuplicateLabel,
  UnknownState,
  DimensionMismatch,
  DimensionTooLarge,
  NotStochastic,
  NotIrreducible,
  NotAperiodic,
  UpSetExplosion,
  LPFailure,
  PreconditionFailed,
  NoUniqueExtremalState,
  NotTotalOrder,
  SingularFundamentalMatrix,
  HorizonTooLarge,
  NegativeHoldingProbability,
  NotLattice,
  IncomparableRequired,
  InsufficientMass,
  MissingSubsetValue,
  ZeroGenerator,
  InvalidArgument,
  NumericalFailure,
  SchemaError,
  IOError,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::CycleError: return "CycleError";
    case ErrorKind::DuplicateLabel: return "DuplicateLabel";
    case ErrorKind::UnknownState: return "UnknownState";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorKind::NotStochastic: return "NotStochastic";
    case ErrorKind::NotIrreducible: return "NotIrreducible";
    case ErrorKind::NotAperiodic: return "NotAperiodic";
    case ErrorKind::UpSetExplosion: return "UpSetExplosion";
    case ErrorKind::LPFailure: return "LPFailure";
    case ErrorKind::PreconditionFailed: return "PreconditionFailed";
    case ErrorKind::NoUniqueExtremalState: return "NoUniqueExtremalState";
    case ErrorKind::NotTotalOrder: return "NotTotalOrder";
    case ErrorKind::SingularFundamentalMatrix: return "SingularFundamentalMatrix";
    case ErrorKind::HorizonTooLarge: return "HorizonTooLarge";
    case ErrorKind::NegativeHoldingProbability: return "NegativeHoldingProbability";
    case ErrorKind::NotLattice: return "NotLattice";
    case ErrorKind::IncomparableRequired: return "IncomparableRequired";
    case ErrorKind::InsufficientMass: return "InsufficientMass";
    case ErrorKind::MissingSubsetValue: return "MissingSubsetValue";
    case ErrorKind::ZeroGenerator: return "ZeroGenerator";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::IOError: return "IOError";
  }
  return "Unknown";
}

/// Process exit status associated with an error: 1 for bad input,
/// 2 for a violated mathematical precondition, 3 for numerical trouble.
inline int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::NotIrreducible:
    case ErrorKind::NotAperiodic:
    case ErrorKind::PreconditionFailed:
    case ErrorKind::NoUniqueExtremalState:
    case ErrorKind::NotTotalOrder:
      return 2;
    case ErrorKind::UpSetExplosion:
    case ErrorKind::LPFailure:
    case ErrorKind::SingularFundamentalMatrix:
    case ErrorKind::NumericalFailure:
      return 3;
    default:
      return 1;
  }
}

class Error : public std::runtime_error {
 public:
  using Details = std::vector<std::pair<std::string, std::string>>;

  Error(ErrorKind kind, const std::string& message, Details details = {})
      : std::runtime_error(message), kind_(kind), details_(std::move(details)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const Details& details() const noexcept { return details_; }

 private:
  ErrorKind kind_;
  Details details_;
};

/// Shortest decimal form that round-trips a double (17 significant digits).
inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void require_size(std::size_t got, std::size_t want, std::string_view what) {
  if (got != want) {
    throw Error(ErrorKind::DimensionMismatch,
                std::string(what) + ": expected size " + std::to_string(want) + ", got " +
                    std::to_string(got));
  }
}

}  // namespace mobius
