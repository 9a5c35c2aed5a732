// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cocyclab {

/// Failure categories raised by the library. Each numeric routine throws
/// `Error` carrying one of these so callers can branch on the cause.
enum class Errc {
  InvalidArgument,
  NonUniqueStationary,
  StateSpaceTooLarge,
  MissingEdge,
  SingularPerturbation,
  ShapeMismatch,
  DegeneratePair,
  NoContractionWithinHorizon,
  GapUnresolved,
  SlowConvergence,
  GapLost,
  VarianceBlowup,
  CurveInvalid,
  InsufficientDecayData,
  TrajectoryTooShort,
  Parse,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace cocyclab
