// SPDX-License-Identifier: Apache-2.0
#include "cocyclab/errors.hpp"

namespace cocyclab {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::NonUniqueStationary: return "NonUniqueStationary";
    case Errc::StateSpaceTooLarge: return "StateSpaceTooLarge";
    case Errc::MissingEdge: return "MissingEdge";
    case Errc::SingularPerturbation: return "SingularPerturbation";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::DegeneratePair: return "DegeneratePair";
    case Errc::NoContractionWithinHorizon: return "NoContractionWithinHorizon";
    case Errc::GapUnresolved: return "GapUnresolved";
    case Errc::SlowConvergence: return "SlowConvergence";
    case Errc::GapLost: return "GapLost";
    case Errc::VarianceBlowup: return "VarianceBlowup";
    case Errc::CurveInvalid: return "CurveInvalid";
    case Errc::InsufficientDecayData: return "InsufficientDecayData";
    case Errc::TrajectoryTooShort: return "TrajectoryTooShort";
    case Errc::Parse: return "Parse";
  }
  return "Unknown";
}

}  // namespace cocyclab
