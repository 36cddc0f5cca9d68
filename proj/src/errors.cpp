#include "ddf/errors.hpp"

namespace ddf {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::invalid_cutoff: return "InvalidCutoff";
    case Errc::even_tap_count: return "EvenTapCount";
    case Errc::upsample_requested: return "UpsampleRequested";
    case Errc::irrational_ratio: return "IrrationalRatio";
    case Errc::invalid_params: return "InvalidParams";
    case Errc::factor_too_small: return "FactorTooSmall";
    case Errc::invalid_spec: return "InvalidSpec";
    case Errc::zero_signal_energy: return "ZeroSignalEnergy";
    case Errc::zero_noise_energy: return "ZeroNoiseEnergy";
    case Errc::signal_too_short: return "SignalTooShort";
    case Errc::segment_too_long: return "SegmentTooLong";
    case Errc::degenerate_length: return "DegenerateLength";
    case Errc::missing_class: return "MissingClass";
    case Errc::non_finite_features: return "NonFiniteFeatures";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::too_few_segments: return "TooFewSegments";
    case Errc::empty_labeled_pool: return "EmptyLabeledPool";
    case Errc::io_failure: return "IoFailure";
    case Errc::diverged_loss: return "DivergedLoss";
  }
  return "UnknownError";
}

}  // namespace ddf
