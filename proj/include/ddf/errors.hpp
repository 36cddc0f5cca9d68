#pragma once

#include <stdexcept>
#include <string>

namespace ddf {

// Error codes for everything the library can reject. Grouped by the CLI
// exit-code contract: config -> 1, data -> 2, numeric -> 3.
enum class Errc {
  // configuration
  invalid_cutoff,
  even_tap_count,
  upsample_requested,
  irrational_ratio,
  invalid_params,
  factor_too_small,
  invalid_spec,
  // data
  zero_signal_energy,
  zero_noise_energy,
  signal_too_short,
  segment_too_long,
  degenerate_length,
  missing_class,
  non_finite_features,
  shape_mismatch,
  length_mismatch,
  too_few_segments,
  empty_labeled_pool,
  io_failure,
  // numeric
  diverged_loss,
};

enum class ErrorClass : int { config = 1, data = 2, numeric = 3 };

constexpr ErrorClass classify(Errc code) {
  switch (code) {
    case Errc::invalid_cutoff:
    case Errc::even_tap_count:
    case Errc::upsample_requested:
    case Errc::irrational_ratio:
    case Errc::invalid_params:
    case Errc::factor_too_small:
    case Errc::invalid_spec:
      return ErrorClass::config;
    case Errc::diverged_loss:
      return ErrorClass::numeric;
    default:
      return ErrorClass::data;
  }
}

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const { return code_; }
  ErrorClass error_class() const { return classify(code_); }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace ddf
