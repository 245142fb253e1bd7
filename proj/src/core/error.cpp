#include "driftlab/core/error.hpp"

namespace driftlab {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::simulation_diverged: return "simulation-diverged";
    case ErrorCode::transform_undefined: return "transform-undefined";
    case ErrorCode::unsupported_dimension: return "unsupported-dimension";
    case ErrorCode::insufficient_data: return "insufficient-data";
    case ErrorCode::degenerate_density: return "degenerate-density";
    case ErrorCode::invalid_grid: return "invalid-grid";
    case ErrorCode::non_finite_term: return "non-finite-term";
    case ErrorCode::invalid_start: return "invalid-start";
    case ErrorCode::estimation_failed: return "estimation-failed";
    case ErrorCode::degenerate_importance: return "degenerate-importance";
    case ErrorCode::filter_degenerate: return "filter-degenerate";
    case ErrorCode::numerical_singularity: return "numerical-singularity";
    case ErrorCode::weight_singularity: return "weight-singularity";
    case ErrorCode::incomplete_context: return "incomplete-context";
    case ErrorCode::config_error: return "config-error";
    case ErrorCode::io_error: return "io-error";
  }
  return "unknown";
}

namespace {
std::string decorate(ErrorCode code, const std::string& message) {
  std::string out(to_string(code));
  out += ": ";
  out += message;
  return out;
}
}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::optional<std::size_t> index)
    : std::runtime_error(decorate(code, message)), code_(code), index_(index) {}

void fail(ErrorCode code, const std::string& message, std::optional<std::size_t> index) {
  throw Error(code, message, index);
}

}  // namespace driftlab
