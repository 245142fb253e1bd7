#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace driftlab {

enum class ErrorCode {
  invalid_argument,
  simulation_diverged,
  transform_undefined,
  unsupported_dimension,
  insufficient_data,
  degenerate_density,
  invalid_grid,
  non_finite_term,
  invalid_start,
  estimation_failed,
  degenerate_importance,
  filter_degenerate,
  numerical_singularity,
  weight_singularity,
  incomplete_context,
  config_error,
  io_error,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Library-wide exception. `index()` carries the offending step, pair or
/// observation index when the failure is localized.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> index = std::nullopt);

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  [[nodiscard]] std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> index_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message,
                       std::optional<std::size_t> index = std::nullopt);

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorCode::invalid_argument, message);
}

}  // namespace driftlab
