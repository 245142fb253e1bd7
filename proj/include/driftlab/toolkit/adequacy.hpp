#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "driftlab/core/model.hpp"
#include "driftlab/statespace/observation_model.hpp"

namespace driftlab {

/// What is needed to regenerate data like the observed set: the fitted model
/// (parameters in spec.theta), the observation design and, for noisy data,
/// the observation model.
struct ModelContext {
  DiffusionSpec spec;
  std::vector<double> times;
  bool noisy = false;
  std::optional<ObservationModel> om;
  /// Euler substeps per gap for models without an exact simulator.
  std::size_t substeps = 20;
};

/// K datasets simulated at the observed design. Replicate r uses the streams
/// (seed, r). Exact data start at spec.x0 at times[0].
std::vector<NoisyObservationSet> synthetic_replicates(const ModelContext& ctx, std::size_t k,
                                                      std::uint64_t seed);

using StatisticFn = std::function<double(std::span<const double> values)>;

struct Statistic {
  std::string name;
  StatisticFn fn;
};

/// mean_increment, increment_sd, lag1_autocorrelation, min, max.
std::vector<Statistic> default_statistics();
/// Looks a statistic up by name among the defaults and registered ones.
Statistic statistic_by_name(const std::string& name);
void register_statistic(Statistic stat);

enum class EnvelopeKind { quantile, minmax };
/// Applied to every series before the statistics; log suits positive,
/// multiplicative models such as GBM.
enum class SeriesTransform { identity, log };
enum class Verdict { inside, outside, indeterminate };

std::string to_string(Verdict v);
EnvelopeKind envelope_from_string(const std::string& name);
SeriesTransform transform_from_string(const std::string& name);

struct StatisticCheck {
  std::string name;
  double observed = 0.0;
  double min = 0.0;
  double max = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;
  Verdict verdict = Verdict::inside;
  [[nodiscard]] bool pass() const { return verdict != Verdict::outside; }
};

struct AdequacyReport {
  EnvelopeKind envelope = EnvelopeKind::quantile;
  SeriesTransform transform = SeriesTransform::identity;
  std::size_t replicates = 0;
  std::vector<StatisticCheck> checks;

  [[nodiscard]] std::size_t flagged() const;
  [[nodiscard]] const StatisticCheck& at(const std::string& name) const;
};

/// Compares each statistic of the observed series (first coordinate) with
/// its distribution over the synthetic sets. Quantile envelopes need at least
/// 20 replicates. A statistic that is constant across replicates is
/// indeterminate.
AdequacyReport envelope_check(const NoisyObservationSet& observed,
                              const std::vector<NoisyObservationSet>& synthetic,
                              const std::vector<Statistic>& stats = default_statistics(),
                              EnvelopeKind envelope = EnvelopeKind::quantile,
                              SeriesTransform transform = SeriesTransform::identity);

}  // namespace driftlab
