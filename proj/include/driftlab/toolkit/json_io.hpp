#pragma once

#include <string>

#include "json.hpp"

#include "driftlab/collocation/collocation.hpp"
#include "driftlab/likelihood/observations.hpp"
#include "driftlab/statespace/particle_filter.hpp"
#include "driftlab/toolkit/adequacy.hpp"

namespace driftlab {

using Json = nlohmann::json;

/// Keys theta_hat, theta_full, objective, converged, iterations, seed,
/// stderr (array or null), diagnostics. Non-finite numbers become null.
Json fit_result_to_json(const FitResult& fit);
FitResult fit_result_from_json(const Json& j);

/// Fit JSON plus lambda, weight_mode, data_term, penalty_term.
Json collocation_fit_to_json(const CollocationFit& fit);

/// Keys loglik, ess_trace, filtered_means (records {t, x}), resample_steps, seed.
Json filter_result_to_json(const FilterResult& res);

Json adequacy_report_to_json(const AdequacyReport& report);

/// Two-space indented text with a trailing newline.
std::string dump_json(const Json& j);

}  // namespace driftlab
