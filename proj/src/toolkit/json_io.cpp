#include "driftlab/toolkit/json_io.hpp"

#include <cmath>

#include "driftlab/core/error.hpp"

namespace driftlab {

namespace {

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json numbers(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

std::vector<double> read_numbers(const Json& a) {
  std::vector<double> v;
  for (const auto& x : a) v.push_back(x.is_null() ? std::nan("") : x.get<double>());
  return v;
}

}  // namespace

Json fit_result_to_json(const FitResult& fit) {
  Json j;
  j["theta_hat"] = numbers(fit.theta_hat);
  j["theta_full"] = numbers(fit.theta_full);
  j["objective"] = number(fit.objective);
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["seed"] = fit.seed;
  j["stderr"] = fit.standard_errors ? numbers(*fit.standard_errors) : Json(nullptr);
  Json diag = Json::object();
  for (const auto& [k, v] : fit.diagnostics) diag[k] = number(v);
  j["diagnostics"] = diag;
  return j;
}

FitResult fit_result_from_json(const Json& j) {
  try {
    FitResult fit;
    fit.theta_hat = read_numbers(j.at("theta_hat"));
    fit.theta_full = j.contains("theta_full") ? read_numbers(j.at("theta_full")) : fit.theta_hat;
    fit.objective = j.at("objective").is_null() ? std::nan("") : j.at("objective").get<double>();
    fit.converged = j.at("converged").get<bool>();
    fit.iterations = j.at("iterations").get<std::size_t>();
    fit.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("stderr") && !j.at("stderr").is_null()) fit.standard_errors = read_numbers(j.at("stderr"));
    if (j.contains("diagnostics")) {
      for (const auto& [k, v] : j.at("diagnostics").items()) {
        fit.diagnostics[k] = v.is_null() ? std::nan("") : v.get<double>();
      }
    }
    return fit;
  } catch (const Json::exception& e) {
    fail(ErrorCode::io_error, std::string("malformed fit JSON: ") + e.what());
  }
}

Json collocation_fit_to_json(const CollocationFit& fit) {
  Json j = fit_result_to_json(fit.fit);
  j["lambda"] = number(fit.lambda);
  j["weight_mode"] = to_string(fit.weight_mode);
  j["data_term"] = number(fit.parts.data);
  j["penalty_term"] = number(fit.parts.penalty);
  return j;
}

Json filter_result_to_json(const FilterResult& res) {
  Json j;
  j["loglik"] = number(res.loglik);
  j["ess_trace"] = numbers(res.ess_trace);
  Json means = Json::array();
  for (std::size_t i = 0; i < res.filtered_means.size(); ++i) {
    const auto v = res.filtered_means.value(i);
    means.push_back({{"t", res.filtered_means.time(i)},
                     {"x", numbers(std::vector<double>(v.begin(), v.end()))}});
  }
  j["filtered_means"] = means;
  j["resample_steps"] = res.resample_steps;
  j["seed"] = res.seed;
  return j;
}

Json adequacy_report_to_json(const AdequacyReport& report) {
  Json j;
  j["envelope"] = report.envelope == EnvelopeKind::quantile ? "quantile" : "minmax";
  j["transform"] = report.transform == SeriesTransform::log ? "log" : "identity";
  j["replicates"] = report.replicates;
  j["flagged"] = report.flagged();
  Json stats = Json::array();
  for (const auto& c : report.checks) {
    stats.push_back({{"name", c.name},
                     {"observed", number(c.observed)},
                     {"min", number(c.min)},
                     {"max", number(c.max)},
                     {"q05", number(c.q05)},
                     {"q95", number(c.q95)},
                     {"verdict", to_string(c.verdict)},
                     {"pass", c.pass()}});
  }
  j["statistics"] = stats;
  return j;
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace driftlab
