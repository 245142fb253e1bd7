#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "driftlab/core/error.hpp"
#include "driftlab/core/model.hpp"
#include "driftlab/toolkit/adequacy.hpp"
#include "driftlab/toolkit/atomic_file.hpp"
#include "driftlab/toolkit/cli.hpp"
#include "driftlab/toolkit/config.hpp"
#include "driftlab/toolkit/json_io.hpp"

using namespace driftlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("driftlab_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::vector<std::string>& args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = cli_run(args, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

ModelContext gbm_context(double beta, double sigma, std::size_t n, double dt) {
  ModelContext ctx;
  ctx.spec = gbm_spec({beta, sigma, 1.0});
  for (std::size_t i = 0; i <= n; ++i) ctx.times.push_back(dt * static_cast<double>(i));
  return ctx;
}

}  // namespace

TEST_CASE("config text round trip") {
  RunConfig cfg;
  cfg.command = "fit";
  cfg.model = "ou";
  cfg.sigma = 0.42;
  cfg.seed = 99;
  cfg.profile_values = "0.1,0.2";
  CHECK(config_from_text(config_to_text(cfg)) == cfg);
}

TEST_CASE("config sections apply only to their command") {
  std::istringstream in("# comment\nsigma = 0.5\n[fit]\nbeta = 0.2\n[simulate]\nbeta = 0.7\n");
  RunConfig cfg;
  apply_config(cfg, in, "fit");
  CHECK(cfg.sigma == doctest::Approx(0.5));
  CHECK(cfg.beta == doctest::Approx(0.2));
}

TEST_CASE("config lists every unknown key") {
  std::istringstream in("foo = 1\nsigma = 0.2\nbar = 2\n");
  RunConfig cfg;
  try {
    apply_config(cfg, in, "fit");
    FAIL("expected config_error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config_error);
    const std::string msg = e.what();
    CHECK(msg.find("foo") != std::string::npos);
    CHECK(msg.find("bar") != std::string::npos);
  }
}

TEST_CASE("atomic write replaces content and leaves no temporary") {
  const auto dir = scratch_dir("atomic");
  const auto path = (dir / "a.txt").string();
  write_file_atomic(path, "first");
  write_file_atomic(path, "second");
  CHECK(read_file(path) == "second");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++entries;
  CHECK(entries == 1);
}

TEST_CASE("synthetic replicates") {
  auto ctx = gbm_context(0.1, 0.3, 20, 0.1);
  CHECK(synthetic_replicates(ctx, 0, 1).empty());
  const auto a = synthetic_replicates(ctx, 5, 11);
  const auto b = synthetic_replicates(ctx, 5, 11);
  REQUIRE(a.size() == 5);
  for (std::size_t r = 0; r < a.size(); ++r) CHECK(a[r].y == b[r].y);

  const auto reps = synthetic_replicates(ctx, 500, 3);
  double sum = 0.0, sum2 = 0.0;
  for (const auto& s : reps) {
    const double v = s.y.back();
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / 500.0;
  const double se = std::sqrt((sum2 / 500.0 - mean * mean) / 499.0);
  CHECK(std::abs(mean - std::exp(0.1 * 2.0)) < 3.0 * se);

  ModelContext empty;
  CHECK_THROWS_AS(synthetic_replicates(empty, 3, 1), Error);
  ModelContext noisy = ctx;
  noisy.noisy = true;
  try {
    synthetic_replicates(noisy, 3, 1);
    FAIL("expected incomplete_context");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::incomplete_context);
  }
}

TEST_CASE("envelope check") {
  auto ctx = gbm_context(0.1, 0.3, 100, 0.1);
  const auto reps = synthetic_replicates(ctx, 200, 5);

  SUBCASE("a replicate lies inside its own minmax envelope") {
    const auto report = envelope_check(reps[7], reps, default_statistics(), EnvelopeKind::minmax);
    CHECK(report.flagged() == 0);
  }
  SUBCASE("well-specified data are rarely flagged") {
    std::size_t flagged = 0;
    const auto observed = synthetic_replicates(ctx, 50, 77);
    for (const auto& obs : observed) {
      flagged += envelope_check(obs, reps).at("increment_sd").pass() ? 0 : 1;
    }
    CHECK(flagged <= 20);
  }
  SUBCASE("quantile envelopes need twenty replicates") {
    const std::vector<NoisyObservationSet> few(reps.begin(), reps.begin() + 10);
    try {
      envelope_check(reps[0], few);
      FAIL("expected insufficient_data");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::insufficient_data);
    }
  }
  SUBCASE("a constant statistic is indeterminate") {
    const Statistic constant{"constant", [](std::span<const double>) { return 1.0; }};
    const auto report = envelope_check(reps[0], reps, {constant});
    CHECK(report.at("constant").verdict == Verdict::indeterminate);
    CHECK(report.at("constant").pass());
  }
}

TEST_CASE("fit result json keys") {
  FitResult fit;
  fit.theta_hat = {0.1};
  fit.theta_full = {0.1, 0.3};
  fit.converged = true;
  const Json j = fit_result_to_json(fit);
  for (const char* key : {"theta_hat", "theta_full", "objective", "converged", "iterations", "seed",
                          "stderr", "diagnostics"}) {
    CHECK(j.contains(key));
  }
  const FitResult back = fit_result_from_json(j);
  CHECK(back.theta_full == fit.theta_full);
  CHECK(back.converged);
}

TEST_CASE("cli end to end") {
  const auto dir = scratch_dir("cli");
  const auto path = (dir / "path.csv").string();
  REQUIRE(run({"simulate", "--model", "gbm", "--beta", "0.1", "--sigma", "0.3", "--t-end", "10",
               "--steps", "100", "--seed", "7", "--out", path}) == exit_ok);
  CHECK(count_lines(path) == 102);

  const auto fit1 = (dir / "fit1.json").string();
  const auto fit2 = (dir / "fit2.json").string();
  REQUIRE(run({"fit", "--data", path, "--model", "gbm", "--method", "mle", "--out", fit1}) == exit_ok);
  REQUIRE(run({"fit", "--data", path, "--model", "gbm", "--method", "mle", "--out", fit2}) == exit_ok);
  CHECK(read_file(fit1) == read_file(fit2));
  CHECK(Json::parse(read_file(fit1)).at("converged").get<bool>());

  const auto bad = (dir / "bad.cfg").string();
  write_file_atomic(bad, "bogus = 1\n");
  std::string err;
  CHECK(run({"fit", "--config", bad, "--data", path}, &err) == exit_invalid);
  CHECK(err.find("bogus") != std::string::npos);

  const auto noisy = (dir / "noisy.csv").string();
  REQUIRE(run({"simulate", "--model", "ou", "--sigma", "0.5", "--obs-scale", "0.2", "--t-end", "20",
               "--steps", "40", "--seed", "3", "--out", noisy}) == exit_ok);
  const auto filt = (dir / "filter.json").string();
  CHECK(run({"filter", "--data", noisy, "--model", "ou", "--sigma", "0.5", "--obs-scale", "0.2",
             "--n-particles", "200", "--out", filt}) == exit_ok);
  CHECK(Json::parse(read_file(filt)).at("ess_trace").size() == 41);

  const auto traj = (dir / "traj.csv").string();
  CHECK(run({"collocate", "--data", path, "--model", "gbm", "--sigma", "0.3", "--obs-scale", "0.01",
             "--out", (dir / "col.json").string(), "--trajectory-out", traj}) == exit_ok);
  CHECK(count_lines(traj) > 2);

  const auto diag = (dir / "diag.json").string();
  CHECK(run({"diagnose", "--data", path, "--model", "gbm", "--fit-json", fit1, "--k", "50", "--out",
             diag}) == exit_ok);
  CHECK(Json::parse(read_file(diag)).at("replicates").get<int>() == 50);

  CHECK(run({"nonsense"}) == exit_invalid);
  fs::remove_all(dir.parent_path());
}
