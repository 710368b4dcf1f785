// End-to-end acceptance checks. Prints one PASS/FAIL/SKIP line per criterion
// and exits non-zero when any criterion fails.

#include "camp/amp.hpp"
#include "camp/bench.hpp"
#include "camp/conformal.hpp"
#include "camp/exact.hpp"
#include "camp/rbp.hpp"
#include "camp/taylor.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace camp;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Dataset gaussian_data(Index n, Index d, std::uint64_t seed) {
  SyntheticConfig cfg;
  cfg.n = n;
  cfg.d = d;
  cfg.seed = seed;
  return generate_synthetic(cfg).data;
}

Vector gaussian_input(Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(d)));
  Vector x(d);
  for (Index mu = 0; mu < d; ++mu) x(mu) = normal(rng);
  return x;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Report run(ExperimentConfig cfg) {
  const Report r = run_experiment(cfg);
  for (const auto& m : r.methods) {
    std::printf("    %-18s coverage %.3f  length %.3f +- %.3f  jaccard %s  failures %lld/%lld  retries %lld  "
                "boundary %lld\n",
                m.method.c_str(), m.coverage, m.mean_length, m.std_length,
                m.mean_jaccard ? fmt("%.3f", *m.mean_jaccard).c_str() : "-", static_cast<long long>(m.failures),
                static_cast<long long>(m.evaluations), static_cast<long long>(m.retries),
                static_cast<long long>(m.boundary_hits));
  }
  return r;
}

ExperimentConfig table_config(Experiment e, Regularizer reg, double lambda, Index n, Index d, Index trials) {
  ExperimentConfig cfg;
  cfg.experiment = e;
  cfg.glm = {reg, lambda};
  cfg.data.n = n;
  cfg.data.d = d;
  cfg.trials = trials;
  cfg.seed = 2024;
  return cfg;
}

Outcome fixed_point_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset ds = gaussian_data(400, 200, 1);
  std::string detail;
  bool ok = true;
  for (const Regularizer reg : {Regularizer::Ridge, Regularizer::Lasso}) {
    const GlmSpec spec{reg, 1.0};
    const AmpState s = amp_fit(ds, spec);
    ErmOptions tight;
    tight.tol = 1e-14;
    const Vector theta = erm_solve(ds, spec, tight).theta;
    const Vector corr = ds.X().transpose() * (ds.y() - ds.X() * s.theta_hat);
    double kkt = 0.0;
    for (Index mu = 0; mu < ds.d(); ++mu) {
      const double t = s.theta_hat(mu);
      const double v = reg == Regularizer::Ridge ? std::abs(t - corr(mu))
                       : t != 0.0                ? std::abs(corr(mu) - (t > 0 ? 1.0 : -1.0))
                                                 : std::max(0.0, std::abs(corr(mu)) - 1.0);
      kkt = std::max(kkt, v);
    }
    const double rel = (s.theta_hat - theta).norm() / theta.norm();
    ok = ok && s.converged && kkt <= 1e-6 && rel <= 1e-5;
    detail += to_string(reg) + ": kkt " + fmt("%.2e", kkt) + ", rel " + fmt("%.2e", rel) + "; ";
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 5.0;
  return {ok ? Status::Pass : Status::Fail, detail + fmt("%.2f s", secs)};
}

Outcome loo_asymptotics() {
  const auto t0 = std::chrono::steady_clock::now();
  const GlmSpec spec{Regularizer::Ridge, 1.0};
  const auto mean_gap = [&](Index d, std::uint64_t seed) {
    const Dataset ds = gaussian_data(d / 2, d, seed);
    const AmpState s = amp_fit(ds, spec);
    ExactLooSolver exact(ds.shared_X(), spec);
    return (loo_predictions(s, ds) - exact.loo_predictions(ds.y())).cwiseAbs().mean();
  };
  double small = 0.0, large = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    small += mean_gap(100, 100 + seed) / 10.0;
    large += mean_gap(800, 200 + seed) / 10.0;
  }
  const double secs = seconds_since(t0);
  const bool ok = small >= 2.0 * large && secs < 120.0;
  return {ok ? Status::Pass : Status::Fail, "gap d=100 " + fmt("%.4f", small) + ", d=800 " + fmt("%.4f", large) +
                                                ", ratio " + fmt("%.2f", small / large) + ", " + fmt("%.1f s", secs)};
}

Outcome taylor_derivative() {
  const GlmSpec spec{Regularizer::Ridge, 1.0};
  const Index d = 100, n = 50;
  const Dataset train = gaussian_data(n, d, 3);
  const Vector x = gaussian_input(d, 4);
  AmpOptions opts;
  opts.tol = 1e-13;
  opts.max_iter = 5000;
  const double y_ref = amp_fit(train, spec, opts).theta_hat.dot(x);
  const Dataset aug = train.augmented(x, y_ref);
  const AmpState base = amp_fit(aug, spec, opts);
  TaylorOptions topts;
  topts.tol = 1e-13;
  topts.max_iter = 5000;
  const TaylorState ts = taylor_fit(base, aug, spec, topts);
  const double eps = 1e-4;
  const Vector up = amp_fit(aug.with_label(n, y_ref + eps), spec, opts).theta_hat;
  const Vector dn = amp_fit(aug.with_label(n, y_ref - eps), spec, opts).theta_hat;
  const Vector fd = (up - dn) / (2.0 * eps);
  const double rel = (ts.d_theta - fd).lpNorm<Eigen::Infinity>() / fd.lpNorm<Eigen::Infinity>();
  return {ts.converged && rel <= 1e-3 ? Status::Pass : Status::Fail, "relative inf-norm error " + fmt("%.2e", rel)};
}

Outcome coverage_table() {
  bool ok = true;
  std::string detail;
  const std::vector<std::pair<Regularizer, double>> settings{
      {Regularizer::Ridge, 1.0}, {Regularizer::Ridge, 0.01}, {Regularizer::Lasso, 1.0}};
  for (const auto& [reg, lambda] : settings) {
    ExperimentConfig cfg = table_config(Experiment::Coverage, reg, lambda, 100, 50, 2000);
    const MethodMetrics& m = run(cfg).methods.front();
    const bool good = m.coverage >= 0.87 && m.coverage <= 0.93;
    ok = ok && good;
    detail += to_string(reg) + "(" + fmt("%g", lambda) + ") " + fmt("%.3f", m.coverage) + " [" +
              std::to_string(m.evaluations - m.failures) + " ok]; ";
  }
  return {ok ? Status::Pass : Status::Fail, detail};
}

Outcome length_table() {
  ExperimentConfig cfg = table_config(Experiment::Length, Regularizer::Ridge, 1.0, 100, 50, 200);
  const Report r = run(cfg);
  const double exact = r.find("exact_loo")->mean_length;
  const double taylor = r.find("taylor_amp")->mean_length;
  const double scp = r.find("scp")->mean_length;
  const bool ok = taylor >= 3.4 && taylor <= 4.4 && exact >= 3.3 && exact <= 4.1 && scp >= 3.6 && scp <= 5.2 &&
                  scp >= exact;
  return {ok ? Status::Pass : Status::Fail,
          "taylor " + fmt("%.3f", taylor) + ", exact " + fmt("%.3f", exact) + ", scp " + fmt("%.3f", scp)};
}

Outcome jaccard_table() {
  ExperimentConfig cfg = table_config(Experiment::Jaccard, Regularizer::Ridge, 1.0, 200, 100, 20);
  const Report r = run(cfg);
  const auto ji = [&](const char* name) {
    const MethodMetrics* m = r.find(name);
    return m && m->mean_jaccard ? *m->mean_jaccard : std::nan("");
  };
  const double taylor = ji("taylor_amp");
  const double scp = ji("scp");
  const bool ok = taylor >= 0.93 && taylor > scp;
  return {ok ? Status::Pass : Status::Fail, "JI taylor " + fmt("%.3f", taylor) + ", JI scp " + fmt("%.3f", scp)};
}

Outcome bayes_table() {
  ExperimentConfig matched = table_config(Experiment::BayesCompare, Regularizer::Ridge, 1.0, 125, 250, 200);
  const Report a = run(matched);
  const double fcp_a = a.find("taylor_amp")->mean_length;
  const double bayes_a = a.find("bayes")->mean_length;

  ExperimentConfig mismatched = table_config(Experiment::BayesCompare, Regularizer::Lasso, 0.1, 125, 250, 200);
  mismatched.data.teacher_prior = TeacherPrior::Laplace;
  const Report b = run(mismatched);
  const double fcp_b = b.find("taylor_amp")->mean_length;
  const double bayes_b = b.find("bayes")->mean_length;

  const bool ok = std::abs(fcp_a - bayes_a) <= 0.4 && fcp_b >= 1.5 * bayes_b;
  return {ok ? Status::Pass : Status::Fail, "gaussian/ridge: fcp " + fmt("%.3f", fcp_a) + " vs bayes " +
                                                fmt("%.3f", bayes_a) + "; laplace/lasso(0.1): fcp " +
                                                fmt("%.3f", fcp_b) + " vs bayes " + fmt("%.3f", bayes_b)};
}

Outcome timing() {
  ExperimentConfig cfg;
  cfg.experiment = Experiment::Timing;
  cfg.glm = {Regularizer::Lasso, 1.0};
  cfg.alpha = 0.5;
  cfg.dimensions = {250, 1000};
  cfg.grid_points = 100;
  cfg.timing_repetitions = 5;
  cfg.exact_repetitions = 3;
  cfg.seed = 2024;
  const Report r = run_experiment(cfg);
  const auto t = [&](const std::string& name) { return r.find(name)->wall_time_seconds; };
  const double ratio_250 = t("exact_loo@d250") / t("taylor_amp@d250");
  const double ratio_1000 = t("exact_loo@d1000") / t("taylor_amp@d1000");
  const bool ok = ratio_1000 >= 20.0 && ratio_1000 > ratio_250;
  return {ok ? Status::Pass : Status::Fail,
          "d=250: taylor " + fmt("%.4f s", t("taylor_amp@d250")) + ", exact " + fmt("%.3f s", t("exact_loo@d250")) +
              " (x" + fmt("%.0f", ratio_250) + "); d=1000: taylor " + fmt("%.4f s", t("taylor_amp@d1000")) +
              ", exact " + fmt("%.3f s", t("exact_loo@d1000")) + " (x" + fmt("%.0f", ratio_1000) + ")"};
}

Outcome symmetry() {
  const Dataset train = gaussian_data(100, 50, 5);
  const Vector x = gaussian_input(50, 6);
  std::vector<Index> perm(100);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(7));
  const Dataset permuted = train.subset(perm);

  double worst = 0.0;
  bool same_sets = true;
  for (const Regularizer reg : {Regularizer::Ridge, Regularizer::Lasso}) {
    const GlmSpec spec{reg, 1.0};
    for (const double label : {-1.0, 0.3, 2.0}) {
      Vector a = conformity_scores_amp(train.augmented(x, label), spec);
      Vector b = conformity_scores_amp(permuted.augmented(x, label), spec);
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      worst = std::max(worst, (a - b).lpNorm<Eigen::Infinity>());
    }
    ConformalConfig cfg;
    cfg.grid = default_grid(train, x, spec);
    for (const Backend backend : {Backend::Amp, Backend::TaylorAmp}) {
      cfg.backend = backend;
      same_sets = same_sets && fcp_predict(train, x, spec, cfg).included() == fcp_predict(permuted, x, spec, cfg).included();
    }
  }
  const bool ok = worst <= 1e-12 && same_sets;
  return {ok ? Status::Pass : Status::Fail,
          "max sorted-score gap " + fmt("%.2e", worst) + (same_sets ? ", sets identical" : ", sets differ")};
}

Outcome quantile_oracle() {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> size(1, 500);
  std::lognormal_distribution<double> score(0.0, 1.0);
  long mismatches = 0, checks = 0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> s(static_cast<std::size_t>(size(rng)));
    for (auto& v : s) v = score(rng);
    if (t % 10 == 0) {  // ties
      for (std::size_t k = 1; k < s.size(); k += 2) s[k] = s[k - 1];
    }
    std::vector<double> sorted = s;
    std::sort(sorted.begin(), sorted.end());
    const Vector scores = Eigen::Map<const Vector>(s.data(), static_cast<Index>(s.size()));
    const long m = static_cast<long>(s.size());
    for (long pct = 1; pct <= 50; ++pct) {
      const long k = std::clamp((m * (100 - pct) + 99) / 100, 1L, m);
      ++checks;
      if (conformal_threshold(scores, static_cast<double>(pct) / 100.0) != sorted[static_cast<std::size_t>(k - 1)]) {
        ++mismatches;
      }
    }
  }
  return {mismatches == 0 ? Status::Pass : Status::Fail,
          std::to_string(checks) + " comparisons, " + std::to_string(mismatches) + " mismatches"};
}

Outcome rbp_equivalence() {
  const GlmSpec spec{Regularizer::Ridge, 1.0};
  const auto gaps = [&](Index d) {
    const Dataset ds = gaussian_data(2 * d, d, 9 + static_cast<std::uint64_t>(d));
    const RbpState r = rbp_fit(ds, spec);
    const Vector amp = loo_predictions(amp_fit(ds, spec), ds);
    double worst = 0.0, mean = 0.0;
    for (Index i = 0; i < ds.n(); ++i) {
      const double g = std::abs(rbp_loo_prediction(r, ds, i) - amp(i));
      worst = std::max(worst, g);
      mean += g / static_cast<double>(ds.n());
    }
    return std::pair{worst, mean};
  };
  const auto [max50, mean50] = gaps(50);
  const auto [max200, mean200] = gaps(200);
  const bool ok = max50 <= 0.1 && mean200 < mean50;
  return {ok ? Status::Pass : Status::Fail, "max gap d=50 " + fmt("%.4f", max50) + ", mean gap d=50 " +
                                                fmt("%.5f", mean50) + ", d=200 " + fmt("%.5f", mean200)};
}

std::string find_target(const std::string& path) {
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  std::stringstream ss(header);
  std::string cell, last;
  while (std::getline(ss, cell, ',')) {
    std::string name = cell;
    name.erase(std::remove_if(name.begin(), name.end(), [](unsigned char c) { return c == '"' || std::isspace(c); }),
               name.end());
    std::string lower = name;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "medv") return name;
    last = name;
  }
  return last;
}

Outcome real_data() {
  const char* path = std::getenv("CONFORMAL_AMP_BOSTON_CSV");
  if (path == nullptr || *path == '\0') return {Status::Skip, "set CONFORMAL_AMP_BOSTON_CSV to a Boston housing CSV"};
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg;
  cfg.experiment = Experiment::RealData;
  cfg.glm = {Regularizer::Lasso, 1.0};
  cfg.csv_path = path;
  cfg.target_column = find_target(path);
  cfg.trials = 10;
  cfg.test_samples = 0;
  cfg.seed = 2024;
  const Report r = run(cfg);
  const double secs = seconds_since(t0);
  bool ok = secs < 60.0;
  std::string detail = "target '" + cfg.target_column + "', " + fmt("%.1f s", secs);
  for (const auto& m : r.methods) {
    if (m.method == "scp") continue;
    ok = ok && m.coverage >= 0.8 && m.coverage <= 1.0;
    detail += "; " + m.method + " coverage " + fmt("%.3f", m.coverage) + ", failure rate " +
              fmt("%.3f", static_cast<double>(m.failures) / static_cast<double>(m.evaluations));
  }
  return {ok ? Status::Pass : Status::Fail, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"fixed-point exactness", fixed_point_exactness},
      {"leave-one-out asymptotics", loo_asymptotics},
      {"Taylor derivative", taylor_derivative},
      {"coverage", coverage_table},
      {"interval length", length_table},
      {"Jaccard index", jaccard_table},
      {"Bayes comparison", bayes_table},
      {"timing", timing},
      {"permutation symmetry", symmetry},
      {"quantile oracle", quantile_oracle},
      {"rBP equivalence", rbp_equivalence},
      {"real data (Boston)", real_data},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {Status::Fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
    if (o.status == Status::Fail) ++failures;
    std::printf("criterion %2zu %s  %s: %s (%.1f s)\n", k + 1, tag, criteria[k].first.c_str(), o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
