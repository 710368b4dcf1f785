#include "camp/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

namespace camp {

void LabelGrid::validate() const {
  if (!(half_width > 0.0) || !std::isfinite(half_width)) throw InvalidArgument("grid half width must be > 0");
  if (!std::isfinite(center)) throw InvalidArgument("grid center must be finite");
  if (num_points < 2) throw InvalidArgument("grid needs at least two points");
}

double LabelGrid::spacing() const { return 2.0 * half_width / static_cast<double>(num_points - 1); }

Vector LabelGrid::points() const {
  validate();
  return Vector::LinSpaced(num_points, center - half_width, center + half_width);
}

PredictionSet PredictionSet::from_mask(const LabelGrid& grid, std::vector<bool> included) {
  grid.validate();
  if (static_cast<Index>(included.size()) != grid.num_points) {
    throw InvalidArgument("inclusion mask does not match the grid size");
  }
  PredictionSet set;
  const Vector pts = grid.points();
  const double half = 0.5 * grid.spacing();
  for (std::size_t k = 0; k < included.size();) {
    if (!included[k]) {
      ++k;
      continue;
    }
    std::size_t last = k;
    while (last + 1 < included.size() && included[last + 1]) ++last;
    set.intervals_.push_back({pts(static_cast<Index>(k)) - half, pts(static_cast<Index>(last)) + half});
    k = last + 1;
  }
  set.grid_ = grid;
  set.included_ = std::move(included);
  return set;
}

PredictionSet PredictionSet::from_intervals(std::vector<Interval> intervals) {
  std::erase_if(intervals, [](const Interval& iv) { return !(iv.hi >= iv.lo); });
  std::sort(intervals.begin(), intervals.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  PredictionSet set;
  for (const Interval& iv : intervals) {
    if (!set.intervals_.empty() && iv.lo <= set.intervals_.back().hi) {
      set.intervals_.back().hi = std::max(set.intervals_.back().hi, iv.hi);
    } else {
      set.intervals_.push_back(iv);
    }
  }
  return set;
}

double PredictionSet::length() const {
  double total = 0.0;
  for (const Interval& iv : intervals_) total += iv.length();
  return total;
}

bool PredictionSet::contains(double label) const {
  return std::any_of(intervals_.begin(), intervals_.end(), [label](const Interval& iv) { return iv.contains(label); });
}

bool PredictionSet::touches_grid_boundary() const {
  return grid_.has_value() && !included_.empty() && (included_.front() || included_.back());
}

std::string to_string(Backend b) {
  switch (b) {
    case Backend::ExactLoo: return "exact_loo";
    case Backend::Amp: return "amp";
    case Backend::TaylorAmp: return "taylor_amp";
    case Backend::Scp: return "scp";
  }
  return "unknown";
}

Backend backend_from_string(const std::string& name) {
  if (name == "exact_loo" || name == "exact") return Backend::ExactLoo;
  if (name == "amp") return Backend::Amp;
  if (name == "taylor_amp" || name == "taylor") return Backend::TaylorAmp;
  if (name == "scp") return Backend::Scp;
  throw InvalidArgument("unknown backend '" + name + "'");
}

void ConformalConfig::validate() const {
  if (!(kappa > 0.0 && kappa < 1.0)) throw InvalidArgument("kappa must lie in (0, 1)");
  grid.validate();
}

Index conformal_rank(Index m, double kappa) {
  if (m < 1) throw InvalidArgument("conformal rank needs at least one score");
  if (!(kappa > 0.0 && kappa < 1.0)) throw InvalidArgument("kappa must lie in (0, 1)");
  const double target = (1.0 - kappa) * static_cast<double>(m);
  // Absorb rounding noise such as 0.9 * 10 = 9.000000000000002.
  const auto k = static_cast<Index>(std::ceil(target - 1e-9 * std::max(1.0, target)));
  return std::clamp<Index>(k, 1, m);
}

namespace {

double kth_smallest(Vector values, Index k) {
  auto* begin = values.data();
  std::nth_element(begin, begin + (k - 1), begin + values.size());
  return values(k - 1);
}

std::vector<bool> inclusion_from_scores(const Matrix& scores, double kappa) {
  const Index m = scores.cols();
  const Index k = conformal_rank(m, kappa);
  std::vector<bool> included(static_cast<std::size_t>(scores.rows()));
  Vector row(m);
  for (Index r = 0; r < scores.rows(); ++r) {
    row = scores.row(r).transpose();
    const double test_score = row(m - 1);
    included[static_cast<std::size_t>(r)] = test_score <= kth_smallest(row, k);
  }
  return included;
}

}  // namespace

double conformal_threshold(const Vector& scores, double kappa) {
  if (scores.size() == 0) throw InvalidArgument("conformal threshold needs at least one score");
  if (!scores.allFinite()) throw InvalidArgument("scores must be finite");
  return kth_smallest(scores, conformal_rank(scores.size(), kappa));
}

LabelGrid default_grid(const Dataset& train, const Vector& x_test, const GlmSpec& spec, Index num_points,
                       const ErmOptions& erm) {
  const ErmSolution fit = erm_solve(train, spec, erm);
  const Vector residuals = train.y() - train.X() * fit.theta;
  const double mean = residuals.mean();
  const double var = train.n() > 1 ? (residuals.array() - mean).square().sum() / static_cast<double>(train.n() - 1) : 0.0;
  LabelGrid grid;
  grid.center = x_test.dot(fit.theta);
  grid.half_width = 5.0 * (1.0 + std::sqrt(var));
  grid.num_points = num_points;
  return grid;
}

PredictionSet fcp_predict(const Dataset& train, const Vector& x_test, const GlmSpec& spec, const ConformalConfig& cfg,
                          const SolverOptions& solver) {
  cfg.validate();
  spec.validate();
  const Vector labels = cfg.grid.points();
  const Index n_aug = train.n() + 1;
  Matrix scores(labels.size(), n_aug);

  switch (cfg.backend) {
    case Backend::ExactLoo: {
      const Dataset aug = train.augmented(x_test, cfg.grid.center);
      ExactLooSolver loo(aug.shared_X(), spec, solver.erm);
      Vector y = aug.y();
      for (Index k = 0; k < labels.size(); ++k) {
        y(n_aug - 1) = labels(k);
        scores.row(k) = loo.scores(y).transpose();
      }
      break;
    }
    case Backend::Amp: {
      const Dataset aug = train.augmented(x_test, cfg.grid.center);
      AmpOptions opts = solver.amp;
      for (Index k = 0; k < labels.size(); ++k) {
        const Dataset relabelled = aug.with_label(n_aug - 1, labels(k));
        auto state = std::make_shared<AmpState>(amp_fit(relabelled, spec, opts));
        if (!state->converged) throw ConvergenceError("AMP did not converge at a grid label");
        scores.row(k) = (relabelled.y() - loo_predictions(*state, relabelled)).cwiseAbs().transpose();
        opts.warm_start = std::move(state);
      }
      break;
    }
    case Backend::TaylorAmp: {
      const AmpState reference = amp_fit(train, spec, solver.amp);
      if (!reference.converged) throw ConvergenceError("AMP did not converge on the training data");
      const double y_ref = x_test.dot(reference.theta_hat);
      const Dataset aug = train.augmented(x_test, y_ref);
      const AmpState base = amp_fit(aug, spec, solver.amp);
      if (!base.converged) throw ConvergenceError("AMP did not converge on the augmented data");
      const TaylorState ts = taylor_fit(base, aug, spec, solver.taylor);
      if (!ts.converged) throw ConvergenceError("Taylor-AMP did not converge");
      scores = taylor_scores(base, ts, aug, labels);
      break;
    }
    case Backend::Scp:
      throw InvalidArgument("fcp_predict does not handle the split-conformal backend; use scp_predict");
  }
  return PredictionSet::from_mask(cfg.grid, inclusion_from_scores(scores, cfg.kappa));
}

ScpModel scp_calibrate(const Dataset& ds, const GlmSpec& spec, double kappa, const SplitSpec& split_spec,
                       const ErmOptions& erm) {
  if (!(kappa > 0.0 && kappa < 1.0)) throw InvalidArgument("kappa must lie in (0, 1)");
  const auto [fit_part, calibration] = split(ds, split_spec);
  if (calibration.n() < 1) throw InvalidArgument("split conformal needs a non-empty calibration set");
  ScpModel model;
  model.theta = erm_solve(fit_part, spec, erm).theta;
  const Vector scores = (calibration.y() - calibration.X() * model.theta).cwiseAbs();
  const Index m = calibration.n();
  const double target = (1.0 - kappa) * static_cast<double>(m + 1);
  const auto k = std::clamp<Index>(static_cast<Index>(std::ceil(target - 1e-9 * std::max(1.0, target))), 1, m);
  model.quantile = kth_smallest(scores, k);
  model.calibration_size = m;
  return model;
}

PredictionSet scp_interval(const ScpModel& model, const Vector& x_test) {
  const double center = x_test.dot(model.theta);
  return PredictionSet::from_intervals({{center - model.quantile, center + model.quantile}});
}

PredictionSet scp_predict(const Dataset& ds, const Vector& x_test, const GlmSpec& spec, double kappa,
                          const SplitSpec& split_spec, const ErmOptions& erm) {
  return scp_interval(scp_calibrate(ds, spec, kappa, split_spec, erm), x_test);
}

namespace {

double measure(const std::vector<Interval>& intervals) {
  double total = 0.0;
  for (const Interval& iv : intervals) total += iv.length();
  return total;
}

double intersection_measure(const std::vector<Interval>& a, const std::vector<Interval>& b) {
  double total = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    const double lo = std::max(a[i].lo, b[j].lo);
    const double hi = std::min(a[i].hi, b[j].hi);
    if (hi > lo) total += hi - lo;
    if (a[i].hi < b[j].hi) {
      ++i;
    } else {
      ++j;
    }
  }
  return total;
}

}  // namespace

double jaccard(const PredictionSet& a, const PredictionSet& b) {
  const double inter = intersection_measure(a.intervals(), b.intervals());
  const double uni = measure(a.intervals()) + measure(b.intervals()) - inter;
  if (uni <= 0.0) return 1.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

Metrics evaluate(const std::vector<PredictionSet>& sets, const Vector& y_true) {
  if (static_cast<Index>(sets.size()) != y_true.size()) {
    throw InvalidArgument("evaluate: number of sets differs from number of labels");
  }
  if (sets.empty()) throw InvalidArgument("evaluate: no prediction sets");
  Metrics m;
  std::vector<double> lengths;
  lengths.reserve(sets.size());
  Index covered = 0;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    if (sets[k].contains(y_true(static_cast<Index>(k)))) ++covered;
    lengths.push_back(sets[k].length());
  }
  const auto count = static_cast<double>(sets.size());
  m.coverage = static_cast<double>(covered) / count;
  m.mean_length = std::accumulate(lengths.begin(), lengths.end(), 0.0) / count;
  if (sets.size() > 1) {
    double ss = 0.0;
    for (const double l : lengths) ss += (l - m.mean_length) * (l - m.mean_length);
    m.std_length = std::sqrt(ss / (count - 1.0));
  }
  return m;
}

}  // namespace camp
