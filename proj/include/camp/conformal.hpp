#pragma once

#include "camp/amp.hpp"
#include "camp/common.hpp"
#include "camp/data.hpp"
#include "camp/exact.hpp"
#include "camp/glm.hpp"
#include "camp/taylor.hpp"

#include <optional>
#include <string>
#include <vector>

namespace camp {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  bool contains(double v) const { return lo <= v && v <= hi; }
  bool operator==(const Interval&) const = default;
};

/// Uniform candidate labels center - half_width ... center + half_width.
struct LabelGrid {
  double center = 0.0;
  double half_width = 1.0;
  Index num_points = 200;

  void validate() const;
  double spacing() const;
  Vector points() const;
};

/// A set of labels. Grid-based sets keep their inclusion mask; each included
/// grid point stands for the cell of one spacing around it, so maximal runs of
/// included points become closed intervals [first - h/2, last + h/2].
class PredictionSet {
 public:
  PredictionSet() = default;
  static PredictionSet from_mask(const LabelGrid& grid, std::vector<bool> included);
  static PredictionSet from_intervals(std::vector<Interval> intervals);

  const std::vector<Interval>& intervals() const { return intervals_; }
  const std::optional<LabelGrid>& grid() const { return grid_; }
  const std::vector<bool>& included() const { return included_; }

  bool empty() const { return intervals_.empty(); }
  double length() const;
  bool contains(double label) const;
  /// True when an end point of the grid is included, i.e. the set may extend past the grid.
  bool touches_grid_boundary() const;

 private:
  std::optional<LabelGrid> grid_;
  std::vector<bool> included_;
  std::vector<Interval> intervals_;
};

enum class Backend { ExactLoo, Amp, TaylorAmp, Scp };

std::string to_string(Backend b);
Backend backend_from_string(const std::string& name);

struct ConformalConfig {
  double kappa = 0.1;
  LabelGrid grid;
  Backend backend = Backend::TaylorAmp;

  void validate() const;
};

/// Solver settings shared by the backends.
struct SolverOptions {
  AmpOptions amp;
  TaylorOptions taylor;
  ErmOptions erm;
};

/// Rank used by the inclusion rule: min(m, ceil((1 - kappa) m)).
Index conformal_rank(Index m, double kappa);

/// k-th smallest score with k = conformal_rank(scores.size(), kappa).
double conformal_threshold(const Vector& scores, double kappa);

/// Grid centred on the prediction of the exact fit on `train`, with half width
/// 5 (1 + std of training residuals).
LabelGrid default_grid(const Dataset& train, const Vector& x_test, const GlmSpec& spec, Index num_points = 200,
                       const ErmOptions& erm = {});

/// Full conformal prediction set over cfg.grid.
PredictionSet fcp_predict(const Dataset& train, const Vector& x_test, const GlmSpec& spec, const ConformalConfig& cfg,
                          const SolverOptions& solver = {});

/// Fitted split-conformal model: every test point gets [theta^T x - Q, theta^T x + Q].
struct ScpModel {
  Vector theta;
  double quantile = 0.0;
  Index calibration_size = 0;
};

ScpModel scp_calibrate(const Dataset& ds, const GlmSpec& spec, double kappa, const SplitSpec& split_spec,
                       const ErmOptions& erm = {});
PredictionSet scp_interval(const ScpModel& model, const Vector& x_test);
PredictionSet scp_predict(const Dataset& ds, const Vector& x_test, const GlmSpec& spec, double kappa,
                          const SplitSpec& split_spec, const ErmOptions& erm = {});

/// Lebesgue measure of intersection over union; two empty sets give 1.
double jaccard(const PredictionSet& a, const PredictionSet& b);

struct Metrics {
  double coverage = 0.0;
  double mean_length = 0.0;
  double std_length = 0.0;
};

Metrics evaluate(const std::vector<PredictionSet>& sets, const Vector& y_true);

}  // namespace camp
