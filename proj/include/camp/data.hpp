#pragma once

#include "camp/common.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace camp {

/// Design matrix (n x d, rows are samples) and labels (length n).
///
/// The matrix is held through a shared immutable pointer so that relabelled
/// copies (the augmented datasets of full conformal prediction differ only in
/// their last label) do not duplicate X.
class Dataset {
 public:
  Dataset(Matrix X, Vector y);
  Dataset(std::shared_ptr<const Matrix> X, Vector y);

  const Matrix& X() const { return *X_; }
  const Vector& y() const { return y_; }
  Index n() const { return X_->rows(); }
  Index d() const { return X_->cols(); }
  double alpha() const { return static_cast<double>(n()) / static_cast<double>(d()); }

  /// Same design matrix, new labels.
  Dataset with_labels(Vector y) const;
  /// Same data with the label of row i replaced.
  Dataset with_label(Index i, double value) const;
  /// Appends the pair (x, label) as the last row.
  Dataset augmented(const Vector& x, double label) const;
  /// Rows selected (and reordered) by `rows`.
  Dataset subset(const std::vector<Index>& rows) const;
  /// Drops row i.
  Dataset without_row(Index i) const;

  std::shared_ptr<const Matrix> shared_X() const { return X_; }

 private:
  std::shared_ptr<const Matrix> X_;
  Vector y_;
};

enum class TeacherPrior { Gaussian, Laplace };

struct SyntheticConfig {
  Index n = 100;
  Index d = 50;
  TeacherPrior teacher_prior = TeacherPrior::Gaussian;
  double noise_variance = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticData {
  Dataset data;
  Vector teacher;
};

/// x_i ~ N(0, I/d), teacher entries i.i.d. from the prior, y = X teacher + N(0, noise).
SyntheticData generate_synthetic(const SyntheticConfig& cfg);

/// Draws `count` fresh inputs x ~ N(0, I/d) and their noisy labels from an
/// existing teacher using `rng_seed`. Used for test points.
SyntheticData sample_from_teacher(const Vector& teacher, Index count, double noise_variance,
                                  std::uint64_t rng_seed);

Vector sample_teacher(Index d, TeacherPrior prior, std::uint64_t rng_seed);

/// Reads a comma-separated file with a header row. Features are z-scored
/// (population variance) and then multiplied by 1/sqrt(d); the target is
/// z-scored. Constant columns become zero.
Dataset load_csv(const std::filesystem::path& path, const std::string& target_column);

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Seeded shuffle of row indices; the first round(fraction * n) rows form the train part.
std::vector<Index> shuffled_rows(Index n, std::uint64_t seed);

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec);

}  // namespace camp
