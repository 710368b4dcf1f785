#include "camp/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace camp {

namespace {

void check_dataset(const Matrix& X, const Vector& y) {
  if (X.rows() < 1 || X.cols() < 1) {
    throw InvalidArgument("dataset needs n >= 1 and d >= 1");
  }
  if (X.rows() != y.size()) {
    throw InvalidArgument("row count of X (" + std::to_string(X.rows()) +
                          ") differs from label count (" + std::to_string(y.size()) + ")");
  }
  if (!X.allFinite()) throw InvalidArgument("X has non-finite entries");
  if (!y.allFinite()) throw InvalidArgument("y has non-finite entries");
}

double sample_prior(TeacherPrior prior, std::mt19937_64& rng) {
  if (prior == TeacherPrior::Gaussian) {
    return std::normal_distribution<double>(0.0, 1.0)(rng);
  }
  // Laplace(0, 1): exponential magnitude with a random sign.
  const double magnitude = std::exponential_distribution<double>(1.0)(rng);
  return std::bernoulli_distribution(0.5)(rng) ? magnitude : -magnitude;
}

Matrix gaussian_inputs(Index rows, Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(d)));
  Matrix X(rows, d);
  // Row-major fill so that the stream order does not depend on Eigen's storage.
  for (Index i = 0; i < rows; ++i) {
    for (Index mu = 0; mu < d; ++mu) X(i, mu) = normal(rng);
  }
  return X;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream stream(line);
  while (std::getline(stream, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_double(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

// Population z-score in place; constant columns become zero.
void standardize(Eigen::Ref<Vector> column) {
  const double n = static_cast<double>(column.size());
  const double mean = column.sum() / n;
  column.array() -= mean;
  const double var = column.squaredNorm() / n;
  if (var <= 1e-24 * (1.0 + mean * mean)) {
    column.setZero();
    return;
  }
  column /= std::sqrt(var);
}

}  // namespace

Dataset::Dataset(Matrix X, Vector y) : Dataset(std::make_shared<const Matrix>(std::move(X)), std::move(y)) {}

Dataset::Dataset(std::shared_ptr<const Matrix> X, Vector y) : X_(std::move(X)), y_(std::move(y)) {
  if (!X_) throw InvalidArgument("null design matrix");
  check_dataset(*X_, y_);
}

Dataset Dataset::with_labels(Vector y) const { return Dataset(X_, std::move(y)); }

Dataset Dataset::with_label(Index i, double value) const {
  if (i < 0 || i >= n()) throw InvalidArgument("row index out of range");
  Vector y = y_;
  y(i) = value;
  return Dataset(X_, std::move(y));
}

Dataset Dataset::augmented(const Vector& x, double label) const {
  if (x.size() != d()) throw InvalidArgument("test input has wrong dimension");
  Matrix X(n() + 1, d());
  X.topRows(n()) = *X_;
  X.row(n()) = x.transpose();
  Vector y(n() + 1);
  y.head(n()) = y_;
  y(n()) = label;
  return Dataset(std::move(X), std::move(y));
}

Dataset Dataset::subset(const std::vector<Index>& rows) const {
  Matrix X(static_cast<Index>(rows.size()), d());
  Vector y(static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Index i = rows[k];
    if (i < 0 || i >= n()) throw InvalidArgument("row index out of range");
    X.row(static_cast<Index>(k)) = X_->row(i);
    y(static_cast<Index>(k)) = y_(i);
  }
  return Dataset(std::move(X), std::move(y));
}

Dataset Dataset::without_row(Index i) const {
  if (n() < 2) throw InvalidArgument("cannot drop the only row");
  std::vector<Index> rows;
  rows.reserve(static_cast<std::size_t>(n() - 1));
  for (Index j = 0; j < n(); ++j) {
    if (j != i) rows.push_back(j);
  }
  return subset(rows);
}

void SyntheticConfig::validate() const {
  if (n < 1 || d < 1) throw InvalidArgument("synthetic config needs n >= 1 and d >= 1");
  if (!(noise_variance >= 0.0)) throw InvalidArgument("noise variance must be >= 0");
}

Vector sample_teacher(Index d, TeacherPrior prior, std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  Vector teacher(d);
  for (Index mu = 0; mu < d; ++mu) teacher(mu) = sample_prior(prior, rng);
  return teacher;
}

SyntheticData sample_from_teacher(const Vector& teacher, Index count, double noise_variance,
                                  std::uint64_t rng_seed) {
  if (count < 1) throw InvalidArgument("sample count must be >= 1");
  if (!(noise_variance >= 0.0)) throw InvalidArgument("noise variance must be >= 0");
  std::mt19937_64 rng(rng_seed);
  Matrix X = gaussian_inputs(count, teacher.size(), rng);
  Vector y = X * teacher;
  if (noise_variance > 0.0) {
    std::normal_distribution<double> noise(0.0, std::sqrt(noise_variance));
    for (Index i = 0; i < count; ++i) y(i) += noise(rng);
  }
  return {Dataset(std::move(X), std::move(y)), teacher};
}

SyntheticData generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  // Teacher and samples come from independent streams derived from one seed.
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32)};
  std::array<std::uint64_t, 2> streams{};
  std::array<std::uint32_t, 4> words{};
  seq.generate(words.begin(), words.end());
  streams[0] = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
  streams[1] = (static_cast<std::uint64_t>(words[2]) << 32) | words[3];
  Vector teacher = sample_teacher(cfg.d, cfg.teacher_prior, streams[0]);
  return sample_from_teacher(teacher, cfg.n, cfg.noise_variance, streams[1]);
}

Dataset load_csv(const std::filesystem::path& path, const std::string& target_column) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open CSV file '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw ParseError("CSV file '" + path.string() + "' is empty");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
  const std::vector<std::string> header = split_line(line);
  const auto target_it = std::find(header.begin(), header.end(), target_column);
  if (target_it == header.end()) {
    throw ParseError("target column '" + target_column + "' not found in header");
  }
  const auto target_index = static_cast<std::size_t>(target_it - header.begin());
  if (header.size() < 2) throw ParseError("CSV needs at least one feature column");

  std::vector<std::vector<double>> rows;
  std::size_t row_number = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row_number;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      throw ParseError("row " + std::to_string(row_number) + " has " + std::to_string(cells.size()) +
                       " cells, expected " + std::to_string(header.size()));
    }
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!parse_double(cells[c], values[c])) {
        throw ParseError("cannot parse '" + cells[c] + "' as a number at row " + std::to_string(row_number) +
                         ", column \"" + header[c] + "\"");
      }
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ParseError("CSV file has no data rows");

  const auto n = static_cast<Index>(rows.size());
  const auto d = static_cast<Index>(header.size() - 1);
  Matrix X(n, d);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    Index mu = 0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == target_index) {
        y(i) = row[c];
      } else {
        X(i, mu++) = row[c];
      }
    }
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (Index mu = 0; mu < d; ++mu) {
    standardize(X.col(mu));
    X.col(mu) *= scale;
  }
  standardize(y);
  return Dataset(std::move(X), std::move(y));
}

void SplitSpec::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidArgument("train fraction must lie in (0, 1)");
  }
}

std::vector<Index> shuffled_rows(Index n, std::uint64_t seed) {
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit uniform draw so the order is portable.
  for (std::size_t k = order.size(); k > 1; --k) {
    const auto j = static_cast<std::size_t>(rng() % k);
    std::swap(order[k - 1], order[j]);
  }
  return order;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
  spec.validate();
  if (ds.n() < 2) throw InvalidArgument("split needs at least two rows");
  const std::vector<Index> order = shuffled_rows(ds.n(), spec.seed);
  auto train_size = static_cast<Index>(std::llround(spec.train_fraction * static_cast<double>(ds.n())));
  train_size = std::clamp<Index>(train_size, 1, ds.n() - 1);
  const auto mid = order.begin() + train_size;
  return {ds.subset(std::vector<Index>(order.begin(), mid)), ds.subset(std::vector<Index>(mid, order.end()))};
}

}  // namespace camp
