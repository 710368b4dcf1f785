#include "camp/data.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

using namespace camp;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& contents) {
  const auto path = std::filesystem::temp_directory_path() / ("camp_test_" + name);
  std::ofstream(path) << contents;
  return path;
}

}  // namespace

TEST_CASE("dataset rejects inconsistent or non-finite input") {
  CHECK_THROWS_AS(Dataset(Matrix::Zero(3, 2), Vector::Zero(2)), InvalidArgument);
  CHECK_THROWS_AS(Dataset(Matrix::Zero(0, 2), Vector::Zero(0)), InvalidArgument);
  Matrix X = Matrix::Ones(2, 2);
  X(1, 1) = std::nan("");
  CHECK_THROWS_AS(Dataset(X, Vector::Zero(2)), InvalidArgument);
  Vector y = Vector::Zero(2);
  y(0) = INFINITY;
  CHECK_THROWS_AS(Dataset(Matrix::Ones(2, 2), y), InvalidArgument);
}

TEST_CASE("dataset derived views") {
  Matrix X(3, 2);
  X << 1, 2, 3, 4, 5, 6;
  const Dataset ds(X, Vector::LinSpaced(3, 0, 2));
  CHECK(ds.alpha() == doctest::Approx(1.5));

  const Dataset aug = ds.augmented(Vector::Constant(2, 9.0), 7.0);
  CHECK(aug.n() == 4);
  CHECK(aug.X()(3, 1) == 9.0);
  CHECK(aug.y()(3) == 7.0);

  const Dataset relabelled = aug.with_label(3, -1.0);
  CHECK(relabelled.y()(3) == -1.0);
  CHECK(relabelled.shared_X() == aug.shared_X());

  const Dataset dropped = ds.without_row(1);
  CHECK(dropped.n() == 2);
  CHECK(dropped.X()(1, 0) == 5.0);
  CHECK(dropped.y()(1) == 2.0);

  const Dataset picked = ds.subset({2, 0});
  CHECK(picked.X()(0, 0) == 5.0);
  CHECK(picked.y()(1) == 0.0);
}

TEST_CASE("synthetic data: shape and per-column variance near 1/d") {
  SyntheticConfig cfg;
  cfg.n = 100;
  cfg.d = 50;
  cfg.seed = 7;
  const SyntheticData sd = generate_synthetic(cfg);
  REQUIRE(sd.data.n() == 100);
  REQUIRE(sd.data.d() == 50);
  REQUIRE(sd.teacher.size() == 50);
  const double d = 50.0;
  for (Index mu = 0; mu < 50; ++mu) {
    const auto col = sd.data.X().col(mu).array();
    const double var = (col - col.mean()).square().sum() / 99.0;
    CHECK(var >= 0.5 / d);
    CHECK(var <= 1.5 / d);
  }
}

TEST_CASE("synthetic data: noiseless labels equal X teacher") {
  for (const TeacherPrior prior : {TeacherPrior::Gaussian, TeacherPrior::Laplace}) {
    SyntheticConfig cfg;
    cfg.n = 40;
    cfg.d = 30;
    cfg.noise_variance = 0.0;
    cfg.teacher_prior = prior;
    cfg.seed = 11;
    const SyntheticData sd = generate_synthetic(cfg);
    const Vector residual = sd.data.y() - sd.data.X() * sd.teacher;
    CHECK(residual.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("synthetic data: seeded determinism") {
  SyntheticConfig cfg;
  cfg.seed = 123;
  const SyntheticData a = generate_synthetic(cfg);
  const SyntheticData b = generate_synthetic(cfg);
  CHECK(a.data.X() == b.data.X());
  CHECK(a.data.y() == b.data.y());
  CHECK(a.teacher == b.teacher);
  cfg.seed = 124;
  CHECK(generate_synthetic(cfg).data.X() != a.data.X());
}

TEST_CASE("synthetic data: entry moments as n d grows") {
  SyntheticConfig cfg;
  cfg.n = 200;
  cfg.d = 100;
  cfg.seed = 5;
  const SyntheticData sd = generate_synthetic(cfg);
  const auto x = sd.data.X().array();
  const double count = static_cast<double>(x.size());
  const double mean = x.sum() / count;
  const double var = (x - mean).square().sum() / count;
  CHECK(std::abs(mean) < 0.3 / std::sqrt(100.0));
  CHECK(var == doctest::Approx(1.0 / 100.0).epsilon(0.3));
}

TEST_CASE("synthetic data: teacher priors have unit-scale moments") {
  const Vector g = sample_teacher(20000, TeacherPrior::Gaussian, 1);
  const Vector l = sample_teacher(20000, TeacherPrior::Laplace, 1);
  CHECK(g.squaredNorm() / 20000.0 == doctest::Approx(1.0).epsilon(0.05));
  // Laplace(0, 1): E|z| = 1, E z^2 = 2
  CHECK(l.cwiseAbs().sum() / 20000.0 == doctest::Approx(1.0).epsilon(0.05));
  CHECK(l.squaredNorm() / 20000.0 == doctest::Approx(2.0).epsilon(0.08));
}

TEST_CASE("synthetic config validation") {
  SyntheticConfig cfg;
  cfg.n = 0;
  CHECK_THROWS_AS(generate_synthetic(cfg), InvalidArgument);
  cfg.n = 5;
  cfg.d = 0;
  CHECK_THROWS_AS(generate_synthetic(cfg), InvalidArgument);
  cfg.d = 5;
  cfg.noise_variance = -1.0;
  CHECK_THROWS_AS(generate_synthetic(cfg), InvalidArgument);
}

TEST_CASE("load_csv: hand-computed z-scores") {
  const auto path = write_temp("zscore.csv", "x,target\n1,10\n2,20\n3,30\n");
  const Dataset ds = load_csv(path, "target");
  REQUIRE(ds.n() == 3);
  REQUIRE(ds.d() == 1);
  const double z = std::sqrt(1.5);  // (3 - 2) / sqrt(2/3)
  CHECK(ds.X()(0, 0) == doctest::Approx(-z).epsilon(1e-12));
  CHECK(ds.X()(1, 0) == doctest::Approx(0.0));
  CHECK(ds.X()(2, 0) == doctest::Approx(z).epsilon(1e-12));
  CHECK(ds.X()(0, 0) == doctest::Approx(-1.2247).epsilon(1e-4));
  CHECK(ds.y()(2) == doctest::Approx(z).epsilon(1e-12));
}

TEST_CASE("load_csv: constant column becomes zeros") {
  const auto path = write_temp("constant.csv", "a,b,y\n4,1,0\n4,2,1\n4,3,5\n");
  const Dataset ds = load_csv(path, "y");
  REQUIRE(ds.d() == 2);
  CHECK(ds.X().col(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(ds.X().col(1).allFinite());
}

TEST_CASE("load_csv: parse error names row and column") {
  const auto path = write_temp("bad.csv", "height,age,y\n1.0,30,2\n2.0,abc,3\n");
  try {
    load_csv(path, "y");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 2") != std::string::npos);
    CHECK(msg.find("\"age\"") != std::string::npos);
  }
}

TEST_CASE("load_csv: error paths") {
  CHECK_THROWS_AS(load_csv("/nonexistent/file.csv", "y"), ParseError);
  const auto path = write_temp("notarget.csv", "a,b\n1,2\n3,4\n");
  CHECK_THROWS_AS(load_csv(path, "y"), ParseError);
  const auto ragged = write_temp("ragged.csv", "a,y\n1,2\n3\n");
  CHECK_THROWS_AS(load_csv(ragged, "y"), ParseError);
}

TEST_CASE("load_csv: columns have zero mean and variance 1/d") {
  std::string text = "f1,f2,f3,f4,target\n";
  for (int i = 0; i < 25; ++i) {
    text += std::to_string(i * 0.7) + "," + std::to_string((i * 37) % 11) + "," + std::to_string(std::sin(i)) + "," +
            std::to_string(i * i) + "," + std::to_string(3.0 * i - 2.0) + "\n";
  }
  const Dataset ds = load_csv(write_temp("moments.csv", text), "target");
  REQUIRE(ds.d() == 4);
  for (Index mu = 0; mu < ds.d(); ++mu) {
    const auto col = ds.X().col(mu).array();
    const double mean = col.mean();
    const double var = (col - mean).square().mean();
    CHECK(std::abs(mean) <= 1e-10);
    CHECK(std::abs(var - 0.25) <= 1e-10);
  }
  CHECK(std::abs(ds.y().mean()) <= 1e-10);
}

TEST_CASE("split: sizes, determinism and prefix property") {
  const Dataset ds(Matrix::Random(10, 3), Vector::LinSpaced(10, 0, 9));
  const auto [train, test] = split(ds, {0.8, 42});
  CHECK(train.n() == 8);
  CHECK(test.n() == 2);

  const auto [train2, test2] = split(ds, {0.8, 42});
  CHECK(train.y() == train2.y());
  CHECK(test.y() == test2.y());

  // Labels are row ids, so they expose the row order of each part.
  const auto order = shuffled_rows(10, 42);
  const auto [half, rest] = split(ds, {0.5, 42});
  REQUIRE(half.n() == 5);
  for (Index k = 0; k < 5; ++k) CHECK(half.y()(k) == static_cast<double>(order[static_cast<std::size_t>(k)]));
  for (Index k = 0; k < 5; ++k) CHECK(train.y()(k) == half.y()(k));
}

TEST_CASE("split: partition of the rows") {
  const Dataset ds(Matrix::Random(37, 2), Vector::LinSpaced(37, 0, 36));
  const auto [train, test] = split(ds, {0.7, 9});
  std::vector<double> all;
  for (Index i = 0; i < train.n(); ++i) all.push_back(train.y()(i));
  for (Index i = 0; i < test.n(); ++i) all.push_back(test.y()(i));
  std::sort(all.begin(), all.end());
  REQUIRE(all.size() == 37);
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == static_cast<double>(i));
}

TEST_CASE("split: error paths") {
  const Dataset one(Matrix::Ones(1, 2), Vector::Ones(1));
  CHECK_THROWS_AS(split(one, {0.8, 0}), InvalidArgument);
  const Dataset ds(Matrix::Ones(4, 2), Vector::Ones(4));
  CHECK_THROWS_AS(split(ds, {0.0, 0}), InvalidArgument);
  CHECK_THROWS_AS(split(ds, {1.0, 0}), InvalidArgument);
}
