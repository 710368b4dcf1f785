#include "camp/bench.hpp"

#include "camp/bayes.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace camp {

using nlohmann::json;

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::Length: return "length";
    case Experiment::Jaccard: return "jaccard";
    case Experiment::BayesCompare: return "bayes-compare";
    case Experiment::Timing: return "timing";
    case Experiment::RealData: return "real-data";
    case Experiment::Coverage: return "coverage";
  }
  return "unknown";
}

Experiment experiment_from_string(const std::string& name) {
  std::string key = name;
  std::replace(key.begin(), key.end(), '_', '-');
  for (const Experiment e : {Experiment::Length, Experiment::Jaccard, Experiment::BayesCompare, Experiment::Timing,
                             Experiment::RealData, Experiment::Coverage}) {
    if (key == to_string(e)) return e;
  }
  throw InvalidArgument("unknown experiment '" + name + "'");
}

void ExperimentConfig::validate() const {
  glm.validate();
  if (!(kappa > 0.0 && kappa < 1.0)) throw InvalidArgument("kappa must lie in (0, 1)");
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
  if (test_samples < 0 || (experiment != Experiment::RealData && test_samples < 1)) {
    throw InvalidArgument("test_samples must be >= 1");
  }
  if (grid_points < 2) throw InvalidArgument("grid_points must be >= 2");
  if (!(scp_train_fraction > 0.0 && scp_train_fraction < 1.0)) {
    throw InvalidArgument("scp_train_fraction must lie in (0, 1)");
  }
  if (!(amp_tol > 0.0) || amp_max_iter < 1) throw InvalidArgument("invalid AMP tolerance or iteration cap");
  if (!(amp_damping >= 0.0 && amp_damping < 1.0)) throw InvalidArgument("amp damping must lie in [0, 1)");
  if (!(retry_damping >= 0.0 && retry_damping < 1.0)) throw InvalidArgument("retry_damping must lie in [0, 1)");
  if (experiment == Experiment::RealData) {
    if (!csv_path) throw InvalidArgument("real-data experiment needs data.csv_path");
    if (!std::filesystem::exists(*csv_path)) throw InvalidArgument("csv file not found: " + *csv_path);
    if (target_column.empty()) throw InvalidArgument("real-data experiment needs data.target_column");
    SplitSpec{train_fraction, 0}.validate();
  } else {
    if (csv_path) throw InvalidArgument("data.csv_path is only used by the real-data experiment");
    data.validate();
  }
  if (experiment == Experiment::Timing) {
    if (dimensions.empty()) throw InvalidArgument("timing experiment needs at least one dimension");
    for (const Index d : dimensions) {
      if (d < 1 || std::llround(alpha * static_cast<double>(d)) < 2) {
        throw InvalidArgument("timing dimensions must give n = round(alpha d) >= 2");
      }
    }
    if (timing_repetitions < 1 || exact_repetitions < 1) throw InvalidArgument("repetitions must be >= 1");
  }
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be > 0");
  for (const Backend b : methods()) {
    if (experiment == Experiment::BayesCompare && b == Backend::Scp) {
      throw InvalidArgument("bayes-compare compares full conformal backends only");
    }
  }
}

std::vector<Backend> ExperimentConfig::methods() const {
  if (!backends.empty()) return backends;
  switch (experiment) {
    case Experiment::Length:
    case Experiment::Jaccard: return {Backend::ExactLoo, Backend::TaylorAmp, Backend::Scp};
    case Experiment::Timing: return {Backend::TaylorAmp, Backend::ExactLoo};
    case Experiment::RealData: return {Backend::Amp, Backend::TaylorAmp, Backend::Scp};
    case Experiment::BayesCompare:
    case Experiment::Coverage: return {Backend::TaylorAmp};
  }
  return {};
}

SolverOptions ExperimentConfig::solver_options(double damping) const {
  SolverOptions s;
  s.amp.tol = amp_tol;
  s.amp.max_iter = static_cast<std::size_t>(amp_max_iter);
  s.amp.damping = damping;
  s.taylor.max_iter = static_cast<std::size_t>(amp_max_iter);
  s.taylor.damping = damping;
  return s;
}

// ---------------------------------------------------------------- config JSON

namespace {

std::string prior_name(TeacherPrior p) { return p == TeacherPrior::Gaussian ? "gaussian" : "laplace"; }

TeacherPrior prior_from_string(const std::string& s) {
  if (s == "gaussian") return TeacherPrior::Gaussian;
  if (s == "laplace") return TeacherPrior::Laplace;
  throw InvalidArgument("unknown teacher_prior '" + s + "'");
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw InvalidArgument(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      throw InvalidArgument("unknown field '" + key + "' in " + where);
    }
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument(std::string("config field '") + key + "' has the wrong type");
  }
}

}  // namespace

json to_json(const ExperimentConfig& cfg) {
  json data{{"n", cfg.data.n},
            {"d", cfg.data.d},
            {"teacher_prior", prior_name(cfg.data.teacher_prior)},
            {"noise_variance", cfg.data.noise_variance}};
  if (cfg.csv_path) {
    data["csv_path"] = *cfg.csv_path;
    data["target_column"] = cfg.target_column;
  }
  json backends = json::array();
  for (const Backend b : cfg.backends) backends.push_back(to_string(b));
  return json{{"experiment", to_string(cfg.experiment)},
              {"glm", {{"regularizer", to_string(cfg.glm.regularizer)}, {"lambda", cfg.glm.lambda}}},
              {"data", data},
              {"kappa", cfg.kappa},
              {"trials", cfg.trials},
              {"test_samples", cfg.test_samples},
              {"seed", cfg.seed},
              {"output", cfg.output},
              {"grid_points", cfg.grid_points},
              {"backends", backends},
              {"dimensions", cfg.dimensions},
              {"alpha", cfg.alpha},
              {"timing_repetitions", cfg.timing_repetitions},
              {"exact_repetitions", cfg.exact_repetitions},
              {"scp_train_fraction", cfg.scp_train_fraction},
              {"train_fraction", cfg.train_fraction},
              {"amp",
               {{"tol", cfg.amp_tol},
                {"max_iter", cfg.amp_max_iter},
                {"damping", cfg.amp_damping},
                {"retry_damping", cfg.retry_damping}}}};
}

ExperimentConfig config_from_json(const json& j, ExperimentConfig cfg) {
  reject_unknown(j,
                 {"experiment", "glm", "data", "kappa", "trials", "test_samples", "seed", "output", "grid_points",
                  "backends", "dimensions", "alpha", "timing_repetitions", "exact_repetitions",
                  "scp_train_fraction", "train_fraction", "amp"},
                 "config");
  if (j.contains("experiment")) {
    std::string name;
    read(j, "experiment", name);
    cfg.experiment = experiment_from_string(name);
  }
  if (j.contains("glm")) {
    const json& g = j.at("glm");
    reject_unknown(g, {"regularizer", "lambda"}, "glm");
    if (g.contains("regularizer")) {
      std::string name;
      read(g, "regularizer", name);
      cfg.glm.regularizer = regularizer_from_string(name);
    }
    read(g, "lambda", cfg.glm.lambda);
  }
  if (j.contains("data")) {
    const json& d = j.at("data");
    reject_unknown(d, {"n", "d", "teacher_prior", "noise_variance", "csv_path", "target_column"}, "data");
    read(d, "n", cfg.data.n);
    read(d, "d", cfg.data.d);
    if (d.contains("teacher_prior")) {
      std::string name;
      read(d, "teacher_prior", name);
      cfg.data.teacher_prior = prior_from_string(name);
    }
    read(d, "noise_variance", cfg.data.noise_variance);
    if (d.contains("csv_path")) {
      std::string path;
      read(d, "csv_path", path);
      cfg.csv_path = path;
    }
    read(d, "target_column", cfg.target_column);
  }
  read(j, "kappa", cfg.kappa);
  read(j, "trials", cfg.trials);
  read(j, "test_samples", cfg.test_samples);
  read(j, "seed", cfg.seed);
  read(j, "output", cfg.output);
  read(j, "grid_points", cfg.grid_points);
  if (j.contains("backends")) {
    std::vector<std::string> names;
    read(j, "backends", names);
    cfg.backends.clear();
    for (const auto& name : names) cfg.backends.push_back(backend_from_string(name));
  }
  read(j, "dimensions", cfg.dimensions);
  read(j, "alpha", cfg.alpha);
  read(j, "timing_repetitions", cfg.timing_repetitions);
  read(j, "exact_repetitions", cfg.exact_repetitions);
  read(j, "scp_train_fraction", cfg.scp_train_fraction);
  read(j, "train_fraction", cfg.train_fraction);
  if (j.contains("amp")) {
    const json& a = j.at("amp");
    reject_unknown(a, {"tol", "max_iter", "damping", "retry_damping"}, "amp");
    read(a, "tol", cfg.amp_tol);
    read(a, "max_iter", cfg.amp_max_iter);
    read(a, "damping", cfg.amp_damping);
    read(a, "retry_damping", cfg.retry_damping);
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j, std::move(base));
}

// ---------------------------------------------------------------- report JSON

namespace {

bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.at(key).get<double>();
}

}  // namespace

bool MethodMetrics::operator==(const MethodMetrics& o) const {
  const bool jaccard_equal = mean_jaccard.has_value() == o.mean_jaccard.has_value() &&
                             (!mean_jaccard || same(*mean_jaccard, *o.mean_jaccard));
  return method == o.method && same(coverage, o.coverage) && same(mean_length, o.mean_length) &&
         same(std_length, o.std_length) && jaccard_equal && same(wall_time_seconds, o.wall_time_seconds) &&
         evaluations == o.evaluations && failures == o.failures && retries == o.retries &&
         boundary_hits == o.boundary_hits && dimension == o.dimension;
}

const MethodMetrics* Report::find(const std::string& method) const {
  for (const MethodMetrics& m : methods) {
    if (m.method == method) return &m;
  }
  return nullptr;
}

json to_json(const Report& r) {
  json methods = json::array();
  for (const MethodMetrics& m : r.methods) {
    json row{{"method", m.method},
             {"coverage", number(m.coverage)},
             {"mean_length", number(m.mean_length)},
             {"std_length", number(m.std_length)},
             {"mean_jaccard", m.mean_jaccard ? number(*m.mean_jaccard) : json(nullptr)},
             {"wall_time_seconds", number(m.wall_time_seconds)},
             {"evaluations", m.evaluations},
             {"failures", m.failures},
             {"retries", m.retries},
             {"boundary_hits", m.boundary_hits}};
    if (m.dimension) row["dimension"] = *m.dimension;
    methods.push_back(std::move(row));
  }
  return json{{"experiment", r.experiment}, {"seed", r.seed},       {"version", r.version},
              {"config", r.config},         {"methods", methods}, {"notes", r.notes}};
}

Report report_from_json(const json& j) {
  Report r;
  try {
    r.experiment = j.at("experiment").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.version = j.at("version").get<std::string>();
    r.config = j.at("config");
    if (j.contains("notes")) r.notes = j.at("notes").get<std::vector<std::string>>();
    for (const json& row : j.at("methods")) {
      MethodMetrics m;
      m.method = row.at("method").get<std::string>();
      m.coverage = number_from(row, "coverage");
      m.mean_length = number_from(row, "mean_length");
      m.std_length = number_from(row, "std_length");
      if (row.contains("mean_jaccard") && !row.at("mean_jaccard").is_null()) {
        m.mean_jaccard = row.at("mean_jaccard").get<double>();
      }
      m.wall_time_seconds = number_from(row, "wall_time_seconds");
      m.evaluations = row.at("evaluations").get<Index>();
      m.failures = row.at("failures").get<Index>();
      m.retries = row.at("retries").get<Index>();
      m.boundary_hits = row.value("boundary_hits", Index{0});
      if (row.contains("dimension")) m.dimension = row.at("dimension").get<Index>();
      r.methods.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed report: ") + e.what());
  }
  return r;
}

ReportFormat report_format_from_string(const std::string& name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  throw InvalidArgument("unknown report format '" + name + "'");
}

std::string csv_header() { return "method,coverage,mean_length,std_length,mean_jaccard,wall_time_seconds"; }

std::string to_csv(const Report& r) {
  const auto cell = [](double v) {
    if (!std::isfinite(v)) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return std::string(buf);
  };
  std::ostringstream out;
  out << csv_header() << '\n';
  for (const MethodMetrics& m : r.methods) {
    out << m.method << ',' << cell(m.coverage) << ',' << cell(m.mean_length) << ',' << cell(m.std_length) << ','
        << (m.mean_jaccard ? cell(*m.mean_jaccard) : std::string()) << ',' << cell(m.wall_time_seconds) << '\n';
  }
  return out.str();
}

std::filesystem::path emit_report(const Report& report, ReportFormat format, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  const std::filesystem::path path = directory / (format == ReportFormat::Json ? "report.json" : "report.csv");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  if (format == ReportFormat::Json) {
    out << to_json(report).dump(2) << '\n';
  } else {
    out << to_csv(report);
  }
  if (!out) throw std::runtime_error("failed while writing " + path.string());
  return path;
}

unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CONFORMAL_AMP_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return hw;
}

// ---------------------------------------------------------------- experiments

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t trial, std::uint64_t stream) {
  return splitmix(splitmix(splitmix(seed) ^ trial) ^ stream);
}

enum Stream : std::uint64_t { kData = 0, kTest = 1, kSplit = 2, kScp = 3 };

// One prediction set for one test point.
struct Record {
  bool ok = false;
  bool covered = false;
  bool retried = false;
  bool boundary = false;
  double length = 0.0;
  double seconds = 0.0;
  std::optional<double> jaccard;
  std::string error;
};

using Predictor = std::function<PredictionSet(const SolverOptions&)>;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Record attempt(const Predictor& predict, const ExperimentConfig& cfg, double y_true, PredictionSet* out = nullptr) {
  Record r;
  PredictionSet set;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    set = predict(cfg.solver_options(cfg.amp_damping));
  } catch (const std::exception& first) {
    if (!(cfg.retry_damping > cfg.amp_damping)) {
      r.error = first.what();
      return r;
    }
    try {
      set = predict(cfg.solver_options(cfg.retry_damping));
      r.retried = true;
    } catch (const std::exception& second) {
      r.error = second.what();
      return r;
    }
  }
  r.seconds = seconds_since(t0);
  r.ok = true;
  r.covered = set.contains(y_true);
  r.length = set.length();
  r.boundary = set.touches_grid_boundary();
  if (out != nullptr) *out = std::move(set);
  return r;
}

Predictor make_predictor(Backend backend, const Dataset& train, const Vector& x, const ExperimentConfig& cfg,
                         const LabelGrid& grid, std::uint64_t scp_seed) {
  if (backend == Backend::Scp) {
    return [&train, x, &cfg, scp_seed](const SolverOptions& s) {
      return scp_predict(train, x, cfg.glm, cfg.kappa, SplitSpec{cfg.scp_train_fraction, scp_seed}, s.erm);
    };
  }
  return [&train, x, &cfg, grid, backend](const SolverOptions& s) {
    ConformalConfig cc{cfg.kappa, grid, backend};
    return fcp_predict(train, x, cfg.glm, cc, s);
  };
}

// Records of one trial, keyed by method name in a fixed order.
struct TrialResult {
  std::vector<std::vector<Record>> per_method;
};

// Evaluates every method on the test points (rows of X_test).
TrialResult run_test_points(const Dataset& train, const Matrix& X_test, const Vector& y_test,
                            const ExperimentConfig& cfg, std::uint64_t trial, bool with_bayes) {
  const std::vector<Backend> methods = cfg.methods();
  const std::size_t extra = with_bayes ? 1 : 0;
  TrialResult result;
  result.per_method.resize(methods.size() + extra);
  const auto exact_pos = std::find(methods.begin(), methods.end(), Backend::ExactLoo);
  const bool compare = cfg.experiment == Experiment::Jaccard && exact_pos != methods.end();
  const auto exact_index = static_cast<std::size_t>(exact_pos - methods.begin());

  for (Index j = 0; j < X_test.rows(); ++j) {
    const Vector x = X_test.row(j).transpose();
    const double y_true = y_test(j);
    std::optional<LabelGrid> grid;
    std::string grid_error;
    try {
      grid = default_grid(train, x, cfg.glm, cfg.grid_points);
    } catch (const std::exception& e) {
      grid_error = e.what();
    }
    std::vector<PredictionSet> sets(methods.size());
    for (std::size_t m = 0; m < methods.size(); ++m) {
      if (!grid && methods[m] != Backend::Scp) {
        Record failed;
        failed.error = grid_error;
        result.per_method[m].push_back(failed);
        continue;
      }
      const LabelGrid g = grid.value_or(LabelGrid{});
      const Predictor predict =
          make_predictor(methods[m], train, x, cfg, g, derive_seed(cfg.seed, trial, kScp + static_cast<std::uint64_t>(j)));
      result.per_method[m].push_back(attempt(predict, cfg, y_true, &sets[m]));
    }
    if (compare && result.per_method[exact_index].back().ok) {
      for (std::size_t m = 0; m < methods.size(); ++m) {
        if (m != exact_index && result.per_method[m].back().ok) {
          result.per_method[m].back().jaccard = jaccard(sets[exact_index], sets[m]);
        }
      }
    }
    if (with_bayes) {
      const BayesConfig bc{cfg.data.teacher_prior, cfg.data.noise_variance, cfg.kappa};
      const Predictor predict = [&train, x, bc](const SolverOptions& s) {
        const PredictiveInterval pi = bc.prior == TeacherPrior::Gaussian ? bayes_interval_gaussian(train, x, bc)
                                                                         : bayes_interval_laplace(train, x, bc, s.amp);
        return PredictionSet::from_intervals({pi.interval});
      };
      result.per_method.back().push_back(attempt(predict, cfg, y_true));
    }
  }
  return result;
}

template <class Fn>
std::vector<TrialResult> parallel_trials(Index trials, unsigned workers, Fn&& fn) {
  std::vector<TrialResult> results(static_cast<std::size_t>(trials));
  std::atomic<Index> next{0};
  const auto work = [&] {
    for (Index t = next++; t < trials; t = next++) results[static_cast<std::size_t>(t)] = fn(t);
  };
  const unsigned count = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(trials)));
  if (count == 1) {
    work();
    return results;
  }
  std::vector<std::thread> pool;
  pool.reserve(count);
  for (unsigned w = 0; w < count; ++w) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  return results;
}

MethodMetrics aggregate(const std::string& name, const std::vector<Record>& records) {
  MethodMetrics m;
  m.method = name;
  m.evaluations = static_cast<Index>(records.size());
  std::vector<double> lengths;
  std::vector<double> jaccards;
  double seconds = 0.0;
  Index covered = 0;
  for (const Record& r : records) {
    if (!r.ok) {
      ++m.failures;
      continue;
    }
    if (r.retried) ++m.retries;
    if (r.boundary) ++m.boundary_hits;
    if (r.covered) ++covered;
    lengths.push_back(r.length);
    seconds += r.seconds;
    if (r.jaccard) jaccards.push_back(*r.jaccard);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto count = static_cast<double>(lengths.size());
  if (lengths.empty()) {
    m.coverage = m.mean_length = m.std_length = m.wall_time_seconds = nan;
    return m;
  }
  m.coverage = static_cast<double>(covered) / count;
  double sum = 0.0;
  for (const double l : lengths) sum += l;
  m.mean_length = sum / count;
  double ss = 0.0;
  for (const double l : lengths) ss += (l - m.mean_length) * (l - m.mean_length);
  m.std_length = lengths.size() > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;
  m.wall_time_seconds = seconds / count;
  if (!jaccards.empty()) {
    double js = 0.0;
    for (const double v : jaccards) js += v;
    m.mean_jaccard = js / static_cast<double>(jaccards.size());
  }
  return m;
}

void collect_notes(const std::vector<std::vector<Record>>& per_method, std::vector<std::string>& notes) {
  std::set<std::string> seen(notes.begin(), notes.end());
  for (const auto& records : per_method) {
    for (const Record& r : records) {
      if (!r.ok && !r.error.empty() && notes.size() < 10 && seen.insert(r.error).second) notes.push_back(r.error);
    }
  }
}

Report finish(const ExperimentConfig& cfg, const std::vector<std::string>& names, const std::vector<TrialResult>& trials) {
  Report report;
  report.experiment = to_string(cfg.experiment);
  report.seed = cfg.seed;
  report.config = to_json(cfg);
  std::vector<std::vector<Record>> merged(names.size());
  for (const TrialResult& t : trials) {
    for (std::size_t m = 0; m < names.size(); ++m) {
      merged[m].insert(merged[m].end(), t.per_method[m].begin(), t.per_method[m].end());
    }
  }
  for (std::size_t m = 0; m < names.size(); ++m) report.methods.push_back(aggregate(names[m], merged[m]));
  collect_notes(merged, report.notes);
  return report;
}

std::vector<std::string> method_names(const ExperimentConfig& cfg, bool with_bayes) {
  std::vector<std::string> names;
  for (const Backend b : cfg.methods()) names.push_back(to_string(b));
  if (with_bayes) names.emplace_back("bayes");
  return names;
}

Report run_synthetic(const ExperimentConfig& cfg) {
  const bool with_bayes = cfg.experiment == Experiment::BayesCompare;
  const auto trials = parallel_trials(cfg.trials, worker_count(), [&](Index t) {
    const auto trial = static_cast<std::uint64_t>(t);
    SyntheticConfig sc = cfg.data;
    sc.seed = derive_seed(cfg.seed, trial, kData);
    const SyntheticData train = generate_synthetic(sc);
    const SyntheticData test =
        sample_from_teacher(train.teacher, cfg.test_samples, cfg.data.noise_variance, derive_seed(cfg.seed, trial, kTest));
    return run_test_points(train.data, test.data.X(), test.data.y(), cfg, trial, with_bayes);
  });
  return finish(cfg, method_names(cfg, with_bayes), trials);
}

Report run_real_data(const ExperimentConfig& cfg) {
  const Dataset full = load_csv(*cfg.csv_path, cfg.target_column);
  const auto trials = parallel_trials(cfg.trials, worker_count(), [&](Index t) {
    const auto trial = static_cast<std::uint64_t>(t);
    const auto [train, test] = split(full, SplitSpec{cfg.train_fraction, derive_seed(cfg.seed, trial, kSplit)});
    const Index count = cfg.test_samples > 0 ? std::min(cfg.test_samples, test.n()) : test.n();
    return run_test_points(train, test.X().topRows(count), test.y().head(count), cfg, trial, false);
  });
  return finish(cfg, method_names(cfg, false), trials);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 == 1 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

Report run_timing(const ExperimentConfig& cfg) {
  Report report;
  report.experiment = to_string(cfg.experiment);
  report.seed = cfg.seed;
  report.config = to_json(cfg);
  std::vector<std::vector<Record>> all;
  for (const Index d : cfg.dimensions) {
    SyntheticConfig sc = cfg.data;
    sc.d = d;
    sc.n = static_cast<Index>(std::llround(cfg.alpha * static_cast<double>(d)));
    sc.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(d), kData);
    const SyntheticData train = generate_synthetic(sc);
    const SyntheticData test =
        sample_from_teacher(train.teacher, 1, sc.noise_variance, derive_seed(cfg.seed, static_cast<std::uint64_t>(d), kTest));
    const Vector x = test.data.X().row(0).transpose();
    const double y_true = test.data.y()(0);
    std::optional<LabelGrid> grid;
    std::string grid_error;
    try {
      grid = default_grid(train.data, x, cfg.glm, cfg.grid_points);
    } catch (const std::exception& e) {
      grid_error = e.what();
    }
    for (const Backend b : cfg.methods()) {
      const Index reps = b == Backend::ExactLoo ? cfg.exact_repetitions : cfg.timing_repetitions;
      std::vector<Record> records;
      std::vector<double> times;
      for (Index r = 0; r < reps; ++r) {
        if (!grid && b != Backend::Scp) {
          Record failed;
          failed.error = grid_error;
          records.push_back(failed);
          continue;
        }
        const Predictor predict =
            make_predictor(b, train.data, x, cfg, grid.value_or(LabelGrid{}), derive_seed(cfg.seed, 0, kScp));
        records.push_back(attempt(predict, cfg, y_true));
        if (records.back().ok) times.push_back(records.back().seconds);
      }
      MethodMetrics m = aggregate(to_string(b) + "@d" + std::to_string(d), records);
      m.dimension = d;
      if (!times.empty()) m.wall_time_seconds = median(times);
      report.methods.push_back(std::move(m));
      all.push_back(std::move(records));
    }
  }
  collect_notes(all, report.notes);
  return report;
}

}  // namespace

Report run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  switch (cfg.experiment) {
    case Experiment::Timing: return run_timing(cfg);
    case Experiment::RealData: return run_real_data(cfg);
    default: return run_synthetic(cfg);
  }
}

}  // namespace camp
