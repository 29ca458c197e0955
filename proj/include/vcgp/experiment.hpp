#ifndef VCGP_EXPERIMENT_HPP_
#define VCGP_EXPERIMENT_HPP_

#include "vcgp/baselines.hpp"
#include "vcgp/data_io.hpp"
#include "vcgp/error.hpp"
#include "vcgp/gp_classify.hpp"
#include "vcgp/gp_core.hpp"
#include "vcgp/kernels.hpp"
#include "vcgp/random.hpp"
#include "vcgp/serialization.hpp"
#include "vcgp/sparse_fitc.hpp"
#include "vcgp/tuning.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace vcgp {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

inline const std::vector<std::string> &method_names() {
  static const std::vector<std::string> names{
      "vcgp-lin",   "vcgp-mat",   "iid-lin",      "iid-mat",
      "concat-lin", "concat-mat", "fanzhang-lin", "fanzhang-mat"};
  return names;
}

struct SyntheticSource {
  Index total = 2000;
  Index m = 3;
  Index d = 1;
  MaternKernel task_kernel{Smoothness::ThreeHalves, {0.3}, 1.0, true};
  double tau2 = 0.1;
  double task_lo = 0.0;
  double task_hi = 1.0;
};

struct SplitConfig {
  enum class Kind { Blocked, KFold, Holdout };
  Kind kind = Kind::KFold;
  int num_blocks = 25;
  int window = 5;
  int k = 5;
  /// Holdout: test set size.
  Index test_size = 500;
};

struct KernelSettings {
  Smoothness nu = Smoothness::ThreeHalves;
  bool ard = false;
  double instance_lengthscale = 1.0;
  double task_lengthscale = 1.0;
  /// Task kernel for discrete task ids (tree or laplacian).
  std::optional<Json> discrete_task;
};

struct TuningSettings {
  SearchConfig::Method method = SearchConfig::Method::Gradient;
  int restarts = 5;
  int max_iterations = 200;
  double gradient_tolerance = 1e-5;
  double initial_tau2 = 0.1;
  /// Hyperparameters are tuned on at most this many training rows.
  Index subsample = 1000;
  std::vector<double> grid_lengthscales{0.1, 0.3, 1.0, 3.0};
  std::vector<double> grid_amplitudes{0.5, 1.0, 2.0};
  std::vector<double> grid_tau2{0.01, 0.1, 1.0};
};

struct FitcSettings {
  /// Exact inference up to p training rows, FITC with p inducing points above.
  Index p = 1000;
  std::optional<std::uint64_t> seed;
};

struct FanZhangSettings {
  FanZhangGrid grid{{0.1, 0.3, 1.0, 3.0, 10.0}, {1e-3, 1e-2, 1e-1, 1.0, 10.0},
                    3, 300};
  Index basis_points = 200;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::vector<std::string> methods;
  bool classification = false;
  /// Classification labels are y > threshold; unset means the median of y.
  std::optional<double> threshold;
  std::string data_path;
  Schema schema;
  PreprocessPolicy policy;
  std::optional<SyntheticSource> synthetic;
  bool standardize_features = true;
  bool standardize_target = true;
  bool add_bias = true;
  KernelSettings kernel;
  SplitConfig split;
  std::vector<Index> train_sizes;
  TuningSettings tuning;
  FitcSettings fitc;
  FanZhangSettings fanzhang;
  double budget_seconds = 0.0;
  std::string output;
};

namespace detail {

inline void reject_unknown_keys(const Json &j, const std::string &section,
                                const std::set<std::string> &allowed) {
  detail::require(j.is_object(), "config: '" + section + "' must be an object");
  for (const auto &item : j.items()) {
    if (!allowed.count(item.key())) {
      throw ParseError("config: unknown key '" + item.key() + "' in " +
                       section);
    }
  }
}

inline ColumnRole parse_role(const std::string &s) {
  static const std::map<std::string, ColumnRole> roles{
      {"feature", ColumnRole::Feature},      {"target", ColumnRole::Target},
      {"task_coord", ColumnRole::TaskCoord}, {"task_time", ColumnRole::TaskTime},
      {"task_id", ColumnRole::TaskId},       {"ignore", ColumnRole::Ignore}};
  const auto it = roles.find(s);
  if (it == roles.end()) {
    throw ParseError("config: unknown column role '" + s + "'");
  }
  return it->second;
}

inline ColumnType parse_type(const std::string &s) {
  if (s == "numeric") {
    return ColumnType::Numeric;
  }
  if (s == "categorical") {
    return ColumnType::Categorical;
  }
  if (s == "date") {
    return ColumnType::Date;
  }
  throw ParseError("config: unknown column type '" + s + "'");
}

} // namespace detail

/// Parses the JSON experiment config. Relative data paths resolve against
/// `base_dir`.
inline ExperimentConfig parse_experiment_config(const Json &j,
                                                const std::string &base_dir = {}) {
  using detail::reject_unknown_keys;
  reject_unknown_keys(j, "config",
                      {"seed", "method", "methods", "task", "threshold", "data",
                       "features", "kernel", "split", "train_sizes", "tuning",
                       "fitc", "fanzhang", "budget_seconds", "output"});
  ExperimentConfig c;
  try {
    c.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("methods")) {
      c.methods = j.at("methods").get<std::vector<std::string>>();
    }
    if (j.contains("method")) {
      c.methods.push_back(j.at("method").get<std::string>());
    }
    detail::require(!c.methods.empty(), "config: no method given");
    for (const auto &m : c.methods) {
      if (std::find(method_names().begin(), method_names().end(), m) ==
          method_names().end()) {
        throw ParseError("config: unknown method '" + m + "'");
      }
    }
    const auto task = j.value("task", std::string("regression"));
    detail::require(task == "regression" || task == "classification",
                    "config: task must be regression or classification");
    c.classification = task == "classification";
    if (j.contains("threshold") && !j.at("threshold").is_string()) {
      c.threshold = j.at("threshold").get<double>();
    } else if (j.contains("threshold") && j.at("threshold") != "median") {
      throw ParseError("config: threshold must be a number or \"median\"");
    }

    const Json &data = j.at("data");
    reject_unknown_keys(data, "data", {"path", "schema", "policy", "synthetic"});
    if (data.contains("synthetic")) {
      const Json &s = data.at("synthetic");
      reject_unknown_keys(s, "data.synthetic",
                          {"total", "m", "d", "task_kernel", "tau2", "task_lo",
                           "task_hi"});
      SyntheticSource src;
      src.total = s.value("total", src.total);
      src.m = s.value("m", src.m);
      src.d = s.value("d", src.d);
      if (s.contains("task_kernel")) {
        src.task_kernel = detail::matern_from_json(s.at("task_kernel"));
      }
      src.tau2 = s.value("tau2", src.tau2);
      src.task_lo = s.value("task_lo", src.task_lo);
      src.task_hi = s.value("task_hi", src.task_hi);
      c.synthetic = src;
    } else {
      c.data_path = data.at("path").get<std::string>();
      if (!base_dir.empty() && std::filesystem::path(c.data_path).is_relative()) {
        c.data_path = (std::filesystem::path(base_dir) / c.data_path).string();
      }
      for (const Json &col : data.at("schema")) {
        reject_unknown_keys(col, "data.schema entry", {"name", "role", "type"});
        c.schema.columns.push_back(
            {col.at("name").get<std::string>(),
             detail::parse_role(col.value("role", std::string("feature"))),
             detail::parse_type(col.value("type", std::string("numeric")))});
      }
      c.schema.validate();
      if (data.contains("policy")) {
        const Json &p = data.at("policy");
        reject_unknown_keys(p, "data.policy", {"brackets", "drop_missing"});
        c.policy.drop_missing = p.value("drop_missing", true);
        for (const Json &b : p.value("brackets", Json::array())) {
          reject_unknown_keys(b, "bracket", {"column", "min", "max"});
          Bracket br;
          br.column = b.at("column").get<std::string>();
          br.lo = b.value("min", br.lo);
          br.hi = b.value("max", br.hi);
          c.policy.brackets.push_back(br);
        }
      }
    }

    if (j.contains("features")) {
      const Json &f = j.at("features");
      reject_unknown_keys(f, "features",
                          {"standardize", "standardize_target", "add_bias"});
      c.standardize_features = f.value("standardize", true);
      c.standardize_target = f.value("standardize_target", true);
      c.add_bias = f.value("add_bias", true);
    }
    if (j.contains("kernel")) {
      const Json &k = j.at("kernel");
      reject_unknown_keys(k, "kernel",
                          {"nu", "ard", "instance_lengthscale",
                           "task_lengthscale", "task"});
      c.kernel.nu = smoothness_from_value(k.value("nu", 1.5));
      c.kernel.ard = k.value("ard", false);
      c.kernel.instance_lengthscale = k.value("instance_lengthscale", 1.0);
      c.kernel.task_lengthscale = k.value("task_lengthscale", 1.0);
      if (k.contains("task")) {
        c.kernel.discrete_task = k.at("task");
        (void)task_kernel_from_json(*c.kernel.discrete_task);
      }
    }

    const Json &split = j.at("split");
    reject_unknown_keys(split, "split",
                        {"type", "num_blocks", "window", "k", "test_size"});
    const auto kind = split.at("type").get<std::string>();
    if (kind == "blocked") {
      c.split.kind = SplitConfig::Kind::Blocked;
      c.split.num_blocks = split.value("num_blocks", 25);
      c.split.window = split.value("window", 5);
      detail::require(c.split.window >= 1 && c.split.window < c.split.num_blocks,
                      "config: blocked split needs 1 <= window < num_blocks");
    } else if (kind == "kfold") {
      c.split.kind = SplitConfig::Kind::KFold;
      c.split.k = split.value("k", 5);
      detail::require(c.split.k >= 2, "config: kfold needs k >= 2");
    } else if (kind == "holdout") {
      c.split.kind = SplitConfig::Kind::Holdout;
      c.split.test_size = split.value("test_size", Index{500});
      detail::require(c.split.test_size >= 1, "config: holdout test_size >= 1");
    } else {
      throw ParseError("config: unknown split type '" + kind + "'");
    }

    c.train_sizes = j.at("train_sizes").get<std::vector<Index>>();
    detail::require(!c.train_sizes.empty(), "config: train_sizes is empty");
    for (const Index n : c.train_sizes) {
      detail::require(n >= 2, "config: every training size must be >= 2");
    }

    if (j.contains("tuning")) {
      const Json &t = j.at("tuning");
      reject_unknown_keys(t, "tuning",
                          {"method", "restarts", "max_iterations",
                           "gradient_tolerance", "initial_tau2", "subsample",
                           "grid"});
      const auto method = t.value("method", std::string("gradient"));
      detail::require(method == "gradient" || method == "grid",
                      "config: tuning.method must be gradient or grid");
      c.tuning.method = method == "grid" ? SearchConfig::Method::Grid
                                         : SearchConfig::Method::Gradient;
      c.tuning.restarts = t.value("restarts", c.tuning.restarts);
      c.tuning.max_iterations = t.value("max_iterations", c.tuning.max_iterations);
      c.tuning.gradient_tolerance =
          t.value("gradient_tolerance", c.tuning.gradient_tolerance);
      c.tuning.initial_tau2 = t.value("initial_tau2", c.tuning.initial_tau2);
      c.tuning.subsample = t.value("subsample", c.tuning.subsample);
      detail::require(c.tuning.subsample >= 2, "config: tuning.subsample >= 2");
      if (t.contains("grid")) {
        const Json &g = t.at("grid");
        reject_unknown_keys(g, "tuning.grid",
                            {"lengthscales", "amplitudes", "tau2"});
        c.tuning.grid_lengthscales =
            g.value("lengthscales", c.tuning.grid_lengthscales);
        c.tuning.grid_amplitudes = g.value("amplitudes", c.tuning.grid_amplitudes);
        c.tuning.grid_tau2 = g.value("tau2", c.tuning.grid_tau2);
      }
    }
    if (j.contains("fitc")) {
      const Json &f = j.at("fitc");
      reject_unknown_keys(f, "fitc", {"p", "seed"});
      c.fitc.p = f.value("p", c.fitc.p);
      detail::require(c.fitc.p >= 1, "config: fitc.p must be >= 1");
      if (f.contains("seed")) {
        c.fitc.seed = f.at("seed").get<std::uint64_t>();
      }
    }
    if (j.contains("fanzhang")) {
      const Json &f = j.at("fanzhang");
      reject_unknown_keys(f, "fanzhang",
                          {"bandwidths", "lambdas", "folds", "cv_rows",
                           "basis_points"});
      auto &g = c.fanzhang.grid;
      g.bandwidths = f.value("bandwidths", g.bandwidths);
      g.lambdas = f.value("lambdas", g.lambdas);
      g.folds = f.value("folds", g.folds);
      g.max_rows = f.value("cv_rows", g.max_rows);
      c.fanzhang.basis_points = f.value("basis_points", c.fanzhang.basis_points);
    }
    c.budget_seconds = j.value("budget_seconds", 0.0);
    c.output = j.value("output", std::string());
  } catch (const Json::exception &e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return c;
}

inline ExperimentConfig load_experiment_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open config " + path);
  }
  Json j;
  try {
    j = Json::parse(in, nullptr, true, true);
  } catch (const Json::exception &e) {
    throw ParseError(path + ": " + e.what());
  }
  ExperimentConfig c = parse_experiment_config(
      j, std::filesystem::path(path).parent_path().string());
  if (!c.data_path.empty() && !std::filesystem::exists(c.data_path)) {
    throw ParseError("config: data file " + c.data_path + " does not exist");
  }
  return c;
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

struct ResultRow {
  std::string method;
  Index n = 0;
  int fold = 0;
  std::string metric;
  double value = 0.0;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
};

inline const char *kResultsHeader =
    "method,n,fold,metric,value,wall_seconds,seed";

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Rows sorted by (method, n, fold, metric).
inline void write_results(std::ostream &out, std::vector<ResultRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const auto &a, const auto &b) {
    return std::tie(a.method, a.n, a.fold, a.metric) <
           std::tie(b.method, b.n, b.fold, b.metric);
  });
  out << kResultsHeader << '\n';
  for (const auto &r : rows) {
    char wall[32];
    std::snprintf(wall, sizeof wall, "%.6f", r.wall_seconds);
    out << r.method << ',' << r.n << ',' << r.fold << ',' << r.metric << ','
        << format_double(r.value) << ',' << wall << ',' << r.seed << '\n';
  }
}

struct RunOutcome {
  std::vector<ResultRow> rows;
  int failed_folds = 0;
  bool budget_exceeded = false;
  std::vector<std::string> errors;

  int exit_code() const {
    if (budget_exceeded) {
      return 3;
    }
    return failed_folds > 0 ? 2 : 0;
  }
};

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct Metrics {
  double mae = 0.0;
  double zero_one = 0.0;
};

/// MAE and zero-one loss; both predictions and labels are classed as
/// value >= threshold.
inline Metrics compute_metrics(const std::vector<double> &predictions,
                               const std::vector<double> &labels,
                               double threshold = 0.5) {
  if (predictions.size() != labels.size()) {
    throw InvalidArgument("metrics: " + std::to_string(predictions.size()) +
                          " predictions but " + std::to_string(labels.size()) +
                          " labels");
  }
  detail::require(!labels.empty(), "metrics: no predictions");
  Metrics m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    m.mae += std::abs(predictions[i] - labels[i]);
    m.zero_one +=
        (predictions[i] >= threshold) != (labels[i] >= threshold) ? 1.0 : 0.0;
  }
  m.mae /= static_cast<double>(labels.size());
  m.zero_one /= static_cast<double>(labels.size());
  return m;
}

// ---------------------------------------------------------------------------
// Methods
// ---------------------------------------------------------------------------

namespace detail {

inline MaternKernel matern_template(const KernelSettings &k, double lengthscale,
                                    Index dim) {
  MaternKernel m{k.nu, {lengthscale}, 1.0, true};
  if (k.ard && dim > 1) {
    m.lengthscales.assign(static_cast<std::size_t>(dim), lengthscale);
  }
  return m;
}

inline TaskKernel task_template(const ExperimentConfig &c,
                                const TaskSet &tasks) {
  if (tasks.is_discrete()) {
    if (!c.kernel.discrete_task) {
      throw InvalidArgument(
          "discrete task ids need kernel.task (a tree or laplacian kernel)");
    }
    return task_kernel_from_json(*c.kernel.discrete_task);
  }
  return matern_template(c.kernel, c.kernel.task_lengthscale, tasks.dim());
}

/// Kernel template for the GP methods, over the feature columns the method
/// sees (concat methods see x and t side by side).
inline KernelSpec method_template(const std::string &method,
                                  const ExperimentConfig &c, Index dim,
                                  const TaskSet &tasks) {
  const bool matern = method.ends_with("-mat");
  if (method.starts_with("vcgp-")) {
    InstanceKernel inst = LinearKernel{1.0, false};
    if (matern) {
      inst = matern_template(c.kernel, c.kernel.instance_lengthscale, dim);
    }
    return KernelSpec{inst, task_template(c, tasks)};
  }
  InstanceKernel inst = LinearKernel{1.0, true};
  if (matern) {
    inst = matern_template(c.kernel, c.kernel.instance_lengthscale, dim);
  }
  return KernelSpec{inst, ConstantTaskKernel{}};
}

/// Grid candidates: every lengthscale x amplitude x tau2 combination, the
/// lengthscale applied to all Matern lengthscales and the amplitude to the
/// leading learnable amplitude.
inline std::vector<Candidate> grid_candidates(const KernelSpec &tmpl,
                                              const TuningSettings &t) {
  const bool any_matern = std::holds_alternative<MaternKernel>(tmpl.instance) ||
                          std::holds_alternative<MaternKernel>(tmpl.task);
  const std::vector<double> ls = any_matern ? t.grid_lengthscales
                                            : std::vector<double>{1.0};
  std::vector<Candidate> out;
  for (const double l : ls) {
    for (const double a : t.grid_amplitudes) {
      for (const double tau2 : t.grid_tau2) {
        KernelSpec s = tmpl;
        bool amp_set = false;
        if (auto *m = std::get_if<MaternKernel>(&s.task)) {
          std::fill(m->lengthscales.begin(), m->lengthscales.end(), l);
          m->amplitude = a;
          amp_set = true;
        }
        if (auto *m = std::get_if<MaternKernel>(&s.instance)) {
          std::fill(m->lengthscales.begin(), m->lengthscales.end(), l);
          if (!amp_set) {
            m->amplitude = a;
          }
        } else if (auto *lin = std::get_if<LinearKernel>(&s.instance)) {
          if (!amp_set && lin->learn_amplitude) {
            lin->amplitude = a;
          }
        }
        out.push_back({s, tau2});
      }
    }
  }
  return out;
}

inline SearchConfig search_config(const ExperimentConfig &c,
                                  const KernelSpec &tmpl, std::uint64_t seed) {
  SearchConfig s;
  s.method = c.tuning.method;
  s.restarts = c.tuning.restarts;
  s.max_iterations = c.tuning.max_iterations;
  s.gradient_tolerance = c.tuning.gradient_tolerance;
  s.initial_tau2 = c.tuning.initial_tau2;
  s.seed = seed;
  if (s.method == SearchConfig::Method::Grid) {
    s.candidates = grid_candidates(tmpl, c.tuning);
  }
  return s;
}

inline std::vector<Index> random_rows(Index total, Index count,
                                      std::uint64_t seed) {
  std::vector<Index> rows(static_cast<std::size_t>(total));
  std::iota(rows.begin(), rows.end(), Index{0});
  if (count >= total) {
    return rows;
  }
  Rng rng(seed);
  return detail::subsample(std::move(rows), count, rng);
}

/// Predictions for one method on one prepared fold. Regression returns
/// predictive means, classification class-1 probabilities.
inline std::vector<double> run_method(const std::string &method,
                                      const ExperimentConfig &c,
                                      const Dataset &train, const Dataset &test,
                                      std::uint64_t seed) {
  if (method.starts_with("fanzhang-")) {
    if (c.classification) {
      throw InvalidArgument(
          "fan-zhang classification is unsupported; use a regression task");
    }
    Dataset tr = train;
    MatrixXd x_test = test.X;
    if (method == "fanzhang-mat") {
      const auto map = make_matern_feature_map(
          train.X, c.fanzhang.basis_points, derive_seed(seed, "basis"),
          c.kernel.nu);
      tr.X = map.apply(train.X);
      x_test = map.apply(test.X);
      if (c.add_bias) {
        tr.X.conservativeResize(Eigen::NoChange, tr.X.cols() + 1);
        tr.X.col(tr.X.cols() - 1).setOnes();
        x_test.conservativeResize(Eigen::NoChange, x_test.cols() + 1);
        x_test.col(x_test.cols() - 1).setOnes();
      }
    }
    const auto choice =
        fan_zhang_cross_validate(tr, c.fanzhang.grid, derive_seed(seed, "cv"));
    const VectorXd pred =
        fan_zhang_fit_predict(tr, x_test, test.tasks, choice.h, choice.lambda);
    return {pred.data(), pred.data() + pred.size()};
  }

  const bool concat = method.starts_with("concat-");
  const Dataset tr = concat ? concat_dataset(train) : train;
  const MatrixXd x_test = concat ? concat_features(test.X, test.tasks) : test.X;
  const KernelSpec tmpl = method_template(method, c, tr.dim(), tr.tasks);
  const Dataset tune_data = tr.subset(
      random_rows(tr.size(), c.tuning.subsample, derive_seed(seed, "tune-rows")));
  const SearchConfig search =
      search_config(c, tmpl, derive_seed(seed, "restarts"));
  const bool sparse = tr.size() > c.fitc.p;
  std::optional<InducingSet> inducing;
  if (sparse) {
    inducing = select_inducing(
        tr, c.fitc.p, c.fitc.seed ? *c.fitc.seed : derive_seed(seed, "inducing"));
  }
  std::vector<double> out;
  if (c.classification) {
    const auto tuned = tune_classifier_hyperparameters(tune_data, tmpl, search);
    if (sparse) {
      return fit_fitc_classifier(tr, tuned.spec, tuned.tau2, *inducing)
          .predict_proba(x_test, test.tasks);
    }
    return predict_proba(fit_classifier(tr, tuned.spec, tuned.tau2), x_test,
                         test.tasks);
  }
  const auto tuned = tune_hyperparameters(tune_data, tmpl, search);
  const auto pred =
      sparse ? fit_fitc(tr, tuned.spec, tuned.tau2, *inducing)
                   .predict(x_test, test.tasks)
             : predict(fit_regressor(tr, tuned.spec, tuned.tau2), x_test,
                       test.tasks);
  for (const auto &p : pred) {
    out.push_back(p.mean);
  }
  return out;
}

struct PreparedFold {
  Dataset train;
  Dataset test;
};

/// Standardizes features with training statistics, appends a bias column,
/// and standardizes regression targets. Returns the target shift and scale.
inline std::pair<double, double> prepare_fold(PreparedFold &fold,
                                              const ExperimentConfig &c,
                                              const std::vector<bool> &numeric) {
  if (c.standardize_features) {
    const auto s = Standardizer::fit(fold.train.X, numeric);
    fold.train.X = s.apply(fold.train.X);
    fold.test.X = s.apply(fold.test.X);
  }
  if (c.add_bias) {
    for (Dataset *d : {&fold.train, &fold.test}) {
      d->X.conservativeResize(Eigen::NoChange, d->X.cols() + 1);
      d->X.col(d->X.cols() - 1).setOnes();
    }
  }
  double shift = 0.0;
  double scale = 1.0;
  if (!c.classification && c.standardize_target) {
    shift = fold.train.y.mean();
    const double sd =
        std::sqrt((fold.train.y.array() - shift).square().mean());
    scale = sd > 0.0 ? sd : 1.0;
    fold.train.y = (fold.train.y.array() - shift) / scale;
  }
  return {shift, scale};
}

inline double median(std::vector<double> v) {
  detail::require(!v.empty(), "median of an empty set");
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid),
                   v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(),
                                     v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

} // namespace detail

/// Runs every (method, n, split pair) of the config. Randomness derives from
/// config.seed keyed by component names, so each fold is reproducible alone.
inline RunOutcome run_experiment(const ExperimentConfig &c,
                                 std::ostream *log = nullptr) {
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  };
  RunOutcome outcome;

  // Source records: filtered CSV rows or a synthetic draw.
  RawTable table;
  std::optional<Dataset> synthetic;
  std::vector<double> time;
  if (c.synthetic) {
    const auto &s = *c.synthetic;
    synthetic = synth_vcm(s.total, s.m, s.d, s.task_kernel, s.tau2,
                          derive_seed(c.seed, "synthetic"), s.task_lo, s.task_hi)
                    .data;
    time.assign(synthetic->tasks.coords().col(s.d - 1).data(),
                synthetic->tasks.coords().col(s.d - 1).data() + s.total);
  } else {
    table = filter_records(load_csv(c.data_path, c.schema), c.policy);
    detail::require(!table.records.empty(),
                    "preprocess: every record was filtered out");
    if (c.split.kind == SplitConfig::Kind::Blocked) {
      std::optional<std::size_t> time_col;
      for (std::size_t k = 0; k < c.schema.columns.size(); ++k) {
        if (c.schema.columns[k].role == ColumnRole::TaskTime) {
          time_col = k;
        }
      }
      detail::require(time_col.has_value(),
                      "blocked splits need a task_time column");
      for (const auto &r : table.records) {
        time.push_back(r.fields[*time_col].number);
      }
    }
  }
  const auto total = static_cast<Index>(synthetic ? synthetic->size()
                                                  : table.records.size());
  std::optional<double> threshold = c.threshold;
  if (c.classification && !threshold) {
    std::vector<double> ys;
    if (synthetic) {
      ys.assign(synthetic->y.data(), synthetic->y.data() + total);
    } else {
      const auto target = std::find_if(
          c.schema.columns.begin(), c.schema.columns.end(),
          [](const auto &col) { return col.role == ColumnRole::Target; });
      const auto t = static_cast<std::size_t>(target - c.schema.columns.begin());
      for (const auto &r : table.records) {
        ys.push_back(r.fields[t].number);
      }
    }
    threshold = detail::median(std::move(ys));
  }

  for (const Index n : c.train_sizes) {
    std::vector<SplitPair> pairs;
    const std::uint64_t split_seed =
        derive_seed(c.seed, "split/n" + std::to_string(n));
    switch (c.split.kind) {
    case SplitConfig::Kind::Blocked:
      pairs = blocked_splits(time, c.split.num_blocks, c.split.window, n,
                             split_seed);
      break;
    case SplitConfig::Kind::KFold:
      pairs = kfold_splits(total, c.split.k, n, split_seed);
      break;
    case SplitConfig::Kind::Holdout: {
      detail::require(c.split.test_size < total,
                      "holdout test_size must be smaller than the dataset");
      std::vector<Index> order(static_cast<std::size_t>(total));
      std::iota(order.begin(), order.end(), Index{0});
      Rng rng(derive_seed(c.seed, "holdout"));
      std::shuffle(order.begin(), order.end(), rng);
      SplitPair pair;
      pair.test.assign(order.begin(), order.begin() + c.split.test_size);
      std::sort(pair.test.begin(), pair.test.end());
      Rng sub(split_seed);
      pair.train = detail::subsample(
          std::vector<Index>(order.begin() + c.split.test_size, order.end()), n,
          sub);
      pairs.push_back(std::move(pair));
      break;
    }
    }

    for (const auto &pair : pairs) {
      // Encode once per fold: categories and time origin from training rows.
      detail::PreparedFold base;
      std::vector<bool> numeric;
      if (synthetic) {
        base.train = synthetic->subset(pair.train);
        base.test = synthetic->subset(pair.test);
        numeric.assign(static_cast<std::size_t>(synthetic->dim()), true);
      } else {
        RawTable tr{table.schema, {}};
        RawTable te{table.schema, {}};
        for (const Index i : pair.train) {
          tr.records.push_back(table.records[static_cast<std::size_t>(i)]);
        }
        for (const Index i : pair.test) {
          te.records.push_back(table.records[static_cast<std::size_t>(i)]);
        }
        const Encoder enc = Encoder::fit(tr);
        base.train = enc.encode(tr);
        base.test = enc.encode(te);
        numeric = enc.numeric_features();
      }
      if (c.classification) {
        for (Dataset *d : {&base.train, &base.test}) {
          d->y = (d->y.array() > *threshold).cast<double>();
        }
      }
      const auto [shift, scale] = detail::prepare_fold(base, c, numeric);

      for (const auto &method : c.methods) {
        if (c.budget_seconds > 0.0 && elapsed() > c.budget_seconds) {
          outcome.budget_exceeded = true;
          return outcome;
        }
        const std::uint64_t fold_seed =
            derive_seed(c.seed, method + "/n" + std::to_string(n) + "/fold" +
                                    std::to_string(pair.fold));
        const auto t0 = std::chrono::steady_clock::now();
        try {
          std::vector<double> pred =
              detail::run_method(method, c, base.train, base.test, fold_seed);
          const double wall = std::chrono::duration<double>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
          std::vector<double> labels(base.test.y.data(),
                                     base.test.y.data() + base.test.size());
          ResultRow row{method, n, pair.fold, "", 0.0, wall, c.seed};
          if (c.classification) {
            row.metric = "zero_one";
            row.value = compute_metrics(pred, labels, 0.5).zero_one;
          } else {
            for (auto &p : pred) {
              p = p * scale + shift;
            }
            row.metric = "mae";
            row.value = compute_metrics(pred, labels).mae;
          }
          outcome.rows.push_back(row);
          if (log != nullptr) {
            *log << method << " n=" << n << " fold=" << pair.fold << ' '
                 << row.metric << '=' << row.value << " (" << wall << " s)\n";
          }
        } catch (const NumericalFailure &e) {
          ++outcome.failed_folds;
          outcome.errors.push_back(method + " n=" + std::to_string(n) +
                                   " fold=" + std::to_string(pair.fold) + ": " +
                                   e.what());
          if (log != nullptr) {
            *log << "FAILED " << outcome.errors.back() << '\n';
          }
        }
      }
    }
  }
  return outcome;
}

// ---------------------------------------------------------------------------
// Summaries
// ---------------------------------------------------------------------------

inline std::vector<ResultRow> read_results(std::istream &in) {
  std::string line;
  std::getline(in, line);
  if (detail::trim(line) != kResultsHeader) {
    throw ParseError("results: unexpected header '" + line + "'");
  }
  std::vector<ResultRow> rows;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (detail::trim(line).empty()) {
      continue;
    }
    const auto cells = detail::split_csv_line(line, line_number);
    if (cells.size() != 7) {
      throw ParseError("results: line " + std::to_string(line_number) +
                       ": expected 7 fields");
    }
    auto num = [&](const std::string &s) {
      const auto v = detail::parse_number(detail::trim(s));
      if (!v) {
        throw ParseError("results: line " + std::to_string(line_number) +
                         ": bad number '" + s + "'");
      }
      return *v;
    };
    rows.push_back({cells[0], static_cast<Index>(num(cells[1])),
                    static_cast<int>(num(cells[2])), cells[3], num(cells[4]),
                    num(cells[5]), static_cast<std::uint64_t>(num(cells[6]))});
  }
  return rows;
}

struct SummaryRow {
  std::string method;
  Index n = 0;
  std::string metric;
  double mean = 0.0;
  /// Sample standard deviation over folds divided by sqrt(count).
  double stderr_ = 0.0;
  Index count = 0;
};

inline std::vector<SummaryRow> summarize(const std::vector<ResultRow> &rows) {
  std::map<std::tuple<std::string, Index, std::string>, std::vector<double>>
      groups;
  for (const auto &r : rows) {
    groups[{r.method, r.n, r.metric}].push_back(r.value);
  }
  std::vector<SummaryRow> out;
  for (const auto &[key, values] : groups) {
    SummaryRow s{std::get<0>(key), std::get<1>(key), std::get<2>(key), 0.0,
                 0.0, static_cast<Index>(values.size())};
    for (const double v : values) {
      s.mean += v;
    }
    s.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
      double ss = 0.0;
      for (const double v : values) {
        ss += (v - s.mean) * (v - s.mean);
      }
      s.stderr_ = std::sqrt(ss / static_cast<double>(values.size() - 1) /
                            static_cast<double>(values.size()));
    }
    out.push_back(s);
  }
  return out;
}

inline void write_summary(std::ostream &out,
                          const std::vector<SummaryRow> &rows) {
  out << "method,n,metric,mean,stderr,count\n";
  for (const auto &s : rows) {
    out << s.method << ',' << s.n << ',' << s.metric << ','
        << format_double(s.mean) << ',' << format_double(s.stderr_) << ','
        << s.count << '\n';
  }
}

} // namespace vcgp

#endif
