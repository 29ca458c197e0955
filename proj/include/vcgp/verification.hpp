#ifndef VCGP_VERIFICATION_HPP_
#define VCGP_VERIFICATION_HPP_

#include "vcgp/baselines.hpp"
#include "vcgp/data_io.hpp"
#include "vcgp/error.hpp"
#include "vcgp/gp_classify.hpp"
#include "vcgp/gp_core.hpp"
#include "vcgp/kernels.hpp"
#include "vcgp/multitask_hb.hpp"
#include "vcgp/random.hpp"
#include "vcgp/sparse_fitc.hpp"

#include <ceres/gradient_problem.h>
#include <ceres/gradient_problem_solver.h>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

namespace vcgp {

namespace detail {

inline std::string numbered(const std::string &prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d", i);
  return prefix + buf;
}

inline MatrixXd random_normal_matrix(Index rows, Index cols, Rng &rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd out(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) {
      out(i, j) = normal(rng);
    }
  }
  return out;
}

inline Index uniform_index(Index lo, Index hi, Rng &rng) {
  return std::uniform_int_distribution<Index>(lo, hi)(rng);
}

inline double log_uniform(double lo, double hi, Rng &rng) {
  return std::exp(
      std::uniform_real_distribution<double>(std::log(lo), std::log(hi))(rng));
}

/// A task kernel whose Gram over k ids is the given positive definite matrix:
/// the graph Laplacian is chosen as its inverse.
inline LaplacianTaskKernel kernel_with_gram(const MatrixXd &gram) {
  MatrixXd lap = gram.ldlt().solve(MatrixXd::Identity(gram.rows(), gram.cols()));
  lap = 0.5 * (lap + lap.transpose()).eval();
  MatrixXd weights = -lap;
  weights.diagonal().setZero();
  const VectorXd regularizer = lap.diagonal() - weights.rowwise().sum();
  return LaplacianTaskKernel(std::move(weights), regularizer);
}

/// Random k x k positive definite matrix with eigenvalues spread over two
/// orders of magnitude.
inline MatrixXd random_spd(Index k, Rng &rng) {
  const MatrixXd a = random_normal_matrix(k, k, rng);
  const Eigen::HouseholderQR<MatrixXd> qr(a);
  const MatrixXd q = qr.householderQ();
  VectorXd eig(k);
  for (Index i = 0; i < k; ++i) {
    eig[i] = log_uniform(0.05, 5.0, rng);
  }
  return q * eig.asDiagonal() * q.transpose();
}

/// Random product-kernel configuration with a linear instance kernel: either
/// discrete ids with a random PD task Gram or continuous tasks with a Matern
/// task kernel.
struct RandomConfig {
  Dataset data;
  KernelSpec spec;
  double tau2 = 0.1;
  MatrixXd x_test;
  TaskSet t_test;
};

inline RandomConfig random_linear_config(Index n, Index m, bool discrete,
                                         double tau2_lo, double tau2_hi,
                                         Index n_test, Rng &rng) {
  RandomConfig c;
  c.tau2 = log_uniform(tau2_lo, tau2_hi, rng);
  c.data.X = random_normal_matrix(n, m, rng);
  c.data.y = random_normal_matrix(n, 1, rng).col(0);
  c.x_test = random_normal_matrix(n_test, m, rng);
  const double amp = log_uniform(0.5, 2.0, rng);
  if (discrete) {
    const Index k = uniform_index(1, 5, rng);
    std::vector<int> ids;
    std::vector<int> test_ids;
    for (Index i = 0; i < n; ++i) {
      ids.push_back(static_cast<int>(uniform_index(1, k, rng)));
    }
    for (Index i = 0; i < n_test; ++i) {
      test_ids.push_back(static_cast<int>(uniform_index(1, k, rng)));
    }
    c.data.tasks = TaskSet::discrete(std::move(ids));
    c.t_test = TaskSet::discrete(std::move(test_ids));
    c.spec = KernelSpec{LinearKernel{amp, false},
                        kernel_with_gram(random_spd(k, rng))};
  } else {
    const Index d = uniform_index(1, 2, rng);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    MatrixXd t(n, d);
    MatrixXd tt(n_test, d);
    t = t.unaryExpr([&](double) { return u(rng); });
    tt = tt.unaryExpr([&](double) { return u(rng); });
    c.data.tasks = TaskSet::continuous(std::move(t));
    c.t_test = TaskSet::continuous(std::move(tt));
    const auto nu = static_cast<Smoothness>(uniform_index(0, 2, rng));
    c.spec = KernelSpec{
        LinearKernel{amp, false},
        MaternKernel{nu, {log_uniform(0.3, 3.0, rng)}, log_uniform(0.5, 2.0, rng),
                     true}};
  }
  return c;
}

/// Exact latent posterior mode by generic BFGS on
/// log p(y|z) - 1/2 z^T C^{-1} z with an explicitly inverted C.
class LatentPosterior final : public ceres::FirstOrderFunction {
public:
  LatentPosterior(const MatrixXd &c, const VectorXd &y)
      : c_inv_(c.fullPivLu().inverse()), y_(y) {}

  bool Evaluate(const double *parameters, double *cost,
                double *gradient) const override {
    const Eigen::Map<const VectorXd> z(parameters, y_.size());
    const VectorXd cz = c_inv_ * z;
    double value = 0.5 * z.dot(cz);
    for (Index i = 0; i < z.size(); ++i) {
      value -= log_logistic((y_[i] > 0.5 ? 1.0 : -1.0) * z[i]);
    }
    *cost = value;
    if (gradient != nullptr) {
      for (Index i = 0; i < z.size(); ++i) {
        gradient[i] = cz[i] - (y_[i] - logistic(z[i]));
      }
    }
    return true;
  }

  int NumParameters() const override { return static_cast<int>(y_.size()); }

private:
  MatrixXd c_inv_;
  VectorXd y_;
};

inline VectorXd direct_latent_mode(const MatrixXd &c, const VectorXd &y) {
  VectorXd z = VectorXd::Zero(y.size());
  ceres::GradientProblem problem(new LatentPosterior(c, y));
  ceres::GradientProblemSolver::Options options;
  options.line_search_direction_type = ceres::BFGS;
  options.logging_type = ceres::SILENT;
  options.max_num_iterations = 1000;
  options.gradient_tolerance = 1e-14;
  options.function_tolerance = 1e-16;
  options.parameter_tolerance = 1e-16;
  ceres::GradientProblemSolver::Summary summary;
  ceres::Solve(options, problem, z.data(), &summary);
  return z;
}

/// E[logistic(z)], z ~ N(mean, var), by plain Monte Carlo.
inline double monte_carlo_logistic(double mean, double var, Index samples,
                                   Rng &rng) {
  std::normal_distribution<double> normal(mean, std::sqrt(var));
  double sum = 0.0;
  for (Index s = 0; s < samples; ++s) {
    sum += logistic(normal(rng));
  }
  return sum / static_cast<double>(samples);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Batteries
// ---------------------------------------------------------------------------

/// Monte-Carlo covariance of the tree sampler against G (x) I_m.
inline VerificationReport verify_prop1_statistical(std::uint64_t seed,
                                                   int trees = 5,
                                                   Index samples = 1000000) {
  Rng rng(derive_seed(seed, "prop1-statistical"));
  VerificationReport report;
  for (int i = 0; i < trees; ++i) {
    const Index k = detail::uniform_index(2, 5, rng);
    const Index m = detail::uniform_index(1, 3, rng);
    const TaskTree tree = random_task_tree(k, 0.5, 2.0, rng);
    auto r = verify_prop1(tree, m, samples, rng());
    r.lines.front().name =
        detail::numbered("prop1.mc.tree", i) + "_k" + std::to_string(k) +
        "_m" + std::to_string(m) + ".max_dev_over_se";
    report.append(r);
  }
  return report;
}

/// Analytic check: the tree kernel GP equals the hierarchical weight-space
/// posterior, and G (x) I_m equals the generative covariance.
inline VerificationReport verify_prop1_analytic(std::uint64_t seed,
                                                int trees = 100) {
  Rng rng(derive_seed(seed, "prop1-analytic"));
  VerificationReport report;
  for (int i = 0; i < trees; ++i) {
    const Index k = detail::uniform_index(1, 20, rng);
    const Index m = detail::uniform_index(1, 3, rng);
    const TaskTree tree = random_task_tree(k, 0.3, 3.0, rng);
    const Index n = detail::uniform_index(1, 2 * k + 5, rng);
    Dataset data;
    data.X = detail::random_normal_matrix(n, m, rng);
    data.y = detail::random_normal_matrix(n, 1, rng).col(0);
    std::vector<int> ids;
    for (Index r = 0; r < n; ++r) {
      ids.push_back(static_cast<int>(detail::uniform_index(1, k, rng)));
    }
    data.tasks = TaskSet::discrete(std::move(ids));
    const Index q = 4;
    const MatrixXd x_test = detail::random_normal_matrix(q, m, rng);
    std::vector<int> test_ids;
    for (Index r = 0; r < q; ++r) {
      test_ids.push_back(static_cast<int>(detail::uniform_index(1, k, rng)));
    }
    const double tau2 = detail::log_uniform(0.1, 1.0, rng);
    auto r = end_to_end_equivalence(tree, data, tau2, x_test, test_ids);
    const MatrixXd g = tree_task_kernel(tree);
    r.add("generative_cov_rel_inf",
          max_row_sum(generative_covariance(tree) - g) / max_row_sum(g), 1e-8);
    const std::string prefix = detail::numbered("prop1.analytic.tree", i);
    for (auto &line : r.lines) {
      const auto dot = line.name.find('.', line.name.find('.') + 1);
      line.name = prefix + "." +
                  (dot == std::string::npos ? line.name
                                            : line.name.substr(dot + 1));
    }
    report.append(r);
  }
  return report;
}

inline VerificationReport verify_prop2_battery(std::uint64_t seed,
                                               int trees = 100) {
  Rng rng(derive_seed(seed, "prop2"));
  VerificationReport report;
  for (int i = 0; i < trees; ++i) {
    const Index k = detail::uniform_index(1, 50, rng);
    const TaskTree tree = random_task_tree(k, 0.1, 10.0, rng);
    auto r = verify_prop2(tree);
    const MatrixXd g = tree_task_kernel(tree);
    r.add("laplacian_kernel_rel_inf",
          max_row_sum(laplacian_task_kernel(tree) - g) / max_row_sum(g), 1e-8);
    const std::string prefix = detail::numbered("prop2.tree", i) + "_k" +
                               std::to_string(k);
    for (auto &line : r.lines) {
      line.name = prefix + "." + line.name.substr(line.name.rfind('.') + 1);
    }
    report.append(r);
  }
  return report;
}

/// Product-kernel GP against the primal weight-space oracle.
inline VerificationReport verify_theorem1_battery(std::uint64_t seed,
                                                  int configs = 50) {
  Rng rng(derive_seed(seed, "theorem1"));
  VerificationReport report;
  for (int i = 0; i < configs; ++i) {
    const Index n = detail::uniform_index(1, 20, rng);
    const Index m = detail::uniform_index(1, 4, rng);
    const auto c = detail::random_linear_config(n, m, i % 2 == 0, 0.01, 1.0, 3,
                                                rng);
    const FittedRegressor model = fit_regressor(c.data, c.spec, c.tau2);
    const auto dual = predict(model, c.x_test, c.t_test);
    double mean_diff = 0.0;
    double var_diff = 0.0;
    for (Index q = 0; q < c.x_test.rows(); ++q) {
      const auto primal = primal_oracle_predict(
          c.data, c.spec, c.tau2, c.x_test.row(q).transpose(), c.t_test.point(q));
      const auto &d = dual[static_cast<std::size_t>(q)];
      mean_diff = std::max(mean_diff, std::abs(primal.mean - d.mean));
      var_diff = std::max(var_diff, std::abs(primal.total_var() - d.total_var()));
    }
    const std::string prefix = detail::numbered("theorem1.config", i);
    report.add(prefix + ".mean_abs", mean_diff, 1e-8);
    report.add(prefix + ".var_abs", var_diff, 1e-8);
  }
  return report;
}

/// Laplace mode against direct maximization; quadrature against Monte Carlo.
inline VerificationReport verify_theorem2_battery(std::uint64_t seed,
                                                  int instances = 10,
                                                  Index mc_samples = 10000000) {
  Rng rng(derive_seed(seed, "theorem2"));
  VerificationReport report;
  for (int i = 0; i < instances; ++i) {
    const Index n = detail::uniform_index(1, 6, rng);
    const Index m = detail::uniform_index(1, 3, rng);
    auto c = detail::random_linear_config(n, m, i % 2 == 1, 0.05, 1.0, 1, rng);
    for (Index r = 0; r < n; ++r) {
      c.data.y[r] = c.data.y[r] > 0.0 ? 1.0 : 0.0;
    }
    const FittedClassifier model = fit_classifier(c.data, c.spec, c.tau2);
    const VectorXd direct =
        detail::direct_latent_mode(model.prior().covariance(), c.data.y);
    const auto latent = predict_latent(model, c.x_test, c.t_test).front();
    const double p = predict_proba(model, c.x_test, c.t_test).front();
    const double p_mc =
        detail::monte_carlo_logistic(latent.mean, latent.var, mc_samples, rng);
    const std::string prefix = detail::numbered("theorem2.instance", i);
    report.add(prefix + ".mode_max_abs",
               (model.mode() - direct).cwiseAbs().maxCoeff(), 1e-6);
    report.add(prefix + ".proba_vs_mc_abs", std::abs(p - p_mc), 1e-3);
  }
  return report;
}

/// FITC with the inducing set equal to the training set against the exact
/// GP, and the p = n/10 approximation on n = 2000 synthetic data.
inline VerificationReport verify_fitc_battery(std::uint64_t seed,
                                              Index large_n = 2000) {
  Rng rng(derive_seed(seed, "fitc"));
  VerificationReport report;
  for (int i = 0; i < 3; ++i) {
    const Index n = detail::uniform_index(20, 100, rng);
    const MaternKernel task{Smoothness::ThreeHalves, {0.5}, 1.0, true};
    const auto syn = synth_vcm(n, 2, 1, task, 0.1, rng());
    const KernelSpec spec{MaternKernel{Smoothness::FiveHalves, {2.0}, 1.0, true},
                          task};
    const auto test = synth_vcm(20, 2, 1, task, 0.1, rng()).data;
    std::vector<Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Index{0});
    InducingSet inducing{syn.data.X, syn.data.tasks, all, 0};
    const auto exact = predict(fit_regressor(syn.data, spec, 0.1), test.X,
                               test.tasks);
    const auto sparse =
        fit_fitc(syn.data, spec, 0.1, inducing).predict(test.X, test.tasks);
    double mean_diff = 0.0;
    double var_diff = 0.0;
    for (std::size_t q = 0; q < exact.size(); ++q) {
      mean_diff = std::max(mean_diff, std::abs(exact[q].mean - sparse[q].mean));
      var_diff = std::max(var_diff,
                          std::abs(exact[q].latent_var - sparse[q].latent_var));
    }
    Dataset binary = syn.data;
    for (Index r = 0; r < n; ++r) {
      binary.y[r] = syn.data.y[r] > 0.0 ? 1.0 : 0.0;
    }
    const auto p_exact =
        predict_proba(fit_classifier(binary, spec, 0.1), test.X, test.tasks);
    const auto p_sparse = fit_fitc_classifier(binary, spec, 0.1, inducing)
                              .predict_proba(test.X, test.tasks);
    double p_diff = 0.0;
    for (std::size_t q = 0; q < p_exact.size(); ++q) {
      p_diff = std::max(p_diff, std::abs(p_exact[q] - p_sparse[q]));
    }
    const std::string prefix =
        detail::numbered("fitc.full_inducing", i) + "_n" + std::to_string(n);
    report.add(prefix + ".mean_abs", mean_diff, 1e-6);
    report.add(prefix + ".var_abs", var_diff, 1e-6);
    report.add(prefix + ".classifier_proba_abs", p_diff, 1e-6);
  }

  const MaternKernel task{Smoothness::ThreeHalves, {0.5}, 1.0, true};
  const KernelSpec spec{LinearKernel{}, task};
  const double tau2 = 0.1;
  const auto syn = synth_vcm(large_n + 200, 2, 1, task, tau2, rng());
  std::vector<Index> train(static_cast<std::size_t>(large_n));
  std::iota(train.begin(), train.end(), Index{0});
  std::vector<Index> test(200);
  std::iota(test.begin(), test.end(), large_n);
  const Dataset tr = syn.data.subset(train);
  const Dataset te = syn.data.subset(test);
  const auto exact = predict(fit_regressor(tr, spec, tau2), te.X, te.tasks);
  const auto sparse =
      fit_fitc(tr, spec, tau2, select_inducing(tr, large_n / 10, rng()))
          .predict(te.X, te.tasks);
  double sum = 0.0;
  for (std::size_t q = 0; q < exact.size(); ++q) {
    sum += std::abs(exact[q].mean - sparse[q].mean);
  }
  const double label_sd =
      std::sqrt((tr.y.array() - tr.y.mean()).square().mean());
  report.add("fitc.p_n_over_10_n" + std::to_string(large_n) +
                 ".mean_abs_dmu_over_label_sd",
             sum / static_cast<double>(exact.size()) / label_sd, 0.05);
  return report;
}

inline const std::vector<std::string> &verify_scopes() {
  static const std::vector<std::string> scopes{"prop1", "prop2", "theorem1",
                                               "theorem2", "fitc", "all"};
  return scopes;
}

/// prop1 | prop2 | theorem1 | theorem2 | fitc | all
inline VerificationReport run_verification(const std::string &scope,
                                           std::uint64_t seed) {
  VerificationReport report;
  const bool all = scope == "all";
  bool known = all;
  if (all || scope == "prop1") {
    known = true;
    report.append(verify_prop1_analytic(seed));
    report.append(verify_prop1_statistical(seed));
  }
  if (all || scope == "prop2") {
    known = true;
    report.append(verify_prop2_battery(seed));
  }
  if (all || scope == "theorem1") {
    known = true;
    report.append(verify_theorem1_battery(seed));
  }
  if (all || scope == "theorem2") {
    known = true;
    report.append(verify_theorem2_battery(seed));
  }
  if (all || scope == "fitc") {
    known = true;
    report.append(verify_fitc_battery(seed));
  }
  if (!known) {
    throw InvalidArgument("unknown verify scope '" + scope +
                          "' (expected prop1, prop2, theorem1, theorem2, fitc "
                          "or all)");
  }
  return report;
}

} // namespace vcgp

#endif
