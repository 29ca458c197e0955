#ifndef VCGP_MULTITASK_HB_HPP_
#define VCGP_MULTITASK_HB_HPP_

#include "vcgp/error.hpp"
#include "vcgp/gp_core.hpp"
#include "vcgp/kernels.hpp"
#include "vcgp/linalg.hpp"
#include "vcgp/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

namespace vcgp {

/// Task weight vectors wbar_1..wbar_k (rows) drawn from the tree process.
struct HBSample {
  MatrixXd wbar;
};

/// wbar_1 ~ N(0, sigma_1^2 I), wbar_l ~ N(wbar_pa(l), sigma_l^2 I), parents
/// before children.
inline HBSample sample_hb(const TaskTree &tree, Index m, Rng &rng) {
  detail::require(m >= 1, "sample_hb: dimension m must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  HBSample out{MatrixXd(tree.size(), m)};
  for (const int node : tree.topological_order()) {
    const Index l = node - 1;
    const double sigma = tree.sigma(node);
    for (Index r = 0; r < m; ++r) {
      const double base = node == 1 ? 0.0 : out.wbar(tree.parent(node) - 1, r);
      out.wbar(l, r) = base + sigma * normal(rng);
    }
  }
  return out;
}

inline HBSample sample_hb(const TaskTree &tree, Index m, std::uint64_t seed) {
  Rng rng(seed);
  return sample_hb(tree, m, rng);
}

/// Random tree over k nodes: nodes are attached in a random order, each to a
/// uniformly chosen node already in the tree; sigmas are log-uniform.
inline TaskTree random_task_tree(Index k, double sigma_lo, double sigma_hi,
                                 Rng &rng) {
  detail::require(k >= 1, "random tree: k >= 1");
  std::vector<int> order(static_cast<std::size_t>(k - 1));
  std::iota(order.begin(), order.end(), 2);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> attached{1};
  std::vector<int> parent(static_cast<std::size_t>(k), 0);
  for (const int node : order) {
    std::uniform_int_distribution<std::size_t> pick(0, attached.size() - 1);
    parent[static_cast<std::size_t>(node - 1)] = attached[pick(rng)];
    attached.push_back(node);
  }
  std::uniform_real_distribution<double> u(std::log(sigma_lo),
                                           std::log(sigma_hi));
  std::vector<double> sigma(static_cast<std::size_t>(k));
  for (auto &s : sigma) {
    s = std::exp(u(rng));
  }
  return TaskTree(std::move(parent), std::move(sigma));
}

/// Precision of (wbar_1..wbar_k) per weight coordinate, read off the
/// generative process: sum_l sigma_l^{-2} (w_l - w_pa(l))^2 terms give
/// (I - A)^T S^{-1} (I - A) with child-row adjacency A.
inline MatrixXd generative_precision(const TaskTree &tree) {
  detail::require(tree.all_sigmas_positive(),
                  "generative precision needs all sigmas > 0");
  const Index k = tree.size();
  const MatrixXd i_minus_a = MatrixXd::Identity(k, k) - tree.child_adjacency();
  VectorXd inv_var(k);
  for (Index l = 0; l < k; ++l) {
    inv_var[l] = 1.0 / (tree.sigma(static_cast<int>(l + 1)) *
                        tree.sigma(static_cast<int>(l + 1)));
  }
  return i_minus_a.transpose() * inv_var.asDiagonal() * i_minus_a;
}

/// (I - A)^{-1} S (I - A)^{-T}, child-row adjacency.
inline MatrixXd generative_covariance(const TaskTree &tree) {
  const Index k = tree.size();
  const MatrixXd i_minus_a = MatrixXd::Identity(k, k) - tree.child_adjacency();
  const MatrixXd inv = i_minus_a.partialPivLu().inverse();
  VectorXd var(k);
  for (Index l = 0; l < k; ++l) {
    var[l] = tree.sigma(static_cast<int>(l + 1)) *
             tree.sigma(static_cast<int>(l + 1));
  }
  return inv * var.asDiagonal() * inv.transpose();
}

inline MatrixXd kron_identity(const MatrixXd &a, Index m) {
  MatrixXd out = MatrixXd::Zero(a.rows() * m, a.cols() * m);
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      for (Index r = 0; r < m; ++r) {
        out(i * m + r, j * m + r) = a(i, j);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct CheckLine {
  std::string name;
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct VerificationReport {
  std::vector<CheckLine> lines;

  bool passed() const {
    return std::all_of(lines.begin(), lines.end(),
                       [](const CheckLine &l) { return l.pass; });
  }

  /// statistic < threshold passes.
  void add(std::string name, double statistic, double threshold) {
    lines.push_back({std::move(name), statistic, threshold,
                     std::isfinite(statistic) && statistic < threshold});
  }

  void append(const VerificationReport &other) {
    lines.insert(lines.end(), other.lines.begin(), other.lines.end());
  }
};

/// One line per check: name statistic threshold PASS|FAIL
inline void print_report(std::ostream &out, const VerificationReport &report) {
  const auto flags = out.flags();
  const auto precision = out.precision(6);
  for (const auto &line : report.lines) {
    out << line.name << ' ' << std::scientific << line.statistic << ' '
        << line.threshold << ' ' << (line.pass ? "PASS" : "FAIL") << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

inline double max_row_sum(const MatrixXd &a) {
  return a.size() ? a.cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
}

// ---------------------------------------------------------------------------
// Verification operations
// ---------------------------------------------------------------------------

/// Monte-Carlo covariance of vec(Wbar^T) against G (x) I_m. The statistic is
/// the largest |empirical - target| / standard error over all entries.
inline VerificationReport verify_prop1(const TaskTree &tree, Index m,
                                       Index n_samples, std::uint64_t seed,
                                       double threshold = 4.0) {
  detail::require(n_samples >= 10000, "verify_prop1 needs >= 1e4 samples");
  const Index km = tree.size() * m;
  const MatrixXd target = kron_identity(tree_task_kernel(tree), m);
  MatrixXd sum = MatrixXd::Zero(km, km);
  MatrixXd sum_sq = MatrixXd::Zero(km, km);
  Rng rng(seed);
  VectorXd v(km);
  for (Index s = 0; s < n_samples; ++s) {
    const HBSample sample = sample_hb(tree, m, rng);
    for (Index l = 0; l < tree.size(); ++l) {
      v.segment(l * m, m) = sample.wbar.row(l).transpose();
    }
    for (Index j = 0; j < km; ++j) {
      for (Index i = j; i < km; ++i) {
        const double p = v[i] * v[j];
        sum(i, j) += p;
        sum_sq(i, j) += p * p;
      }
    }
  }
  const auto count = static_cast<double>(n_samples);
  double worst = 0.0;
  for (Index j = 0; j < km; ++j) {
    for (Index i = j; i < km; ++i) {
      const double mean = sum(i, j) / count;
      const double var = std::max(sum_sq(i, j) / count - mean * mean, 0.0);
      const double se = std::sqrt(var / count);
      const double dev = std::abs(mean - target(i, j));
      const double z =
          se > 0.0 ? dev / se
                   : (dev == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
      worst = std::max(worst, z);
    }
  }
  VerificationReport report;
  report.add("prop1.k" + std::to_string(tree.size()) + "_m" +
                 std::to_string(m) + ".max_abs_dev_over_se",
             worst, threshold);
  return report;
}

/// G L = I and L^{-1} = G for the tree's graph Laplacian.
inline VerificationReport verify_prop2(const TaskTree &tree,
                                       double threshold = 1e-8) {
  const MatrixXd g = tree_task_kernel(tree);
  const MatrixXd lap = tree_laplacian(tree);
  const MatrixXd lap_inv = symmetric_pseudoinverse(lap);
  const Index k = tree.size();
  VerificationReport report;
  const std::string prefix = "prop2.k" + std::to_string(k);
  report.add(prefix + ".GL_minus_I_inf",
             max_row_sum(g * lap - MatrixXd::Identity(k, k)), threshold);
  report.add(prefix + ".Linv_minus_G_rel_inf",
             max_row_sum(lap_inv - g) / max_row_sum(g), threshold);
  return report;
}

/// Exact weight-space posterior for the hierarchical model: the km stacked
/// task weights have prior precision P (x) I_m with P from the generative
/// process and a linear-Gaussian likelihood; conditioning is done in
/// information form. Returns predictive distributions at (x_test, test_ids).
inline std::vector<PredictiveDistribution>
hierarchical_weight_space_predict(const TaskTree &tree, const Dataset &data,
                                  double tau2, const MatrixXd &x_test,
                                  const std::vector<int> &test_ids) {
  detail::require(data.tasks.is_discrete(),
                  "weight-space route needs discrete task ids");
  detail::require(static_cast<Index>(test_ids.size()) == x_test.rows(),
                  "test ids and instances differ in count");
  const Index k = tree.size();
  const Index m = data.dim();
  const Index km = k * m;
  MatrixXd design = MatrixXd::Zero(data.size(), km);
  for (Index i = 0; i < data.size(); ++i) {
    const int id = data.tasks.ids()[static_cast<std::size_t>(i)];
    detail::require(id >= 1 && id <= k, "task id outside the tree");
    design.block(i, (id - 1) * m, 1, m) = data.X.row(i);
  }
  MatrixXd precision = kron_identity(generative_precision(tree), m);
  precision.noalias() += design.transpose() * design / tau2;
  const Eigen::LDLT<MatrixXd> ldlt(precision);
  const VectorXd mean_w = ldlt.solve(design.transpose() * data.y / tau2);
  std::vector<PredictiveDistribution> out;
  for (Index q = 0; q < x_test.rows(); ++q) {
    const int id = test_ids[static_cast<std::size_t>(q)];
    VectorXd phi = VectorXd::Zero(km);
    phi.segment((id - 1) * m, m) = x_test.row(q).transpose();
    out.push_back({phi.dot(mean_w), phi.dot(ldlt.solve(phi)), tau2});
  }
  return out;
}

/// Compares the product-kernel GP with the tree task kernel against the
/// weight-space hierarchical posterior, and G (x) I_m against the inverse
/// generative precision.
inline VerificationReport
end_to_end_equivalence(const TaskTree &tree, const Dataset &data, double tau2,
                       const MatrixXd &x_test, const std::vector<int> &test_ids,
                       double threshold = 1e-8) {
  detail::require(data.tasks.is_discrete(),
                  "end_to_end_equivalence needs discrete task ids");
  const KernelSpec spec{LinearKernel{}, TreeTaskKernel(tree)};
  const FittedRegressor model = fit_regressor(data, spec, tau2);
  const auto kernel_route =
      predict(model, x_test, TaskSet::discrete(test_ids));
  const auto weight_route =
      hierarchical_weight_space_predict(tree, data, tau2, x_test, test_ids);
  double mean_diff = 0.0;
  double var_diff = 0.0;
  for (std::size_t q = 0; q < kernel_route.size(); ++q) {
    mean_diff = std::max(
        mean_diff, std::abs(kernel_route[q].mean - weight_route[q].mean));
    var_diff = std::max(var_diff, std::abs(kernel_route[q].latent_var -
                                           weight_route[q].latent_var));
  }
  const Index m = data.dim();
  const MatrixXd g_kron = kron_identity(tree_task_kernel(tree), m);
  const MatrixXd implied =
      kron_identity(generative_precision(tree), m).ldlt().solve(
          MatrixXd::Identity(g_kron.rows(), g_kron.cols()));
  VerificationReport report;
  const std::string prefix = "e2e.k" + std::to_string(tree.size()) + "_m" +
                             std::to_string(m) + "_n" +
                             std::to_string(data.size());
  report.add(prefix + ".prior_cov_rel_inf",
             max_row_sum(implied - g_kron) / max_row_sum(g_kron), threshold);
  report.add(prefix + ".mean_abs", mean_diff, threshold);
  report.add(prefix + ".latent_var_abs", var_diff, threshold);
  return report;
}

} // namespace vcgp

#endif
