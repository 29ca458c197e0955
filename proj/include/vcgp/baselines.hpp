#ifndef VCGP_BASELINES_HPP_
#define VCGP_BASELINES_HPP_

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
#include <string>
#include <vector>

namespace vcgp {

// ---------------------------------------------------------------------------
// iid and concatenated-feature GPs
// ---------------------------------------------------------------------------

/// A GP on the instances alone: the task kernel is the constant 1.
inline FittedRegressor iid_gp(const Dataset &data,
                              const InstanceKernel &instance, double tau2) {
  return fit_regressor(data, KernelSpec{instance, ConstantTaskKernel{}}, tau2);
}

/// Rows (x_i, t_i). Discrete task ids have no coordinates to append.
inline MatrixXd concat_features(const MatrixXd &x, const TaskSet &tasks) {
  if (tasks.is_discrete()) {
    throw InvalidArgument(
        "concatenated features need continuous task points, got task ids");
  }
  detail::require(x.rows() == tasks.size(),
                  "concat: instance and task counts differ");
  MatrixXd out(x.rows(), x.cols() + tasks.dim());
  out << x, tasks.coords();
  return out;
}

inline Dataset concat_dataset(const Dataset &data) {
  return Dataset{concat_features(data.X, data.tasks), data.tasks, data.y};
}

/// A GP on the concatenated vectors (x, t) with a constant task kernel. Query
/// with predict_concat.
inline FittedRegressor concat_gp(const Dataset &data,
                                 const InstanceKernel &family, double tau2) {
  return iid_gp(concat_dataset(data), family, tau2);
}

inline std::vector<PredictiveDistribution>
predict_concat(const FittedRegressor &model, const MatrixXd &x,
               const TaskSet &t) {
  return predict(model, concat_features(x, t), t);
}

// ---------------------------------------------------------------------------
// Fan & Zhang kernel-local smoothing
// ---------------------------------------------------------------------------

/// Matern features phi_j(x) = k(x, b_j) over basis points b_j.
struct MaternFeatureMap {
  MatrixXd basis;
  MaternKernel kernel;

  MatrixXd apply(const MatrixXd &x) const {
    return instance_gram(InstanceKernel{kernel}, x, basis);
  }
};

/// Basis: min(count, n) rows of x chosen with `seed`; lengthscale: median
/// pairwise distance among the basis points.
inline MaternFeatureMap make_matern_feature_map(const MatrixXd &x, Index count,
                                                std::uint64_t seed,
                                                Smoothness nu =
                                                    Smoothness::ThreeHalves) {
  detail::require(x.rows() >= 1 && count >= 1,
                  "feature map: need at least one basis point");
  const Index p = std::min(count, x.rows());
  std::vector<Index> rows(static_cast<std::size_t>(x.rows()));
  std::iota(rows.begin(), rows.end(), Index{0});
  Rng rng(seed);
  for (Index i = 0; i < p; ++i) {
    std::uniform_int_distribution<Index> pick(i, x.rows() - 1);
    std::swap(rows[static_cast<std::size_t>(i)],
              rows[static_cast<std::size_t>(pick(rng))]);
  }
  MaternFeatureMap map;
  map.basis.resize(p, x.cols());
  for (Index i = 0; i < p; ++i) {
    map.basis.row(i) = x.row(rows[static_cast<std::size_t>(i)]);
  }
  std::vector<double> dist;
  for (Index j = 0; j < p; ++j) {
    for (Index i = j + 1; i < p; ++i) {
      const double d = (map.basis.row(i) - map.basis.row(j)).norm();
      if (d > 0.0) {
        dist.push_back(d);
      }
    }
  }
  double ls = 1.0;
  if (!dist.empty()) {
    std::nth_element(dist.begin(), dist.begin() + dist.size() / 2, dist.end());
    ls = dist[dist.size() / 2];
  }
  map.kernel = MaternKernel{nu, {ls}, 1.0, false};
  return map;
}

/// K_h(r) = exp(-r^2 / (2 h^2))
inline double gaussian_smoother(double r, double h) {
  return std::exp(-0.5 * (r / h) * (r / h));
}

/// For each query: w(t*) = (X^T D X + lambda I)^{-1} X^T D y with
/// D = diag(K_h(|t_i - t*|)), prediction x*^T w(t*). X is used as given;
/// apply a feature map beforehand for the nonlinear variant.
inline VectorXd fan_zhang_fit_predict(const Dataset &data,
                                      const MatrixXd &x_star,
                                      const TaskSet &t_star, double h,
                                      double lambda) {
  data.validate();
  detail::require(h > 0.0, "fan-zhang: bandwidth h must be positive");
  detail::require(lambda >= 0.0, "fan-zhang: lambda must be >= 0");
  detail::require(!data.tasks.is_discrete() && !t_star.is_discrete(),
                  "fan-zhang: needs continuous task points");
  detail::require(x_star.cols() == data.dim() && x_star.rows() == t_star.size(),
                  "fan-zhang: query dimension mismatch");
  detail::require(t_star.dim() == data.tasks.dim(),
                  "fan-zhang: task dimension mismatch");
  VectorXd out(x_star.rows());
  VectorXd d(data.size());
  for (Index q = 0; q < x_star.rows(); ++q) {
    for (Index i = 0; i < data.size(); ++i) {
      d[i] = gaussian_smoother(
          (data.tasks.coords().row(i) - t_star.coords().row(q)).norm(), h);
    }
    const MatrixXd dx = d.asDiagonal() * data.X;
    MatrixXd normal = data.X.transpose() * dx;
    normal.diagonal().array() += lambda;
    const VectorXd rhs = dx.transpose() * data.y;
    const Eigen::LLT<MatrixXd> llt(normal);
    if (llt.info() != Eigen::Success || llt.rcond() < 1e-13) {
      throw NumericalFailure(
          "fan-zhang: normal matrix is singular at query " + std::to_string(q) +
          "; use a ridge coefficient lambda > 0");
    }
    out[q] = x_star.row(q).dot(llt.solve(rhs));
  }
  return out;
}

struct FanZhangGrid {
  std::vector<double> bandwidths{0.1, 0.3, 1.0, 3.0, 10.0};
  std::vector<double> lambdas{1e-3, 1e-2, 1e-1, 1.0, 10.0};
  int folds = 5;
  /// CV runs on at most this many training rows.
  Index max_rows = 400;
};

struct FanZhangChoice {
  double h = 1.0;
  double lambda = 1.0;
  double cv_mae = std::numeric_limits<double>::infinity();
};

/// (h, lambda) minimizing k-fold cross-validated MAE on the training data.
inline FanZhangChoice fan_zhang_cross_validate(const Dataset &data,
                                               const FanZhangGrid &grid,
                                               std::uint64_t seed) {
  detail::require(grid.folds >= 2, "fan-zhang CV: folds must be >= 2");
  detail::require(!grid.bandwidths.empty() && !grid.lambdas.empty(),
                  "fan-zhang CV: empty grid");
  std::vector<Index> rows(static_cast<std::size_t>(data.size()));
  std::iota(rows.begin(), rows.end(), Index{0});
  Rng rng(seed);
  std::shuffle(rows.begin(), rows.end(), rng);
  rows.resize(static_cast<std::size_t>(std::min(data.size(), grid.max_rows)));
  const auto folds = static_cast<std::size_t>(
      std::min<Index>(grid.folds, static_cast<Index>(rows.size())));
  detail::require(folds >= 2, "fan-zhang CV: need at least two rows");
  std::vector<Dataset> train_parts;
  std::vector<Dataset> test_parts;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<Index> train;
    std::vector<Index> test;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      (i % folds == f ? test : train).push_back(rows[i]);
    }
    train_parts.push_back(data.subset(train));
    test_parts.push_back(data.subset(test));
  }
  FanZhangChoice best;
  for (const double h : grid.bandwidths) {
    for (const double lambda : grid.lambdas) {
      double abs_sum = 0.0;
      Index count = 0;
      bool ok = true;
      for (std::size_t f = 0; f < folds && ok; ++f) {
        try {
          const VectorXd pred =
              fan_zhang_fit_predict(train_parts[f], test_parts[f].X,
                                    test_parts[f].tasks, h, lambda);
          abs_sum += (pred - test_parts[f].y).cwiseAbs().sum();
          count += pred.size();
        } catch (const NumericalFailure &) {
          ok = false;
        }
      }
      const double mae = ok ? abs_sum / static_cast<double>(count)
                            : std::numeric_limits<double>::infinity();
      if (mae < best.cv_mae) {
        best = {h, lambda, mae};
      }
    }
  }
  if (!std::isfinite(best.cv_mae)) {
    throw NumericalFailure("fan-zhang CV: every grid point failed");
  }
  return best;
}

// ---------------------------------------------------------------------------
// Primal weight-space oracle
// ---------------------------------------------------------------------------

/// Exact predictive distribution computed in weight space: the stacked
/// per-point weights (w_1..w_n, w*) get covariance K_T (x) I_m over the
/// train and test task points, z_i = x_i^T w_i maps them to latent values,
/// and the joint Gaussian of (y, w) is conditioned directly. Only the linear
/// instance kernel has a finite weight space. Dense O(((n+1)m)^2 n) work.
inline PredictiveDistribution
primal_oracle_predict(const Dataset &data, const KernelSpec &spec, double tau2,
                      const VectorXd &x_star, const TaskPoint &t_star) {
  data.validate();
  const auto *lin = std::get_if<LinearKernel>(&spec.instance);
  detail::require(lin != nullptr,
                  "primal oracle needs the linear instance kernel");
  detail::require(tau2 > 0.0, "primal oracle: tau2 must be positive");
  const Index n = data.size();
  const Index m = data.dim();
  if (n > 50 || m > 10) {
    throw InvalidArgument("primal oracle limited to n <= 50 and m <= 10, got n=" +
                          std::to_string(n) + " m=" + std::to_string(m));
  }
  detail::require(x_star.size() == m, "primal oracle: query dimension");
  data.tasks.check_compatible(t_star);

  // Task points of the n training rows followed by the query.
  std::vector<Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Index{0});
  TaskSet all = data.tasks.subset(rows);
  const TaskSet query = TaskSet::single(t_star);
  if (all.is_discrete()) {
    std::vector<int> ids = all.ids();
    ids.push_back(query.ids().front());
    all = TaskSet::discrete(std::move(ids));
  } else {
    MatrixXd coords(n + 1, all.dim());
    coords << all.coords(), query.coords();
    all = TaskSet::continuous(std::move(coords));
  }
  const MatrixXd kt = task_gram(spec.task, all);
  const double s2 = lin->amplitude * lin->amplitude;

  const Index dim = (n + 1) * m;
  MatrixXd weight_cov = MatrixXd::Zero(dim, dim);
  for (Index a = 0; a <= n; ++a) {
    for (Index b = 0; b <= n; ++b) {
      weight_cov.block(a * m, b * m, m, m).diagonal().setConstant(s2 * kt(a, b));
    }
  }
  // Block-diagonal design for the n observed latent values.
  MatrixXd design = MatrixXd::Zero(n, dim);
  for (Index i = 0; i < n; ++i) {
    design.block(i, i * m, 1, m) = data.X.row(i);
  }
  VectorXd phi_star = VectorXd::Zero(dim);
  phi_star.segment(n * m, m) = x_star;

  const MatrixXd cov_wy = weight_cov * design.transpose();
  MatrixXd cov_y = design * cov_wy;
  cov_y.diagonal().array() += tau2;
  const Eigen::FullPivLU<MatrixXd> lu(cov_y);
  const VectorXd w_mean = cov_wy * lu.solve(data.y);
  const MatrixXd w_cov =
      weight_cov - cov_wy * lu.solve(MatrixXd(cov_wy.transpose()));
  PredictiveDistribution out;
  out.mean = phi_star.dot(w_mean);
  out.latent_var = std::max(phi_star.dot(w_cov * phi_star), 0.0);
  out.noise_var = tau2;
  return out;
}

} // namespace vcgp

#endif
