#ifndef VCGP_GP_CORE_HPP_
#define VCGP_GP_CORE_HPP_

#include "vcgp/error.hpp"
#include "vcgp/kernels.hpp"
#include "vcgp/linalg.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace vcgp {

/// Training or test data: instances X (n x m), task points, labels y.
struct Dataset {
  MatrixXd X;
  TaskSet tasks;
  VectorXd y;

  Index size() const { return X.rows(); }
  Index dim() const { return X.cols(); }

  void validate() const {
    detail::require(X.rows() >= 1, "dataset must contain at least one row");
    detail::require(tasks.size() == X.rows() && y.size() == X.rows(),
                    "dataset: X, tasks and y lengths differ");
    detail::require(X.allFinite() && y.allFinite(),
                    "dataset: entries must be finite");
  }

  bool has_binary_labels() const {
    return (y.array() == 0.0 || y.array() == 1.0).all();
  }

  Dataset subset(std::span<const Index> rows) const {
    Dataset out;
    out.X.resize(static_cast<Index>(rows.size()), X.cols());
    out.y.resize(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.X.row(static_cast<Index>(i)) = X.row(rows[i]);
      out.y[static_cast<Index>(i)] = y[rows[i]];
    }
    out.tasks = tasks.subset(rows);
    return out;
  }
};

struct PredictiveDistribution {
  double mean = 0.0;
  double latent_var = 0.0;
  double noise_var = 0.0;

  double total_var() const { return latent_var + noise_var; }
};

namespace detail {

/// Negative variances within -1e-8 * max(1, prior variance) are rounding
/// noise and clamp to zero; anything below means the kernel is inconsistent.
inline double clamp_variance(double var, double prior_var) {
  if (var >= 0.0) {
    return var;
  }
  if (var >= -1e-8 * std::max(1.0, std::abs(prior_var))) {
    return 0.0;
  }
  throw NumericalFailure("negative predictive variance " +
                         std::to_string(var));
}

inline void check_query(const Dataset &train, const MatrixXd &x,
                        const TaskSet &t) {
  detail::require(x.cols() == train.dim(),
                  "query instance dimension " + std::to_string(x.cols()) +
                      " != training dimension " + std::to_string(train.dim()));
  detail::require(x.rows() == t.size(), "query X and task counts differ");
  detail::require(t.is_discrete() == train.tasks.is_discrete(),
                  "query task variant differs from training tasks");
  detail::require(t.is_discrete() || t.dim() == train.tasks.dim(),
                  "query task dimension mismatch");
}

} // namespace detail

/// Posterior state of the exact product-kernel GP: Cholesky factor of
/// K + tau2 I (plus any jitter) and alpha = (K + tau2 I)^{-1} y.
class FittedRegressor {
public:
  FittedRegressor(KernelSpec spec, double tau2, Dataset data,
                  CholeskyFactor chol, VectorXd alpha)
      : spec_(std::move(spec)), tau2_(tau2), data_(std::move(data)),
        chol_(std::move(chol)), alpha_(std::move(alpha)) {}

  const KernelSpec &spec() const { return spec_; }
  double tau2() const { return tau2_; }
  const Dataset &data() const { return data_; }
  const CholeskyFactor &cholesky() const { return chol_; }
  const VectorXd &alpha() const { return alpha_; }
  double jitter() const { return chol_.jitter; }

private:
  KernelSpec spec_;
  double tau2_;
  Dataset data_;
  CholeskyFactor chol_;
  VectorXd alpha_;
};

inline FittedRegressor fit_regressor(const Dataset &data,
                                     const KernelSpec &spec, double tau2) {
  data.validate();
  spec.validate();
  detail::require(tau2 > 0.0 && std::isfinite(tau2), "tau2 must be positive");
  MatrixXd c = product_kernel_matrix(data.X, data.tasks, spec);
  c.diagonal().array() += tau2;
  CholeskyFactor chol = cholesky_with_jitter(c, describe(spec));
  VectorXd alpha = chol.solve(data.y);
  return FittedRegressor(spec, tau2, data, std::move(chol), std::move(alpha));
}

/// Predictive distributions at q query points (rows of x, entries of t).
inline std::vector<PredictiveDistribution>
predict(const FittedRegressor &model, const MatrixXd &x, const TaskSet &t) {
  const Dataset &train = model.data();
  detail::check_query(train, x, t);
  const MatrixXd cross =
      product_kernel_matrix(train.X, train.tasks, x, t, model.spec());
  const VectorXd prior = product_kernel_diagonal(x, t, model.spec());
  const VectorXd mean = cross.transpose() * model.alpha();
  const MatrixXd v = model.cholesky().half_solve(cross);
  const VectorXd reduction = v.colwise().squaredNorm().transpose();
  std::vector<PredictiveDistribution> out(static_cast<std::size_t>(x.rows()));
  for (Index i = 0; i < x.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = {
        mean[i], detail::clamp_variance(prior[i] - reduction[i], prior[i]),
        model.tau2()};
  }
  return out;
}

inline PredictiveDistribution predict(const FittedRegressor &model,
                                      const VectorXd &x_star,
                                      const TaskPoint &t_star) {
  detail::require(x_star.size() == model.data().dim(),
                  "query instance dimension mismatch");
  model.data().tasks.check_compatible(t_star);
  return predict(model, x_star.transpose(), TaskSet::single(t_star)).front();
}

/// log N(y | 0, K + tau2 I)
inline double log_marginal_likelihood(const FittedRegressor &model) {
  const auto n = static_cast<double>(model.data().size());
  return -0.5 * model.data().y.dot(model.alpha()) -
         model.cholesky().lower.diagonal().array().log().sum() -
         0.5 * n * kLog2Pi;
}

struct LogEvidence {
  double value = 0.0;
  /// d/dtheta for each entry of parameter_names(spec), then d/dlog(tau2).
  VectorXd gradient;
};

/// Log marginal likelihood and its gradient with respect to the learnable
/// log-hyperparameters and log(tau2):
/// dL/dtheta = 1/2 tr((alpha alpha^T - C^{-1}) dC/dtheta).
inline LogEvidence log_marginal_likelihood_gradient(const Dataset &data,
                                                    const KernelSpec &spec,
                                                    double tau2) {
  const FittedRegressor model = fit_regressor(data, spec, tau2);
  const std::vector<MatrixXd> dk =
      product_kernel_gradients(data.X, data.tasks, spec);
  MatrixXd w = -model.cholesky().inverse();
  w.selfadjointView<Eigen::Lower>().rankUpdate(model.alpha(), 1.0);
  w.triangularView<Eigen::StrictlyUpper>() = w.transpose();
  LogEvidence out;
  out.value = log_marginal_likelihood(model);
  out.gradient.resize(static_cast<Index>(dk.size()) + 1);
  for (std::size_t j = 0; j < dk.size(); ++j) {
    out.gradient[static_cast<Index>(j)] = 0.5 * w.cwiseProduct(dk[j]).sum();
  }
  out.gradient[static_cast<Index>(dk.size())] = 0.5 * tau2 * w.trace();
  return out;
}

} // namespace vcgp

#endif
