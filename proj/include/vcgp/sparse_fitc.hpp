#ifndef VCGP_SPARSE_FITC_HPP_
#define VCGP_SPARSE_FITC_HPP_

#include "vcgp/error.hpp"
#include "vcgp/gp_classify.hpp"
#include "vcgp/gp_core.hpp"
#include "vcgp/kernels.hpp"
#include "vcgp/linalg.hpp"
#include "vcgp/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

namespace vcgp {

/// p inducing points (x, t). `indices` refers to training rows when the set
/// was sampled from the data.
struct InducingSet {
  MatrixXd X;
  TaskSet tasks;
  std::vector<Index> indices;
  std::uint64_t seed = 0;

  Index size() const { return X.rows(); }
};

/// Uniform sample of p training rows without replacement.
inline InducingSet select_inducing(const Dataset &data, Index p,
                                   std::uint64_t seed) {
  detail::require(p >= 1, "inducing set needs p >= 1");
  detail::require(p <= data.size(), "inducing count p = " + std::to_string(p) +
                                        " exceeds training size n = " +
                                        std::to_string(data.size()));
  std::vector<Index> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(seed);
  // Partial Fisher-Yates: the first p slots are a uniform p-subset.
  for (Index i = 0; i < p; ++i) {
    std::uniform_int_distribution<Index> pick(i, data.size() - 1);
    std::swap(order[static_cast<std::size_t>(i)],
              order[static_cast<std::size_t>(pick(rng))]);
  }
  order.resize(static_cast<std::size_t>(p));
  InducingSet out;
  out.indices = order;
  out.seed = seed;
  const Dataset picked = data.subset(order);
  out.X = picked.X;
  out.tasks = picked.tasks;
  return out;
}

namespace detail {

/// Shared FITC quantities: V = L_uu^{-1} K_uf and the diagonal correction
/// diag(K_ff - Q_ff).
struct FitcBasis {
  CholeskyFactor kuu;
  MatrixXd v;
  VectorXd correction;
};

inline FitcBasis fitc_basis(const Dataset &data, const KernelSpec &spec,
                            const InducingSet &inducing) {
  detail::require(inducing.size() >= 1, "empty inducing set");
  detail::require(inducing.X.cols() == data.dim(),
                  "inducing points have the wrong instance dimension");
  detail::require(inducing.tasks.is_discrete() == data.tasks.is_discrete() &&
                      inducing.tasks.dim() == data.tasks.dim(),
                  "inducing task points do not match the training tasks");
  FitcBasis b;
  b.kuu = cholesky_with_jitter(
      product_kernel_matrix(inducing.X, inducing.tasks, spec),
      "inducing covariance of " + describe(spec));
  b.v = b.kuu.half_solve(product_kernel_matrix(inducing.X, inducing.tasks,
                                               data.X, data.tasks, spec));
  b.correction = (product_kernel_diagonal(data.X, data.tasks, spec) -
                  b.v.colwise().squaredNorm().transpose())
                     .cwiseMax(0.0);
  return b;
}

} // namespace detail

/// FITC regression: covariance Q + diag(K - Q) + tau2 I with
/// Q = K_fu K_uu^{-1} K_uf. All factorizations are p x p.
class FitcRegressor {
public:
  FitcRegressor(KernelSpec spec, double tau2, Dataset data,
                InducingSet inducing, detail::FitcBasis basis)
      : spec_(std::move(spec)), tau2_(tau2), data_(std::move(data)),
        inducing_(std::move(inducing)), basis_(std::move(basis)) {
    lambda_ = basis_.correction.array() + tau2_;
    const MatrixXd v_scaled = basis_.v * lambda_.cwiseInverse().cwiseSqrt().asDiagonal();
    MatrixXd a = MatrixXd::Identity(inducing_.size(), inducing_.size());
    a.selfadjointView<Eigen::Lower>().rankUpdate(v_scaled);
    a.triangularView<Eigen::StrictlyUpper>() = a.transpose();
    a_chol_ = cholesky_with_jitter(a, "FITC A matrix");
    beta_ = a_chol_.half_solve(basis_.v * data_.y.cwiseQuotient(lambda_));
  }

  const KernelSpec &spec() const { return spec_; }
  double tau2() const { return tau2_; }
  const Dataset &data() const { return data_; }
  const InducingSet &inducing() const { return inducing_; }

  std::vector<PredictiveDistribution> predict(const MatrixXd &x,
                                              const TaskSet &t) const {
    detail::check_query(data_, x, t);
    const MatrixXd w = basis_.kuu.half_solve(
        product_kernel_matrix(inducing_.X, inducing_.tasks, x, t, spec_));
    const MatrixXd aw = a_chol_.half_solve(w);
    const VectorXd prior = product_kernel_diagonal(x, t, spec_);
    std::vector<PredictiveDistribution> out(static_cast<std::size_t>(x.rows()));
    for (Index i = 0; i < x.rows(); ++i) {
      const double var = prior[i] - w.col(i).squaredNorm() +
                         aw.col(i).squaredNorm();
      out[static_cast<std::size_t>(i)] = {
          aw.col(i).dot(beta_), detail::clamp_variance(var, prior[i]), tau2_};
    }
    return out;
  }

  PredictiveDistribution predict(const VectorXd &x_star,
                                 const TaskPoint &t_star) const {
    data_.tasks.check_compatible(t_star);
    return predict(MatrixXd(x_star.transpose()), TaskSet::single(t_star))
        .front();
  }

  /// log N(y | 0, Q + diag(K - Q) + tau2 I)
  double log_marginal_likelihood() const {
    const double quad =
        data_.y.cwiseAbs2().cwiseQuotient(lambda_).sum() - beta_.squaredNorm();
    const double logdet =
        lambda_.array().log().sum() + a_chol_.log_determinant();
    return -0.5 * quad - 0.5 * logdet -
           0.5 * static_cast<double>(data_.size()) * kLog2Pi;
  }

private:
  KernelSpec spec_;
  double tau2_;
  Dataset data_;
  InducingSet inducing_;
  detail::FitcBasis basis_;
  VectorXd lambda_;
  CholeskyFactor a_chol_;
  VectorXd beta_;
};

inline FitcRegressor fit_fitc(const Dataset &data, const KernelSpec &spec,
                              double tau2, const InducingSet &inducing) {
  data.validate();
  spec.validate();
  detail::require(tau2 > 0.0 && std::isfinite(tau2), "tau2 must be positive");
  auto basis = detail::fitc_basis(data, spec, inducing);
  return FitcRegressor(spec, tau2, data, inducing, std::move(basis));
}

/// Latent covariance C = diag(lambda) + V^T V (FITC surrogate of K + tau2 I).
/// Newton solves use the Woodbury identity, O(n p^2) per step.
class FitcLatentPrior {
public:
  class Factor {
  public:
    Factor() = default;
    Factor(const FitcLatentPrior &prior, const VectorXd &w)
        : w_(w), g_((prior.lambda_.cwiseProduct(w).array() + 1.0).inverse()) {
      const VectorXd scale = w.cwiseProduct(g_).cwiseSqrt();
      const MatrixXd vs = prior.v_ * scale.asDiagonal();
      MatrixXd m = MatrixXd::Identity(prior.v_.rows(), prior.v_.rows());
      m.selfadjointView<Eigen::Lower>().rankUpdate(vs);
      m.triangularView<Eigen::StrictlyUpper>() = m.transpose();
      m_chol_ = cholesky_with_jitter(m, "FITC Laplace matrix");
    }

    /// (C^{-1} + W)^{-1} b
    VectorXd sigma_times(const FitcLatentPrior &prior,
                         const VectorXd &b) const {
      const VectorXd gb = g_.cwiseProduct(b);
      const VectorXd inner = m_chol_.solve(VectorXd(prior.v_ * gb));
      return prior.lambda_.cwiseProduct(gb) +
             g_.cwiseProduct(prior.v_.transpose() * inner);
    }

    VectorXd newton_alpha(const FitcLatentPrior &prior,
                          const VectorXd &b) const {
      return b - w_.cwiseProduct(sigma_times(prior, b));
    }

    /// k^T (C + W^{-1})^{-1} k = k^T W k - (W k)^T (C^{-1} + W)^{-1} (W k)
    double reduction(const FitcLatentPrior &prior, const VectorXd &k) const {
      const VectorXd wk = w_.cwiseProduct(k);
      return k.dot(wk) - wk.dot(sigma_times(prior, wk));
    }

    /// log det(I + C W) = sum log(1 + lambda W) + log det M
    double log_determinant() const {
      return -g_.array().log().sum() + m_chol_.log_determinant();
    }

  private:
    VectorXd w_;
    VectorXd g_;
    CholeskyFactor m_chol_;
  };

  FitcLatentPrior(VectorXd lambda, MatrixXd v)
      : lambda_(std::move(lambda)), v_(std::move(v)) {}

  Index size() const { return lambda_.size(); }
  VectorXd multiply(const VectorXd &a) const {
    return lambda_.cwiseProduct(a) + v_.transpose() * (v_ * a);
  }
  Factor factorize(const VectorXd &w) const { return Factor(*this, w); }
  const MatrixXd &v() const { return v_; }
  const VectorXd &lambda() const { return lambda_; }

private:
  VectorXd lambda_;
  MatrixXd v_;
};

/// Laplace classifier over the FITC latent covariance.
class FitcClassifier {
public:
  FitcClassifier(KernelSpec spec, double tau2, Dataset data,
                 InducingSet inducing, CholeskyFactor kuu,
                 FitcLatentPrior prior, LaplaceState<FitcLatentPrior> state)
      : spec_(std::move(spec)), tau2_(tau2), data_(std::move(data)),
        inducing_(std::move(inducing)), kuu_(std::move(kuu)),
        prior_(std::move(prior)), state_(std::move(state)) {}

  const KernelSpec &spec() const { return spec_; }
  double tau2() const { return tau2_; }
  const Dataset &data() const { return data_; }
  const LaplaceState<FitcLatentPrior> &state() const { return state_; }

  std::vector<LatentPrediction> predict_latent(const MatrixXd &x,
                                               const TaskSet &t) const {
    detail::check_query(data_, x, t);
    const MatrixXd w = kuu_.half_solve(
        product_kernel_matrix(inducing_.X, inducing_.tasks, x, t, spec_));
    const MatrixXd cross = prior_.v().transpose() * w;
    const VectorXd prior = product_kernel_diagonal(x, t, spec_);
    std::vector<LatentPrediction> out(static_cast<std::size_t>(x.rows()));
    for (Index i = 0; i < x.rows(); ++i) {
      const VectorXd k = cross.col(i);
      const double prior_var = prior[i] + tau2_;
      out[static_cast<std::size_t>(i)] = {
          k.dot(state_.alpha),
          detail::clamp_variance(
              prior_var - state_.factor.reduction(prior_, k), prior_var)};
    }
    return out;
  }

  std::vector<double> predict_proba(const MatrixXd &x,
                                    const TaskSet &t) const {
    std::vector<double> out;
    for (const auto &latent : predict_latent(x, t)) {
      out.push_back(expected_logistic(latent.mean, latent.var));
    }
    return out;
  }

  double log_marginal() const { return laplace_log_marginal(state_); }

private:
  KernelSpec spec_;
  double tau2_;
  Dataset data_;
  InducingSet inducing_;
  CholeskyFactor kuu_;
  FitcLatentPrior prior_;
  LaplaceState<FitcLatentPrior> state_;
};

inline FitcClassifier fit_fitc_classifier(const Dataset &data,
                                          const KernelSpec &spec, double tau2,
                                          const InducingSet &inducing,
                                          const LaplaceOptions &options = {}) {
  data.validate();
  spec.validate();
  detail::require_binary(data);
  detail::require(tau2 > 0.0 && std::isfinite(tau2), "tau2 must be positive");
  auto basis = detail::fitc_basis(data, spec, inducing);
  FitcLatentPrior prior(basis.correction.array() + tau2, basis.v);
  auto state = find_laplace_mode(prior, data.y, options);
  return FitcClassifier(spec, tau2, data, inducing, std::move(basis.kuu),
                        std::move(prior), std::move(state));
}

} // namespace vcgp

#endif
