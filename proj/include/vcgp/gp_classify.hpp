#ifndef VCGP_GP_CLASSIFY_HPP_
#define VCGP_GP_CLASSIFY_HPP_

#include "vcgp/error.hpp"
#include "vcgp/gp_core.hpp"
#include "vcgp/kernels.hpp"
#include "vcgp/linalg.hpp"
#include "vcgp/tuning.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

namespace vcgp {

inline double logistic(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(logistic(z)) without overflow.
inline double log_logistic(double z) {
  return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

/// Logistic log-likelihood of 0/1 labels and its first three derivatives
/// (W is the negated second derivative).
struct LogisticTerms {
  double log_likelihood = 0.0;
  VectorXd gradient;
  VectorXd w;
  VectorXd third;

  LogisticTerms(const VectorXd &y, const VectorXd &z)
      : gradient(z.size()), w(z.size()), third(z.size()) {
    for (Index i = 0; i < z.size(); ++i) {
      const double sign = y[i] > 0.5 ? 1.0 : -1.0;
      log_likelihood += log_logistic(sign * z[i]);
      const double p = logistic(z[i]);
      gradient[i] = y[i] - p;
      w[i] = p * (1.0 - p);
      third[i] = -w[i] * (1.0 - 2.0 * p);
    }
  }
};

struct LaplaceOptions {
  int max_iterations = 100;
  double gradient_tolerance = 1e-8;
  int max_halvings = 20;
};

/// Dense latent covariance C = K + tau2 I.
class DenseLatentPrior {
public:
  /// Factorization of B = I + W^{1/2} C W^{1/2} at a given W.
  class Factor {
  public:
    Factor() = default;
    Factor(const MatrixXd &c, const VectorXd &w) : sw_(w.cwiseSqrt()) {
      MatrixXd b = sw_.asDiagonal() * c * sw_.asDiagonal();
      b.diagonal().array() += 1.0;
      chol_ = cholesky_with_jitter(b, "laplace B matrix");
    }

    /// (I + W C)^{-1} b, i.e. C^{-1} of the Newton target.
    VectorXd newton_alpha(const DenseLatentPrior &prior,
                          const VectorXd &b) const {
      const VectorXd cb = prior.multiply(b);
      return b - sw_.cwiseProduct(chol_.solve(VectorXd(sw_.cwiseProduct(cb))));
    }

    /// k^T (C + W^{-1})^{-1} k
    double reduction(const DenseLatentPrior & /*prior*/,
                     const VectorXd &k) const {
      return chol_.half_solve(sw_.cwiseProduct(k)).squaredNorm();
    }

    /// log det(I + C W)
    double log_determinant() const { return chol_.log_determinant(); }

    const CholeskyFactor &b_cholesky() const { return chol_; }
    const VectorXd &sqrt_w() const { return sw_; }

  private:
    VectorXd sw_;
    CholeskyFactor chol_;
  };

  explicit DenseLatentPrior(MatrixXd c) : c_(std::move(c)) {}

  Index size() const { return c_.rows(); }
  VectorXd multiply(const VectorXd &a) const { return c_ * a; }
  Factor factorize(const VectorXd &w) const { return Factor(c_, w); }
  const MatrixXd &covariance() const { return c_; }

private:
  MatrixXd c_;
};

/// Mode of log p(y|z) - 1/2 z^T C^{-1} z, parameterized by a = C^{-1} z.
template <typename Prior> struct LaplaceState {
  VectorXd mode;
  VectorXd alpha;
  VectorXd w;
  double log_likelihood = 0.0;
  double objective = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  /// Objective after every accepted Newton step (non-decreasing).
  std::vector<double> objective_trace;
  typename Prior::Factor factor;
};

/// Damped Newton iteration (step halved until the objective does not
/// decrease). Throws NumericalFailure if the gradient norm has not dropped
/// below the tolerance after max_iterations.
template <typename Prior>
LaplaceState<Prior> find_laplace_mode(const Prior &prior, const VectorXd &y,
                                      const LaplaceOptions &options = {},
                                      const VectorXd *warm_alpha = nullptr) {
  const Index n = prior.size();
  LaplaceState<Prior> s;
  s.alpha = warm_alpha != nullptr && warm_alpha->size() == n
                ? *warm_alpha
                : VectorXd::Zero(n);
  s.mode = prior.multiply(s.alpha);
  auto terms = LogisticTerms(y, s.mode);
  s.objective = terms.log_likelihood - 0.5 * s.alpha.dot(s.mode);
  s.objective_trace.push_back(s.objective);
  bool stalled = false;
  for (;;) {
    s.gradient_norm = (terms.gradient - s.alpha).norm();
    if (s.gradient_norm < options.gradient_tolerance || stalled ||
        s.iterations >= options.max_iterations) {
      break;
    }
    const auto factor = prior.factorize(terms.w);
    const VectorXd b = terms.w.cwiseProduct(s.mode) + terms.gradient;
    const VectorXd step = factor.newton_alpha(prior, b) - s.alpha;
    double eta = 1.0;
    bool accepted = false;
    for (int h = 0; h <= options.max_halvings; ++h, eta *= 0.5) {
      VectorXd alpha = s.alpha + eta * step;
      VectorXd mode = prior.multiply(alpha);
      auto trial = LogisticTerms(y, mode);
      const double objective = trial.log_likelihood - 0.5 * alpha.dot(mode);
      if (objective >= s.objective) {
        s.alpha = std::move(alpha);
        s.mode = std::move(mode);
        terms = std::move(trial);
        s.objective = objective;
        accepted = true;
        break;
      }
    }
    ++s.iterations;
    if (accepted) {
      s.objective_trace.push_back(s.objective);
    } else {
      stalled = true;
    }
  }
  s.gradient_norm = (terms.gradient - s.alpha).norm();
  if (s.gradient_norm >= options.gradient_tolerance) {
    // A stalled line search at a gradient within rounding of zero is the
    // numerical optimum; anything larger is a genuine failure.
    const double rounding =
        1e-12 * (1.0 + s.alpha.norm() + terms.gradient.norm()) *
        static_cast<double>(n);
    if (!(stalled && s.gradient_norm < std::max(rounding, 1e-6))) {
      std::ostringstream msg;
      msg << "laplace: Newton iteration did not converge after "
          << s.iterations << " iterations (gradient norm " << s.gradient_norm
          << ", tolerance " << options.gradient_tolerance << ")";
      throw NumericalFailure(msg.str());
    }
  }
  s.log_likelihood = terms.log_likelihood;
  s.w = terms.w;
  s.factor = prior.factorize(s.w);
  return s;
}

/// Probability that the label is 1 given a Gaussian latent N(mean, var):
/// 32-node Gauss-Hermite quadrature of the logistic function.
inline double expected_logistic(double mean, double var) {
  static const GaussHermite rule(32);
  return rule.expectation(mean, std::sqrt(std::max(var, 0.0)), logistic);
}

/// Laplace approximation of the product-kernel GP classifier with logistic
/// likelihood; the latent covariance is K + tau2 I.
class FittedClassifier {
public:
  FittedClassifier(KernelSpec spec, double tau2, Dataset data,
                   DenseLatentPrior prior, LaplaceState<DenseLatentPrior> state)
      : spec_(std::move(spec)), tau2_(tau2), data_(std::move(data)),
        prior_(std::move(prior)), state_(std::move(state)) {}

  const KernelSpec &spec() const { return spec_; }
  double tau2() const { return tau2_; }
  const Dataset &data() const { return data_; }
  const VectorXd &mode() const { return state_.mode; }
  const VectorXd &alpha() const { return state_.alpha; }
  /// Diagonal of the negative log-likelihood Hessian at the mode.
  const VectorXd &w() const { return state_.w; }
  const LaplaceState<DenseLatentPrior> &state() const { return state_; }
  const DenseLatentPrior &prior() const { return prior_; }

private:
  KernelSpec spec_;
  double tau2_;
  Dataset data_;
  DenseLatentPrior prior_;
  LaplaceState<DenseLatentPrior> state_;
};

namespace detail {

inline void require_binary(const Dataset &data) {
  detail::require(data.has_binary_labels(),
                  "classification labels must be 0 or 1");
}

inline DenseLatentPrior latent_prior(const Dataset &data,
                                     const KernelSpec &spec, double tau2) {
  MatrixXd c = product_kernel_matrix(data.X, data.tasks, spec);
  c.diagonal().array() += tau2;
  return DenseLatentPrior(std::move(c));
}

} // namespace detail

inline FittedClassifier fit_classifier(const Dataset &data,
                                       const KernelSpec &spec, double tau2,
                                       const LaplaceOptions &options = {},
                                       const VectorXd *warm_alpha = nullptr) {
  data.validate();
  spec.validate();
  detail::require_binary(data);
  detail::require(tau2 > 0.0 && std::isfinite(tau2), "tau2 must be positive");
  DenseLatentPrior prior = detail::latent_prior(data, spec, tau2);
  auto state = find_laplace_mode(prior, data.y, options, warm_alpha);
  return FittedClassifier(spec, tau2, data, std::move(prior), std::move(state));
}

struct LatentPrediction {
  double mean = 0.0;
  double var = 0.0;
};

inline std::vector<LatentPrediction>
predict_latent(const FittedClassifier &model, const MatrixXd &x,
               const TaskSet &t) {
  const Dataset &train = model.data();
  detail::check_query(train, x, t);
  const MatrixXd cross =
      product_kernel_matrix(train.X, train.tasks, x, t, model.spec());
  const VectorXd prior = product_kernel_diagonal(x, t, model.spec());
  std::vector<LatentPrediction> out(static_cast<std::size_t>(x.rows()));
  for (Index i = 0; i < x.rows(); ++i) {
    const VectorXd k = cross.col(i);
    const double prior_var = prior[i] + model.tau2();
    out[static_cast<std::size_t>(i)] = {
        k.dot(model.alpha()),
        detail::clamp_variance(
            prior_var - model.state().factor.reduction(model.prior(), k), prior_var)};
  }
  return out;
}

inline std::vector<double> predict_proba(const FittedClassifier &model,
                                         const MatrixXd &x, const TaskSet &t) {
  std::vector<double> out;
  for (const auto &latent : predict_latent(model, x, t)) {
    out.push_back(expected_logistic(latent.mean, latent.var));
  }
  return out;
}

inline double predict_proba(const FittedClassifier &model,
                            const VectorXd &x_star, const TaskPoint &t_star) {
  detail::require(x_star.size() == model.data().dim(),
                  "query instance dimension mismatch");
  model.data().tasks.check_compatible(t_star);
  return predict_proba(model, x_star.transpose(), TaskSet::single(t_star))
      .front();
}

/// log p(y | z^) - 1/2 z^T C^{-1} z^ - 1/2 log det(I + W^{1/2} C W^{1/2})
template <typename Prior>
double laplace_log_marginal(const LaplaceState<Prior> &state) {
  return state.log_likelihood - 0.5 * state.alpha.dot(state.mode) -
         0.5 * state.factor.log_determinant();
}

inline double laplace_log_marginal(const FittedClassifier &model) {
  return laplace_log_marginal(model.state());
}

/// Laplace evidence and its gradient with respect to the learnable kernel
/// log-hyperparameters and log(tau2), accounting for the implicit
/// dependence of the mode on the hyperparameters.
inline LogEvidence laplace_log_marginal_gradient(
    const Dataset &data, const KernelSpec &spec, double tau2,
    const LaplaceOptions &options = {}, const VectorXd *warm_alpha = nullptr,
    VectorXd *alpha_out = nullptr) {
  const FittedClassifier model =
      fit_classifier(data, spec, tau2, options, warm_alpha);
  if (alpha_out != nullptr) {
    *alpha_out = model.alpha();
  }
  const auto &state = model.state();
  const MatrixXd &c = model.prior().covariance();
  const Index n = data.size();
  const VectorXd &sw = state.factor.sqrt_w();
  const CholeskyFactor &lb = state.factor.b_cholesky();

  // R = W^{1/2} B^{-1} W^{1/2}
  MatrixXd r = lb.solve(MatrixXd(sw.asDiagonal()));
  r = sw.asDiagonal() * r;
  const MatrixXd cm = lb.half_solve(sw.asDiagonal() * c);
  const LogisticTerms terms(data.y, state.mode);
  // d(-1/2 log det B)/dz_i = +1/2 [(C^{-1} + W)^{-1}]_ii d^3 log p / dz_i^3
  const VectorXd s2 =
      0.5 *
      (c.diagonal() - cm.colwise().squaredNorm().transpose())
          .cwiseProduct(terms.third);

  std::vector<MatrixXd> dc = product_kernel_gradients(data.X, data.tasks, spec);
  dc.push_back(tau2 * MatrixXd::Identity(n, n));

  LogEvidence out;
  out.value = laplace_log_marginal(state);
  out.gradient.resize(static_cast<Index>(dc.size()));
  for (std::size_t j = 0; j < dc.size(); ++j) {
    const MatrixXd &cj = dc[j];
    const double s1 = 0.5 * state.alpha.dot(cj * state.alpha) -
                      0.5 * r.cwiseProduct(cj).sum();
    const VectorXd b = cj * terms.gradient;
    const VectorXd s3 = b - c * (r * b);
    out.gradient[static_cast<Index>(j)] = s1 + s2.dot(s3);
  }
  return out;
}

/// Hyperparameters maximizing the Laplace evidence. Each evaluation starts
/// Newton from the previous mode.
inline TunedHyperparameters
tune_classifier_hyperparameters(const Dataset &data, const KernelSpec &tmpl,
                                const SearchConfig &search,
                                const LaplaceOptions &options = {}) {
  data.validate();
  detail::require_binary(data);
  detail::require_two_distinct_points(data);
  VectorXd warm;
  return maximize_evidence(
      tmpl, search,
      [&](const KernelSpec &spec, double tau2, bool want_gradient) {
        VectorXd next;
        LogEvidence ev;
        if (want_gradient) {
          ev = laplace_log_marginal_gradient(data, spec, tau2, options, &warm,
                                             &next);
        } else {
          const auto model = fit_classifier(data, spec, tau2, options, &warm);
          ev.value = laplace_log_marginal(model);
          next = model.alpha();
        }
        warm = std::move(next);
        return ev;
      });
}

} // namespace vcgp

#endif
