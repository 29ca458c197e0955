#ifndef VCGP_TUNING_HPP_
#define VCGP_TUNING_HPP_

#include "vcgp/error.hpp"
#include "vcgp/gp_core.hpp"
#include "vcgp/kernels.hpp"
#include "vcgp/random.hpp"

#include <ceres/gradient_problem.h>
#include <ceres/gradient_problem_solver.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace vcgp {

/// tau2 never drops below this during search.
inline constexpr double kMinTau2 = 1e-8;

struct Candidate {
  KernelSpec spec;
  double tau2 = 0.1;
};

struct SearchConfig {
  enum class Method { Gradient, Grid };

  Method method = Method::Gradient;
  // Gradient ascent (L-BFGS on log-hyperparameters).
  int restarts = 5;
  int max_iterations = 200;
  double gradient_tolerance = 1e-5;
  /// Standard deviation of the log-space perturbation for restarts 2..R.
  double restart_spread = 1.0;
  double initial_tau2 = 0.1;
  bool learn_tau2 = true;
  std::uint64_t seed = 0;
  // Grid search: every candidate is scored, the best one wins.
  std::vector<Candidate> candidates;
};

struct TunedHyperparameters {
  KernelSpec spec;
  double tau2 = 0.0;
  double log_evidence = -std::numeric_limits<double>::infinity();
  int evaluations = 0;
};

namespace detail {

inline double tau2_from_raw(double raw) { return kMinTau2 + std::exp(raw); }

inline double raw_from_tau2(double tau2) {
  return std::log(std::max(tau2 - kMinTau2, 1e-300));
}

/// Ceres minimizes -evidence over [log kernel params, raw tau2] where
/// tau2 = 1e-8 + exp(raw). The best point seen is tracked here because a
/// failed line search can leave Ceres reporting a worse iterate.
template <typename Evidence>
class NegativeEvidence final : public ceres::FirstOrderFunction {
public:
  NegativeEvidence(const KernelSpec &tmpl, const SearchConfig &search,
                   Evidence &evidence, TunedHyperparameters &best)
      : tmpl_(tmpl), search_(search), evidence_(evidence), best_(best),
        kernel_params_(log_parameters(tmpl).size()) {}

  bool Evaluate(const double *parameters, double *cost,
                double *gradient) const override {
    VectorXd theta = Eigen::Map<const VectorXd>(parameters, kernel_params_);
    if (!theta.allFinite() || theta.cwiseAbs().maxCoeff() > 40.0) {
      return false;
    }
    double tau2 = search_.initial_tau2;
    double raw = 0.0;
    if (search_.learn_tau2) {
      raw = parameters[kernel_params_];
      if (!std::isfinite(raw) || std::abs(raw) > 60.0) {
        return false;
      }
      tau2 = tau2_from_raw(raw);
    }
    try {
      const KernelSpec spec = with_log_parameters(tmpl_, theta);
      const LogEvidence ev = evidence_(spec, tau2, gradient != nullptr);
      ++best_.evaluations;
      if (!std::isfinite(ev.value)) {
        return false;
      }
      if (ev.value > best_.log_evidence) {
        best_.log_evidence = ev.value;
        best_.spec = spec;
        best_.tau2 = tau2;
      }
      *cost = -ev.value;
      if (gradient != nullptr) {
        for (Index j = 0; j < kernel_params_; ++j) {
          gradient[j] = -ev.gradient[j];
        }
        if (search_.learn_tau2) {
          gradient[kernel_params_] =
              -ev.gradient[kernel_params_] * std::exp(raw) / tau2;
        }
      }
      return true;
    } catch (const NumericalFailure &) {
      return false;
    } catch (const InvalidArgument &) {
      return false;
    }
  }

  int NumParameters() const override {
    return static_cast<int>(kernel_params_) + (search_.learn_tau2 ? 1 : 0);
  }

private:
  const KernelSpec &tmpl_;
  const SearchConfig &search_;
  Evidence &evidence_;
  TunedHyperparameters &best_;
  Index kernel_params_;
};

} // namespace detail

/// Maximizes a log-evidence over the learnable hyperparameters of `tmpl`
/// (and tau2). `evidence(spec, tau2, want_gradient)` returns a LogEvidence
/// and may throw NumericalFailure for infeasible points.
template <typename Evidence>
TunedHyperparameters maximize_evidence(const KernelSpec &tmpl,
                                       const SearchConfig &search,
                                       Evidence &&evidence) {
  TunedHyperparameters best;
  if (search.method == SearchConfig::Method::Grid) {
    detail::require(!search.candidates.empty(), "grid search: no candidates");
    for (const Candidate &c : search.candidates) {
      try {
        const LogEvidence ev = evidence(c.spec, c.tau2, false);
        ++best.evaluations;
        if (std::isfinite(ev.value) && ev.value > best.log_evidence) {
          best.log_evidence = ev.value;
          best.spec = c.spec;
          best.tau2 = c.tau2;
        }
      } catch (const NumericalFailure &) {
      }
    }
    if (!std::isfinite(best.log_evidence)) {
      throw NumericalFailure("hyperparameter grid: every candidate failed");
    }
    return best;
  }

  detail::require(search.restarts >= 1, "search needs at least one restart");
  detail::require(search.initial_tau2 > 0.0, "initial tau2 must be positive");
  VectorXd start = log_parameters(tmpl);
  const Index kernel_params = start.size();
  if (search.learn_tau2) {
    start.conservativeResize(kernel_params + 1);
    start[kernel_params] = detail::raw_from_tau2(search.initial_tau2);
  }
  best.spec = tmpl;
  best.tau2 = search.initial_tau2;
  if (start.size() == 0) {
    const LogEvidence ev = evidence(tmpl, search.initial_tau2, false);
    best.log_evidence = ev.value;
    best.evaluations = 1;
    return best;
  }

  Rng rng(search.seed);
  for (int restart = 0; restart < search.restarts; ++restart) {
    VectorXd x = start;
    if (restart > 0) {
      x += search.restart_spread * standard_normal(x.size(), rng);
    }
    ceres::GradientProblem problem(
        new detail::NegativeEvidence<std::remove_reference_t<Evidence>>(
            tmpl, search, evidence, best));
    ceres::GradientProblemSolver::Options options;
    options.logging_type = ceres::SILENT;
    options.max_num_iterations = search.max_iterations;
    options.gradient_tolerance = search.gradient_tolerance;
    options.function_tolerance = 1e-12;
    options.parameter_tolerance = 1e-12;
    ceres::GradientProblemSolver::Summary summary;
    ceres::Solve(options, problem, x.data(), &summary);
  }
  if (!std::isfinite(best.log_evidence)) {
    throw NumericalFailure("hyperparameter search: no feasible point for " +
                           describe(tmpl));
  }
  return best;
}

namespace detail {

inline void require_two_distinct_points(const Dataset &data) {
  for (Index i = 1; i < data.size(); ++i) {
    if (data.X.row(i) != data.X.row(0)) {
      return;
    }
    if (data.tasks.is_discrete()
            ? data.tasks.ids()[static_cast<std::size_t>(i)] != data.tasks.ids()[0]
            : data.tasks.coords().row(i) != data.tasks.coords().row(0)) {
      return;
    }
  }
  throw InvalidArgument("hyperparameter tuning needs two distinct points");
}

} // namespace detail

/// Kernel hyperparameters and tau2 maximizing the exact log marginal
/// likelihood of `data`.
inline TunedHyperparameters tune_hyperparameters(const Dataset &data,
                                                 const KernelSpec &tmpl,
                                                 const SearchConfig &search) {
  data.validate();
  detail::require_two_distinct_points(data);
  return maximize_evidence(
      tmpl, search,
      [&data](const KernelSpec &spec, double tau2, bool want_gradient) {
        if (want_gradient) {
          return log_marginal_likelihood_gradient(data, spec, tau2);
        }
        return LogEvidence{
            log_marginal_likelihood(fit_regressor(data, spec, tau2)), {}};
      });
}

} // namespace vcgp

#endif
