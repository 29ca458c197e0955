#include "vcgp/data_io.hpp"
#include "vcgp/gp_classify.hpp"
#include "vcgp/verification.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace vcgp;

namespace {

MatrixXd random_matrix(Index r, Index c, Rng &rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd out(r, c);
  for (Index i = 0; i < out.size(); ++i) {
    out.data()[i] = normal(rng);
  }
  return out;
}

Dataset random_labels(Index n, Index m, Index d, Rng &rng) {
  Dataset data{random_matrix(n, m, rng),
               TaskSet::continuous(random_matrix(n, d, rng)), VectorXd(n)};
  std::bernoulli_distribution coin(0.5);
  for (Index i = 0; i < n; ++i) {
    data.y[i] = coin(rng) ? 1.0 : 0.0;
  }
  return data;
}

// Single point whose latent covariance K + tau2 equals c.
Dataset unit_point(double c, double tau2) {
  return Dataset{MatrixXd::Constant(1, 1, std::sqrt(c - tau2)),
                 TaskSet::discrete({1}), VectorXd::Ones(1)};
}

const KernelSpec kLinearConst{LinearKernel{}, ConstantTaskKernel{}};
const KernelSpec kMaternSpec{
    MaternKernel{Smoothness::FiveHalves, {1.5}, 1.0, true},
    MaternKernel{Smoothness::ThreeHalves, {0.8}, 1.2, true}};

// Composite Simpson on [-12 s, 12 s] around the mean.
template <typename F> double integrate_gaussian(double mean, double sd, F &&f) {
  const int steps = 20000;
  const double lo = mean - 12.0 * sd;
  const double h = 24.0 * sd / steps;
  double sum = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double z = lo + i * h;
    const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    const double u = (z - mean) / sd;
    sum += w * f(z) * std::exp(-0.5 * u * u) / (sd * std::sqrt(2.0 * M_PI));
  }
  return sum * h / 3.0;
}

} // namespace

TEST(Logistic, StableAtExtremes) {
  EXPECT_EQ(logistic(0.0), 0.5);
  EXPECT_NEAR(logistic(800.0), 1.0, 1e-15);
  EXPECT_NEAR(logistic(-800.0), 0.0, 1e-300);
  EXPECT_NEAR(log_logistic(-800.0), -800.0, 1e-12);
  EXPECT_TRUE(std::isfinite(log_logistic(800.0)));
}

TEST(LaplaceMode, ScalarRoot) {
  const auto model = fit_classifier(unit_point(1.0, 0.5), kLinearConst, 0.5);
  const double z = model.mode()[0];
  // Root of z + logistic(z) - 1 by bisection.
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mid + logistic(mid) - 1.0 > 0.0 ? hi : lo) = mid;
  }
  EXPECT_NEAR(z, 0.5 * (lo + hi), 1e-10);
  EXPECT_NEAR(z, 0.401058, 1e-6);
}

TEST(LaplaceMode, FlippedLabelsNegateMode) {
  Rng rng(1);
  Dataset data = random_labels(12, 2, 1, rng);
  const auto a = fit_classifier(data, kMaternSpec, 0.3);
  data.y = VectorXd::Ones(data.size()) - data.y;
  const auto b = fit_classifier(data, kMaternSpec, 0.3);
  EXPECT_LE((a.mode() + b.mode()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(LaplaceMode, MatchesDirectOptimization) {
  Rng rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const Dataset data = random_labels(5, 2, 1, rng);
    const auto model = fit_classifier(data, kMaternSpec, 0.2);
    const VectorXd direct =
        detail::direct_latent_mode(model.prior().covariance(), data.y);
    EXPECT_LE((model.mode() - direct).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(LaplaceMode, ObjectiveNonDecreasing) {
  Rng rng(3);
  const Dataset data = random_labels(40, 3, 2, rng);
  const KernelSpec spec{LinearKernel{4.0, true},
                        MaternKernel{Smoothness::Half, {0.5}, 3.0, true}};
  const auto model = fit_classifier(data, spec, 0.1);
  const auto &trace = model.state().objective_trace;
  ASSERT_GE(trace.size(), 2u);
  for (std::size_t i = 1; i < trace.size(); ++i) {
    EXPECT_GE(trace[i], trace[i - 1]);
  }
}

TEST(LaplaceMode, NonConvergenceReportsGradient) {
  Rng rng(4);
  const Dataset data = random_labels(20, 2, 1, rng);
  LaplaceOptions options;
  options.max_iterations = 1;
  try {
    fit_classifier(data, kMaternSpec, 0.1, options);
    FAIL() << "expected NumericalFailure";
  } catch (const NumericalFailure &e) {
    EXPECT_NE(std::string(e.what()).find("gradient norm"), std::string::npos);
  }
}

TEST(LaplaceMode, RejectsNonBinaryLabels) {
  Dataset data = unit_point(1.0, 0.5);
  data.y[0] = 0.5;
  EXPECT_THROW(fit_classifier(data, kLinearConst, 0.5), InvalidArgument);
}

TEST(ExpectedLogistic, QuadratureAgreesWithIntegration) {
  EXPECT_NEAR(expected_logistic(0.0, 7.0), 0.5, 1e-15);
  EXPECT_NEAR(expected_logistic(1.3, 0.0), logistic(1.3), 1e-15);
  for (const auto &[mean, var] : std::vector<std::pair<double, double>>{
           {0.7, 0.5}, {-1.5, 2.0}, {2.0, 4.0}}) {
    const double ref = integrate_gaussian(
        mean, std::sqrt(var), [](double z) { return logistic(z); });
    EXPECT_NEAR(expected_logistic(mean, var), ref, 1e-6);
  }
}

TEST(PredictProba, OpenIntervalAndComplementSymmetry) {
  Rng rng(5);
  Dataset data = random_labels(30, 2, 1, rng);
  const MatrixXd xq = random_matrix(10, 2, rng) * 3.0;
  const TaskSet tq = TaskSet::continuous(random_matrix(10, 1, rng));
  const auto a = predict_proba(fit_classifier(data, kMaternSpec, 0.2), xq, tq);
  data.y = VectorXd::Ones(data.size()) - data.y;
  const auto b = predict_proba(fit_classifier(data, kMaternSpec, 0.2), xq, tq);
  for (std::size_t q = 0; q < a.size(); ++q) {
    EXPECT_GT(a[q], 0.0);
    EXPECT_LT(a[q], 1.0);
    EXPECT_NEAR(a[q] + b[q], 1.0, 1e-10);
  }
}

TEST(PredictProba, DimensionMismatch) {
  const auto model = fit_classifier(unit_point(1.0, 0.5), kLinearConst, 0.5);
  EXPECT_THROW(predict_proba(model, VectorXd::Ones(2), TaskPoint{TaskId{1}}),
               InvalidArgument);
}

TEST(PredictProba, MatchesLogisticRegressionBoundary) {
  // Two separable points; with tau2 -> 0 the classifier is Bayesian logistic
  // regression with a standard normal weight prior.
  MatrixXd x(2, 2);
  x << 1.0, 0.2, 0.3, -1.0;
  const Dataset data{x, TaskSet::discrete({1, 1}), Eigen::Vector2d(1.0, 0.0)};
  const auto model = fit_classifier(data, kLinearConst, 1e-8);
  // MAP weights by Newton on log p(y|Xw) - |w|^2 / 2.
  Eigen::Vector2d w = Eigen::Vector2d::Zero();
  for (int it = 0; it < 50; ++it) {
    Eigen::Vector2d g = -w;
    Eigen::Matrix2d h = -Eigen::Matrix2d::Identity();
    for (Index i = 0; i < 2; ++i) {
      const double p = logistic(x.row(i).dot(w));
      g += (data.y[i] - p) * x.row(i).transpose();
      h -= p * (1 - p) * x.row(i).transpose() * x.row(i);
    }
    w -= h.ldlt().solve(g);
  }
  int agree = 0;
  int total = 0;
  for (double a = -2.0; a <= 2.0; a += 0.25) {
    for (double b = -2.0; b <= 2.0; b += 0.25) {
      const Eigen::Vector2d q(a, b);
      if (std::abs(q.dot(w)) < 1e-6) {
        continue;
      }
      const double p = predict_proba(model, q, TaskPoint{TaskId{1}});
      agree += (p > 0.5) == (q.dot(w) > 0.0);
      ++total;
    }
  }
  EXPECT_EQ(agree, total);
}

TEST(LaplaceEvidence, ScalarCase) {
  const auto model = fit_classifier(unit_point(1.0, 0.5), kLinearConst, 0.5);
  const double z = model.mode()[0];
  const double p = logistic(z);
  const double expected =
      std::log(p) - 0.5 * z * z - 0.5 * std::log(1.0 + p * (1.0 - p));
  EXPECT_NEAR(laplace_log_marginal(model), expected, 1e-12);
  EXPECT_NEAR(expected, -0.7006551, 1e-6);
  // Exact evidence is E[logistic(z)] under N(0, 1), i.e. -log 2; the Laplace
  // approximation is within 1e-2 of it.
  const double exact = std::log(integrate_gaussian(
      0.0, 1.0, [](double v) { return logistic(v); }));
  EXPECT_NEAR(exact, -std::log(2.0), 1e-9);
  EXPECT_NEAR(laplace_log_marginal(model), exact, 1e-2);
}

TEST(LaplaceEvidence, DegeneratePriorLimit) {
  const double tau2 = 1e-10;
  const Dataset data{MatrixXd::Constant(1, 1, 1e-5), TaskSet::discrete({1}),
                     VectorXd::Ones(1)};
  const auto model = fit_classifier(data, kLinearConst, tau2);
  EXPECT_NEAR(laplace_log_marginal(model), -std::log(2.0), 1e-8);
}

TEST(LaplaceEvidence, PermutationInvariant) {
  Rng rng(6);
  const Dataset data = random_labels(15, 2, 1, rng);
  std::vector<Index> perm(15);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  const double a = laplace_log_marginal(fit_classifier(data, kMaternSpec, 0.2));
  const double b =
      laplace_log_marginal(fit_classifier(data.subset(perm), kMaternSpec, 0.2));
  EXPECT_NEAR(a, b, 1e-10);
}

TEST(LaplaceEvidence, GradientMatchesCentralDifferences) {
  Rng rng(7);
  const Dataset data = random_labels(25, 2, 1, rng);
  LaplaceOptions options;
  options.gradient_tolerance = 1e-10;
  const double h = 1e-5;
  std::normal_distribution<double> jitter(0.0, 0.3);
  for (int point = 0; point < 5; ++point) {
    VectorXd theta = log_parameters(kMaternSpec);
    for (Index j = 0; j < theta.size(); ++j) {
      theta[j] += jitter(rng);
    }
    const double log_tau2 = std::log(0.2) + jitter(rng);
    const KernelSpec spec = with_log_parameters(kMaternSpec, theta);
    const auto ev = laplace_log_marginal_gradient(data, spec,
                                                  std::exp(log_tau2), options);
    auto value = [&](const VectorXd &th, double lt) {
      return laplace_log_marginal(fit_classifier(
          data, with_log_parameters(kMaternSpec, th), std::exp(lt), options));
    };
    for (Index j = 0; j <= theta.size(); ++j) {
      double fd = 0.0;
      if (j < theta.size()) {
        VectorXd up = theta;
        VectorXd down = theta;
        up[j] += h;
        down[j] -= h;
        fd = (value(up, log_tau2) - value(down, log_tau2)) / (2 * h);
      } else {
        fd = (value(theta, log_tau2 + h) - value(theta, log_tau2 - h)) / (2 * h);
      }
      const double scale = std::max(std::abs(fd), 1e-2);
      EXPECT_LE(std::abs(ev.gradient[j] - fd) / scale, 1e-4)
          << "parameter " << j << " analytic " << ev.gradient[j] << " fd " << fd;
    }
  }
}

TEST(ClassifierTuning, DeterministicAndImproves) {
  Rng rng(8);
  const Dataset data = random_labels(40, 2, 1, rng);
  SearchConfig search;
  search.restarts = 2;
  search.seed = 3;
  const auto a = tune_classifier_hyperparameters(data, kMaternSpec, search);
  const auto b = tune_classifier_hyperparameters(data, kMaternSpec, search);
  EXPECT_EQ(a.log_evidence, b.log_evidence);
  const double start =
      laplace_log_marginal(fit_classifier(data, kMaternSpec, search.initial_tau2));
  EXPECT_GE(a.log_evidence, start - 1e-9);
}
