#include "vcgp/gp_classify.hpp"
#include "vcgp/gp_core.hpp"
#include "vcgp/sparse_fitc.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

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

Dataset random_dataset(Index n, Rng &rng, bool binary = false) {
  Dataset data{random_matrix(n, 2, rng),
               TaskSet::continuous(random_matrix(n, 1, rng)),
               random_matrix(n, 1, rng).col(0)};
  if (binary) {
    data.y = (data.y.array() > 0.0).cast<double>();
  }
  return data;
}

const KernelSpec kSpec{MaternKernel{Smoothness::FiveHalves, {1.2}, 1.0, true},
                       MaternKernel{Smoothness::ThreeHalves, {0.7}, 1.1, true}};

// Explicit FITC covariance Q + diag(K - Q) + tau2 I.
MatrixXd dense_fitc_covariance(const Dataset &data, const InducingSet &u,
                               double tau2) {
  const MatrixXd kff = product_kernel_matrix(data.X, data.tasks, kSpec);
  const MatrixXd kuf =
      product_kernel_matrix(u.X, u.tasks, data.X, data.tasks, kSpec);
  const MatrixXd kuu = product_kernel_matrix(u.X, u.tasks, kSpec);
  const MatrixXd q = kuf.transpose() * kuu.ldlt().solve(kuf);
  MatrixXd c = q;
  c.diagonal() = kff.diagonal();
  c.diagonal().array() += tau2;
  return c;
}

} // namespace

TEST(SelectInducing, SubsetOfRowsAndDeterministic) {
  Rng rng(1);
  const Dataset data = random_dataset(30, rng);
  const auto a = select_inducing(data, 10, 5);
  const auto b = select_inducing(data, 10, 5);
  EXPECT_EQ(a.indices, b.indices);
  EXPECT_EQ(a.size(), 10);
  EXPECT_EQ(std::set<Index>(a.indices.begin(), a.indices.end()).size(), 10u);
  for (std::size_t j = 0; j < a.indices.size(); ++j) {
    EXPECT_EQ(a.X.row(static_cast<Index>(j)), data.X.row(a.indices[j]));
  }
  EXPECT_NE(select_inducing(data, 10, 6).indices, a.indices);
}

TEST(SelectInducing, RejectsBadCount) {
  Rng rng(2);
  const Dataset data = random_dataset(5, rng);
  EXPECT_THROW(select_inducing(data, 6, 0), InvalidArgument);
  EXPECT_THROW(select_inducing(data, 0, 0), InvalidArgument);
}

TEST(FitcRegression, FullInducingSetIsExact) {
  Rng rng(3);
  const Dataset data = random_dataset(40, rng);
  const auto exact = fit_regressor(data, kSpec, 0.1);
  const auto fitc = fit_fitc(data, kSpec, 0.1, select_inducing(data, 40, 1));
  const MatrixXd xq = random_matrix(8, 2, rng);
  const TaskSet tq = TaskSet::continuous(random_matrix(8, 1, rng));
  const auto pe = predict(exact, xq, tq);
  const auto pf = fitc.predict(xq, tq);
  for (std::size_t q = 0; q < pe.size(); ++q) {
    EXPECT_NEAR(pe[q].mean, pf[q].mean, 1e-6);
    EXPECT_NEAR(pe[q].latent_var, pf[q].latent_var, 1e-6);
  }
  EXPECT_NEAR(log_marginal_likelihood(exact), fitc.log_marginal_likelihood(),
              1e-6);
}

TEST(FitcRegression, MatchesDenseSurrogate) {
  Rng rng(4);
  const Dataset data = random_dataset(30, rng);
  const double tau2 = 0.05;
  const auto u = select_inducing(data, 6, 2);
  const auto fitc = fit_fitc(data, kSpec, tau2, u);
  const MatrixXd c = dense_fitc_covariance(data, u, tau2);
  const Eigen::LDLT<MatrixXd> ldlt(c);
  const double dense = -0.5 * data.y.dot(ldlt.solve(data.y)) -
                       0.5 * ldlt.vectorD().array().log().sum() -
                       15.0 * std::log(2.0 * M_PI);
  EXPECT_NEAR(fitc.log_marginal_likelihood(), dense, 1e-8);
  // Predictive mean: Q_*f C^{-1} y.
  const MatrixXd xq = random_matrix(4, 2, rng);
  const TaskSet tq = TaskSet::continuous(random_matrix(4, 1, rng));
  const MatrixXd kuu = product_kernel_matrix(u.X, u.tasks, kSpec);
  const MatrixXd kuf =
      product_kernel_matrix(u.X, u.tasks, data.X, data.tasks, kSpec);
  const MatrixXd kus = product_kernel_matrix(u.X, u.tasks, xq, tq, kSpec);
  const MatrixXd qsf = kus.transpose() * kuu.ldlt().solve(kuf);
  const VectorXd mean = qsf * ldlt.solve(data.y);
  const auto pred = fitc.predict(xq, tq);
  for (Index q = 0; q < 4; ++q) {
    EXPECT_NEAR(pred[static_cast<std::size_t>(q)].mean, mean[q], 1e-8);
    EXPECT_GE(pred[static_cast<std::size_t>(q)].latent_var, 0.0);
  }
}

TEST(FitcRegression, SingleInducingPoint) {
  Rng rng(5);
  const Dataset data = random_dataset(20, rng);
  const auto fitc = fit_fitc(data, kSpec, 0.1, select_inducing(data, 1, 0));
  EXPECT_TRUE(std::isfinite(fitc.log_marginal_likelihood()));
  EXPECT_TRUE(std::isfinite(
      fitc.predict(VectorXd::Zero(2), TaskPoint{VectorXd::Zero(1)}).mean));
}

TEST(FitcClassifier, FullInducingSetIsExact) {
  Rng rng(6);
  const Dataset data = random_dataset(30, rng, true);
  const auto exact = fit_classifier(data, kSpec, 0.2);
  const auto fitc =
      fit_fitc_classifier(data, kSpec, 0.2, select_inducing(data, 30, 3));
  EXPECT_LE((exact.mode() - fitc.state().mode).cwiseAbs().maxCoeff(), 1e-6);
  const MatrixXd xq = random_matrix(6, 2, rng);
  const TaskSet tq = TaskSet::continuous(random_matrix(6, 1, rng));
  const auto pe = predict_proba(exact, xq, tq);
  const auto pf = fitc.predict_proba(xq, tq);
  for (std::size_t q = 0; q < pe.size(); ++q) {
    EXPECT_NEAR(pe[q], pf[q], 1e-6);
  }
  EXPECT_NEAR(laplace_log_marginal(exact), fitc.log_marginal(), 1e-6);
}

TEST(FitcClassifier, MatchesDenseLaplaceOnSurrogate) {
  Rng rng(7);
  const Dataset data = random_dataset(25, rng, true);
  const auto u = select_inducing(data, 5, 4);
  const auto fitc = fit_fitc_classifier(data, kSpec, 0.2, u);
  const DenseLatentPrior dense(dense_fitc_covariance(data, u, 0.2));
  const auto state = find_laplace_mode(dense, data.y);
  EXPECT_LE((state.mode - fitc.state().mode).cwiseAbs().maxCoeff(), 1e-7);
  EXPECT_NEAR(laplace_log_marginal(state), fitc.log_marginal(), 1e-8);
}
