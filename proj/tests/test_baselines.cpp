#include "vcgp/baselines.hpp"
#include "vcgp/data_io.hpp"

#include <gtest/gtest.h>

#include <cmath>

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

Dataset random_dataset(Index n, Index m, Index d, Rng &rng) {
  return Dataset{random_matrix(n, m, rng),
                 TaskSet::continuous(random_matrix(n, d, rng)),
                 random_matrix(n, 1, rng).col(0)};
}

} // namespace

TEST(IidGp, EqualsConstantTaskKernel) {
  Rng rng(1);
  const Dataset data = random_dataset(12, 3, 1, rng);
  const InstanceKernel inst = MaternKernel{Smoothness::ThreeHalves, {1.1}, 0.9, true};
  const auto a = iid_gp(data, inst, 0.2);
  const auto b = fit_regressor(data, KernelSpec{inst, ConstantTaskKernel{}}, 0.2);
  const MatrixXd xq = random_matrix(4, 3, rng);
  const TaskSet tq = TaskSet::continuous(random_matrix(4, 1, rng));
  const auto pa = predict(a, xq, tq);
  const auto pb = predict(b, xq, tq);
  for (std::size_t q = 0; q < pa.size(); ++q) {
    EXPECT_EQ(pa[q].mean, pb[q].mean);
    EXPECT_EQ(pa[q].latent_var, pb[q].latent_var);
  }
}

TEST(IidGp, SinglePointClosedForm) {
  const Dataset data{MatrixXd::Constant(1, 2, 1.0),
                     TaskSet::continuous(MatrixXd::Zero(1, 1)), VectorXd::Ones(1)};
  const auto model = iid_gp(data, LinearKernel{}, 0.5);
  // Prior w ~ N(0, I): mean x*^T x y / (x^T x + tau2).
  const VectorXd xq(Eigen::Vector2d(2.0, -1.0));
  const auto p = predict(model, xq, TaskPoint{VectorXd::Zero(1)});
  EXPECT_NEAR(p.mean, 1.0 / 2.5, 1e-14);
  EXPECT_NEAR(p.latent_var, 5.0 - 1.0 / 2.5, 1e-14);
}

TEST(ConcatGp, ConstantTaskMatchesBiasFeature) {
  Rng rng(2);
  const Index n = 8;
  Dataset data = random_dataset(n, 2, 1, rng);
  const double t0 = 0.7;
  data.tasks = TaskSet::continuous(MatrixXd::Constant(n, 1, t0));
  const auto concat = concat_gp(data, LinearKernel{}, 0.3);
  Dataset biased = data;
  biased.X.conservativeResize(n, 3);
  biased.X.col(2).setConstant(t0);
  const auto iid = iid_gp(biased, LinearKernel{}, 0.3);
  const MatrixXd xq = random_matrix(3, 2, rng);
  const TaskSet tq = TaskSet::continuous(MatrixXd::Constant(3, 1, t0));
  MatrixXd xq_biased(3, 3);
  xq_biased << xq, MatrixXd::Constant(3, 1, t0);
  const auto pc = predict_concat(concat, xq, tq);
  const auto pi = predict(iid, xq_biased, tq);
  for (std::size_t q = 0; q < pc.size(); ++q) {
    EXPECT_NEAR(pc[q].mean, pi[q].mean, 1e-12);
    EXPECT_NEAR(pc[q].latent_var, pi[q].latent_var, 1e-12);
  }
}

TEST(ConcatGp, MaternAtZeroDistance) {
  Rng rng(3);
  const Dataset data = random_dataset(5, 2, 1, rng);
  const auto model =
      concat_gp(data, MaternKernel{Smoothness::Half, {1.0}, 1.7, true}, 0.1);
  const auto diag = product_kernel_diagonal(concat_features(data.X, data.tasks),
                                            data.tasks, model.spec());
  for (Index i = 0; i < diag.size(); ++i) {
    EXPECT_NEAR(diag[i], 1.7 * 1.7, 1e-14);
  }
}

TEST(ConcatGp, RejectsDiscreteTasks) {
  const Dataset data{MatrixXd::Ones(2, 1), TaskSet::discrete({1, 2}),
                     VectorXd::Ones(2)};
  EXPECT_THROW(concat_gp(data, LinearKernel{}, 0.1), InvalidArgument);
}

TEST(ConcatGp, SmokeThousandRows) {
  const auto syn = synth_vcm(1000, 3, 1,
                             MaternKernel{Smoothness::ThreeHalves, {0.3}, 1.0, true},
                             0.1, 4);
  const auto model = concat_gp(
      syn.data, MaternKernel{Smoothness::ThreeHalves, {1.0}, 1.0, true}, 0.1);
  const auto pred = predict_concat(model, syn.data.X.topRows(5),
                                   syn.data.tasks.subset(std::vector<Index>{0, 1, 2, 3, 4}));
  for (const auto &p : pred) {
    EXPECT_TRUE(std::isfinite(p.mean));
  }
}

TEST(FanZhang, HugeBandwidthIsLeastSquares) {
  Rng rng(4);
  const Dataset data = random_dataset(30, 3, 1, rng);
  const MatrixXd xq = random_matrix(4, 3, rng);
  const TaskSet tq = TaskSet::continuous(random_matrix(4, 1, rng));
  const VectorXd pred = fan_zhang_fit_predict(data, xq, tq, 1e8, 0.0);
  const VectorXd ols = (data.X.transpose() * data.X).ldlt().solve(
      data.X.transpose() * data.y);
  EXPECT_LE((pred - xq * ols).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FanZhang, SinglePointInterpolates) {
  const Dataset data{MatrixXd::Ones(1, 1),
                     TaskSet::continuous(MatrixXd::Zero(1, 1)),
                     VectorXd::Constant(1, 2.0)};
  const VectorXd pred = fan_zhang_fit_predict(
      data, MatrixXd::Ones(1, 1), TaskSet::continuous(MatrixXd::Zero(1, 1)),
      1.0, 0.0);
  EXPECT_NEAR(pred[0], 2.0, 1e-14);
}

TEST(FanZhang, MatchesExplicitWeightedLeastSquares) {
  Rng rng(5);
  const Dataset data = random_dataset(20, 3, 2, rng);
  const MatrixXd xq = random_matrix(5, 3, rng);
  const TaskSet tq = TaskSet::continuous(random_matrix(5, 2, rng));
  const double h = 0.8;
  const double lambda = 0.05;
  const VectorXd pred = fan_zhang_fit_predict(data, xq, tq, h, lambda);
  for (Index q = 0; q < 5; ++q) {
    MatrixXd d = MatrixXd::Zero(20, 20);
    for (Index i = 0; i < 20; ++i) {
      const double r = (data.tasks.coords().row(i) - tq.coords().row(q)).norm();
      d(i, i) = std::exp(-r * r / (2.0 * h * h));
    }
    const MatrixXd a =
        data.X.transpose() * d * data.X + lambda * MatrixXd::Identity(3, 3);
    const VectorXd w = a.inverse() * data.X.transpose() * d * data.y;
    EXPECT_NEAR(pred[q], xq.row(q).dot(w), 1e-8);
  }
}

TEST(FanZhang, SingularWithoutRidge) {
  // Two identical instance columns make X^T D X singular.
  Rng rng(6);
  Dataset data = random_dataset(10, 2, 1, rng);
  data.X.col(1) = data.X.col(0);
  try {
    fan_zhang_fit_predict(data, data.X.topRows(1),
                          data.tasks.subset(std::vector<Index>{0}), 1.0, 0.0);
    FAIL() << "expected NumericalFailure";
  } catch (const NumericalFailure &e) {
    EXPECT_NE(std::string(e.what()).find("lambda > 0"), std::string::npos);
  }
}

TEST(FanZhang, CrossValidationPicksFromGrid) {
  const auto syn = synth_vcm(200, 2, 1,
                             MaternKernel{Smoothness::ThreeHalves, {0.3}, 1.0, true},
                             0.05, 8);
  FanZhangGrid grid;
  grid.bandwidths = {0.05, 0.2, 5.0};
  grid.lambdas = {1e-3, 1.0};
  grid.folds = 4;
  const auto a = fan_zhang_cross_validate(syn.data, grid, 3);
  const auto b = fan_zhang_cross_validate(syn.data, grid, 3);
  EXPECT_EQ(a.h, b.h);
  EXPECT_EQ(a.lambda, b.lambda);
  EXPECT_TRUE(std::isfinite(a.cv_mae));
  // Weights vary with t on a 0.3 lengthscale; a global fit is worse.
  EXPECT_NE(a.h, 5.0);
}

TEST(MaternFeatureMap, MedianLengthscaleAndShape) {
  MatrixXd x(3, 1);
  x << 0.0, 1.0, 3.0;
  const auto map = make_matern_feature_map(x, 10, 1);
  EXPECT_EQ(map.basis.rows(), 3);
  // Pairwise distances 1, 2, 3.
  EXPECT_DOUBLE_EQ(map.kernel.lengthscales[0], 2.0);
  const MatrixXd phi = map.apply(x);
  EXPECT_EQ(phi.rows(), 3);
  EXPECT_EQ(phi.cols(), 3);
  // Every x is a basis point, so each row attains k(0) = 1.
  EXPECT_EQ(phi.rowwise().maxCoeff(), VectorXd::Ones(3));
}

TEST(PrimalOracle, ScalarExample) {
  const Dataset data{MatrixXd::Ones(1, 1), TaskSet::discrete({1}),
                     VectorXd::Ones(1)};
  const auto p = primal_oracle_predict(data, {LinearKernel{}, ConstantTaskKernel{}},
                                       1.0, VectorXd::Ones(1), TaskPoint{TaskId{1}});
  EXPECT_NEAR(p.mean, 0.5, 1e-14);
  EXPECT_NEAR(p.total_var(), 1.5, 1e-14);
}

TEST(PrimalOracle, BlockIndependentTasks) {
  // Zero off-diagonal task covariance: the query task shares nothing with the
  // training points, so the prediction is the prior.
  Rng rng(7);
  const Dataset data{random_matrix(4, 2, rng), TaskSet::discrete({1, 1, 1, 1}),
                     random_matrix(4, 1, rng).col(0)};
  const KernelSpec spec{LinearKernel{},
                        LaplacianTaskKernel(MatrixXd::Zero(2, 2),
                                            VectorXd::Constant(2, 1.0))};
  const VectorXd x = random_matrix(2, 1, rng).col(0);
  const auto p = primal_oracle_predict(data, spec, 0.1, x, TaskPoint{TaskId{2}});
  EXPECT_NEAR(p.mean, 0.0, 1e-14);
  EXPECT_NEAR(p.latent_var, x.squaredNorm(), 1e-12);
}

TEST(PrimalOracle, MatchesKernelRoute) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 2 + trial % 10;
    const Dataset data = random_dataset(n, 3, 1, rng);
    const KernelSpec spec{LinearKernel{1.3},
                          MaternKernel{Smoothness::FiveHalves, {0.7}, 1.1, true}};
    const VectorXd x = random_matrix(3, 1, rng).col(0);
    const TaskPoint t{VectorXd(random_matrix(1, 1, rng).col(0))};
    const auto oracle = primal_oracle_predict(data, spec, 0.2, x, t);
    const auto gp = predict(fit_regressor(data, spec, 0.2), x, t);
    EXPECT_NEAR(oracle.mean, gp.mean, 1e-8);
    EXPECT_NEAR(oracle.latent_var, gp.latent_var, 1e-8);
  }
}

TEST(PrimalOracle, SizeLimitsAndKernelFamily) {
  Rng rng(9);
  const Dataset big = random_dataset(51, 2, 1, rng);
  EXPECT_THROW(primal_oracle_predict(big, {LinearKernel{}, ConstantTaskKernel{}},
                                     0.1, VectorXd::Zero(2),
                                     TaskPoint{VectorXd::Zero(1)}),
               InvalidArgument);
  const Dataset small = random_dataset(5, 2, 1, rng);
  EXPECT_THROW(primal_oracle_predict(small, {MaternKernel{}, ConstantTaskKernel{}},
                                     0.1, VectorXd::Zero(2),
                                     TaskPoint{VectorXd::Zero(1)}),
               InvalidArgument);
}
