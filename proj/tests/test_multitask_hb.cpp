#include "vcgp/gp_core.hpp"
#include "vcgp/multitask_hb.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

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

Dataset tasks_dataset(Index n, Index m, int k, Rng &rng) {
  std::uniform_int_distribution<int> pick(1, k);
  std::vector<int> ids(static_cast<std::size_t>(n));
  for (auto &id : ids) {
    id = pick(rng);
  }
  return Dataset{random_matrix(n, m, rng), TaskSet::discrete(ids),
                 random_matrix(n, 1, rng).col(0)};
}

} // namespace

TEST(SampleHB, ZeroChildNoiseCopiesRoot) {
  const TaskTree tree({0, 1, 1, 2}, {1.5, 0.0, 0.0, 0.0});
  const auto s = sample_hb(tree, 3, 11);
  for (Index l = 1; l < 4; ++l) {
    EXPECT_EQ(s.wbar.row(l), s.wbar.row(0));
  }
}

TEST(SampleHB, DeterministicGivenSeed) {
  const TaskTree tree({0, 1, 2}, {1.0, 0.5, 0.3});
  EXPECT_EQ(sample_hb(tree, 2, 4).wbar, sample_hb(tree, 2, 4).wbar);
  EXPECT_NE(sample_hb(tree, 2, 4).wbar, sample_hb(tree, 2, 5).wbar);
  EXPECT_THROW(sample_hb(tree, 0, 4), InvalidArgument);
}

TEST(SampleHB, SingleNodeVariance) {
  const TaskTree tree({0}, {2.0});
  Rng rng(3);
  const Index draws = 100000;
  double sum_sq = 0.0;
  double sum_4 = 0.0;
  for (Index s = 0; s < draws; ++s) {
    const double w = sample_hb(tree, 1, rng).wbar(0, 0);
    sum_sq += w * w;
    sum_4 += w * w * w * w;
  }
  const double var = sum_sq / draws;
  const double se = std::sqrt((sum_4 / draws - var * var) / draws);
  EXPECT_LE(std::abs(var - 4.0), 3.0 * se);
}

TEST(SampleHB, ChainMoments) {
  const TaskTree tree({0, 1}, {1.0, 1.0});
  Rng rng(9);
  const Index draws = 1000000;
  double cross = 0.0;
  double cross_sq = 0.0;
  double second = 0.0;
  double second_sq = 0.0;
  for (Index s = 0; s < draws; ++s) {
    const auto w = sample_hb(tree, 1, rng).wbar;
    const double c = w(0, 0) * w(1, 0);
    const double v = w(1, 0) * w(1, 0);
    cross += c;
    cross_sq += c * c;
    second += v;
    second_sq += v * v;
  }
  const double n = static_cast<double>(draws);
  const double cov = cross / n;
  const double var = second / n;
  EXPECT_LE(std::abs(cov - 1.0), 3.0 * std::sqrt((cross_sq / n - cov * cov) / n));
  EXPECT_LE(std::abs(var - 2.0), 3.0 * std::sqrt((second_sq / n - var * var) / n));
}

TEST(RandomTree, ParentsPrecedeAndSigmasInRange) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const TaskTree tree = random_task_tree(15, 0.1, 10.0, rng);
    EXPECT_EQ(tree.size(), 15);
    for (int l = 1; l <= 15; ++l) {
      EXPECT_GE(tree.sigma(l), 0.1);
      EXPECT_LE(tree.sigma(l), 10.0);
    }
  }
}

TEST(GenerativePrecision, InverseOfTreeKernel) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const TaskTree tree = random_task_tree(8, 0.2, 3.0, rng);
    const MatrixXd g = tree_task_kernel(tree);
    EXPECT_LE(max_row_sum(generative_precision(tree) * g - MatrixXd::Identity(8, 8)),
              1e-9);
  }
}

TEST(KronIdentity, Layout) {
  MatrixXd a(2, 2);
  a << 1, 2, 3, 4;
  const MatrixXd k = kron_identity(a, 2);
  MatrixXd expected(4, 4);
  expected << 1, 0, 2, 0, 0, 1, 0, 2, 3, 0, 4, 0, 0, 3, 0, 4;
  EXPECT_EQ(k, expected);
}

TEST(VerifyProp1, SingleNodeAndChain) {
  const auto single = verify_prop1(TaskTree({0}, {1.0}), 2, 100000, 1, 3.0);
  EXPECT_TRUE(single.passed());
  const auto chain = verify_prop1(TaskTree({0, 1}, {1.0, 1.0}), 2, 100000, 2);
  EXPECT_TRUE(chain.passed());
  EXPECT_THROW(verify_prop1(TaskTree({0}, {1.0}), 1, 10, 1), InvalidArgument);
}

TEST(VerifyProp1, RandomTreeMillionSamples) {
  Rng rng(17);
  const TaskTree tree = random_task_tree(5, 0.5, 2.0, rng);
  EXPECT_TRUE(verify_prop1(tree, 3, 1000000, 18).passed());
}

TEST(VerifyProp2, SingleNodeAndChain) {
  const auto single = verify_prop2(TaskTree({0}, {3.0}));
  EXPECT_TRUE(single.passed());
  EXPECT_NEAR(tree_task_kernel(TaskTree({0}, {3.0}))(0, 0) *
                  tree_laplacian(TaskTree({0}, {3.0}))(0, 0),
              1.0, 1e-15);
  const TaskTree chain({0, 1}, {1.0, 1.0});
  EXPECT_EQ(tree_task_kernel(chain) * tree_laplacian(chain),
            MatrixXd::Identity(2, 2));
  EXPECT_TRUE(verify_prop2(chain).passed());
}

TEST(VerifyProp2, RandomTrees) {
  Rng rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    std::uniform_int_distribution<Index> size(1, 50);
    const auto report = verify_prop2(random_task_tree(size(rng), 0.1, 10.0, rng));
    EXPECT_TRUE(report.passed());
  }
}

TEST(EndToEnd, SingleTaskIsBayesianLinearRegression) {
  Rng rng(4);
  const double sigma = 1.7;
  const double tau2 = 0.3;
  const Dataset data{random_matrix(8, 3, rng),
                     TaskSet::discrete(std::vector<int>(8, 1)),
                     random_matrix(8, 1, rng).col(0)};
  const MatrixXd xq = random_matrix(3, 3, rng);
  const auto pred = hierarchical_weight_space_predict(
      TaskTree({0}, {sigma}), data, tau2, xq, {1, 1, 1});
  const MatrixXd precision = MatrixXd::Identity(3, 3) / (sigma * sigma) +
                             data.X.transpose() * data.X / tau2;
  const MatrixXd cov = precision.inverse();
  const VectorXd w = cov * data.X.transpose() * data.y / tau2;
  for (Index q = 0; q < 3; ++q) {
    const VectorXd x = xq.row(q).transpose();
    EXPECT_NEAR(pred[static_cast<std::size_t>(q)].mean, x.dot(w), 1e-10);
    EXPECT_NEAR(pred[static_cast<std::size_t>(q)].latent_var, x.dot(cov * x),
                1e-10);
  }
}

TEST(EndToEnd, ChainSixPoints) {
  Rng rng(6);
  const Dataset data = tasks_dataset(6, 2, 2, rng);
  const auto report = end_to_end_equivalence(
      TaskTree({0, 1}, {1.0, 0.5}), data, 0.1, random_matrix(4, 2, rng),
      {1, 2, 1, 2});
  EXPECT_TRUE(report.passed());
}

TEST(EndToEnd, RandomTrees) {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const TaskTree tree = random_task_tree(6, 0.3, 2.0, rng);
    const Dataset data = tasks_dataset(20, 3, 6, rng);
    const auto report = end_to_end_equivalence(
        tree, data, 0.2, random_matrix(6, 3, rng), {1, 2, 3, 4, 5, 6});
    EXPECT_TRUE(report.passed());
  }
}

TEST(EndToEnd, ZeroChildNoisePoolsTasks) {
  Rng rng(8);
  const Dataset data = tasks_dataset(15, 2, 3, rng);
  const double sigma = 1.3;
  const auto tree_model = fit_regressor(
      data,
      KernelSpec{LinearKernel{}, TreeTaskKernel(TaskTree({0, 1, 1}, {sigma, 0.0, 0.0}))},
      0.2);
  const auto pooled = fit_regressor(
      data, KernelSpec{LinearKernel{sigma}, ConstantTaskKernel{}}, 0.2);
  const MatrixXd xq = random_matrix(3, 2, rng);
  const auto a = predict(tree_model, xq, TaskSet::discrete({1, 2, 3}));
  const auto b = predict(pooled, xq, TaskSet::discrete({1, 2, 3}));
  for (std::size_t q = 0; q < a.size(); ++q) {
    EXPECT_NEAR(a[q].mean, b[q].mean, 1e-10);
    EXPECT_NEAR(a[q].latent_var, b[q].latent_var, 1e-10);
  }
}

TEST(Report, FormatAndNonFinite) {
  VerificationReport r;
  r.add("a", 0.5, 1.0);
  r.add("b", std::nan(""), 1.0);
  EXPECT_FALSE(r.passed());
  std::ostringstream out;
  print_report(out, r);
  EXPECT_EQ(out.str(), "a 5.000000e-01 1.000000e+00 PASS\n"
                       "b nan 1.000000e+00 FAIL\n");
}
