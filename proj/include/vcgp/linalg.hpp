#ifndef VCGP_LINALG_HPP_
#define VCGP_LINALG_HPP_

#include "vcgp/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

namespace vcgp {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Jitter escalation: start at 1e-10 * mean(diag), multiply by ten, stop
/// after 1e-4 * mean(diag).
struct JitterPolicy {
  double initial = 1e-10;
  double maximum = 1e-4;
  double growth = 10.0;
};

struct CholeskyFactor {
  MatrixXd lower;
  double jitter = 0.0;

  Index size() const { return lower.rows(); }

  VectorXd solve(const VectorXd &b) const {
    VectorXd x = lower.triangularView<Eigen::Lower>().solve(b);
    lower.triangularView<Eigen::Lower>().transpose().solveInPlace(x);
    return x;
  }

  MatrixXd solve(const MatrixXd &b) const {
    MatrixXd x = lower.triangularView<Eigen::Lower>().solve(b);
    lower.triangularView<Eigen::Lower>().transpose().solveInPlace(x);
    return x;
  }

  /// L^{-1} b
  template <typename Derived>
  auto half_solve(const Eigen::MatrixBase<Derived> &b) const {
    return lower.triangularView<Eigen::Lower>().solve(b).eval();
  }

  double log_determinant() const {
    return 2.0 * lower.diagonal().array().log().sum();
  }

  MatrixXd inverse() const {
    MatrixXd linv = MatrixXd::Identity(size(), size());
    lower.triangularView<Eigen::Lower>().solveInPlace(linv);
    MatrixXd out(size(), size());
    out.noalias() = linv.transpose() * linv;
    return out;
  }
};

/// Cholesky of a symmetric matrix with the escalating-jitter policy. Throws
/// NumericalFailure (with `context` in the message) once the policy is
/// exhausted.
inline CholeskyFactor cholesky_with_jitter(const MatrixXd &a,
                                           const std::string &context = {},
                                           const JitterPolicy &policy = {}) {
  if (a.rows() != a.cols()) {
    throw InvalidArgument("cholesky: matrix is not square");
  }
  if (!a.allFinite()) {
    throw NumericalFailure("cholesky: non-finite matrix entries" +
                           (context.empty() ? "" : " for " + context));
  }
  {
    Eigen::LLT<MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
      return {llt.matrixL(), 0.0};
    }
  }
  const double scale = a.rows() > 0 ? std::abs(a.diagonal().mean()) : 1.0;
  const double base = scale > 0.0 ? scale : 1.0;
  for (double factor = policy.initial; factor <= policy.maximum * (1 + 1e-12);
       factor *= policy.growth) {
    MatrixXd jittered = a;
    jittered.diagonal().array() += factor * base;
    Eigen::LLT<MatrixXd> llt(jittered);
    if (llt.info() == Eigen::Success) {
      return {llt.matrixL(), factor * base};
    }
  }
  std::ostringstream msg;
  msg << "cholesky failed after jitter up to " << policy.maximum
      << " * mean(diag)";
  if (!context.empty()) {
    msg << " for " << context;
  }
  throw NumericalFailure(msg.str());
}

/// Moore-Penrose pseudoinverse of a symmetric matrix; eigenvalues below
/// `relative_cutoff * max|eigenvalue|` are treated as zero.
inline MatrixXd symmetric_pseudoinverse(const MatrixXd &a,
                                        double relative_cutoff = 1e-12) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(a);
  if (eig.info() != Eigen::Success) {
    throw NumericalFailure("pseudoinverse: eigendecomposition failed");
  }
  const VectorXd &values = eig.eigenvalues();
  const double cutoff =
      relative_cutoff * (values.size() ? values.cwiseAbs().maxCoeff() : 0.0);
  VectorXd inverted(values.size());
  for (Index i = 0; i < values.size(); ++i) {
    inverted[i] = std::abs(values[i]) > cutoff ? 1.0 / values[i] : 0.0;
  }
  return eig.eigenvectors() * inverted.asDiagonal() *
         eig.eigenvectors().transpose();
}

/// Nodes and weights for probabilists' Gauss-Hermite quadrature, i.e.
/// E[f(Z)] ~= sum_i w_i f(x_i) for Z ~ N(0, 1). Golub-Welsch.
struct GaussHermite {
  VectorXd nodes;
  VectorXd weights;

  explicit GaussHermite(Index order) {
    MatrixXd jacobi = MatrixXd::Zero(order, order);
    for (Index i = 1; i < order; ++i) {
      jacobi(i, i - 1) = jacobi(i - 1, i) = std::sqrt(static_cast<double>(i));
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(jacobi);
    nodes = eig.eigenvalues();
    weights = eig.eigenvectors().row(0).transpose().array().square();
  }

  template <typename F>
  double expectation(double mean, double stddev, F &&f) const {
    double sum = 0.0;
    for (Index i = 0; i < nodes.size(); ++i) {
      sum += weights[i] * f(mean + stddev * nodes[i]);
    }
    return sum;
  }
};

inline constexpr double kLog2Pi = 1.8378770664093454836;

} // namespace vcgp

#endif
