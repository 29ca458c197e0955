#ifndef VCGP_KERNELS_HPP_
#define VCGP_KERNELS_HPP_

#include "vcgp/error.hpp"
#include "vcgp/linalg.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace vcgp {

// ---------------------------------------------------------------------------
// Matern family
// ---------------------------------------------------------------------------

enum class Smoothness { Half, ThreeHalves, FiveHalves };

inline double smoothness_value(Smoothness nu) {
  switch (nu) {
  case Smoothness::Half:
    return 0.5;
  case Smoothness::ThreeHalves:
    return 1.5;
  case Smoothness::FiveHalves:
    return 2.5;
  }
  return 1.5;
}

inline Smoothness smoothness_from_value(double nu) {
  if (nu == 0.5) {
    return Smoothness::Half;
  }
  if (nu == 1.5) {
    return Smoothness::ThreeHalves;
  }
  if (nu == 2.5) {
    return Smoothness::FiveHalves;
  }
  throw InvalidArgument("matern smoothness must be one of 0.5, 1.5, 2.5");
}

/// Unit-amplitude, unit-lengthscale Matern correlation m_nu(u), u >= 0.
inline double matern_correlation(double u, Smoothness nu) {
  switch (nu) {
  case Smoothness::Half:
    return std::exp(-u);
  case Smoothness::ThreeHalves: {
    const double a = std::sqrt(3.0) * u;
    return (1.0 + a) * std::exp(-a);
  }
  case Smoothness::FiveHalves: {
    const double a = std::sqrt(5.0) * u;
    return (1.0 + a + a * a / 3.0) * std::exp(-a);
  }
  }
  return 0.0;
}

/// d m_nu(u) / du divided by u, which stays finite at u = 0 for nu > 1/2.
/// For nu = 1/2 the caller handles u = 0 separately.
inline double matern_slope_over_u(double u, Smoothness nu) {
  switch (nu) {
  case Smoothness::Half:
    return u > 0.0 ? -std::exp(-u) / u : 0.0;
  case Smoothness::ThreeHalves:
    return -3.0 * std::exp(-std::sqrt(3.0) * u);
  case Smoothness::FiveHalves: {
    const double a = std::sqrt(5.0) * u;
    return -(5.0 / 3.0) * (1.0 + a) * std::exp(-a);
  }
  }
  return 0.0;
}

/// s^2 * m_nu(r / lengthscale).
inline double matern(double r, Smoothness nu, double lengthscale,
                     double amplitude) {
  if (!std::isfinite(r) || r < 0.0) {
    throw InvalidArgument("matern: distance must be finite and non-negative");
  }
  if (!(lengthscale > 0.0) || !(amplitude > 0.0) ||
      !std::isfinite(lengthscale) || !std::isfinite(amplitude)) {
    throw InvalidArgument("matern: lengthscale and amplitude must be positive");
  }
  return amplitude * amplitude * matern_correlation(r / lengthscale, nu);
}

// ---------------------------------------------------------------------------
// Task variables
// ---------------------------------------------------------------------------

struct TaskId {
  int value = 1;
  bool operator==(const TaskId &) const = default;
};

/// Either continuous coordinates t in R^d or a discrete task id in 1..k.
using TaskPoint = std::variant<VectorXd, TaskId>;

/// Homogeneous collection of task points: all continuous (n x d) or all ids.
class TaskSet {
public:
  TaskSet() : data_(MatrixXd(0, 0)) {}

  static TaskSet continuous(MatrixXd coords) {
    if (!coords.allFinite()) {
      throw InvalidArgument("task coordinates must be finite");
    }
    TaskSet out;
    out.data_ = std::move(coords);
    return out;
  }

  static TaskSet discrete(std::vector<int> ids) {
    for (const int id : ids) {
      if (id < 1) {
        throw InvalidArgument("task ids must be >= 1, got " +
                              std::to_string(id));
      }
    }
    TaskSet out;
    out.data_ = std::move(ids);
    return out;
  }

  static TaskSet single(const TaskPoint &point) {
    if (const auto *coords = std::get_if<VectorXd>(&point)) {
      return continuous(coords->transpose());
    }
    return discrete({std::get<TaskId>(point).value});
  }

  bool is_discrete() const {
    return std::holds_alternative<std::vector<int>>(data_);
  }

  Index size() const {
    return is_discrete() ? static_cast<Index>(ids().size()) : coords().rows();
  }

  /// Coordinate dimension d (0 for discrete tasks).
  Index dim() const { return is_discrete() ? 0 : coords().cols(); }

  const MatrixXd &coords() const { return std::get<MatrixXd>(data_); }
  const std::vector<int> &ids() const {
    return std::get<std::vector<int>>(data_);
  }

  TaskPoint point(Index i) const {
    if (is_discrete()) {
      return TaskId{ids()[static_cast<std::size_t>(i)]};
    }
    return VectorXd(coords().row(i).transpose());
  }

  TaskSet subset(std::span<const Index> rows) const {
    if (is_discrete()) {
      std::vector<int> out;
      out.reserve(rows.size());
      for (const Index r : rows) {
        out.push_back(ids()[static_cast<std::size_t>(r)]);
      }
      return discrete(std::move(out));
    }
    MatrixXd out(static_cast<Index>(rows.size()), coords().cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.row(static_cast<Index>(i)) = coords().row(rows[i]);
    }
    return continuous(std::move(out));
  }

  /// Throws unless `point` has the same variant (and dimension) as this set.
  void check_compatible(const TaskPoint &point) const {
    const bool point_discrete = std::holds_alternative<TaskId>(point);
    if (point_discrete != is_discrete()) {
      throw InvalidArgument("task point variant differs from training tasks");
    }
    if (!point_discrete && size() > 0 &&
        std::get<VectorXd>(point).size() != dim()) {
      throw InvalidArgument("task point dimension mismatch");
    }
  }

  bool operator==(const TaskSet &other) const {
    if (is_discrete() != other.is_discrete()) {
      return false;
    }
    if (is_discrete()) {
      return ids() == other.ids();
    }
    return coords().rows() == other.coords().rows() &&
           coords().cols() == other.coords().cols() &&
           coords() == other.coords();
  }

private:
  std::variant<MatrixXd, std::vector<int>> data_;
};

// ---------------------------------------------------------------------------
// Task trees
// ---------------------------------------------------------------------------

/// Rooted tree over tasks 1..k with a standard deviation per node. Node 1 is
/// the root. `parent[l - 1]` holds pa(l); `parent[0]` must be 0.
///
/// sigma_1 must be positive; children may have sigma = 0 (deterministic
/// copy of the parent). Kernels that need precisions reject zero sigmas.
class TaskTree {
public:
  TaskTree(std::vector<int> parent, std::vector<double> sigma)
      : parent_(std::move(parent)), sigma_(std::move(sigma)) {
    const auto k = parent_.size();
    detail::require(k >= 1, "task tree needs at least one node");
    detail::require(sigma_.size() == k,
                    "task tree: sigma length must equal node count");
    detail::require(parent_[0] == 0, "task tree: node 1 must be the root "
                                     "(parent[0] == 0)");
    for (std::size_t l = 1; l < k; ++l) {
      const int p = parent_[l];
      detail::require(p >= 1 && static_cast<std::size_t>(p) <= k &&
                          static_cast<std::size_t>(p) != l + 1,
                      "task tree: node " + std::to_string(l + 1) +
                          " has invalid parent " + std::to_string(p));
    }
    for (std::size_t l = 0; l < k; ++l) {
      detail::require(std::isfinite(sigma_[l]) && sigma_[l] >= 0.0,
                      "task tree: sigma must be finite and non-negative");
    }
    detail::require(sigma_[0] > 0.0, "task tree: root sigma must be positive");
    // Every node must reach the root within k steps.
    for (std::size_t l = 1; l <= k; ++l) {
      int node = static_cast<int>(l);
      std::size_t steps = 0;
      while (node != 1) {
        node = parent_[static_cast<std::size_t>(node - 1)];
        if (++steps > k) {
          throw InvalidArgument("task tree: parent map contains a cycle");
        }
      }
    }
    order_.reserve(k);
    std::vector<std::vector<int>> children(k + 1);
    for (std::size_t l = 2; l <= k; ++l) {
      children[static_cast<std::size_t>(parent_[l - 1])].push_back(
          static_cast<int>(l));
    }
    order_.push_back(1);
    for (std::size_t head = 0; head < order_.size(); ++head) {
      for (const int c : children[static_cast<std::size_t>(order_[head])]) {
        order_.push_back(c);
      }
    }
  }

  Index size() const { return static_cast<Index>(parent_.size()); }

  /// pa(node); 0 for the root.
  int parent(int node) const {
    return parent_[static_cast<std::size_t>(node - 1)];
  }

  double sigma(int node) const {
    return sigma_[static_cast<std::size_t>(node - 1)];
  }

  const std::vector<int> &parents() const { return parent_; }
  const std::vector<double> &sigmas() const { return sigma_; }

  /// Root first; every node appears after its parent.
  const std::vector<int> &topological_order() const { return order_; }

  /// node, pa(node), ..., 1
  std::vector<int> path_to_root(int node) const {
    std::vector<int> path{node};
    while (node != 1) {
      node = parent(node);
      path.push_back(node);
    }
    return path;
  }

  bool all_sigmas_positive() const {
    for (const double s : sigma_) {
      if (!(s > 0.0)) {
        return false;
      }
    }
    return true;
  }

  TaskTree with_sigmas(std::vector<double> sigma) const {
    return TaskTree(parent_, std::move(sigma));
  }

  /// Child-row adjacency: A(l, pa(l)) = 1 (0-based indices l-1, pa(l)-1).
  MatrixXd child_adjacency() const {
    MatrixXd a = MatrixXd::Zero(size(), size());
    for (Index l = 1; l < size(); ++l) {
      a(l, parent_[static_cast<std::size_t>(l)] - 1) = 1.0;
    }
    return a;
  }

  bool operator==(const TaskTree &other) const {
    return parent_ == other.parent_ && sigma_ == other.sigma_;
  }

private:
  std::vector<int> parent_;
  std::vector<double> sigma_;
  std::vector<int> order_;
};

/// Prior covariance of the hierarchical task weights: G(t, t') is the sum of
/// sigma_l^2 over the nodes l shared by the root paths of t and t'. Built in
/// topological order, O(k^2), no matrix inversion.
inline MatrixXd tree_task_kernel(const TaskTree &tree) {
  const Index k = tree.size();
  MatrixXd g = MatrixXd::Zero(k, k);
  std::vector<Index> seen;
  seen.reserve(static_cast<std::size_t>(k));
  for (const int node : tree.topological_order()) {
    const Index l = node - 1;
    const double var = tree.sigma(node) * tree.sigma(node);
    if (node == 1) {
      g(l, l) = var;
    } else {
      const Index p = tree.parent(node) - 1;
      // Nodes visited earlier are never descendants of `node`.
      for (const Index j : seen) {
        g(l, j) = g(j, l) = g(p, j);
      }
      g(l, l) = g(p, p) + var;
    }
    seen.push_back(l);
  }
  return g;
}

/// L = D + R - M for the tree: edge (l, pa(l)) weighted by sigma_l^{-2}, the
/// root precision sigma_1^{-2} in R.
inline MatrixXd tree_laplacian(const TaskTree &tree) {
  detail::require(tree.all_sigmas_positive(),
                  "graph-Laplacian kernel needs all sigmas > 0");
  const Index k = tree.size();
  VectorXd b(k);
  b[0] = 0.0;
  for (Index l = 1; l < k; ++l) {
    b[l] = 1.0 / (tree.sigmas()[static_cast<std::size_t>(l)] *
                  tree.sigmas()[static_cast<std::size_t>(l)]);
  }
  const MatrixXd ba = b.asDiagonal() * tree.child_adjacency();
  const MatrixXd m = ba + ba.transpose();
  MatrixXd lap = -m;
  lap.diagonal() += m.rowwise().sum();
  lap(0, 0) += 1.0 / (tree.sigma(1) * tree.sigma(1));
  return lap;
}

/// Pseudoinverse of D + R - M for a general weighted undirected graph.
inline MatrixXd graph_laplacian_kernel(const MatrixXd &weights,
                                       const VectorXd &regularizer) {
  detail::require(weights.rows() == weights.cols() &&
                      weights.rows() == regularizer.size(),
                  "graph Laplacian: dimension mismatch");
  detail::require(weights.size() == 0 || weights == weights.transpose(),
                  "graph Laplacian: weights must be symmetric");
  MatrixXd lap = -weights;
  lap.diagonal() += weights.rowwise().sum() + regularizer;
  return symmetric_pseudoinverse(lap);
}

inline MatrixXd laplacian_task_kernel(const TaskTree &tree) {
  return symmetric_pseudoinverse(tree_laplacian(tree));
}

// ---------------------------------------------------------------------------
// Kernel specifications
// ---------------------------------------------------------------------------

/// k(x, x') = amplitude^2 * x^T x'
struct LinearKernel {
  double amplitude = 1.0;
  bool learn_amplitude = false;
};

/// amplitude^2 * m_nu(|D^{-1}(a - b)|), D = diag(lengthscales). One
/// lengthscale means isotropic; otherwise one per input dimension.
struct MaternKernel {
  Smoothness nu = Smoothness::ThreeHalves;
  std::vector<double> lengthscales{1.0};
  double amplitude = 1.0;
  bool learn = true;

  void validate() const {
    detail::require(!lengthscales.empty(), "matern: no lengthscales given");
    for (const double l : lengthscales) {
      detail::require(l > 0.0 && std::isfinite(l),
                      "matern: lengthscales must be positive");
    }
    detail::require(amplitude > 0.0 && std::isfinite(amplitude),
                    "matern: amplitude must be positive");
  }

  template <typename A, typename B>
  double scaled_distance(const Eigen::MatrixBase<A> &a,
                         const Eigen::MatrixBase<B> &b) const {
    if (lengthscales.size() == 1) {
      return (a - b).norm() / lengthscales.front();
    }
    double sum = 0.0;
    for (Index j = 0; j < a.size(); ++j) {
      const double u = (a[j] - b[j]) / lengthscales[static_cast<std::size_t>(j)];
      sum += u * u;
    }
    return std::sqrt(sum);
  }

  void check_dimension(Index d) const {
    detail::require(lengthscales.size() == 1 ||
                        static_cast<Index>(lengthscales.size()) == d,
                    "matern: per-dimension lengthscale count does not match "
                    "input dimension");
  }

  template <typename A, typename B>
  double operator()(const Eigen::MatrixBase<A> &a,
                    const Eigen::MatrixBase<B> &b) const {
    return amplitude * amplitude *
           matern_correlation(scaled_distance(a, b), nu);
  }
};

struct ConstantTaskKernel {};

struct TreeTaskKernel {
  TaskTree tree;
  bool learn_sigma = false;
  MatrixXd gram;

  explicit TreeTaskKernel(TaskTree t, bool learn = false)
      : tree(std::move(t)), learn_sigma(learn), gram(tree_task_kernel(tree)) {}
};

/// Pseudoinverse of a regularized graph Laplacian; the hyperparameters are
/// fixed by the graph.
struct LaplacianTaskKernel {
  MatrixXd weights;
  VectorXd regularizer;
  MatrixXd gram;

  LaplacianTaskKernel(MatrixXd m, VectorXd r)
      : weights(std::move(m)), regularizer(std::move(r)),
        gram(graph_laplacian_kernel(weights, regularizer)) {}

  static LaplacianTaskKernel from_tree(const TaskTree &tree) {
    const MatrixXd lap = tree_laplacian(tree);
    MatrixXd m = -lap;
    m.diagonal().setZero();
    VectorXd r = VectorXd::Zero(tree.size());
    r[0] = 1.0 / (tree.sigma(1) * tree.sigma(1));
    return LaplacianTaskKernel(std::move(m), std::move(r));
  }
};

using InstanceKernel = std::variant<LinearKernel, MaternKernel>;
using TaskKernel = std::variant<ConstantTaskKernel, MaternKernel,
                                TreeTaskKernel, LaplacianTaskKernel>;

/// k((x, t), (x', t')) = k_X(x, x') * k_T(t, t')
struct KernelSpec {
  InstanceKernel instance = LinearKernel{};
  TaskKernel task = ConstantTaskKernel{};

  void validate() const {
    if (const auto *m = std::get_if<MaternKernel>(&instance)) {
      m->validate();
    } else {
      const auto &lin = std::get<LinearKernel>(instance);
      detail::require(lin.amplitude > 0.0 && std::isfinite(lin.amplitude),
                      "linear kernel amplitude must be positive");
    }
    if (const auto *m = std::get_if<MaternKernel>(&task)) {
      m->validate();
    }
  }
};

inline std::string describe(const KernelSpec &spec) {
  std::string out = std::holds_alternative<LinearKernel>(spec.instance)
                        ? "linear"
                        : "matern";
  out += " x ";
  switch (spec.task.index()) {
  case 0:
    out += "constant";
    break;
  case 1:
    out += "matern";
    break;
  case 2:
    out += "tree";
    break;
  default:
    out += "laplacian";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace detail {

inline void mirror_lower(MatrixXd &m) {
  m.triangularView<Eigen::StrictlyUpper>() = m.transpose();
}

inline const MatrixXd &discrete_gram(const TaskKernel &kernel) {
  if (const auto *tree = std::get_if<TreeTaskKernel>(&kernel)) {
    return tree->gram;
  }
  return std::get<LaplacianTaskKernel>(kernel).gram;
}

inline void check_task_ids(const TaskSet &tasks, Index k) {
  for (const int id : tasks.ids()) {
    if (id > k) {
      throw InvalidArgument("task id " + std::to_string(id) +
                            " exceeds task count " + std::to_string(k));
    }
  }
}

inline void check_task_kernel_domain(const TaskKernel &kernel,
                                     const TaskSet &tasks) {
  if (std::holds_alternative<ConstantTaskKernel>(kernel)) {
    return;
  }
  if (const auto *m = std::get_if<MaternKernel>(&kernel)) {
    if (tasks.is_discrete()) {
      throw InvalidArgument("matern task kernel needs continuous task points");
    }
    m->check_dimension(tasks.dim());
    return;
  }
  if (!tasks.is_discrete()) {
    throw InvalidArgument("tree/laplacian task kernels need task ids");
  }
  check_task_ids(tasks, discrete_gram(kernel).rows());
}

} // namespace detail

inline MatrixXd instance_gram(const InstanceKernel &kernel, const MatrixXd &a,
                              const MatrixXd &b) {
  detail::require(a.cols() == b.cols(), "instance gram: dimension mismatch");
  if (const auto *lin = std::get_if<LinearKernel>(&kernel)) {
    MatrixXd out = a * b.transpose();
    out *= lin->amplitude * lin->amplitude;
    return out;
  }
  const auto &m = std::get<MaternKernel>(kernel);
  m.check_dimension(a.cols());
  MatrixXd out(a.rows(), b.rows());
  for (Index j = 0; j < b.rows(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      out(i, j) = m(a.row(i), b.row(j));
    }
  }
  return out;
}

/// Symmetric instance Gram matrix; both triangles come from one evaluation.
inline MatrixXd instance_gram(const InstanceKernel &kernel, const MatrixXd &a) {
  MatrixXd out(a.rows(), a.rows());
  if (const auto *lin = std::get_if<LinearKernel>(&kernel)) {
    out.setZero();
    out.selfadjointView<Eigen::Lower>().rankUpdate(
        a, lin->amplitude * lin->amplitude);
  } else {
    const auto &m = std::get<MaternKernel>(kernel);
    m.check_dimension(a.cols());
    for (Index j = 0; j < a.rows(); ++j) {
      for (Index i = j; i < a.rows(); ++i) {
        out(i, j) = m(a.row(i), a.row(j));
      }
    }
  }
  detail::mirror_lower(out);
  return out;
}

inline VectorXd instance_diagonal(const InstanceKernel &kernel,
                                  const MatrixXd &a) {
  if (const auto *lin = std::get_if<LinearKernel>(&kernel)) {
    return lin->amplitude * lin->amplitude * a.rowwise().squaredNorm();
  }
  const auto &m = std::get<MaternKernel>(kernel);
  return VectorXd::Constant(a.rows(), m.amplitude * m.amplitude);
}

inline MatrixXd task_gram(const TaskKernel &kernel, const TaskSet &a,
                          const TaskSet &b) {
  detail::require(a.is_discrete() == b.is_discrete(),
                  "task gram: mixed task variants");
  detail::require(a.is_discrete() || a.size() == 0 || b.size() == 0 ||
                      a.dim() == b.dim(),
                  "task gram: dimension mismatch");
  if (std::holds_alternative<ConstantTaskKernel>(kernel)) {
    return MatrixXd::Ones(a.size(), b.size());
  }
  detail::check_task_kernel_domain(kernel, a);
  detail::check_task_kernel_domain(kernel, b);
  MatrixXd out(a.size(), b.size());
  if (const auto *m = std::get_if<MaternKernel>(&kernel)) {
    for (Index j = 0; j < b.size(); ++j) {
      for (Index i = 0; i < a.size(); ++i) {
        out(i, j) = (*m)(a.coords().row(i), b.coords().row(j));
      }
    }
    return out;
  }
  const MatrixXd &g = detail::discrete_gram(kernel);
  for (Index j = 0; j < b.size(); ++j) {
    for (Index i = 0; i < a.size(); ++i) {
      out(i, j) = g(a.ids()[static_cast<std::size_t>(i)] - 1,
                    b.ids()[static_cast<std::size_t>(j)] - 1);
    }
  }
  return out;
}

inline MatrixXd task_gram(const TaskKernel &kernel, const TaskSet &a) {
  if (std::holds_alternative<ConstantTaskKernel>(kernel)) {
    return MatrixXd::Ones(a.size(), a.size());
  }
  detail::check_task_kernel_domain(kernel, a);
  MatrixXd out(a.size(), a.size());
  if (const auto *m = std::get_if<MaternKernel>(&kernel)) {
    for (Index j = 0; j < a.size(); ++j) {
      for (Index i = j; i < a.size(); ++i) {
        out(i, j) = (*m)(a.coords().row(i), a.coords().row(j));
      }
    }
  } else {
    const MatrixXd &g = detail::discrete_gram(kernel);
    for (Index j = 0; j < a.size(); ++j) {
      for (Index i = j; i < a.size(); ++i) {
        out(i, j) = g(a.ids()[static_cast<std::size_t>(i)] - 1,
                      a.ids()[static_cast<std::size_t>(j)] - 1);
      }
    }
  }
  detail::mirror_lower(out);
  return out;
}

inline VectorXd task_diagonal(const TaskKernel &kernel, const TaskSet &a) {
  if (std::holds_alternative<ConstantTaskKernel>(kernel)) {
    return VectorXd::Ones(a.size());
  }
  detail::check_task_kernel_domain(kernel, a);
  if (const auto *m = std::get_if<MaternKernel>(&kernel)) {
    return VectorXd::Constant(a.size(), m->amplitude * m->amplitude);
  }
  const MatrixXd &g = detail::discrete_gram(kernel);
  VectorXd out(a.size());
  for (Index i = 0; i < a.size(); ++i) {
    const int id = a.ids()[static_cast<std::size_t>(i)];
    out[i] = g(id - 1, id - 1);
  }
  return out;
}

/// Entry (i, j) = k_X(x_i, x'_j) * k_T(t_i, t'_j).
inline MatrixXd product_kernel_matrix(const MatrixXd &x, const TaskSet &t,
                                      const MatrixXd &x2, const TaskSet &t2,
                                      const KernelSpec &spec) {
  detail::require(x.rows() == t.size() && x2.rows() == t2.size(),
                  "product kernel: instance and task counts differ");
  return instance_gram(spec.instance, x, x2)
      .cwiseProduct(task_gram(spec.task, t, t2));
}

inline MatrixXd product_kernel_matrix(const MatrixXd &x, const TaskSet &t,
                                      const KernelSpec &spec) {
  detail::require(x.rows() == t.size(),
                  "product kernel: instance and task counts differ");
  return instance_gram(spec.instance, x).cwiseProduct(task_gram(spec.task, t));
}

inline VectorXd product_kernel_diagonal(const MatrixXd &x, const TaskSet &t,
                                        const KernelSpec &spec) {
  detail::require(x.rows() == t.size(),
                  "product kernel: instance and task counts differ");
  return instance_diagonal(spec.instance, x)
      .cwiseProduct(task_diagonal(spec.task, t));
}

// ---------------------------------------------------------------------------
// Hyperparameters in log space
// ---------------------------------------------------------------------------

inline std::vector<std::string> parameter_names(const KernelSpec &spec) {
  std::vector<std::string> names;
  auto add_matern = [&](const MaternKernel &m, const std::string &prefix) {
    if (!m.learn) {
      return;
    }
    for (std::size_t j = 0; j < m.lengthscales.size(); ++j) {
      names.push_back(prefix + ".log_lengthscale[" + std::to_string(j) + "]");
    }
    names.push_back(prefix + ".log_amplitude");
  };
  if (const auto *lin = std::get_if<LinearKernel>(&spec.instance)) {
    if (lin->learn_amplitude) {
      names.emplace_back("instance.log_amplitude");
    }
  } else {
    add_matern(std::get<MaternKernel>(spec.instance), "instance");
  }
  if (const auto *m = std::get_if<MaternKernel>(&spec.task)) {
    add_matern(*m, "task");
  } else if (const auto *tree = std::get_if<TreeTaskKernel>(&spec.task)) {
    if (tree->learn_sigma) {
      for (Index l = 1; l <= tree->tree.size(); ++l) {
        names.push_back("task.log_sigma[" + std::to_string(l) + "]");
      }
    }
  }
  return names;
}

inline VectorXd log_parameters(const KernelSpec &spec) {
  std::vector<double> values;
  auto add_matern = [&](const MaternKernel &m) {
    if (!m.learn) {
      return;
    }
    for (const double l : m.lengthscales) {
      values.push_back(std::log(l));
    }
    values.push_back(std::log(m.amplitude));
  };
  if (const auto *lin = std::get_if<LinearKernel>(&spec.instance)) {
    if (lin->learn_amplitude) {
      values.push_back(std::log(lin->amplitude));
    }
  } else {
    add_matern(std::get<MaternKernel>(spec.instance));
  }
  if (const auto *m = std::get_if<MaternKernel>(&spec.task)) {
    add_matern(*m);
  } else if (const auto *tree = std::get_if<TreeTaskKernel>(&spec.task)) {
    if (tree->learn_sigma) {
      for (const double s : tree->tree.sigmas()) {
        values.push_back(std::log(s));
      }
    }
  }
  return Eigen::Map<VectorXd>(values.data(), static_cast<Index>(values.size()));
}

inline KernelSpec with_log_parameters(const KernelSpec &spec,
                                      const VectorXd &theta) {
  KernelSpec out = spec;
  Index pos = 0;
  auto take = [&]() {
    detail::require(pos < theta.size(), "too few hyperparameters");
    return std::exp(theta[pos++]);
  };
  auto set_matern = [&](MaternKernel &m) {
    if (!m.learn) {
      return;
    }
    for (double &l : m.lengthscales) {
      l = take();
    }
    m.amplitude = take();
  };
  if (auto *lin = std::get_if<LinearKernel>(&out.instance)) {
    if (lin->learn_amplitude) {
      lin->amplitude = take();
    }
  } else {
    set_matern(std::get<MaternKernel>(out.instance));
  }
  if (auto *m = std::get_if<MaternKernel>(&out.task)) {
    set_matern(*m);
  } else if (auto *tree = std::get_if<TreeTaskKernel>(&out.task)) {
    if (tree->learn_sigma) {
      std::vector<double> sigma;
      for (Index l = 0; l < tree->tree.size(); ++l) {
        sigma.push_back(take());
      }
      out.task = TreeTaskKernel(tree->tree.with_sigmas(std::move(sigma)), true);
    }
  }
  detail::require(pos == theta.size(), "too many hyperparameters");
  return out;
}

namespace detail {

/// d/dlog(theta) of a Matern Gram matrix over rows of (a, b) for each
/// learnable parameter (lengthscales then amplitude). `symmetric` mirrors.
inline std::vector<MatrixXd> matern_gram_gradients(const MaternKernel &m,
                                                   const MatrixXd &a,
                                                   bool symmetric_input) {
  std::vector<MatrixXd> grads;
  if (!m.learn) {
    return grads;
  }
  const Index n = a.rows();
  const std::size_t nl = m.lengthscales.size();
  const double s2 = m.amplitude * m.amplitude;
  for (std::size_t j = 0; j <= nl; ++j) {
    grads.emplace_back(MatrixXd::Zero(n, n));
  }
  for (Index c = 0; c < n; ++c) {
    for (Index r = c; r < n; ++r) {
      const double u = m.scaled_distance(a.row(r), a.row(c));
      const double value = s2 * matern_correlation(u, m.nu);
      grads[nl](r, c) = 2.0 * value;
      if (u == 0.0) {
        continue;
      }
      // dk/dlog l_j = s^2 m'(u) du/dlog l_j, du/dlog l_j = -(delta_j/l_j)^2/u
      const double slope_over_u = s2 * matern_slope_over_u(u, m.nu);
      if (nl == 1) {
        grads[0](r, c) = -slope_over_u * u * u;
      } else {
        for (std::size_t j = 0; j < nl; ++j) {
          const double scaled = (a(r, static_cast<Index>(j)) -
                                 a(c, static_cast<Index>(j))) /
                                m.lengthscales[j];
          grads[j](r, c) = -slope_over_u * scaled * scaled;
        }
      }
    }
  }
  if (symmetric_input) {
    for (auto &g : grads) {
      mirror_lower(g);
    }
  }
  return grads;
}

} // namespace detail

/// dK/dtheta for every learnable log-hyperparameter of `spec`, in the order
/// of parameter_names(spec). K is the symmetric training Gram matrix.
inline std::vector<MatrixXd> product_kernel_gradients(const MatrixXd &x,
                                                      const TaskSet &t,
                                                      const KernelSpec &spec) {
  const MatrixXd kx = instance_gram(spec.instance, x);
  const MatrixXd kt = task_gram(spec.task, t);
  std::vector<MatrixXd> out;
  if (const auto *lin = std::get_if<LinearKernel>(&spec.instance)) {
    if (lin->learn_amplitude) {
      out.push_back(2.0 * kx.cwiseProduct(kt));
    }
  } else {
    for (auto &g : detail::matern_gram_gradients(
             std::get<MaternKernel>(spec.instance), x, true)) {
      out.push_back(g.cwiseProduct(kt));
    }
  }
  if (const auto *m = std::get_if<MaternKernel>(&spec.task)) {
    for (auto &g : detail::matern_gram_gradients(*m, t.coords(), true)) {
      out.push_back(g.cwiseProduct(kx));
    }
  } else if (const auto *tree = std::get_if<TreeTaskKernel>(&spec.task)) {
    if (tree->learn_sigma) {
      const Index n = t.size();
      for (int node = 1; node <= tree->tree.size(); ++node) {
        // 2 sigma_l^2 wherever node l lies on both root paths.
        std::vector<char> below(static_cast<std::size_t>(tree->tree.size() + 1),
                                0);
        for (int other = 1; other <= tree->tree.size(); ++other) {
          for (const int anc : tree->tree.path_to_root(other)) {
            if (anc == node) {
              below[static_cast<std::size_t>(other)] = 1;
              break;
            }
          }
        }
        const double v = 2.0 * tree->tree.sigma(node) * tree->tree.sigma(node);
        MatrixXd g(n, n);
        for (Index j = 0; j < n; ++j) {
          for (Index i = 0; i < n; ++i) {
            const bool both =
                below[static_cast<std::size_t>(t.ids()[static_cast<std::size_t>(i)])] &&
                below[static_cast<std::size_t>(t.ids()[static_cast<std::size_t>(j)])];
            g(i, j) = both ? v * kx(i, j) : 0.0;
          }
        }
        out.push_back(std::move(g));
      }
    }
  }
  return out;
}

} // namespace vcgp

#endif
