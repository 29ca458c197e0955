#ifndef VCGP_SERIALIZATION_HPP_
#define VCGP_SERIALIZATION_HPP_

#include "vcgp/error.hpp"
#include "vcgp/gp_classify.hpp"
#include "vcgp/gp_core.hpp"
#include "vcgp/kernels.hpp"
#include "vcgp/linalg.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace vcgp {

using Json = nlohmann::json;

namespace detail {

inline Json matrix_to_json(const MatrixXd &m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) {
      row.push_back(m(i, j));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline MatrixXd matrix_from_json(const Json &j, const std::string &what) {
  detail::require(j.is_array(), what + ": expected an array of rows");
  const auto rows = static_cast<Index>(j.size());
  const Index cols = rows ? static_cast<Index>(j.front().size()) : 0;
  MatrixXd out(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Json &row = j[static_cast<std::size_t>(i)];
    detail::require(row.is_array() && static_cast<Index>(row.size()) == cols,
                    what + ": ragged matrix");
    for (Index c = 0; c < cols; ++c) {
      out(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  return out;
}

inline Json matern_to_json(const MaternKernel &m) {
  return Json{{"type", "matern"},
              {"nu", smoothness_value(m.nu)},
              {"lengthscales", m.lengthscales},
              {"amplitude", m.amplitude},
              {"learn", m.learn}};
}

inline MaternKernel matern_from_json(const Json &j) {
  MaternKernel m;
  m.nu = smoothness_from_value(j.value("nu", 1.5));
  if (j.contains("lengthscales")) {
    m.lengthscales = j.at("lengthscales").get<std::vector<double>>();
  } else if (j.contains("lengthscale")) {
    m.lengthscales = {j.at("lengthscale").get<double>()};
  }
  m.amplitude = j.value("amplitude", 1.0);
  m.learn = j.value("learn", true);
  m.validate();
  return m;
}

} // namespace detail

inline Json instance_kernel_to_json(const InstanceKernel &k) {
  if (const auto *lin = std::get_if<LinearKernel>(&k)) {
    return Json{{"type", "linear"},
                {"amplitude", lin->amplitude},
                {"learn", lin->learn_amplitude}};
  }
  return detail::matern_to_json(std::get<MaternKernel>(k));
}

inline InstanceKernel instance_kernel_from_json(const Json &j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "linear") {
    return LinearKernel{j.value("amplitude", 1.0), j.value("learn", false)};
  }
  if (type == "matern") {
    return detail::matern_from_json(j);
  }
  throw InvalidArgument("unknown instance kernel type '" + type + "'");
}

inline Json task_kernel_to_json(const TaskKernel &k) {
  if (std::holds_alternative<ConstantTaskKernel>(k)) {
    return Json{{"type", "constant"}};
  }
  if (const auto *m = std::get_if<MaternKernel>(&k)) {
    return detail::matern_to_json(*m);
  }
  if (const auto *t = std::get_if<TreeTaskKernel>(&k)) {
    return Json{{"type", "tree"},
                {"parent", t->tree.parents()},
                {"sigma", t->tree.sigmas()},
                {"learn", t->learn_sigma}};
  }
  const auto &lap = std::get<LaplacianTaskKernel>(k);
  std::vector<double> r(lap.regularizer.data(),
                        lap.regularizer.data() + lap.regularizer.size());
  return Json{{"type", "laplacian"},
              {"weights", detail::matrix_to_json(lap.weights)},
              {"regularizer", r}};
}

/// {"type": "tree", "parent": [0, 1, 1], "sigma": [...]} takes the
/// parent of node l at index l - 1 (the root's entry is 0). A "laplacian"
/// entry takes either a tree (parent/sigma) or explicit weights/regularizer.
inline TaskKernel task_kernel_from_json(const Json &j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "constant") {
    return ConstantTaskKernel{};
  }
  if (type == "matern") {
    return detail::matern_from_json(j);
  }
  if (type == "tree" || (type == "laplacian" && j.contains("parent"))) {
    TaskTree tree(j.at("parent").get<std::vector<int>>(),
                  j.at("sigma").get<std::vector<double>>());
    if (type == "laplacian") {
      return LaplacianTaskKernel::from_tree(tree);
    }
    return TreeTaskKernel(std::move(tree), j.value("learn", false));
  }
  if (type == "laplacian") {
    const auto r = j.at("regularizer").get<std::vector<double>>();
    return LaplacianTaskKernel(
        detail::matrix_from_json(j.at("weights"), "laplacian weights"),
        Eigen::Map<const VectorXd>(r.data(), static_cast<Index>(r.size())));
  }
  throw InvalidArgument("unknown task kernel type '" + type + "'");
}

inline Json kernel_spec_to_json(const KernelSpec &spec) {
  return Json{{"instance", instance_kernel_to_json(spec.instance)},
              {"task", task_kernel_to_json(spec.task)}};
}

inline KernelSpec kernel_spec_from_json(const Json &j) {
  KernelSpec spec{instance_kernel_from_json(j.at("instance")),
                  task_kernel_from_json(j.at("task"))};
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------------------
// Regressor artifact
//
//   vcgp-model v1 regressor
//   spec <one-line JSON kernel spec>
//   tau2 <double>
//   jitter <double>
//   shape <n> <m> <d> <discrete 0|1>
//   <n lines: x_1..x_m task(d coords or id) y>
//   chol
//   <n lines: row i of the lower Cholesky factor, row-major>
//
// Classifier artifacts start with "vcgp-model v1 classifier", drop the jitter
// line, and end with "alpha" followed by n lines of alpha = C^{-1} z_hat.
//
// Doubles are written with 17 significant digits so a round trip is exact.
// ---------------------------------------------------------------------------

namespace detail {

inline void put_double(std::ostream &out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

inline void expect_token(std::istream &in, const std::string &token) {
  std::string got;
  if (!(in >> got) || got != token) {
    throw ParseError("model artifact: expected '" + token + "', got '" + got +
                     "'");
  }
}

inline double read_double(std::istream &in) {
  std::string tok;
  if (!(in >> tok)) {
    throw ParseError("model artifact: unexpected end of input");
  }
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError("model artifact: bad number '" + tok + "'");
  }
  return v;
}

inline void put_dataset(std::ostream &out, const Dataset &data) {
  const bool discrete = data.tasks.is_discrete();
  out << "shape " << data.size() << ' ' << data.dim() << ' '
      << data.tasks.dim() << ' ' << (discrete ? 1 : 0) << '\n';
  for (Index i = 0; i < data.size(); ++i) {
    for (Index j = 0; j < data.dim(); ++j) {
      detail::put_double(out, data.X(i, j));
      out << ' ';
    }
    if (discrete) {
      out << data.tasks.ids()[static_cast<std::size_t>(i)] << ' ';
    } else {
      for (Index j = 0; j < data.tasks.dim(); ++j) {
        detail::put_double(out, data.tasks.coords()(i, j));
        out << ' ';
      }
    }
    detail::put_double(out, data.y[i]);
    out << '\n';
  }
}

inline Dataset read_dataset(std::istream &in) {
  detail::expect_token(in, "shape");
  Index n = 0;
  Index m = 0;
  Index d = 0;
  int discrete = 0;
  if (!(in >> n >> m >> d >> discrete) || n < 1 || m < 0 || d < 0) {
    throw ParseError("model artifact: bad shape line");
  }
  Dataset data{MatrixXd(n, m), TaskSet(), VectorXd(n)};
  MatrixXd coords(n, d);
  std::vector<int> ids;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < m; ++j) {
      data.X(i, j) = detail::read_double(in);
    }
    if (discrete) {
      ids.push_back(static_cast<int>(detail::read_double(in)));
    } else {
      for (Index j = 0; j < d; ++j) {
        coords(i, j) = detail::read_double(in);
      }
    }
    data.y[i] = detail::read_double(in);
  }
  data.tasks = discrete ? TaskSet::discrete(std::move(ids))
                        : TaskSet::continuous(std::move(coords));
  return data;
}

inline KernelSpec read_spec_line(std::istream &in) {
  std::string line;
  detail::expect_token(in, "spec");
  std::getline(in, line);
  try {
    return kernel_spec_from_json(Json::parse(line));
  } catch (const Json::exception &e) {
    throw ParseError(std::string("model artifact: bad spec: ") + e.what());
  }
}

} // namespace detail

inline void save_regressor(std::ostream &out, const FittedRegressor &model) {
  out << "vcgp-model v1 regressor\n";
  out << "spec " << kernel_spec_to_json(model.spec()).dump() << '\n';
  out << "tau2 ";
  detail::put_double(out, model.tau2());
  out << "\njitter ";
  detail::put_double(out, model.jitter());
  out << '\n';
  detail::put_dataset(out, model.data());
  out << "chol\n";
  const MatrixXd &l = model.cholesky().lower;
  for (Index i = 0; i < l.rows(); ++i) {
    for (Index j = 0; j < l.cols(); ++j) {
      if (j) {
        out << ' ';
      }
      detail::put_double(out, l(i, j));
    }
    out << '\n';
  }
}

inline FittedRegressor load_regressor(std::istream &in) {
  std::string line;
  std::getline(in, line);
  if (line != "vcgp-model v1 regressor") {
    throw ParseError("model artifact: unsupported header '" + line + "'");
  }
  KernelSpec spec = detail::read_spec_line(in);
  detail::expect_token(in, "tau2");
  const double tau2 = detail::read_double(in);
  detail::expect_token(in, "jitter");
  const double jitter = detail::read_double(in);
  Dataset data = detail::read_dataset(in);
  const Index n = data.size();
  detail::expect_token(in, "chol");
  CholeskyFactor chol{MatrixXd(n, n), jitter};
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      chol.lower(i, j) = detail::read_double(in);
    }
  }
  VectorXd alpha = chol.solve(data.y);
  return FittedRegressor(std::move(spec), tau2, std::move(data),
                         std::move(chol), std::move(alpha));
}

/// Classifier artifact: same layout as the regressor, with the posterior
/// weights alpha = C^{-1} z_hat in place of the Cholesky factor. Loading
/// refits from alpha, which lands on the stored mode in one Newton step.
inline void save_classifier(std::ostream &out, const FittedClassifier &model) {
  out << "vcgp-model v1 classifier\n";
  out << "spec " << kernel_spec_to_json(model.spec()).dump() << '\n';
  out << "tau2 ";
  detail::put_double(out, model.tau2());
  out << '\n';
  detail::put_dataset(out, model.data());
  out << "alpha\n";
  for (Index i = 0; i < model.alpha().size(); ++i) {
    detail::put_double(out, model.alpha()[i]);
    out << '\n';
  }
}

inline FittedClassifier load_classifier(std::istream &in) {
  std::string line;
  std::getline(in, line);
  if (line != "vcgp-model v1 classifier") {
    throw ParseError("model artifact: unsupported header '" + line + "'");
  }
  KernelSpec spec = detail::read_spec_line(in);
  detail::expect_token(in, "tau2");
  const double tau2 = detail::read_double(in);
  Dataset data = detail::read_dataset(in);
  detail::expect_token(in, "alpha");
  VectorXd alpha(data.size());
  for (Index i = 0; i < alpha.size(); ++i) {
    alpha[i] = detail::read_double(in);
  }
  return fit_classifier(data, spec, tau2, {}, &alpha);
}

} // namespace vcgp

#endif
