#ifndef VCGP_DATA_IO_HPP_
#define VCGP_DATA_IO_HPP_

#include "vcgp/error.hpp"
#include "vcgp/gp_core.hpp"
#include "vcgp/kernels.hpp"
#include "vcgp/linalg.hpp"
#include "vcgp/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace vcgp {

// ---------------------------------------------------------------------------
// Schema and raw records
// ---------------------------------------------------------------------------

enum class ColumnRole { Feature, Target, TaskCoord, TaskTime, TaskId, Ignore };
enum class ColumnType { Numeric, Categorical, Date };

struct ColumnSchema {
  std::string name;
  ColumnRole role = ColumnRole::Feature;
  ColumnType type = ColumnType::Numeric;
};

struct Schema {
  std::vector<ColumnSchema> columns;

  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i].name == name) {
        return i;
      }
    }
    return std::nullopt;
  }

  void validate() const {
    std::set<std::string> names;
    int targets = 0;
    bool has_id = false;
    bool has_coords = false;
    for (const auto &c : columns) {
      detail::require(!c.name.empty(), "schema: empty column name");
      detail::require(names.insert(c.name).second,
                      "schema: duplicate column '" + c.name + "'");
      targets += c.role == ColumnRole::Target ? 1 : 0;
      has_id = has_id || c.role == ColumnRole::TaskId;
      has_coords = has_coords || c.role == ColumnRole::TaskCoord ||
                   c.role == ColumnRole::TaskTime;
      if (c.role == ColumnRole::Target || c.role == ColumnRole::TaskCoord ||
          c.role == ColumnRole::TaskId) {
        detail::require(c.type == ColumnType::Numeric,
                        "schema: column '" + c.name + "' must be numeric");
      }
    }
    detail::require(targets == 1, "schema: exactly one target column needed");
    detail::require(has_id || has_coords,
                    "schema: no task column (task_coord, task_time or task_id)");
    detail::require(!(has_id && has_coords),
                    "schema: task ids cannot be mixed with task coordinates");
  }
};

/// A parsed cell. Dates are stored as days since 1970-01-01.
struct Field {
  bool missing = true;
  double number = 0.0;
  std::string text;

  bool operator==(const Field &) const = default;
};

struct RawRecord {
  std::size_t line = 0;
  /// One field per schema column, in schema order.
  std::vector<Field> fields;

  bool operator==(const RawRecord &) const = default;
};

struct RawTable {
  Schema schema;
  std::vector<RawRecord> records;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string &line,
                                               std::size_t line_number) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cell));
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  if (quoted) {
    throw ParseError("line " + std::to_string(line_number) +
                     ": unterminated quoted field");
  }
  out.push_back(std::move(cell));
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  return s;
}

inline bool is_missing(std::string_view s) { return s.empty() || s == "NA"; }

inline std::optional<double> parse_number(std::string_view s) {
  double value = 0.0;
  const auto *end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

/// YYYY-MM-DD to days since 1970-01-01.
inline std::optional<double> parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') {
    return std::nullopt;
  }
  int y = 0;
  unsigned mo = 0;
  unsigned d = 0;
  if (std::from_chars(s.data(), s.data() + 4, y).ptr != s.data() + 4 ||
      std::from_chars(s.data() + 5, s.data() + 7, mo).ptr != s.data() + 7 ||
      std::from_chars(s.data() + 8, s.data() + 10, d).ptr != s.data() + 10) {
    return std::nullopt;
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y},
                                        std::chrono::month{mo},
                                        std::chrono::day{d}};
  if (!ymd.ok()) {
    return std::nullopt;
  }
  return static_cast<double>(
      std::chrono::sys_days{ymd}.time_since_epoch().count());
}

} // namespace detail

/// Reads a CSV with a header row. Every header column must be declared in the
/// schema and every schema column must appear in the header.
inline RawTable load_csv(std::istream &in, const Schema &schema,
                         const std::string &source = "csv") {
  schema.validate();
  std::string line;
  std::size_t line_number = 0;
  if (!std::getline(in, line)) {
    throw ParseError(source + ": missing header row");
  }
  ++line_number;
  const auto header = detail::split_csv_line(line, line_number);
  std::vector<std::optional<std::size_t>> slot(header.size());
  std::vector<bool> seen(schema.columns.size(), false);
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto name = std::string(detail::trim(header[i]));
    const auto idx = schema.find(name);
    if (!idx) {
      throw ParseError(source + ": unknown column '" + name +
                       "' not declared in schema");
    }
    if (seen[*idx]) {
      throw ParseError(source + ": column '" + name + "' appears twice");
    }
    seen[*idx] = true;
    slot[i] = idx;
  }
  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    if (!seen[c]) {
      throw ParseError(source + ": schema column '" + schema.columns[c].name +
                       "' missing from header");
    }
  }
  RawTable table{schema, {}};
  while (std::getline(in, line)) {
    ++line_number;
    if (detail::trim(line).empty() || detail::trim(line) == "\r") {
      continue;
    }
    const auto cells = detail::split_csv_line(line, line_number);
    if (cells.size() != header.size()) {
      throw ParseError(source + ": line " + std::to_string(line_number) +
                       ": expected " + std::to_string(header.size()) +
                       " fields, found " + std::to_string(cells.size()));
    }
    RawRecord record{line_number,
                     std::vector<Field>(schema.columns.size())};
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto &col = schema.columns[*slot[i]];
      const auto text = detail::trim(cells[i]);
      Field &field = record.fields[*slot[i]];
      field.text = std::string(text);
      if (detail::is_missing(text) || col.role == ColumnRole::Ignore) {
        field.missing = detail::is_missing(text);
        continue;
      }
      field.missing = false;
      if (col.type == ColumnType::Categorical) {
        continue;
      }
      auto value = col.type == ColumnType::Date ? detail::parse_date(text)
                                                : detail::parse_number(text);
      if (!value && col.type == ColumnType::Date) {
        value = detail::parse_number(text);
      }
      if (!value) {
        throw ParseError(source + ": line " + std::to_string(line_number) +
                         ": column '" + col.name + "' expects " +
                         (col.type == ColumnType::Date ? "a date" : "a number") +
                         ", got '" + field.text + "'");
      }
      field.number = *value;
    }
    table.records.push_back(std::move(record));
  }
  return table;
}

inline RawTable load_csv(const std::string &path, const Schema &schema) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open " + path);
  }
  return load_csv(in, schema, path);
}

// ---------------------------------------------------------------------------
// Preprocessing
// ---------------------------------------------------------------------------

/// Records whose `column` lies outside [lo, hi] are dropped.
struct Bracket {
  std::string column;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

struct PreprocessPolicy {
  std::vector<Bracket> brackets;
  bool drop_missing = true;
};

/// Drops out-of-bracket records and, under the policy, records with a
/// missing value in any used column. Idempotent.
inline RawTable filter_records(const RawTable &table,
                               const PreprocessPolicy &policy) {
  std::vector<std::pair<std::size_t, Bracket>> brackets;
  for (const auto &b : policy.brackets) {
    const auto idx = table.schema.find(b.column);
    detail::require(idx.has_value(),
                    "bracket on unknown column '" + b.column + "'");
    detail::require(table.schema.columns[*idx].type != ColumnType::Categorical,
                    "bracket on categorical column '" + b.column + "'");
    detail::require(b.lo <= b.hi, "bracket bounds reversed on '" + b.column + "'");
    brackets.emplace_back(*idx, b);
  }
  RawTable out{table.schema, {}};
  for (const auto &record : table.records) {
    bool keep = true;
    for (std::size_t c = 0; c < table.schema.columns.size() && keep; ++c) {
      const auto &col = table.schema.columns[c];
      if (col.role == ColumnRole::Ignore) {
        continue;
      }
      const bool required =
          policy.drop_missing || col.role != ColumnRole::Feature;
      if (record.fields[c].missing && required) {
        keep = false;
      }
    }
    for (const auto &[idx, b] : brackets) {
      const Field &f = record.fields[idx];
      if (!keep) {
        break;
      }
      if (f.missing || f.number < b.lo || f.number > b.hi) {
        keep = false;
      }
    }
    if (keep) {
      out.records.push_back(record);
    }
  }
  return out;
}

/// Column layout learned from training records: categorical levels and the
/// time origin. Unseen levels encode as all zeros.
class Encoder {
public:
  static Encoder fit(const RawTable &train) {
    Encoder enc;
    enc.schema_ = train.schema;
    enc.time_origin_ = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < train.schema.columns.size(); ++c) {
      const auto &col = train.schema.columns[c];
      if (col.role == ColumnRole::Feature &&
          col.type == ColumnType::Categorical) {
        std::set<std::string> levels;
        for (const auto &r : train.records) {
          if (!r.fields[c].missing) {
            levels.insert(r.fields[c].text);
          }
        }
        enc.levels_[c] = std::vector<std::string>(levels.begin(), levels.end());
      }
      if (col.role == ColumnRole::TaskTime) {
        for (const auto &r : train.records) {
          if (!r.fields[c].missing) {
            enc.time_origin_ = std::min(enc.time_origin_, r.fields[c].number);
          }
        }
      }
    }
    if (!std::isfinite(enc.time_origin_)) {
      enc.time_origin_ = 0.0;
    }
    for (std::size_t c = 0; c < enc.schema_.columns.size(); ++c) {
      const auto &col = enc.schema_.columns[c];
      if (col.role != ColumnRole::Feature) {
        continue;
      }
      if (col.type == ColumnType::Categorical) {
        for (const auto &level : enc.levels_[c]) {
          enc.names_.push_back(col.name + "=" + level);
          enc.numeric_.push_back(false);
        }
      } else {
        enc.names_.push_back(col.name);
        enc.numeric_.push_back(true);
      }
    }
    return enc;
  }

  const std::vector<std::string> &feature_names() const { return names_; }
  /// True for numeric features, false for one-hot indicator columns.
  const std::vector<bool> &numeric_features() const { return numeric_; }
  double time_origin() const { return time_origin_; }

  /// Feature matrix, task points (coords then days since the training
  /// origin, or ids) and targets. Missing numeric features, if the policy
  /// kept them, encode as 0.
  Dataset encode(const RawTable &table) const {
    detail::require(!table.records.empty(),
                    "preprocess: no records left after filtering");
    const auto n = static_cast<Index>(table.records.size());
    const auto &cols = schema_.columns;
    std::vector<std::size_t> coord_cols;
    std::optional<std::size_t> id_col;
    std::size_t target_col = 0;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (cols[c].role == ColumnRole::TaskCoord ||
          cols[c].role == ColumnRole::TaskTime) {
        coord_cols.push_back(c);
      } else if (cols[c].role == ColumnRole::TaskId) {
        id_col = c;
      } else if (cols[c].role == ColumnRole::Target) {
        target_col = c;
      }
    }
    Dataset out;
    out.X = MatrixXd::Zero(n, static_cast<Index>(names_.size()));
    out.y.resize(n);
    MatrixXd coords(n, static_cast<Index>(coord_cols.size()));
    std::vector<int> ids;
    for (Index i = 0; i < n; ++i) {
      const auto &r = table.records[static_cast<std::size_t>(i)];
      Index j = 0;
      for (std::size_t c = 0; c < cols.size(); ++c) {
        if (cols[c].role != ColumnRole::Feature) {
          continue;
        }
        if (cols[c].type == ColumnType::Categorical) {
          const auto &levels = levels_.at(c);
          const auto it = std::lower_bound(levels.begin(), levels.end(),
                                           r.fields[c].text);
          if (!r.fields[c].missing && it != levels.end() &&
              *it == r.fields[c].text) {
            out.X(i, j + (it - levels.begin())) = 1.0;
          }
          j += static_cast<Index>(levels.size());
        } else {
          out.X(i, j++) = r.fields[c].missing ? 0.0 : r.fields[c].number;
        }
      }
      detail::require(!r.fields[target_col].missing,
                      "line " + std::to_string(r.line) + ": missing target");
      out.y[i] = r.fields[target_col].number;
      for (std::size_t q = 0; q < coord_cols.size(); ++q) {
        const auto c = coord_cols[q];
        detail::require(!r.fields[c].missing,
                        "line " + std::to_string(r.line) + ": missing task value");
        coords(i, static_cast<Index>(q)) =
            cols[c].role == ColumnRole::TaskTime
                ? r.fields[c].number - time_origin_
                : r.fields[c].number;
      }
      if (id_col) {
        const double v = r.fields[*id_col].number;
        if (r.fields[*id_col].missing || v < 1.0 || v != std::floor(v)) {
          throw ParseError("line " + std::to_string(r.line) +
                           ": task id must be an integer >= 1");
        }
        ids.push_back(static_cast<int>(v));
      }
    }
    out.tasks = id_col ? TaskSet::discrete(std::move(ids))
                       : TaskSet::continuous(std::move(coords));
    return out;
  }

private:
  Schema schema_;
  std::map<std::size_t, std::vector<std::string>> levels_;
  std::vector<std::string> names_;
  std::vector<bool> numeric_;
  double time_origin_ = 0.0;
};

/// Filter then encode with categories and time origin taken from the same
/// records.
inline Dataset preprocess(const RawTable &table,
                          const PreprocessPolicy &policy) {
  const RawTable kept = filter_records(table, policy);
  detail::require(!kept.records.empty(),
                  "preprocess: every record was filtered out");
  return Encoder::fit(kept).encode(kept);
}

/// Per-column z-scoring with statistics from a training set. Columns with
/// zero spread and non-numeric columns pass through unchanged.
struct Standardizer {
  VectorXd mean;
  VectorXd scale;

  static Standardizer fit(const MatrixXd &x, const std::vector<bool> &numeric) {
    detail::require(static_cast<Index>(numeric.size()) == x.cols(),
                    "standardizer: column mask size mismatch");
    Standardizer s{VectorXd::Zero(x.cols()), VectorXd::Ones(x.cols())};
    if (x.rows() == 0) {
      return s;
    }
    for (Index j = 0; j < x.cols(); ++j) {
      if (!numeric[static_cast<std::size_t>(j)]) {
        continue;
      }
      const double mu = x.col(j).mean();
      const double sd = std::sqrt((x.col(j).array() - mu).square().mean());
      s.mean[j] = mu;
      s.scale[j] = sd > 0.0 ? sd : 1.0;
    }
    return s;
  }

  MatrixXd apply(const MatrixXd &x) const {
    detail::require(x.cols() == mean.size(), "standardizer: column mismatch");
    return (x.rowwise() - mean.transpose()).array().rowwise() /
           scale.transpose().array();
  }
};

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

struct SplitPair {
  int fold = 0;
  std::vector<Index> train;
  std::vector<Index> test;
};

namespace detail {

/// n rows drawn without replacement from `pool`, returned sorted.
inline std::vector<Index> subsample(std::vector<Index> pool, Index n, Rng &rng) {
  detail::require(n >= 1, "training subsample size must be >= 1");
  if (n > static_cast<Index>(pool.size())) {
    throw InvalidArgument("training size n=" + std::to_string(n) +
                          " exceeds the " + std::to_string(pool.size()) +
                          " available training records");
  }
  for (Index i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(
        static_cast<std::size_t>(i), pool.size() - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[pick(rng)]);
  }
  pool.resize(static_cast<std::size_t>(n));
  std::sort(pool.begin(), pool.end());
  return pool;
}

} // namespace detail

/// Records in time order cut into num_blocks contiguous blocks of equal
/// count (sizes differ by at most one). Pair i trains on an n-subsample of
/// blocks [i, i + window) and tests on block i + window.
inline std::vector<SplitPair> blocked_splits(const std::vector<double> &time,
                                             int num_blocks, int window,
                                             Index n, std::uint64_t seed) {
  detail::require(window >= 1 && window < num_blocks,
                  "blocked splits need 1 <= window < num_blocks");
  const auto total = static_cast<Index>(time.size());
  detail::require(total >= num_blocks,
                  "blocked splits: fewer records than blocks");
  std::vector<Index> order(time.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) {
                     return time[static_cast<std::size_t>(a)] <
                            time[static_cast<std::size_t>(b)];
                   });
  auto block_begin = [&](int b) { return total * b / num_blocks; };
  std::vector<SplitPair> out;
  for (int i = 0; i + window < num_blocks; ++i) {
    SplitPair pair;
    pair.fold = i;
    std::vector<Index> pool(order.begin() + block_begin(i),
                            order.begin() + block_begin(i + window));
    Rng rng(derive_seed(seed, "block-" + std::to_string(i)));
    pair.train = detail::subsample(std::move(pool), n, rng);
    pair.test.assign(order.begin() + block_begin(i + window),
                     order.begin() + block_begin(i + window + 1));
    std::sort(pair.test.begin(), pair.test.end());
    out.push_back(std::move(pair));
  }
  return out;
}

/// k shuffled folds; each fold's training set is an n-subsample of the
/// other folds.
inline std::vector<SplitPair> kfold_splits(Index total, int k, Index n,
                                           std::uint64_t seed) {
  detail::require(k >= 2, "kfold needs k >= 2");
  detail::require(total >= k, "kfold: fewer records than folds");
  std::vector<Index> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(derive_seed(seed, "kfold-shuffle"));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<SplitPair> out;
  for (int f = 0; f < k; ++f) {
    SplitPair pair;
    pair.fold = f;
    std::vector<Index> pool;
    for (Index i = 0; i < total; ++i) {
      (i % k == f ? pair.test : pool).push_back(order[static_cast<std::size_t>(i)]);
    }
    Rng sub(derive_seed(seed, "fold-" + std::to_string(f)));
    pair.train = detail::subsample(std::move(pool), n, sub);
    std::sort(pair.test.begin(), pair.test.end());
    out.push_back(std::move(pair));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic varying-coefficient data
// ---------------------------------------------------------------------------

struct SyntheticData {
  Dataset data;
  /// Row i holds the weight vector w_i = omega(t_i).
  MatrixXd weights;
  /// Noise-free x_i^T w_i.
  VectorXd latent;
};

/// x_i ~ N(0, I_m), t_i ~ U[task_lo, task_hi]^d, each weight coordinate an
/// independent GP(0, k_T) draw over the n task points, y_i = x_i^T w_i +
/// N(0, tau2).
inline SyntheticData synth_vcm(Index n, Index m, Index d,
                               const TaskKernel &task_kernel, double tau2,
                               std::uint64_t seed, double task_lo = 0.0,
                               double task_hi = 1.0) {
  detail::require(n >= 1 && n <= 5000, "synth: n must be in [1, 5000]");
  detail::require(m >= 1 && d >= 1, "synth: m and d must be >= 1");
  detail::require(tau2 >= 0.0, "synth: tau2 must be >= 0");
  detail::require(task_lo < task_hi, "synth: empty task range");
  const bool constant = std::holds_alternative<ConstantTaskKernel>(task_kernel);
  detail::require(constant || std::holds_alternative<MaternKernel>(task_kernel),
                  "synth: task kernel must be constant or matern");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(task_lo, task_hi);
  SyntheticData out;
  out.data.X.resize(n, m);
  for (Index j = 0; j < m; ++j) {
    for (Index i = 0; i < n; ++i) {
      out.data.X(i, j) = normal(rng);
    }
  }
  MatrixXd coords(n, d);
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i < n; ++i) {
      coords(i, j) = uniform(rng);
    }
  }
  out.data.tasks = TaskSet::continuous(std::move(coords));
  MatrixXd z(n, m);
  for (Index j = 0; j < m; ++j) {
    for (Index i = 0; i < n; ++i) {
      z(i, j) = normal(rng);
    }
  }
  if (constant) {
    out.weights = VectorXd::Ones(n) * z.row(0);
  } else {
    const CholeskyFactor chol = cholesky_with_jitter(
        task_gram(task_kernel, out.data.tasks), "synthetic task kernel");
    out.weights = chol.lower * z;
  }
  out.latent = out.data.X.cwiseProduct(out.weights).rowwise().sum();
  out.data.y = out.latent;
  const double sd = std::sqrt(tau2);
  for (Index i = 0; i < n; ++i) {
    out.data.y[i] += sd * normal(rng);
  }
  return out;
}

/// Columns x1..xm, t1..td (or task), y; loadable with synthetic_schema.
inline void write_dataset_csv(std::ostream &out, const Dataset &data) {
  for (Index j = 0; j < data.dim(); ++j) {
    out << 'x' << j + 1 << ',';
  }
  if (data.tasks.is_discrete()) {
    out << "task,";
  } else {
    for (Index j = 0; j < data.tasks.dim(); ++j) {
      out << 't' << j + 1 << ',';
    }
  }
  out << "y\n";
  char buf[64];
  auto put = [&](double v) {
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, res.ptr - buf);
  };
  for (Index i = 0; i < data.size(); ++i) {
    for (Index j = 0; j < data.dim(); ++j) {
      put(data.X(i, j));
      out << ',';
    }
    if (data.tasks.is_discrete()) {
      out << data.tasks.ids()[static_cast<std::size_t>(i)] << ',';
    } else {
      for (Index j = 0; j < data.tasks.dim(); ++j) {
        put(data.tasks.coords()(i, j));
        out << ',';
      }
    }
    put(data.y[i]);
    out << '\n';
  }
}

inline Schema synthetic_schema(Index m, Index d, bool discrete = false) {
  Schema s;
  for (Index j = 0; j < m; ++j) {
    s.columns.push_back({"x" + std::to_string(j + 1), ColumnRole::Feature,
                         ColumnType::Numeric});
  }
  if (discrete) {
    s.columns.push_back({"task", ColumnRole::TaskId, ColumnType::Numeric});
  } else {
    for (Index j = 0; j < d; ++j) {
      s.columns.push_back({"t" + std::to_string(j + 1), ColumnRole::TaskCoord,
                           ColumnType::Numeric});
    }
  }
  s.columns.push_back({"y", ColumnRole::Target, ColumnType::Numeric});
  return s;
}

} // namespace vcgp

#endif
