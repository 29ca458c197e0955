#include "vcgp/experiment.hpp"
#include "vcgp/serialization.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace vcgp;

namespace {

Json small_config() {
  return Json::parse(R"({
    "seed": 3,
    "method": "vcgp-lin",
    "data": {"synthetic": {"total": 120, "m": 2, "d": 1, "tau2": 0.1,
             "task_kernel": {"type": "matern", "nu": 1.5, "lengthscale": 0.3}}},
    "split": {"type": "kfold", "k": 2},
    "train_sizes": [40],
    "tuning": {"restarts": 1, "max_iterations": 50}
  })");
}

std::string strip_wall_time(const std::vector<ResultRow> &rows) {
  std::ostringstream out;
  for (auto r : rows) {
    out << r.method << ',' << r.n << ',' << r.fold << ',' << r.metric << ','
        << format_double(r.value) << ',' << r.seed << '\n';
  }
  return out.str();
}

} // namespace

TEST(Config, ParsesSyntheticKFold) {
  const auto c = parse_experiment_config(small_config());
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.methods, std::vector<std::string>{"vcgp-lin"});
  ASSERT_TRUE(c.synthetic.has_value());
  EXPECT_EQ(c.synthetic->total, 120);
  EXPECT_EQ(c.split.kind, SplitConfig::Kind::KFold);
  EXPECT_EQ(c.split.k, 2);
  EXPECT_EQ(c.tuning.restarts, 1);
  EXPECT_FALSE(c.classification);
}

TEST(Config, RejectsUnknownKeysAndValues) {
  Json j = small_config();
  j["tunning"] = Json::object();
  EXPECT_THROW(parse_experiment_config(j), ParseError);
  j = small_config();
  j["method"] = "gp-magic";
  EXPECT_THROW(parse_experiment_config(j), ParseError);
  j = small_config();
  j["split"]["type"] = "random";
  EXPECT_THROW(parse_experiment_config(j), ParseError);
  j = small_config();
  j.erase("train_sizes");
  EXPECT_THROW(parse_experiment_config(j), ParseError);
  j = small_config();
  j["split"] = {{"type", "blocked"}, {"num_blocks", 5}, {"window", 5}};
  EXPECT_THROW(parse_experiment_config(j), InvalidArgument);
}

TEST(Config, ShippedConfigsLoad) {
  for (const char *name : {"synthetic_small.json", "synthetic_battery.json",
                           "sales_blocked.json"}) {
    EXPECT_NO_THROW(load_experiment_config(std::string(VCGP_TEST_DATA) +
                                           "/../../configs/" + name))
        << name;
  }
  EXPECT_THROW(load_experiment_config("/nonexistent.json"), ParseError);
}

TEST(Run, KFoldTwoGivesTwoRows) {
  const auto outcome = run_experiment(parse_experiment_config(small_config()));
  ASSERT_EQ(outcome.rows.size(), 2u);
  EXPECT_EQ(outcome.exit_code(), 0);
  EXPECT_EQ(outcome.rows[0].metric, "mae");
  EXPECT_EQ(outcome.rows[0].fold, 0);
  EXPECT_EQ(outcome.rows[1].fold, 1);
  for (const auto &r : outcome.rows) {
    EXPECT_GT(r.value, 0.0);
    EXPECT_EQ(r.n, 40);
  }
}

TEST(Run, DeterministicApartFromWallTime) {
  Json j = small_config();
  j["methods"] = {"iid-mat", "concat-lin", "fanzhang-lin"};
  const auto c = parse_experiment_config(j);
  const auto a = run_experiment(c);
  const auto b = run_experiment(c);
  EXPECT_EQ(a.rows.size(), 8u);
  EXPECT_EQ(strip_wall_time(a.rows), strip_wall_time(b.rows));
}

TEST(Run, ClassificationUsesZeroOne) {
  Json j = small_config();
  j["task"] = "classification";
  j.erase("method");
  j["methods"] = {"vcgp-mat"};
  const auto outcome = run_experiment(parse_experiment_config(j));
  ASSERT_EQ(outcome.rows.size(), 2u);
  for (const auto &r : outcome.rows) {
    EXPECT_EQ(r.metric, "zero_one");
    EXPECT_GE(r.value, 0.0);
    EXPECT_LE(r.value, 1.0);
  }
  j["methods"] = {"fanzhang-lin"};
  EXPECT_THROW(run_experiment(parse_experiment_config(j)), InvalidArgument);
}

TEST(Run, SparsePathAboveInducingCount) {
  Json j = small_config();
  j["fitc"] = {{"p", 10}};
  const auto outcome = run_experiment(parse_experiment_config(j));
  EXPECT_EQ(outcome.rows.size(), 2u);
}

TEST(Run, CsvBlockedSplit) {
  const auto c = load_experiment_config(std::string(VCGP_TEST_DATA) +
                                        "/../../configs/sales_blocked.json");
  const auto outcome = run_experiment(c);
  EXPECT_EQ(outcome.exit_code(), 0);
  EXPECT_EQ(outcome.rows.size(),
            c.methods.size() * static_cast<std::size_t>(c.split.num_blocks -
                                                        c.split.window));
}

TEST(Run, TrainingSizeTooLarge) {
  Json j = small_config();
  j["train_sizes"] = {100};
  EXPECT_THROW(run_experiment(parse_experiment_config(j)), InvalidArgument);
}

TEST(Run, BudgetExceeded) {
  Json j = small_config();
  j["budget_seconds"] = 1e-9;
  const auto outcome = run_experiment(parse_experiment_config(j));
  EXPECT_TRUE(outcome.budget_exceeded);
  EXPECT_EQ(outcome.exit_code(), 3);
}

TEST(Results, WriteReadSummarize) {
  std::vector<ResultRow> rows{{"b", 10, 1, "mae", 2.0, 0.1, 1},
                              {"a", 10, 0, "mae", 1.0, 0.1, 1},
                              {"b", 10, 0, "mae", 4.0, 0.1, 1}};
  std::ostringstream out;
  write_results(out, rows);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), kResultsHeader);
  std::istringstream in(out.str());
  const auto back = read_results(in);
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[0].method, "a");
  const auto summary = summarize(back);
  ASSERT_EQ(summary.size(), 2u);
  EXPECT_EQ(summary[1].method, "b");
  EXPECT_DOUBLE_EQ(summary[1].mean, 3.0);
  EXPECT_DOUBLE_EQ(summary[1].stderr_, 1.0);
  EXPECT_EQ(summary[0].stderr_, 0.0);
  std::istringstream bad("method,n\n");
  EXPECT_THROW(read_results(bad), ParseError);
}

TEST(Metrics, MaeAndZeroOne) {
  const auto m = compute_metrics({0.7, 0.2}, {1.0, 1.0});
  EXPECT_DOUBLE_EQ(m.mae, 0.55);
  EXPECT_DOUBLE_EQ(m.zero_one, 0.5);
  EXPECT_EQ(compute_metrics({3.0}, {3.0}).mae, 0.0);
  EXPECT_THROW(compute_metrics({1.0}, {1.0, 0.0}), InvalidArgument);
}

TEST(Serialization, RegressorRoundTrip) {
  const auto syn = synth_vcm(15, 2, 1, MaternKernel{}, 0.1, 5);
  const KernelSpec spec{MaternKernel{Smoothness::FiveHalves, {0.9, 1.1}, 1.2, true},
                        MaternKernel{Smoothness::Half, {0.4}, 0.8, true}};
  const auto model = fit_regressor(syn.data, spec, 0.05);
  std::stringstream buf;
  save_regressor(buf, model);
  const auto back = load_regressor(buf);
  const MatrixXd xq = syn.data.X.topRows(3);
  const TaskSet tq = syn.data.tasks.subset(std::vector<Index>{0, 1, 2});
  const auto a = predict(model, xq, tq);
  const auto b = predict(back, xq, tq);
  for (std::size_t q = 0; q < a.size(); ++q) {
    EXPECT_EQ(a[q].mean, b[q].mean);
    EXPECT_EQ(a[q].latent_var, b[q].latent_var);
  }
  std::istringstream junk("not a model");
  EXPECT_THROW(load_regressor(junk), ParseError);
}

TEST(Serialization, ClassifierRoundTrip) {
  auto syn = synth_vcm(20, 2, 1, MaternKernel{}, 0.1, 8);
  for (Index i = 0; i < syn.data.size(); ++i) {
    syn.data.y[i] = syn.data.y[i] > 0.0 ? 1.0 : 0.0;
  }
  const KernelSpec spec{LinearKernel{1.3, true},
                        MaternKernel{Smoothness::ThreeHalves, {0.5}, 1.0, true}};
  const auto model = fit_classifier(syn.data, spec, 0.2);
  std::stringstream buf;
  save_classifier(buf, model);
  EXPECT_EQ(buf.str().substr(0, 25), "vcgp-model v1 classifier\n");
  const auto back = load_classifier(buf);
  const MatrixXd xq = syn.data.X.topRows(4);
  const TaskSet tq = syn.data.tasks.subset(std::vector<Index>{0, 1, 2, 3});
  const auto a = predict_proba(model, xq, tq);
  const auto b = predict_proba(back, xq, tq);
  for (std::size_t q = 0; q < a.size(); ++q) {
    EXPECT_NEAR(a[q], b[q], 1e-12);
  }
  std::stringstream wrong;
  save_regressor(wrong, fit_regressor(syn.data, spec, 0.2));
  EXPECT_THROW(load_classifier(wrong), ParseError);
}

TEST(Serialization, TaskKernelJson) {
  const TaskKernel tree = TreeTaskKernel(TaskTree({0, 1, 1}, {1.0, 0.5, 0.2}));
  const Json j = task_kernel_to_json(tree);
  EXPECT_EQ(j.at("type"), "tree");
  const TaskSet ids = TaskSet::discrete({1, 2, 3});
  EXPECT_EQ(task_gram(task_kernel_from_json(j), ids), task_gram(tree, ids));
  EXPECT_THROW(task_kernel_from_json(Json{{"type", "banana"}}), InvalidArgument);
}
