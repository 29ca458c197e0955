#include "vcgp/data_io.hpp"
#include "vcgp/error.hpp"
#include "vcgp/experiment.hpp"
#include "vcgp/multitask_hb.hpp"
#include "vcgp/verification.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

/// First column of a CSV; a non-numeric first line is taken as a header.
std::vector<double> read_column(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw vcgp::ParseError("cannot open " + path);
  }
  std::vector<double> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto cells = vcgp::detail::split_csv_line(line, line_number);
    const auto cell = vcgp::detail::trim(cells.front());
    if (cell.empty()) {
      continue;
    }
    const auto v = vcgp::detail::parse_number(cell);
    if (!v) {
      if (line_number == 1) {
        continue;
      }
      throw vcgp::ParseError(path + ": line " + std::to_string(line_number) +
                             ": not a number");
    }
    out.push_back(*v);
  }
  return out;
}

std::ostream &open_out(const std::string &path, std::ofstream &file) {
  if (path.empty() || path == "-") {
    return std::cout;
  }
  file.open(path);
  if (!file) {
    throw vcgp::ParseError("cannot write " + path);
  }
  return file;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Varying-coefficient Gaussian process models"};
  app.require_subcommand(1);

  auto *run = app.add_subcommand("run", "run an experiment config");
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_path;
  double budget = -1.0;
  bool verbose = false;
  run->add_option("config", config_path, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  auto *seed_opt = run->add_option("--seed", seed, "override the global seed");
  auto *out_opt = run->add_option("--out", out_path, "results CSV ('-' = stdout)");
  run->add_option("--budget-seconds", budget, "wall-clock budget, 0 = none");
  run->add_flag("-v,--verbose", verbose, "log each fold to stderr");

  auto *verify = app.add_subcommand("verify", "run verification batteries");
  std::string scope;
  std::uint64_t verify_seed = 20240611;
  verify->add_option("scope", scope, "prop1|prop2|theorem1|theorem2|fitc|all")
      ->required()
      ->check(CLI::IsMember(vcgp::verify_scopes()));
  verify->add_option("--seed", verify_seed, "battery seed");

  auto *metrics = app.add_subcommand("metrics", "MAE and zero-one loss");
  std::string pred_path;
  std::string label_path;
  double threshold = 0.5;
  metrics->add_option("predictions", pred_path, "predictions CSV")
      ->required()
      ->check(CLI::ExistingFile);
  metrics->add_option("labels", label_path, "labels CSV")
      ->required()
      ->check(CLI::ExistingFile);
  metrics->add_option("--threshold", threshold, "class threshold");

  auto *synth = app.add_subcommand("synth", "write a synthetic dataset CSV");
  vcgp::Index n = 1000;
  vcgp::Index m = 3;
  vcgp::Index d = 1;
  double lengthscale = 0.3;
  double amplitude = 1.0;
  double nu = 1.5;
  double tau2 = 0.1;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  synth->add_option("--n", n, "rows")->check(CLI::Range(1, 5000));
  synth->add_option("--m", m, "instance dimension")->check(CLI::PositiveNumber);
  synth->add_option("--d", d, "task dimension")->check(CLI::PositiveNumber);
  synth->add_option("--lengthscale", lengthscale, "task kernel lengthscale");
  synth->add_option("--amplitude", amplitude, "task kernel amplitude");
  synth->add_option("--nu", nu, "Matern smoothness 0.5|1.5|2.5");
  synth->add_option("--tau2", tau2, "noise variance");
  synth->add_option("--seed", synth_seed, "seed");
  synth->add_option("--out", synth_out, "output CSV ('-' = stdout)");

  auto *summary = app.add_subcommand("summarize", "mean and standard error");
  std::string results_path;
  std::string summary_out;
  summary->add_option("results", results_path, "results CSV")
      ->required()
      ->check(CLI::ExistingFile);
  summary->add_option("--out", summary_out, "output CSV ('-' = stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run->parsed()) {
      auto config = vcgp::load_experiment_config(config_path);
      if (*seed_opt) {
        config.seed = seed;
      }
      if (*out_opt) {
        config.output = out_path;
      }
      if (budget >= 0.0) {
        config.budget_seconds = budget;
      }
      const auto outcome =
          vcgp::run_experiment(config, verbose ? &std::cerr : nullptr);
      std::ofstream file;
      vcgp::write_results(open_out(config.output, file), outcome.rows);
      for (const auto &e : outcome.errors) {
        std::cerr << "fold failed: " << e << '\n';
      }
      if (outcome.budget_exceeded) {
        std::cerr << "time budget of " << config.budget_seconds
                  << " s exceeded; partial results written\n";
      }
      return outcome.exit_code();
    }
    if (verify->parsed()) {
      const auto report = vcgp::run_verification(scope, verify_seed);
      vcgp::print_report(std::cout, report);
      return report.passed() ? kExitOk : kExitNumerical;
    }
    if (metrics->parsed()) {
      const auto m_out = vcgp::compute_metrics(read_column(pred_path),
                                               read_column(label_path), threshold);
      std::cout << "mae " << vcgp::format_double(m_out.mae) << '\n'
                << "zero_one " << vcgp::format_double(m_out.zero_one) << '\n';
      return kExitOk;
    }
    if (synth->parsed()) {
      const vcgp::MaternKernel task{vcgp::smoothness_from_value(nu),
                                    {lengthscale}, amplitude, true};
      const auto data = vcgp::synth_vcm(n, m, d, task, tau2, synth_seed);
      std::ofstream file;
      vcgp::write_dataset_csv(open_out(synth_out, file), data.data);
      return kExitOk;
    }
    if (summary->parsed()) {
      std::ifstream in(results_path);
      std::ofstream file;
      vcgp::write_summary(open_out(summary_out, file),
                          vcgp::summarize(vcgp::read_results(in)));
      return kExitOk;
    }
  } catch (const vcgp::NumericalFailure &e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
