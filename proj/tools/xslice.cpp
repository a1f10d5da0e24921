#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <omp.h>
#include <spdlog/spdlog.h>

#include "xslice/config.hpp"
#include "xslice/report.hpp"
#include "xslice/simulation.hpp"

namespace {

using namespace xslice;

struct RunOptions {
  std::string config = "default";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> steering;
  std::optional<std::string> intra_steering;
  std::optional<std::string> inter_steering;
  std::optional<std::int64_t> ttis;
  std::optional<std::int64_t> pretrain_ttis;
};

void add_run_options(CLI::App* cmd, RunOptions& o, bool with_seed) {
  cmd->add_option("--config", o.config, "INI config file, or 'default'");
  if (with_seed) cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--steering", o.steering, "Steering for every agent: none|ar1|ar2|ar3|ar4");
  cmd->add_option("--intra-steering", o.intra_steering, "Steering for the intra-slice agents");
  cmd->add_option("--inter-steering", o.inter_steering, "Steering for the inter-slice agent");
  cmd->add_option("--ttis", o.ttis, "Run length in TTIs");
  cmd->add_option("--pretrain-ttis", o.pretrain_ttis, "Inter-agent warm-up length in TTIs (0 = none)");
}

SimConfig build_config(const RunOptions& o) {
  SimConfig cfg = load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.steering) {
    cfg.intra_steering = xrl::parse_procedure(*o.steering);
    cfg.inter_steering = cfg.intra_steering;
  }
  if (o.intra_steering) cfg.intra_steering = xrl::parse_procedure(*o.intra_steering);
  if (o.inter_steering) cfg.inter_steering = xrl::parse_procedure(*o.inter_steering);
  if (o.ttis) set_total_ttis(cfg, *o.ttis);
  if (o.pretrain_ttis) cfg.inter_pretrain_ttis = *o.pretrain_ttis;
  cfg.validate();
  return cfg;
}

void report(const RunSummary& s, const std::filesystem::path& dir) {
  std::cout << "seed " << s.seed << ": " << s.ttis << " TTIs, throughput " << s.system_r_avg
            << ", delay score " << s.system_d_avg << ", U^max " << s.system_u_max_rbs
            << " RBs, " << s.steered << "/" << s.explanations << " steered -> " << dir.string()
            << (s.aborted ? " (ABORTED: " + s.abort_reason + ")" : std::string()) << "\n";
}

int cmd_run(const RunOptions& o) {
  const SimConfig cfg = build_config(o);
  const auto dir = resolve_output_dir(cfg, o.out);
  const auto r = run_and_write(cfg, dir);
  report(r.summary, dir);
  return r.summary.aborted ? 3 : 0;
}

int cmd_sweep(const RunOptions& o, int seeds, std::uint64_t first_seed, int jobs) {
  if (seeds < 1) throw std::invalid_argument("--seeds must be positive");
  const SimConfig base = build_config(o);
  const auto root = resolve_output_dir(base, o.out);
  std::vector<RunSummary> results(static_cast<std::size_t>(seeds));
  std::vector<std::string> errors(static_cast<std::size_t>(seeds));
  if (jobs < 1) jobs = omp_get_max_threads();
  // Runs share nothing; each writes its own directory.
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
  for (int i = 0; i < seeds; ++i) {
    try {
      SimConfig cfg = base;
      cfg.seed = first_seed + static_cast<std::uint64_t>(i);
      const auto dir = root / ("seed_" + std::to_string(cfg.seed));
      results[static_cast<std::size_t>(i)] = run_and_write(cfg, dir).summary;
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  int status = 0;
  for (int i = 0; i < seeds; ++i) {
    const auto seed = first_seed + static_cast<std::uint64_t>(i);
    if (!errors[static_cast<std::size_t>(i)].empty()) {
      std::cerr << "seed " << seed << " failed: " << errors[static_cast<std::size_t>(i)] << "\n";
      status = 1;
      continue;
    }
    report(results[static_cast<std::size_t>(i)], root / ("seed_" + std::to_string(seed)));
    if (results[static_cast<std::size_t>(i)].aborted) status = 3;
  }
  return status;
}

int cmd_eccdf(const std::vector<std::string>& traces, const std::string& metric_name,
              const std::optional<std::string>& slice_name, const std::optional<std::string>& out) {
  const auto metric = parse_metric(metric_name);
  std::optional<SliceKind> slice;
  if (slice_name && *slice_name != "system") slice = parse_slice(*slice_name);
  std::vector<LabeledCurve> curves;
  for (const auto& arg : traces) {
    // label=path or plain path (label = directory name).
    std::string label, path = arg;
    if (const auto eq = arg.find('='); eq != std::string::npos) {
      label = arg.substr(0, eq);
      path = arg.substr(eq + 1);
    } else {
      label = std::filesystem::path(arg).lexically_normal().filename().string();
      if (label.empty()) label = std::filesystem::path(arg).parent_path().filename().string();
    }
    const auto t = read_traces(path);
    const auto samples = metric_samples(t, metric, slice);
    if (samples.empty()) throw std::runtime_error("no " + metric_name + " samples in " + path);
    curves.push_back({label, eccdf(samples)});
  }
  if (out) {
    std::ofstream f(*out);
    if (!f) throw std::runtime_error("cannot write " + *out);
    write_eccdf_table(f, curves);
  } else {
    write_eccdf_table(std::cout, curves);
  }
  return 0;
}

int cmd_validate(const std::string& path) {
  const auto cfg = load_config(path);
  std::cout << path << ": ok (" << cfg.topology.num_orus() << " ORUs, " << cfg.topology.num_users()
            << " users, " << cfg.topology.total_rbgs << " RBGs)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RAN slicing simulator with DQN agents and explanation-guided action steering"};
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

  RunOptions run_opts;
  auto* run = app.add_subcommand("run", "Run one simulation and write traces");
  add_run_options(run, run_opts, true);

  RunOptions sweep_opts;
  int seeds = 5;
  std::uint64_t first_seed = 1;
  int jobs = 0;
  auto* sweep = app.add_subcommand("sweep", "Run several seeds, one trace directory each");
  add_run_options(sweep, sweep_opts, false);
  sweep->add_option("--seeds", seeds, "Number of seeds")->check(CLI::PositiveNumber);
  sweep->add_option("--first-seed", first_seed, "First seed");
  sweep->add_option("--jobs", jobs, "Parallel runs (0 = OpenMP default)");

  std::vector<std::string> traces;
  std::string metric = "throughput";
  std::optional<std::string> slice;
  std::optional<std::string> eccdf_out;
  auto* ecc = app.add_subcommand("eccdf", "ECCDF tables from trace directories");
  ecc->add_option("--trace", traces, "Trace directory, optionally label=dir")->required();
  ecc->add_option("--metric", metric, "throughput|delay|u_max|u_max_norm|reward");
  ecc->add_option("--slice", slice, "embb|urllc|mmtc|system");
  ecc->add_option("--out", eccdf_out, "Output CSV (stdout if omitted)");

  std::string cfg_path;
  auto* val = app.add_subcommand("validate-config", "Check a config file");
  val->add_option("path", cfg_path, "INI config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands()) sub = s;
    std::cerr << (sub ? sub->help() : app.help());
    return 2;
  }

  spdlog::set_level(spdlog::level::from_str(log_level));
  try {
    if (*run) return cmd_run(run_opts);
    if (*sweep) return cmd_sweep(sweep_opts, seeds, first_seed, jobs);
    if (*ecc) return cmd_eccdf(traces, metric, slice, eccdf_out);
    if (*val) return cmd_validate(cfg_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
