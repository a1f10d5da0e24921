#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "xslice/agents.hpp"
#include "xslice/config.hpp"
#include "xslice/trace.hpp"

namespace xslice {

struct SliceSummary {
  double mean_r_avg = 0.0;
  double mean_d_avg = 0.0;  // over windows with a delay sample
  double mean_u_max = 0.0;
  double mean_u_max_norm = 0.0;
  double mean_reward = 0.0;
};

struct RunSummary {
  std::uint64_t seed = 0;
  std::int64_t ttis = 0;  // TTIs actually simulated
  std::int64_t intra_windows = 0;
  std::int64_t inter_windows = 0;
  std::int64_t generated_bits = 0;
  std::int64_t drained_bits = 0;  // throughput numerator; equals the per-TTI trace sum
  // Means over intra windows of the per-window system values: throughput and
  // delay score are slice means, u_max_rbs the slice sum, u_max_norm the
  // slice mean of U^max / owned RBs.
  double system_r_avg = 0.0;
  double system_d_avg = 0.0;
  double system_u_max_rbs = 0.0;
  double system_u_max_norm = 0.0;
  double inter_mean_reward = 0.0;
  std::array<SliceSummary, kNumSlices> slices{};
  std::int64_t explanations = 0;
  std::int64_t steered = 0;  // explanations whose action changed
  bool aborted = false;
  std::string abort_reason;
};

struct RunResult {
  RunSummary summary;
  RunTraces traces;
};

// Per-window system values from the intra rows (one entry per window).
struct SystemSeries {
  std::vector<double> r_avg;
  std::vector<double> d_avg;
  std::vector<double> u_max_rbs;
  std::vector<double> u_max_norm;
};
SystemSeries system_series(const std::vector<IntraRow>& intra);

// Runs the configured experiment, including the optional inter-agent warm-up.
// Never throws for a training divergence: the result is flagged aborted and
// carries the partial traces.
RunResult run_simulation(const SimConfig& cfg);

// The warm-up step of run_simulation on its own: trains an inter agent for
// cfg.inter_pretrain_ttis TTIs (nullptr when that is 0). It ignores the
// steering settings, so configs differing only in steering can share it.
std::shared_ptr<const Agent> pretrain_inter_agent(const SimConfig& cfg);

// Runs with a copy of `pretrained_inter` instead of pretraining again.
RunResult run_simulation(const SimConfig& cfg, const Agent& pretrained_inter);

// run_simulation plus write_traces, summary.json and end-of-run checkpoints
// under `dir`.
RunResult run_and_write(const SimConfig& cfg, const std::filesystem::path& dir,
                        const Agent* pretrained_inter = nullptr);

void write_summary(const RunSummary& s, const std::filesystem::path& file);

// Output directory: explicit value if given, else $XSLICE_OUTPUT_DIR, else
// the config's output_dir.
std::filesystem::path resolve_output_dir(const SimConfig& cfg,
                                         const std::optional<std::string>& explicit_dir);

// Changes the run length and rescales epsilon schedules that were left at
// their half-of-run default.
void set_total_ttis(SimConfig& cfg, std::int64_t ttis);

}  // namespace xslice
