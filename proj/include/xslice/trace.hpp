#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "xslice/radio_env.hpp"
#include "xslice/xrl.hpp"

namespace xslice {

inline constexpr int kTraceSchemaVersion = 1;

// tti_utilization.csv: one row per (TTI, slice).
struct TtiRow {
  std::int64_t tti = 0;
  SliceKind slice = SliceKind::embb;
  int utilization_rbs = 0;
  std::int64_t drained_bits = 0;
  int completed_packets = 0;
  bool operator==(const TtiRow&) const = default;
};

// window_kpis.csv: one row per (intra window, slice). The action is the one
// in force during the window; loss belongs to the training step taken at the
// window's start.
struct IntraRow {
  std::int64_t window = 0;
  std::int64_t tti_end = 0;  // exclusive
  SliceKind slice = SliceKind::embb;
  int rbgs = 0;
  double tau_ms = 0.0;
  std::size_t dqn_action = 0;
  std::size_t action = 0;
  double r_avg = 0.0;
  double d_avg = 0.0;
  bool d_valid = false;
  double u_max = 0.0;
  double u_max_norm = 0.0;
  double delta = 0.0;
  bool delta_valid = false;
  double qos_fraction = 0.0;
  double reward = 0.0;
  double epsilon = 0.0;
  std::optional<double> loss;
  bool operator==(const IntraRow&) const = default;
};

// inter_decisions.csv: one row per inter window.
struct InterRow {
  std::int64_t window = 0;
  std::int64_t tti_end = 0;
  std::vector<int> rbgs;  // eMBB, URLLC, mMTC
  std::size_t dqn_action = 0;
  std::size_t action = 0;
  double r_avg = 0.0;   // mean over slices
  double d_norm = 0.0;  // mean over slices with a delay sample
  double u_max = 0.0;   // sum over slices, RBs
  double reward = 0.0;
  double epsilon = 0.0;
  std::optional<double> loss;
  bool operator==(const InterRow&) const = default;
};

struct RunTraces {
  std::vector<TtiRow> tti;
  std::vector<IntraRow> intra;
  std::vector<InterRow> inter;
  std::vector<xrl::ExplanationRecord> explanations;
};

inline constexpr const char* kTtiFile = "tti_utilization.csv";
inline constexpr const char* kWindowFile = "window_kpis.csv";
inline constexpr const char* kInterFile = "inter_decisions.csv";
inline constexpr const char* kExplanationFile = "explanations.csv";
inline constexpr const char* kExplanationLog = "explanations.jsonl";
inline constexpr const char* kSummaryFile = "summary.json";

extern const char* const kTtiHeader;
extern const char* const kWindowHeader;
extern const char* const kInterHeader;
extern const char* const kExplanationHeader;

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

// Writes the four CSV files plus the JSON-lines explanation log into `dir`
// (created if needed). Throws std::runtime_error when a file cannot be
// written.
void write_traces(const RunTraces& traces, const std::filesystem::path& dir);

// Inverse of write_traces for the CSV files. Throws std::runtime_error on a
// missing file or a header mismatch.
RunTraces read_traces(const std::filesystem::path& dir);

std::vector<TtiRow> read_tti_rows(const std::filesystem::path& file);
std::vector<IntraRow> read_intra_rows(const std::filesystem::path& file);
std::vector<InterRow> read_inter_rows(const std::filesystem::path& file);
std::vector<xrl::ExplanationRecord> read_explanations(const std::filesystem::path& file);

SliceKind parse_slice(const std::string& text);

}  // namespace xslice
