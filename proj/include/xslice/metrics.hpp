#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "xslice/radio_env.hpp"
#include "xslice/scheduler.hpp"

namespace xslice {

// Per-TTI measurements of one slice.
struct TtiRecord {
  std::int64_t tti = 0;
  int utilization_rbs = 0;                 // U_{s,t}
  std::vector<std::int64_t> drained_bits;  // per slice user
  std::vector<double> completed_delays_s;  // per packet, with processing delay
  std::vector<int> completed_users;        // local user index of each delay entry
};

struct SliceKpis {
  double r_avg = 0.0;  // mean normalized throughput
  double d_avg = 0.0;  // mean normalized delay, d_max / mean delay (>= 1 meets target)
  bool d_valid = false;
  double u_max = 0.0;  // RB count
  double delta = 0.0;
  bool delta_valid = false;
  double qos_fraction = 0.0;
};

// One entry per slice, ordered eMBB, URLLC, mMTC.
struct WindowKpis {
  std::array<SliceKpis, kNumSlices> slices{};
};

struct EccdfCurve {
  std::vector<double> values;    // sorted distinct sample values
  std::vector<double> survival;  // fraction of samples strictly greater than values[i]

  // Fraction of samples strictly greater than x.
  double at(double x) const;
};

int slice_utilization(const Assignment& assignment);

// Throws std::invalid_argument on an empty window.
int window_max_utilization(std::span<const TtiRecord> records);

struct Variation {
  double value = 0.0;
  bool degenerate = false;  // history mean was zero
};

// (u_max - psi) / psi with psi the mean of `history`.
Variation utilization_variation(double u_max, std::span<const double> history);

double normalized_throughput_avg(std::span<const double> user_throughput_bps,
                                 const SliceProfile& profile);

struct DelayAverage {
  double value = 0.0;
  int excluded = 0;  // users without a delay sample
};

// Mean over users of d_max / mean_delay. Entries <= 0 or non-finite mark a
// user without completed packets; they are excluded. Throws when every user
// is excluded.
DelayAverage normalized_delay_avg(std::span<const double> user_mean_delay_s,
                                  const SliceProfile& profile);

int qos_indicator(double r_norm, double d_norm);

EccdfCurve eccdf(std::span<const double> samples);

// Aggregates the per-TTI records of one window into slice KPIs. A user with
// no completed packet but a nonempty queue contributes its head-of-line age
// as a censored delay sample.
SliceKpis window_kpis(std::span<const TtiRecord> records, const SliceProfile& profile,
                      const SliceState& slice, const Topology& topology,
                      std::span<const double> u_max_history);

}  // namespace xslice
