#include "xslice/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace xslice {

double EccdfCurve::at(double x) const {
  if (values.empty()) return 0.0;
  // First value strictly greater than x; survival just below it is the
  // survival of its predecessor, or 1 before the first sample.
  auto it = std::upper_bound(values.begin(), values.end(), x);
  if (it == values.begin()) return 1.0;
  return survival[static_cast<std::size_t>(it - values.begin()) - 1];
}

int slice_utilization(const Assignment& assignment) { return assignment.total_rbs(); }

int window_max_utilization(std::span<const TtiRecord> records) {
  if (records.empty()) throw std::invalid_argument("window_max_utilization: empty window");
  int best = records.front().utilization_rbs;
  for (const auto& r : records) best = std::max(best, r.utilization_rbs);
  return best;
}

Variation utilization_variation(double u_max, std::span<const double> history) {
  if (history.empty()) throw std::invalid_argument("utilization_variation: empty history");
  const double psi =
      std::accumulate(history.begin(), history.end(), 0.0) / static_cast<double>(history.size());
  if (psi == 0.0) return {0.0, true};
  return {(u_max - psi) / psi, false};
}

double normalized_throughput_avg(std::span<const double> user_throughput_bps,
                                 const SliceProfile& profile) {
  if (user_throughput_bps.empty()) {
    throw std::invalid_argument("normalized_throughput_avg: empty user set");
  }
  if (!(profile.r_min_bps > 0.0)) throw std::invalid_argument("normalized_throughput_avg: r_min");
  double sum = 0.0;
  for (double r : user_throughput_bps) sum += r / profile.r_min_bps;
  return sum / static_cast<double>(user_throughput_bps.size());
}

DelayAverage normalized_delay_avg(std::span<const double> user_mean_delay_s,
                                  const SliceProfile& profile) {
  DelayAverage out;
  double sum = 0.0;
  int used = 0;
  for (double d : user_mean_delay_s) {
    if (!(d > 0.0) || !std::isfinite(d)) {
      ++out.excluded;
      continue;
    }
    sum += profile.d_max_s / d;
    ++used;
  }
  if (used == 0) throw std::invalid_argument("normalized_delay_avg: no user has a delay sample");
  out.value = sum / used;
  return out;
}

int qos_indicator(double r_norm, double d_norm) { return (r_norm >= 1.0 && d_norm >= 1.0) ? 1 : 0; }

EccdfCurve eccdf(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("eccdf: empty sample set");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  EccdfCurve curve;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    curve.values.push_back(sorted[i]);
    curve.survival.push_back(static_cast<double>(sorted.size() - j) / n);
    i = j;
  }
  return curve;
}

SliceKpis window_kpis(std::span<const TtiRecord> records, const SliceProfile& profile,
                      const SliceState& slice, const Topology& topology,
                      std::span<const double> u_max_history) {
  SliceKpis k;
  const std::size_t users = slice.queues.size();
  const double elapsed = static_cast<double>(records.size()) * topology.tti_s;

  std::vector<double> bits(users, 0.0);
  std::vector<double> delay_sum(users, 0.0);
  std::vector<int> delay_count(users, 0);
  for (const auto& r : records) {
    for (std::size_t u = 0; u < users; ++u) bits[u] += static_cast<double>(r.drained_bits[u]);
    for (std::size_t i = 0; i < r.completed_delays_s.size(); ++i) {
      const auto u = static_cast<std::size_t>(r.completed_users[i]);
      delay_sum[u] += r.completed_delays_s[i];
      delay_count[u] += 1;
    }
  }

  std::vector<double> throughput(users);
  std::vector<double> mean_delay(users, 0.0);
  const std::int64_t now = records.back().tti + 1;
  for (std::size_t u = 0; u < users; ++u) {
    throughput[u] = bits[u] / elapsed;
    if (delay_count[u] > 0) {
      mean_delay[u] = delay_sum[u] / delay_count[u];
    } else if (!slice.queues[u].empty()) {
      mean_delay[u] = head_of_line_age_s(slice.queues[u], now, topology.tti_s) +
                      topology.processing_delay_s;
    }
  }
  k.r_avg = normalized_throughput_avg(throughput, profile);
  try {
    k.d_avg = normalized_delay_avg(mean_delay, profile).value;
    k.d_valid = true;
  } catch (const std::invalid_argument&) {
    k.d_avg = 0.0;
    k.d_valid = false;
  }

  int met = 0;
  int counted = 0;
  for (std::size_t u = 0; u < users; ++u) {
    if (!(mean_delay[u] > 0.0)) continue;
    ++counted;
    met += qos_indicator(throughput[u] / profile.r_min_bps, profile.d_max_s / mean_delay[u]);
  }
  k.qos_fraction = counted > 0 ? static_cast<double>(met) / counted : 0.0;

  k.u_max = window_max_utilization(records);
  if (!u_max_history.empty()) {
    const auto v = utilization_variation(k.u_max, u_max_history);
    k.delta = v.value;
    k.delta_valid = !v.degenerate;
  }
  return k;
}

}  // namespace xslice
