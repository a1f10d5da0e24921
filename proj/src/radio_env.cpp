#include "xslice/radio_env.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace xslice {

std::string to_string(SliceKind kind) {
  switch (kind) {
    case SliceKind::embb: return "embb";
    case SliceKind::urllc: return "urllc";
    case SliceKind::mmtc: return "mmtc";
  }
  return "unknown";
}

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

namespace {

void require(bool ok, const char* field) {
  if (!ok) throw std::invalid_argument(std::string("invalid value for ") + field);
}

}  // namespace

void Topology::validate() const {
  require(!oru_positions.empty(), "topology.oru_positions");
  require(users_per_slice >= 1, "topology.users_per_slice");
  require(num_users() == users_per_slice * kNumSlices, "topology.user_positions");
  require(tx_power_per_rb_w > 0.0, "topology.tx_power_per_rb_w");
  require(noise_power_w > 0.0, "topology.noise_power_w");
  require(pathloss_exponent > 0.0, "topology.pathloss_exponent");
  require(rb_bandwidth_hz > 0.0, "topology.rb_bandwidth_hz");
  require(rbs_per_rbg >= 1, "topology.rbs_per_rbg");
  require(total_rbgs >= 1, "topology.total_rbgs");
  require(tti_s > 0.0, "topology.tti_ms");
  require(processing_delay_s >= 0.0, "topology.processing_delay_ms");
}

void SliceProfile::validate() const {
  const std::string k = "slice." + to_string(kind) + ".";
  auto req = [&](bool ok, const char* f) {
    if (!ok) throw std::invalid_argument("invalid value for " + k + f);
  };
  req(r_min_bps > 0.0, "r_min_mbps");
  req(d_max_s > 0.0, "d_max_ms");
  req(arrival_period_s > 0.0, "arrival_period_ms");
  req(packet_size_bits > 0, "packet_size_bytes");
  req(tau_step_s > 0.0, "tau_step_ms");
  req(tau_min_s > 0.0, "tau_min_ms");
  req(tau_min_s <= tau_max_s, "tau_max_ms");
  const double steps = (tau_max_s - tau_min_s) / tau_step_s;
  req(std::abs(steps - std::round(steps)) < 1e-9, "tau_step_ms");
  req(initial_rbgs >= 1, "initial_rbgs");
}

std::int64_t buffered_bits(const UserQueue& queue) {
  std::int64_t total = 0;
  for (const auto& p : queue) total += p.bits_remaining;
  return total;
}

int generate_traffic(std::int64_t tti, const SliceProfile& profile, double tti_s,
                     std::span<UserQueue> queues) {
  // Arrivals at times j * period for j >= 0 that fall inside [tti, tti + 1).
  // The small epsilon keeps exact multiples (0.5 ms into 1 ms) on the right
  // side of the floor.
  constexpr double eps = 1e-9;
  auto arrivals_before = [&](std::int64_t t) {
    return static_cast<std::int64_t>(
        std::ceil(static_cast<double>(t) * tti_s / profile.arrival_period_s - eps));
  };
  const auto count = static_cast<int>(arrivals_before(tti + 1) - arrivals_before(tti));
  for (auto& q : queues) {
    for (int i = 0; i < count; ++i) {
      q.push_back(Packet{profile.packet_size_bits, tti, profile.packet_size_bits, std::nullopt});
    }
  }
  return count;
}

ChannelRealization::ChannelRealization(int users, int orus, int rbs)
    : users_(users), orus_(orus), rbs_(rbs),
      gain_(static_cast<std::size_t>(users) * orus * rbs, 0.0) {}

double mean_pathloss_gain(double distance_m, const Topology& topology) {
  const double d = std::max(distance_m, 1.0);
  return std::pow(10.0, topology.pathloss_ref_db / 10.0) * std::pow(d, -topology.pathloss_exponent);
}

ChannelRealization sample_channel(Rng& rng, const Topology& topology) {
  ChannelRealization ch(topology.num_users(), topology.num_orus(), topology.num_rbs());
  std::exponential_distribution<double> fading(1.0);
  for (int k = 0; k < ch.users(); ++k) {
    for (int m = 0; m < ch.orus(); ++m) {
      const double pl = mean_pathloss_gain(
          distance(topology.user_positions[k], topology.oru_positions[m]), topology);
      for (int n = 0; n < ch.rbs(); ++n) {
        // An exact zero draw would break the positivity invariant.
        double f = 0.0;
        while (f <= 0.0) f = fading(rng);
        ch.gain(k, m, n) = pl * f;
      }
    }
  }
  return ch;
}

double link_rate(int user, int oru, int rb, const ChannelRealization& channel,
                 const Topology& topology, std::span<const int> active_orus) {
  if (user < 0 || user >= channel.users() || oru < 0 || oru >= channel.orus() || rb < 0 ||
      rb >= channel.rbs()) {
    throw std::out_of_range("link_rate: index outside topology");
  }
  const double p = topology.tx_power_per_rb_w;
  double interference = 0.0;
  for (int other : active_orus) {
    if (other != oru) interference += p * channel.gain(user, other, rb);
  }
  const double sinr = p * channel.gain(user, oru, rb) / (interference + topology.noise_power_w);
  return topology.rb_bandwidth_hz * std::log2(1.0 + sinr);
}

DrainReport transmit_and_drain(std::span<const RbGrant> grants, std::span<const int> user_ids,
                               std::span<UserQueue> queues, std::int64_t tti, double tti_s) {
  if (user_ids.size() != queues.size()) {
    throw std::invalid_argument("transmit_and_drain: user_ids/queues size mismatch");
  }
  std::vector<double> capacity(queues.size(), 0.0);
  std::set<std::pair<int, int>> used;  // (oru, rb)
  for (const auto& g : grants) {
    auto it = std::find(user_ids.begin(), user_ids.end(), g.user);
    if (it == user_ids.end()) {
      throw std::invalid_argument("transmit_and_drain: grant for unknown user " +
                                  std::to_string(g.user));
    }
    if (g.rate_bps < 0.0) throw std::invalid_argument("transmit_and_drain: negative rate");
    if (!used.insert({g.oru, g.rb}).second) {
      throw std::invalid_argument("transmit_and_drain: RB granted twice on one ORU");
    }
    capacity[static_cast<std::size_t>(it - user_ids.begin())] += g.rate_bps * tti_s;
  }

  DrainReport report;
  report.drained_bits.assign(queues.size(), 0);
  for (std::size_t i = 0; i < queues.size(); ++i) {
    auto budget = static_cast<std::int64_t>(std::floor(capacity[i]));
    auto& q = queues[i];
    while (budget > 0 && !q.empty()) {
      Packet& head = q.front();
      const std::int64_t take = std::min(budget, head.bits_remaining);
      head.bits_remaining -= take;
      budget -= take;
      report.drained_bits[i] += take;
      if (head.bits_remaining == 0) {
        head.depart_tti = tti;
        report.completed.push_back({user_ids[i], head.size_bits, head.arrival_tti, tti});
        q.pop_front();
      }
    }
  }
  return report;
}

double packet_delay_s(const CompletedPacket& p, const Topology& topology) {
  return static_cast<double>(p.depart_tti - p.arrival_tti) * topology.tti_s +
         topology.processing_delay_s;
}

}  // namespace xslice
