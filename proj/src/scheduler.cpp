#include "xslice/scheduler.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace xslice {

int Assignment::total_rbs() const {
  int n = 0;
  for (const auto& [key, list] : rbs) n += static_cast<int>(list.size());
  return n;
}

double head_of_line_age_s(const UserQueue& queue, std::int64_t tti, double tti_s) {
  if (queue.empty()) return -1.0;
  return static_cast<double>(tti - queue.front().arrival_tti) * tti_s;
}

std::vector<int> prioritize_buffers(std::span<const UserQueue> queues, std::int64_t tti,
                                    double tau_th_s, double tti_s) {
  std::vector<int> order(queues.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> age(queues.size());
  for (std::size_t i = 0; i < queues.size(); ++i) age[i] = head_of_line_age_s(queues[i], tti, tti_s);

  // Rank 0: timed out, 1: waiting, 2: empty.
  auto rank = [&](int i) {
    if (queues[i].empty()) return 2;
    return age[i] >= tau_th_s - 1e-12 ? 0 : 1;
  };
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const int ra = rank(a);
    const int rb = rank(b);
    if (ra != rb) return ra < rb;
    if (ra == 2) return false;
    return age[a] > age[b];
  });
  return order;
}

namespace {

int best_oru(int user, const RbgBlock& block, const ChannelRealization& channel,
             const Topology& topology) {
  int best = 0;
  double best_sum = -1.0;
  const int first_rb = block.first_rbg * topology.rbs_per_rbg;
  const int last_rb = first_rb + block.count * topology.rbs_per_rbg;
  for (int m = 0; m < channel.orus(); ++m) {
    double sum = 0.0;
    for (int n = first_rb; n < last_rb; ++n) sum += channel.gain(user, m, n);
    if (sum > best_sum) {
      best_sum = sum;
      best = m;
    }
  }
  return best;
}

}  // namespace

Assignment allocate_rbs(const AllocationRequest& request, const ChannelRealization& channel,
                        const Topology& topology) {
  const RbgBlock& block = request.block;
  if (block.count < 1 || block.first_rbg < 0 ||
      block.first_rbg + block.count > topology.total_rbgs) {
    throw std::invalid_argument("allocate_rbs: RBG block exceeds total_rbgs");
  }
  const SliceState& slice = *request.slice;
  Assignment out;

  struct Candidate {
    int local;
    int user;
    int oru;
    double demand;
    double covered;
    bool urgent;
  };
  std::vector<Candidate> users;
  for (int local : request.ordered) {
    const auto& q = slice.queues.at(static_cast<std::size_t>(local));
    const auto bits = buffered_bits(q);
    if (bits <= 0) continue;
    const int user = slice.user_ids.at(static_cast<std::size_t>(local));
    const bool urgent =
        head_of_line_age_s(q, request.tti, topology.tti_s) >= request.tau_th_s - 1e-12;
    users.push_back({local, user, best_oru(user, block, channel, topology),
                     static_cast<double>(bits), 0.0, urgent});
  }

  auto rbg_capacity = [&](const Candidate& c, int rbg) {
    double bits = 0.0;
    const int oru = c.oru;
    for (int j = 0; j < topology.rbs_per_rbg; ++j) {
      const int rb = rbg * topology.rbs_per_rbg + j;
      bits += link_rate(c.user, c.oru, rb, channel, topology, std::span<const int>(&oru, 1)) *
              topology.tti_s;
    }
    return bits;
  };

  int next_rbg = block.first_rbg;
  const int end_rbg = block.first_rbg + block.count;
  bool progress = true;
  while (next_rbg < end_rbg && progress) {
    progress = false;
    for (auto& c : users) {
      if (next_rbg >= end_rbg) break;
      const double remaining = c.demand - c.covered;
      if (remaining <= 0.0) continue;
      const double cap = rbg_capacity(c, next_rbg);
      if (request.hold == HoldRule::whole_rbg_until_timeout && !c.urgent && remaining < cap) {
        continue;
      }
      auto& list = out.rbs[{c.user, c.oru}];
      for (int j = 0; j < topology.rbs_per_rbg; ++j) {
        list.push_back(next_rbg * topology.rbs_per_rbg + j);
      }
      c.covered += cap;
      ++next_rbg;
      progress = true;
    }
  }
  return out;
}

std::vector<RbGrant> grants_for(const Assignment& assignment, const ChannelRealization& channel,
                                const Topology& topology) {
  std::map<int, std::vector<int>> active;  // rb -> orus
  for (const auto& [key, list] : assignment.rbs) {
    for (int rb : list) active[rb].push_back(key.second);
  }
  std::vector<RbGrant> grants;
  for (const auto& [key, list] : assignment.rbs) {
    const auto [user, oru] = key;
    for (int rb : list) {
      grants.push_back({user, oru, rb, link_rate(user, oru, rb, channel, topology, active[rb])});
    }
  }
  return grants;
}

TtiReport schedule_tti(SliceState& slice, RbgBlock block, double tau_th_s, std::int64_t tti,
                       const ChannelRealization& channel, const Topology& topology,
                       HoldRule hold) {
  const auto order = prioritize_buffers(slice.queues, tti, tau_th_s, topology.tti_s);
  AllocationRequest req{&slice, order, block, tti, tau_th_s, hold};
  TtiReport report;
  report.assignment = allocate_rbs(req, channel, topology);
  report.utilization_rbs = report.assignment.total_rbs();
  const auto grants = grants_for(report.assignment, channel, topology);
  auto drained = transmit_and_drain(grants, slice.user_ids, slice.queues, tti, topology.tti_s);
  report.drained_bits = std::move(drained.drained_bits);
  report.completed = std::move(drained.completed);
  return report;
}

}  // namespace xslice
