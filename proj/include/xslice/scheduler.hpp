#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "xslice/radio_env.hpp"

namespace xslice {

// RB indices granted per (user, oru) for one TTI.
struct Assignment {
  std::map<std::pair<int, int>, std::vector<int>> rbs;

  int total_rbs() const;
  bool empty() const { return rbs.empty(); }
};

// Queues of one slice plus the global ids of their owners.
struct SliceState {
  SliceKind kind = SliceKind::embb;
  std::vector<int> user_ids;
  std::vector<UserQueue> queues;
};

// Contiguous block of RBGs owned by one slice for the current inter window.
struct RbgBlock {
  int first_rbg = 0;
  int count = 1;
};

// How the timeout threshold gates service of users whose head-of-line packet
// has not yet reached it.
enum class HoldRule {
  // Threshold only orders users.
  order_only,
  // Before the timeout a user only receives RBGs its backlog fills completely;
  // the partially-filled tail RBG waits for the timeout.
  whole_rbg_until_timeout,
};

// Head-of-line age in seconds; negative for an empty queue.
double head_of_line_age_s(const UserQueue& queue, std::int64_t tti, double tti_s);

// Returns local queue indices: timed-out users (age >= tau_th) first by
// descending age, then the rest by descending age, ties by ascending index,
// empty queues last in original order.
std::vector<int> prioritize_buffers(std::span<const UserQueue> queues, std::int64_t tti,
                                    double tau_th_s, double tti_s);

struct AllocationRequest {
  const SliceState* slice = nullptr;
  std::span<const int> ordered;  // local indices from prioritize_buffers
  RbgBlock block;
  std::int64_t tti = 0;
  double tau_th_s = 0.0;
  HoldRule hold = HoldRule::order_only;
};

// Round-robin greedy over whole RBGs: each pass walks the users in priority
// order and hands one RBG to every user whose backlog is not yet covered at
// this TTI's rates on its best-gain ORU. Throws std::invalid_argument when the
// block leaves the system RBG range.
Assignment allocate_rbs(const AllocationRequest& request, const ChannelRealization& channel,
                        const Topology& topology);

// Expands an assignment into per-RB grants with SINR-based rates. ORUs
// active on the same RB in `assignment` interfere with each other.
std::vector<RbGrant> grants_for(const Assignment& assignment, const ChannelRealization& channel,
                                const Topology& topology);

struct TtiReport {
  Assignment assignment;
  int utilization_rbs = 0;
  std::vector<std::int64_t> drained_bits;  // per local user
  std::vector<CompletedPacket> completed;
};

TtiReport schedule_tti(SliceState& slice, RbgBlock block, double tau_th_s, std::int64_t tti,
                       const ChannelRealization& channel, const Topology& topology,
                       HoldRule hold = HoldRule::whole_rbg_until_timeout);

}  // namespace xslice
