#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xslice/rng.hpp"

namespace xslice {

enum class SliceKind { embb = 0, urllc = 1, mmtc = 2 };

inline constexpr int kNumSlices = 3;

std::string to_string(SliceKind kind);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Point& a, const Point& b);

// Cell layout and PHY constants. Users are numbered slice-major:
// slice s owns users [s * users_per_slice, (s + 1) * users_per_slice).
struct Topology {
  std::vector<Point> oru_positions;
  std::vector<Point> user_positions;
  int users_per_slice = 3;
  double tx_power_per_rb_w = 0.2;
  double noise_power_w = 3.6e-15;
  double pathloss_exponent = 4.0;
  // Large-scale gain at the 1 m reference distance, in dB.
  double pathloss_ref_db = -43.3;
  double rb_bandwidth_hz = 180'000.0;
  int rbs_per_rbg = 6;
  int total_rbgs = 14;
  double tti_s = 1e-3;
  double processing_delay_s = 1e-4;

  int num_orus() const { return static_cast<int>(oru_positions.size()); }
  int num_users() const { return static_cast<int>(user_positions.size()); }
  int num_rbs() const { return total_rbgs * rbs_per_rbg; }
  int first_user(SliceKind s) const { return static_cast<int>(s) * users_per_slice; }

  // Throws std::invalid_argument naming the violated field.
  void validate() const;
};

struct SliceProfile {
  SliceKind kind = SliceKind::embb;
  double r_min_bps = 1.0;
  double d_max_s = 1e-3;
  double arrival_period_s = 1e-3;
  std::int64_t packet_size_bits = 8;
  double tau_min_s = 1e-3;
  double tau_max_s = 1e-3;
  double tau_step_s = 1e-3;
  double alpha = -0.5;
  double beta = 1.0;
  int initial_rbgs = 1;

  void validate() const;
};

struct Packet {
  std::int64_t size_bits = 0;
  std::int64_t arrival_tti = 0;
  std::int64_t bits_remaining = 0;
  std::optional<std::int64_t> depart_tti;
};

using UserQueue = std::deque<Packet>;

std::int64_t buffered_bits(const UserQueue& queue);

// Appends the packets that arrive during `tti` to every queue in `queues`.
// Arrivals are periodic and deterministic. Returns the number of packets
// appended per queue.
int generate_traffic(std::int64_t tti, const SliceProfile& profile, double tti_s,
                     std::span<UserQueue> queues);

// |h_{k,m,n}|^2 for one TTI, laid out [user][oru][rb].
class ChannelRealization {
 public:
  ChannelRealization() = default;
  ChannelRealization(int users, int orus, int rbs);

  double gain(int user, int oru, int rb) const { return gain_[index(user, oru, rb)]; }
  double& gain(int user, int oru, int rb) { return gain_[index(user, oru, rb)]; }

  int users() const { return users_; }
  int orus() const { return orus_; }
  int rbs() const { return rbs_; }
  std::span<const double> raw() const { return gain_; }

 private:
  std::size_t index(int user, int oru, int rb) const {
    return (static_cast<std::size_t>(user) * orus_ + oru) * rbs_ + rb;
  }

  int users_ = 0;
  int orus_ = 0;
  int rbs_ = 0;
  std::vector<double> gain_;
};

// Log-distance mean gain at distance d (clamped to 1 m).
double mean_pathloss_gain(double distance_m, const Topology& topology);

// pathloss(d(k, m)) times an i.i.d. unit-mean exponential fading draw per
// (user, oru, rb).
ChannelRealization sample_channel(Rng& rng, const Topology& topology);

// Shannon rate of one RB. `active_orus` lists the ORUs transmitting on rb n;
// every entry other than m interferes.
double link_rate(int user, int oru, int rb, const ChannelRealization& channel,
                 const Topology& topology, std::span<const int> active_orus);

// Per-RB grant handed to the drain step: which user is served on which RB,
// through which ORU, and at what rate.
struct RbGrant {
  int user = 0;
  int oru = 0;
  int rb = 0;
  double rate_bps = 0.0;
};

struct CompletedPacket {
  int user = 0;
  std::int64_t size_bits = 0;
  std::int64_t arrival_tti = 0;
  std::int64_t depart_tti = 0;
};

struct DrainReport {
  std::vector<std::int64_t> drained_bits;  // indexed like the queue span
  std::vector<CompletedPacket> completed;
};

// Drains each user FIFO by min(buffered, floor(sum of granted rate * tti)).
// `user_ids[i]` is the global id of `queues[i]`; a grant naming any other user
// throws std::invalid_argument.
DrainReport transmit_and_drain(std::span<const RbGrant> grants, std::span<const int> user_ids,
                               std::span<UserQueue> queues, std::int64_t tti, double tti_s);

// Delay of a completed packet including the fixed processing component.
double packet_delay_s(const CompletedPacket& p, const Topology& topology);

}  // namespace xslice
