#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "xslice/dqn/dqn.hpp"
#include "xslice/metrics.hpp"
#include "xslice/radio_env.hpp"
#include "xslice/xrl.hpp"

namespace xslice {

struct IntraAction {
  double tau_th_s = 0.0;
};

// {tau_min, tau_min + step, ..., tau_max}, ascending.
std::vector<IntraAction> intra_action_space(const SliceProfile& profile);

inline constexpr double kBufferBitsNormalizer = 1e6;

// Window observation of one slice.
struct IntraObservation {
  int users = 0;
  int orus = 0;
  std::vector<double> mean_snr_db;            // users x orus, row-major
  std::vector<std::int64_t> buffered_bits;    // per user
};

// [mean SNR per (user, oru) / 10 dB ..., buffered bits / 1e6 ...]
std::vector<double> intra_state_vector(const IntraObservation& obs);

// U^max relative to the RBs the slice owns.
double normalized_window_utilization(double u_max, int z_s, int rbs_per_rbg);

// alpha * u_max_norm + beta * r_avg.
double intra_reward(double u_max_norm, double r_avg, const SliceProfile& profile);

using RbgAllocation = std::vector<int>;

// All ordered compositions of `total` into `slices` parts, each part at least
// `min_per_slice`, lexicographically sorted. Throws when infeasible.
std::vector<RbgAllocation> enumerate_rbg_combinations(int total, int slices, int min_per_slice);

// [R_avg, U^max / total_rbs, delta] per slice in eMBB, URLLC, mMTC order.
std::vector<double> inter_state_vector(const WindowKpis& kpis, int total_rbs);

// Sum over slices of r_avg - 1 / d_avg. A slice without a valid delay
// contributes no delay penalty.
double inter_reward(const WindowKpis& kpis);

// Applied to the DQN's choice; returns the explanation whose `steered` field
// is the action to execute.
using SteeringHook =
    std::function<xrl::ExplanationRecord(const xrl::AttributedGraph& graph, std::size_t action)>;

struct StepResult {
  std::size_t dqn_action = 0;
  std::size_t action = 0;
  std::optional<xrl::ExplanationRecord> explanation;
  std::optional<double> loss;  // training loss of the transition completed by this step
};

// One DQN agent acting on a fixed TTI cadence. Each step completes the
// previous window's transition (replay + explanation graph) and picks the
// action for the next window.
class Agent {
 public:
  Agent(std::string name, int window_ttis, int state_size, int num_actions,
        dqn::DqnHyperparams hp, Rng init_rng, Rng explore_rng, Rng replay_rng);

  // Throws std::logic_error when `tti` is not a window boundary.
  StepResult step(std::int64_t tti, std::vector<double> state, const SteeringHook& hook = {});
  // KPIs and reward of the window that just ended under the pending action.
  void feedback(double reward, const KpiAttributes& kpi);
  // Completes a pending transition without choosing a new action.
  std::optional<double> finish(std::vector<double> final_state);

  const std::string& name() const { return name_; }
  int window_ttis() const { return window_; }
  const xrl::AttributedGraph& graph() const { return graph_; }
  dqn::DqnLearner& learner() { return learner_; }
  const dqn::DqnLearner& learner() const { return learner_; }
  std::optional<std::size_t> current_action() const { return pending_action_; }
  // Replaces the pending action, e.g. with an externally fixed initial one.
  void set_pending(std::vector<double> state, std::size_t action);

 private:
  std::optional<double> complete(std::vector<double> next_state);

  std::string name_;
  int window_;
  dqn::DqnLearner learner_;
  xrl::AttributedGraph graph_;
  std::optional<std::vector<double>> pending_state_;
  std::optional<std::size_t> pending_action_;
  std::optional<std::pair<double, KpiAttributes>> pending_feedback_;
  std::optional<std::size_t> last_graph_action_;
};

}  // namespace xslice
