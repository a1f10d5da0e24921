#include "xslice/agents.hpp"

#include <cmath>
#include <stdexcept>

#include <spdlog/spdlog.h>

namespace xslice {

std::vector<IntraAction> intra_action_space(const SliceProfile& profile) {
  profile.validate();
  const auto steps = static_cast<int>(
      std::llround((profile.tau_max_s - profile.tau_min_s) / profile.tau_step_s));
  std::vector<IntraAction> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) out.push_back({profile.tau_min_s + i * profile.tau_step_s});
  return out;
}

std::vector<double> intra_state_vector(const IntraObservation& obs) {
  if (obs.users < 1 || static_cast<int>(obs.buffered_bits.size()) != obs.users ||
      static_cast<int>(obs.mean_snr_db.size()) != obs.users * obs.orus) {
    throw std::invalid_argument("intra_state_vector: incomplete slice observation");
  }
  std::vector<double> v;
  v.reserve(obs.mean_snr_db.size() + obs.buffered_bits.size());
  for (double snr : obs.mean_snr_db) v.push_back(snr / 10.0);
  for (auto bits : obs.buffered_bits) v.push_back(static_cast<double>(bits) / kBufferBitsNormalizer);
  return v;
}

double normalized_window_utilization(double u_max, int z_s, int rbs_per_rbg) {
  if (z_s < 1 || rbs_per_rbg < 1) throw std::invalid_argument("normalized utilization: bad RBG count");
  return u_max / static_cast<double>(z_s * rbs_per_rbg);
}

double intra_reward(double u_max_norm, double r_avg, const SliceProfile& profile) {
  return profile.alpha * u_max_norm + profile.beta * r_avg;
}

std::vector<RbgAllocation> enumerate_rbg_combinations(int total, int slices, int min_per_slice) {
  if (slices < 1 || min_per_slice < 0 || total < slices * min_per_slice) {
    throw std::invalid_argument("enumerate_rbg_combinations: infeasible bounds");
  }
  std::vector<RbgAllocation> out;
  RbgAllocation cur(static_cast<std::size_t>(slices), 0);
  // Depth-first in increasing part order yields lexicographic output.
  auto rec = [&](auto&& self, int index, int remaining) -> void {
    if (index == slices - 1) {
      cur[static_cast<std::size_t>(index)] = remaining;
      out.push_back(cur);
      return;
    }
    const int reserve = (slices - index - 1) * min_per_slice;
    for (int v = min_per_slice; v <= remaining - reserve; ++v) {
      cur[static_cast<std::size_t>(index)] = v;
      self(self, index + 1, remaining - v);
    }
  };
  rec(rec, 0, total);
  return out;
}

std::vector<double> inter_state_vector(const WindowKpis& kpis, int total_rbs) {
  if (total_rbs < 1) throw std::invalid_argument("inter_state_vector: total_rbs");
  std::vector<double> v;
  v.reserve(3 * kNumSlices);
  for (const auto& s : kpis.slices) {
    v.push_back(s.r_avg);
    v.push_back(s.u_max / total_rbs);
    v.push_back(s.delta);
  }
  return v;
}

double inter_reward(const WindowKpis& kpis) {
  double r = 0.0;
  for (const auto& s : kpis.slices) {
    r += s.r_avg;
    if (s.d_valid && s.d_avg > 0.0) r -= 1.0 / s.d_avg;
  }
  return r;
}

Agent::Agent(std::string name, int window_ttis, int state_size, int num_actions,
             dqn::DqnHyperparams hp, Rng init_rng, Rng explore_rng, Rng replay_rng)
    : name_(std::move(name)),
      window_(window_ttis),
      learner_(state_size, num_actions, std::move(hp), std::move(init_rng), std::move(explore_rng),
               std::move(replay_rng)) {
  if (window_ < 1) throw std::invalid_argument("agent window must be positive");
}

void Agent::feedback(double reward, const KpiAttributes& kpi) {
  pending_feedback_ = std::make_pair(reward, kpi);
}

void Agent::set_pending(std::vector<double> state, std::size_t action) {
  pending_state_ = std::move(state);
  pending_action_ = action;
  pending_feedback_.reset();
}

std::optional<double> Agent::complete(std::vector<double> next_state) {
  if (!pending_state_ || !pending_action_ || !pending_feedback_) return std::nullopt;
  Transition t{std::move(*pending_state_), *pending_action_, pending_feedback_->first,
               std::move(next_state), pending_feedback_->second};
  update_graph(graph_, t, last_graph_action_);
  last_graph_action_ = t.action;
  pending_state_.reset();
  pending_feedback_.reset();
  return learner_.observe(std::move(t));
}

StepResult Agent::step(std::int64_t tti, std::vector<double> state, const SteeringHook& hook) {
  if (tti < 0 || tti % window_ != 0) {
    throw std::logic_error(name_ + ": step called off the " + std::to_string(window_) +
                           "-TTI schedule at tti " + std::to_string(tti));
  }
  StepResult r;
  r.loss = complete(state);
  r.dqn_action = learner_.act(state);
  r.action = r.dqn_action;
  if (hook) {
    try {
      auto rec = hook(graph_, r.dqn_action);
      if (rec.steered >= static_cast<std::size_t>(learner_.num_actions())) {
        throw std::out_of_range("steered action " + std::to_string(rec.steered) +
                                " outside the action space");
      }
      r.action = rec.steered;
      r.explanation = std::move(rec);
    } catch (const std::exception& e) {
      spdlog::warn("{}: steering failed ({}); keeping action {}", name_, e.what(), r.dqn_action);
      r.action = r.dqn_action;
    }
  }
  pending_state_ = std::move(state);
  pending_action_ = r.action;
  return r;
}

std::optional<double> Agent::finish(std::vector<double> final_state) {
  return complete(std::move(final_state));
}

}  // namespace xslice
