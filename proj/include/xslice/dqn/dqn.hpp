#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "xslice/dqn/mlp.hpp"
#include "xslice/rng.hpp"

namespace xslice {

// Window KPIs attached to a transition; consumed by the explanation graph.
struct KpiAttributes {
  double r_avg = 0.0;
  double d_norm = 0.0;
  double u_max = 0.0;
  double reward = 0.0;
};

struct Transition {
  std::vector<double> state;
  std::size_t action = 0;
  double reward = 0.0;
  std::vector<double> next_state;
  KpiAttributes kpi;
};

}  // namespace xslice

namespace xslice::dqn {

struct DqnHyperparams {
  std::vector<int> hidden{256, 256};
  double learning_rate = 1e-4;
  std::size_t batch_size = 64;
  std::int64_t target_sync_period = 100;
  double gamma = 0.9;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  std::int64_t epsilon_decay_steps = 1000;
  std::size_t replay_capacity = 10'000;
  int train_steps_per_update = 1;
  Backend backend = Backend::serial;

  void validate() const;
};

// Linear decay from epsilon_start to epsilon_end over epsilon_decay_steps
// decisions, flat afterwards.
double epsilon_at(const DqnHyperparams& hp, std::int64_t decisions);

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  // Uniform batch of distinct stored transitions.
  std::vector<const Transition*> sample(std::size_t batch, Rng& rng) const;

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  // Oldest first.
  std::vector<const Transition*> contents() const;

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;  // next slot to overwrite once full
  std::vector<Transition> items_;
};

// Pushes `t`, then returns a batch when at least `batch_size` transitions are
// stored.
std::optional<std::vector<const Transition*>> replay_push_and_sample(ReplayBuffer& buffer,
                                                                     Transition t,
                                                                     std::size_t batch_size,
                                                                     Rng& rng);

class Adam {
 public:
  explicit Adam(const MlpParams& shape, double learning_rate, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

  void step(MlpParams& params, const MlpParams& grad);
  std::int64_t steps() const { return t_; }

 private:
  MlpParams m_;
  MlpParams v_;
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  std::int64_t t_ = 0;
};

// Mean over the batch of (Q(s, a) - y)^2 with y = r + gamma * max_a' Q_target(s', a').
// When `grad` is non-null it receives d(loss)/d(online params) (overwritten).
double td_loss(const MlpParams& online, const MlpParams& target,
               std::span<const Transition* const> batch, double gamma, MlpParams* grad,
               Backend backend = Backend::serial);

// One optimizer step on `online`; returns the loss before the update. Throws
// std::runtime_error on a non-finite loss.
double train_step(MlpParams& online, const MlpParams& target,
                  std::span<const Transition* const> batch, const DqnHyperparams& hp,
                  Adam& optimizer);

// Greedy with probability 1 - epsilon (ties to the lowest index), uniform
// otherwise.
std::size_t select_action(std::span<const double> q_values, double epsilon, Rng& rng);

// Copies online into target when step is a multiple of the sync period.
bool sync_target(const MlpParams& online, MlpParams& target, std::int64_t step,
                 const DqnHyperparams& hp);

// Online/target network pair with replay and optimizer state for one agent.
class DqnLearner {
 public:
  DqnLearner(int state_size, int num_actions, DqnHyperparams hp, Rng init_rng, Rng explore_rng,
             Rng replay_rng);

  std::vector<double> q_values(std::span<const double> state) const;
  // Epsilon-greedy choice; advances the decision counter used by the
  // epsilon schedule.
  std::size_t act(std::span<const double> state);
  // Stores the transition and, once enough are stored, trains. Returns the
  // mean pre-update loss over the steps taken.
  std::optional<double> observe(Transition t);

  double epsilon() const;
  void set_training(bool on) { training_ = on; }
  bool training() const { return training_; }
  // Pins exploration at epsilon_end (used for frozen agents).
  void set_greedy_floor(bool on) { greedy_floor_ = on; }

  const MlpParams& online() const { return online_; }
  const MlpParams& target() const { return target_; }
  MlpParams& online_mutable() { return online_; }
  const ReplayBuffer& replay() const { return replay_; }
  const DqnHyperparams& hyperparams() const { return hp_; }
  std::int64_t train_steps() const { return train_steps_; }
  std::int64_t decisions() const { return decisions_; }
  int num_actions() const { return num_actions_; }

 private:
  DqnHyperparams hp_;
  int num_actions_;
  MlpParams online_;
  MlpParams target_;
  Adam adam_;
  ReplayBuffer replay_;
  Rng explore_rng_;
  Rng replay_rng_;
  std::int64_t train_steps_ = 0;
  std::int64_t decisions_ = 0;
  bool training_ = true;
  bool greedy_floor_ = false;
};

}  // namespace xslice::dqn
