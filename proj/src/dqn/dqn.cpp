#include "xslice/dqn/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace xslice::dqn {

void DqnHyperparams::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("invalid value for learning_rate");
  if (batch_size < 1) throw std::invalid_argument("invalid value for batch_size");
  if (target_sync_period < 1) throw std::invalid_argument("invalid value for target_sync_period");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("invalid value for gamma");
  auto prob = [](double e) { return e >= 0.0 && e <= 1.0; };
  if (!prob(epsilon_start)) throw std::invalid_argument("invalid value for epsilon_start");
  if (!prob(epsilon_end)) throw std::invalid_argument("invalid value for epsilon_end");
  if (epsilon_decay_steps < 0) throw std::invalid_argument("invalid value for epsilon_decay_steps");
  if (replay_capacity < batch_size) throw std::invalid_argument("invalid value for replay_capacity");
  if (train_steps_per_update < 1) {
    throw std::invalid_argument("invalid value for train_steps_per_update");
  }
  for (int h : hidden) {
    if (h < 1) throw std::invalid_argument("invalid value for hidden");
  }
}

double epsilon_at(const DqnHyperparams& hp, std::int64_t decisions) {
  if (hp.epsilon_decay_steps <= 0 || decisions >= hp.epsilon_decay_steps) return hp.epsilon_end;
  const double frac = static_cast<double>(decisions) / static_cast<double>(hp.epsilon_decay_steps);
  return hp.epsilon_start + (hp.epsilon_end - hp.epsilon_start) * frac;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be positive");
  items_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
    return;
  }
  items_[cursor_] = std::move(t);
  cursor_ = (cursor_ + 1) % capacity_;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
  if (batch > items_.size()) throw std::invalid_argument("replay sample larger than buffer");
  // Floyd's algorithm: `batch` distinct indices without materializing the range.
  std::vector<std::size_t> picked;
  picked.reserve(batch);
  const std::size_t n = items_.size();
  for (std::size_t j = n - batch; j < n; ++j) {
    std::uniform_int_distribution<std::size_t> dist(0, j);
    const std::size_t t = dist(rng);
    if (std::find(picked.begin(), picked.end(), t) == picked.end()) {
      picked.push_back(t);
    } else {
      picked.push_back(j);
    }
  }
  std::vector<const Transition*> out;
  out.reserve(batch);
  for (std::size_t i : picked) out.push_back(&items_[i]);
  return out;
}

std::vector<const Transition*> ReplayBuffer::contents() const {
  std::vector<const Transition*> out;
  out.reserve(items_.size());
  const std::size_t start = items_.size() < capacity_ ? 0 : cursor_;
  for (std::size_t i = 0; i < items_.size(); ++i) {
    out.push_back(&items_[(start + i) % items_.size()]);
  }
  return out;
}

std::optional<std::vector<const Transition*>> replay_push_and_sample(ReplayBuffer& buffer,
                                                                     Transition t,
                                                                     std::size_t batch_size,
                                                                     Rng& rng) {
  buffer.push(std::move(t));
  if (buffer.size() < batch_size) return std::nullopt;
  return buffer.sample(batch_size, rng);
}

Adam::Adam(const MlpParams& shape, double learning_rate, double beta1, double beta2, double eps)
    : m_(shape.zeros_like()), v_(shape.zeros_like()), lr_(learning_rate), beta1_(beta1),
      beta2_(beta2), eps_(eps) {}

void Adam::step(MlpParams& params, const MlpParams& grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                    std::vector<double>& v) {
    const auto n = static_cast<long>(p.size());
#pragma omp parallel for schedule(static) if (n > 65536)
    for (long i = 0; i < n; ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      p[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    update(params.layers[l].weights, grad.layers[l].weights, m_.layers[l].weights,
           v_.layers[l].weights);
    update(params.layers[l].bias, grad.layers[l].bias, m_.layers[l].bias, v_.layers[l].bias);
  }
}

namespace {

std::vector<double> stack(std::span<const Transition* const> batch, bool next, int width) {
  std::vector<double> out;
  out.reserve(batch.size() * static_cast<std::size_t>(width));
  for (const Transition* t : batch) {
    const auto& v = next ? t->next_state : t->state;
    if (static_cast<int>(v.size()) != width) {
      throw std::invalid_argument("transition state width " + std::to_string(v.size()) +
                                  " does not match network input " + std::to_string(width));
    }
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

}  // namespace

double td_loss(const MlpParams& online, const MlpParams& target,
               std::span<const Transition* const> batch, double gamma, MlpParams* grad,
               Backend backend) {
  if (batch.empty()) throw std::invalid_argument("td_loss: empty batch");
  const int n = static_cast<int>(batch.size());
  const int in = online.input_size();
  const int actions = online.output_size();
  if (target.input_size() != in || target.output_size() != actions) {
    throw std::invalid_argument("td_loss: online/target shapes differ");
  }

  const auto trace = forward_batch(online, stack(batch, false, in), n, backend);
  std::vector<double> next_q;
  if (gamma != 0.0) {
    next_q = std::move(forward_batch(target, stack(batch, true, in), n, backend).activations.back());
  }
  const auto& q = trace.activations.back();

  std::vector<double> d_out(static_cast<std::size_t>(n) * actions, 0.0);
  double loss = 0.0;
  for (int b = 0; b < n; ++b) {
    const Transition& t = *batch[static_cast<std::size_t>(b)];
    if (t.action >= static_cast<std::size_t>(actions)) {
      throw std::invalid_argument("td_loss: action outside the action space");
    }
    double y = t.reward;
    if (gamma != 0.0) {
      const auto row = next_q.begin() + static_cast<std::ptrdiff_t>(b) * actions;
      y += gamma * *std::max_element(row, row + actions);
    }
    const std::size_t idx = static_cast<std::size_t>(b) * actions + t.action;
    const double err = q[idx] - y;
    loss += err * err;
    d_out[idx] = 2.0 * err / n;
  }
  loss /= n;

  if (grad != nullptr) {
    *grad = online.zeros_like();
    backward(online, trace, d_out, *grad, backend);
  }
  return loss;
}

double train_step(MlpParams& online, const MlpParams& target,
                  std::span<const Transition* const> batch, const DqnHyperparams& hp,
                  Adam& optimizer) {
  if (batch.size() != hp.batch_size) {
    throw std::invalid_argument("train_step: batch size " + std::to_string(batch.size()) +
                                " != configured " + std::to_string(hp.batch_size));
  }
  MlpParams grad;
  const double loss = td_loss(online, target, batch, hp.gamma, &grad, hp.backend);
  if (!std::isfinite(loss)) {
    throw std::runtime_error("train_step: non-finite loss (exploding gradients)");
  }
  optimizer.step(online, grad);
  return loss;
}

std::size_t select_action(std::span<const double> q_values, double epsilon, Rng& rng) {
  if (q_values.empty()) throw std::invalid_argument("select_action: empty q-values");
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < epsilon) {
    std::uniform_int_distribution<std::size_t> pick(0, q_values.size() - 1);
    return pick(rng);
  }
  return static_cast<std::size_t>(std::max_element(q_values.begin(), q_values.end()) -
                                  q_values.begin());
}

bool sync_target(const MlpParams& online, MlpParams& target, std::int64_t step,
                 const DqnHyperparams& hp) {
  if (step % hp.target_sync_period != 0) return false;
  target = online;
  return true;
}

DqnLearner::DqnLearner(int state_size, int num_actions, DqnHyperparams hp, Rng init_rng,
                       Rng explore_rng, Rng replay_rng)
    : hp_(std::move(hp)),
      num_actions_(num_actions),
      online_(make_mlp(state_size, hp_.hidden, num_actions, init_rng)),
      target_(online_),
      adam_(online_, hp_.learning_rate),
      replay_(hp_.replay_capacity),
      explore_rng_(std::move(explore_rng)),
      replay_rng_(std::move(replay_rng)) {
  hp_.validate();
  sync_target(online_, target_, 0, hp_);
}

std::vector<double> DqnLearner::q_values(std::span<const double> state) const {
  return forward(online_, state, hp_.backend);
}

double DqnLearner::epsilon() const {
  if (greedy_floor_) return hp_.epsilon_end;
  return epsilon_at(hp_, decisions_);
}

std::size_t DqnLearner::act(std::span<const double> state) {
  const auto q = q_values(state);
  const double eps = epsilon();
  ++decisions_;
  return select_action(q, eps, explore_rng_);
}

std::optional<double> DqnLearner::observe(Transition t) {
  auto batch = replay_push_and_sample(replay_, std::move(t), hp_.batch_size, replay_rng_);
  if (!training_ || !batch) return std::nullopt;
  double total = 0.0;
  for (int i = 0; i < hp_.train_steps_per_update; ++i) {
    if (i > 0) batch = replay_.sample(hp_.batch_size, replay_rng_);
    total += train_step(online_, target_, *batch, hp_, adam_);
    ++train_steps_;
    sync_target(online_, target_, train_steps_, hp_);
  }
  return total / hp_.train_steps_per_update;
}

}  // namespace xslice::dqn
