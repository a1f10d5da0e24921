#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include "oracles/oracles.hpp"
#include "xslice/dqn/checkpoint.hpp"
#include "xslice/dqn/dqn.hpp"
#include "xslice/dqn/kernels.hpp"
#include "xslice/dqn/mlp.hpp"

using namespace xslice;
using namespace xslice::dqn;

namespace {

MlpParams random_mlp(int in, std::vector<int> hidden, int out, std::uint64_t seed) {
  Rng rng(seed);
  auto p = make_mlp(in, hidden, out, rng);
  // make_mlp may zero the biases; randomize so they are exercised
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto& l : p.layers)
    for (auto& b : l.bias) b = u(rng);
  return p;
}

std::vector<oracle::Layer> to_oracle(const MlpParams& p) {
  std::vector<oracle::Layer> out;
  for (const auto& l : p.layers) out.push_back({l.in, l.out, l.weights, l.bias});
  return out;
}

std::vector<double> random_vec(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

MlpParams zero_mlp(int in, std::vector<int> hidden, int out) {
  Rng rng(0);
  auto p = make_mlp(in, hidden, out, rng);
  for (auto& l : p.layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  return p;
}

Transition tr(std::vector<double> s, std::size_t a, double r, std::vector<double> ns) {
  Transition t;
  t.state = std::move(s);
  t.action = a;
  t.reward = r;
  t.next_state = std::move(ns);
  return t;
}

}  // namespace

TEST_SUITE("dqn") {

TEST_CASE("make_mlp shapes and parameter count") {
  const auto p = random_mlp(12, {64, 256, 256}, 7, 1);
  REQUIRE(p.layers.size() == 4);
  CHECK(p.input_size() == 12);
  CHECK(p.output_size() == 7);
  CHECK(p.parameter_count() == 12 * 64 + 64 + 64 * 256 + 256 + 256 * 256 + 256 + 256 * 7 + 7);
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("forward on hand-set weights") {
  auto p = zero_mlp(2, {2}, 1);
  // hidden = relu([x0 - x1, x1 - x0]); out = h0 + 2 h1 + 0.5
  p.layers[0].weights = {1, -1, -1, 1};
  p.layers[1].weights = {1, 2};
  p.layers[1].bias = {0.5};
  CHECK(forward(p, std::vector<double>{3, 1})[0] == 2.5);
  CHECK(forward(p, std::vector<double>{1, 3})[0] == 4.5);
  CHECK(forward(p, std::vector<double>{2, 2})[0] == 0.5);
}

TEST_CASE("forward: zero weights give the output bias, identity layer passes through") {
  auto z = zero_mlp(4, {8}, 3);
  z.layers[1].bias = {1.0, -2.0, 0.25};
  CHECK(forward(z, random_vec(4, 9)) == std::vector<double>{1.0, -2.0, 0.25});

  auto id = zero_mlp(3, {}, 3);
  id.layers[0].weights = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  const std::vector<double> x = {-1.5, 0.0, 7.0};
  CHECK(forward(id, x) == x);
  CHECK_THROWS_AS(forward(id, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("property: forward matches the naive oracle to 1e-10") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto p = random_mlp(12, {64, 256, 256}, 7, seed);
    const auto x = random_vec(12, seed + 100, -2.0, 2.0);
    const auto got = forward(p, x);
    const auto want = oracle::mlp_forward(to_oracle(p), x);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) < 1e-10);
  }
}

TEST_CASE("property: batched forward equals row-by-row forward") {
  const auto p = random_mlp(6, {16, 16}, 4, 3);
  const int n = 9;
  const auto xs = random_vec(6 * n, 4);
  const auto trace = forward_batch(p, xs, n);
  for (int b = 0; b < n; ++b) {
    const auto row = forward(p, std::span<const double>(xs).subspan(6 * b, 6));
    for (int o = 0; o < 4; ++o) CHECK(trace.activations.back()[b * 4 + o] == row[o]);
  }
}

TEST_CASE("property: scaling every weight of a two-layer bias-free ReLU net by c scales output by c^2") {
  auto p = random_mlp(5, {11}, 3, 7);
  for (auto& l : p.layers) std::fill(l.bias.begin(), l.bias.end(), 0.0);
  const auto x = random_vec(5, 8);
  const auto base = forward(p, x);
  for (double c : {0.5, 2.0, 3.7}) {
    auto s = p;
    for (auto& l : s.layers)
      for (auto& w : l.weights) w *= c;
    const auto y = forward(s, x);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == doctest::Approx(c * c * base[i]).epsilon(1e-12));
  }
}

TEST_CASE("property: openmp kernels are bitwise equal to serial") {
  for (auto [batch, in, out] : {std::tuple{64, 12, 64}, {64, 64, 256}, {1, 256, 7}, {3, 5, 2}}) {
    const auto x = random_vec(static_cast<std::size_t>(batch * in), 1);
    const auto w = random_vec(static_cast<std::size_t>(in * out), 2);
    const auto b = random_vec(static_cast<std::size_t>(out), 3);
    const auto dy = random_vec(static_cast<std::size_t>(batch * out), 4);
    std::vector<double> ys(batch * out), yo(batch * out);
    kernels::dense_forward(Backend::serial, x, w, b, ys, batch, in, out);
    kernels::dense_forward(Backend::openmp, x, w, b, yo, batch, in, out);
    CHECK(ys == yo);
    std::vector<double> gws(in * out), gwo(in * out), gbs(out), gbo(out);
    kernels::dense_backward_params(Backend::serial, x, dy, gws, gbs, batch, in, out);
    kernels::dense_backward_params(Backend::openmp, x, dy, gwo, gbo, batch, in, out);
    CHECK(gws == gwo);
    CHECK(gbs == gbo);
    std::vector<double> dxs(batch * in), dxo(batch * in);
    kernels::dense_backward_input(Backend::serial, dy, w, dxs, batch, in, out);
    kernels::dense_backward_input(Backend::openmp, dy, w, dxo, batch, in, out);
    CHECK(dxs == dxo);
  }
  const auto p = random_mlp(12, {64, 256}, 7, 5);
  const auto x = random_vec(12, 6);
  CHECK(forward(p, x, Backend::serial) == forward(p, x, Backend::openmp));
}

TEST_CASE("td_loss / train_step examples") {
  const auto z = zero_mlp(2, {4}, 3);
  DqnHyperparams hp;
  hp.hidden = {4};
  hp.batch_size = 1;
  hp.gamma = 0.0;
  hp.learning_rate = 1e-3;
  Adam adam(z, hp.learning_rate);

  auto online = z;
  const auto t0 = tr({1, 0}, 1, 0.0, {0, 1});
  const std::vector<const Transition*> b0 = {&t0};
  CHECK(train_step(online, z, b0, hp, adam) == 0.0);

  const auto t1 = tr({1, 0}, 2, 1.0, {0, 1});
  const std::vector<const Transition*> b1 = {&t1};
  online = z;
  Adam adam2(z, hp.learning_rate);
  CHECK(train_step(online, z, b1, hp, adam2) == 1.0);
  // only the output bias of the taken action moves; it moves toward the target
  CHECK(online.layers[1].bias[2] > 0.0);
  CHECK(online.layers[1].bias[0] == 0.0);
  CHECK(online.layers[1].bias[1] == 0.0);

  // bootstrap target: r + gamma * max Q_target(s') with Q_target = bias
  auto target = z;
  target.layers[1].bias = {0.0, 2.0, -1.0};
  CHECK(td_loss(z, target, b1, 0.5, nullptr) == doctest::Approx(4.0));

  hp.batch_size = 2;
  CHECK_THROWS_AS(train_step(online, z, b1, hp, adam2), std::invalid_argument);
}

TEST_CASE("train_step rejects a non-finite loss") {
  auto huge = zero_mlp(2, {4}, 2);
  for (auto& l : huge.layers) std::fill(l.weights.begin(), l.weights.end(), 1e200);
  DqnHyperparams hp;
  hp.hidden = {4};
  hp.batch_size = 1;
  hp.gamma = 0.0;
  Adam adam(huge, 1e-3);
  const auto t = tr({1e200, 1e200}, 0, 0.0, {0, 0});
  const std::vector<const Transition*> b = {&t};
  CHECK_THROWS_AS(train_step(huge, huge, b, hp, adam), std::runtime_error);
}

TEST_CASE("property: backprop gradient matches central finite differences") {
  auto p = random_mlp(4, {8}, 3, 21);
  auto target = random_mlp(4, {8}, 3, 22);
  std::vector<Transition> ts;
  for (int i = 0; i < 5; ++i) {
    ts.push_back(tr(random_vec(4, 30 + i), static_cast<std::size_t>(i % 3), 0.3 * i,
                    random_vec(4, 40 + i)));
  }
  std::vector<const Transition*> batch;
  for (const auto& t : ts) batch.push_back(&t);
  MlpParams grad;
  td_loss(p, target, batch, 0.9, &grad);
  auto f = [&] { return td_loss(p, target, batch, 0.9, nullptr); };
  double worst = 0.0;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    for (std::size_t i = 0; i < p.layers[l].weights.size(); ++i) {
      const double num = oracle::central_difference(f, &p.layers[l].weights[i], 1e-6);
      const double ana = grad.layers[l].weights[i];
      worst = std::max(worst, std::abs(ana - num) / (std::abs(ana) + 1e-8));
    }
    for (std::size_t i = 0; i < p.layers[l].bias.size(); ++i) {
      const double num = oracle::central_difference(f, &p.layers[l].bias[i], 1e-6);
      const double ana = grad.layers[l].bias[i];
      worst = std::max(worst, std::abs(ana - num) / (std::abs(ana) + 1e-8));
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("select_action") {
  Rng rng(1);
  const std::vector<double> q = {0.1, 0.9, 0.3, 0.2};
  CHECK(select_action(q, 0.0, rng) == 1);
  CHECK(select_action(std::vector<double>{1, 3, 2}, 0.0, rng) == 1);
  CHECK(select_action(std::vector<double>{5, 5}, 0.0, rng) == 0);
  CHECK_THROWS_AS(select_action(std::vector<double>{}, 0.0, rng), std::invalid_argument);

  std::vector<int> hits(4, 0);
  const int n = 10000;
  for (int i = 0; i < n; ++i) ++hits[select_action(q, 1.0, rng)];
  for (int h : hits) {
    CHECK(h / static_cast<double>(n) >= 0.23);
    CHECK(h / static_cast<double>(n) <= 0.27);
  }
}

TEST_CASE("property: greedy argmax is invariant to adding a constant") {
  std::mt19937_64 g(2);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> q(7);
    for (auto& x : q) x = u(g);
    auto shifted = q;
    const double k = u(g);
    for (auto& x : shifted) x += k;
    CHECK(select_action(q, 0.0, rng) == select_action(shifted, 0.0, rng));
  }
}

TEST_CASE("epsilon schedule") {
  DqnHyperparams hp;
  hp.epsilon_start = 1.0;
  hp.epsilon_end = 0.1;
  hp.epsilon_decay_steps = 100;
  CHECK(epsilon_at(hp, 0) == 1.0);
  CHECK(epsilon_at(hp, 50) == doctest::Approx(0.55));
  CHECK(epsilon_at(hp, 100) == 0.1);
  CHECK(epsilon_at(hp, 5000) == 0.1);
  hp.epsilon_decay_steps = 0;
  CHECK(epsilon_at(hp, 0) == 0.1);
}

TEST_CASE("sync_target copies only on period boundaries") {
  DqnHyperparams hp;
  hp.target_sync_period = 100;
  const auto online = random_mlp(3, {4}, 2, 1);
  auto target = random_mlp(3, {4}, 2, 2);
  const auto before = target;
  CHECK_FALSE(sync_target(online, target, 101, hp));
  CHECK(target == before);
  CHECK(sync_target(online, target, 100, hp));
  CHECK(target == online);
  auto t2 = before;
  CHECK(sync_target(online, t2, 0, hp));
  CHECK(t2 == online);
}

TEST_CASE("replay buffer sampling starts at the batch size and evicts oldest") {
  ReplayBuffer buf(100);
  Rng rng(4);
  for (int i = 0; i < 63; ++i) {
    CHECK_FALSE(replay_push_and_sample(buf, tr({double(i)}, 0, i, {0.0}), 64, rng).has_value());
  }
  const auto b = replay_push_and_sample(buf, tr({63.0}, 0, 63, {0.0}), 64, rng);
  REQUIRE(b.has_value());
  CHECK(b->size() == 64);
  std::vector<int> seen(64, 0);
  for (const auto* t : *b) ++seen[static_cast<std::size_t>(t->reward)];
  for (int s : seen) CHECK(s == 1);

  for (int i = 64; i < 150; ++i) buf.push(tr({double(i)}, 0, i, {0.0}));
  CHECK(buf.size() == 100);
  const auto all = buf.contents();
  CHECK(all.front()->reward == 50.0);
  CHECK(all.back()->reward == 149.0);
  CHECK_THROWS_AS(buf.sample(101, rng), std::invalid_argument);
  CHECK_THROWS_AS(ReplayBuffer(0), std::invalid_argument);
}

TEST_CASE("hyperparameter validation names the field") {
  DqnHyperparams hp;
  hp.gamma = 1.0;
  CHECK_THROWS_WITH_AS(hp.validate(), doctest::Contains("gamma"), std::invalid_argument);
  hp = {};
  hp.replay_capacity = 10;
  CHECK_THROWS_WITH_AS(hp.validate(), doctest::Contains("replay_capacity"), std::invalid_argument);
}

TEST_CASE("toy two-state MDP converges to Q* from value iteration") {
  // s0: a0 stays (r 0), a1 -> s1 (r 1); s1: a0 -> s0 (r 0), a1 stays (r 0.5)
  const std::vector<std::vector<std::pair<int, double>>> P = {{{0, 0.0}, {1, 1.0}},
                                                             {{0, 0.0}, {1, 0.5}}};
  const double gamma = 0.5;
  const auto qs = oracle::q_star(P, gamma);

  DqnHyperparams hp;
  hp.hidden = {16};
  hp.learning_rate = 5e-3;
  hp.batch_size = 32;
  hp.target_sync_period = 50;
  hp.gamma = gamma;
  hp.replay_capacity = 1000;
  DqnLearner agent(2, 2, hp, Rng(1), Rng(2), Rng(3));
  std::mt19937_64 env(5);
  std::uniform_int_distribution<int> coin(0, 1);
  auto onehot = [](int s) { return std::vector<double>{s == 0 ? 1.0 : 0.0, s == 1 ? 1.0 : 0.0}; };
  int s = 0;
  auto close = [&] {
    for (int st = 0; st < 2; ++st) {
      const auto q = agent.q_values(onehot(st));
      for (int a = 0; a < 2; ++a) {
        if (std::abs(q[a] - qs[st][a]) > 0.05) return false;
      }
    }
    return true;
  };
  int steps = 0;
  bool ok = false;
  for (; steps < 5000 && !ok; ++steps) {
    const int a = coin(env);
    const auto [ns, r] = P[s][a];
    agent.observe(tr(onehot(s), static_cast<std::size_t>(a), r, onehot(ns)));
    s = ns;
    if (steps % 50 == 0) ok = close();
  }
  CHECK(ok);
  MESSAGE("converged after " << steps << " transitions");
}

TEST_CASE("checkpoint round trip is exact") {
  const auto p = random_mlp(12, {64, 32}, 7, 9);
  std::stringstream ss;
  write_checkpoint(ss, p);
  const auto back = read_checkpoint(ss);
  CHECK(back == p);
  std::stringstream bad("not a checkpoint");
  CHECK_THROWS(read_checkpoint(bad));
}

TEST_CASE("learner is deterministic for fixed streams") {
  DqnHyperparams hp;
  hp.hidden = {8};
  hp.batch_size = 4;
  hp.replay_capacity = 16;
  auto run = [&] {
    DqnLearner a(3, 4, hp, Rng(1), Rng(2), Rng(3));
    std::vector<std::size_t> acts;
    for (int i = 0; i < 40; ++i) {
      const std::vector<double> st = {i * 0.1, 1.0, -0.5};
      const auto act = a.act(st);
      acts.push_back(act);
      a.observe(tr(st, act, 0.1 * (i % 3), {0.0, 1.0, 0.5}));
    }
    return std::pair{acts, a.online()};
  };
  const auto r1 = run();
  const auto r2 = run();
  CHECK(r1.first == r2.first);
  CHECK(r1.second == r2.second);
}

}  // TEST_SUITE
