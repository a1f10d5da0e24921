#include "xslice/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "xslice/dqn/checkpoint.hpp"

namespace xslice {

namespace {

std::string intra_name(SliceKind s) { return "intra." + to_string(s); }

std::vector<double> mean_snr_db(const ChannelRealization& ch, const Topology& topo, int first_user,
                                int users) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(users * ch.orus()));
  for (int u = first_user; u < first_user + users; ++u) {
    for (int m = 0; m < ch.orus(); ++m) {
      double g = 0.0;
      for (int n = 0; n < ch.rbs(); ++n) g += ch.gain(u, m, n);
      const double snr = topo.tx_power_per_rb_w * (g / ch.rbs()) / topo.noise_power_w;
      out.push_back(10.0 * std::log10(snr));
    }
  }
  return out;
}

void push_history(std::vector<double>& h, double v, int cap) {
  h.push_back(v);
  if (static_cast<int>(h.size()) > cap) h.erase(h.begin());
}

// Bookkeeping for the action chosen at the start of the current window.
struct Decision {
  std::size_t dqn_action = 0;
  std::size_t action = 0;
  double epsilon = 0.0;
  std::optional<double> loss;
};

class Engine {
 public:
  Engine(const SimConfig& cfg, std::string prefix, std::unique_ptr<Agent> inter)
      : cfg_(cfg), prefix_(std::move(prefix)), channel_rng_(stream("channel")) {
    const auto& topo = cfg_.topology;
    for (int s = 0; s < kNumSlices; ++s) {
      const auto kind = static_cast<SliceKind>(s);
      auto& st = slices_[s];
      st.kind = kind;
      for (int u = 0; u < topo.users_per_slice; ++u) st.user_ids.push_back(topo.first_user(kind) + u);
      st.queues.assign(static_cast<std::size_t>(topo.users_per_slice), {});
      actions_[s] = intra_action_space(cfg_.slices[s]);
      const int state_size = topo.users_per_slice * topo.num_orus() + topo.users_per_slice;
      const auto name = intra_name(kind);
      intra_[s] = std::make_unique<Agent>(name, cfg_.intra_window_ttis, state_size,
                                          static_cast<int>(actions_[s].size()), cfg_.intra_dqn,
                                          stream(name + "/init"), stream(name + "/explore"),
                                          stream(name + "/replay"));
    }
    combos_ = enumerate_rbg_combinations(topo.total_rbgs, kNumSlices, cfg_.min_rbgs_per_slice);
    RbgAllocation initial;
    for (const auto& p : cfg_.slices) initial.push_back(p.initial_rbgs);
    initial_action_ = static_cast<std::size_t>(
        std::find(combos_.begin(), combos_.end(), initial) - combos_.begin());
    if (initial_action_ >= combos_.size()) throw std::logic_error("initial RBGs not enumerable");
    if (inter) {
      inter_ = std::move(inter);
    } else {
      inter_ = std::make_unique<Agent>("inter", cfg_.inter_window_ttis, 3 * kNumSlices,
                                       static_cast<int>(combos_.size()), cfg_.inter_dqn,
                                       stream("inter/init"), stream("inter/explore"),
                                       stream("inter/replay"));
    }
    if (cfg_.inter_mode == InterMode::frozen) {
      inter_->learner().set_training(false);
      inter_->learner().set_greedy_floor(true);
    }
  }

  void run(RunTraces& out, RunSummary& sum) {
    sum.seed = cfg_.seed;
    try {
      loop(out, sum);
    } catch (const std::runtime_error& e) {
      // Training divergence: keep what was produced so far.
      sum.aborted = true;
      sum.abort_reason = e.what();
      spdlog::error("run aborted at tti {}: {}", sum.ttis, e.what());
    }
  }

  std::unique_ptr<Agent> take_inter() { return std::move(inter_); }
  const std::array<std::unique_ptr<Agent>, kNumSlices>& intra() const { return intra_; }
  const Agent& inter() const { return *inter_; }

 private:
  Rng stream(const std::string& name) const { return make_stream(cfg_.seed, prefix_ + name); }

  xrl::ExplanationRecord steer_now(xrl::Procedure p, const std::string& agent, std::int64_t window,
                                   const xrl::AttributedGraph& g, std::size_t a) const {
    auto r = xrl::steer(p, g, a);
    r.agent = agent;
    r.window = window;
    return r;
  }

  std::vector<double> intra_state(int s, const ChannelRealization& ch) const {
    const auto& topo = cfg_.topology;
    IntraObservation obs;
    obs.users = topo.users_per_slice;
    obs.orus = topo.num_orus();
    obs.mean_snr_db = mean_snr_db(ch, topo, topo.first_user(static_cast<SliceKind>(s)), obs.users);
    for (const auto& q : slices_[s].queues) obs.buffered_bits.push_back(buffered_bits(q));
    return intra_state_vector(obs);
  }

  void loop(RunTraces& out, RunSummary& sum) {
    const auto& topo = cfg_.topology;
    const int iw = cfg_.intra_window_ttis;
    const int ew = cfg_.inter_window_ttis;
    std::array<RbgBlock, kNumSlices> blocks{};
    std::array<double, kNumSlices> tau{};
    std::array<Decision, kNumSlices> intra_dec{};
    Decision inter_dec;
    std::vector<double> inter_state(3 * kNumSlices, 0.0);
    std::array<std::vector<TtiRecord>, kNumSlices> records;
    std::array<std::vector<double>, kNumSlices> intra_hist;
    std::array<std::vector<double>, kNumSlices> inter_hist;
    ChannelRealization ch;

    double sys_r = 0.0, sys_d = 0.0, sys_u = 0.0, sys_un = 0.0, inter_reward_sum = 0.0;
    std::array<double, kNumSlices> sl_r{}, sl_d{}, sl_u{}, sl_un{}, sl_rew{};
    std::array<std::int64_t, kNumSlices> sl_dn{};
    std::int64_t sys_dn = 0;

    for (std::int64_t t = 0; t < cfg_.total_ttis; ++t) {
      for (int s = 0; s < kNumSlices; ++s) {
        const int n = generate_traffic(t, cfg_.slices[s], topo.tti_s, slices_[s].queues);
        sum.generated_bits += static_cast<std::int64_t>(n) * cfg_.slices[s].packet_size_bits *
                              static_cast<std::int64_t>(slices_[s].queues.size());
      }
      ch = sample_channel(channel_rng_, topo);

      if (t % ew == 0) {
        const std::int64_t window = t / ew;
        if (t == 0) {
          inter_->set_pending(inter_state, initial_action_);
          inter_dec = {initial_action_, initial_action_, inter_->learner().epsilon(), std::nullopt};
        } else {
          const double eps = inter_->learner().epsilon();
          SteeringHook hook;
          if (cfg_.inter_steering != xrl::Procedure::none) {
            hook = [&](const xrl::AttributedGraph& g, std::size_t a) {
              return steer_now(cfg_.inter_steering, "inter", window, g, a);
            };
          }
          auto r = inter_->step(t, inter_state, hook);
          inter_dec = {r.dqn_action, r.action, eps, r.loss};
          if (r.explanation) out.explanations.push_back(std::move(*r.explanation));
        }
        int first = 0;
        for (int s = 0; s < kNumSlices; ++s) {
          blocks[s] = {first, combos_[inter_dec.action][s]};
          first += blocks[s].count;
        }
      }

      if (t % iw == 0) {
        const std::int64_t window = t / iw;
        for (int s = 0; s < kNumSlices; ++s) {
          auto& agent = *intra_[s];
          const double eps = agent.learner().epsilon();
          SteeringHook hook;
          if (cfg_.intra_steering != xrl::Procedure::none) {
            hook = [&](const xrl::AttributedGraph& g, std::size_t a) {
              return steer_now(cfg_.intra_steering, agent.name(), window, g, a);
            };
          }
          auto r = agent.step(t, intra_state(s, ch), hook);
          intra_dec[s] = {r.dqn_action, r.action, eps, r.loss};
          tau[s] = actions_[s][r.action].tau_th_s;
          if (r.explanation) out.explanations.push_back(std::move(*r.explanation));
        }
      }

      for (int s = 0; s < kNumSlices; ++s) {
        auto rep = schedule_tti(slices_[s], blocks[s], tau[s], t, ch, topo, cfg_.hold_rule);
        TtiRecord rec;
        rec.tti = t;
        rec.utilization_rbs = rep.utilization_rbs;
        rec.drained_bits = rep.drained_bits;
        const int first_user = topo.first_user(static_cast<SliceKind>(s));
        for (const auto& cp : rep.completed) {
          rec.completed_delays_s.push_back(packet_delay_s(cp, topo));
          rec.completed_users.push_back(cp.user - first_user);
        }
        std::int64_t drained = 0;
        for (auto b : rep.drained_bits) drained += b;
        sum.drained_bits += drained;
        out.tti.push_back({t, static_cast<SliceKind>(s), rep.utilization_rbs, drained,
                           static_cast<int>(rep.completed.size())});
        records[s].push_back(std::move(rec));
      }
      sum.ttis = t + 1;

      if ((t + 1) % iw == 0) {
        const std::int64_t window = t / iw;
        double wr = 0.0, wd = 0.0, wu = 0.0, wun = 0.0;
        int wdn = 0;
        for (int s = 0; s < kNumSlices; ++s) {
          const auto& prof = cfg_.slices[s];
          std::span<const TtiRecord> last(records[s].data() + records[s].size() - iw,
                                          static_cast<std::size_t>(iw));
          const auto k = window_kpis(last, prof, slices_[s], topo, intra_hist[s]);
          push_history(intra_hist[s], k.u_max, cfg_.delta_history_windows);
          const int z = blocks[s].count;
          const double un = normalized_window_utilization(k.u_max, z, topo.rbs_per_rbg);
          const double reward = intra_reward(un, k.r_avg, prof);
          const double d_attr = k.d_valid ? k.d_avg : std::nan("");
          intra_[s]->feedback(reward, {k.r_avg, d_attr, k.u_max, reward});

          IntraRow row;
          row.window = window;
          row.tti_end = t + 1;
          row.slice = static_cast<SliceKind>(s);
          row.rbgs = z;
          row.tau_ms = tau[s] * 1e3;
          row.dqn_action = intra_dec[s].dqn_action;
          row.action = intra_dec[s].action;
          row.r_avg = k.r_avg;
          row.d_avg = k.d_avg;
          row.d_valid = k.d_valid;
          row.u_max = k.u_max;
          row.u_max_norm = un;
          row.delta = k.delta;
          row.delta_valid = k.delta_valid;
          row.qos_fraction = k.qos_fraction;
          row.reward = reward;
          row.epsilon = intra_dec[s].epsilon;
          row.loss = intra_dec[s].loss;
          out.intra.push_back(row);

          wr += k.r_avg;
          wu += k.u_max;
          wun += un;
          sl_r[s] += k.r_avg;
          sl_u[s] += k.u_max;
          sl_un[s] += un;
          sl_rew[s] += reward;
          if (k.d_valid) {
            wd += k.d_avg;
            ++wdn;
            sl_d[s] += k.d_avg;
            ++sl_dn[s];
          }
        }
        sys_r += wr / kNumSlices;
        sys_u += wu;
        sys_un += wun / kNumSlices;
        if (wdn > 0) {
          sys_d += wd / wdn;
          ++sys_dn;
        }
        sum.intra_windows += 1;
      }

      if ((t + 1) % ew == 0) {
        WindowKpis wk;
        for (int s = 0; s < kNumSlices; ++s) {
          wk.slices[s] = window_kpis(records[s], cfg_.slices[s], slices_[s], topo, inter_hist[s]);
          push_history(inter_hist[s], wk.slices[s].u_max, cfg_.delta_history_windows);
          records[s].clear();
        }
        const double reward = inter_reward(wk);
        double r = 0.0, d = 0.0, u = 0.0;
        int dn = 0;
        for (const auto& k : wk.slices) {
          r += k.r_avg;
          u += k.u_max;
          if (k.d_valid) {
            d += k.d_avg;
            ++dn;
          }
        }
        r /= kNumSlices;
        const double d_attr = dn > 0 ? d / dn : std::nan("");
        inter_->feedback(reward, {r, d_attr, u, reward});
        inter_state = inter_state_vector(wk, topo.num_rbs());

        InterRow row;
        row.window = t / ew;
        row.tti_end = t + 1;
        row.rbgs = combos_[inter_dec.action];
        row.dqn_action = inter_dec.dqn_action;
        row.action = inter_dec.action;
        row.r_avg = r;
        row.d_norm = dn > 0 ? d / dn : 0.0;
        row.u_max = u;
        row.reward = reward;
        row.epsilon = inter_dec.epsilon;
        row.loss = inter_dec.loss;
        out.inter.push_back(std::move(row));
        inter_reward_sum += reward;
        sum.inter_windows += 1;
      }
    }

    // Close the last transitions so replay and graphs see the final windows.
    if (cfg_.total_ttis > 0) {
      for (int s = 0; s < kNumSlices; ++s) intra_[s]->finish(intra_state(s, ch));
      inter_->finish(inter_state);
    }

    const auto w = static_cast<double>(std::max<std::int64_t>(sum.intra_windows, 1));
    sum.system_r_avg = sys_r / w;
    sum.system_d_avg = sys_dn > 0 ? sys_d / static_cast<double>(sys_dn) : 0.0;
    sum.system_u_max_rbs = sys_u / w;
    sum.system_u_max_norm = sys_un / w;
    sum.inter_mean_reward =
        sum.inter_windows > 0 ? inter_reward_sum / static_cast<double>(sum.inter_windows) : 0.0;
    for (int s = 0; s < kNumSlices; ++s) {
      auto& ss = sum.slices[s];
      ss.mean_r_avg = sl_r[s] / w;
      ss.mean_d_avg = sl_dn[s] > 0 ? sl_d[s] / static_cast<double>(sl_dn[s]) : 0.0;
      ss.mean_u_max = sl_u[s] / w;
      ss.mean_u_max_norm = sl_un[s] / w;
      ss.mean_reward = sl_rew[s] / w;
    }
  }

  const SimConfig& cfg_;
  std::string prefix_;
  Rng channel_rng_;
  std::array<SliceState, kNumSlices> slices_;
  std::array<std::vector<IntraAction>, kNumSlices> actions_;
  std::array<std::unique_ptr<Agent>, kNumSlices> intra_;
  std::vector<RbgAllocation> combos_;
  std::size_t initial_action_ = 0;
  std::unique_ptr<Agent> inter_;
};

void finalize_counts(const RunTraces& t, RunSummary& s) {
  s.explanations = static_cast<std::int64_t>(t.explanations.size());
  s.steered = std::count_if(t.explanations.begin(), t.explanations.end(),
                            [](const auto& e) { return e.original != e.steered; });
}

struct FullRun {
  RunResult result;
  std::unique_ptr<Engine> engine;
};

std::unique_ptr<Agent> pretrain(const SimConfig& cfg) {
  // Warm-up: same physics, own RNG streams, no steering, no traces kept.
  // Split into episodes as long as the evaluated run, each starting from empty
  // buffers, so a starved slice's backlog does not carry over.
  SimConfig warm = cfg;
  warm.intra_steering = xrl::Procedure::none;
  warm.inter_steering = xrl::Procedure::none;
  warm.inter_mode = InterMode::online;
  const std::int64_t episode = cfg.total_ttis > 0 ? cfg.total_ttis : cfg.inter_pretrain_ttis;
  warm.intra_dqn.epsilon_decay_steps = episode / warm.intra_window_ttis / 2;
  warm.inter_dqn.epsilon_decay_steps = cfg.inter_pretrain_ttis / warm.inter_window_ttis / 2;
  std::unique_ptr<Agent> agent;
  int ep = 0;
  for (std::int64_t done = 0; done < cfg.inter_pretrain_ttis; done += warm.total_ttis, ++ep) {
    warm.total_ttis = std::min(episode, cfg.inter_pretrain_ttis - done);
    Engine e(warm, "pretrain/" + std::to_string(ep) + "/", std::move(agent));
    // intra agents are rebuilt for the evaluated run, so skip their training here
    for (const auto& a : e.intra()) a->learner().set_training(false);
    RunTraces scratch;
    RunSummary ws;
    e.run(scratch, ws);
    if (ws.aborted) throw std::runtime_error("inter pretraining diverged: " + ws.abort_reason);
    agent = e.take_inter();
  }
  spdlog::info("inter agent pretrained for {} TTIs in {} episodes ({} train steps)",
               cfg.inter_pretrain_ttis, ep, agent->learner().train_steps());
  return agent;
}

FullRun run_full(const SimConfig& cfg, const Agent* pretrained_inter = nullptr) {
  cfg.validate();
  std::unique_ptr<Agent> pretrained;
  if (pretrained_inter != nullptr) {
    pretrained = std::make_unique<Agent>(*pretrained_inter);
  } else if (cfg.inter_pretrain_ttis > 0) {
    pretrained = pretrain(cfg);
  }
  FullRun fr;
  fr.engine = std::make_unique<Engine>(cfg, "", std::move(pretrained));
  fr.engine->run(fr.result.traces, fr.result.summary);
  finalize_counts(fr.result.traces, fr.result.summary);
  return fr;
}

}  // namespace

SystemSeries system_series(const std::vector<IntraRow>& intra) {
  SystemSeries s;
  std::size_t i = 0;
  while (i < intra.size()) {
    const auto w = intra[i].window;
    double r = 0.0, d = 0.0, u = 0.0, un = 0.0;
    int n = 0, dn = 0;
    for (; i < intra.size() && intra[i].window == w; ++i) {
      r += intra[i].r_avg;
      u += intra[i].u_max;
      un += intra[i].u_max_norm;
      if (intra[i].d_valid) {
        d += intra[i].d_avg;
        ++dn;
      }
      ++n;
    }
    s.r_avg.push_back(r / n);
    s.u_max_rbs.push_back(u);
    s.u_max_norm.push_back(un / n);
    if (dn > 0) s.d_avg.push_back(d / dn);
  }
  return s;
}

RunResult run_simulation(const SimConfig& cfg) { return std::move(run_full(cfg).result); }

std::shared_ptr<const Agent> pretrain_inter_agent(const SimConfig& cfg) {
  cfg.validate();
  if (cfg.inter_pretrain_ttis <= 0) return nullptr;
  return pretrain(cfg);
}

RunResult run_simulation(const SimConfig& cfg, const Agent& pretrained_inter) {
  return std::move(run_full(cfg, &pretrained_inter).result);
}

void write_summary(const RunSummary& s, const std::filesystem::path& file) {
  nlohmann::ordered_json j;
  j["schema_version"] = kTraceSchemaVersion;
  j["seed"] = s.seed;
  j["ttis"] = s.ttis;
  j["intra_windows"] = s.intra_windows;
  j["inter_windows"] = s.inter_windows;
  j["generated_bits"] = s.generated_bits;
  j["drained_bits"] = s.drained_bits;
  j["system_r_avg"] = s.system_r_avg;
  j["system_d_avg"] = s.system_d_avg;
  j["system_u_max_rbs"] = s.system_u_max_rbs;
  j["system_u_max_norm"] = s.system_u_max_norm;
  j["inter_mean_reward"] = s.inter_mean_reward;
  auto& sl = j["slices"];
  for (int k = 0; k < kNumSlices; ++k) {
    const auto& ss = s.slices[k];
    nlohmann::ordered_json e;
    e["mean_r_avg"] = ss.mean_r_avg;
    e["mean_d_avg"] = ss.mean_d_avg;
    e["mean_u_max"] = ss.mean_u_max;
    e["mean_u_max_norm"] = ss.mean_u_max_norm;
    e["mean_reward"] = ss.mean_reward;
    sl[to_string(static_cast<SliceKind>(k))] = e;
  }
  j["explanations"] = s.explanations;
  j["steered"] = s.steered;
  j["aborted"] = s.aborted;
  j["abort_reason"] = s.abort_reason;
  std::ofstream f(file, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + file.string());
  f << j.dump(2) << '\n';
  if (!f) throw std::runtime_error("failed writing " + file.string());
}

RunResult run_and_write(const SimConfig& cfg, const std::filesystem::path& dir,
                        const Agent* pretrained_inter) {
  auto fr = run_full(cfg, pretrained_inter);
  write_traces(fr.result.traces, dir);
  write_summary(fr.result.summary, dir / kSummaryFile);
  const auto ck = dir / "checkpoints";
  std::filesystem::create_directories(ck);
  for (const auto& a : fr.engine->intra()) {
    dqn::save_checkpoint((ck / (a->name() + ".mlp")).string(), a->learner().online());
  }
  dqn::save_checkpoint((ck / "inter.mlp").string(), fr.engine->inter().learner().online());
  return std::move(fr.result);
}

std::filesystem::path resolve_output_dir(const SimConfig& cfg,
                                         const std::optional<std::string>& explicit_dir) {
  if (explicit_dir && !explicit_dir->empty()) return *explicit_dir;
  if (const char* env = std::getenv("XSLICE_OUTPUT_DIR"); env && *env) return env;
  return cfg.output_dir;
}

void set_total_ttis(SimConfig& cfg, std::int64_t ttis) {
  const auto old_intra = cfg.total_ttis / cfg.intra_window_ttis / 2;
  const auto old_inter = cfg.total_ttis / cfg.inter_window_ttis / 2;
  cfg.total_ttis = ttis;
  if (cfg.intra_dqn.epsilon_decay_steps == old_intra) {
    cfg.intra_dqn.epsilon_decay_steps = ttis / cfg.intra_window_ttis / 2;
  }
  if (cfg.inter_dqn.epsilon_decay_steps == old_inter) {
    cfg.inter_dqn.epsilon_decay_steps = ttis / cfg.inter_window_ttis / 2;
  }
}

}  // namespace xslice
