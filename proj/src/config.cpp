#include "xslice/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace xslice {

namespace pt = boost::property_tree;

namespace {

constexpr const char* kInvalidPrefix = "invalid value for ";

// Re-throws a sub-config validation failure as ConfigError. The sub-configs
// report "invalid value for <key>"; `prefix` completes the key when the
// sub-config does not know its section.
template <typename F>
void rethrow_named(const std::string& prefix, F&& f) {
  try {
    f();
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    const std::string p = kInvalidPrefix;
    if (msg.rfind(p, 0) == 0) {
      const std::string key = prefix + msg.substr(p.size());
      throw ConfigError(key, "invalid value");
    }
    throw ConfigError(prefix.empty() ? "config" : prefix.substr(0, prefix.size() - 1), msg);
  }
}

std::string hold_rule_name(HoldRule h) {
  return h == HoldRule::order_only ? "order_only" : "whole_rbg_until_timeout";
}

std::string inter_mode_name(InterMode m) { return m == InterMode::online ? "online" : "frozen"; }

std::string backend_name(dqn::Backend b) { return b == dqn::Backend::serial ? "serial" : "openmp"; }

std::string fmt_double(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  // Prefer the short form when it reads back identically.
  std::ostringstream shortf;
  shortf << v;
  if (std::stod(shortf.str()) == v) return shortf.str();
  return s.str();
}

std::string fmt_points(const std::vector<Point>& pts) {
  std::string out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) out += "; ";
    out += fmt_double(pts[i].x) + " " + fmt_double(pts[i].y);
  }
  return out;
}

std::string fmt_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Typed access to one INI section; remembers which keys were consumed so
// leftovers can be reported as unknown.
class Section {
 public:
  Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  std::string key(const std::string& k) const { return name_ + "." + k; }

  std::optional<std::string> raw(const std::string& k) {
    used_.insert(k);
    if (!tree_) return std::nullopt;
    auto child = tree_->get_child_optional(pt::ptree::path_type(k, '/'));
    if (!child) return std::nullopt;
    return trim(child->data());
  }

  void get(const std::string& k, double& out) {
    if (auto v = raw(k)) out = parse_double(k, *v);
  }
  void get(const std::string& k, int& out) {
    if (auto v = raw(k)) out = static_cast<int>(parse_int(k, *v));
  }
  void get(const std::string& k, std::int64_t& out) {
    if (auto v = raw(k)) out = parse_int(k, *v);
  }
  void get(const std::string& k, std::size_t& out) {
    if (auto v = raw(k)) {
      const auto n = parse_int(k, *v);
      if (n < 0) throw ConfigError(key(k), "must be nonnegative");
      out = static_cast<std::size_t>(n);
    }
  }
  void get_u64(const std::string& k, std::uint64_t& out) {
    if (auto v = raw(k)) {
      try {
        std::size_t pos = 0;
        out = std::stoull(*v, &pos);
        if (pos != v->size() || v->front() == '-') throw std::invalid_argument(*v);
      } catch (const std::exception&) {
        throw ConfigError(key(k), "expected an unsigned integer, got '" + *v + "'");
      }
    }
  }
  void get(const std::string& k, std::string& out) {
    if (auto v = raw(k)) out = *v;
  }
  // Value scaled by `scale` (e.g. ms -> s).
  void get_scaled(const std::string& k, double& out, double scale) {
    if (auto v = raw(k)) out = parse_double(k, *v) * scale;
  }

  double parse_double(const std::string& k, const std::string& v) const {
    try {
      std::size_t pos = 0;
      const double d = std::stod(v, &pos);
      if (pos != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw ConfigError(key(k), "expected a number, got '" + v + "'");
    }
  }

  std::int64_t parse_int(const std::string& k, const std::string& v) const {
    try {
      std::size_t pos = 0;
      const long long n = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return n;
    } catch (const std::exception&) {
      throw ConfigError(key(k), "expected an integer, got '" + v + "'");
    }
  }

  void check_unknown() const {
    if (!tree_) return;
    for (const auto& [k, v] : *tree_) {
      if (!used_.count(k)) throw ConfigError(key(k), "unknown key");
    }
  }

 private:
  const pt::ptree* tree_;
  std::string name_;
  std::set<std::string> used_;
};

std::vector<Point> parse_points(const std::string& key, const std::string& text) {
  std::vector<Point> out;
  std::stringstream all(text);
  std::string item;
  while (std::getline(all, item, ';')) {
    item = trim(item);
    if (item.empty()) continue;
    std::replace(item.begin(), item.end(), ',', ' ');
    std::istringstream is(item);
    Point p;
    std::string extra;
    if (!(is >> p.x >> p.y) || (is >> extra)) {
      throw ConfigError(key, "expected 'x y; x y; ...', got '" + text + "'");
    }
    out.push_back(p);
  }
  return out;
}

std::vector<int> parse_ints(const std::string& key, const std::string& text) {
  std::vector<int> out;
  std::stringstream all(text);
  std::string item;
  while (std::getline(all, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      std::size_t pos = 0;
      out.push_back(std::stoi(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(key, "expected a comma-separated integer list, got '" + text + "'");
    }
  }
  return out;
}

void read_dqn(Section& sec, dqn::DqnHyperparams& hp) {
  if (auto v = sec.raw("hidden")) hp.hidden = parse_ints(sec.key("hidden"), *v);
  sec.get("learning_rate", hp.learning_rate);
  sec.get("batch_size", hp.batch_size);
  sec.get("target_sync_period", hp.target_sync_period);
  sec.get("gamma", hp.gamma);
  sec.get("epsilon_start", hp.epsilon_start);
  sec.get("epsilon_end", hp.epsilon_end);
  sec.get("epsilon_decay_steps", hp.epsilon_decay_steps);
  sec.get("replay_capacity", hp.replay_capacity);
  sec.get("train_steps_per_update", hp.train_steps_per_update);
  if (auto v = sec.raw("backend")) {
    if (*v == "serial") hp.backend = dqn::Backend::serial;
    else if (*v == "openmp") hp.backend = dqn::Backend::openmp;
    else throw ConfigError(sec.key("backend"), "expected serial|openmp, got '" + *v + "'");
  }
}

SliceProfile default_profile(SliceKind kind, double r_min_mbps, double d_max_ms,
                             double period_ms, int packet_bytes, int initial_rbgs) {
  SliceProfile p;
  p.kind = kind;
  p.r_min_bps = r_min_mbps * 1e6;
  p.d_max_s = d_max_ms * 1e-3;
  p.arrival_period_s = period_ms * 1e-3;
  p.packet_size_bits = static_cast<std::int64_t>(packet_bytes) * 8;
  p.tau_min_s = 0.5 * p.d_max_s;
  p.tau_max_s = 2.0 * p.d_max_s;
  p.tau_step_s = 0.25 * p.d_max_s;
  p.initial_rbgs = initial_rbgs;
  return p;
}

}  // namespace

void SimConfig::validate() const {
  rethrow_named("", [&] { topology.validate(); });
  for (std::size_t s = 0; s < slices.size(); ++s) {
    if (slices[s].kind != static_cast<SliceKind>(s)) {
      throw ConfigError("slice." + to_string(static_cast<SliceKind>(s)), "slice order mismatch");
    }
    rethrow_named("", [&] { slices[s].validate(); });
  }
  rethrow_named("dqn.intra.", [&] { intra_dqn.validate(); });
  rethrow_named("dqn.inter.", [&] { inter_dqn.validate(); });
  if (intra_window_ttis < 1) throw ConfigError("run.intra_window_ttis", "must be positive");
  if (inter_window_ttis < 1 || inter_window_ttis % intra_window_ttis != 0) {
    throw ConfigError("run.inter_window_ttis", "must be a positive multiple of intra_window_ttis");
  }
  if (total_ttis < 0 || total_ttis % inter_window_ttis != 0) {
    throw ConfigError("run.total_ttis", "must be a nonnegative multiple of inter_window_ttis");
  }
  if (inter_pretrain_ttis < 0 || inter_pretrain_ttis % inter_window_ttis != 0) {
    throw ConfigError("run.inter_pretrain_ttis",
                      "must be a nonnegative multiple of inter_window_ttis");
  }
  if (min_rbgs_per_slice < 1 || min_rbgs_per_slice * kNumSlices > topology.total_rbgs) {
    throw ConfigError("run.min_rbgs_per_slice", "infeasible for topology.total_rbgs");
  }
  if (delta_history_windows < 1) {
    throw ConfigError("run.delta_history_windows", "must be positive");
  }
  int initial = 0;
  for (const auto& s : slices) {
    if (s.initial_rbgs < min_rbgs_per_slice) {
      throw ConfigError("slice." + to_string(s.kind) + ".initial_rbgs",
                        "below run.min_rbgs_per_slice");
    }
    initial += s.initial_rbgs;
  }
  if (initial != topology.total_rbgs) {
    throw ConfigError("slice.embb.initial_rbgs", "initial RBGs must sum to topology.total_rbgs");
  }
}

SimConfig default_config() {
  SimConfig c;
  c.topology.oru_positions = {{0.0, 0.0}, {150.0, 0.0}, {75.0, 130.0}};
  // One user of every slice near each ORU, slice-major numbering.
  c.topology.user_positions = {
      {30.0, 20.0},  {120.0, -30.0}, {60.0, 90.0},   // eMBB
      {-20.0, 30.0}, {170.0, 30.0},  {110.0, 140.0}, // URLLC
      {40.0, -50.0}, {190.0, -40.0}, {75.0, 200.0},  // mMTC
  };
  c.slices = {
      default_profile(SliceKind::embb, 16.0, 10.0, 0.5, 1024, 8),
      default_profile(SliceKind::urllc, 3.8, 2.0, 1.0, 480, 4),
      default_profile(SliceKind::mmtc, 0.5, 20.0, 0.5, 32, 2),
  };
  c.intra_dqn.hidden = {64, 256, 256};
  c.inter_dqn.hidden = {256, 256};
  // Epsilon decays over the first half of each agent's decisions.
  c.intra_dqn.epsilon_decay_steps = c.total_ttis / c.intra_window_ttis / 2;
  c.inter_dqn.epsilon_decay_steps = c.total_ttis / c.inter_window_ttis / 2;
  c.intra_steering = xrl::Procedure::none;
  c.inter_steering = xrl::Procedure::none;
  // Inter agent: 100 s of offline warm-up, then deployed without further training.
  c.inter_pretrain_ttis = 100'000;
  c.inter_mode = InterMode::frozen;
  c.inter_dqn.train_steps_per_update = 16;
  return c;
}

SimConfig parse_config(const std::string& ini_text) {
  pt::ptree tree;
  try {
    std::istringstream is(ini_text);
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config", std::string("malformed INI: ") + e.message() + " at line " +
                                    std::to_string(e.line()));
  }

  SimConfig c = default_config();
  auto section = [&](const std::string& name) {
    return Section(tree.get_child_optional(pt::ptree::path_type(name, '/')).get_ptr(), name);
  };
  static const std::set<std::string> known = {"run",        "topology",  "slice.embb",
                                              "slice.urllc", "slice.mmtc", "dqn.intra",
                                              "dqn.inter"};
  for (const auto& [name, sub] : tree) {
    if (!known.count(name)) throw ConfigError(name, "unknown section");
  }

  bool intra_decay_set = false;
  bool inter_decay_set = false;
  {
    auto s = section("run");
    s.get("total_ttis", c.total_ttis);
    s.get_u64("seed", c.seed);
    s.get("output_dir", c.output_dir);
    s.get("intra_window_ttis", c.intra_window_ttis);
    s.get("inter_window_ttis", c.inter_window_ttis);
    s.get("min_rbgs_per_slice", c.min_rbgs_per_slice);
    s.get("delta_history_windows", c.delta_history_windows);
    s.get("inter_pretrain_ttis", c.inter_pretrain_ttis);
    if (auto v = s.raw("intra_steering")) {
      try {
        c.intra_steering = xrl::parse_procedure(*v);
      } catch (const std::invalid_argument& e) {
        throw ConfigError("run.intra_steering", e.what());
      }
    }
    if (auto v = s.raw("inter_steering")) {
      try {
        c.inter_steering = xrl::parse_procedure(*v);
      } catch (const std::invalid_argument& e) {
        throw ConfigError("run.inter_steering", e.what());
      }
    }
    if (auto v = s.raw("hold_rule")) {
      if (*v == "order_only") c.hold_rule = HoldRule::order_only;
      else if (*v == "whole_rbg_until_timeout") c.hold_rule = HoldRule::whole_rbg_until_timeout;
      else throw ConfigError("run.hold_rule", "expected order_only|whole_rbg_until_timeout");
    }
    if (auto v = s.raw("inter_mode")) {
      if (*v == "online") c.inter_mode = InterMode::online;
      else if (*v == "frozen") c.inter_mode = InterMode::frozen;
      else throw ConfigError("run.inter_mode", "expected online|frozen");
    }
    s.check_unknown();
  }
  {
    auto s = section("topology");
    auto& t = c.topology;
    if (auto v = s.raw("oru_positions")) t.oru_positions = parse_points(s.key("oru_positions"), *v);
    if (auto v = s.raw("user_positions")) {
      t.user_positions = parse_points(s.key("user_positions"), *v);
    }
    s.get("users_per_slice", t.users_per_slice);
    s.get("tx_power_per_rb_w", t.tx_power_per_rb_w);
    s.get("noise_power_w", t.noise_power_w);
    s.get("pathloss_exponent", t.pathloss_exponent);
    s.get("pathloss_ref_db", t.pathloss_ref_db);
    s.get("rb_bandwidth_hz", t.rb_bandwidth_hz);
    s.get("rbs_per_rbg", t.rbs_per_rbg);
    s.get("total_rbgs", t.total_rbgs);
    s.get_scaled("tti_ms", t.tti_s, 1e-3);
    s.get_scaled("processing_delay_ms", t.processing_delay_s, 1e-3);
    s.check_unknown();
  }
  for (auto& p : c.slices) {
    auto s = section("slice." + to_string(p.kind));
    const double old_dmax = p.d_max_s;
    s.get_scaled("r_min_mbps", p.r_min_bps, 1e6);
    s.get_scaled("d_max_ms", p.d_max_s, 1e-3);
    s.get_scaled("arrival_period_ms", p.arrival_period_s, 1e-3);
    if (auto v = s.raw("packet_size_bytes")) p.packet_size_bits = s.parse_int("packet_size_bytes", *v) * 8;
    if (p.d_max_s != old_dmax) {
      // Threshold grid follows d_max unless given explicitly.
      p.tau_min_s = 0.5 * p.d_max_s;
      p.tau_max_s = 2.0 * p.d_max_s;
      p.tau_step_s = 0.25 * p.d_max_s;
    }
    s.get_scaled("tau_min_ms", p.tau_min_s, 1e-3);
    s.get_scaled("tau_max_ms", p.tau_max_s, 1e-3);
    s.get_scaled("tau_step_ms", p.tau_step_s, 1e-3);
    s.get("alpha", p.alpha);
    s.get("beta", p.beta);
    s.get("initial_rbgs", p.initial_rbgs);
    s.check_unknown();
  }
  {
    auto s = section("dqn.intra");
    read_dqn(s, c.intra_dqn);
    intra_decay_set = s.raw("epsilon_decay_steps").has_value();
    s.check_unknown();
  }
  {
    auto s = section("dqn.inter");
    read_dqn(s, c.inter_dqn);
    inter_decay_set = s.raw("epsilon_decay_steps").has_value();
    s.check_unknown();
  }
  if (!intra_decay_set) c.intra_dqn.epsilon_decay_steps = c.total_ttis / c.intra_window_ttis / 2;
  if (!inter_decay_set) c.inter_dqn.epsilon_decay_steps = c.total_ttis / c.inter_window_ttis / 2;

  c.validate();
  return c;
}

SimConfig load_config(const std::string& path) {
  if (path == "default") {
    SimConfig c = default_config();
    c.validate();
    return c;
  }
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_ini(const SimConfig& c) {
  std::ostringstream o;
  o << "[run]\n"
    << "total_ttis = " << c.total_ttis << "\n"
    << "seed = " << c.seed << "\n"
    << "output_dir = " << c.output_dir << "\n"
    << "intra_window_ttis = " << c.intra_window_ttis << "\n"
    << "inter_window_ttis = " << c.inter_window_ttis << "\n"
    << "min_rbgs_per_slice = " << c.min_rbgs_per_slice << "\n"
    << "delta_history_windows = " << c.delta_history_windows << "\n"
    << "inter_pretrain_ttis = " << c.inter_pretrain_ttis << "\n"
    << "intra_steering = " << xrl::to_string(c.intra_steering) << "\n"
    << "inter_steering = " << xrl::to_string(c.inter_steering) << "\n"
    << "hold_rule = " << hold_rule_name(c.hold_rule) << "\n"
    << "inter_mode = " << inter_mode_name(c.inter_mode) << "\n\n";
  const auto& t = c.topology;
  o << "[topology]\n"
    << "oru_positions = " << fmt_points(t.oru_positions) << "\n"
    << "user_positions = " << fmt_points(t.user_positions) << "\n"
    << "users_per_slice = " << t.users_per_slice << "\n"
    << "tx_power_per_rb_w = " << fmt_double(t.tx_power_per_rb_w) << "\n"
    << "noise_power_w = " << fmt_double(t.noise_power_w) << "\n"
    << "pathloss_exponent = " << fmt_double(t.pathloss_exponent) << "\n"
    << "pathloss_ref_db = " << fmt_double(t.pathloss_ref_db) << "\n"
    << "rb_bandwidth_hz = " << fmt_double(t.rb_bandwidth_hz) << "\n"
    << "rbs_per_rbg = " << t.rbs_per_rbg << "\n"
    << "total_rbgs = " << t.total_rbgs << "\n"
    << "tti_ms = " << fmt_double(t.tti_s * 1e3) << "\n"
    << "processing_delay_ms = " << fmt_double(t.processing_delay_s * 1e3) << "\n\n";
  for (const auto& p : c.slices) {
    o << "[slice." << to_string(p.kind) << "]\n"
      << "r_min_mbps = " << fmt_double(p.r_min_bps / 1e6) << "\n"
      << "d_max_ms = " << fmt_double(p.d_max_s * 1e3) << "\n"
      << "arrival_period_ms = " << fmt_double(p.arrival_period_s * 1e3) << "\n"
      << "packet_size_bytes = " << p.packet_size_bits / 8 << "\n"
      << "tau_min_ms = " << fmt_double(p.tau_min_s * 1e3) << "\n"
      << "tau_max_ms = " << fmt_double(p.tau_max_s * 1e3) << "\n"
      << "tau_step_ms = " << fmt_double(p.tau_step_s * 1e3) << "\n"
      << "alpha = " << fmt_double(p.alpha) << "\n"
      << "beta = " << fmt_double(p.beta) << "\n"
      << "initial_rbgs = " << p.initial_rbgs << "\n\n";
  }
  auto dqn_section = [&](const char* name, const dqn::DqnHyperparams& hp) {
    o << "[" << name << "]\n"
      << "hidden = " << fmt_ints(hp.hidden) << "\n"
      << "learning_rate = " << fmt_double(hp.learning_rate) << "\n"
      << "batch_size = " << hp.batch_size << "\n"
      << "target_sync_period = " << hp.target_sync_period << "\n"
      << "gamma = " << fmt_double(hp.gamma) << "\n"
      << "epsilon_start = " << fmt_double(hp.epsilon_start) << "\n"
      << "epsilon_end = " << fmt_double(hp.epsilon_end) << "\n"
      << "epsilon_decay_steps = " << hp.epsilon_decay_steps << "\n"
      << "replay_capacity = " << hp.replay_capacity << "\n"
      << "train_steps_per_update = " << hp.train_steps_per_update << "\n"
      << "backend = " << backend_name(hp.backend) << "\n\n";
  };
  dqn_section("dqn.intra", c.intra_dqn);
  dqn_section("dqn.inter", c.inter_dqn);
  return o.str();
}

}  // namespace xslice
