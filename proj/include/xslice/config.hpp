#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "xslice/dqn/dqn.hpp"
#include "xslice/radio_env.hpp"
#include "xslice/scheduler.hpp"
#include "xslice/xrl.hpp"

namespace xslice {

// How the inter-slice agent learns during the evaluated run.
enum class InterMode {
  online,  // keeps training throughout
  frozen,  // no training; exploration pinned at epsilon_end
};

struct SimConfig {
  Topology topology;
  std::array<SliceProfile, kNumSlices> slices;
  dqn::DqnHyperparams intra_dqn;
  dqn::DqnHyperparams inter_dqn;
  xrl::Procedure intra_steering = xrl::Procedure::none;
  xrl::Procedure inter_steering = xrl::Procedure::none;
  HoldRule hold_rule = HoldRule::whole_rbg_until_timeout;
  InterMode inter_mode = InterMode::online;
  std::int64_t inter_pretrain_ttis = 0;
  std::int64_t total_ttis = 20'000;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  int intra_window_ttis = 10;
  int inter_window_ttis = 200;
  int min_rbgs_per_slice = 1;
  int delta_history_windows = 50;

  void validate() const;
};

// Validation or parse failure; `key()` names the offending config key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

// Built-in defaults; configs/default.ini spells out the same values.
SimConfig default_config();

// Loads an INI document; "default" (no file) returns default_config(). Keys
// absent from the file keep their defaults.
SimConfig load_config(const std::string& path);
SimConfig parse_config(const std::string& ini_text);

// Renders `cfg` as an INI document that parse_config reads back.
std::string to_ini(const SimConfig& cfg);

}  // namespace xslice
