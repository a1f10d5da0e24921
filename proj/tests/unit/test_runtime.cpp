#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "xslice/config.hpp"
#include "xslice/simulation.hpp"
#include "xslice/trace.hpp"

using namespace xslice;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  std::random_device rd;
  auto p = fs::temp_directory_path() / ("xslice_rt_" + name + "_" + std::to_string(rd()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

SimConfig short_config(std::int64_t ttis, xrl::Procedure steering = xrl::Procedure::none) {
  auto c = default_config();
  set_total_ttis(c, ttis);
  c.inter_pretrain_ttis = 0;
  c.intra_steering = steering;
  c.inter_steering = steering;
  return c;
}

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_SUITE("runtime") {

TEST_CASE("default config") {
  const auto c = default_config();
  CHECK(c.topology.total_rbgs == 14);
  CHECK(c.topology.num_users() == 9);
  CHECK(c.topology.num_orus() == 3);
  CHECK(c.intra_dqn.gamma == 0.9);
  CHECK(c.total_ttis == 20000);
  CHECK(c.inter_pretrain_ttis == 100000);
  CHECK(c.inter_mode == InterMode::frozen);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config parsing: errors name the key") {
  auto expect_key = [](const std::string& ini, const std::string& key) {
    try {
      parse_config(ini);
      FAIL("no error for " << key);
    } catch (const ConfigError& e) {
      CHECK(e.key() == key);
    }
  };
  expect_key("[slice.urllc]\ntau_step_ms = 0\n", "slice.urllc.tau_step_ms");
  expect_key("[run]\nbogus = 1\n", "run.bogus");
  expect_key("[nope]\nx = 1\n", "nope");
  expect_key("[dqn.inter]\ngamma = 1.5\n", "dqn.inter.gamma");
  expect_key("[run]\ntotal_ttis = 150\n", "run.total_ttis");
  expect_key("[run]\nseed = -3\n", "run.seed");
  expect_key("[slice.embb]\ninitial_rbgs = 9\n", "slice.embb.initial_rbgs");
}

TEST_CASE("config parsing: absent keys keep defaults; INI round trip") {
  const auto c = parse_config("[dqn.intra]\nlearning_rate = 0.001\n");
  CHECK(c.intra_dqn.gamma == 0.9);
  CHECK(c.intra_dqn.learning_rate == 0.001);
  const auto text = to_ini(default_config());
  CHECK(to_ini(parse_config(text)) == text);
  auto custom = default_config();
  custom.seed = 42;
  custom.intra_steering = xrl::Procedure::ar4;
  custom.hold_rule = HoldRule::order_only;
  custom.inter_dqn.hidden = {32, 16};
  CHECK(to_ini(parse_config(to_ini(custom))) == to_ini(custom));
  CHECK(parse_config(to_ini(custom)).seed == 42);
}

TEST_CASE("shipped configs/default.ini equals the built-in defaults") {
  const fs::path file = fs::path(XSLICE_SOURCE_DIR) / "configs" / "default.ini";
  REQUIRE(fs::exists(file));
  CHECK(to_ini(load_config(file.string())) == to_ini(default_config()));
  CHECK(to_ini(load_config("default")) == to_ini(default_config()));
}

TEST_CASE("run lengths: 1000 TTIs give 300 intra rows and 5 inter rows") {
  const auto r = run_simulation(short_config(1000));
  CHECK_FALSE(r.summary.aborted);
  CHECK(r.summary.ttis == 1000);
  CHECK(r.traces.tti.size() == 3000);
  CHECK(r.traces.intra.size() == 300);
  CHECK(r.traces.inter.size() == 5);
  CHECK(r.summary.intra_windows == 100);
  CHECK(r.summary.inter_windows == 5);
  CHECK(r.traces.explanations.empty());
  for (const auto& row : r.traces.inter) {
    CHECK(std::accumulate(row.rbgs.begin(), row.rbgs.end(), 0) == 14);
  }
}

TEST_CASE("property: drained bits conserve between traces and summary") {
  const auto r = run_simulation(short_config(400));
  std::int64_t drained = 0;
  for (const auto& t : r.traces.tti) drained += t.drained_bits;
  CHECK(drained == r.summary.drained_bits);
  CHECK(r.summary.drained_bits <= r.summary.generated_bits);
  for (const auto& t : r.traces.tti) {
    CHECK(t.utilization_rbs >= 0);
    CHECK(t.utilization_rbs <= 84);
  }
}

TEST_CASE("determinism: same seed gives byte-identical traces") {
  const auto cfg = short_config(400, xrl::Procedure::ar4);
  const auto a = scratch("det_a");
  const auto b = scratch("det_b");
  run_and_write(cfg, a);
  run_and_write(cfg, b);
  for (const char* f : {kTtiFile, kWindowFile, kInterFile, kExplanationFile, kExplanationLog,
                        kSummaryFile}) {
    CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
  }
  auto other = cfg;
  other.seed = 2;
  const auto c = scratch("det_c");
  run_and_write(other, c);
  CHECK(slurp(a / kTtiFile) != slurp(c / kTtiFile));
  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove_all(c);
}

TEST_CASE("steering logs one explanation per agent decision") {
  const auto r = run_simulation(short_config(400, xrl::Procedure::ar4));
  // intra: 40 windows x 3 slices, inter: 2 windows minus the initial allocation
  std::size_t intra = 0, inter = 0;
  for (const auto& e : r.traces.explanations) {
    (e.agent == "inter" ? inter : intra) += 1;
    CHECK(e.procedure == xrl::Procedure::ar4);
    CHECK_FALSE(e.sentence.empty());
  }
  CHECK(intra == r.traces.intra.size());
  CHECK(inter + 1 == r.traces.inter.size());
  for (const auto& row : r.traces.intra) {
    bool found = false;
    for (const auto& e : r.traces.explanations) {
      if (e.window == row.window && e.agent == "intra." + to_string(row.slice)) {
        CHECK(e.original == row.dqn_action);
        CHECK(e.steered == row.action);
        found = true;
      }
    }
    CHECK(found);
  }
}

TEST_CASE("trace files round trip") {
  const auto dir = scratch("rt");
  const auto r = run_and_write(short_config(400, xrl::Procedure::ar4), dir);
  const auto back = read_traces(dir);
  CHECK(back.tti == r.traces.tti);
  CHECK(back.inter.size() == r.traces.inter.size());
  CHECK(back.explanations == r.traces.explanations);
  // rewrite from the parsed rows and compare bytes (NaN-safe)
  const auto again = scratch("rt2");
  write_traces(back, again);
  for (const char* f : {kTtiFile, kWindowFile, kInterFile, kExplanationFile}) {
    CHECK_MESSAGE(slurp(dir / f) == slurp(again / f), f);
  }
  const auto summary = nlohmann::json::parse(slurp(dir / kSummaryFile));
  CHECK(summary.at("schema_version") == kTraceSchemaVersion);
  CHECK(summary.at("drained_bits").get<std::int64_t>() == r.summary.drained_bits);
  CHECK(fs::exists(dir / "checkpoints" / "inter.mlp"));
  fs::remove_all(dir);
  fs::remove_all(again);
}

TEST_CASE("zero-length run writes header-only files") {
  const auto dir = scratch("empty");
  const auto r = run_and_write(short_config(0), dir);
  CHECK(r.traces.tti.empty());
  CHECK(slurp(dir / kTtiFile) == std::string(kTtiHeader) + "\n");
  CHECK(slurp(dir / kWindowFile) == std::string(kWindowHeader) + "\n");
  CHECK(slurp(dir / kInterFile) == std::string(kInterHeader) + "\n");
  CHECK(slurp(dir / kExplanationFile) == std::string(kExplanationHeader) + "\n");
  CHECK(count_lines(slurp(dir / kExplanationLog)) == 0);
  fs::remove_all(dir);
}

TEST_CASE("output directory resolution") {
  auto cfg = default_config();
  cfg.output_dir = "from_config";
  ::unsetenv("XSLICE_OUTPUT_DIR");
  CHECK(resolve_output_dir(cfg, std::nullopt) == fs::path("from_config"));
  ::setenv("XSLICE_OUTPUT_DIR", "from_env", 1);
  CHECK(resolve_output_dir(cfg, std::nullopt) == fs::path("from_env"));
  CHECK(resolve_output_dir(cfg, std::string("explicit")) == fs::path("explicit"));
  ::unsetenv("XSLICE_OUTPUT_DIR");
}

TEST_CASE("a shared warm-up reproduces the self-contained run") {
  auto cfg = short_config(400);
  cfg.inter_pretrain_ttis = 400;
  const auto agent = pretrain_inter_agent(cfg);
  REQUIRE(agent != nullptr);
  const auto whole = run_simulation(cfg);
  const auto shared = run_simulation(cfg, *agent);
  CHECK(whole.traces.tti == shared.traces.tti);
  CHECK(whole.traces.inter.size() == shared.traces.inter.size());
  for (std::size_t i = 0; i < whole.traces.inter.size(); ++i) {
    CHECK(whole.traces.inter[i].action == shared.traces.inter[i].action);
  }
  // the agent passed in is copied, not consumed
  const auto again = run_simulation(cfg, *agent);
  CHECK(again.traces.tti == shared.traces.tti);
  cfg.inter_pretrain_ttis = 0;
  CHECK(pretrain_inter_agent(cfg) == nullptr);
}

TEST_CASE("warm-up runs in episodes of the evaluated run length") {
  auto cfg = short_config(400);
  cfg.inter_pretrain_ttis = 1000;
  const auto agent = pretrain_inter_agent(cfg);
  REQUIRE(agent != nullptr);
  // episodes of 400, 400 and 200 TTIs; the first window of each runs the initial allocation
  CHECK(agent->learner().decisions() == 2);
}

TEST_CASE("pretrained frozen inter agent runs and keeps its weights") {
  auto cfg = short_config(400);
  cfg.inter_pretrain_ttis = 400;
  cfg.inter_mode = InterMode::frozen;
  const auto r = run_simulation(cfg);
  CHECK_FALSE(r.summary.aborted);
  for (const auto& row : r.traces.inter) CHECK_FALSE(row.loss.has_value());
}

}  // TEST_SUITE
