#include "xslice/trace.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace xslice {

const char* const kTtiHeader = "tti,slice,utilization_rbs,drained_bits,completed_packets";
const char* const kWindowHeader =
    "window,tti_end,slice,rbgs,tau_ms,dqn_action,action,r_avg,d_avg,d_valid,u_max,u_max_norm,"
    "delta,delta_valid,qos_fraction,reward,epsilon,loss";
const char* const kInterHeader =
    "window,tti_end,rbgs_embb,rbgs_urllc,rbgs_mmtc,dqn_action,action,r_avg,d_norm,u_max,reward,"
    "epsilon,loss";
const char* const kExplanationHeader =
    "window,agent,procedure,original,steered,bj_original,bj_steered,bk_original,bk_steered,"
    "sentence";

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, end);
}

SliceKind parse_slice(const std::string& text) {
  if (text == "embb") return SliceKind::embb;
  if (text == "urllc") return SliceKind::urllc;
  if (text == "mmtc") return SliceKind::mmtc;
  throw std::invalid_argument("unknown slice '" + text + "'");
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        in_quotes = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write trace file " + p.string());
  return f;
}

void close_checked(std::ofstream& f, const std::filesystem::path& p) {
  f.close();
  if (!f) throw std::runtime_error("failed writing trace file " + p.string());
}

// Reads `file`, checks the header and hands every data row to `row`.
template <typename F>
void read_csv(const std::filesystem::path& file, const char* header, std::size_t columns, F row) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open trace file " + file.string());
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw std::runtime_error(file.string() + ": header mismatch");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split_csv(line);
    if (f.size() != columns) {
      throw std::runtime_error(file.string() + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(columns) + " columns");
    }
    try {
      row(f);
    } catch (const std::exception& e) {
      throw std::runtime_error(file.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

double to_d(const std::string& s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw std::invalid_argument("bad number " + s);
  return v;
}

std::int64_t to_i(const std::string& s) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw std::invalid_argument("bad integer " + s);
  return v;
}

std::optional<double> to_opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return to_d(s);
}

}  // namespace

void write_traces(const RunTraces& t, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create trace directory " + dir.string());

  {
    const auto p = dir / kTtiFile;
    auto f = open_out(p);
    f << kTtiHeader << '\n';
    for (const auto& r : t.tti) {
      f << r.tti << ',' << to_string(r.slice) << ',' << r.utilization_rbs << ',' << r.drained_bits
        << ',' << r.completed_packets << '\n';
    }
    close_checked(f, p);
  }
  {
    const auto p = dir / kWindowFile;
    auto f = open_out(p);
    f << kWindowHeader << '\n';
    for (const auto& r : t.intra) {
      f << r.window << ',' << r.tti_end << ',' << to_string(r.slice) << ',' << r.rbgs << ','
        << format_double(r.tau_ms) << ',' << r.dqn_action << ',' << r.action << ','
        << format_double(r.r_avg) << ',' << format_double(r.d_avg) << ',' << int(r.d_valid)
        << ',' << format_double(r.u_max) << ',' << format_double(r.u_max_norm) << ','
        << format_double(r.delta) << ',' << int(r.delta_valid) << ','
        << format_double(r.qos_fraction) << ',' << format_double(r.reward) << ','
        << format_double(r.epsilon) << ',' << opt(r.loss) << '\n';
    }
    close_checked(f, p);
  }
  {
    const auto p = dir / kInterFile;
    auto f = open_out(p);
    f << kInterHeader << '\n';
    for (const auto& r : t.inter) {
      if (r.rbgs.size() != kNumSlices) throw std::runtime_error("inter row needs 3 RBG counts");
      f << r.window << ',' << r.tti_end << ',' << r.rbgs[0] << ',' << r.rbgs[1] << ','
        << r.rbgs[2] << ',' << r.dqn_action << ',' << r.action << ',' << format_double(r.r_avg)
        << ',' << format_double(r.d_norm) << ',' << format_double(r.u_max) << ','
        << format_double(r.reward) << ',' << format_double(r.epsilon) << ',' << opt(r.loss)
        << '\n';
    }
    close_checked(f, p);
  }
  {
    const auto p = dir / kExplanationFile;
    auto f = open_out(p);
    f << kExplanationHeader << '\n';
    for (const auto& r : t.explanations) {
      f << r.window << ',' << r.agent << ',' << xrl::to_string(r.procedure) << ',' << r.original
        << ',' << r.steered << ',' << format_double(r.bj_original) << ','
        << format_double(r.bj_steered) << ',' << format_double(r.bk_original) << ','
        << format_double(r.bk_steered) << ',' << quote(r.sentence) << '\n';
    }
    close_checked(f, p);
  }
  {
    const auto p = dir / kExplanationLog;
    auto f = open_out(p);
    for (const auto& r : t.explanations) {
      nlohmann::ordered_json j;
      j["window"] = r.window;
      j["agent"] = r.agent;
      j["procedure"] = xrl::to_string(r.procedure);
      j["original"] = r.original;
      j["steered"] = r.steered;
      j["bj_original"] = r.bj_original;
      j["bj_steered"] = r.bj_steered;
      j["bk_original"] = r.bk_original;
      j["bk_steered"] = r.bk_steered;
      j["sentence"] = r.sentence;
      f << j.dump() << '\n';
    }
    close_checked(f, p);
  }
}

std::vector<TtiRow> read_tti_rows(const std::filesystem::path& file) {
  std::vector<TtiRow> out;
  read_csv(file, kTtiHeader, 5, [&](const std::vector<std::string>& f) {
    out.push_back({to_i(f[0]), parse_slice(f[1]), static_cast<int>(to_i(f[2])), to_i(f[3]),
                   static_cast<int>(to_i(f[4]))});
  });
  return out;
}

std::vector<IntraRow> read_intra_rows(const std::filesystem::path& file) {
  std::vector<IntraRow> out;
  read_csv(file, kWindowHeader, 18, [&](const std::vector<std::string>& f) {
    IntraRow r;
    r.window = to_i(f[0]);
    r.tti_end = to_i(f[1]);
    r.slice = parse_slice(f[2]);
    r.rbgs = static_cast<int>(to_i(f[3]));
    r.tau_ms = to_d(f[4]);
    r.dqn_action = static_cast<std::size_t>(to_i(f[5]));
    r.action = static_cast<std::size_t>(to_i(f[6]));
    r.r_avg = to_d(f[7]);
    r.d_avg = to_d(f[8]);
    r.d_valid = to_i(f[9]) != 0;
    r.u_max = to_d(f[10]);
    r.u_max_norm = to_d(f[11]);
    r.delta = to_d(f[12]);
    r.delta_valid = to_i(f[13]) != 0;
    r.qos_fraction = to_d(f[14]);
    r.reward = to_d(f[15]);
    r.epsilon = to_d(f[16]);
    r.loss = to_opt(f[17]);
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<InterRow> read_inter_rows(const std::filesystem::path& file) {
  std::vector<InterRow> out;
  read_csv(file, kInterHeader, 13, [&](const std::vector<std::string>& f) {
    InterRow r;
    r.window = to_i(f[0]);
    r.tti_end = to_i(f[1]);
    r.rbgs = {static_cast<int>(to_i(f[2])), static_cast<int>(to_i(f[3])),
              static_cast<int>(to_i(f[4]))};
    r.dqn_action = static_cast<std::size_t>(to_i(f[5]));
    r.action = static_cast<std::size_t>(to_i(f[6]));
    r.r_avg = to_d(f[7]);
    r.d_norm = to_d(f[8]);
    r.u_max = to_d(f[9]);
    r.reward = to_d(f[10]);
    r.epsilon = to_d(f[11]);
    r.loss = to_opt(f[12]);
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<xrl::ExplanationRecord> read_explanations(const std::filesystem::path& file) {
  std::vector<xrl::ExplanationRecord> out;
  read_csv(file, kExplanationHeader, 10, [&](const std::vector<std::string>& f) {
    xrl::ExplanationRecord r;
    r.window = to_i(f[0]);
    r.agent = f[1];
    r.procedure = xrl::parse_procedure(f[2]);
    r.original = static_cast<std::size_t>(to_i(f[3]));
    r.steered = static_cast<std::size_t>(to_i(f[4]));
    r.bj_original = to_d(f[5]);
    r.bj_steered = to_d(f[6]);
    r.bk_original = to_d(f[7]);
    r.bk_steered = to_d(f[8]);
    r.sentence = f[9];
    out.push_back(std::move(r));
  });
  return out;
}

RunTraces read_traces(const std::filesystem::path& dir) {
  RunTraces t;
  t.tti = read_tti_rows(dir / kTtiFile);
  t.intra = read_intra_rows(dir / kWindowFile);
  t.inter = read_inter_rows(dir / kInterFile);
  t.explanations = read_explanations(dir / kExplanationFile);
  return t;
}

}  // namespace xslice
