#include "xslice/report.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "xslice/simulation.hpp"

namespace xslice {

TraceMetric parse_metric(const std::string& text) {
  if (text == "throughput") return TraceMetric::throughput;
  if (text == "delay") return TraceMetric::delay;
  if (text == "u_max") return TraceMetric::u_max;
  if (text == "u_max_norm") return TraceMetric::u_max_norm;
  if (text == "reward") return TraceMetric::reward;
  throw std::invalid_argument("unknown metric '" + text +
                              "' (expected throughput|delay|u_max|u_max_norm|reward)");
}

std::string to_string(TraceMetric m) {
  switch (m) {
    case TraceMetric::throughput: return "throughput";
    case TraceMetric::delay: return "delay";
    case TraceMetric::u_max: return "u_max";
    case TraceMetric::u_max_norm: return "u_max_norm";
    case TraceMetric::reward: return "reward";
  }
  return "throughput";
}

std::vector<double> metric_samples(const RunTraces& traces, TraceMetric metric,
                                   std::optional<SliceKind> slice) {
  std::vector<double> out;
  if (slice) {
    for (const auto& r : traces.intra) {
      if (r.slice != *slice) continue;
      switch (metric) {
        case TraceMetric::throughput: out.push_back(r.r_avg); break;
        case TraceMetric::delay:
          if (r.d_valid) out.push_back(r.d_avg);
          break;
        case TraceMetric::u_max: out.push_back(r.u_max); break;
        case TraceMetric::u_max_norm: out.push_back(r.u_max_norm); break;
        case TraceMetric::reward: out.push_back(r.reward); break;
      }
    }
    return out;
  }
  if (metric == TraceMetric::reward) {
    for (const auto& r : traces.inter) out.push_back(r.reward);
    return out;
  }
  auto s = system_series(traces.intra);
  switch (metric) {
    case TraceMetric::throughput: return s.r_avg;
    case TraceMetric::delay: return s.d_avg;
    case TraceMetric::u_max: return s.u_max_rbs;
    case TraceMetric::u_max_norm: return s.u_max_norm;
    case TraceMetric::reward: break;
  }
  return out;
}

void write_eccdf_table(std::ostream& os, const std::vector<LabeledCurve>& curves) {
  os << kEccdfHeader << '\n';
  for (const auto& c : curves) {
    if (c.label.find_first_of(",\"\n") != std::string::npos) {
      throw std::invalid_argument("eccdf label must not contain commas or quotes");
    }
    for (std::size_t i = 0; i < c.curve.values.size(); ++i) {
      os << c.label << ',' << format_double(c.curve.values[i]) << ','
         << format_double(c.curve.survival[i]) << '\n';
    }
  }
}

std::vector<LabeledCurve> read_eccdf_table(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  std::string line;
  if (!std::getline(in, line) || line != kEccdfHeader) {
    throw std::runtime_error(file.string() + ": header mismatch");
  }
  std::vector<LabeledCurve> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string label, v, s;
    if (!std::getline(ss, label, ',') || !std::getline(ss, v, ',') || !std::getline(ss, s)) {
      throw std::runtime_error(file.string() + ": malformed row '" + line + "'");
    }
    if (out.empty() || out.back().label != label) out.push_back({label, {}});
    out.back().curve.values.push_back(std::stod(v));
    out.back().curve.survival.push_back(std::stod(s));
  }
  return out;
}

}  // namespace xslice
