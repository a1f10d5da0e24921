#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "xslice/metrics.hpp"
#include "xslice/trace.hpp"

namespace xslice {

enum class TraceMetric { throughput, delay, u_max, u_max_norm, reward };

// throughput|delay|u_max|u_max_norm|reward; throws std::invalid_argument.
TraceMetric parse_metric(const std::string& text);
std::string to_string(TraceMetric m);

// Per-window samples of `metric`. With a slice: that slice's intra rows
// (delay only where a delay sample exists). Without: the per-window system
// values (slice means; u_max is the slice sum), and for reward the inter
// agent's rewards.
std::vector<double> metric_samples(const RunTraces& traces, TraceMetric metric,
                                   std::optional<SliceKind> slice);

struct LabeledCurve {
  std::string label;
  EccdfCurve curve;
};

inline constexpr const char* kEccdfHeader = "label,value,survival";

void write_eccdf_table(std::ostream& os, const std::vector<LabeledCurve>& curves);
std::vector<LabeledCurve> read_eccdf_table(const std::filesystem::path& file);

}  // namespace xslice
