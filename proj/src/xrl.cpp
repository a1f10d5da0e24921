#include "xslice/xrl.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <spdlog/spdlog.h>

namespace xslice::xrl {

std::string to_string(Procedure p) {
  switch (p) {
    case Procedure::none: return "none";
    case Procedure::ar1: return "ar1";
    case Procedure::ar2: return "ar2";
    case Procedure::ar3: return "ar3";
    case Procedure::ar4: return "ar4";
  }
  return "none";
}

Procedure parse_procedure(const std::string& text) {
  std::string s = text;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "none") return Procedure::none;
  if (s == "ar1") return Procedure::ar1;
  if (s == "ar2") return Procedure::ar2;
  if (s == "ar3") return Procedure::ar3;
  if (s == "ar4") return Procedure::ar4;
  throw std::invalid_argument("unknown steering procedure '" + text + "'");
}

double throughput_attr(const ActionAttributes& a) { return a.mean.r_avg; }
double delay_attr(const ActionAttributes& a) { return a.mean.d_norm; }

bool AttributedGraph::update(std::size_t action, const KpiAttributes& kpi,
                             std::optional<std::size_t> prev_action) {
  if (!std::isfinite(kpi.r_avg) || !std::isfinite(kpi.d_norm) || !std::isfinite(kpi.u_max) ||
      !std::isfinite(kpi.reward)) {
    spdlog::warn("xrl: dropping non-finite KPI update for action {}", action);
    return false;
  }
  auto& node = nodes_[action];
  node.visits += 1;
  node.sum.r_avg += kpi.r_avg;
  node.sum.d_norm += kpi.d_norm;
  node.sum.u_max += kpi.u_max;
  node.sum.reward += kpi.reward;
  const auto n = static_cast<double>(node.visits);
  node.mean = {node.sum.r_avg / n, node.sum.d_norm / n, node.sum.u_max / n, node.sum.reward / n};
  if (prev_action && nodes_.count(*prev_action)) {
    edges_[{*prev_action, action}] += 1;
  }
  return true;
}

bool update_graph(AttributedGraph& graph, const Transition& t,
                  std::optional<std::size_t> prev_action) {
  return graph.update(t.action, t.kpi, prev_action);
}

namespace {

// First node (lowest id) maximizing `score`.
template <typename Score>
std::size_t arg_best(const AttributedGraph& graph, Score score) {
  auto it = graph.nodes().begin();
  std::size_t best = it->first;
  double best_score = score(it->second);
  for (++it; it != graph.nodes().end(); ++it) {
    const double s = score(it->second);
    if (s > best_score) {
      best_score = s;
      best = it->first;
    }
  }
  return best;
}

}  // namespace

std::size_t steer_baseline(Procedure procedure, const AttributedGraph& graph, std::size_t a_t) {
  if (graph.empty() || !graph.contains(a_t)) return a_t;
  switch (procedure) {
    case Procedure::ar1:
      return arg_best(graph, [](const ActionAttributes& a) { return a.mean.reward; });
    case Procedure::ar2:
      return arg_best(graph, [](const ActionAttributes& a) { return -a.mean.reward; });
    case Procedure::ar3: {
      const std::size_t best = arg_best(graph, throughput_attr);
      return throughput_attr(graph.node(best)) > throughput_attr(graph.node(a_t)) ? best : a_t;
    }
    default:
      throw std::invalid_argument("steer_baseline: procedure must be ar1, ar2 or ar3");
  }
}

std::size_t steer_ar4(const AttributedGraph& graph, std::size_t a_t) {
  if (graph.empty() || !graph.contains(a_t)) {
    if (!graph.empty()) spdlog::debug("xrl: action {} has no graph node; not steering", a_t);
    return a_t;
  }
  const std::size_t a_br = arg_best(graph, throughput_attr);
  const std::size_t a_d = arg_best(graph, delay_attr);
  const auto& cur = graph.node(a_t);
  const auto& br = graph.node(a_br);
  const auto& d = graph.node(a_d);
  if (throughput_attr(br) > throughput_attr(cur) && delay_attr(d) > delay_attr(cur)) {
    const double sum_br = throughput_attr(br) + delay_attr(br);
    const double sum_d = throughput_attr(d) + delay_attr(d);
    return sum_d > sum_br ? a_d : a_br;
  }
  return a_t;
}

ExplanationRecord explain_action(const AttributedGraph& graph, std::size_t original,
                                 std::size_t steered, Procedure procedure) {
  ExplanationRecord r;
  r.procedure = procedure;
  r.original = original;
  r.steered = steered;
  if (graph.contains(original)) {
    r.bj_original = throughput_attr(graph.node(original));
    r.bk_original = delay_attr(graph.node(original));
  }
  if (graph.contains(steered)) {
    r.bj_steered = throughput_attr(graph.node(steered));
    r.bk_steered = delay_attr(graph.node(steered));
  }

  std::ostringstream s;
  s.precision(4);
  s << std::fixed;
  if (procedure == Procedure::none) {
    s << "action " << original << " applied without steering";
  } else if (steered != original) {
    s << to_string(procedure) << " replaced action " << original << " with " << steered
      << ": throughput " << r.bj_original << " -> " << r.bj_steered << " (delta "
      << r.bj_steered - r.bj_original << "), delay score " << r.bk_original << " -> "
      << r.bk_steered << " (delta " << r.bk_steered - r.bk_original << ")";
  } else if (!graph.contains(original)) {
    s << to_string(procedure) << " kept action " << original
      << ": no observations for it in the graph";
  } else {
    s << to_string(procedure) << " kept action " << original
      << ": steering conditions unmet (throughput " << r.bj_original << ", delay score "
      << r.bk_original << ")";
  }
  r.sentence = s.str();
  return r;
}

ExplanationRecord steer(Procedure procedure, const AttributedGraph& graph, std::size_t a_t) {
  std::size_t out = a_t;
  switch (procedure) {
    case Procedure::none: break;
    case Procedure::ar4: out = steer_ar4(graph, a_t); break;
    default: out = steer_baseline(procedure, graph, a_t); break;
  }
  return explain_action(graph, a_t, out, procedure);
}

}  // namespace xslice::xrl
