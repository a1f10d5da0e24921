#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include "xslice/dqn/dqn.hpp"

namespace xslice::xrl {

enum class Procedure { none, ar1, ar2, ar3, ar4 };

std::string to_string(Procedure p);
// Accepts none|ar1|ar2|ar3|ar4 (case-insensitive); throws on anything else.
Procedure parse_procedure(const std::string& text);

// b(a): running means of the KPIs observed while action a was in force.
struct ActionAttributes {
  KpiAttributes mean;
  KpiAttributes sum;  // mean == sum / visits, recomputed on every update
  std::size_t visits = 0;
};

// Attribute indices used by the QoS procedure: j = throughput, k = delay.
// The delay attribute is the higher-is-better normalization d_max / d.
double throughput_attr(const ActionAttributes& a);
double delay_attr(const ActionAttributes& a);

class AttributedGraph {
 public:
  // Folds `kpi` into the node of `action` and counts the edge
  // prev_action -> action. Non-finite KPIs are dropped; returns false then.
  bool update(std::size_t action, const KpiAttributes& kpi,
              std::optional<std::size_t> prev_action = std::nullopt);

  bool contains(std::size_t action) const { return nodes_.count(action) != 0; }
  const ActionAttributes& node(std::size_t action) const { return nodes_.at(action); }
  const std::map<std::size_t, ActionAttributes>& nodes() const { return nodes_; }
  const std::map<std::pair<std::size_t, std::size_t>, std::size_t>& edges() const { return edges_; }
  bool empty() const { return nodes_.empty(); }

 private:
  std::map<std::size_t, ActionAttributes> nodes_;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> edges_;
};

// Graph update from a completed transition.
bool update_graph(AttributedGraph& graph, const Transition& t,
                  std::optional<std::size_t> prev_action = std::nullopt);

// AR1 max mean reward, AR2 min mean reward, AR3 max throughput if it beats
// a_t's throughput. Ties go to the lower action id. Returns a_t when it is
// not in the graph.
std::size_t steer_baseline(Procedure procedure, const AttributedGraph& graph, std::size_t a_t);

// QoS-based steering: replace a_t only when both the best-throughput node
// and the best-delay node beat a_t on their attribute; the replacement is the
// one of the two with the larger throughput + delay sum (ties to the
// throughput node).
std::size_t steer_ar4(const AttributedGraph& graph, std::size_t a_t);

struct ExplanationRecord {
  std::int64_t window = 0;
  std::string agent;
  Procedure procedure = Procedure::none;
  std::size_t original = 0;
  std::size_t steered = 0;
  // Throughput (j) and delay (k) attributes of both actions; zero when the
  // action has no node yet.
  double bj_original = 0.0;
  double bj_steered = 0.0;
  double bk_original = 0.0;
  double bk_steered = 0.0;
  std::string sentence;
  bool operator==(const ExplanationRecord&) const = default;
};

ExplanationRecord explain_action(const AttributedGraph& graph, std::size_t original,
                                 std::size_t steered, Procedure procedure);

// Applies `procedure` (identity for none) and explains the outcome.
ExplanationRecord steer(Procedure procedure, const AttributedGraph& graph, std::size_t a_t);

}  // namespace xslice::xrl
