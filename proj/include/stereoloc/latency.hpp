#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace stereoloc {

struct Stage {
  std::string name;
  double latency_ms = 0;
  std::string processor;
};

/// Pipeline stages with given per-mapping latencies. Stages without a path
/// between them run in parallel; an edge a -> b serializes b after a.
struct TaskGraph {
  std::vector<Stage> stages;
  std::vector<std::pair<std::string, std::string>> edges;

  /// Throws Error(kGraph) on duplicate or unknown names, non-positive latency, or a cycle.
  void validate() const;
};

struct LatencyResult {
  double latency_ms = 0;
  std::vector<std::string> critical_path;  // source to sink
};

/// Longest path through the graph. Ties between equally long paths resolve
/// to the lexicographically smallest stage name, so the answer does not depend
/// on declaration order.
LatencyResult perception_latency(const TaskGraph& graph);

/// baseline / improved.
double improvement_factor(const LatencyResult& baseline, const LatencyResult& improved);

// Text form, one item per line, `#` comments:
//   <stage-name> <latency_ms> <processor>
//   edge <from> <to>
TaskGraph parse_task_graph(std::istream& in);
TaskGraph load_task_graph(const std::filesystem::path& path);

}  // namespace stereoloc
