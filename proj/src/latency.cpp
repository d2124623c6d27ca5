#include "stereoloc/latency.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "stereoloc/error.hpp"

namespace stereoloc {
namespace {

struct Indexed {
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<std::size_t>> preds;
  std::vector<std::vector<std::size_t>> succs;
};

Indexed index_graph(const TaskGraph& g) {
  Indexed ix;
  for (std::size_t i = 0; i < g.stages.size(); ++i) {
    const Stage& s = g.stages[i];
    if (s.name.empty() || s.name == "edge") throw Error(ErrorCode::kGraph, "invalid stage name '" + s.name + "'");
    if (!(s.latency_ms > 0)) throw Error(ErrorCode::kGraph, "stage '" + s.name + "' needs a positive latency");
    if (!ix.index.emplace(s.name, i).second) throw Error(ErrorCode::kGraph, "duplicate stage '" + s.name + "'");
  }
  ix.preds.resize(g.stages.size());
  ix.succs.resize(g.stages.size());
  for (const auto& [from, to] : g.edges) {
    auto a = ix.index.find(from);
    auto b = ix.index.find(to);
    if (a == ix.index.end() || b == ix.index.end()) {
      throw Error(ErrorCode::kGraph, "edge " + from + " -> " + to + " names an unknown stage");
    }
    ix.preds[b->second].push_back(a->second);
    ix.succs[a->second].push_back(b->second);
  }
  return ix;
}

// Kahn's algorithm, visiting ready stages in name order.
std::vector<std::size_t> topological_order(const TaskGraph& g, const Indexed& ix) {
  std::vector<std::size_t> indegree(g.stages.size());
  for (std::size_t i = 0; i < g.stages.size(); ++i) indegree[i] = ix.preds[i].size();
  auto by_name = [&](std::size_t a, std::size_t b) { return g.stages[a].name < g.stages[b].name; };
  std::set<std::size_t, decltype(by_name)> ready(by_name);
  for (std::size_t i = 0; i < indegree.size(); ++i)
    if (indegree[i] == 0) ready.insert(i);
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    const std::size_t v = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(v);
    for (std::size_t w : ix.succs[v])
      if (--indegree[w] == 0) ready.insert(w);
  }
  if (order.size() != g.stages.size()) throw Error(ErrorCode::kGraph, "task graph has a cycle");
  return order;
}

}  // namespace

void TaskGraph::validate() const {
  const Indexed ix = index_graph(*this);
  topological_order(*this, ix);
}

LatencyResult perception_latency(const TaskGraph& g) {
  const Indexed ix = index_graph(g);
  const auto order = topological_order(g, ix);
  if (order.empty()) return {};

  const std::size_t none = g.stages.size();
  std::vector<double> finish(g.stages.size(), 0.0);
  std::vector<std::size_t> via(g.stages.size(), none);
  auto better = [&](std::size_t cand, std::size_t cur) {
    if (cur == none) return true;
    if (finish[cand] != finish[cur]) return finish[cand] > finish[cur];
    return g.stages[cand].name < g.stages[cur].name;
  };
  for (std::size_t v : order) {
    for (std::size_t u : ix.preds[v])
      if (better(u, via[v])) via[v] = u;
    finish[v] = g.stages[v].latency_ms + (via[v] == none ? 0.0 : finish[via[v]]);
  }

  std::size_t end = none;
  for (std::size_t v = 0; v < g.stages.size(); ++v)
    if (better(v, end)) end = v;

  LatencyResult r;
  r.latency_ms = finish[end];
  for (std::size_t v = end; v != none; v = via[v]) r.critical_path.push_back(g.stages[v].name);
  std::reverse(r.critical_path.begin(), r.critical_path.end());
  return r;
}

double improvement_factor(const LatencyResult& baseline, const LatencyResult& improved) {
  if (!(improved.latency_ms > 0)) throw Error(ErrorCode::kInvalidInput, "improved latency must be positive");
  return baseline.latency_ms / improved.latency_ms;
}

TaskGraph parse_task_graph(std::istream& in) {
  TaskGraph g;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::string first;
    if (!(ss >> first)) continue;
    std::string extra;
    if (first == "edge") {
      std::string a, b;
      if (!(ss >> a >> b) || (ss >> extra)) {
        throw Error(ErrorCode::kParse, "line " + std::to_string(lineno) + ": expected 'edge <from> <to>'");
      }
      g.edges.emplace_back(a, b);
    } else {
      Stage s;
      s.name = first;
      if (!(ss >> s.latency_ms >> s.processor) || (ss >> extra)) {
        throw Error(ErrorCode::kParse,
                    "line " + std::to_string(lineno) + ": expected '<stage> <latency_ms> <processor>'");
      }
      g.stages.push_back(s);
    }
  }
  g.validate();
  return g;
}

TaskGraph load_task_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return parse_task_graph(in);
}

}  // namespace stereoloc
