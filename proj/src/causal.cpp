#include "bda/causal.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <deque>
#include <map>

#include "bda/error.hpp"

namespace bda {

namespace {

std::string trimmed(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::vector<std::vector<std::size_t>> adjacency(const std::vector<std::string>& nodes,
                                                const std::vector<Edge>& edges) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < nodes.size(); ++i) index[nodes[i]] = i;
  std::vector<std::vector<std::size_t>> out(nodes.size());
  for (const auto& [from, to] : edges) {
    auto f = index.find(from);
    auto t = index.find(to);
    if (f == index.end() || t == index.end())
      fail(ErrorKind::spec, "edge " + from + "->" + to + " references an unknown node");
    out[f->second].push_back(t->second);
  }
  return out;
}

}  // namespace

Edge parse_edge(std::string_view text) {
  auto pos = text.find("->");
  if (pos == std::string_view::npos) fail(ErrorKind::parse, "edge '" + std::string(text) + "' lacks '->'");
  Edge e{trimmed(text.substr(0, pos)), trimmed(text.substr(pos + 2))};
  if (e.first.empty() || e.second.empty()) fail(ErrorKind::parse, "edge '" + std::string(text) + "' has an empty endpoint");
  return e;
}

bool is_acyclic(const std::vector<std::string>& nodes, const std::vector<Edge>& edges) {
  auto children = adjacency(nodes, edges);
  std::vector<std::size_t> indegree(nodes.size(), 0);
  for (const auto& ch : children)
    for (auto c : ch) ++indegree[c];
  std::deque<std::size_t> ready;
  for (std::size_t v = 0; v < nodes.size(); ++v)
    if (indegree[v] == 0) ready.push_back(v);
  std::size_t visited = 0;
  while (!ready.empty()) {
    auto v = ready.front();
    ready.pop_front();
    ++visited;
    for (auto c : children[v])
      if (--indegree[c] == 0) ready.push_back(c);
  }
  return visited == nodes.size();
}

Dag::Dag(std::vector<std::string> nodes, std::vector<Edge> edges) : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  {
    auto sorted = nodes_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) fail(ErrorKind::spec, "duplicate DAG node");
  }
  for (const auto& [from, to] : edges_)
    if (from == to) fail(ErrorKind::spec, "self-loop on '" + from + "'");
  if (!is_acyclic(nodes_, edges_)) fail(ErrorKind::spec, "graph contains a directed cycle");
  children_ = adjacency(nodes_, edges_);
  parents_.assign(nodes_.size(), {});
  for (std::size_t v = 0; v < nodes_.size(); ++v)
    for (auto c : children_[v]) parents_[c].push_back(v);
}

Dag Dag::from_edges(const std::vector<std::string>& edge_texts) {
  std::vector<std::string> nodes;
  std::vector<Edge> edges;
  auto add = [&](const std::string& n) {
    if (std::find(nodes.begin(), nodes.end(), n) == nodes.end()) nodes.push_back(n);
  };
  for (const auto& t : edge_texts) {
    auto e = parse_edge(t);
    add(e.first);
    add(e.second);
    edges.push_back(std::move(e));
  }
  return Dag(std::move(nodes), std::move(edges));
}

bool Dag::contains(std::string_view node) const {
  return std::find(nodes_.begin(), nodes_.end(), node) != nodes_.end();
}

std::size_t Dag::index_of(std::string_view node) const {
  auto it = std::find(nodes_.begin(), nodes_.end(), node);
  if (it == nodes_.end()) fail(ErrorKind::spec, "unknown DAG node '" + std::string(node) + "'");
  return static_cast<std::size_t>(it - nodes_.begin());
}

namespace {

std::vector<bool> reach(const Dag& dag, std::size_t start, bool downward) {
  std::vector<bool> seen(dag.nodes().size(), false);
  std::vector<std::size_t> stack{start};
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    for (auto w : downward ? dag.children(v) : dag.parents(v))
      if (!seen[w]) {
        seen[w] = true;
        stack.push_back(w);
      }
  }
  return seen;
}

std::set<std::string> to_names(const Dag& dag, const std::vector<bool>& mask) {
  std::set<std::string> out;
  for (std::size_t v = 0; v < mask.size(); ++v)
    if (mask[v]) out.insert(dag.nodes()[v]);
  return out;
}

}  // namespace

std::set<std::string> Dag::descendants(std::string_view node) const {
  return to_names(*this, reach(*this, index_of(node), true));
}

std::set<std::string> Dag::ancestors(std::string_view node) const {
  return to_names(*this, reach(*this, index_of(node), false));
}

std::vector<std::string> Dag::roots() const {
  std::vector<std::string> out;
  for (std::size_t v = 0; v < nodes_.size(); ++v)
    if (parents_[v].empty()) out.push_back(nodes_[v]);
  return out;
}

bool d_separated(const Dag& dag, std::string_view x, std::string_view y, const std::set<std::string>& z) {
  const std::size_t n = dag.nodes().size();
  const std::size_t xs = dag.index_of(x);
  const std::size_t ys = dag.index_of(y);
  std::vector<bool> observed(n, false);
  for (const auto& name : z) observed[dag.index_of(name)] = true;
  if (observed[xs] || observed[ys]) fail(ErrorKind::spec, "d-separation query conditions on an endpoint");
  if (xs == ys) return false;

  // Nodes that are in z or have a descendant in z: colliders there are open.
  std::vector<bool> opens_collider(n, false);
  for (std::size_t v = 0; v < n; ++v) {
    if (!observed[v]) continue;
    opens_collider[v] = true;
    auto anc = reach(dag, v, false);
    for (std::size_t a = 0; a < n; ++a)
      if (anc[a]) opens_collider[a] = true;
  }

  // Reachability over (node, direction) states: `up` means we arrived from a
  // child, `down` means we arrived from a parent.
  enum Dir { up = 0, down = 1 };
  std::vector<std::array<bool, 2>> visited(n, {false, false});
  std::vector<std::pair<std::size_t, Dir>> stack{{xs, up}};
  while (!stack.empty()) {
    auto [v, dir] = stack.back();
    stack.pop_back();
    if (visited[v][dir]) continue;
    visited[v][dir] = true;
    if (v == ys) return false;
    if (dir == up) {
      if (observed[v]) continue;
      for (auto p : dag.parents(v)) stack.emplace_back(p, up);
      for (auto c : dag.children(v)) stack.emplace_back(c, down);
    } else {
      if (!observed[v])
        for (auto c : dag.children(v)) stack.emplace_back(c, down);
      if (opens_collider[v])
        for (auto p : dag.parents(v)) stack.emplace_back(p, up);
    }
  }
  return true;
}

std::set<std::string> mediators(const Dag& dag, const std::set<std::string>& sources, std::string_view outcome) {
  const std::size_t out_idx = dag.index_of(outcome);
  if (sources.count(std::string(outcome))) fail(ErrorKind::spec, "outcome is listed among the sources");
  std::vector<bool> from_sources(dag.nodes().size(), false);
  for (const auto& s : sources) {
    auto d = reach(dag, dag.index_of(s), true);
    for (std::size_t v = 0; v < d.size(); ++v)
      if (d[v]) from_sources[v] = true;
  }
  auto to_outcome = reach(dag, out_idx, false);
  std::set<std::string> out;
  for (std::size_t v = 0; v < dag.nodes().size(); ++v) {
    const auto& name = dag.nodes()[v];
    if (v == out_idx || sources.count(name)) continue;
    if (from_sources[v] && to_outcome[v]) out.insert(name);
  }
  return out;
}

}  // namespace bda
