#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bda {

using Edge = std::pair<std::string, std::string>;

/// Parses "From->To" (whitespace around names is ignored).
Edge parse_edge(std::string_view text);

/// True iff the directed graph has no cycle. Throws ErrorKind::spec when an
/// edge names a node outside `nodes`.
bool is_acyclic(const std::vector<std::string>& nodes, const std::vector<Edge>& edges);

/// Directed acyclic graph over variable names; acyclicity is checked on construction.
class Dag {
 public:
  Dag(std::vector<std::string> nodes, std::vector<Edge> edges);
  /// Nodes are taken from the edges in first-appearance order.
  static Dag from_edges(const std::vector<std::string>& edge_texts);

  const std::vector<std::string>& nodes() const noexcept { return nodes_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  bool contains(std::string_view node) const;
  std::size_t index_of(std::string_view node) const;

  const std::vector<std::size_t>& parents(std::size_t v) const { return parents_[v]; }
  const std::vector<std::size_t>& children(std::size_t v) const { return children_[v]; }

  std::set<std::string> descendants(std::string_view node) const;  // excludes node
  std::set<std::string> ancestors(std::string_view node) const;    // excludes node
  std::vector<std::string> roots() const;

 private:
  std::vector<std::string> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::vector<std::size_t>> children_;
};

/// d-separation of x and y given z.
bool d_separated(const Dag& dag, std::string_view x, std::string_view y, const std::set<std::string>& z);

/// Nodes other than the sources and the outcome that lie on a directed path
/// from some source to the outcome.
std::set<std::string> mediators(const Dag& dag, const std::set<std::string>& sources, std::string_view outcome);

}  // namespace bda
