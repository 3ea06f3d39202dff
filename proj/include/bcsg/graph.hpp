#pragma once

#include <algorithm>
#include <cstddef>
#include <set>
#include <vector>

namespace bcsg {

/// Strongly connected components (iterative Tarjan). Components come out in
/// reverse topological order: every edge leaving a component points into an
/// earlier one, so bottom components appear first.
inline std::vector<std::vector<std::size_t>> strongly_connected_components(
    const std::vector<std::set<std::size_t>>& adj) {
  const std::size_t n = adj.size();
  const std::size_t unvisited = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, unvisited), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> out;
  std::size_t counter = 0;

  struct Frame {
    std::size_t v;
    std::set<std::size_t>::const_iterator next;
  };
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != unvisited) continue;
    std::vector<Frame> call{{root, adj[root].begin()}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      Frame& f = call.back();
      if (f.next != adj[f.v].end()) {
        std::size_t w = *f.next++;
        if (index[w] == unvisited) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.push_back({w, adj[w].begin()});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
        continue;
      }
      std::size_t v = f.v;
      call.pop_back();
      if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
      if (low[v] == index[v]) {
        std::vector<std::size_t> comp;
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp.push_back(w);
        } while (w != v);
        std::sort(comp.begin(), comp.end());
        out.push_back(std::move(comp));
      }
    }
  }
  return out;
}

/// Components with no edge leaving them.
inline std::vector<std::vector<std::size_t>> bottom_components(const std::vector<std::set<std::size_t>>& adj) {
  auto comps = strongly_connected_components(adj);
  std::vector<std::size_t> comp_of(adj.size());
  for (std::size_t c = 0; c < comps.size(); ++c)
    for (auto v : comps[c]) comp_of[v] = c;
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    bool bottom = true;
    for (auto v : comps[c])
      for (auto w : adj[v])
        if (comp_of[w] != c) bottom = false;
    if (bottom) out.push_back(comps[c]);
  }
  return out;
}

}  // namespace bcsg
