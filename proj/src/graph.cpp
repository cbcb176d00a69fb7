#include "bayesroute/graph.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace bayesroute {

Network::Network(std::vector<std::string> edge_ids,
                 const std::vector<std::vector<std::string>>& routes)
    : edge_ids_(std::move(edge_ids)) {
  if (edge_ids_.empty()) throw ConfigError("network has no edges");
  for (EdgeIndex e = 0; e < edge_ids_.size(); ++e) {
    if (!index_.emplace(edge_ids_[e], e).second)
      throw ConfigError("duplicate edge id '" + edge_ids_[e] + "'");
  }
  if (routes.empty()) throw ConfigError("network has no routes");

  std::vector<bool> covered(edge_ids_.size(), false);
  routes_.reserve(routes.size());
  for (std::size_t r = 0; r < routes.size(); ++r) {
    if (routes[r].empty())
      throw ConfigError("route " + std::to_string(r) + " is empty");
    std::vector<EdgeIndex> route;
    for (const auto& id : routes[r]) {
      auto it = index_.find(id);
      if (it == index_.end())
        throw ConfigError("route " + std::to_string(r) + " uses unknown edge '" + id + "'");
      if (std::find(route.begin(), route.end(), it->second) != route.end())
        throw ConfigError("route " + std::to_string(r) + " repeats edge '" + id + "'");
      route.push_back(it->second);
      covered[it->second] = true;
    }
    if (std::find(routes_.begin(), routes_.end(), route) != routes_.end())
      throw ConfigError("route " + std::to_string(r) + " duplicates an earlier route");
    routes_.push_back(std::move(route));
  }
  for (EdgeIndex e = 0; e < edge_ids_.size(); ++e) {
    if (!covered[e]) throw ConfigError("edge '" + edge_ids_[e] + "' lies on no route");
  }

  incidence_.assign(edge_ids_.size() * routes_.size(), 0);
  for (RouteIndex r = 0; r < routes_.size(); ++r) {
    for (EdgeIndex e : routes_[r]) incidence_[e * routes_.size() + r] = 1;
  }
}

EdgeIndex Network::edge_index(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw ConfigError("unknown edge '" + id + "'");
  return it->second;
}

EdgeLoad edge_loads(const Network& network, const RouteFlow& q) {
  if (q.flows.size() != network.num_routes())
    throw std::invalid_argument("route flow has " + std::to_string(q.flows.size()) +
                                " entries, network has " +
                                std::to_string(network.num_routes()) + " routes");
  EdgeLoad w{std::vector<double>(network.num_edges(), 0.0)};
  for (RouteIndex r = 0; r < network.num_routes(); ++r) {
    for (EdgeIndex e : network.route(r)) w.loads[e] += q.flows[r];
  }
  return w;
}

std::vector<EdgeIndex> used_edges(const EdgeLoad& w, double tol) {
  std::vector<EdgeIndex> used;
  for (EdgeIndex e = 0; e < w.loads.size(); ++e) {
    if (w.loads[e] > tol) used.push_back(e);
  }
  return used;
}

RouteFlow all_or_nothing(const Network& network, RouteIndex r, double demand) {
  RouteFlow q{std::vector<double>(network.num_routes(), 0.0)};
  q.flows.at(r) = demand;
  return q;
}

namespace {

struct DisjointSets {
  explicit DisjointSets(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
  std::vector<std::size_t> parent;
};

}  // namespace

TwoTerminalGraph underlying_graph(const Network& network) {
  // Endpoint 2e is the tail of edge e, 2e+1 its head.
  const std::size_t m = network.num_edges();
  DisjointSets sets(2 * m);
  const std::size_t origin = 2 * network.route(0).front();
  const std::size_t destination = 2 * network.route(0).back() + 1;
  for (const auto& route : network.routes()) {
    sets.unite(2 * route.front(), origin);
    sets.unite(2 * route.back() + 1, destination);
    for (std::size_t i = 0; i + 1 < route.size(); ++i)
      sets.unite(2 * route[i] + 1, 2 * route[i + 1]);
  }

  std::vector<std::size_t> node_of(2 * m, SIZE_MAX);
  std::size_t next = 0;
  auto node = [&](std::size_t endpoint) {
    std::size_t root = sets.find(endpoint);
    if (node_of[root] == SIZE_MAX) node_of[root] = next++;
    return node_of[root];
  };

  TwoTerminalGraph graph;
  graph.source = node(origin);
  graph.sink = node(destination);
  for (EdgeIndex e = 0; e < m; ++e) graph.edges.emplace_back(node(2 * e), node(2 * e + 1));
  graph.num_nodes = next;
  return graph;
}

bool is_series_parallel(const TwoTerminalGraph& graph) {
  const std::size_t n = graph.num_nodes;
  if (graph.source >= n || graph.sink >= n)
    throw ConfigError("terminal outside the node range");
  if (graph.source == graph.sink) throw ConfigError("origin and destination coincide");

  // Parallel edges collapse on insertion into the neighbour sets.
  std::vector<std::set<std::size_t>> adjacent(n);
  for (auto [a, b] : graph.edges) {
    if (a >= n || b >= n) throw ConfigError("edge endpoint outside the node range");
    if (a == b) throw ConfigError("self loop at node " + std::to_string(a));
    adjacent[a].insert(b);
    adjacent[b].insert(a);
  }

  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack{graph.source};
  seen[graph.source] = true;
  while (!stack.empty()) {
    std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t u : adjacent[v]) {
      if (!seen[u]) {
        seen[u] = true;
        stack.push_back(u);
      }
    }
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    throw ConfigError("graph is not two-terminal connected");

  bool reduced = true;
  while (reduced) {
    reduced = false;
    for (std::size_t v = 0; v < n; ++v) {
      if (v == graph.source || v == graph.sink || adjacent[v].size() != 2) continue;
      std::size_t a = *adjacent[v].begin();
      std::size_t b = *adjacent[v].rbegin();
      adjacent[a].erase(v);
      adjacent[b].erase(v);
      adjacent[v].clear();
      adjacent[a].insert(b);
      adjacent[b].insert(a);
      reduced = true;
    }
  }

  for (std::size_t v = 0; v < n; ++v) {
    if (v == graph.source || v == graph.sink) {
      if (adjacent[v].size() != 1) return false;
    } else if (!adjacent[v].empty()) {
      return false;
    }
  }
  return adjacent[graph.source].count(graph.sink) == 1;
}

bool is_series_parallel(const Network& network) {
  return is_series_parallel(underlying_graph(network));
}

}  // namespace bayesroute
