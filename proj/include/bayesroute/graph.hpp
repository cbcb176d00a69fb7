#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace bayesroute {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using EdgeIndex = std::size_t;
using RouteIndex = std::size_t;

// Demand assigned to each route, indexed like Network::routes().
struct RouteFlow {
  std::vector<double> flows;
};

// Aggregate load on each edge, indexed like Network::edge_ids().
struct EdgeLoad {
  std::vector<double> loads;
};

// Single origin-destination network given by its explicit route set.
// Immutable once built.
class Network {
 public:
  Network(std::vector<std::string> edge_ids,
          const std::vector<std::vector<std::string>>& routes);

  std::size_t num_edges() const { return edge_ids_.size(); }
  std::size_t num_routes() const { return routes_.size(); }

  const std::vector<std::string>& edge_ids() const { return edge_ids_; }
  const std::string& edge_id(EdgeIndex e) const { return edge_ids_.at(e); }
  EdgeIndex edge_index(const std::string& id) const;

  std::span<const EdgeIndex> route(RouteIndex r) const { return routes_.at(r); }
  const std::vector<std::vector<EdgeIndex>>& routes() const { return routes_; }

  // 1 iff edge e lies on route r.
  bool incidence(EdgeIndex e, RouteIndex r) const {
    return incidence_[e * routes_.size() + r] != 0;
  }

 private:
  std::vector<std::string> edge_ids_;
  std::unordered_map<std::string, EdgeIndex> index_;
  std::vector<std::vector<EdgeIndex>> routes_;
  std::vector<unsigned char> incidence_;
};

// w = Delta q. Throws std::invalid_argument on a size mismatch.
EdgeLoad edge_loads(const Network& network, const RouteFlow& q);

// Edges carrying strictly more than `tol`, in index order.
std::vector<EdgeIndex> used_edges(const EdgeLoad& w, double tol);

// Route flows at a vertex of the feasible set: everything on route r.
RouteFlow all_or_nothing(const Network& network, RouteIndex r, double demand);

// Undirected two-terminal multigraph. Node ids are 0..num_nodes-1.
struct TwoTerminalGraph {
  std::size_t num_nodes = 0;
  std::size_t source = 0;
  std::size_t sink = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
};

// Recovers node identities from the routes: consecutive edges on a route
// share a node, every route starts at the origin and ends at the destination.
TwoTerminalGraph underlying_graph(const Network& network);

// True iff repeated series and parallel reductions leave a single
// source-sink edge. Throws ConfigError if the graph has a self loop,
// coincident terminals, or a node not connected to the terminals.
bool is_series_parallel(const TwoTerminalGraph& graph);
bool is_series_parallel(const Network& network);

}  // namespace bayesroute
