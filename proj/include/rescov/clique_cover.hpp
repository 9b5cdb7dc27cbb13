#pragma once

// Distributed non-overlapping clique cover over a geometric communication
// graph, simulated as lockstep message passing: three communication rounds
// (discover, share closed neighborhoods, share chosen clique) around one local
// computation round. Nodes only ever read their own inbox.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rescov/error.hpp"
#include "rescov/geometry.hpp"

namespace rescov {

using NodeId = int;
using IdSet = std::vector<NodeId>;  // sorted, unique

class CommGraph {
 public:
  CommGraph(std::vector<NodeId> ids, std::vector<Vec2> positions, double comm_range)
      : ids_(std::move(ids)), positions_(std::move(positions)), range_(comm_range) {
    if (ids_.size() != positions_.size()) throw Error(Errc::kSizeMismatch, "ids and positions differ");
    if (!(range_ > 0.0)) throw Error(Errc::kInvalidArgument, "communication range must be positive");
    std::set<NodeId> unique(ids_.begin(), ids_.end());
    if (unique.size() != ids_.size()) throw Error(Errc::kInvalidArgument, "duplicate node id");
    const std::size_t n = ids_.size();
    adjacent_.assign(n * n, 0);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        if (distance(positions_[a], positions_[b]) <= range_) {
          adjacent_[a * n + b] = adjacent_[b * n + a] = 1;
        }
      }
    }
  }

  /// Nodes with consecutive ids 0..n-1.
  CommGraph(const std::vector<Vec2>& positions, double comm_range)
      : CommGraph(sequential_ids(positions.size()), positions, comm_range) {}

  std::size_t size() const { return ids_.size(); }
  NodeId id(std::size_t k) const { return ids_[k]; }
  Vec2 position(std::size_t k) const { return positions_[k]; }
  double comm_range() const { return range_; }
  bool adjacent(std::size_t a, std::size_t b) const { return adjacent_[a * ids_.size() + b] != 0; }

  std::size_t edge_count() const {
    std::size_t e = 0;
    for (char c : adjacent_) e += c;
    return e / 2;
  }

 private:
  static std::vector<NodeId> sequential_ids(std::size_t n) {
    std::vector<NodeId> v(n);
    for (std::size_t k = 0; k < n; ++k) v[k] = static_cast<NodeId>(k);
    return v;
  }

  std::vector<NodeId> ids_;
  std::vector<Vec2> positions_;
  double range_;
  std::vector<char> adjacent_;
};

/// A closed neighborhood received from (or owned by) `owner`.
struct NeighborSet {
  NodeId owner = 0;
  IdSet members;
};

struct NodeState {
  NodeId id = 0;
  IdSet neighbors;                     // N_i
  IdSet closed;                        // N_i^+ = {i} u N_i
  std::vector<NeighborSet> superset;   // own closed set first, then neighbors' by id
  std::vector<IdSet> maximal_cliques;  // C^{i*}
  IdSet unique_clique;                 // C^{iu}
  std::map<NodeId, IdSet> neighbor_choices;
};

struct MessageStats {
  std::size_t beacons = 0;
  std::size_t neighborhood_messages = 0;
  std::size_t clique_messages = 0;
};

/// Radio model: broadcasts reach every node within range; unicasts are only
/// legal along edges. Inboxes are indexed by node slot.
template <class Payload>
class MessageBus {
 public:
  explicit MessageBus(const CommGraph& graph) : graph_(graph), inbox_(graph.size()) {}

  void send(std::size_t from, std::size_t to, Payload payload) {
    if (from == to || !graph_.adjacent(from, to)) {
      throw Error(Errc::kInvalidArgument, "message sent along a non-edge");
    }
    inbox_[to].push_back({graph_.id(from), std::move(payload)});
    ++sent_;
  }

  void broadcast(std::size_t from, const Payload& payload) {
    for (std::size_t to = 0; to < graph_.size(); ++to) {
      if (to != from && graph_.adjacent(from, to)) send(from, to, payload);
    }
  }

  const std::vector<std::pair<NodeId, Payload>>& inbox(std::size_t node) const { return inbox_[node]; }
  std::size_t sent() const { return sent_; }

 private:
  const CommGraph& graph_;
  std::vector<std::vector<std::pair<NodeId, Payload>>> inbox_;
  std::size_t sent_ = 0;
};

/// Round 1: each node learns its neighbors from beacons heard within range.
inline std::vector<NodeState> round1_discover(const CommGraph& graph, MessageStats* stats = nullptr) {
  MessageBus<NodeId> bus(graph);
  for (std::size_t k = 0; k < graph.size(); ++k) bus.broadcast(k, graph.id(k));
  std::vector<NodeState> states(graph.size());
  for (std::size_t k = 0; k < graph.size(); ++k) {
    NodeState& s = states[k];
    s.id = graph.id(k);
    for (const auto& [from, beacon] : bus.inbox(k)) s.neighbors.push_back(beacon);
    std::sort(s.neighbors.begin(), s.neighbors.end());
    s.closed = s.neighbors;
    s.closed.insert(std::lower_bound(s.closed.begin(), s.closed.end(), s.id), s.id);
  }
  if (stats) stats->beacons += bus.sent();
  return states;
}

/// Round 2: each node sends N_i^+ to every neighbor and stores what it receives.
inline void round2_exchange(const CommGraph& graph, std::vector<NodeState>& states,
                            MessageStats* stats = nullptr) {
  MessageBus<IdSet> bus(graph);
  for (std::size_t k = 0; k < graph.size(); ++k) {
    for (std::size_t j = 0; j < graph.size(); ++j) {
      if (j != k && graph.adjacent(k, j)) bus.send(k, j, states[k].closed);
    }
  }
  for (std::size_t k = 0; k < graph.size(); ++k) {
    NodeState& s = states[k];
    s.superset = {{s.id, s.closed}};
    std::vector<NeighborSet> received;
    for (const auto& [from, set] : bus.inbox(k)) received.push_back({from, set});
    std::sort(received.begin(), received.end(),
              [](const NeighborSet& a, const NeighborSet& b) { return a.owner < b.owner; });
    s.superset.insert(s.superset.end(), received.begin(), received.end());
  }
  if (stats) stats->neighborhood_messages += bus.sent();
}

namespace detail {

class Bits {
 public:
  explicit Bits(std::size_t n = 0) : words_((n + 63) / 64, 0) {}
  void set(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
  bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1U; }
  std::size_t count() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }
  Bits operator&(const Bits& o) const {
    Bits r = *this;
    for (std::size_t k = 0; k < words_.size(); ++k) r.words_[k] &= o.words_[k];
    return r;
  }
  std::size_t size_bits() const { return words_.size() * 64; }

 private:
  std::vector<std::uint64_t> words_;
};

inline bool contains(const IdSet& s, NodeId v) { return std::binary_search(s.begin(), s.end(), v); }

}  // namespace detail

struct CliqueOptions {
  std::size_t degree_cap = 20;
};

/// Computation round, first half: intersect m of the received sets for m from
/// |superset| down to 2 and keep intersections of exactly m members; the first
/// non-empty level wins. An intersection is kept only if the node can verify
/// it is a clique through itself (every member is in N_i^+ and every pair is
/// adjacent according to the received sets). Falls back to {{self}}.
inline std::vector<IdSet> compute_maximal_cliques(std::span<const NeighborSet> superset, NodeId self,
                                                  const CliqueOptions& options = {}) {
  if (superset.empty()) throw Error(Errc::kInvalidArgument, "superset must hold the node's own set");
  const IdSet& own = superset.front().members;
  if (own.size() > options.degree_cap + 1) {
    throw Error(Errc::kDegreeTooHigh, "node " + std::to_string(self) + " has degree " +
                                          std::to_string(own.size() - 1));
  }
  std::map<NodeId, const IdSet*> closed_of;
  for (const auto& ns : superset) closed_of[ns.owner] = &ns.members;

  IdSet universe;
  for (const auto& ns : superset) universe.insert(universe.end(), ns.members.begin(), ns.members.end());
  std::sort(universe.begin(), universe.end());
  universe.erase(std::unique(universe.begin(), universe.end()), universe.end());
  auto slot = [&](NodeId v) {
    return static_cast<std::size_t>(std::lower_bound(universe.begin(), universe.end(), v) - universe.begin());
  };
  std::vector<detail::Bits> sets;
  for (const auto& ns : superset) {
    detail::Bits b(universe.size());
    for (NodeId v : ns.members) b.set(slot(v));
    sets.push_back(std::move(b));
  }

  auto verified_clique = [&](const IdSet& members) {
    for (NodeId u : members) {
      if (!detail::contains(own, u)) return false;
      auto it = closed_of.find(u);
      if (it == closed_of.end()) return false;
      for (NodeId v : members) {
        if (!detail::contains(*it->second, v)) return false;
      }
    }
    return true;
  };

  const std::size_t total = sets.size();
  for (std::size_t m = total; m >= 2; --m) {
    std::set<IdSet> level;
    // Depth-first over m-combinations with the running intersection; prune once
    // it drops below m members since further intersections only shrink it.
    std::vector<std::size_t> stack;
    auto recurse = [&](auto&& self_ref, std::size_t start, const detail::Bits& acc) -> void {
      if (acc.count() < m) return;
      if (stack.size() == m) {
        if (acc.count() != m) return;
        IdSet members;
        for (std::size_t k = 0; k < universe.size(); ++k) {
          if (acc.test(k)) members.push_back(universe[k]);
        }
        if (verified_clique(members)) level.insert(std::move(members));
        return;
      }
      for (std::size_t q = start; q + (m - stack.size()) <= total; ++q) {
        stack.push_back(q);
        self_ref(self_ref, q + 1, stack.size() == 1 ? sets[q] : acc & sets[q]);
        stack.pop_back();
      }
    };
    detail::Bits full(universe.size());
    for (std::size_t k = 0; k < universe.size(); ++k) full.set(k);
    recurse(recurse, 0, full);
    if (!level.empty()) return {level.begin(), level.end()};
  }
  return {IdSet{self}};
}

/// Neighbors of a set of robots: the union of members' neighbors, minus the set.
inline std::size_t clique_neighbor_count(const IdSet& clique, std::span<const NeighborSet> superset) {
  std::set<NodeId> outside;
  for (const auto& ns : superset) {
    if (!detail::contains(clique, ns.owner)) continue;
    for (NodeId v : ns.members) {
      if (!detail::contains(clique, v)) outside.insert(v);
    }
  }
  return outside.size();
}

/// Computation round, second half: the candidate with the fewest neighbors,
/// ties to the lexicographically smallest member list.
inline IdSet choose_unique_clique(std::span<const IdSet> cliques, std::span<const NeighborSet> superset) {
  if (cliques.empty()) throw Error(Errc::kInvalidArgument, "no candidate cliques");
  if (cliques.size() == 1) return cliques.front();
  std::vector<IdSet> sorted(cliques.begin(), cliques.end());
  std::sort(sorted.begin(), sorted.end());
  const IdSet* best = nullptr;
  std::size_t best_count = 0;
  for (const IdSet& c : sorted) {
    std::size_t count = clique_neighbor_count(c, superset);
    if (!best || count < best_count) {
      best = &c;
      best_count = count;
    }
  }
  return *best;
}

/// Round 3: each node shares its chosen clique with its neighbors.
inline void round3_share(const CommGraph& graph, std::vector<NodeState>& states,
                         MessageStats* stats = nullptr) {
  MessageBus<IdSet> bus(graph);
  for (std::size_t k = 0; k < graph.size(); ++k) bus.broadcast(k, states[k].unique_clique);
  for (std::size_t k = 0; k < graph.size(); ++k) {
    states[k].neighbor_choices.clear();
    for (const auto& [from, clique] : bus.inbox(k)) states[k].neighbor_choices[from] = clique;
  }
  if (stats) stats->clique_messages += bus.sent();
}

/// A node keeps its chosen clique only if every other member chose the same
/// one; otherwise it stands alone.
inline IdSet resolve_membership(const NodeState& s) {
  for (NodeId v : s.unique_clique) {
    if (v == s.id) continue;
    auto it = s.neighbor_choices.find(v);
    if (it == s.neighbor_choices.end() || it->second != s.unique_clique) return {s.id};
  }
  return s.unique_clique;
}

struct CliqueCover {
  std::vector<IdSet> blocks;  // sorted, pairwise disjoint, covering every node
  std::vector<NodeState> nodes;
  MessageStats messages;
};

inline CliqueCover distributed_clique_cover(const CommGraph& graph, const CliqueOptions& options = {}) {
  CliqueCover out;
  out.nodes = round1_discover(graph, &out.messages);
  round2_exchange(graph, out.nodes, &out.messages);
  for (NodeState& s : out.nodes) {
    s.maximal_cliques = compute_maximal_cliques(s.superset, s.id, options);
    s.unique_clique = choose_unique_clique(s.maximal_cliques, s.superset);
  }
  round3_share(graph, out.nodes, &out.messages);
  std::set<IdSet> blocks;
  for (const NodeState& s : out.nodes) blocks.insert(resolve_membership(s));
  out.blocks.assign(blocks.begin(), blocks.end());
  return out;
}

inline CliqueCover distributed_clique_cover(std::span<const Vec2> positions, double comm_range,
                                            const CliqueOptions& options = {}) {
  CommGraph graph(std::vector<Vec2>(positions.begin(), positions.end()), comm_range);
  return distributed_clique_cover(graph, options);
}

inline nlohmann::json blocks_json(const std::vector<IdSet>& blocks) {
  nlohmann::json j = nlohmann::json::array();
  for (const IdSet& b : blocks) j.push_back(b);
  return j;
}

}  // namespace rescov
