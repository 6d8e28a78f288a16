#pragma once

#include <vector>

#include "qcsp/types.hpp"

namespace qcsp {

// Scheduling subproblem: the routing fixes same-crane processing order and
// cross-crane precedence order; every remaining cross-crane conflict (shared
// bay, explicit non-simultaneity, or a positive interference gap) is a
// two-way disjunction. Minimizing the makespan is a longest-path problem
// once every disjunction is oriented.

struct DGArc {
    int from = 0, to = 0;
    Time w = 0;
};

// Unordered conflicting pair; exactly one orientation must hold.
// i -> j carries weight wij (p_j plus the interference gap), j -> i wji.
struct Disjunction {
    int i = 0, j = 0;
    Time wij = 0, wji = 0;
};

// Node ids: 1..n tasks, n+k = crane k's source, n+q+k = crane k's sink.
struct DisjunctiveGraph {
    int n = 0, q = 0;
    std::vector<DGArc> fixed;
    std::vector<Disjunction> disjunctions;

    int node_count() const { return n + 2 * q; }
    int sigma(int k) const { return n + k; }
    int tau(int k) const { return n + q + k; }
};

// Order decisions implied by a routing: same-crane pairs follow the route
// order; cross-crane precedence pairs are forced; every other conflicting
// cross-crane pair stays open.
struct ZFixing {
    std::vector<std::pair<int, int>> fixed;      // ordered: first completes before second starts
    std::vector<std::pair<int, int>> free_pairs; // unordered, stored i < j
};

ZFixing fix_z_from_routing(const Instance& inst, const Routing& r);

// Throws Error when the routing is structurally broken or its combined
// order digraph is cyclic (caller bug: such a routing admits no schedule).
DisjunctiveGraph build_graph(const Instance& inst, const Routing& r);

// orientation[d]: +1 = i->j, -1 = j->i, 0 = undecided (arc omitted).
struct LongestPaths {
    bool acyclic = true;
    std::vector<int> cycle_nodes; // nonempty iff !acyclic: nodes on directed cycles
    std::vector<Time> dist;       // per node, 1-based; completion-anchored
    std::vector<int> topo_pos;    // per node: rank in one topological order (acyclic only)
    std::vector<Time> D;          // task completions, size n+1
    std::vector<Time> C;          // crane completions, size q+1
    Time W = 0;
};

LongestPaths longest_paths(const DisjunctiveGraph& g, const std::vector<int>& orientation);

struct SlaveSolution {
    std::vector<Time> D; // size n+1
    std::vector<Time> C; // size q+1
    Time W = 0;
    std::vector<int> orientation; // per disjunction, +1 / -1
    bool exact = true;            // false only when node_limit stopped the search
    long long nodes = 0;
};

// Exact minimum-makespan orientation via depth-first branch and bound:
// branch on an undecided disjunction on the current critical path, bound by
// the partial longest path, incumbent seeded by orienting everything along a
// topological order of the forced arcs (always feasible). `ub` only prunes:
// when every schedule of this routing reaches ub or more, the returned W may
// be any value >= ub (still a real schedule; never a failure). A
// non-negative node_limit caps the search and may return a non-optimal but
// always-feasible solution with exact = false.
SlaveSolution solve_slave(const DisjunctiveGraph& g, Time ub = kInfTime,
                          long long node_limit = -1);

// Completion times as a checkable schedule.
Schedule to_schedule(const Instance& inst, const SlaveSolution& s);

} // namespace qcsp
