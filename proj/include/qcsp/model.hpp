#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "qcsp/types.hpp"

namespace qcsp {

// --- derived quantities -----------------------------------------------------

// Travel time between two bays: t * |b1 - b2|.
Time travel_time(const Instance& inst, int bay1, int bay2);

// Travel time between route nodes for crane k: node 0 is the crane's start
// position, node n+1 its final position, other nodes are task ids. Travel to
// a free final position (final_bay == 0) is 0.
Time travel(const Instance& inst, int node_i, int node_j, int k);

// Minimum temporal separation required between tasks i and j when crane v
// does i and crane w does j (v != w). Positive only when the crane order on
// the rail contradicts the bay order by more than the safety margin allows:
// the later of the two tasks must then start at least delta(i,j,v,w) after
// the other completes. Symmetric in the pair sense:
// delta(i,j,v,w) == delta(j,i,w,v).
Time delta(const Instance& inst, int i, int j, int v, int w);

// All (i, j, v, w) with i < j, v != w and delta > 0 — the pairs whose
// simultaneous processing the rail geometry restricts beyond plain
// non-crossing.
struct ThetaEntry {
    int i, j, v, w;
    Time gap;
};
std::vector<ThetaEntry> theta(const Instance& inst);

// Admissible bay interval [lo, hi] for crane k under the non-crossing
// pigeonhole argument: k-1 cranes must fit to its left, q-k to its right,
// each taking delta+1 bays. Throws Error when the interval is empty
// (instance cannot host q cranes in B bays).
std::pair<int, int> crane_limits(const Instance& inst, int k);
std::pair<int, int> crane_limits(int bays, int q, int safety, int k);

// Bay interval crane k may serve: crane_limits when enforce_limits, else the
// whole vessel [1, B].
std::pair<int, int> operating_range(const Instance& inst, int k, bool enforce_limits);

// Makespan lower bound from forced serialization: tasks whose bays all lie
// within one safety window can never overlap in time (same crane: sequential;
// different cranes: the non-crossing separation is positive), so each window
// needs at least its total processing time after the cheapest approach to it.
Time serial_lower_bound(const Instance& inst, bool enforce_limits);

// --- precedence helpers ------------------------------------------------------

enum class TaskKind { UNLOAD_DECK, UNLOAD_HOLD, LOAD_HOLD, LOAD_DECK };

// Operational precedence inside one bay: unloading precedes loading,
// deck is unloaded before the hold below it, and the hold is loaded before
// the deck above it. Cross-bay pairs are never related. Pairs returned
// sorted, duplicate-free.
std::vector<std::pair<int, int>> derive_precedences(const Instance& inst,
                                                    const std::vector<TaskKind>& kinds);

// Re-establishes the non-simultaneity invariants in place: adds every
// precedence pair and every same-bay pair (as i < j), sorts, dedups.
// Idempotent; never removes pairs.
void close_nonsim(Instance& inst);

// Sorts/dedups prec (and validates ids are in range); throws Error on
// structural problems (bad ids, self-pairs, bays out of range, duplicate
// ids, negative processing times, cranes not sorted by start bay).
// Does not check precedence acyclicity — a cyclic instance is well-formed
// input that solvers must reject as infeasible.
void normalize(Instance& inst);

// True when prec contains no directed cycle.
bool precedence_acyclic(const Instance& inst);

// Cost of crane k serving seq in order, start to final position: ready time,
// travel chain, processing, and final repositioning (skipped when final_bay
// is 0). An empty sequence costs only the repositioning travel.
Time route_cost(const Instance& inst, int k, const std::vector<int>& seq);

// --- solution checks ----------------------------------------------------------

// Exhaustive feasibility audit of (routing, schedule) against the instance:
// assignment well-formedness, crane operating limits, ready times, the
// completion-time arithmetic along every route (travel + processing chain,
// final repositioning), precedence, non-simultaneity as half-open interval
// overlap, interference gaps for restricted pairs, and makespan consistency.
// Returns every violation found (empty == feasible). Throws Error only for
// structurally malformed input (wrong vector sizes, unknown ids).
std::vector<Violation> validate_schedule(const Instance& inst, const Routing& routing,
                                         const Schedule& schedule,
                                         bool enforce_limits = true);

// Per-crane sweep direction of a routing's bay sequences. EITHER covers
// empty/constant-bay routes that qualify as both directions.
enum class SweepDirection { EITHER, RIGHT, LEFT, MIXED };
struct DirectionReport {
    std::vector<SweepDirection> crane; // 1-based
    bool unidirectional = true;        // no crane MIXED
};
DirectionReport sweep_directions(const Routing& routing, const Instance& inst);

// True when every crane's bay sequence is monotone (all non-decreasing or
// all non-increasing), i.e. the schedule could be executed in one sweep.
bool is_unidirectional(const Routing& routing, const Instance& inst);

} // namespace qcsp
