#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

#include "qcsp/types.hpp"

namespace qcsp {

// Routing-arc costs. Node convention: 0 = crane start, 1..n = tasks,
// n+1 = sink (final position). All tables 1-based on ids.
struct CostTable {
    std::vector<std::vector<Time>> c0; // c0[k][i] = r_k + travel(0,i,k) + p_i
    std::vector<std::vector<Time>> c;  // c[i][j]  = travel(i,j) + p_j
    std::vector<std::vector<Time>> cT; // cT[i][k] = travel(i,T,k), 0 when final free
    std::vector<Time> empty_cost;      // crane goes start -> final with no work
};

CostTable build_costs(const Instance& inst);

enum class CutFamily { SEC2, PCB, LIFTED_SEC, CROSS_PREC, NOGOOD, NOGOOD_SAMEBAY, SSET };

const char* to_string(CutFamily f);

// One combinatorial inequality over routing literals, all coefficients +1:
// satisfied iff (#present arc literals + #present assignment literals) <= rhs.
// The left-hand side is monotone under route extension, which is what lets
// the search evaluate cuts incrementally.
struct ArcLit {
    int k, from, to; // crane, node, node
    auto operator<=>(const ArcLit&) const = default;
};
struct AssignLit {
    int task, k;
    auto operator<=>(const AssignLit&) const = default;
};

struct Cut {
    CutFamily family = CutFamily::NOGOOD;
    std::vector<ArcLit> arcs;
    std::vector<AssignLit> assigns;
    int rhs = 0;
    int origin_iteration = 0;

    // #present literals under a complete routing.
    int lhs(const Instance& inst, const Routing& r) const;
    bool satisfied_by(const Instance& inst, const Routing& r) const {
        return lhs(inst, r) <= rhs;
    }
};

// Deduplicating pool with a literal -> cut-ids index for incremental
// evaluation during search. Duplicate = same literal set and same rhs,
// regardless of family.
class CutPool {
public:
    bool add(Cut cut); // false when an identical cut is already pooled
    const std::vector<Cut>& cuts() const { return cuts_; }
    size_t size() const { return cuts_.size(); }
    const std::vector<int>* cuts_with(std::uint64_t literal_key) const;

    static std::uint64_t arc_key(int k, int from, int to);
    static std::uint64_t assign_key(int task, int k);

private:
    std::vector<Cut> cuts_;
    std::unordered_map<std::uint64_t, std::vector<int>> index_;
    std::set<std::vector<std::uint64_t>> seen_;
};

// Initial pool: every two-task subtour inequality x^k_ij + x^k_ji <= 1
// (family SEC2), and for each ordered pair of distinct precedences
// (i1,j1),(i2,j2) with all four tasks distinct the inequality
// x^k_{i1 j2} + x^k_{j1 i2} <= 1 per crane (family PCB).
CutPool seed_cut_pool(const Instance& inst);

// --- precedence feasibility & separation -------------------------------------

struct PrecCheck {
    bool feasible = true;
    // On failure: tasks of one directed cycle of the (route-successor ∪
    // precedence) digraph, in cycle order.
    std::vector<int> cycle;
};
PrecCheck precedence_feasible(const Instance& inst, const Routing& r);

// Lifted subtour inequality for a same-crane violation: S contains node 0
// and task j, not i, with i preceding j transitively; crane k processes j
// before i. Literals: every ordered pair within S on crane k plus the
// assignment (i,k); rhs |S|-1.
Cut make_lifted_sec(const Instance& inst, int i, int j, int k, const std::vector<int>& S);

// One leg of a cross-crane precedence cycle: precedence (i,j) whose
// successor j is processed by crane k, followed on k's route by segment
// (j excluded) ending at the next leg's predecessor task.
struct CrossLeg {
    int i = 0, j = 0, k = 0;
    std::vector<int> segment;
};

// Cross-crane precedence-cycle inequality over g >= 2 legs. Literals per
// leg: arcs from j into the segment and all arcs within the segment, on
// crane k; rhs = sum of segment sizes - 1.
Cut make_cross_prec_cut(const Instance& inst, const std::vector<CrossLeg>& legs);

// Finds a violated LIFTED_SEC or CROSS_PREC cut for a precedence-infeasible
// routing (nullopt when the routing is feasible). Consecutive precedence
// arcs in the witness cycle are compressed into transitive pairs, so every
// infeasible routing yields a cut it violates.
std::optional<Cut> separate_precedence_cut(const Instance& inst, const Routing& r);

// --- branch and bound ---------------------------------------------------------

struct SearchBudget {
    long long node_limit = -1; // <0 = unlimited
    long long time_limit_ms = -1;
};

// A node of the routing search, exposed for bound tests: per-crane partial
// sequences plus closed flags (a closed crane's route is final and its exit
// travel committed).
struct PartialRouting {
    std::vector<std::vector<int>> sequences; // 1-based
    std::vector<char> closed;                // 1-based

    explicit PartialRouting(int q = 0)
        : sequences(static_cast<size_t>(q) + 1), closed(static_cast<size_t>(q) + 1, 0) {}
};

// Admissible bound on the best eta over all completions of the node:
// max of (i) each crane's committed cost plus cheapest remaining exit,
// (ii) per unrouted task the cheapest completion through any open admissible
// crane, (iii) the averaged workload ceil((committed + remaining work and
// entry travel) / q).
Time lower_bound(const Instance& inst, const CostTable& costs, const PartialRouting& node,
                 bool enforce_limits = true);

struct MasterResult {
    enum class Status { OPTIMAL, BOUND, TIMEOUT } status = Status::BOUND;
    Routing routing;      // meaningful for OPTIMAL (and best-found on TIMEOUT)
    bool have_routing = false;
    Time eta = 0;         // eta of `routing`
    Time lb = 0;          // proven bound: OPTIMAL -> eta; BOUND -> ub; TIMEOUT -> frontier bound
    long long nodes = 0;
};

// Exact min-max routing over all assignments/sequences that respect crane
// operating ranges, precedence acyclicity, and every cut in the pool.
// Routings with eta >= ub are discarded (they cannot improve the incumbent
// makespan); BOUND states that no cut-satisfying routing has eta < ub.
// Deterministic: among optimal routings the lexicographically smallest
// sequence vector is returned.
MasterResult solve_master(const Instance& inst, const CostTable& costs, const CutPool& pool,
                          Time ub = kInfTime, SearchBudget budget = {},
                          bool enforce_limits = true);

} // namespace qcsp
