#include "qcsp/master.hpp"

#include <algorithm>
#include <chrono>
#include <unordered_set>

#include "qcsp/model.hpp"

namespace qcsp {

const char* to_string(CutFamily f) {
    switch (f) {
    case CutFamily::SEC2: return "SEC2";
    case CutFamily::PCB: return "PCB";
    case CutFamily::LIFTED_SEC: return "LIFTED_SEC";
    case CutFamily::CROSS_PREC: return "CROSS_PREC";
    case CutFamily::NOGOOD: return "NOGOOD";
    case CutFamily::NOGOOD_SAMEBAY: return "NOGOOD_SAMEBAY";
    case CutFamily::SSET: return "SSET";
    }
    return "?";
}

CostTable build_costs(const Instance& inst) {
    const int n = inst.n(), q = inst.q();
    CostTable t;
    t.c0.assign(static_cast<size_t>(q) + 1, std::vector<Time>(static_cast<size_t>(n) + 1, 0));
    t.c.assign(static_cast<size_t>(n) + 1, std::vector<Time>(static_cast<size_t>(n) + 1, 0));
    t.cT.assign(static_cast<size_t>(n) + 1, std::vector<Time>(static_cast<size_t>(q) + 1, 0));
    t.empty_cost.assign(static_cast<size_t>(q) + 1, 0);
    for (int k = 1; k <= q; ++k) {
        for (int i = 1; i <= n; ++i) {
            t.c0[static_cast<size_t>(k)][static_cast<size_t>(i)] =
                inst.crane(k).ready + travel(inst, 0, i, k) + inst.task(i).p;
            t.cT[static_cast<size_t>(i)][static_cast<size_t>(k)] =
                travel(inst, i, inst.sink_node(), k);
        }
        t.empty_cost[static_cast<size_t>(k)] = travel(inst, 0, inst.sink_node(), k);
    }
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j)
            if (i != j)
                t.c[static_cast<size_t>(i)][static_cast<size_t>(j)] =
                    travel_time(inst, inst.task(i).bay, inst.task(j).bay) + inst.task(j).p;
    return t;
}

// --- cuts ---------------------------------------------------------------------

std::uint64_t CutPool::arc_key(int k, int from, int to) {
    return (std::uint64_t{1} << 40) | (static_cast<std::uint64_t>(k) << 20) |
           (static_cast<std::uint64_t>(from) << 10) | static_cast<std::uint64_t>(to);
}

std::uint64_t CutPool::assign_key(int task, int k) {
    return (std::uint64_t{2} << 40) | (static_cast<std::uint64_t>(task) << 10) |
           static_cast<std::uint64_t>(k);
}

namespace {

std::vector<std::uint64_t> literal_keys(const Cut& cut) {
    std::vector<std::uint64_t> keys;
    keys.reserve(cut.arcs.size() + cut.assigns.size());
    for (const ArcLit& a : cut.arcs) keys.push_back(CutPool::arc_key(a.k, a.from, a.to));
    for (const AssignLit& y : cut.assigns) keys.push_back(CutPool::assign_key(y.task, y.k));
    return keys;
}

std::unordered_set<std::uint64_t> routing_literals(const Instance& inst, const Routing& r) {
    std::unordered_set<std::uint64_t> present;
    const int sink = inst.sink_node();
    for (int k = 1; k <= r.q(); ++k) {
        const auto& seq = r.sequences[static_cast<size_t>(k)];
        if (seq.empty()) {
            present.insert(CutPool::arc_key(k, 0, sink));
            continue;
        }
        present.insert(CutPool::arc_key(k, 0, seq.front()));
        for (size_t idx = 1; idx < seq.size(); ++idx)
            present.insert(CutPool::arc_key(k, seq[idx - 1], seq[idx]));
        present.insert(CutPool::arc_key(k, seq.back(), sink));
        for (int t : seq) present.insert(CutPool::assign_key(t, k));
    }
    return present;
}

} // namespace

int Cut::lhs(const Instance& inst, const Routing& r) const {
    auto present = routing_literals(inst, r);
    int count = 0;
    for (std::uint64_t key : literal_keys(*this))
        if (present.count(key)) ++count;
    return count;
}

bool CutPool::add(Cut cut) {
    std::sort(cut.arcs.begin(), cut.arcs.end());
    cut.arcs.erase(std::unique(cut.arcs.begin(), cut.arcs.end()), cut.arcs.end());
    std::sort(cut.assigns.begin(), cut.assigns.end());
    cut.assigns.erase(std::unique(cut.assigns.begin(), cut.assigns.end()), cut.assigns.end());

    std::vector<std::uint64_t> sig = literal_keys(cut);
    sig.push_back(static_cast<std::uint64_t>(cut.rhs));
    if (!seen_.insert(sig).second) return false;
    sig.pop_back();

    int id = static_cast<int>(cuts_.size());
    for (std::uint64_t key : sig) index_[key].push_back(id);
    cuts_.push_back(std::move(cut));
    return true;
}

const std::vector<int>* CutPool::cuts_with(std::uint64_t literal_key) const {
    auto it = index_.find(literal_key);
    return it == index_.end() ? nullptr : &it->second;
}

CutPool seed_cut_pool(const Instance& inst) {
    CutPool pool;
    const int n = inst.n(), q = inst.q();
    for (int i = 1; i <= n; ++i)
        for (int j = i + 1; j <= n; ++j)
            for (int k = 1; k <= q; ++k) {
                Cut cut;
                cut.family = CutFamily::SEC2;
                cut.arcs = {{k, i, j}, {k, j, i}};
                cut.rhs = 1;
                pool.add(std::move(cut));
            }
    for (auto [i1, j1] : inst.prec)
        for (auto [i2, j2] : inst.prec) {
            if (i1 == i2 && j1 == j2) continue;
            if (i1 == i2 || i1 == j2 || j1 == i2 || j1 == j2) continue;
            for (int k = 1; k <= q; ++k) {
                Cut cut;
                cut.family = CutFamily::PCB;
                cut.arcs = {{k, i1, j2}, {k, j1, i2}};
                cut.rhs = 1;
                pool.add(std::move(cut));
            }
        }
    return pool;
}

// --- precedence feasibility and separation ------------------------------------

namespace {

// Route-successor arcs plus all precedence arcs, over task nodes.
struct TaskDigraph {
    std::vector<std::vector<int>> out;
    std::vector<int> route_succ; // 0 = none

    TaskDigraph(const Instance& inst, const Routing& r)
        : out(static_cast<size_t>(inst.n()) + 1),
          route_succ(static_cast<size_t>(inst.n()) + 1, 0) {
        for (auto [i, j] : inst.prec) out[static_cast<size_t>(i)].push_back(j);
        for (int k = 1; k <= r.q(); ++k) {
            const auto& seq = r.sequences[static_cast<size_t>(k)];
            for (size_t idx = 1; idx < seq.size(); ++idx) {
                out[static_cast<size_t>(seq[idx - 1])].push_back(seq[idx]);
                route_succ[static_cast<size_t>(seq[idx - 1])] = seq[idx];
            }
        }
    }
};

// Reachability closure of the precedence relation (covers chained pairs).
std::vector<std::uint64_t> prec_closure(const Instance& inst) {
    const int n = inst.n();
    std::vector<std::uint64_t> reach(static_cast<size_t>(n) + 1, 0);
    std::vector<std::vector<int>> out(static_cast<size_t>(n) + 1);
    for (auto [i, j] : inst.prec) out[static_cast<size_t>(i)].push_back(j);
    for (int s = 1; s <= n; ++s) {
        std::vector<int> stack = out[static_cast<size_t>(s)];
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            std::uint64_t bit = std::uint64_t{1} << v;
            if (reach[static_cast<size_t>(s)] & bit) continue;
            reach[static_cast<size_t>(s)] |= bit;
            for (int w : out[static_cast<size_t>(v)]) stack.push_back(w);
        }
    }
    return reach;
}

bool in_closure(const std::vector<std::uint64_t>& reach, int i, int j) {
    return (reach[static_cast<size_t>(i)] >> j) & 1;
}

} // namespace

PrecCheck precedence_feasible(const Instance& inst, const Routing& r) {
    const int n = inst.n();
    TaskDigraph g(inst, r);
    // Iterative coloring DFS; the first back edge closes a cycle.
    std::vector<int> color(static_cast<size_t>(n) + 1, 0); // 0 new, 1 open, 2 done
    std::vector<int> parent(static_cast<size_t>(n) + 1, 0);
    for (int s = 1; s <= n; ++s) {
        if (color[static_cast<size_t>(s)] != 0) continue;
        std::vector<std::pair<int, size_t>> stack{{s, 0}};
        color[static_cast<size_t>(s)] = 1;
        while (!stack.empty()) {
            auto& [v, idx] = stack.back();
            if (idx < g.out[static_cast<size_t>(v)].size()) {
                int w = g.out[static_cast<size_t>(v)][idx++];
                if (color[static_cast<size_t>(w)] == 1) {
                    PrecCheck res;
                    res.feasible = false;
                    for (int u = v; u != w; u = parent[static_cast<size_t>(u)])
                        res.cycle.push_back(u);
                    res.cycle.push_back(w);
                    std::reverse(res.cycle.begin(), res.cycle.end());
                    return res;
                }
                if (color[static_cast<size_t>(w)] == 0) {
                    color[static_cast<size_t>(w)] = 1;
                    parent[static_cast<size_t>(w)] = v;
                    stack.emplace_back(w, 0);
                }
            } else {
                color[static_cast<size_t>(v)] = 2;
                stack.pop_back();
            }
        }
    }
    return {};
}

Cut make_lifted_sec(const Instance& inst, int i, int j, int k, const std::vector<int>& S) {
    bool has0 = false, hasj = false;
    for (int u : S) {
        if (u == 0) has0 = true;
        if (u == j) hasj = true;
        if (u == i) throw Error("lifted subtour set must not contain the successor task");
    }
    if (!has0 || !hasj) throw Error("lifted subtour set must contain node 0 and the predecessor");
    if (!in_closure(prec_closure(inst), i, j))
        throw Error("lifted subtour requires a (transitive) precedence between the tasks");
    Cut cut;
    cut.family = CutFamily::LIFTED_SEC;
    for (int u : S)
        for (int v : S)
            if (u != v) cut.arcs.push_back({k, u, v});
    cut.assigns.push_back({i, k});
    cut.rhs = static_cast<int>(S.size()) - 1;
    return cut;
}

Cut make_cross_prec_cut(const Instance& inst, const std::vector<CrossLeg>& legs) {
    if (legs.size() < 2) throw Error("cross-crane precedence cut needs at least two legs");
    auto reach = prec_closure(inst);
    std::unordered_set<int> seen;
    auto mark = [&](int t) {
        if (!seen.insert(t).second) throw Error("cross-crane witness tasks must be distinct");
    };
    int total = 0;
    for (size_t m = 0; m < legs.size(); ++m) {
        const CrossLeg& leg = legs[m];
        if (leg.segment.empty()) throw Error("cross-crane witness leg has empty segment");
        if (!in_closure(reach, leg.i, leg.j))
            throw Error("cross-crane witness pair lacks a (transitive) precedence");
        const CrossLeg& next = legs[(m + 1) % legs.size()];
        if (leg.segment.back() != next.i)
            throw Error("cross-crane witness segments must chain into the next pair");
        mark(leg.j);
        for (int u : leg.segment) mark(u);
        total += static_cast<int>(leg.segment.size());
    }
    // Each leg's predecessor i is the last element of the previous segment,
    // already marked; the pair (i, j) itself needs no extra distinctness.
    Cut cut;
    cut.family = CutFamily::CROSS_PREC;
    for (const CrossLeg& leg : legs) {
        for (int u : leg.segment) cut.arcs.push_back({leg.k, leg.j, u});
        for (int u : leg.segment)
            for (int v : leg.segment)
                if (u != v) cut.arcs.push_back({leg.k, u, v});
    }
    cut.rhs = total - 1;
    return cut;
}

std::optional<Cut> separate_precedence_cut(const Instance& inst, const Routing& r) {
    PrecCheck check = precedence_feasible(inst, r);
    if (check.feasible) return std::nullopt;
    const auto& cyc = check.cycle;
    TaskDigraph g(inst, r);

    // Classify cycle edges; a successor arc can coincide with a precedence
    // pair, in which case treating it as part of the route keeps segments
    // maximal.
    const size_t m = cyc.size();
    std::vector<bool> is_route(m);
    bool any_route = false, any_prec = false;
    for (size_t e = 0; e < m; ++e) {
        int u = cyc[e], v = cyc[(e + 1) % m];
        is_route[e] = g.route_succ[static_cast<size_t>(u)] == v;
        (is_route[e] ? any_route : any_prec) = true;
    }
    if (!any_prec) throw Error("cycle without precedence arcs cannot occur in a routing");
    if (!any_route) throw Error("precedence relation is cyclic; no routing cut applies");
    // Start at the head of a maximal precedence run so runs never wrap past
    // the walk origin.
    size_t first_prec = m;
    for (size_t e = 0; e < m; ++e)
        if (!is_route[e] && is_route[(e + m - 1) % m]) {
            first_prec = e;
            break;
        }

    // Walk the cycle starting at a precedence arc; compress precedence runs
    // into one transitive pair and collect the route run that follows.
    std::vector<CrossLeg> legs;
    size_t e = first_prec;
    do {
        CrossLeg leg;
        leg.i = cyc[e];
        while (!is_route[e]) e = (e + 1) % m;
        leg.j = cyc[e]; // first node after the precedence run
        leg.k = r.crane_of(leg.j);
        while (is_route[e]) {
            leg.segment.push_back(cyc[(e + 1) % m]);
            e = (e + 1) % m;
        }
        legs.push_back(std::move(leg));
    } while (e != first_prec);

    if (legs.size() == 1) {
        // Same-crane violation: successor precedes its (transitive)
        // predecessor on one route. S = depot plus the route prefix through j.
        const CrossLeg& leg = legs.front();
        int i = leg.segment.back(); // the predecessor task (route run ends at it)
        int j = leg.j;
        int k = leg.k;
        const auto& seq = r.sequences[static_cast<size_t>(k)];
        std::vector<int> S{0};
        for (int t : seq) {
            S.push_back(t);
            if (t == j) break;
        }
        return make_lifted_sec(inst, i, j, k, S);
    }
    return make_cross_prec_cut(inst, legs);
}

// --- lower bound ---------------------------------------------------------------

namespace {

struct AdmissibleInfo {
    std::vector<std::uint32_t> task_mask; // 1-based: bit k-1 = crane k may serve task
    std::vector<Time> min_in;             // cheapest single-arc entry travel (plus ready)
};

AdmissibleInfo admissible_info(const Instance& inst, bool enforce_limits) {
    const int n = inst.n(), q = inst.q();
    AdmissibleInfo info;
    info.task_mask.assign(static_cast<size_t>(n) + 1, 0);
    info.min_in.assign(static_cast<size_t>(n) + 1, kInfTime);
    for (int k = 1; k <= q; ++k) {
        auto [lo, hi] = operating_range(inst, k, enforce_limits);
        for (int i = 1; i <= n; ++i)
            if (inst.task(i).bay >= lo && inst.task(i).bay <= hi)
                info.task_mask[static_cast<size_t>(i)] |= std::uint32_t{1} << (k - 1);
    }
    for (int i = 1; i <= n; ++i) {
        Time best = kInfTime;
        for (int u = 1; u <= n; ++u)
            if (u != i) best = std::min(best, travel_time(inst, inst.task(u).bay, inst.task(i).bay));
        for (int k = 1; k <= q; ++k)
            best = std::min(best, inst.crane(k).ready +
                                      travel_time(inst, inst.crane(k).start_bay, inst.task(i).bay));
        info.min_in[static_cast<size_t>(i)] = best;
    }
    return info;
}

// committed[k] excludes exit travel while open, includes it once closed;
// last_task[k] = 0 for an empty route.
Time lb_core(const Instance& inst, const CostTable& costs, const AdmissibleInfo& adm,
             const std::vector<Time>& committed, const std::vector<char>& closed,
             const std::vector<int>& last_task, const std::vector<char>& routed) {
    const int n = inst.n(), q = inst.q();
    Time bound = 0;
    for (int k = 1; k <= q; ++k) {
        Time b;
        if (closed[static_cast<size_t>(k)]) {
            b = committed[static_cast<size_t>(k)];
        } else if (last_task[static_cast<size_t>(k)] == 0) {
            b = costs.empty_cost[static_cast<size_t>(k)];
        } else {
            b = committed[static_cast<size_t>(k)] +
                costs.cT[static_cast<size_t>(last_task[static_cast<size_t>(k)])]
                        [static_cast<size_t>(k)];
        }
        bound = std::max(bound, b);
    }
    Time work = 0;
    for (int k = 1; k <= q; ++k) work += committed[static_cast<size_t>(k)];
    for (int i = 1; i <= n; ++i) {
        if (routed[static_cast<size_t>(i)]) continue;
        Time best = kInfTime;
        for (int k = 1; k <= q; ++k) {
            if (closed[static_cast<size_t>(k)]) continue;
            if (!((adm.task_mask[static_cast<size_t>(i)] >> (k - 1)) & 1)) continue;
            int last = last_task[static_cast<size_t>(k)];
            Time arrive = last == 0 ? costs.c0[static_cast<size_t>(k)][static_cast<size_t>(i)]
                                    : committed[static_cast<size_t>(k)] +
                                          costs.c[static_cast<size_t>(last)][static_cast<size_t>(i)];
            best = std::min(best, arrive + costs.cT[static_cast<size_t>(i)][static_cast<size_t>(k)]);
        }
        if (best >= kInfTime) return kInfTime; // task cannot be placed any more
        bound = std::max(bound, best);
        work += inst.task(i).p + adm.min_in[static_cast<size_t>(i)];
    }
    bound = std::max(bound, (work + q - 1) / q);
    return bound;
}

} // namespace

Time lower_bound(const Instance& inst, const CostTable& costs, const PartialRouting& node,
                 bool enforce_limits) {
    const int n = inst.n(), q = inst.q();
    AdmissibleInfo adm = admissible_info(inst, enforce_limits);
    std::vector<Time> committed(static_cast<size_t>(q) + 1, 0);
    std::vector<char> closed(static_cast<size_t>(q) + 1, 0);
    std::vector<int> last_task(static_cast<size_t>(q) + 1, 0);
    std::vector<char> routed(static_cast<size_t>(n) + 1, 0);
    for (int k = 1; k <= q; ++k) {
        const auto& seq = node.sequences[static_cast<size_t>(k)];
        closed[static_cast<size_t>(k)] = node.closed[static_cast<size_t>(k)];
        for (int t : seq) routed[static_cast<size_t>(t)] = 1;
        if (!seq.empty()) last_task[static_cast<size_t>(k)] = seq.back();
        Time c = 0;
        if (!seq.empty()) {
            c = costs.c0[static_cast<size_t>(k)][static_cast<size_t>(seq.front())];
            for (size_t idx = 1; idx < seq.size(); ++idx)
                c += costs.c[static_cast<size_t>(seq[idx - 1])][static_cast<size_t>(seq[idx])];
        }
        if (node.closed[static_cast<size_t>(k)])
            c += seq.empty() ? costs.empty_cost[static_cast<size_t>(k)]
                             : costs.cT[static_cast<size_t>(seq.back())][static_cast<size_t>(k)];
        committed[static_cast<size_t>(k)] = c;
    }
    return lb_core(inst, costs, adm, committed, closed, last_task, routed);
}

// --- branch and bound -----------------------------------------------------------

namespace {

class Searcher {
public:
    Searcher(const Instance& inst, const CostTable& costs, const CutPool& pool, Time ub,
             SearchBudget budget, bool enforce_limits)
        : inst_(inst), costs_(costs), pool_(pool), ub_(ub), budget_(budget) {
        n_ = inst.n();
        q_ = inst.q();
        sink_ = inst.sink_node();
        adm_ = admissible_info(inst, enforce_limits);
        phi_out_.resize(static_cast<size_t>(n_) + 1);
        phi_in_.resize(static_cast<size_t>(n_) + 1);
        for (auto [i, j] : inst.prec) {
            phi_out_[static_cast<size_t>(i)].push_back(j);
            phi_in_[static_cast<size_t>(j)].push_back(i);
        }
        seq_.assign(static_cast<size_t>(q_) + 1, {});
        committed_.assign(static_cast<size_t>(q_) + 1, 0);
        closed_.assign(static_cast<size_t>(q_) + 1, 0);
        last_task_.assign(static_cast<size_t>(q_) + 1, 0);
        routed_.assign(static_cast<size_t>(n_) + 1, 0);
        route_succ_.assign(static_cast<size_t>(n_) + 1, 0);
        unrouted_ = n_;
        open_count_ = q_;
        open_mask_ = (q_ >= 32 ? ~std::uint32_t{0} : ((std::uint32_t{1} << q_) - 1));
        counts_.assign(pool.size(), 0);
        use_deadline_ = budget.time_limit_ms >= 0;
        if (use_deadline_)
            deadline_ = std::chrono::steady_clock::now() +
                        std::chrono::milliseconds(budget.time_limit_ms);
    }

    MasterResult run() {
        dfs();
        MasterResult res;
        res.nodes = nodes_;
        if (timed_out_) {
            res.status = MasterResult::Status::TIMEOUT;
            res.lb = frontier_lb_;
            if (have_inc_) {
                res.lb = std::min(res.lb, best_eta_);
                res.routing = best_;
                res.have_routing = true;
                res.eta = best_eta_;
            }
        } else if (have_inc_) {
            res.status = MasterResult::Status::OPTIMAL;
            res.routing = best_;
            res.have_routing = true;
            res.eta = best_eta_;
            res.lb = best_eta_;
        } else {
            res.status = MasterResult::Status::BOUND;
            res.lb = ub_;
        }
        return res;
    }

private:
    enum class Cmp { LT, GE, UNDECIDED };

    // Lexicographic relation of every completion of the current node to the
    // incumbent sequences. GE means no completion can be strictly smaller.
    Cmp lex_vs_incumbent() const {
        for (int k = 1; k <= q_; ++k) {
            const auto& a = seq_[static_cast<size_t>(k)];
            const auto& b = best_.sequences[static_cast<size_t>(k)];
            size_t m = std::min(a.size(), b.size());
            for (size_t idx = 0; idx < m; ++idx)
                if (a[idx] != b[idx]) return a[idx] < b[idx] ? Cmp::LT : Cmp::GE;
            if (a.size() < b.size())
                return closed_[static_cast<size_t>(k)] ? Cmp::LT : Cmp::UNDECIDED;
            if (a.size() > b.size()) return Cmp::GE;
            if (!closed_[static_cast<size_t>(k)]) return Cmp::UNDECIDED;
        }
        return Cmp::GE;
    }

    bool over_budget() {
        if (budget_.node_limit >= 0 && nodes_ > budget_.node_limit) return true;
        if (use_deadline_ && (nodes_ & 255) == 0 &&
            std::chrono::steady_clock::now() >= deadline_)
            return true;
        return false;
    }

    // Counts currently-exceeded cuts; a branch is admissible iff zero.
    void apply_literal(std::uint64_t key, int dir) {
        const std::vector<int>* ids = pool_.cuts_with(key);
        if (!ids) return;
        for (int id : *ids) {
            int before = counts_[static_cast<size_t>(id)];
            counts_[static_cast<size_t>(id)] = before + dir;
            int rhs = pool_.cuts()[static_cast<size_t>(id)].rhs;
            if (dir > 0 && before + 1 == rhs + 1) ++overflowed_;
            if (dir < 0 && before == rhs + 1) --overflowed_;
        }
    }

    bool reaches(int src, int target) {
        // Path search over committed route arcs plus precedence arcs.
        std::uint64_t visited = 0;
        scratch_.clear();
        scratch_.push_back(src);
        while (!scratch_.empty()) {
            int v = scratch_.back();
            scratch_.pop_back();
            if (v == target) return true;
            std::uint64_t bit = std::uint64_t{1} << v;
            if (visited & bit) continue;
            visited |= bit;
            if (int s = route_succ_[static_cast<size_t>(v)]) scratch_.push_back(s);
            for (int w : phi_out_[static_cast<size_t>(v)]) scratch_.push_back(w);
        }
        return false;
    }

    bool forced_later_conflict(int i, int k) const {
        for (int j : phi_in_[static_cast<size_t>(i)]) {
            if (routed_[static_cast<size_t>(j)]) continue;
            std::uint32_t eff = adm_.task_mask[static_cast<size_t>(j)] & open_mask_;
            if (eff == (std::uint32_t{1} << (k - 1))) return true;
        }
        return false;
    }

    void record_leaf() {
        Time eta = 0;
        for (int k = 1; k <= q_; ++k) eta = std::max(eta, committed_[static_cast<size_t>(k)]);
        // Entry pruning already ensured eta < ub and (eta, sequences) is an
        // improvement or a lex-smaller tie.
        best_ = Routing(q_);
        best_.sequences = seq_;
        best_.route_cost = committed_;
        best_.eta = eta;
        best_eta_ = eta;
        have_inc_ = true;
    }

    void dfs() {
        ++nodes_;
        if (!timed_out_ && over_budget()) timed_out_ = true;
        Time lb = lb_core(inst_, costs_, adm_, committed_, closed_, last_task_, routed_);
        if (timed_out_) {
            frontier_lb_ = std::min(frontier_lb_, lb);
            return;
        }
        if (lb >= ub_) return;
        if (have_inc_) {
            if (lb > best_eta_) return;
            if (lb == best_eta_ && lex_vs_incumbent() == Cmp::GE) return;
        }
        if (unrouted_ == 0 && open_count_ == 0) {
            record_leaf();
            return;
        }
        int k = 0;
        for (int c = 1; c <= q_; ++c)
            if (!closed_[static_cast<size_t>(c)] &&
                (k == 0 || committed_[static_cast<size_t>(c)] < committed_[static_cast<size_t>(k)]))
                k = c;
        if (k == 0) return; // tasks remain but every crane is closed

        const int last = last_task_[static_cast<size_t>(k)];
        const int from = last == 0 ? 0 : last;

        std::vector<std::pair<Time, int>> cand;
        cand.reserve(static_cast<size_t>(unrouted_));
        for (int i = 1; i <= n_; ++i) {
            if (routed_[static_cast<size_t>(i)]) continue;
            if (!((adm_.task_mask[static_cast<size_t>(i)] >> (k - 1)) & 1)) continue;
            Time c = last == 0 ? costs_.c0[static_cast<size_t>(k)][static_cast<size_t>(i)]
                               : costs_.c[static_cast<size_t>(last)][static_cast<size_t>(i)];
            cand.emplace_back(c, i);
        }
        std::sort(cand.begin(), cand.end());

        for (auto [cost, i] : cand) {
            if (forced_later_conflict(i, k)) continue;
            if (last != 0 && reaches(i, last)) continue; // closing arc would create a cycle
            apply_literal(CutPool::arc_key(k, from, i), +1);
            apply_literal(CutPool::assign_key(i, k), +1);
            if (overflowed_ == 0) {
                seq_[static_cast<size_t>(k)].push_back(i);
                committed_[static_cast<size_t>(k)] += cost;
                routed_[static_cast<size_t>(i)] = 1;
                if (last != 0) route_succ_[static_cast<size_t>(last)] = i;
                last_task_[static_cast<size_t>(k)] = i;
                --unrouted_;
                dfs();
                ++unrouted_;
                last_task_[static_cast<size_t>(k)] = last;
                if (last != 0) route_succ_[static_cast<size_t>(last)] = 0;
                routed_[static_cast<size_t>(i)] = 0;
                committed_[static_cast<size_t>(k)] -= cost;
                seq_[static_cast<size_t>(k)].pop_back();
            }
            apply_literal(CutPool::arc_key(k, from, i), -1);
            apply_literal(CutPool::assign_key(i, k), -1);
            if (timed_out_) {
                frontier_lb_ = std::min(frontier_lb_, lb);
                return;
            }
        }

        // Closing is the last branch so task-appending children are explored
        // first (they dominate lexicographic construction order).
        apply_literal(CutPool::arc_key(k, from, sink_), +1);
        if (overflowed_ == 0) {
            Time exit_cost = last == 0
                                 ? costs_.empty_cost[static_cast<size_t>(k)]
                                 : costs_.cT[static_cast<size_t>(last)][static_cast<size_t>(k)];
            committed_[static_cast<size_t>(k)] += exit_cost;
            closed_[static_cast<size_t>(k)] = 1;
            open_mask_ &= ~(std::uint32_t{1} << (k - 1));
            --open_count_;
            dfs();
            ++open_count_;
            open_mask_ |= std::uint32_t{1} << (k - 1);
            closed_[static_cast<size_t>(k)] = 0;
            committed_[static_cast<size_t>(k)] -= exit_cost;
        }
        apply_literal(CutPool::arc_key(k, from, sink_), -1);
        if (timed_out_) frontier_lb_ = std::min(frontier_lb_, lb);
    }

    const Instance& inst_;
    const CostTable& costs_;
    const CutPool& pool_;
    Time ub_;
    SearchBudget budget_;

    int n_ = 0, q_ = 0, sink_ = 0;
    AdmissibleInfo adm_;
    std::vector<std::vector<int>> phi_out_, phi_in_;

    std::vector<std::vector<int>> seq_;
    std::vector<Time> committed_;
    std::vector<char> closed_;
    std::vector<int> last_task_;
    std::vector<char> routed_;
    std::vector<int> route_succ_;
    int unrouted_ = 0;
    int open_count_ = 0;
    std::uint32_t open_mask_ = 0;
    std::vector<int> counts_;
    int overflowed_ = 0;
    std::vector<int> scratch_;

    bool have_inc_ = false;
    Routing best_;
    Time best_eta_ = 0;

    long long nodes_ = 0;
    bool timed_out_ = false;
    Time frontier_lb_ = kInfTime;
    bool use_deadline_ = false;
    std::chrono::steady_clock::time_point deadline_;
};

} // namespace

MasterResult solve_master(const Instance& inst, const CostTable& costs, const CutPool& pool,
                          Time ub, SearchBudget budget, bool enforce_limits) {
    Searcher s(inst, costs, pool, ub, budget, enforce_limits);
    return s.run();
}

} // namespace qcsp
