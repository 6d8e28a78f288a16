#include "qcsp/slave.hpp"

#include <algorithm>
#include <set>

#include "qcsp/master.hpp"
#include "qcsp/model.hpp"

namespace qcsp {

namespace {

void require_valid_routing(const Instance& inst, const Routing& r) {
    if (r.q() != inst.q()) throw Error("routing crane count does not match instance");
    std::vector<char> seen(static_cast<size_t>(inst.n()) + 1, 0);
    for (int k = 1; k <= inst.q(); ++k)
        for (int t : r.sequences[static_cast<size_t>(k)]) {
            if (t < 1 || t > inst.n()) throw Error("routing references unknown task");
            if (seen[static_cast<size_t>(t)]++) throw Error("task appears twice in routing");
        }
    for (int i = 1; i <= inst.n(); ++i)
        if (!seen[static_cast<size_t>(i)]) throw Error("task missing from routing");
}

Time gap_between(const Instance& inst, int i, int j, int v, int w) {
    if (v == w) return 0;
    return delta(inst, i, j, v, w);
}

} // namespace

ZFixing fix_z_from_routing(const Instance& inst, const Routing& r) {
    require_valid_routing(inst, r);
    ZFixing z;
    std::vector<int> crane(static_cast<size_t>(inst.n()) + 1, 0);
    for (int k = 1; k <= inst.q(); ++k) {
        const auto& seq = r.sequences[static_cast<size_t>(k)];
        for (int t : seq) crane[static_cast<size_t>(t)] = k;
        for (size_t a = 0; a < seq.size(); ++a)
            for (size_t b = a + 1; b < seq.size(); ++b)
                z.fixed.emplace_back(seq[a], seq[b]);
    }
    std::set<std::pair<int, int>> cross_fixed;
    for (auto [i, j] : inst.prec)
        if (crane[static_cast<size_t>(i)] != crane[static_cast<size_t>(j)]) {
            z.fixed.emplace_back(i, j);
            cross_fixed.emplace(std::min(i, j), std::max(i, j));
        }
    for (int i = 1; i <= inst.n(); ++i)
        for (int j = i + 1; j <= inst.n(); ++j) {
            int v = crane[static_cast<size_t>(i)], w = crane[static_cast<size_t>(j)];
            if (v == w || cross_fixed.count({i, j})) continue;
            bool in_nonsim = std::binary_search(inst.nonsim.begin(), inst.nonsim.end(),
                                                std::make_pair(i, j));
            if (in_nonsim || gap_between(inst, i, j, v, w) > 0) z.free_pairs.emplace_back(i, j);
        }
    std::sort(z.fixed.begin(), z.fixed.end());
    return z;
}

DisjunctiveGraph build_graph(const Instance& inst, const Routing& r) {
    require_valid_routing(inst, r);
    if (!precedence_feasible(inst, r).feasible)
        throw Error("routing order conflicts with precedence; no schedule exists");

    DisjunctiveGraph g;
    g.n = inst.n();
    g.q = inst.q();
    std::vector<int> crane(static_cast<size_t>(inst.n()) + 1, 0);
    for (int k = 1; k <= inst.q(); ++k)
        for (int t : r.sequences[static_cast<size_t>(k)]) crane[static_cast<size_t>(t)] = k;

    for (int k = 1; k <= g.q; ++k) {
        const auto& seq = r.sequences[static_cast<size_t>(k)];
        if (seq.empty()) {
            g.fixed.push_back({g.sigma(k), g.tau(k), travel(inst, 0, inst.sink_node(), k)});
            continue;
        }
        g.fixed.push_back({g.sigma(k), seq.front(),
                           inst.crane(k).ready + travel(inst, 0, seq.front(), k) +
                               inst.task(seq.front()).p});
        for (size_t idx = 1; idx < seq.size(); ++idx) {
            int i = seq[idx - 1], j = seq[idx];
            g.fixed.push_back(
                {i, j, travel_time(inst, inst.task(i).bay, inst.task(j).bay) + inst.task(j).p});
        }
        g.fixed.push_back({seq.back(), g.tau(k), travel(inst, seq.back(), inst.sink_node(), k)});
    }

    std::set<std::pair<int, int>> cross_fixed;
    for (auto [i, j] : inst.prec) {
        int v = crane[static_cast<size_t>(i)], w = crane[static_cast<size_t>(j)];
        if (v == w) continue; // route arcs already enforce the order
        g.fixed.push_back({i, j, inst.task(j).p + gap_between(inst, i, j, v, w)});
        cross_fixed.emplace(std::min(i, j), std::max(i, j));
    }

    for (int i = 1; i <= g.n; ++i)
        for (int j = i + 1; j <= g.n; ++j) {
            int v = crane[static_cast<size_t>(i)], w = crane[static_cast<size_t>(j)];
            if (v == w || cross_fixed.count({i, j})) continue;
            Time gap = gap_between(inst, i, j, v, w);
            bool in_nonsim = std::binary_search(inst.nonsim.begin(), inst.nonsim.end(),
                                                std::make_pair(i, j));
            if (!in_nonsim && gap == 0) continue;
            g.disjunctions.push_back({i, j, inst.task(j).p + gap, inst.task(i).p + gap});
        }
    return g;
}

LongestPaths longest_paths(const DisjunctiveGraph& g, const std::vector<int>& orientation) {
    const int N = g.node_count();
    std::vector<std::vector<std::pair<int, Time>>> out(static_cast<size_t>(N) + 1);
    std::vector<int> indeg(static_cast<size_t>(N) + 1, 0);
    auto add = [&](int u, int v, Time w) {
        out[static_cast<size_t>(u)].emplace_back(v, w);
        ++indeg[static_cast<size_t>(v)];
    };
    for (const DGArc& a : g.fixed) add(a.from, a.to, a.w);
    for (size_t d = 0; d < g.disjunctions.size(); ++d) {
        if (d >= orientation.size() || orientation[d] == 0) continue;
        const Disjunction& dj = g.disjunctions[d];
        if (orientation[d] > 0) add(dj.i, dj.j, dj.wij);
        else add(dj.j, dj.i, dj.wji);
    }

    LongestPaths res;
    res.dist.assign(static_cast<size_t>(N) + 1, 0);
    std::vector<int> queue;
    queue.reserve(static_cast<size_t>(N));
    for (int v = 1; v <= N; ++v)
        if (indeg[static_cast<size_t>(v)] == 0) queue.push_back(v);
    size_t head = 0;
    while (head < queue.size()) {
        int u = queue[head++];
        for (auto [v, w] : out[static_cast<size_t>(u)]) {
            res.dist[static_cast<size_t>(v)] =
                std::max(res.dist[static_cast<size_t>(v)], res.dist[static_cast<size_t>(u)] + w);
            if (--indeg[static_cast<size_t>(v)] == 0) queue.push_back(v);
        }
    }
    if (static_cast<int>(queue.size()) != N) {
        res.acyclic = false;
        for (int v = 1; v <= N; ++v)
            if (indeg[static_cast<size_t>(v)] > 0) res.cycle_nodes.push_back(v);
        return res;
    }
    res.topo_pos.assign(static_cast<size_t>(N) + 1, 0);
    for (size_t pos = 0; pos < queue.size(); ++pos)
        res.topo_pos[static_cast<size_t>(queue[pos])] = static_cast<int>(pos);
    res.D.assign(res.dist.begin(), res.dist.begin() + g.n + 1);
    res.C.assign(static_cast<size_t>(g.q) + 1, 0);
    for (int k = 1; k <= g.q; ++k) {
        res.C[static_cast<size_t>(k)] = res.dist[static_cast<size_t>(g.tau(k))];
        res.W = std::max(res.W, res.C[static_cast<size_t>(k)]);
    }
    return res;
}

namespace {

// Longest outgoing path per node; a node is critical iff dist + back == W.
std::vector<Time> back_lengths(const DisjunctiveGraph& g, const std::vector<int>& orientation) {
    const int N = g.node_count();
    std::vector<std::vector<std::pair<int, Time>>> in(static_cast<size_t>(N) + 1);
    std::vector<int> outdeg(static_cast<size_t>(N) + 1, 0);
    auto add = [&](int u, int v, Time w) {
        in[static_cast<size_t>(v)].emplace_back(u, w);
        ++outdeg[static_cast<size_t>(u)];
    };
    for (const DGArc& a : g.fixed) add(a.from, a.to, a.w);
    for (size_t d = 0; d < g.disjunctions.size(); ++d) {
        if (orientation[d] == 0) continue;
        const Disjunction& dj = g.disjunctions[d];
        if (orientation[d] > 0) add(dj.i, dj.j, dj.wij);
        else add(dj.j, dj.i, dj.wji);
    }
    std::vector<Time> back(static_cast<size_t>(N) + 1, 0);
    std::vector<int> queue;
    for (int v = 1; v <= N; ++v)
        if (outdeg[static_cast<size_t>(v)] == 0) queue.push_back(v);
    size_t head = 0;
    while (head < queue.size()) {
        int v = queue[head++];
        for (auto [u, w] : in[static_cast<size_t>(v)]) {
            back[static_cast<size_t>(u)] =
                std::max(back[static_cast<size_t>(u)], w + back[static_cast<size_t>(v)]);
            if (--outdeg[static_cast<size_t>(u)] == 0) queue.push_back(u);
        }
    }
    return back;
}

class SlaveSearch {
public:
    SlaveSearch(const DisjunctiveGraph& g, Time ub, long long node_limit)
        : g_(g), ub_(ub), node_limit_(node_limit) {}

    SlaveSolution run() {
        const size_t d = g_.disjunctions.size();
        cur_.assign(d, 0);

        // Incumbent: orient every disjunction along a topological order of
        // the forced arcs. build_graph guarantees these are acyclic.
        LongestPaths base = longest_paths(g_, cur_);
        if (!base.acyclic) throw Error("forced arcs contain a cycle; routing is infeasible");
        complete_by_topo(base);
        best_orientation_ = cur_;
        LongestPaths full = longest_paths(g_, cur_);
        best_ = full;
        std::fill(cur_.begin(), cur_.end(), 0);

        dfs(base);

        SlaveSolution sol;
        sol.D = best_.D;
        sol.C = best_.C;
        sol.W = best_.W;
        sol.orientation = best_orientation_;
        sol.exact = !budget_hit_;
        sol.nodes = nodes_;
        return sol;
    }

private:
    // Orients every undecided disjunction forward along the current graph's
    // topological order, which can never close a cycle.
    void complete_by_topo(const LongestPaths& lp) {
        for (size_t d = 0; d < cur_.size(); ++d) {
            if (cur_[d] != 0) continue;
            const Disjunction& dj = g_.disjunctions[d];
            cur_[d] = lp.topo_pos[static_cast<size_t>(dj.i)] <
                              lp.topo_pos[static_cast<size_t>(dj.j)]
                          ? +1
                          : -1;
        }
    }

    Time prune_at() const { return std::min(best_.W, ub_); }

    void dfs(const LongestPaths& lp) {
        ++nodes_;
        if (node_limit_ >= 0 && nodes_ > node_limit_) {
            budget_hit_ = true;
            return;
        }
        if (lp.W >= prune_at()) return;

        // Cheap feasible completion of this subtree; if it matches the
        // relaxation bound the subtree is solved.
        std::vector<int> saved = cur_;
        complete_by_topo(lp);
        LongestPaths full = longest_paths(g_, cur_);
        if (full.acyclic && full.W < best_.W) {
            best_ = full;
            best_orientation_ = cur_;
        }
        cur_ = std::move(saved);
        if (full.acyclic && full.W <= lp.W) return;

        int pick = pick_disjunction(lp);
        if (pick < 0) return; // everything oriented: the completion above was this leaf

        LongestPaths child[2];
        int dir[2] = {+1, -1};
        cur_[static_cast<size_t>(pick)] = +1;
        child[0] = longest_paths(g_, cur_);
        cur_[static_cast<size_t>(pick)] = -1;
        child[1] = longest_paths(g_, cur_);
        cur_[static_cast<size_t>(pick)] = 0;
        // Try the cheaper orientation first; break ties toward i -> j.
        Time w0 = child[0].acyclic ? child[0].W : kInfTime;
        Time w1 = child[1].acyclic ? child[1].W : kInfTime;
        int order[2] = {0, 1};
        if (w1 < w0) std::swap(order[0], order[1]);
        for (int idx : order) {
            const LongestPaths& c = child[idx];
            if (!c.acyclic) continue;
            if (c.W >= prune_at()) continue;
            cur_[static_cast<size_t>(pick)] = dir[idx];
            dfs(c);
            cur_[static_cast<size_t>(pick)] = 0;
            if (budget_hit_) return;
        }
    }

    int pick_disjunction(const LongestPaths& lp) const {
        std::vector<Time> back = back_lengths(g_, cur_);
        auto critical = [&](int v) {
            return lp.dist[static_cast<size_t>(v)] + back[static_cast<size_t>(v)] == lp.W;
        };
        int fallback = -1;
        for (size_t d = 0; d < cur_.size(); ++d) {
            if (cur_[d] != 0) continue;
            if (fallback < 0) fallback = static_cast<int>(d);
            if (critical(g_.disjunctions[d].i) && critical(g_.disjunctions[d].j))
                return static_cast<int>(d);
        }
        return fallback;
    }

    const DisjunctiveGraph& g_;
    Time ub_;
    long long node_limit_;

    std::vector<int> cur_;
    LongestPaths best_;
    std::vector<int> best_orientation_;
    long long nodes_ = 0;
    bool budget_hit_ = false;
};

} // namespace

SlaveSolution solve_slave(const DisjunctiveGraph& g, Time ub, long long node_limit) {
    SlaveSearch search(g, ub, node_limit);
    return search.run();
}

Schedule to_schedule(const Instance& inst, const SlaveSolution& s) {
    Schedule sched(inst.n(), inst.q());
    sched.completion = s.D;
    sched.crane_completion = s.C;
    sched.makespan = s.W;
    return sched;
}

} // namespace qcsp
