#include "qcsp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>

#include "qcsp/model.hpp"

namespace qcsp {

namespace {

// --- independent schedule evaluation -------------------------------------------

// Arc of the order digraph: completion(to) >= completion(from) + w.
struct OArc {
    int from, to;
    Time w;
};

// Relaxation-based longest path (no topological sort, unlike the production
// scheduler). Nodes: 1..n tasks, n+k crane sources, n+q+k crane sinks.
// Returns kInfTime as makespan when values keep growing (positive cycle).
struct OEval {
    bool feasible = false;
    std::vector<Time> D; // size n+1
    std::vector<Time> C; // size q+1
    Time W = 0;
};

OEval relax_eval(int n, int q, const std::vector<OArc>& arcs) {
    const int N = n + 2 * q;
    std::vector<Time> dist(static_cast<size_t>(N) + 1, 0);
    bool changed = true;
    for (int pass = 0; pass <= N && changed; ++pass) {
        changed = false;
        for (const OArc& a : arcs) {
            Time cand = dist[static_cast<size_t>(a.from)] + a.w;
            if (cand > dist[static_cast<size_t>(a.to)]) {
                dist[static_cast<size_t>(a.to)] = cand;
                changed = true;
            }
        }
    }
    OEval ev;
    if (changed) return ev; // still relaxing after N passes: positive cycle
    ev.feasible = true;
    ev.D.assign(dist.begin(), dist.begin() + n + 1);
    ev.C.assign(static_cast<size_t>(q) + 1, 0);
    for (int k = 1; k <= q; ++k) {
        ev.C[static_cast<size_t>(k)] = dist[static_cast<size_t>(n + q + k)];
        ev.W = std::max(ev.W, ev.C[static_cast<size_t>(k)]);
    }
    return ev;
}

// Interference gap, written out independently of model.delta.
Time oracle_gap(const Instance& inst, int i, int j, int v, int w) {
    int li = inst.task(i).bay, lj = inst.task(j).bay;
    long long span = static_cast<long long>(inst.safety) + 1;
    long long need;
    if (v < w) need = li + (w - v) * span - lj;
    else need = lj + (v - w) * span - li;
    if (need < 0) need = 0;
    return inst.travel * need;
}

struct RoutingEval {
    const Instance& inst;
    const OracleLimits& limits;

    Time best_W = kInfTime;
    Routing best_routing;
    Schedule best_schedule;
    long long tried = 0;

    // Precedence check by Kahn's algorithm over route-order + required-order
    // arcs (the production code uses a DFS; keep this one different).
    bool order_feasible(const std::vector<std::vector<int>>& seqs) const {
        const int n = inst.n();
        std::vector<std::vector<int>> out(static_cast<size_t>(n) + 1);
        std::vector<int> indeg(static_cast<size_t>(n) + 1, 0);
        auto arc = [&](int a, int b) {
            out[static_cast<size_t>(a)].push_back(b);
            ++indeg[static_cast<size_t>(b)];
        };
        for (const auto& seq : seqs)
            for (size_t x = 1; x < seq.size(); ++x) arc(seq[x - 1], seq[x]);
        for (auto [a, b] : inst.prec) arc(a, b);
        std::vector<int> ready;
        for (int v = 1; v <= n; ++v)
            if (indeg[static_cast<size_t>(v)] == 0) ready.push_back(v);
        int done = 0;
        while (!ready.empty()) {
            int u = ready.back();
            ready.pop_back();
            ++done;
            for (int v : out[static_cast<size_t>(u)])
                if (--indeg[static_cast<size_t>(v)] == 0) ready.push_back(v);
        }
        return done == n;
    }

    Time route_eta(const std::vector<std::vector<int>>& seqs) const {
        Time eta = 0;
        for (int k = 1; k <= inst.q(); ++k) {
            const auto& seq = seqs[static_cast<size_t>(k)];
            const Crane& cr = inst.crane(k);
            Time c;
            if (seq.empty()) {
                c = cr.final_bay == 0
                        ? 0
                        : inst.travel * std::abs(cr.start_bay - cr.final_bay);
            } else {
                c = cr.ready + inst.travel * std::abs(cr.start_bay - inst.task(seq[0]).bay) +
                    inst.task(seq[0]).p;
                for (size_t x = 1; x < seq.size(); ++x)
                    c += inst.travel *
                             std::abs(inst.task(seq[x - 1]).bay - inst.task(seq[x]).bay) +
                         inst.task(seq[x]).p;
                if (cr.final_bay != 0)
                    c += inst.travel * std::abs(inst.task(seq.back()).bay - cr.final_bay);
            }
            eta = std::max(eta, c);
        }
        return eta;
    }

    void schedule_routing(const std::vector<std::vector<int>>& seqs,
                          const std::vector<int>& crane_of) {
        ++tried;
        if (!order_feasible(seqs)) return;
        if (route_eta(seqs) >= best_W) return; // any schedule is at least as long

        const int n = inst.n(), q = inst.q();
        std::vector<OArc> arcs;
        for (int k = 1; k <= q; ++k) {
            const auto& seq = seqs[static_cast<size_t>(k)];
            const Crane& cr = inst.crane(k);
            if (seq.empty()) {
                Time w = cr.final_bay == 0
                             ? 0
                             : inst.travel * std::abs(cr.start_bay - cr.final_bay);
                arcs.push_back({n + k, n + q + k, w});
                continue;
            }
            arcs.push_back({n + k, seq[0],
                            cr.ready + inst.travel * std::abs(cr.start_bay - inst.task(seq[0]).bay) +
                                inst.task(seq[0]).p});
            for (size_t x = 1; x < seq.size(); ++x)
                arcs.push_back({seq[x - 1], seq[x],
                                inst.travel *
                                        std::abs(inst.task(seq[x - 1]).bay - inst.task(seq[x]).bay) +
                                    inst.task(seq[x]).p});
            Time w = cr.final_bay == 0
                         ? 0
                         : inst.travel * std::abs(inst.task(seq.back()).bay - cr.final_bay);
            arcs.push_back({seq.back(), n + q + k, w});
        }
        for (auto [a, b] : inst.prec)
            if (crane_of[static_cast<size_t>(a)] != crane_of[static_cast<size_t>(b)])
                arcs.push_back({a, b,
                                inst.task(b).p + oracle_gap(inst, a, b,
                                                            crane_of[static_cast<size_t>(a)],
                                                            crane_of[static_cast<size_t>(b)])});

        struct FreePair {
            int i, j;
            Time wij, wji;
        };
        std::vector<FreePair> free;
        for (int i = 1; i <= n; ++i)
            for (int j = i + 1; j <= n; ++j) {
                int v = crane_of[static_cast<size_t>(i)], w = crane_of[static_cast<size_t>(j)];
                if (v == w) continue;
                bool forced = std::binary_search(inst.prec.begin(), inst.prec.end(),
                                                 std::make_pair(i, j)) ||
                              std::binary_search(inst.prec.begin(), inst.prec.end(),
                                                 std::make_pair(j, i));
                if (forced) continue;
                Time gap = oracle_gap(inst, i, j, v, w);
                bool nsim = std::binary_search(inst.nonsim.begin(), inst.nonsim.end(),
                                               std::make_pair(i, j));
                if (!nsim && gap == 0) continue;
                free.push_back({i, j, inst.task(j).p + gap, inst.task(i).p + gap});
            }
        if (static_cast<int>(free.size()) > limits.max_free_pairs)
            throw Error("oracle refuses: too many open order decisions for one routing");

        const size_t base = arcs.size();
        arcs.resize(base + free.size());
        Time local_best = kInfTime;
        OEval local_eval;
        for (std::uint32_t mask = 0; mask < (std::uint32_t{1} << free.size()); ++mask) {
            for (size_t d = 0; d < free.size(); ++d) {
                const FreePair& fp = free[d];
                arcs[base + d] = (mask >> d) & 1 ? OArc{fp.j, fp.i, fp.wji}
                                                 : OArc{fp.i, fp.j, fp.wij};
            }
            OEval ev = relax_eval(n, q, arcs);
            if (ev.feasible && ev.W < local_best) {
                local_best = ev.W;
                local_eval = std::move(ev);
            }
        }
        if (local_best < best_W) {
            best_W = local_best;
            best_routing = Routing(q);
            best_routing.sequences = seqs;
            for (int k = 1; k <= q; ++k)
                best_routing.route_cost[static_cast<size_t>(k)] =
                    route_cost(inst, k, seqs[static_cast<size_t>(k)]);
            best_routing.eta = route_eta(seqs);
            best_schedule = Schedule(n, q);
            best_schedule.completion = local_eval.D;
            best_schedule.crane_completion = local_eval.C;
            best_schedule.makespan = local_eval.W;
        }
    }
};

// Enumerates sequences for cranes k..q given the assignment, lexicographically
// per crane, then evaluates the complete routing.
void enumerate_sequences(RoutingEval& ev, std::vector<std::vector<int>>& seqs,
                         const std::vector<int>& crane_of, int k) {
    if (k > ev.inst.q()) {
        ev.schedule_routing(seqs, crane_of);
        return;
    }
    auto& seq = seqs[static_cast<size_t>(k)];
    if (seq.size() <= 1) {
        enumerate_sequences(ev, seqs, crane_of, k + 1);
        return;
    }
    std::sort(seq.begin(), seq.end());
    std::vector<int> base = seq;
    do {
        enumerate_sequences(ev, seqs, crane_of, k + 1);
    } while (std::next_permutation(seq.begin(), seq.end()));
    seq = base;
}

void enumerate_assignments(RoutingEval& ev, std::vector<std::vector<int>>& seqs,
                           std::vector<int>& crane_of,
                           const std::vector<std::uint32_t>& adm, int i) {
    if (i > ev.inst.n()) {
        enumerate_sequences(ev, seqs, crane_of, 1);
        return;
    }
    for (int k = 1; k <= ev.inst.q(); ++k) {
        if (!((adm[static_cast<size_t>(i)] >> (k - 1)) & 1)) continue;
        crane_of[static_cast<size_t>(i)] = k;
        seqs[static_cast<size_t>(k)].push_back(i);
        enumerate_assignments(ev, seqs, crane_of, adm, i + 1);
        seqs[static_cast<size_t>(k)].pop_back();
        crane_of[static_cast<size_t>(i)] = 0;
    }
}

} // namespace

OracleResult brute_force(const Instance& inst, const OracleLimits& limits, bool enforce_limits) {
    const int n = inst.n(), q = inst.q();
    if (n > limits.max_tasks) throw Error("oracle refuses: task count above the configured cap");
    long long leaves = 1;
    for (int m = 1; m <= n; ++m) {
        leaves *= q + m - 1;
        if (leaves > limits.max_routings)
            throw Error("oracle refuses: routing enumeration above the configured cap");
    }
    if (!precedence_acyclic(inst)) throw Error("precedence relation is cyclic");

    std::vector<std::uint32_t> adm(static_cast<size_t>(n) + 1, 0);
    for (int k = 1; k <= q; ++k) {
        auto [lo, hi] = operating_range(inst, k, enforce_limits);
        for (int i = 1; i <= n; ++i)
            if (inst.task(i).bay >= lo && inst.task(i).bay <= hi)
                adm[static_cast<size_t>(i)] |= std::uint32_t{1} << (k - 1);
    }
    for (int i = 1; i <= n; ++i)
        if (adm[static_cast<size_t>(i)] == 0)
            throw Error("task " + std::to_string(i) + " lies outside every crane's range");

    RoutingEval ev{inst, limits};
    std::vector<std::vector<int>> seqs(static_cast<size_t>(q) + 1);
    std::vector<int> crane_of(static_cast<size_t>(n) + 1, 0);
    enumerate_assignments(ev, seqs, crane_of, adm, 1);

    OracleResult res;
    res.W = ev.best_W;
    res.routing = ev.best_routing;
    res.schedule = ev.best_schedule;
    res.routings_tried = ev.tried;
    return res;
}

// --- generator -------------------------------------------------------------------

namespace {

// Hand-rolled draws: std::uniform_int_distribution output differs between
// standard libraries, which would break seed-pinned tests.
long long draw(std::mt19937& rng, long long lo, long long hi) {
    return lo + static_cast<long long>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

double draw01(std::mt19937& rng) {
    return static_cast<double>(rng()) / 4294967296.0;
}

} // namespace

Instance generate(const GenParams& p) {
    if (p.n_min < 1 || p.n_min > p.n_max || p.q_min < 1 || p.q_min > p.q_max ||
        p.bays_min < 1 || p.bays_min > p.bays_max || p.safety_min < 0 ||
        p.safety_min > p.safety_max || p.travel_min < 1 || p.travel_min > p.travel_max ||
        p.p_min < 0 || p.p_min > p.p_max || p.ready_min < 0 || p.ready_min > p.ready_max ||
        p.tasks_per_bay <= 0 || p.prec_density < 0 || p.prec_density > 1)
        throw Error("generator parameter ranges are empty or out of domain");

    std::mt19937 rng(static_cast<std::uint32_t>(p.seed ^ (p.seed >> 32)));
    Instance inst;
    inst.name = "rand-" + std::to_string(p.seed);

    const int q = static_cast<int>(draw(rng, p.q_min, p.q_max));
    inst.safety = static_cast<int>(draw(rng, p.safety_min, p.safety_max));
    const int min_bays = (q - 1) * (inst.safety + 1) + 1;
    if (std::max(p.bays_min, min_bays) > p.bays_max)
        throw Error("no bay count in range fits the crane count and safety margin");
    inst.bays = static_cast<int>(draw(rng, std::max(p.bays_min, min_bays), p.bays_max));
    inst.travel = draw(rng, p.travel_min, p.travel_max);
    const int n = static_cast<int>(draw(rng, p.n_min, p.n_max));

    for (int k = 1; k <= q; ++k) {
        Crane c;
        c.id = k;
        c.ready = draw(rng, p.ready_min, p.ready_max);
        auto [lo, hi] = crane_limits(inst.bays, q, inst.safety, k);
        c.start_bay = static_cast<int>(draw(rng, lo, hi));
        c.final_bay = 0;
        inst.cranes.push_back(c);
    }
    std::sort(inst.cranes.begin(), inst.cranes.end(),
              [](const Crane& a, const Crane& b) { return a.start_bay < b.start_bay; });
    for (int k = 1; k <= q; ++k) inst.cranes[static_cast<size_t>(k) - 1].id = k;

    std::vector<int> covered;
    for (int b = 1; b <= inst.bays; ++b) {
        bool ok = false;
        for (int k = 1; k <= q && !ok; ++k) {
            auto [lo, hi] = crane_limits(inst.bays, q, inst.safety, k);
            ok = b >= lo && b <= hi;
        }
        if (ok) covered.push_back(b);
    }

    int m = static_cast<int>(std::llround(static_cast<double>(n) / p.tasks_per_bay));
    m = std::max(1, std::min({m, n, static_cast<int>(covered.size())}));
    // Partial Fisher-Yates over the covered bays, then sort the chosen ones.
    for (int x = 0; x < m; ++x) {
        int y = x + static_cast<int>(draw(rng, 0, static_cast<int>(covered.size()) - 1 - x));
        std::swap(covered[static_cast<size_t>(x)], covered[static_cast<size_t>(y)]);
    }
    covered.resize(static_cast<size_t>(m));
    std::sort(covered.begin(), covered.end());

    std::vector<TaskKind> kinds(static_cast<size_t>(n) + 1, TaskKind::UNLOAD_DECK);
    const int per_bay = n / m, extra = n % m;
    for (int x = 0, id = 1; x < m; ++x) {
        const int count = per_bay + (x < extra ? 1 : 0);
        for (int c = 0; c < count; ++c, ++id) {
            Task t;
            t.id = id;
            t.bay = covered[static_cast<size_t>(x)];
            t.p = draw(rng, p.p_min, p.p_max);
            inst.tasks.push_back(t);
            kinds[static_cast<size_t>(id)] = static_cast<TaskKind>(draw(rng, 0, 3));
        }
    }

    std::vector<std::pair<int, int>> pairs = derive_precedences(inst, kinds);
    for (auto [a, b] : pairs)
        if (p.prec_density >= 1.0 || draw01(rng) < p.prec_density) inst.prec.emplace_back(a, b);

    normalize(inst);
    return inst;
}

} // namespace qcsp
