#include "qcsp/decomp.hpp"

#include <algorithm>
#include <chrono>
#include <ostream>

#include "qcsp/io.hpp"
#include "qcsp/model.hpp"

namespace qcsp {

namespace {

int find_pos(const std::vector<int>& seq, int task) {
    for (size_t x = 0; x < seq.size(); ++x)
        if (seq[x] == task) return static_cast<int>(x);
    return -1;
}

// No-good over every routing arc; maximal same-bay runs with no internal
// precedence pair are grouped so all their reorderings (which schedule
// identically) are excluded by the same cut.
Cut make_nogood(const Instance& inst, const Routing& r, bool samebay) {
    const int T = inst.sink_node();
    Cut cut;
    cut.family = CutFamily::NOGOOD;
    int plain_arcs = 0;
    for (int k = 1; k <= r.q(); ++k) {
        const auto& seq = r.sequences[static_cast<size_t>(k)];
        plain_arcs += static_cast<int>(seq.size()) + 1;
        if (seq.empty()) {
            cut.arcs.push_back({k, 0, T});
            continue;
        }
        size_t x = 0;
        int pred = 0;
        while (x < seq.size()) {
            size_t end = x + 1; // maximal same-bay run [x, end)
            while (end < seq.size() &&
                   inst.task(seq[end]).bay == inst.task(seq[x]).bay)
                ++end;
            bool internal_prec = false;
            for (size_t a = x; a < end && !internal_prec; ++a)
                for (size_t b = x; b < end && !internal_prec; ++b)
                    if (a != b &&
                        std::binary_search(inst.prec.begin(), inst.prec.end(),
                                           std::make_pair(seq[a], seq[b])))
                        internal_prec = true;
            int succ = end < seq.size() ? seq[end] : T;
            if (samebay && end - x >= 2 && !internal_prec) {
                cut.family = CutFamily::NOGOOD_SAMEBAY;
                for (size_t a = x; a < end; ++a) {
                    cut.arcs.push_back({k, pred, seq[a]});
                    cut.arcs.push_back({k, seq[a], succ});
                    for (size_t b = x; b < end; ++b)
                        if (a != b) cut.arcs.push_back({k, seq[a], seq[b]});
                }
            } else {
                for (size_t a = x; a < end; ++a) {
                    int from = a == x ? pred : seq[a - 1];
                    cut.arcs.push_back({k, from, seq[a]});
                }
                if (end == seq.size()) cut.arcs.push_back({k, seq.back(), T});
            }
            pred = seq[end - 1];
            x = end;
        }
    }
    // A grouped run's exit arcs overlap the next run's entry arc; literal
    // sets are duplicate-free by contract.
    std::sort(cut.arcs.begin(), cut.arcs.end());
    cut.arcs.erase(std::unique(cut.arcs.begin(), cut.arcs.end()), cut.arcs.end());
    cut.rhs = plain_arcs - 1;
    return cut;
}

} // namespace

std::vector<Cut> generate_cuts(const Instance& inst, const Routing& r,
                               const SlaveSolution& slave, Time ub, const CutOptions& opt) {
    std::vector<Cut> out;
    const int T = inst.sink_node();
    if (opt.sset) {
        for (auto [i, j] : inst.prec) {
            const int ki = r.crane_of(i), kj = r.crane_of(j);
            if (ki == 0 || kj == 0 || ki == kj) continue;
            const auto& seqi = r.sequences[static_cast<size_t>(ki)];
            const auto& seqj = r.sequences[static_cast<size_t>(kj)];
            const int pi = find_pos(seqi, i), pj = find_pos(seqj, j);

            std::vector<int> Si{0}; // depot + tasks before i on i's crane
            Time load = inst.task(i).p + inst.task(j).p;
            for (int x = 0; x < pi; ++x) {
                Si.push_back(seqi[static_cast<size_t>(x)]);
                load += inst.task(seqi[static_cast<size_t>(x)]).p;
            }
            std::vector<int> Sj; // tasks after j on j's crane + sink
            for (size_t x = static_cast<size_t>(pj) + 1; x < seqj.size(); ++x) {
                Sj.push_back(seqj[x]);
                load += inst.task(seqj[x]).p;
            }
            Sj.push_back(T);

            bool certified = load > ub;
            if (!certified && Si.size() == 1 && Sj.size() == 1) {
                // Singleton sets: i first, j last — the route arithmetic
                // itself is order-free, so the travel-inclusive load counts.
                Time path = inst.crane(ki).ready + travel(inst, 0, i, ki) + inst.task(i).p +
                            inst.task(j).p + travel(inst, j, T, kj);
                certified = path > ub;
            }
            if (!certified) continue;

            Cut cut;
            cut.family = CutFamily::SSET;
            for (int u : Si) {
                cut.arcs.push_back({ki, u, i});
                for (int v : Si)
                    if (u != v) cut.arcs.push_back({ki, u, v});
            }
            for (int u : Sj) {
                cut.arcs.push_back({kj, j, u});
                for (int v : Sj)
                    if (u != v) cut.arcs.push_back({kj, u, v});
            }
            cut.rhs = static_cast<int>(Si.size() + Sj.size()) - 1;
            out.push_back(std::move(cut));
        }
    }
    // The no-good is the fallback progress guarantee, and it is also kept
    // whenever this routing's schedule matched or improved the incumbent
    // (then no later iteration may revisit it).
    if (slave.W <= ub || out.empty()) out.push_back(make_nogood(inst, r, opt.samebay));
    return out;
}

// --- driver -------------------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

long long ms_since(Clock::time_point t0) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0).count();
}

} // namespace

SolveReport run(const Instance& inst, const DriverConfig& cfg) {
    const auto t0 = Clock::now();
    SolveReport rep;
    auto finish = [&](SolveReport::Status st) {
        rep.status = st;
        rep.wall_ms = ms_since(t0);
        return rep;
    };

    if (cfg.enforce_limits) {
        for (int k = 1; k <= inst.q(); ++k) {
            try {
                crane_limits(inst, k);
            } catch (const Error& e) {
                rep.error = e.what();
                return finish(SolveReport::Status::INFEASIBLE_INPUT);
            }
        }
    }
    if (!precedence_acyclic(inst)) {
        rep.error = "precedence relation contains a cycle";
        return finish(SolveReport::Status::INFEASIBLE_INPUT);
    }
    for (int i = 1; i <= inst.n(); ++i) {
        bool covered = false;
        for (int k = 1; k <= inst.q() && !covered; ++k) {
            auto [lo, hi] = operating_range(inst, k, cfg.enforce_limits);
            covered = inst.task(i).bay >= lo && inst.task(i).bay <= hi;
        }
        if (!covered) {
            rep.error = "task " + std::to_string(i) + " lies outside every crane's range";
            return finish(SolveReport::Status::INFEASIBLE_INPUT);
        }
    }

    const CostTable costs = build_costs(inst);
    CutPool pool = seed_cut_pool(inst);
    rep.lb = serial_lower_bound(inst, cfg.enforce_limits);
    rep.ub = kInfTime;

    while (true) {
        SearchBudget budget;
        budget.node_limit = cfg.master_node_limit;
        if (cfg.time_limit_ms >= 0) {
            long long left = cfg.time_limit_ms - ms_since(t0);
            if (left <= 0) return finish(SolveReport::Status::TIME_LIMIT);
            budget.time_limit_ms = left;
        }
        ++rep.iterations;
        MasterResult m = solve_master(inst, costs, pool, rep.ub, budget, cfg.enforce_limits);
        rep.master_nodes += m.nodes;

        if (m.status == MasterResult::Status::TIMEOUT) {
            rep.lb = std::max(rep.lb, std::min(m.lb, rep.ub));
            return finish(SolveReport::Status::TIME_LIMIT);
        }
        if (m.status == MasterResult::Status::BOUND) {
            if (!rep.have_solution) {
                rep.error = "no feasible routing exists";
                return finish(SolveReport::Status::INFEASIBLE_INPUT);
            }
            rep.lb = rep.ub; // every remaining routing was proven no better
            return finish(SolveReport::Status::OPTIMAL);
        }

        rep.lb = std::max(rep.lb, m.eta);

        DisjunctiveGraph g = build_graph(inst, m.routing);
        SlaveSolution s = solve_slave(g, rep.ub, cfg.slave_node_limit);
        rep.slave_nodes += s.nodes;
        if (s.W < rep.ub) {
            rep.ub = s.W;
            rep.best_routing = m.routing;
            rep.best_schedule = to_schedule(inst, s);
            rep.have_solution = true;
        }

        IterationTrace tr;
        tr.iteration = rep.iterations;
        tr.eta = m.eta;
        tr.slave_w = s.W;
        tr.routing = m.routing;

        if (rep.lb >= rep.ub) {
            tr.lb = rep.lb = rep.ub;
            tr.ub = rep.ub;
            rep.trace.push_back(std::move(tr));
            return finish(SolveReport::Status::OPTIMAL);
        }
        // An inexact slave (node valve) cannot certify cuts that exclude its
        // routing for good; stop honestly with the bounds gathered so far.
        if (!s.exact) return finish(SolveReport::Status::TIME_LIMIT);

        std::vector<Cut> cuts = generate_cuts(inst, m.routing, s, rep.ub, cfg.cuts);
        for (Cut& c : cuts) {
            c.origin_iteration = rep.iterations;
            if (pool.add(c)) {
                ++rep.cuts_added[static_cast<size_t>(c.family)];
                tr.cuts.push_back(c);
            }
        }
        tr.lb = rep.lb;
        tr.ub = rep.ub;
        rep.trace.push_back(std::move(tr));
    }
}

// --- cut validity audit ----------------------------------------------------------

namespace {

struct CutAudit {
    const Instance& inst;
    const Cut& cut;
    Time ub;
    bool valid = true;

    void leaf(Routing& r) {
        if (!valid) return;
        for (int k = 1; k <= inst.q(); ++k)
            r.route_cost[static_cast<size_t>(k)] =
                route_cost(inst, k, r.sequences[static_cast<size_t>(k)]);
        if (cut.satisfied_by(inst, r)) return;
        if (!precedence_feasible(inst, r).feasible) return;
        SlaveSolution s = solve_slave(build_graph(inst, r));
        if (s.W < ub) valid = false; // the cut would cost us this schedule
    }
};

void audit_sequences(CutAudit& a, Routing& r, std::vector<std::vector<int>>& groups, int k) {
    if (!a.valid) return;
    if (k > a.inst.q()) {
        a.leaf(r);
        return;
    }
    auto& g = groups[static_cast<size_t>(k)];
    std::sort(g.begin(), g.end());
    do {
        r.sequences[static_cast<size_t>(k)] = g;
        audit_sequences(a, r, groups, k + 1);
    } while (a.valid && std::next_permutation(g.begin(), g.end()));
}

void audit_assignments(CutAudit& a, Routing& r, std::vector<std::vector<int>>& groups,
                       const std::vector<std::uint32_t>& adm, int i) {
    if (!a.valid) return;
    if (i > a.inst.n()) {
        audit_sequences(a, r, groups, 1);
        return;
    }
    for (int k = 1; k <= a.inst.q(); ++k) {
        if (!((adm[static_cast<size_t>(i)] >> (k - 1)) & 1)) continue;
        groups[static_cast<size_t>(k)].push_back(i);
        audit_assignments(a, r, groups, adm, i + 1);
        groups[static_cast<size_t>(k)].pop_back();
    }
}

} // namespace

bool check_cut_validity(const Cut& cut, const Instance& inst, Time ub, bool enforce_limits) {
    if (inst.n() > 8) throw Error("cut audit refuses instances with more than 8 tasks");
    std::vector<std::uint32_t> adm(static_cast<size_t>(inst.n()) + 1, 0);
    for (int k = 1; k <= inst.q(); ++k) {
        auto [lo, hi] = operating_range(inst, k, enforce_limits);
        for (int i = 1; i <= inst.n(); ++i)
            if (inst.task(i).bay >= lo && inst.task(i).bay <= hi)
                adm[static_cast<size_t>(i)] |= std::uint32_t{1} << (k - 1);
    }
    CutAudit a{inst, cut, ub};
    Routing r(inst.q());
    std::vector<std::vector<int>> groups(static_cast<size_t>(inst.q()) + 1);
    audit_assignments(a, r, groups, adm, 1);
    return a.valid;
}

// --- report serialization ---------------------------------------------------------

void write_report(std::ostream& os, const Instance& inst, const SolveReport& rep, bool timing) {
    auto num = [](Time v) {
        return v >= kInfTime ? std::string("inf") : std::to_string(v);
    };
    const char* status = "INFEASIBLE_INPUT";
    if (rep.status == SolveReport::Status::OPTIMAL) status = "OPTIMAL";
    else if (rep.status == SolveReport::Status::TIME_LIMIT) status = "TIME_LIMIT";
    os << "status: " << status << '\n';
    if (!rep.error.empty()) os << "error: " << rep.error << '\n';
    os << "lb: " << num(rep.lb) << '\n';
    os << "ub: " << num(rep.ub) << '\n';
    os << "W: " << (rep.have_solution ? num(rep.best_schedule.makespan) : "inf") << '\n';
    os << "iterations: " << rep.iterations << '\n';
    os << "cuts:";
    for (int f = 0; f < kCutFamilyCount; ++f)
        os << ' ' << to_string(static_cast<CutFamily>(f)) << '='
           << rep.cuts_added[static_cast<size_t>(f)];
    os << '\n';
    os << "master_nodes: " << rep.master_nodes << '\n';
    os << "slave_nodes: " << rep.slave_nodes << '\n';
    if (timing) os << "wall_ms: " << rep.wall_ms << '\n';
    if (rep.have_solution) {
        os << "routing:\n" << write_routing(inst, rep.best_routing);
        os << "schedule:\n" << write_schedule(inst, rep.best_routing, rep.best_schedule);
    }
}

} // namespace qcsp
