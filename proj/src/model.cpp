#include "qcsp/model.hpp"

#include <algorithm>
#include <cstdlib>
#include <queue>

namespace qcsp {

int Routing::crane_of(int task_id) const {
    for (int k = 1; k < static_cast<int>(sequences.size()); ++k)
        for (int t : sequences[static_cast<size_t>(k)])
            if (t == task_id) return k;
    return 0;
}

const char* to_string(ViolationKind k) {
    switch (k) {
    case ViolationKind::UNASSIGNED_TASK: return "UNASSIGNED_TASK";
    case ViolationKind::DOUBLE_ASSIGNMENT: return "DOUBLE_ASSIGNMENT";
    case ViolationKind::CRANE_LIMIT: return "CRANE_LIMIT";
    case ViolationKind::READY_TIME: return "READY_TIME";
    case ViolationKind::COMPLETION_ARITHMETIC: return "COMPLETION_ARITHMETIC";
    case ViolationKind::PRECEDENCE: return "PRECEDENCE";
    case ViolationKind::NONSIM_OVERLAP: return "NONSIM_OVERLAP";
    case ViolationKind::INTERFERENCE_GAP: return "INTERFERENCE_GAP";
    case ViolationKind::MAKESPAN_MISMATCH: return "MAKESPAN_MISMATCH";
    }
    return "?";
}

Time travel_time(const Instance& inst, int bay1, int bay2) {
    return inst.travel * std::abs(bay1 - bay2);
}

Time travel(const Instance& inst, int node_i, int node_j, int k) {
    const Crane& cr = inst.crane(k);
    const int sink = inst.sink_node();
    if (node_i == sink || node_j == sink) {
        if (cr.final_bay == 0) return 0;
        int other = node_i == sink ? node_j : node_i;
        int bay = other == 0 ? cr.start_bay : inst.task(other).bay;
        return travel_time(inst, bay, cr.final_bay);
    }
    int b1 = node_i == 0 ? cr.start_bay : inst.task(node_i).bay;
    int b2 = node_j == 0 ? cr.start_bay : inst.task(node_j).bay;
    return travel_time(inst, b1, b2);
}

Time delta(const Instance& inst, int i, int j, int v, int w) {
    if (v == w) throw Error("delta is defined for distinct cranes only");
    const int li = inst.task(i).bay;
    const int lj = inst.task(j).bay;
    const int span = inst.safety + 1;
    // Crane order on the rail is fixed (v left of w iff v < w); if the bays
    // of the two tasks don't leave room for the cranes in that order, the
    // conflicting task must wait until the other crane has moved on.
    Time shortfall = 0;
    if (v < w)
        shortfall = li + static_cast<Time>(w - v) * span - lj;
    else
        shortfall = lj + static_cast<Time>(v - w) * span - li;
    return shortfall > 0 ? inst.travel * shortfall : 0;
}

std::vector<ThetaEntry> theta(const Instance& inst) {
    std::vector<ThetaEntry> out;
    const int n = inst.n(), q = inst.q();
    for (int i = 1; i <= n; ++i)
        for (int j = i + 1; j <= n; ++j)
            for (int v = 1; v <= q; ++v)
                for (int w = 1; w <= q; ++w) {
                    if (v == w) continue;
                    Time g = delta(inst, i, j, v, w);
                    if (g > 0) out.push_back({i, j, v, w, g});
                }
    return out;
}

std::pair<int, int> crane_limits(int bays, int q, int safety, int k) {
    const int span = safety + 1;
    const int lo = (k - 1) * span + 1;
    const int hi = bays - (q - k) * span;
    if (lo > hi)
        throw Error("crane " + std::to_string(k) + " has empty operating range: " +
                    std::to_string(q) + " cranes with safety margin " +
                    std::to_string(safety) + " do not fit in " + std::to_string(bays) +
                    " bays");
    return {lo, hi};
}

std::pair<int, int> crane_limits(const Instance& inst, int k) {
    return crane_limits(inst.bays, inst.q(), inst.safety, k);
}

std::pair<int, int> operating_range(const Instance& inst, int k, bool enforce_limits) {
    if (enforce_limits) return crane_limits(inst, k);
    return {1, inst.bays};
}

Time serial_lower_bound(const Instance& inst, bool enforce_limits) {
    Time best = 0;
    for (int b = 1; b <= inst.bays; ++b) {
        Time load = 0;
        Time approach = kInfTime;
        for (int i = 1; i <= inst.n(); ++i) {
            const int bay = inst.task(i).bay;
            if (bay < b || bay > b + inst.safety) continue;
            load += inst.task(i).p;
            for (int k = 1; k <= inst.q(); ++k) {
                auto [lo, hi] = operating_range(inst, k, enforce_limits);
                if (bay < lo || bay > hi) continue;
                const Crane& cr = inst.crane(k);
                approach = std::min(approach, cr.ready + travel_time(inst, cr.start_bay, bay));
            }
        }
        if (load > 0 && approach < kInfTime) best = std::max(best, approach + load);
    }
    return best;
}

std::vector<std::pair<int, int>> derive_precedences(const Instance& inst,
                                                    const std::vector<TaskKind>& kinds) {
    if (kinds.size() != static_cast<size_t>(inst.n()) + 1)
        throw Error("derive_precedences: kinds must be 1-based, size n+1");
    auto rank = [](TaskKind k) {
        // Execution order inside a bay: clear the deck, empty the hold,
        // refill the hold, restack the deck.
        switch (k) {
        case TaskKind::UNLOAD_DECK: return 0;
        case TaskKind::UNLOAD_HOLD: return 1;
        case TaskKind::LOAD_HOLD: return 2;
        case TaskKind::LOAD_DECK: return 3;
        }
        return 0;
    };
    std::vector<std::pair<int, int>> out;
    const int n = inst.n();
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j) {
            if (i == j || inst.task(i).bay != inst.task(j).bay) continue;
            if (rank(kinds[static_cast<size_t>(i)]) < rank(kinds[static_cast<size_t>(j)]))
                out.emplace_back(i, j);
        }
    std::sort(out.begin(), out.end());
    return out;
}

void close_nonsim(Instance& inst) {
    auto& ns = inst.nonsim;
    for (auto& pr : ns)
        if (pr.first > pr.second) std::swap(pr.first, pr.second);
    for (auto [i, j] : inst.prec)
        ns.emplace_back(std::min(i, j), std::max(i, j));
    const int n = inst.n();
    for (int i = 1; i <= n; ++i)
        for (int j = i + 1; j <= n; ++j)
            if (inst.task(i).bay == inst.task(j).bay) ns.emplace_back(i, j);
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
}

void normalize(Instance& inst) {
    const int n = inst.n(), q = inst.q();
    if (inst.bays < 1) throw Error("instance has no bays");
    if (inst.travel < 0) throw Error("negative travel time");
    if (inst.safety < 0) throw Error("negative safety margin");
    for (int i = 1; i <= n; ++i) {
        const Task& t = inst.tasks[static_cast<size_t>(i) - 1];
        if (t.id != i) throw Error("task ids must be contiguous 1..n");
        if (t.bay < 1 || t.bay > inst.bays)
            throw Error("task " + std::to_string(i) + " bay out of range");
        if (t.p < 0) throw Error("task " + std::to_string(i) + " has negative processing time");
    }
    for (int k = 1; k <= q; ++k) {
        const Crane& c = inst.cranes[static_cast<size_t>(k) - 1];
        if (c.id != k) throw Error("crane ids must be contiguous 1..q");
        if (c.ready < 0) throw Error("crane " + std::to_string(k) + " has negative ready time");
        if (c.start_bay < 0 || c.start_bay > inst.bays)
            throw Error("crane " + std::to_string(k) + " start bay out of range");
        if (c.final_bay < 0 || c.final_bay > inst.bays)
            throw Error("crane " + std::to_string(k) + " final bay out of range");
        if (k > 1 && c.start_bay < inst.crane(k - 1).start_bay)
            throw Error("cranes must be ordered by start bay (rail order)");
    }
    auto check_pair = [&](std::pair<int, int> pr, const char* what) {
        if (pr.first < 1 || pr.first > n || pr.second < 1 || pr.second > n)
            throw Error(std::string(what) + " pair references unknown task");
        if (pr.first == pr.second) throw Error(std::string(what) + " pair of a task with itself");
    };
    for (auto pr : inst.prec) check_pair(pr, "precedence");
    for (auto pr : inst.nonsim) check_pair(pr, "non-simultaneity");
    std::sort(inst.prec.begin(), inst.prec.end());
    inst.prec.erase(std::unique(inst.prec.begin(), inst.prec.end()), inst.prec.end());
    for (auto [i, j] : inst.prec)
        if (std::binary_search(inst.prec.begin(), inst.prec.end(), std::make_pair(j, i)))
            throw Error("precedence lists both (i,j) and (j,i) for tasks " + std::to_string(i) +
                        "," + std::to_string(j));
    close_nonsim(inst);
}

bool precedence_acyclic(const Instance& inst) {
    const int n = inst.n();
    std::vector<int> indeg(static_cast<size_t>(n) + 1, 0);
    std::vector<std::vector<int>> out(static_cast<size_t>(n) + 1);
    for (auto [i, j] : inst.prec) {
        out[static_cast<size_t>(i)].push_back(j);
        ++indeg[static_cast<size_t>(j)];
    }
    std::vector<int> stack;
    for (int i = 1; i <= n; ++i)
        if (indeg[static_cast<size_t>(i)] == 0) stack.push_back(i);
    int seen = 0;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        ++seen;
        for (int v : out[static_cast<size_t>(u)])
            if (--indeg[static_cast<size_t>(v)] == 0) stack.push_back(v);
    }
    return seen == n;
}

Time route_cost(const Instance& inst, int k, const std::vector<int>& seq) {
    const Crane& cr = inst.crane(k);
    if (seq.empty())
        return cr.final_bay == 0 ? 0 : travel_time(inst, cr.start_bay, cr.final_bay);
    Time c = cr.ready;
    int at = cr.start_bay;
    for (int t : seq) {
        c += travel_time(inst, at, inst.task(t).bay) + inst.task(t).p;
        at = inst.task(t).bay;
    }
    if (cr.final_bay != 0) c += travel_time(inst, at, cr.final_bay);
    return c;
}

namespace {

struct Placement {
    int crane = 0;
    int pos = 0; // 1-based position within the crane's sequence
};

} // namespace

std::vector<Violation> validate_schedule(const Instance& inst, const Routing& routing,
                                         const Schedule& schedule, bool enforce_limits) {
    const int n = inst.n(), q = inst.q();
    if (routing.q() != q) throw Error("routing crane count mismatch");
    if (schedule.completion.size() != static_cast<size_t>(n) + 1 ||
        schedule.crane_completion.size() != static_cast<size_t>(q) + 1)
        throw Error("schedule vector sizes do not match instance");
    for (int k = 1; k <= q; ++k)
        for (int t : routing.sequences[static_cast<size_t>(k)])
            if (t < 1 || t > n) throw Error("routing references unknown task");

    std::vector<Violation> out;
    std::vector<Placement> where(static_cast<size_t>(n) + 1);
    std::vector<int> count(static_cast<size_t>(n) + 1, 0);
    for (int k = 1; k <= q; ++k) {
        const auto& seq = routing.sequences[static_cast<size_t>(k)];
        for (int pos = 0; pos < static_cast<int>(seq.size()); ++pos) {
            int t = seq[static_cast<size_t>(pos)];
            ++count[static_cast<size_t>(t)];
            where[static_cast<size_t>(t)] = {k, pos + 1};
        }
    }
    for (int i = 1; i <= n; ++i) {
        if (count[static_cast<size_t>(i)] == 0)
            out.push_back({ViolationKind::UNASSIGNED_TASK, i, 0, "task never scheduled"});
        else if (count[static_cast<size_t>(i)] > 1)
            out.push_back({ViolationKind::DOUBLE_ASSIGNMENT, i, 0,
                           "task appears " + std::to_string(count[static_cast<size_t>(i)]) +
                               " times"});
    }
    // Pair checks below assume each task has one well-defined placement.
    if (!out.empty()) return out;

    auto s = [&](int i) { return schedule.start(inst, i); };
    auto d = [&](int i) { return schedule.completion[static_cast<size_t>(i)]; };

    for (int k = 1; k <= q; ++k) {
        auto [lo, hi] = operating_range(inst, k, enforce_limits);
        const Crane& cr = inst.crane(k);
        const auto& seq = routing.sequences[static_cast<size_t>(k)];
        Time expected = cr.ready;
        int prev_bay = cr.start_bay;
        for (int t : seq) {
            int bay = inst.task(t).bay;
            if (bay < lo || bay > hi)
                out.push_back({ViolationKind::CRANE_LIMIT, t, k,
                               "bay " + std::to_string(bay) + " outside [" + std::to_string(lo) +
                                   "," + std::to_string(hi) + "] of crane " + std::to_string(k)});
            Time earliest = expected + travel_time(inst, prev_bay, bay) + inst.task(t).p;
            if (t == seq.front() && d(t) < earliest) {
                out.push_back({ViolationKind::READY_TIME, t, k,
                               "first task completes before ready+travel+processing"});
            } else if (t != seq.front() && d(t) < earliest) {
                out.push_back({ViolationKind::COMPLETION_ARITHMETIC, t, k,
                               "completes at " + std::to_string(d(t)) + ", needs >= " +
                                   std::to_string(earliest)});
            }
            expected = d(t);
            prev_bay = bay;
        }
        // A crane that serves nothing owes no ready time, only repositioning.
        Time finish = seq.empty() ? 0 : expected;
        if (cr.final_bay != 0) finish += travel_time(inst, prev_bay, cr.final_bay);
        if (schedule.crane_completion[static_cast<size_t>(k)] < finish)
            out.push_back({ViolationKind::COMPLETION_ARITHMETIC, 0, k,
                           "crane completion " +
                               std::to_string(schedule.crane_completion[static_cast<size_t>(k)]) +
                               " < " + std::to_string(finish)});
    }

    for (auto [i, j] : inst.prec)
        if (s(j) < d(i))
            out.push_back({ViolationKind::PRECEDENCE, i, j,
                           "task " + std::to_string(j) + " starts before " + std::to_string(i) +
                               " completes"});

    // Half-open intervals [start, completion): touching endpoints is fine.
    for (auto [i, j] : inst.nonsim)
        if (s(i) < d(j) && s(j) < d(i))
            out.push_back({ViolationKind::NONSIM_OVERLAP, i, j, "intervals overlap"});

    for (const auto& e : theta(inst)) {
        if (where[static_cast<size_t>(e.i)].crane != e.v ||
            where[static_cast<size_t>(e.j)].crane != e.w)
            continue;
        // One of the two must trail the other by at least the gap.
        if (s(e.j) < d(e.i) + e.gap && s(e.i) < d(e.j) + e.gap)
            out.push_back({ViolationKind::INTERFERENCE_GAP, e.i, e.j,
                           "cranes " + std::to_string(e.v) + "," + std::to_string(e.w) +
                               " need separation " + std::to_string(e.gap)});
    }

    Time maxc = 0;
    for (int k = 1; k <= q; ++k)
        maxc = std::max(maxc, schedule.crane_completion[static_cast<size_t>(k)]);
    if (schedule.makespan != maxc)
        out.push_back({ViolationKind::MAKESPAN_MISMATCH, 0, 0,
                       "makespan " + std::to_string(schedule.makespan) + " != max completion " +
                           std::to_string(maxc)});
    return out;
}

DirectionReport sweep_directions(const Routing& routing, const Instance& inst) {
    DirectionReport rep;
    rep.crane.resize(routing.sequences.size(), SweepDirection::EITHER);
    for (int k = 1; k <= routing.q(); ++k) {
        const auto& seq = routing.sequences[static_cast<size_t>(k)];
        bool up = true, down = true;
        for (size_t idx = 1; idx < seq.size(); ++idx) {
            int a = inst.task(seq[idx - 1]).bay;
            int b = inst.task(seq[idx]).bay;
            if (b < a) up = false;
            if (b > a) down = false;
        }
        SweepDirection d = up && down  ? SweepDirection::EITHER
                           : up        ? SweepDirection::RIGHT
                           : down      ? SweepDirection::LEFT
                                       : SweepDirection::MIXED;
        rep.crane[static_cast<size_t>(k)] = d;
        if (d == SweepDirection::MIXED) rep.unidirectional = false;
    }
    return rep;
}

bool is_unidirectional(const Routing& routing, const Instance& inst) {
    return sweep_directions(routing, inst).unidirectional;
}

} // namespace qcsp
