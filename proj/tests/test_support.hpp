#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "qcsp/model.hpp"

namespace qcsp::test {

struct TaskSpec {
    int bay;
    Time p;
};

struct CraneSpec {
    int start_bay;
    Time ready = 0;
    int final_bay = 0;
};

// Builds a normalized instance from terse literals. Cranes must be listed in
// rail order (normalize enforces it).
inline Instance make_instance(int bays, Time travel, int safety, std::vector<CraneSpec> cranes,
                              std::vector<TaskSpec> tasks,
                              std::vector<std::pair<int, int>> prec = {}) {
    Instance inst;
    inst.name = "test";
    inst.bays = bays;
    inst.travel = travel;
    inst.safety = safety;
    int id = 1;
    for (const auto& t : tasks) inst.tasks.push_back({id++, t.bay, t.p});
    id = 1;
    for (const auto& c : cranes) inst.cranes.push_back({id++, c.ready, c.start_bay, c.final_bay});
    inst.prec = std::move(prec);
    normalize(inst);
    return inst;
}

// seqs[k-1] becomes crane k's sequence; costs and eta are filled in.
inline Routing make_routing(const Instance& inst, std::vector<std::vector<int>> seqs) {
    Routing r(inst.q());
    for (int k = 1; k <= inst.q(); ++k) {
        r.sequences[static_cast<size_t>(k)] = seqs[static_cast<size_t>(k) - 1];
        r.route_cost[static_cast<size_t>(k)] =
            route_cost(inst, k, r.sequences[static_cast<size_t>(k)]);
        r.eta = std::max(r.eta, r.route_cost[static_cast<size_t>(k)]);
    }
    return r;
}

// One crane starting at bay 1, tasks (bay 1, p 5) and (bay 3, p 7), no
// precedence. Serving 1 then 2 costs 0+5+2+7 = 14; the reverse costs
// 2+7+2+5 = 16, so the optimum is 14 via sequence [1, 2].
inline Instance two_task_instance() {
    return make_instance(3, 1, 1, {{1}}, {{1, 5}, {3, 7}});
}

} // namespace qcsp::test
