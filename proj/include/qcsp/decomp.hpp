#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qcsp/master.hpp"
#include "qcsp/slave.hpp"

namespace qcsp {

// Decomposition driver: alternate between the exact routing search (which
// yields a lower bound eta) and the exact scheduler (which yields a feasible
// makespan W == upper bound), feeding combinatorial cuts back into the
// routing search until the bounds meet.

inline constexpr int kCutFamilyCount = 7;

struct CutOptions {
    bool sset = true;    // precedence-split cuts across two cranes
    bool samebay = true; // same-bay run grouping inside no-good cuts
};

struct DriverConfig {
    long long time_limit_ms = -1;       // <0 = unlimited
    long long master_node_limit = -1;   // per master solve; <0 = unlimited
    long long slave_node_limit = 2'000'000; // safety valve; hitting it ends the run honestly
    bool enforce_limits = true;         // false: cranes may serve any bay
    CutOptions cuts;
    std::uint64_t seed = 0; // reserved for tooling that embeds a generator
};

// One completed driver iteration (master solved to optimality and the slave
// ran). lb/ub are the values after this iteration's updates.
struct IterationTrace {
    int iteration = 0;
    Time eta = 0;     // routing bound from the master
    Time slave_w = 0; // scheduled makespan of that routing
    Time lb = 0;
    Time ub = kInfTime;
    Routing routing;
    std::vector<Cut> cuts; // cuts this iteration added to the pool
};

struct SolveReport {
    enum class Status { OPTIMAL, TIME_LIMIT, INFEASIBLE_INPUT };
    Status status = Status::INFEASIBLE_INPUT;
    Time lb = 0;
    Time ub = kInfTime;
    bool have_solution = false;
    Routing best_routing;
    Schedule best_schedule;
    int iterations = 0; // master solves started
    std::array<long long, kCutFamilyCount> cuts_added{}; // indexed by CutFamily
    long long master_nodes = 0;
    long long slave_nodes = 0;
    long long wall_ms = 0;
    std::string error; // reason for INFEASIBLE_INPUT
    std::vector<IterationTrace> trace;
};

SolveReport run(const Instance& inst, const DriverConfig& cfg = {});

// Cuts for one explored routing. Precondition: `ub` already reflects this
// routing's schedule (it is the incumbent makespan after the update).
// Emits every precedence-split cut whose processing-time load certifies it,
// and a (possibly same-bay-grouped) no-good whenever the schedule matched or
// improved the incumbent or no split cut was found.
std::vector<Cut> generate_cuts(const Instance& inst, const Routing& routing,
                               const SlaveSolution& slave, Time ub,
                               const CutOptions& opt = {});

// Test support: true iff excluding every routing that violates `cut` cannot
// remove a schedule with makespan < ub. Exhaustive over routings; refuses
// instances with more than 8 tasks.
bool check_cut_validity(const Cut& cut, const Instance& inst, Time ub,
                        bool enforce_limits = true);

// Structured-text report; field order is fixed. `timing` false omits the
// wall_ms line so output is byte-reproducible.
void write_report(std::ostream& os, const Instance& inst, const SolveReport& rep,
                  bool timing = true);

} // namespace qcsp
