#pragma once

#include <cstdint>

#include "qcsp/types.hpp"

namespace qcsp {

// Ground-truth solver: exhaustively enumerates task-to-crane assignments and
// per-crane sequences, and schedules each routing by trying every orientation
// of the open cross-crane order decisions. Deliberately shares no search or
// longest-path code with the production solver so the two can cross-check
// each other.

struct OracleLimits {
    int max_tasks = 8;
    // Upper bound on (assignment, sequence) leaves: rising factorial
    // q(q+1)...(q+n-1). Exceeding it throws instead of grinding.
    long long max_routings = 5'000'000;
    int max_free_pairs = 15; // per-routing 2^d orientation cap
};

struct OracleResult {
    Time W = kInfTime;
    Routing routing;
    Schedule schedule;
    long long routings_tried = 0;
};

// Minimum makespan over every feasible routing and ordering. Throws Error
// when the instance exceeds `limits`, or when no feasible routing exists
// (uncoverable task or cyclic precedence).
OracleResult brute_force(const Instance& inst, const OracleLimits& limits = {},
                         bool enforce_limits = true);

// Random-instance generator. All draws are hand-rolled on mt19937 so output
// is identical across platforms and standard libraries.
struct GenParams {
    int n_min = 3, n_max = 6;
    int q_min = 2, q_max = 3;
    int bays_min = 5, bays_max = 8;
    int safety_min = 1, safety_max = 1;
    Time travel_min = 1, travel_max = 1;
    Time p_min = 3, p_max = 20;
    Time ready_min = 0, ready_max = 0;
    double tasks_per_bay = 1.5;   // ratio of task count to occupied-bay count
    double prec_density = 1.0;    // fraction of rule-derived pairs kept
    std::uint64_t seed = 1;
};

// Deterministic in params. Tasks are placed only in bays coverable by some
// crane, so every generated instance admits a feasible routing.
Instance generate(const GenParams& params);

} // namespace qcsp
