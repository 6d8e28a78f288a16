#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qcsp {

// All temporal quantities (processing, travel, ready times, completions) are
// integral; Time is wide enough that longest-path sums never overflow.
using Time = std::int64_t;

inline constexpr Time kInfTime = INT64_MAX / 4;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised by file readers; line is 1-based, 0 when no line applies.
struct ParseError : Error {
    int line;
    ParseError(int line_, const std::string& what_)
        : Error(line_ > 0 ? "line " + std::to_string(line_) + ": " + what_ : what_),
          line(line_) {}
};

struct Task {
    int id = 0;    // 1..n, contiguous
    int bay = 0;   // 1..B
    Time p = 0;    // processing time >= 0
};

struct Crane {
    int id = 0;        // 1..q, contiguous, ordered by start_bay
    Time ready = 0;    // earliest operating time r_k >= 0
    int start_bay = 0; // initial position l0_k, 0..B (0 = parked left of bay 1)
    int final_bay = 0; // required final position lT_k; 0 = free
};

// A problem instance. Task ids are 1..n and crane ids 1..q; all per-id
// lookups in this codebase use 1-based vectors (index 0 unused) so indices
// equal ids.
//
// Invariants (established by normalize() / the parser / the generator):
//  - tasks sorted by id, cranes sorted by id and non-decreasing start_bay
//  - prec and nonsim sorted, duplicate-free; nonsim stored with i < j
//  - prec is a subset of nonsim and every same-bay pair is in nonsim
//    (call close_nonsim after editing tasks/prec by hand)
struct Instance {
    std::string name;
    int bays = 0;  // B
    Time travel = 1; // t, time to traverse one bay
    int safety = 1;  // delta, bays that must separate two cranes
    std::vector<Task> tasks;
    std::vector<Crane> cranes;
    std::vector<std::pair<int, int>> prec;   // (i, j): i completes before j starts
    std::vector<std::pair<int, int>> nonsim; // unordered, stored i < j

    int n() const { return static_cast<int>(tasks.size()); }
    int q() const { return static_cast<int>(cranes.size()); }

    const Task& task(int id) const { return tasks[static_cast<size_t>(id) - 1]; }
    const Crane& crane(int id) const { return cranes[static_cast<size_t>(id) - 1]; }

    // Node ids in routing space: 0 = start depot, 1..n = tasks, n+1 = sink.
    int sink_node() const { return n() + 1; }
};

// Assignment + per-crane processing order. sequences[k] lists task ids in
// processing order for crane k; index 0 is unused (1-based like everything
// else). route_cost[k] is the full path cost incl. ready time and exit
// travel; eta = max_k route_cost[k].
struct Routing {
    std::vector<std::vector<int>> sequences;
    std::vector<Time> route_cost;
    Time eta = 0;

    explicit Routing(int q = 0)
        : sequences(static_cast<size_t>(q) + 1), route_cost(static_cast<size_t>(q) + 1, 0) {}

    int q() const { return static_cast<int>(sequences.size()) - 1; }
    int crane_of(int task_id) const; // 0 when unassigned
    bool operator==(const Routing& o) const {
        return sequences == o.sequences; // costs are derived
    }
};

// Task completion times plus per-crane final completion (work + travel to
// the required final position). All 1-based.
struct Schedule {
    std::vector<Time> completion;       // size n+1
    std::vector<Time> crane_completion; // size q+1
    Time makespan = 0;

    Schedule() = default;
    Schedule(int n, int q)
        : completion(static_cast<size_t>(n) + 1, 0),
          crane_completion(static_cast<size_t>(q) + 1, 0) {}

    Time start(const Instance& inst, int task_id) const {
        return completion[static_cast<size_t>(task_id)] - inst.task(task_id).p;
    }
};

enum class ViolationKind {
    UNASSIGNED_TASK,
    DOUBLE_ASSIGNMENT,
    CRANE_LIMIT,
    READY_TIME,
    COMPLETION_ARITHMETIC,
    PRECEDENCE,
    NONSIM_OVERLAP,
    INTERFERENCE_GAP,
    MAKESPAN_MISMATCH,
};

const char* to_string(ViolationKind k);

struct Violation {
    ViolationKind kind;
    int a = 0; // task or crane id, depending on kind
    int b = 0; // second task id for pair violations, else 0
    std::string detail;
};

} // namespace qcsp
