#pragma once

#include <iosfwd>
#include <string>

#include "qcsp/types.hpp"

namespace qcsp {

// Canonical instance format (one directive per line, '#' starts a comment):
//
//   QCSP 1
//   <n> <q> <B> <delta> <t>
//   TASK <id> <bay> <p>          n lines
//   CRANE <id> <ready> <l0> <lT> q lines; lT = 0 means no required final bay
//   PREC <i> <j>                 i completes before j starts
//   NSIM <i> <j>                 extra non-simultaneous pairs only
//
// Pairs implied by the model (precedence pairs, same-bay pairs) must not be
// listed under NSIM; the parser rejects them, and the writer omits them, so
// parse(write(x)) == x.
Instance parse_instance(std::istream& in, const std::string& name = "");
Instance parse_instance_file(const std::string& path);
std::string write_instance(const Instance& inst);

// Routing block:
//   <k>: <i1> <i2> ... | <cost>     one line per crane, empty sequence ok
//   eta: <value>
// Costs and eta are recomputed on parse and must match the file.
std::string write_routing(const Instance& inst, const Routing& r);

// Schedule block:
//   <i>: crane <k>, <start>, <completion>   one line per task, by id
//   crane <k>: <completion>                 one line per crane
//   W: <value>
std::string write_schedule(const Instance& inst, const Routing& r, const Schedule& s);

// A solution file is "routing:" + routing block + "schedule:" + schedule
// block — exactly what the solver report ends with, so reports can be fed
// back to the validator.
struct Solution {
    Routing routing;
    Schedule schedule;
};
std::string write_solution(const Instance& inst, const Solution& sol);
Solution parse_solution(const Instance& inst, std::istream& in);
Solution parse_solution_file(const Instance& inst, const std::string& path);

// Import adapters for third-party instance collections. Both are whitespace
// tokenized, '#' comments allowed, and produce a normalized Instance.
//
// "kim" layout (travel = 1, safety = 1 implied):
//   n q [B]                      B defaults to the largest bay referenced
//   n integers: task bays
//   n integers: task processing times
//   q integers: crane start bays
//   [q integers: crane ready times]   default all 0
//   remaining pairs "i j": precedence
//
// "meisel" layout:
//   n q B
//   t delta
//   n integers: task bays
//   n integers: task processing times
//   q integers: crane start bays
//   q integers: crane ready times
//   q integers: crane final bays (0 = free)
//   remaining pairs "i j": precedence
Instance convert_kim(std::istream& in, const std::string& name = "");
Instance convert_meisel(std::istream& in, const std::string& name = "");
Instance convert_kim(const std::string& text, const std::string& name = "");
Instance convert_meisel(const std::string& text, const std::string& name = "");

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

} // namespace qcsp
