#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>

#include "doctest.h"
#include "qcsp/io.hpp"
#include "qcsp/model.hpp"
#include "test_support.hpp"

using namespace qcsp;
using test::make_instance;
using test::make_routing;
using test::two_task_instance;

namespace {

Instance parse_str(const std::string& text, const std::string& name = "x") {
    std::istringstream in(text);
    return parse_instance(in, name);
}

// Line of the ParseError thrown by f, -1 when f does not throw.
template <class F>
int error_line(F&& f) {
    try {
        f();
    } catch (const ParseError& e) {
        return e.line;
    }
    return -1;
}

} // namespace

TEST_CASE("canonical format round trip is byte-stable") {
    auto inst = make_instance(6, 2, 1, {{1, 3, 0}, {4, 0, 6}},
                              {{1, 5}, {3, 7}, {3, 2}, {5, 4}}, {{1, 2}, {4, 1}});
    inst.nonsim.push_back({2, 4}); // extra pair, not implied by bays or precedence
    close_nonsim(inst);

    std::string once = write_instance(inst);
    Instance back = parse_str(once);
    CHECK(write_instance(back) == once);

    CHECK(back.n() == 4);
    CHECK(back.q() == 2);
    CHECK(back.bays == 6);
    CHECK(back.safety == 1);
    CHECK(back.travel == 2);
    CHECK(back.task(3).bay == 3);
    CHECK(back.task(3).p == 2);
    CHECK(back.crane(2).ready == 0);
    CHECK(back.crane(2).start_bay == 4);
    CHECK(back.crane(2).final_bay == 6);
    CHECK(back.prec == inst.prec);
    CHECK(back.nonsim == inst.nonsim); // implied pairs re-derived on parse
}

TEST_CASE("parser accepts comments and blank lines") {
    Instance inst = parse_str("# container crane instance\n"
                              "QCSP 1\n"
                              "\n"
                              "2 1 3 1 1\n"
                              "TASK 1 1 5  # quay side\n"
                              "TASK 2 3 7\n"
                              "CRANE 1 0 1 0\n",
                              "demo");
    CHECK(inst.name == "demo");
    CHECK(write_instance(inst) == write_instance(two_task_instance()));
}

TEST_CASE("parser reports the offending line") {
    CHECK(error_line([] { parse_str(""); }) == 0);
    CHECK(error_line([] { parse_str("QCSP 2\n1 1 3 1 1\nTASK 1 1 5\nCRANE 1 0 1 0\n"); }) == 1);
    CHECK(error_line([] {
              parse_str("QCSP 1\n1 1 3 1 1\nTASK 1 1 5\nFROB 1\nCRANE 1 0 1 0\n");
          }) == 4);
    CHECK(error_line([] {
              parse_str("QCSP 1\n2 1 3 1 1\nTASK 1 1 5\nTASK 1 3 7\nCRANE 1 0 1 0\n");
          }) == 4); // duplicate task id
    CHECK(error_line([] {
              parse_str("QCSP 1\n1 1 3 1 1\nTASK 1 9 5\nCRANE 1 0 1 0\n");
          }) == 3); // bay out of range
    CHECK(error_line([] {
              parse_str("QCSP 1\n1 1 3 1 1\nTASK 1 1 -5\nCRANE 1 0 1 0\n");
          }) == 3); // negative processing time
    CHECK(error_line([] {
              parse_str("QCSP 1\n1 1 3 1 x\nTASK 1 1 5\nCRANE 1 0 1 0\n");
          }) == 2); // non-integer token
    CHECK(error_line([] {
              parse_str("QCSP 1\n2 1 3 1 1\nTASK 1 1 5\nTASK 2 3 7\nCRANE 1 0 1 0\n"
                        "PREC 1 2\nPREC 1 2\n");
          }) == 7); // duplicate precedence
    CHECK(error_line([] { parse_str("QCSP 1\n1 1 3 1 1\nTASK 1 1 5\n"); }) == 0); // missing crane
}

TEST_CASE("parser rejects implied non-simultaneity pairs") {
    // Same bay: implied.
    CHECK(error_line([] {
              parse_str("QCSP 1\n2 1 3 1 1\nTASK 1 2 5\nTASK 2 2 7\nCRANE 1 0 1 0\n"
                        "NSIM 1 2\n");
          }) == 6);
    // Precedence in either direction: implied.
    CHECK(error_line([] {
              parse_str("QCSP 1\n2 1 3 1 1\nTASK 1 1 5\nTASK 2 3 7\nCRANE 1 0 1 0\n"
                        "PREC 2 1\nNSIM 1 2\n");
          }) == 7);
    // Distinct bays, no precedence: accepted and normalized to i < j.
    Instance ok = parse_str("QCSP 1\n2 1 3 1 1\nTASK 1 1 5\nTASK 2 3 7\nCRANE 1 0 1 0\n"
                            "NSIM 2 1\n");
    CHECK(ok.nonsim == std::vector<std::pair<int, int>>{{1, 2}});
}

TEST_CASE("solution files round trip and are cross-checked on parse") {
    auto inst = two_task_instance();
    Solution sol;
    sol.routing = make_routing(inst, {{1, 2}});
    sol.schedule = Schedule(2, 1);
    sol.schedule.completion[1] = 5;
    sol.schedule.completion[2] = 14;
    sol.schedule.crane_completion[1] = 14;
    sol.schedule.makespan = 14;

    std::string text = write_solution(inst, sol);
    std::istringstream in(text);
    Solution back = parse_solution(inst, in);
    CHECK(back.routing == sol.routing);
    CHECK(back.schedule.completion == sol.schedule.completion);
    CHECK(back.schedule.crane_completion == sol.schedule.crane_completion);
    CHECK(back.schedule.makespan == sol.schedule.makespan);
    CHECK(write_solution(inst, back) == text);

    auto reject = [&](const std::string& from, const std::string& to) {
        std::string bad = text;
        auto pos = bad.find(from);
        REQUIRE(pos != std::string::npos);
        bad.replace(pos, from.size(), to);
        std::istringstream bin(bad);
        return error_line([&] { parse_solution(inst, bin); });
    };
    CHECK(reject("| 14", "| 13") == 2);              // route cost mismatch
    CHECK(reject("eta: 14", "eta: 15") == 3);        // eta mismatch
    CHECK(reject("2: crane 1", "2: crane 2") == 6);  // crane differs from routing
    CHECK(reject(", 0, 5", ", 0, 6") == 5);          // completion - start != p
    CHECK(reject("W: 14", "W: 14\njunk 1") == 9);    // trailing content
}

TEST_CASE("kim layout import") {
    SUBCASE("explicit bay count, defaults for the rest") {
        std::istringstream in("2 1 5\n1 3\n5 7\n1\n");
        Instance inst = convert_kim(in, "k");
        CHECK(inst.n() == 2);
        CHECK(inst.q() == 1);
        CHECK(inst.bays == 5);
        CHECK(inst.travel == 1);
        CHECK(inst.safety == 1);
        CHECK(inst.task(1).bay == 1);
        CHECK(inst.task(2).p == 7);
        CHECK(inst.crane(1).start_bay == 1);
        CHECK(inst.crane(1).ready == 0);
        CHECK(inst.crane(1).final_bay == 0);
        CHECK(inst.prec.empty());
    }
    SUBCASE("bay count defaults to the largest bay referenced") {
        std::istringstream in("2 1\n1 3\n5 7\n2\n");
        Instance inst = convert_kim(in, "k");
        CHECK(inst.bays == 3);
        CHECK(inst.task(2).bay == 3);
        CHECK(inst.crane(1).start_bay == 2);
    }
    SUBCASE("ready times and precedence pairs") {
        std::istringstream in("2 2 6\n1 4\n3 3\n1 5\n2 0\n1 2\n");
        Instance inst = convert_kim(in, "k");
        CHECK(inst.crane(1).ready == 2);
        CHECK(inst.crane(2).ready == 0);
        CHECK(inst.prec == std::vector<std::pair<int, int>>{{1, 2}});
    }
    SUBCASE("cranes listed out of rail order are reordered") {
        std::istringstream in("1 2 6\n2\n4\n5 1\n0 3\n");
        Instance inst = convert_kim(in, "k");
        CHECK(inst.crane(1).start_bay == 1);
        CHECK(inst.crane(1).ready == 3);
        CHECK(inst.crane(2).start_bay == 5);
        CHECK(inst.crane(2).ready == 0);
    }
}

TEST_CASE("meisel layout import") {
    std::istringstream in("2 1 4\n2 1\n1 3\n5 7\n2\n0\n4\n1 2\n");
    Instance inst = convert_meisel(in, "m");
    CHECK(inst.bays == 4);
    CHECK(inst.travel == 2);
    CHECK(inst.safety == 1);
    CHECK(inst.task(1).p == 5);
    CHECK(inst.crane(1).start_bay == 2);
    CHECK(inst.crane(1).ready == 0);
    CHECK(inst.crane(1).final_bay == 4);
    CHECK(inst.prec == std::vector<std::pair<int, int>>{{1, 2}});
}

TEST_CASE("file helpers") {
    namespace fs = std::filesystem;
    auto path = (fs::temp_directory_path() / "qcsp_io_roundtrip.qcsp").string();
    write_file(path, write_instance(two_task_instance()));
    Instance inst = parse_instance_file(path);
    CHECK(inst.name == "qcsp_io_roundtrip"); // directory and extension stripped
    CHECK(write_instance(inst) == write_instance(two_task_instance()));
    CHECK(read_file(path) == write_instance(inst));
    std::remove(path.c_str());
    CHECK_THROWS_AS(parse_instance_file(path), Error);
    CHECK_THROWS_AS(read_file(path), Error);
}
