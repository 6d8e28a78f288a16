#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "doctest.h"
#include "qcsp/master.hpp"
#include "qcsp/model.hpp"
#include "qcsp/oracle.hpp"
#include "test_support.hpp"

using namespace qcsp;
using test::make_instance;
using test::make_routing;
using test::two_task_instance;

namespace {

// Reference search: every assignment x every per-crane permutation, keeping
// the lexicographically smallest routing among those with minimum eta that
// respect operating ranges, precedence acyclicity, and the cut pool.
struct RefBest {
    Time eta = kInfTime;
    Routing routing;
    bool found = false;
};

void ref_sequences(const Instance& inst, const CutPool& pool, int k, Routing& r, RefBest& best) {
    if (k > inst.q()) {
        if (!precedence_feasible(inst, r).feasible) return;
        for (const Cut& c : pool.cuts())
            if (!c.satisfied_by(inst, r)) return;
        Routing cand = r;
        cand.eta = 0;
        for (int c = 1; c <= inst.q(); ++c) {
            cand.route_cost[static_cast<size_t>(c)] =
                route_cost(inst, c, cand.sequences[static_cast<size_t>(c)]);
            cand.eta = std::max(cand.eta, cand.route_cost[static_cast<size_t>(c)]);
        }
        if (!best.found || cand.eta < best.eta ||
            (cand.eta == best.eta && cand.sequences < best.routing.sequences)) {
            best.found = true;
            best.eta = cand.eta;
            best.routing = cand;
        }
        return;
    }
    auto& seq = r.sequences[static_cast<size_t>(k)];
    std::sort(seq.begin(), seq.end());
    if (seq.empty()) {
        ref_sequences(inst, pool, k + 1, r, best);
        return;
    }
    do {
        ref_sequences(inst, pool, k + 1, r, best);
    } while (std::next_permutation(seq.begin(), seq.end()));
}

RefBest ref_solve(const Instance& inst, const CutPool& pool, bool enforce_limits = true) {
    const int n = inst.n(), q = inst.q();
    RefBest best;
    std::vector<int> assign(static_cast<size_t>(n) + 1, 1);
    while (true) {
        bool ok = true;
        for (int i = 1; i <= n && ok; ++i) {
            auto [lo, hi] = operating_range(inst, assign[static_cast<size_t>(i)], enforce_limits);
            int bay = inst.task(i).bay;
            ok = bay >= lo && bay <= hi;
        }
        if (ok) {
            Routing r(q);
            for (int i = 1; i <= n; ++i)
                r.sequences[static_cast<size_t>(assign[static_cast<size_t>(i)])].push_back(i);
            ref_sequences(inst, pool, 1, r, best);
        }
        int i = 1;
        while (i <= n && assign[static_cast<size_t>(i)] == q) assign[static_cast<size_t>(i++)] = 1;
        if (i > n) break;
        ++assign[static_cast<size_t>(i)];
    }
    return best;
}

// Deterministic cross-platform scrambling for routing-shaped property tests.
std::uint32_t mix(std::uint32_t x) {
    x ^= x >> 16;
    x *= 0x45d9f3bu;
    x ^= x >> 16;
    return x;
}

Routing scrambled_routing(const Instance& inst, std::uint32_t seed) {
    Routing r(inst.q());
    std::vector<std::pair<std::uint32_t, int>> order;
    for (int i = 1; i <= inst.n(); ++i)
        order.emplace_back(mix(static_cast<std::uint32_t>(i) * 2654435761u ^ seed), i);
    std::sort(order.begin(), order.end());
    for (auto [h, i] : order) {
        int k = 1 + static_cast<int>(mix(h ^ seed) % static_cast<std::uint32_t>(inst.q()));
        r.sequences[static_cast<size_t>(k)].push_back(i);
    }
    return r;
}

} // namespace

TEST_CASE("routing arc costs") {
    auto inst = two_task_instance();
    CostTable t = build_costs(inst);
    CHECK(t.c0[1][1] == 5);  // ready 0 + travel 0 + p 5
    CHECK(t.c0[1][2] == 9);  // ready 0 + travel 2 + p 7
    CHECK(t.c[1][2] == 9);   // travel 2 + p 7
    CHECK(t.c[2][1] == 7);   // travel 2 + p 5
    CHECK(t.cT[1][1] == 0);  // free final position
    CHECK(t.empty_cost[1] == 0);

    auto rep = make_instance(5, 2, 1, {{2, 3, 5}}, {{1, 4}});
    CostTable tr = build_costs(rep);
    CHECK(tr.c0[1][1] == 9);      // 3 + 2*1 + 4
    CHECK(tr.cT[1][1] == 8);      // 2 * |1-5|
    CHECK(tr.empty_cost[1] == 6); // 2 * |2-5|, no ready time
}

TEST_CASE("cut literal counting over a routing") {
    auto inst = make_instance(6, 1, 1, {{1}, {4}}, {{1, 2}, {2, 2}, {5, 2}});
    auto r = make_routing(inst, {{1, 2}, {3}});
    const int sink = inst.sink_node();

    Cut cut;
    cut.family = CutFamily::NOGOOD;
    cut.arcs = {{1, 0, 1}, {1, 1, 2}, {1, 2, sink}, {2, 0, 3}, {2, 1, 2}};
    cut.assigns = {{3, 2}, {3, 1}};
    cut.rhs = 4;
    CHECK(cut.lhs(inst, r) == 5); // (2,1,2) and assignment (3,1) are absent
    CHECK_FALSE(cut.satisfied_by(inst, r));

    // An idle crane contributes its start-to-sink arc.
    auto idle = make_routing(inst, {{1, 2, 3}, {}});
    Cut empty_arc;
    empty_arc.arcs = {{2, 0, sink}};
    empty_arc.rhs = 0;
    CHECK(empty_arc.lhs(inst, idle) == 1);
    CHECK(empty_arc.lhs(inst, r) == 0);
}

TEST_CASE("cut pool deduplicates by literal set and rhs") {
    CutPool pool;
    Cut c;
    c.family = CutFamily::NOGOOD;
    c.arcs = {{1, 0, 1}, {1, 1, 3}};
    c.rhs = 1;
    CHECK(pool.add(c));

    Cut same = c;
    same.family = CutFamily::SSET; // family does not distinguish cuts
    std::swap(same.arcs[0], same.arcs[1]);
    same.arcs.push_back({1, 0, 1}); // duplicate literal collapses
    CHECK_FALSE(pool.add(same));

    Cut relaxed = c;
    relaxed.rhs = 2; // different rhs = different cut
    CHECK(pool.add(relaxed));
    CHECK(pool.size() == 2);

    const auto* ids = pool.cuts_with(CutPool::arc_key(1, 0, 1));
    REQUIRE(ids != nullptr);
    CHECK(*ids == std::vector<int>{0, 1});
    CHECK(pool.cuts_with(CutPool::assign_key(1, 1)) == nullptr);
}

TEST_CASE("seeded pool: pair subtours and precedence bridges") {
    auto count_family = [](const CutPool& pool, CutFamily f) {
        int c = 0;
        for (const Cut& cut : pool.cuts())
            if (cut.family == f) ++c;
        return c;
    };

    SUBCASE("one pair subtour per crane") {
        CutPool pool = seed_cut_pool(two_task_instance());
        CHECK(pool.size() == 1);
        const Cut& c = pool.cuts()[0];
        CHECK(c.family == CutFamily::SEC2);
        CHECK(c.arcs == std::vector<ArcLit>{{1, 1, 2}, {1, 2, 1}});
        CHECK(c.rhs == 1);
    }
    SUBCASE("a single task seeds nothing") {
        CHECK(seed_cut_pool(make_instance(3, 1, 1, {{1}}, {{1, 4}})).size() == 0);
    }
    SUBCASE("disjoint precedence pairs bridge into PCB cuts") {
        auto inst = make_instance(8, 1, 1, {{1}, {3}}, {{1, 2}, {3, 2}, {5, 2}, {6, 2}},
                                  {{1, 2}, {3, 4}});
        CutPool pool = seed_cut_pool(inst);
        CHECK(count_family(pool, CutFamily::SEC2) == 12); // C(4,2) pairs x 2 cranes
        CHECK(count_family(pool, CutFamily::PCB) == 4);   // 2 ordered pairs x 2 cranes

        // x^k(i1,j2) + x^k(j1,i2) <= 1 for ((1,2),(3,4)) on crane 1.
        const Cut* pcb = nullptr;
        for (const Cut& c : pool.cuts())
            if (c.family == CutFamily::PCB &&
                c.arcs == std::vector<ArcLit>{{1, 1, 4}, {1, 2, 3}})
                pcb = &c;
        REQUIRE(pcb != nullptr);
        CHECK(pcb->rhs == 1);

        // A route using both bridged arcs interleaves the two precedence
        // chains and cannot be ordered; the cut rejects it combinatorially.
        auto interleaved = make_routing(inst, {{1, 4, 2, 3}, {}});
        CHECK_FALSE(pcb->satisfied_by(inst, interleaved));
        CHECK_FALSE(precedence_feasible(inst, interleaved).feasible);
    }
}

TEST_CASE("precedence feasibility of complete routings") {
    SUBCASE("same-crane order against the precedence") {
        auto inst = make_instance(3, 1, 1, {{1}}, {{1, 5}, {3, 7}}, {{1, 2}});
        CHECK(precedence_feasible(inst, make_routing(inst, {{1, 2}})).feasible);
        auto pc = precedence_feasible(inst, make_routing(inst, {{2, 1}}));
        REQUIRE_FALSE(pc.feasible);
        std::vector<int> cyc = pc.cycle;
        std::sort(cyc.begin(), cyc.end());
        CHECK(cyc == std::vector<int>{1, 2});
    }
    SUBCASE("two cranes deadlock only in the rotated pairing") {
        auto inst = make_instance(6, 1, 1, {{1}, {3}}, {{1, 1}, {3, 1}, {4, 1}, {2, 1}},
                                  {{1, 2}, {3, 4}});
        auto feasible = [&](std::vector<std::vector<int>> seqs) {
            return precedence_feasible(inst, make_routing(inst, std::move(seqs))).feasible;
        };
        CHECK(feasible({{1, 4}, {2, 3}}));
        CHECK(feasible({{1, 4}, {3, 2}}));
        CHECK(feasible({{4, 1}, {3, 2}}));

        auto pc = precedence_feasible(inst, make_routing(inst, {{4, 1}, {2, 3}}));
        REQUIRE_FALSE(pc.feasible); // 1 -> 2 -> 3 -> 4 -> 1
        REQUIRE(pc.cycle.size() == 4);
        std::vector<int> cyc = pc.cycle;
        std::sort(cyc.begin(), cyc.end());
        CHECK(cyc == std::vector<int>{1, 2, 3, 4});
    }
    SUBCASE("three cranes deadlock through a longer rotation") {
        auto inst = make_instance(9, 1, 1, {{1}, {4}, {7}},
                                  {{1, 1}, {2, 1}, {3, 1}, {4, 1}, {5, 1}, {6, 1}},
                                  {{1, 2}, {3, 4}, {5, 6}});
        auto pc = precedence_feasible(inst, make_routing(inst, {{6, 1}, {2, 3}, {4, 5}}));
        REQUIRE_FALSE(pc.feasible);
        CHECK(pc.cycle.size() == 6);
        CHECK(precedence_feasible(inst, make_routing(inst, {{1, 6}, {2, 3}, {4, 5}})).feasible);
    }
}

TEST_CASE("lifted pair subtour construction") {
    auto inst = make_instance(5, 1, 1, {{1}}, {{1, 5}, {3, 7}, {4, 2}},
                              {{1, 2}, {2, 3}});

    SUBCASE("smallest shape: S = {0, j}") {
        Cut c = make_lifted_sec(inst, 1, 2, 1, {0, 2});
        CHECK(c.family == CutFamily::LIFTED_SEC);
        CHECK(c.arcs == std::vector<ArcLit>{{1, 0, 2}, {1, 2, 0}});
        CHECK(c.assigns == std::vector<AssignLit>{{1, 1}});
        CHECK(c.rhs == 1);
        CHECK_FALSE(c.satisfied_by(inst, make_routing(inst, {{2, 1, 3}})));
        CHECK(c.satisfied_by(inst, make_routing(inst, {{1, 2, 3}})));
    }
    SUBCASE("larger S counts its internal arcs") {
        Cut c = make_lifted_sec(inst, 1, 2, 1, {0, 3, 2});
        CHECK(c.rhs == 2);
        CHECK(c.arcs.size() == 6); // ordered pairs within {0, 2, 3}
        CHECK(c.assigns == std::vector<AssignLit>{{1, 1}});
        CHECK_FALSE(c.satisfied_by(inst, make_routing(inst, {{3, 2, 1}})));
        CHECK(c.satisfied_by(inst, make_routing(inst, {{1, 2, 3}})));
    }
    SUBCASE("transitive precedence qualifies") {
        Cut c = make_lifted_sec(inst, 1, 3, 1, {0, 3});
        CHECK(c.assigns == std::vector<AssignLit>{{1, 1}});
    }
    SUBCASE("construction is validated") {
        CHECK_THROWS_AS(make_lifted_sec(inst, 1, 2, 1, {2}), Error);       // 0 missing
        CHECK_THROWS_AS(make_lifted_sec(inst, 1, 2, 1, {0, 1, 2}), Error); // i inside S
        CHECK_THROWS_AS(make_lifted_sec(inst, 1, 2, 1, {0, 3}), Error);    // j missing
        CHECK_THROWS_AS(make_lifted_sec(inst, 3, 1, 1, {0, 1}), Error);    // (3,1) unrelated
    }
}

TEST_CASE("cross-crane precedence-cycle cut construction") {
    auto inst = make_instance(6, 1, 1, {{1}, {3}}, {{1, 1}, {3, 1}, {4, 1}, {2, 1}},
                              {{1, 2}, {3, 4}});
    std::vector<CrossLeg> legs = {{1, 2, 2, {3}}, {3, 4, 1, {1}}};
    Cut c = make_cross_prec_cut(inst, legs);
    CHECK(c.family == CutFamily::CROSS_PREC);
    CHECK(c.rhs == 1);
    CHECK(c.arcs == std::vector<ArcLit>{{2, 2, 3}, {1, 4, 1}}); // leg order
    CHECK_FALSE(c.satisfied_by(inst, make_routing(inst, {{4, 1}, {2, 3}})));
    CHECK(c.satisfied_by(inst, make_routing(inst, {{1, 4}, {2, 3}})));
    CHECK(c.satisfied_by(inst, make_routing(inst, {{4, 1}, {3, 2}})));

    CHECK_THROWS_AS(make_cross_prec_cut(inst, {legs[0]}), Error); // needs >= 2 legs
    std::vector<CrossLeg> unrelated = {{1, 3, 2, {3}}, {3, 4, 1, {1}}};
    CHECK_THROWS_AS(make_cross_prec_cut(inst, unrelated), Error); // (1,3) not a precedence
    std::vector<CrossLeg> broken = {{1, 2, 2, {3}}, {3, 4, 1, {2}}};
    CHECK_THROWS_AS(make_cross_prec_cut(inst, broken), Error); // segment reuses task 2
}

TEST_CASE("separation returns a cut the infeasible routing violates") {
    SUBCASE("same-crane violation yields a lifted pair subtour") {
        auto inst = make_instance(3, 1, 1, {{1}}, {{1, 5}, {3, 7}}, {{1, 2}});
        auto r = make_routing(inst, {{2, 1}});
        auto cut = separate_precedence_cut(inst, r);
        REQUIRE(cut.has_value());
        CHECK(cut->family == CutFamily::LIFTED_SEC);
        CHECK_FALSE(cut->satisfied_by(inst, r));
        CHECK_FALSE(separate_precedence_cut(inst, make_routing(inst, {{1, 2}})).has_value());
    }
    SUBCASE("cross-crane rotation yields a cycle cut") {
        auto inst = make_instance(6, 1, 1, {{1}, {3}}, {{1, 1}, {3, 1}, {4, 1}, {2, 1}},
                                  {{1, 2}, {3, 4}});
        auto r = make_routing(inst, {{4, 1}, {2, 3}});
        auto cut = separate_precedence_cut(inst, r);
        REQUIRE(cut.has_value());
        CHECK(cut->family == CutFamily::CROSS_PREC);
        CHECK_FALSE(cut->satisfied_by(inst, r));
    }
    SUBCASE("every infeasible scrambled routing is separated") {
        GenParams gp;
        gp.n_min = 4;
        gp.n_max = 6;
        gp.tasks_per_bay = 2.0;
        int infeasible_seen = 0;
        for (std::uint64_t seed = 1; seed <= 30; ++seed) {
            gp.seed = seed;
            Instance inst = generate(gp);
            for (std::uint32_t v = 0; v < 8; ++v) {
                Routing r = scrambled_routing(inst, static_cast<std::uint32_t>(seed * 97 + v));
                auto pc = precedence_feasible(inst, r);
                auto cut = separate_precedence_cut(inst, r);
                if (pc.feasible) {
                    CHECK_FALSE(cut.has_value());
                } else {
                    ++infeasible_seen;
                    REQUIRE(cut.has_value());
                    CHECK_FALSE(cut->satisfied_by(inst, r));
                    bool expected_family = cut->family == CutFamily::LIFTED_SEC ||
                                           cut->family == CutFamily::CROSS_PREC;
                    CHECK(expected_family);
                }
            }
        }
        CHECK(infeasible_seen > 20); // the scrambles must actually exercise the separator
    }
}

TEST_CASE("routing search finds the exact min-max route") {
    auto inst = two_task_instance();
    CostTable costs = build_costs(inst);
    CutPool pool = seed_cut_pool(inst);

    MasterResult res = solve_master(inst, costs, pool);
    CHECK(res.status == MasterResult::Status::OPTIMAL);
    REQUIRE(res.have_routing);
    CHECK(res.eta == 14);
    CHECK(res.lb == 14);
    CHECK(res.routing.sequences[1] == std::vector<int>{1, 2});
    CHECK(res.routing.route_cost[1] == 14);

    SUBCASE("an upper bound at the optimum proves BOUND") {
        MasterResult bound = solve_master(inst, costs, pool, 14);
        CHECK(bound.status == MasterResult::Status::BOUND);
        CHECK(bound.lb == 14);
        CHECK_FALSE(bound.have_routing);
        MasterResult above = solve_master(inst, costs, pool, 15);
        CHECK(above.status == MasterResult::Status::OPTIMAL);
        CHECK(above.eta == 14);
    }
    SUBCASE("a no-good forces the next-best routing") {
        const int sink = inst.sink_node();
        Cut nogood;
        nogood.family = CutFamily::NOGOOD;
        nogood.arcs = {{1, 0, 1}, {1, 1, 2}, {1, 2, sink}};
        nogood.rhs = 2;
        CHECK(pool.add(nogood));
        MasterResult res2 = solve_master(inst, costs, pool);
        CHECK(res2.status == MasterResult::Status::OPTIMAL);
        CHECK(res2.eta == 16);
        CHECK(res2.routing.sequences[1] == std::vector<int>{2, 1});
    }
}

TEST_CASE("routing search handles degenerate shapes") {
    SUBCASE("no tasks: eta is the largest repositioning cost") {
        auto inst = make_instance(5, 1, 1, {{1, 0, 3}, {4, 0, 4}}, {});
        MasterResult res = solve_master(inst, build_costs(inst), seed_cut_pool(inst));
        CHECK(res.status == MasterResult::Status::OPTIMAL);
        CHECK(res.eta == 2);
        CHECK(res.routing.sequences[1].empty());
        CHECK(res.routing.sequences[2].empty());
    }
    SUBCASE("a task no crane may reach makes the search come up empty") {
        auto inst = make_instance(3, 1, 1, {{1}, {3}}, {{2, 4}});
        // crane ranges are [1,1] and [3,3]; bay 2 is uncoverable
        MasterResult res = solve_master(inst, build_costs(inst), seed_cut_pool(inst));
        CHECK(res.status == MasterResult::Status::BOUND);
        MasterResult relaxed =
            solve_master(inst, build_costs(inst), seed_cut_pool(inst), kInfTime, {}, false);
        CHECK(relaxed.status == MasterResult::Status::OPTIMAL);
        CHECK(relaxed.eta == 5); // nearer crane travels 1 and works 4
    }
    SUBCASE("equal-cost ties resolve to the lexicographically smallest routing") {
        auto inst = make_instance(10, 1, 1, {{4}, {6}}, {{4, 5}, {4, 5}});
        MasterResult res = solve_master(inst, build_costs(inst), seed_cut_pool(inst));
        CHECK(res.eta == 7); // the farther crane travels 2 and works 5
        CHECK(res.routing.sequences[1] == std::vector<int>{1});
        CHECK(res.routing.sequences[2] == std::vector<int>{2});
    }
}

TEST_CASE("routing search agrees with exhaustive enumeration") {
    GenParams gp;
    gp.n_min = 2;
    gp.n_max = 5;
    gp.q_min = 2;
    gp.q_max = 3;
    gp.prec_density = 0.7;
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        gp.seed = seed;
        Instance inst = generate(gp);
        CAPTURE(seed);
        CostTable costs = build_costs(inst);
        CutPool pool = seed_cut_pool(inst);

        RefBest ref = ref_solve(inst, pool);
        MasterResult got = solve_master(inst, costs, pool);
        REQUIRE(ref.found);
        REQUIRE(got.status == MasterResult::Status::OPTIMAL);
        CHECK(got.eta == ref.eta);
        CHECK(got.routing.sequences == ref.routing.sequences);

        // Exclude the optimum and re-solve: still matches the reference.
        Cut nogood;
        nogood.family = CutFamily::NOGOOD;
        const int sink = inst.sink_node();
        for (int k = 1; k <= inst.q(); ++k) {
            const auto& seq = got.routing.sequences[static_cast<size_t>(k)];
            int prev = 0;
            for (int t : seq) {
                nogood.arcs.push_back({k, prev, t});
                prev = t;
            }
            nogood.arcs.push_back({k, prev, sink});
            nogood.rhs += static_cast<int>(seq.size()) + 1;
        }
        nogood.rhs -= 1;
        CHECK(pool.add(nogood));

        RefBest ref2 = ref_solve(inst, pool);
        MasterResult got2 = solve_master(inst, costs, pool);
        if (ref2.found) {
            REQUIRE(got2.status == MasterResult::Status::OPTIMAL);
            CHECK(got2.eta == ref2.eta);
            CHECK(got2.routing.sequences == ref2.routing.sequences);
            CHECK(got2.eta >= got.eta);
        } else {
            CHECK(got2.status == MasterResult::Status::BOUND);
        }
    }
}

TEST_CASE("routing search respects budgets honestly") {
    GenParams gp;
    gp.n_min = 7;
    gp.n_max = 7;
    gp.q_min = 3;
    gp.q_max = 3;
    gp.bays_min = 8;
    gp.bays_max = 8;
    gp.seed = 11;
    Instance inst = generate(gp);
    CostTable costs = build_costs(inst);
    CutPool pool = seed_cut_pool(inst);

    MasterResult full = solve_master(inst, costs, pool);
    REQUIRE(full.status == MasterResult::Status::OPTIMAL);

    SearchBudget tight;
    tight.node_limit = 3;
    MasterResult cut_short = solve_master(inst, costs, pool, kInfTime, tight);
    CHECK(cut_short.status == MasterResult::Status::TIMEOUT);
    CHECK(cut_short.nodes <= full.nodes);
    CHECK(cut_short.lb <= full.eta); // frontier bound stays admissible
    if (cut_short.have_routing) CHECK(cut_short.eta >= full.eta);
}

TEST_CASE("node lower bound is exact on leaves and admissible inside") {
    auto inst = two_task_instance();
    CostTable costs = build_costs(inst);

    PartialRouting done(1);
    done.sequences[1] = {1, 2};
    done.closed[1] = 1;
    CHECK(lower_bound(inst, costs, done) == 14);

    PartialRouting root(1);
    CHECK(lower_bound(inst, costs, root) == 14); // averaged-work term is tight here

    PartialRouting after1(1);
    after1.sequences[1] = {1};
    CHECK(lower_bound(inst, costs, after1) == 14);

    PartialRouting after2(1);
    after2.sequences[1] = {2};
    CHECK(lower_bound(inst, costs, after2) == 16); // task 1 can only follow task 2 now

    SUBCASE("unplaceable task collapses the node") {
        auto tight = make_instance(3, 1, 1, {{1}, {3}}, {{2, 4}});
        CHECK(lower_bound(tight, build_costs(tight), PartialRouting(2)) == kInfTime);
        CHECK(lower_bound(tight, build_costs(tight), PartialRouting(2), false) < kInfTime);
    }
}
