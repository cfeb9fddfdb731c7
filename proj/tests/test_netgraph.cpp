#include <algorithm>
#include <chrono>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include <wsqkd/netgraph.hpp>

#include "oracles.hpp"

using namespace wsqkd;

namespace {

std::size_t count_invariant(const std::vector<PlanViolation>& v, const std::string& name) {
    return static_cast<std::size_t>(
        std::count_if(v.begin(), v.end(), [&](const PlanViolation& p) { return p.invariant == name; }));
}

std::vector<std::vector<std::size_t>> successor_maps(const NetworkPlan& plan) {
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t w = 0; w < plan.n_wavelengths; ++w) {
        out.push_back(router_permutation(plan, w).mapping);
    }
    return out;
}

}  // namespace

TEST(BuildPlan, TriangleForOneWavelength) {
    const auto plan = build_plan(1);
    EXPECT_EQ(plan.node_count, 3u);
    ASSERT_EQ(plan.cycles.size(), 1u);
    EXPECT_EQ(plan.cycles[0], (std::vector<std::size_t>{0, 1, 2}));
    EXPECT_EQ(plan.links.size(), 3u);
    EXPECT_TRUE(validate_plan(plan).empty());
}

TEST(BuildPlan, FiveNodesArePentagonAndPentagram) {
    const auto plan = build_plan(2);
    EXPECT_EQ(plan.node_count, 5u);
    const auto sigma = find_relabeling(plan, reference_five_node_rule());
    ASSERT_TRUE(sigma.has_value());
    // Under sigma, wavelength 0 steps +1 and wavelength 1 steps +2 around A..E.
    const auto p0 = router_permutation(plan, 0).mapping;
    const auto p1 = router_permutation(plan, 1).mapping;
    for (std::size_t v = 0; v < 5; ++v) {
        EXPECT_EQ((*sigma)[p0[v]], ((*sigma)[v] + 1) % 5);
        EXPECT_EQ((*sigma)[p1[v]], ((*sigma)[v] + 2) % 5);
    }
}

TEST(BuildPlan, NineNodesBruteForce) {
    const auto plan = build_plan(4);
    EXPECT_EQ(plan.node_count, 9u);
    EXPECT_EQ(plan.cycles.size(), 4u);
    EXPECT_EQ(plan.links.size(), 36u);
    EXPECT_TRUE(validate_plan(plan).empty());
    EXPECT_TRUE(oracle::is_hamiltonian_decomposition(successor_maps(plan), 9));
}

TEST(BuildPlan, RejectsZeroWavelengths) { EXPECT_THROW(build_plan(0), std::invalid_argument); }

TEST(BuildPlan, RejectsNonIncreasingWavelengths) {
    EXPECT_THROW(build_plan(2, {1550, 1530}), std::invalid_argument);
    EXPECT_THROW(build_plan(2, {1530}), std::invalid_argument);
}

TEST(BuildPlan, EvenNodeCountSuggestsNextOdd) {
    try {
        plan_for_nodes(6);
        FAIL() << "expected rejection";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("plan for 7 nodes"), std::string::npos);
    }
    EXPECT_EQ(plan_for_nodes(7).n_wavelengths, 3u);
}

TEST(BuildPlan, DeterministicAndValidUpToEight) {
    for (std::size_t n = 1; n <= 8; ++n) {
        const auto a = build_plan(n);
        const auto b = build_plan(n);
        EXPECT_EQ(a.cycles, b.cycles);
        EXPECT_EQ(a.links, b.links);
        EXPECT_TRUE(validate_plan(a).empty()) << "N=" << n;
        EXPECT_EQ(a.links.size(), n * (2 * n + 1));
        EXPECT_TRUE(oracle::is_hamiltonian_decomposition(successor_maps(a), 2 * n + 1)) << "N=" << n;
    }
}

TEST(ValidatePlan, SevenNodesClean) { EXPECT_TRUE(validate_plan(build_plan(3)).empty()); }

TEST(ValidatePlan, DuplicatedEdgeReported) {
    // Replace cycle 1 of the 7-node plan by a Hamiltonian cycle that shares
    // two undirected edges with the other cycles. Sharing exactly one is
    // impossible: the six unused edges would have to close into a cycle.
    auto plan = build_plan(3);
    std::set<std::pair<std::size_t, std::size_t>> others;
    for (std::size_t k : {0u, 2u}) {
        const auto& c = plan.cycles[k];
        for (std::size_t i = 0; i < c.size(); ++i) {
            others.insert(std::minmax(c[i], c[(i + 1) % c.size()]));
        }
    }
    std::vector<std::size_t> perm{1, 2, 3, 4, 5, 6};
    bool found = false;
    do {
        std::vector<std::size_t> cyc{0};
        cyc.insert(cyc.end(), perm.begin(), perm.end());
        std::size_t shared = 0;
        for (std::size_t i = 0; i < cyc.size(); ++i) {
            shared += others.contains(std::minmax(cyc[i], cyc[(i + 1) % cyc.size()])) ? 1 : 0;
        }
        if (shared == 2) {
            plan.cycles[1] = cyc;
            found = true;
        }
    } while (!found && std::next_permutation(perm.begin(), perm.end()));
    ASSERT_TRUE(found);
    derive_links(plan);
    const auto v = validate_plan(plan);
    EXPECT_EQ(count_invariant(v, "edge-disjointness"), 2u);
    EXPECT_EQ(count_invariant(v, "hamiltonicity"), 0u);
}

TEST(ValidatePlan, OmittedNodeReported) {
    auto plan = build_plan(2);
    plan.cycles[0].pop_back();
    derive_links(plan);
    const auto v = validate_plan(plan);
    EXPECT_EQ(count_invariant(v, "hamiltonicity"), 1u);
    EXPECT_GE(count_invariant(v, "coverage"), 1u);
}

TEST(ValidatePlan, WrongPortsReported) {
    auto plan = build_plan(2);
    plan.links[0].router_out_port = 0;
    EXPECT_EQ(count_invariant(validate_plan(plan), "router-ports"), 1u);
}

TEST(RouteLookup, FiveNodeExamplesUnderFieldLabels) {
    // Field labels in plan order make the generated plan match the deployed rule.
    auto plan = build_plan(2, {1530, 1550});
    plan.labels = {"A", "B", "C", "E", "D"};
    const auto A = *find_label(plan, "A");
    const auto B = *find_label(plan, "B");
    const auto D = *find_label(plan, "D");
    const auto ab = route_lookup(plan, A, B);
    EXPECT_EQ(ab.src, A);
    EXPECT_EQ(ab.dst, B);
    EXPECT_EQ(ab.wavelength.nominal_nm, 1530);
    const auto ad = route_lookup(plan, A, D);
    EXPECT_EQ(ad.src, D);
    EXPECT_EQ(ad.dst, A);
    EXPECT_EQ(ad.wavelength.nominal_nm, 1550);
    EXPECT_EQ(route_lookup(plan, B, A), ab);
}

TEST(RouteLookup, Errors) {
    const auto plan = build_plan(2);
    try {
        route_lookup(plan, NodeId{0}, NodeId{0});
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("no self link"), std::string::npos);
    }
    EXPECT_THROW(route_lookup(plan, NodeId{0}, NodeId{5}), std::out_of_range);
}

TEST(RouterPermutation, FieldRule) {
    auto plan = build_plan(2);
    plan.labels = {"A", "B", "C", "E", "D"};
    auto mapped = [&](std::size_t w, const std::string& from) {
        const auto m = router_permutation(plan, w).mapping;
        return plan.labels[m[find_label(plan, from)->index]];
    };
    const std::vector<std::pair<std::string, std::string>> l1{{"A", "B"}, {"B", "C"}, {"C", "D"}, {"D", "E"},
                                                              {"E", "A"}};
    const std::vector<std::pair<std::string, std::string>> l2{{"A", "C"}, {"C", "E"}, {"E", "B"}, {"B", "D"},
                                                              {"D", "A"}};
    for (const auto& [a, b] : l1) {
        EXPECT_EQ(mapped(0, a), b) << a;
    }
    for (const auto& [a, b] : l2) {
        EXPECT_EQ(mapped(1, a), b) << a;
    }
    EXPECT_THROW(router_permutation(plan, 2), std::out_of_range);
}

TEST(RouterPermutation, SingleCycleWithoutFixedPoints) {
    for (std::size_t n = 1; n <= 8; ++n) {
        const auto plan = build_plan(n);
        for (std::size_t w = 0; w < n; ++w) {
            const auto m = router_permutation(plan, w).mapping;
            std::size_t p = 0;
            std::size_t steps = 0;
            do {
                EXPECT_NE(m[p], p);
                p = m[p];
                ++steps;
            } while (p != 0 && steps <= m.size());
            EXPECT_EQ(steps, 2 * n + 1);
        }
    }
}

TEST(NodeSchedule, NodeAInFieldPlan) {
    auto plan = build_plan(2);
    plan.labels = {"A", "B", "C", "E", "D"};
    const auto s = node_schedule(plan, NodeId{0});
    ASSERT_EQ(s.size(), 4u);
    auto label = [&](const ScheduleEntry& e) { return plan.labels[e.peer.index]; };
    EXPECT_EQ(s[0].role, Role::transmit);
    EXPECT_EQ(label(s[0]), "B");
    EXPECT_EQ(s[0].wavelength.index, 0u);
    EXPECT_EQ(s[1].role, Role::receive);
    EXPECT_EQ(label(s[1]), "E");
    EXPECT_EQ(s[1].wavelength.index, 0u);
    EXPECT_EQ(s[2].role, Role::transmit);
    EXPECT_EQ(label(s[2]), "C");
    EXPECT_EQ(s[3].role, Role::receive);
    EXPECT_EQ(label(s[3]), "D");
}

TEST(NodeSchedule, Triangle) {
    const auto s = node_schedule(build_plan(1), NodeId{0});
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0].role, Role::transmit);
    EXPECT_EQ(s[0].peer.index, 1u);
    EXPECT_EQ(s[1].role, Role::receive);
    EXPECT_EQ(s[1].peer.index, 2u);
}

TEST(NodeSchedule, CoversEveryPeerOnce) {
    for (std::size_t n = 1; n <= 6; ++n) {
        const auto plan = build_plan(n);
        for (std::size_t v = 0; v < plan.node_count; ++v) {
            const auto s = node_schedule(plan, NodeId{v});
            ASSERT_EQ(s.size(), 2 * n);
            std::set<std::size_t> peers;
            std::vector<int> tx(n, 0);
            std::vector<int> rx(n, 0);
            for (const auto& e : s) {
                peers.insert(e.peer.index);
                (e.role == Role::transmit ? tx : rx)[e.wavelength.index]++;
            }
            EXPECT_EQ(peers.size(), 2 * n);
            EXPECT_FALSE(peers.contains(v));
            for (std::size_t w = 0; w < n; ++w) {
                EXPECT_EQ(tx[w], 1);
                EXPECT_EQ(rx[w], 1);
            }
        }
    }
    EXPECT_THROW(node_schedule(build_plan(1), NodeId{3}), std::out_of_range);
}

TEST(Export, LinksTextAndDot) {
    const auto plan = build_plan(1);
    const auto text = export_links_text(plan);
    EXPECT_EQ(text, "# src\tdst\twavelength\tnominal_nm\nA\tB\t0\t1530\nB\tC\t0\t1530\nC\tA\t0\t1530\n");
    const auto dot = export_dot(plan);
    EXPECT_NE(dot.find("\"A\" -> \"B\""), std::string::npos);
    EXPECT_EQ(dot.rfind("digraph", 0), 0u);
}

TEST(Labels, Defaults) {
    EXPECT_EQ(default_label(0), "A");
    EXPECT_EQ(default_label(25), "Z");
    EXPECT_EQ(default_label(26), "AA");
    EXPECT_EQ(default_wavelengths_nm(2), (std::vector<double>{1530, 1550}));
}
