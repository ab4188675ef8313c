#include <algorithm>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "medkit/error.hpp"
#include "medkit/graph.hpp"
#include "oracles.hpp"

namespace {

using medkit::DirectedGraph;
using medkit::Error;
using medkit::ErrorCode;
using medkit::VarSet;

const std::string kFixtures = MEDKIT_FIXTURES_DIR;

template <typename F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected medkit::Error";
    return ErrorCode::kInvalidArgument;
}

DirectedGraph chain() { return DirectedGraph::build({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}}); }
DirectedGraph fork() { return DirectedGraph::build({"A", "B", "C"}, {{"B", "A"}, {"B", "C"}}); }
DirectedGraph collider() { return DirectedGraph::build({"A", "B", "C", "D"}, {{"A", "B"}, {"C", "B"}, {"B", "D"}}); }

TEST(GraphBuild, RejectsMalformedInput) {
    EXPECT_EQ(code_of([] { DirectedGraph::build({"A", "A"}, {}); }), ErrorCode::kInvalidArgument);
    EXPECT_EQ(code_of([] { DirectedGraph::build({"A"}, {{"A", "B"}}); }), ErrorCode::kUnknownEndpoint);
    EXPECT_EQ(code_of([] { DirectedGraph::build({"A"}, {{"A", "A"}}); }), ErrorCode::kCycleDetected);
    EXPECT_EQ(code_of([] { DirectedGraph::build({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}, {"C", "A"}}); }),
              ErrorCode::kCycleDetected);
    EXPECT_EQ(code_of([] { DirectedGraph::build({"A", "B"}, {{"A", "B"}, {"A", "B"}}); }), ErrorCode::kDuplicateEdge);
    EXPECT_EQ(code_of([] { chain().id("Q"); }), ErrorCode::kUnknownNode);
}

TEST(GraphBuild, TopologicalOrderRespectsEdges) {
    medkit::testing::Rng rng(7);
    for (int rep = 0; rep < 50; ++rep) {
        auto g = medkit::testing::random_dag(rng, 7, 0.4);
        std::vector<std::size_t> pos(g.size());
        const auto& order = g.topological_order();
        ASSERT_EQ(order.size(), g.size());
        for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
        for (const auto& e : g.edges()) EXPECT_LT(pos[g.id(e.parent)], pos[g.id(e.child)]);
    }
}

TEST(GraphBuild, AncestorsAndDescendantsExcludeSelf) {
    auto g = chain();
    EXPECT_TRUE(medkit::same_members(g.descendants({"A"}), {"B", "C"}));
    EXPECT_TRUE(medkit::same_members(g.ancestors({"C"}), {"A", "B"}));
    EXPECT_TRUE(g.ancestors({"A"}).empty());
}

TEST(DSeparation, ChainForkCollider) {
    EXPECT_FALSE(d_separated(chain(), {{"A"}, {"C"}, {}}));
    EXPECT_TRUE(d_separated(chain(), {{"A"}, {"C"}, {"B"}}));
    EXPECT_FALSE(d_separated(fork(), {{"A"}, {"C"}, {}}));
    EXPECT_TRUE(d_separated(fork(), {{"A"}, {"C"}, {"B"}}));
    EXPECT_TRUE(d_separated(collider(), {{"A"}, {"C"}, {}}));
    EXPECT_FALSE(d_separated(collider(), {{"A"}, {"C"}, {"B"}}));
    // Conditioning on a descendant of the collider also opens it.
    EXPECT_FALSE(d_separated(collider(), {{"A"}, {"C"}, {"D"}}));
}

TEST(DSeparation, RejectsBadQueries) {
    EXPECT_EQ(code_of([] { d_separated(chain(), {{}, {"C"}, {}}); }), ErrorCode::kInvalidArgument);
    EXPECT_EQ(code_of([] { d_separated(chain(), {{"A"}, {"A"}, {}}); }), ErrorCode::kOverlappingSets);
    EXPECT_EQ(code_of([] { d_separated(chain(), {{"A"}, {"C"}, {"A"}}); }), ErrorCode::kOverlappingSets);
    EXPECT_EQ(code_of([] { d_separated(chain(), {{"A"}, {"Q"}, {}}); }), ErrorCode::kUnknownNode);
}

TEST(DSeparation, FigureOneClaims) {
    auto g = medkit::read_graph_file(kFixtures + "/figure1.graph");
    EXPECT_TRUE(d_separated(g, {{"X"}, {"Z"}, {}}));
    EXPECT_FALSE(d_separated(g, {{"X"}, {"Y"}, {"S", "Z"}}));
    EXPECT_FALSE(d_separated(g, {{"S"}, {"Y"}, {"X", "Z"}}));
}

TEST(DSeparation, FigureTwoChain) {
    auto g = medkit::read_graph_file(kFixtures + "/figure2.graph");
    EXPECT_TRUE(d_separated(g, {{"X"}, {"S2"}, {"S1"}}));
    EXPECT_TRUE(d_separated(g, {{"Y"}, {"S1"}, {"X", "S2"}}));
    EXPECT_FALSE(d_separated(g, {{"X"}, {"S2"}, {}}));
}

// Property: Bayes-ball agrees with exhaustive path enumeration.
TEST(DSeparationProperty, AgreesWithPathEnumeration) {
    medkit::testing::Rng rng(11);
    int separated = 0, connected = 0;
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t n = 3 + rng.index(5);
        auto g = medkit::testing::random_dag(rng, n, rng.uniform(0.2, 0.7));
        VarSet pool = g.nodes();
        std::shuffle(pool.begin(), pool.end(), rng.engine());
        VarSet a{pool[0]}, b{pool[1]}, c;
        for (std::size_t i = 2; i < pool.size(); ++i) {
            const auto r = rng.index(4);
            if (r == 0) a.push_back(pool[i]);
            else if (r == 1) b.push_back(pool[i]);
            else if (r == 2) c.push_back(pool[i]);
        }
        const bool lib = d_separated(g, {a, b, c});
        EXPECT_EQ(lib, medkit::testing::path_d_separated(g, a, b, c))
            << medkit::format_graph(g) << " A=" << medkit::format_set(a) << " B=" << medkit::format_set(b)
            << " C=" << medkit::format_set(c);
        (lib ? separated : connected)++;
    }
    EXPECT_GT(separated, 20);
    EXPECT_GT(connected, 20);
}

TEST(DSeparationProperty, SymmetricInAB) {
    medkit::testing::Rng rng(12);
    for (int rep = 0; rep < 200; ++rep) {
        auto g = medkit::testing::random_dag(rng, 6, 0.4);
        VarSet pool = g.nodes();
        std::shuffle(pool.begin(), pool.end(), rng.engine());
        VarSet a{pool[0]}, b{pool[1], pool[2]}, c{pool[3]};
        EXPECT_EQ(d_separated(g, {a, b, c}), d_separated(g, {b, a, c}));
    }
}

// Property: d-separation implies independence in any distribution Markov to the graph.
TEST(DSeparationProperty, SoundForMarkovDistributions) {
    medkit::testing::Rng rng(13);
    int checked = 0;
    for (int rep = 0; rep < 60; ++rep) {
        auto g = medkit::testing::random_dag(rng, 5, 0.45);
        std::vector<std::size_t> cards(g.size());
        for (auto& c : cards) c = 2 + rng.index(2);
        auto d = medkit::testing::markov_distribution(rng, g, cards);
        for (const auto& a : g.nodes()) {
            for (const auto& b : g.nodes()) {
                if (a >= b) continue;
                VarSet rest;
                for (const auto& n : g.nodes()) {
                    if (n != a && n != b) rest.push_back(n);
                }
                auto c = medkit::testing::random_subset(rng, rest, rest.size());
                if (d_separated(g, {{a}, {b}, c})) {
                    ++checked;
                    EXPECT_LT(medkit::testing::ci_gap(d, {a}, {b}, c), 1e-12);
                }
            }
        }
    }
    EXPECT_GT(checked, 50);
}

TEST(MarkovBoundary, ParentsChildrenSpouses) {
    auto g = medkit::read_graph_file(kFixtures + "/figure1.graph");
    EXPECT_TRUE(medkit::same_members(graphical_markov_boundary(g, "S"), {"X", "Z", "Y"}));
    EXPECT_TRUE(medkit::same_members(graphical_markov_boundary(g, "X"), {"S", "Y", "Z"}));
    auto c = collider();
    EXPECT_TRUE(medkit::same_members(graphical_markov_boundary(c, "A"), {"B", "C"}));
    EXPECT_TRUE(medkit::same_members(graphical_markov_boundary(c, "D"), {"B"}));
}

TEST(MarkovBoundaryProperty, ShieldsTargetFromRest) {
    medkit::testing::Rng rng(14);
    for (int rep = 0; rep < 100; ++rep) {
        auto g = medkit::testing::random_dag(rng, 7, 0.35);
        const auto& target = g.nodes()[rng.index(g.size())];
        auto mb = graphical_markov_boundary(g, target);
        VarSet rest;
        for (const auto& n : g.nodes()) {
            if (n != target && !medkit::contains(mb, n)) rest.push_back(n);
        }
        if (rest.empty()) continue;
        EXPECT_TRUE(d_separated(g, {{target}, rest, mb}));
    }
}

TEST(Audit, FigureOnePasses) {
    auto g = medkit::read_graph_file(kFixtures + "/figure1.graph");
    auto r = audit_identification_assumptions(g, "X", "Y", {"S"}, {"Z"});
    EXPECT_TRUE(r.randomization.passed);
    EXPECT_TRUE(r.covariate_sufficiency.passed);
    EXPECT_TRUE(r.all_passed());
    EXPECT_FALSE(r.caveat.empty());
}

TEST(Audit, MissingCovariateFails) {
    auto g = medkit::read_graph_file(kFixtures + "/figure1.graph");
    auto r = audit_identification_assumptions(g, "X", "Y", {"S"}, {});
    EXPECT_TRUE(r.randomization.passed);
    EXPECT_FALSE(r.covariate_sufficiency.passed);
}

TEST(Audit, ConfoundedTreatmentFails) {
    auto g = DirectedGraph::build({"U", "X", "S", "Y"}, {{"U", "X"}, {"U", "Y"}, {"X", "S"}, {"S", "Y"}});
    auto r = audit_identification_assumptions(g, "X", "Y", {"S"}, {});
    EXPECT_FALSE(r.randomization.passed);
    EXPECT_FALSE(r.all_passed());
}

TEST(Audit, CovariateDescendantOfMediatorFails) {
    auto g = DirectedGraph::build({"X", "S", "Z", "Y"}, {{"X", "S"}, {"S", "Z"}, {"Z", "Y"}, {"S", "Y"}});
    auto r = audit_identification_assumptions(g, "X", "Y", {"S"}, {"Z"});
    EXPECT_FALSE(r.covariate_sufficiency.passed);
    EXPECT_FALSE(r.subchecks.at(0).passed);
}

TEST(Audit, RejectsRoleOverlap) {
    auto g = medkit::read_graph_file(kFixtures + "/figure1.graph");
    EXPECT_EQ(code_of([&] { audit_identification_assumptions(g, "X", "Y", {"S"}, {"S"}); }),
              ErrorCode::kOverlappingSets);
}

TEST(GraphIo, RoundTrip) {
    medkit::testing::Rng rng(15);
    for (int rep = 0; rep < 30; ++rep) {
        auto g = medkit::testing::random_dag(rng, 6, 0.4);
        auto h = medkit::parse_graph(medkit::format_graph(g));
        EXPECT_EQ(g.nodes(), h.nodes());
        EXPECT_EQ(g.edges(), h.edges());
    }
}

TEST(GraphIo, ParseErrorsCarryLineNumbers) {
    try {
        medkit::parse_graph("nodes A B\nedge A B\nedge A\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kParseError);
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
    EXPECT_EQ(code_of([] { medkit::parse_graph("edge A B\n"); }), ErrorCode::kParseError);
    EXPECT_EQ(code_of([] { medkit::parse_graph("nodes A B\nedge A B\nedge B A\n"); }), ErrorCode::kCycleDetected);
    EXPECT_EQ(code_of([] { medkit::read_graph_file("/nonexistent/graph"); }), ErrorCode::kParseError);
}

}  // namespace
