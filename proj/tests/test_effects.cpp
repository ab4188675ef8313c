#include <cmath>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "medkit/effects.hpp"
#include "medkit/error.hpp"
#include "oracles.hpp"

namespace {

using medkit::DiscreteJointDistribution;
using medkit::EffectQuery;
using medkit::Error;
using medkit::ErrorCode;
using medkit::NaturalEffectForm;

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

// pr(x1)=0.5, pr(s1|x1)=0.8, pr(s1|x2)=0.3, pr(y1|x,s) = .9 .6 .5 .2.
DiscreteJointDistribution textbook() {
    const double px[2] = {0.5, 0.5};
    const double ps1[2] = {0.8, 0.3};
    const double py1[2][2] = {{0.9, 0.6}, {0.5, 0.2}};
    std::vector<double> t;
    for (int x = 0; x < 2; ++x) {
        for (int s = 0; s < 2; ++s) {
            const double pxs = px[x] * (s == 0 ? ps1[x] : 1 - ps1[x]);
            t.push_back(pxs * py1[x][s]);
            t.push_back(pxs * (1 - py1[x][s]));
        }
    }
    return DiscreteJointDistribution({{"X", {"x1", "x2"}}, {"S", {"s1", "s2"}}, {"Y", {"y1", "y2"}}}, t);
}

EffectQuery textbook_query() { return {"X", "Y", "x1", "x2", "y1", {"S"}, {}}; }

TEST(Effects, TextbookValues) {
    auto d = textbook();
    auto q = textbook_query();
    EXPECT_NEAR(medkit::nde(d, q).value, 0.40, 1e-14);
    EXPECT_NEAR(medkit::nie(d, q).value, 0.15, 1e-14);
    EXPECT_NEAR(medkit::te(d, q).value, 0.55, 1e-14);
    EXPECT_NEAR(medkit::cde(d, q, {{"S", "s1"}}).value, 0.40, 1e-14);
    EXPECT_NEAR(medkit::cde(d, q, {{"S", "s2"}}).value, 0.40, 1e-14);
    EXPECT_EQ(medkit::nde(d, q).kind, medkit::EffectKind::kNDE);
    EXPECT_EQ(medkit::to_string(medkit::EffectKind::kNIE), "NIE");
}

TEST(Effects, SameLevelGivesZero) {
    auto d = textbook();
    EffectQuery q{"X", "Y", "x1", "x1", "y1", {"S"}, {}};
    EXPECT_EQ(medkit::nde(d, q).value, 0.0);
    EXPECT_EQ(medkit::nie(d, q).value, 0.0);
    EXPECT_EQ(medkit::te(d, q).value, 0.0);
}

TEST(Effects, Table2MatchesEnumeration) {
    auto d = medkit::read_distribution_file(kFixtures + "/table2.csv");
    EffectQuery q{"X", "Y", "x1", "x0", "y1", {"S"}, {"Z"}};
    auto ref = medkit::testing::natural_effects(d, "X", "Y", "x1", "x0", "y1", {"S", "Z"});
    EXPECT_NEAR(medkit::nde(d, q).value, ref.nde, 1e-14);
    EXPECT_NEAR(medkit::nie(d, q).value, ref.nie, 1e-14);
    EXPECT_NEAR(medkit::te(d, q).value, ref.te, 1e-14);
}

TEST(Effects, CdeAveragesOverCovariateMarginal) {
    auto d = medkit::read_distribution_file(kFixtures + "/table2.csv");
    const medkit::testing::CellTable t(d);
    using medkit::testing::matches;
    EffectQuery q{"X", "Y", "x1", "x0", "y1", {"S"}, {"Z"}};
    double expect = 0.0;
    for (const std::string z : {"z1", "z0"}) {
        const double a = t.cond(matches({{"Y", "y1"}}), matches({{"X", "x1"}, {"S", "s1"}, {"Z", z}}));
        const double b = t.cond(matches({{"Y", "y1"}}), matches({{"X", "x0"}, {"S", "s1"}, {"Z", z}}));
        expect += (a - b) * t.prob(matches({{"Z", z}}));
    }
    EXPECT_NEAR(medkit::cde(d, q, {{"S", "s1"}}).value, expect, 1e-14);
    EXPECT_EQ(code_of([&] { medkit::cde(d, q, {}); }), ErrorCode::kInvalidArgument);
}

TEST(Effects, ValidationErrors) {
    auto d = textbook();
    EXPECT_EQ(code_of([&] { medkit::nde(d, {"X", "X", "x1", "x2", "y1", {}, {}}); }), ErrorCode::kOverlappingSets);
    EXPECT_EQ(code_of([&] { medkit::nde(d, {"X", "Y", "x1", "x9", "y1", {"S"}, {}}); }), ErrorCode::kInvalidArgument);
    EXPECT_EQ(code_of([&] { medkit::nde(d, {"X", "Y", "x1", "x2", "y1", {"Q"}, {}}); }), ErrorCode::kUnknownVariable);
    EXPECT_EQ(code_of([&] { medkit::nde(d, {"X", "Y", "x1", "x2", "y1", {"S"}, {"S"}}); }), ErrorCode::kOverlappingSets);
    EXPECT_EQ(code_of([&] { textbook_query().validate(d); EffectQuery{"X", "Y", "x1", "x1", "y1", {}, {}}.validate(d); }),
              ErrorCode::kInvalidArgument);
}

TEST(Effects, PositivityViolation) {
    auto d = medkit::parse_distribution_csv(
        "X,S,Y,prob\nx1,s1,y1,0.3\nx1,s1,y2,0.2\nx1,s2,y1,0\nx1,s2,y2,0\n"
        "x2,s1,y1,0.1\nx2,s1,y2,0.1\nx2,s2,y1,0.2\nx2,s2,y2,0.1\n");
    EffectQuery q{"X", "Y", "x1", "x2", "y1", {"S"}, {}};
    EXPECT_EQ(code_of([&] { medkit::nde(d, q); }), ErrorCode::kPositivityViolation);
    EXPECT_EQ(code_of([&] { medkit::nie(d, q); }), ErrorCode::kPositivityViolation);
    EXPECT_EQ(code_of([&] { medkit::cde(d, q, {{"S", "s2"}}); }), ErrorCode::kPositivityViolation);
    // The reverse contrast only weights strata reachable under x1, so it is defined.
    EffectQuery r{"X", "Y", "x2", "x1", "y1", {"S"}, {}};
    EXPECT_NO_THROW(medkit::nde(d, r));
    EXPECT_NO_THROW(medkit::te(d, q));
}

DiscreteJointDistribution random_case(medkit::testing::Rng& rng, std::size_t& extra) {
    extra = 1 + rng.index(4);  // 3-6 variables in total
    return medkit::testing::random_binary_treatment(rng, extra, 2 + rng.index(2));
}

TEST(EffectsProperty, MatchEnumerationOracle) {
    medkit::testing::Rng rng(31);
    for (int rep = 0; rep < 100; ++rep) {
        std::size_t extra = 0;
        auto d = random_case(rng, extra);
        medkit::VarSet pool;
        for (std::size_t i = 0; i < extra; ++i) pool.push_back(std::string(1, static_cast<char>('A' + i)));
        auto u = medkit::testing::random_subset(rng, pool, pool.size(), false);
        EffectQuery q{"X", "Y", "x1", "x2", "y2", u, {}};
        auto ref = medkit::testing::natural_effects(d, "X", "Y", "x1", "x2", "y2", u);
        EXPECT_NEAR(medkit::nde(d, q).value, ref.nde, 1e-13);
        EXPECT_NEAR(medkit::nie(d, q).value, ref.nie, 1e-13);
        EXPECT_NEAR(medkit::te(d, q).value, ref.te, 1e-13);
    }
}

TEST(EffectsProperty, DecompositionIdentity) {
    medkit::testing::Rng rng(32);
    for (int rep = 0; rep < 300; ++rep) {
        std::size_t extra = 0;
        auto d = random_case(rng, extra);
        medkit::VarSet pool;
        for (std::size_t i = 0; i < extra; ++i) pool.push_back(std::string(1, static_cast<char>('A' + i)));
        auto s = medkit::testing::random_subset(rng, pool, pool.size());
        auto z = medkit::set_difference(medkit::testing::random_subset(rng, pool, pool.size()), s);
        EffectQuery q{"X", "Y", "x1", "x2", "y1", s, z};
        const double total = medkit::te(d, q).value;
        EXPECT_NEAR(medkit::nde(d, q).value + medkit::nie(d, q).value, total, 1e-12);
    }
}

TEST(EffectsProperty, AntisymmetricInArms) {
    medkit::testing::Rng rng(33);
    for (int rep = 0; rep < 100; ++rep) {
        auto d = medkit::testing::random_binary_treatment(rng, 2);
        EffectQuery q{"X", "Y", "x1", "x2", "y1", {"A", "B"}, {}};
        EffectQuery r{"X", "Y", "x2", "x1", "y1", {"A", "B"}, {}};
        EXPECT_NEAR(medkit::te(d, q).value, -medkit::te(d, r).value, 1e-14);
        EXPECT_NEAR(medkit::cde(d, q, {{"A", "a"}, {"B", "b"}}).value, -medkit::cde(d, r, {{"A", "a"}, {"B", "b"}}).value, 1e-14);
    }
}

TEST(EffectsProperty, CovariateFormMatchesArmFormWhenCovariatesRandomized) {
    // With X independent of Z, pr(s|x',z)pr(z) = pr(s,z|x') so both forms coincide.
    medkit::testing::Rng rng(34);
    auto g = medkit::DirectedGraph::build({"X", "Z", "S", "Y"},
                                          {{"X", "S"}, {"Z", "S"}, {"Z", "Y"}, {"S", "Y"}, {"X", "Y"}});
    for (int rep = 0; rep < 100; ++rep) {
        auto d = medkit::testing::markov_distribution(rng, g, {2, 3, 2, 2});
        EffectQuery q{"X", "Y", "v0", "v1", "v0", {"S"}, {"Z"}};
        EXPECT_NEAR(medkit::nde(d, q, NaturalEffectForm::kCovariateWeighted).value,
                    medkit::nde(d, q, NaturalEffectForm::kArmConditional).value, 1e-13);
        EXPECT_NEAR(medkit::nie(d, q, NaturalEffectForm::kCovariateWeighted).value,
                    medkit::nie(d, q, NaturalEffectForm::kArmConditional).value, 1e-13);
    }
}

TEST(Propensity, ScoreLevelsAreConditionalTreatmentProbabilities) {
    auto d = medkit::read_distribution_file(kFixtures + "/table2.csv");
    auto r = medkit::propensity_reduce(d, "X", {"S", "Z"});
    EXPECT_TRUE(r.schema().has("PS"));
    EXPECT_FALSE(r.schema().has("S"));
    EXPECT_EQ(r.variables().back().name, "PS");
    const auto& levels = r.variable("PS").levels;
    EXPECT_EQ(levels.size(), 4u);
    const medkit::testing::CellTable t(d);
    using medkit::testing::matches;
    const double b = t.cond(matches({{"X", "x1"}}), matches({{"S", "s1"}, {"Z", "z1"}}));
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12f", b);
    EXPECT_NE(std::find(levels.begin(), levels.end(), std::string(buf)), levels.end());
}

TEST(Propensity, MergesStrataWithEqualScores) {
    // Two strata of A share pr(x1|a) = 0.5.
    DiscreteJointDistribution d({{"X", {"x1", "x2"}}, {"A", {"a1", "a2", "a3"}}},
                                {0.1, 0.2, 0.3, 0.1, 0.2, 0.1});
    auto r = medkit::propensity_reduce(d, "X", {"A"});
    EXPECT_EQ(r.variable("PS").levels.size(), 2u);
}

TEST(Propensity, Errors) {
    DiscreteJointDistribution three({{"X", {"a", "b", "c"}}, {"A", {"a1", "a2"}}}, {0.1, 0.2, 0.3, 0.1, 0.2, 0.1});
    EXPECT_EQ(code_of([&] { medkit::propensity_reduce(three, "X", {"A"}); }), ErrorCode::kNonBinaryTreatment);
    DiscreteJointDistribution degenerate({{"X", {"x1", "x2"}}, {"A", {"a1", "a2"}}}, {0.5, 0.0, 0.25, 0.25});
    EXPECT_EQ(code_of([&] { medkit::propensity_reduce(degenerate, "X", {"A"}); }), ErrorCode::kDegeneratePropensity);
    EXPECT_EQ(code_of([&] { medkit::propensity_reduce(degenerate, "X", {"X"}); }), ErrorCode::kOverlappingSets);
}

TEST(PropensityProperty, ReducedScorePreservesNaturalEffects) {
    medkit::testing::Rng rng(35);
    for (int rep = 0; rep < 100; ++rep) {
        auto d = medkit::testing::random_binary_treatment(rng, 3);
        auto r = medkit::propensity_reduce(d, "X", {"A", "B"});
        EffectQuery full{"X", "Y", "x1", "x2", "y1", {"A", "B"}, {}};
        EffectQuery ps{"X", "Y", "x1", "x2", "y1", {"PS"}, {}};
        EXPECT_NEAR(medkit::nde(r, ps).value, medkit::nde(d, full).value, 1e-12);
        EXPECT_NEAR(medkit::nie(r, ps).value, medkit::nie(d, full).value, 1e-12);
    }
}

TEST(PlugIn, CountsFormulas) {
    // Stratum u1: 40/60 treated with 30 y, 20/50 control with 10 y; stratum u2: 20/60, 5 y; 30/50, 6 y.
    std::vector<medkit::StratumCounts> strata{{40, 30, 20, 10}, {20, 5, 30, 6}};
    auto p = medkit::plug_in_natural_effects(strata);
    const double p1[2] = {30.0 / 40, 5.0 / 20}, p2[2] = {10.0 / 20, 6.0 / 30};
    const double w1[2] = {40.0 / 60, 20.0 / 60}, w2[2] = {20.0 / 50, 30.0 / 50};
    double nde = 0, nie = 0;
    for (int u = 0; u < 2; ++u) {
        nde += (p1[u] - p2[u]) * w2[u];
        nie += p1[u] * (w1[u] - w2[u]);
    }
    EXPECT_NEAR(p.nde, nde, 1e-15);
    EXPECT_NEAR(p.nie, nie, 1e-15);
    EXPECT_NEAR(p.te, 35.0 / 60 - 16.0 / 50, 1e-15);
    EXPECT_EQ(p.empty_strata, 0u);
}

TEST(PlugIn, EmptyTreatedStratumPolicies) {
    std::vector<medkit::StratumCounts> strata{{50, 30, 20, 10}, {0, 0, 30, 6}};
    auto imputed = medkit::plug_in_natural_effects(strata, medkit::ZeroStratumPolicy::kArmRate);
    EXPECT_EQ(imputed.empty_strata, 1u);
    EXPECT_NEAR(imputed.nde + imputed.nie, imputed.te, 1e-15);
    auto dropped = medkit::plug_in_natural_effects(strata, medkit::ZeroStratumPolicy::kDropStratum);
    EXPECT_EQ(dropped.empty_strata, 1u);
    EXPECT_NEAR(dropped.nde, (30.0 / 50 - 10.0 / 20) * 20.0 / 50, 1e-15);
    EXPECT_EQ(code_of([] { medkit::plug_in_natural_effects({{0, 0, 5, 1}}); }), ErrorCode::kEmptyTreatmentArm);
    EXPECT_EQ(code_of([] { medkit::plug_in_natural_effects({{5, 6, 5, 1}}); }), ErrorCode::kInvalidArgument);
}

TEST(PlugInProperty, AgreesWithPopulationFormulaOnFrequencies) {
    medkit::testing::Rng rng(36);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<medkit::StratumCounts> strata(2 + rng.index(4));
        std::vector<double> table;
        for (auto& s : strata) {
            s.n1u = 1 + rng.index(30);
            s.n1uy = rng.index(s.n1u + 1);
            s.n2u = 1 + rng.index(30);
            s.n2uy = rng.index(s.n2u + 1);
        }
        // Joint over (X, U, Y) proportional to counts, with each arm at weight 1/2.
        std::uint64_t n1 = 0, n2 = 0;
        for (auto& s : strata) {
            n1 += s.n1u;
            n2 += s.n2u;
        }
        medkit::Variable u{"U", {}};
        for (std::size_t k = 0; k < strata.size(); ++k) u.levels.push_back("u" + std::to_string(k));
        for (int arm = 0; arm < 2; ++arm) {
            for (auto& s : strata) {
                const double n = arm == 0 ? n1 : n2;
                const double cu = arm == 0 ? s.n1u : s.n2u, cy = arm == 0 ? s.n1uy : s.n2uy;
                table.push_back(0.5 * cy / n);
                table.push_back(0.5 * (cu - cy) / n);
            }
        }
        DiscreteJointDistribution d({{"X", {"x1", "x2"}}, u, {"Y", {"y1", "y0"}}}, table);
        EffectQuery q{"X", "Y", "x1", "x2", "y1", {"U"}, {}};
        auto p = medkit::plug_in_natural_effects(strata);
        EXPECT_NEAR(p.nde, medkit::nde(d, q).value, 1e-13);
        EXPECT_NEAR(p.nie, medkit::nie(d, q).value, 1e-13);
    }
}

}  // namespace
