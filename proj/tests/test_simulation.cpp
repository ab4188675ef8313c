#include <cmath>

#include <gtest/gtest.h>

#include "medkit/error.hpp"
#include "medkit/simulation.hpp"
#include "oracles.hpp"

namespace {

using medkit::ArmSampling;
using medkit::EffectKind;
using medkit::Error;
using medkit::ErrorCode;
using medkit::OutcomeSetting;
using medkit::ScenarioConfig;
using medkit::TreatmentSetting;

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

ScenarioConfig small(const std::string& label, std::uint64_t reps = 400) {
    ScenarioConfig c;
    medkit::parse_setting_label(label, c);
    c.replications = reps;
    c.seed = 99;
    c.threads = 1;
    return c;
}

TEST(Config, LabelsAndShares) {
    ScenarioConfig c;
    medkit::parse_setting_label("A2B3", c);
    EXPECT_EQ(c.label(), "A2B3");
    EXPECT_DOUBLE_EQ(medkit::treated_share(TreatmentSetting::kB1), 0.1);
    EXPECT_DOUBLE_EQ(medkit::treated_share(TreatmentSetting::kB2), 0.5);
    EXPECT_DOUBLE_EQ(medkit::treated_share(TreatmentSetting::kB3), 0.9);
    EXPECT_EQ(code_of([&] { medkit::parse_setting_label("A3B1", c); }), ErrorCode::kInvalidArgument);
    EXPECT_EQ(code_of([&] { medkit::parse_setting_label("A1", c); }), ErrorCode::kInvalidArgument);
}

TEST(Config, ParsesKeyValueText) {
    auto c = medkit::parse_scenario_config(
        "# comment\nsetting = A1B1\noutcome = A2\nn = 2000\nreps = 50\nseed = 7\narms = fixed\nzero_strata = drop\n");
    EXPECT_EQ(c.outcome, OutcomeSetting::kA2);
    EXPECT_EQ(c.treatment, TreatmentSetting::kB1);
    EXPECT_EQ(c.total_n, 2000u);
    EXPECT_EQ(c.replications, 50u);
    EXPECT_EQ(c.seed, 7u);
    EXPECT_EQ(c.arm_sampling, ArmSampling::kFixed);
    EXPECT_EQ(c.zero_strata, medkit::ZeroStratumPolicy::kDropStratum);
    EXPECT_EQ(code_of([] { medkit::parse_scenario_config("n = -3\n"); }), ErrorCode::kParseError);
    EXPECT_EQ(code_of([] { medkit::parse_scenario_config("bogus = 1\n"); }), ErrorCode::kParseError);
    EXPECT_EQ(code_of([] { medkit::parse_scenario_config("n 10\n"); }), ErrorCode::kParseError);
}

TEST(Config, FixturesCoverAllTwelveCells) {
    for (const char* a : {"A1", "A2"}) {
        for (const char* b : {"B1", "B2", "B3"}) {
            for (int n : {1000, 2000}) {
                const std::string label = std::string(a) + b;
                auto c = medkit::read_scenario_config_file(kFixtures + "/scenario_" + label + "_n" + std::to_string(n) + ".cfg");
                EXPECT_EQ(c.label(), label);
                EXPECT_EQ(c.total_n, static_cast<std::uint64_t>(n));
                EXPECT_EQ(c.replications, 10000u);
                EXPECT_EQ(c.seed, medkit::kDefaultSeed);
            }
        }
    }
}

TEST(Config, Validation) {
    auto c = small("A1B1");
    c.replications = 0;
    EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::kInvalidArgument);
    c = small("A1B1");
    c.total_n = 4;  // round(0.4) leaves the treated arm empty
    EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::kInvalidArgument);
    c = small("A1B1");
    c.s1_given_w1 = 1.5;
    EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::kInvalidArgument);
}

TEST(Analytic, ArmSplitAndPopulationValues) {
    auto c = small("A1B1");
    auto [n1, n2] = medkit::analytic_arm_sizes(c);
    EXPECT_EQ(n1, 100u);
    EXPECT_EQ(n2, 900u);
    auto r = medkit::analytic_scenario(c);
    ASSERT_EQ(r.cells.size(), 6u);
    // NIE = Σ_s pr(y1|x1,s){pr(s|x1) - pr(s|x2)}; pr(s1|x1) = 0.6, pr(s1|x2) = 0.3.
    const double nie = 0.7 * (0.6 - 0.3) + 0.2 * (0.4 - 0.7);
    // NDE = Σ_s {pr(y1|x1,s) - pr(y1|x2,s)} pr(s|x2).
    const double nde = (0.7 - 0.6) * 0.3 + (0.2 - 0.2) * 0.7;
    for (const auto& set : medkit::scenario_conditioning_sets()) {
        EXPECT_NEAR(r.cell(set, EffectKind::kNIE).population_value, nie, 1e-14);
        EXPECT_NEAR(r.cell(set, EffectKind::kNDE).population_value, nde, 1e-14);
        EXPECT_TRUE(std::isnan(r.cell(set, EffectKind::kNDE).sqrt_var));
    }
}

TEST(Analytic, OutcomeSettingDoesNotMoveNie) {
    for (const char* b : {"B1", "B2", "B3"}) {
        auto r1 = medkit::analytic_scenario(small(std::string("A1") + b));
        auto r2 = medkit::analytic_scenario(small(std::string("A2") + b));
        for (const auto& set : medkit::scenario_conditioning_sets()) {
            EXPECT_DOUBLE_EQ(r1.cell(set, EffectKind::kNIE).sqrt_avar, r2.cell(set, EffectKind::kNIE).sqrt_avar);
        }
    }
}

TEST(Analytic, FullGridHasTwelveScenarios) {
    auto all = medkit::reproduce_table4_analytic();
    ASSERT_EQ(all.size(), 12u);
    for (const auto& r : all) EXPECT_EQ(r.cells.size(), 6u);
    auto table = medkit::format_table4(all);
    EXPECT_NE(table.find("A2 NIE"), std::string::npos);
}

TEST(MonteCarlo, DeterministicForSeed) {
    auto a = medkit::run_scenario(small("A1B2"));
    auto b = medkit::run_scenario(small("A1B2"));
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        EXPECT_EQ(a.cells[i].mean_estimate, b.cells[i].mean_estimate);
        EXPECT_EQ(a.cells[i].sqrt_var, b.cells[i].sqrt_var);
    }
    auto c = small("A1B2");
    c.seed = 100;
    auto d = medkit::run_scenario(c);
    EXPECT_NE(a.cells[0].sqrt_var, d.cells[0].sqrt_var);
}

TEST(MonteCarlo, ThreadCountDoesNotChangeResults) {
    auto one = small("A2B1");
    auto four = one;
    four.threads = 4;
    auto a = medkit::run_scenario(one);
    auto b = medkit::run_scenario(four);
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        EXPECT_EQ(a.cells[i].mean_estimate, b.cells[i].mean_estimate);
        EXPECT_EQ(a.cells[i].sqrt_var, b.cells[i].sqrt_var);
    }
    EXPECT_EQ(a.empty_strata, b.empty_strata);
    EXPECT_EQ(a.arm_redraws, b.arm_redraws);
}

TEST(MonteCarlo, DecompositionHoldsPerReplication) {
    for (const char* label : {"A1B1", "A2B3"}) {
        auto r = medkit::run_scenario(small(label));
        EXPECT_LE(r.max_decomposition_residual, 1e-12) << label;
    }
}

TEST(MonteCarlo, SingleReplicationFlagged) {
    auto r = medkit::run_scenario(small("A1B2", 1));
    EXPECT_TRUE(r.insufficient_replications);
    EXPECT_TRUE(std::isnan(r.cells[0].sqrt_var));
    EXPECT_FALSE(medkit::run_scenario(small("A1B2", 2)).insufficient_replications);
}

TEST(MonteCarlo, UnbiasedAndNearAnalyticForBalancedArms) {
    auto r = medkit::run_scenario(small("A1B2", 3000));
    for (const auto& cell : r.cells) {
        // Mean within 4 standard errors of the population value.
        EXPECT_NEAR(cell.mean_estimate, cell.population_value, 4 * cell.sqrt_var / std::sqrt(3000.0));
        EXPECT_NEAR(cell.ratio, 1.0, 0.06);
    }
}

TEST(MonteCarlo, EmptyStrataCountedInSmallTreatedArm) {
    auto c = small("A1B1", 2000);
    c.total_n = 200;
    auto r = medkit::run_scenario(c);
    const auto sw = 2;  // {S,W} is the third conditioning set
    EXPECT_GT(r.empty_strata[sw], 0u);
    EXPECT_GT(r.replications_affected[sw], 0u);
    EXPECT_LE(r.replications_affected[sw], r.empty_strata[sw]);
    EXPECT_LE(r.max_decomposition_residual, 1e-12);
    c.zero_strata = medkit::ZeroStratumPolicy::kDropStratum;
    auto dropped = medkit::run_scenario(c);
    EXPECT_EQ(dropped.empty_strata, r.empty_strata);
}

TEST(MonteCarlo, FixedArmsUseAnalyticSplit) {
    auto c = small("A1B3", 50);
    c.arm_sampling = ArmSampling::kFixed;
    auto r = medkit::run_scenario(c);
    EXPECT_EQ(r.arm_redraws, 0u);
    EXPECT_EQ(r.n_x1, 900u);
}

TEST(Output, CsvHasOneRowPerCell) {
    auto r = medkit::run_scenario(small("A1B2", 20));
    auto csv = medkit::format_simulation_csv({r});
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
    EXPECT_EQ(csv.rfind("setting,n,n_x1,n_x2,reps,seed,effect,conditioning,", 0), 0u);
    EXPECT_NE(csv.find("\"{S,W}\""), std::string::npos);
}

}  // namespace
