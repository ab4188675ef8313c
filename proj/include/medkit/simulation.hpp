#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "medkit/distribution.hpp"
#include "medkit/effects.hpp"

namespace medkit {

enum class OutcomeSetting { kA1, kA2 };
enum class TreatmentSetting { kB1, kB2, kB3 };
enum class ArmSampling { kRandom, kFixed };

std::string_view to_string(OutcomeSetting s);
std::string_view to_string(TreatmentSetting s);
std::string_view to_string(ArmSampling s);
std::string_view to_string(ZeroStratumPolicy p);

/// pr(x1) for B1/B2/B3.
double treated_share(TreatmentSetting s);

inline constexpr std::uint64_t kDefaultSeed = 20240607;

struct ScenarioConfig {
    OutcomeSetting outcome = OutcomeSetting::kA1;
    TreatmentSetting treatment = TreatmentSetting::kB1;
    std::uint64_t total_n = 1000;
    std::uint64_t replications = 10000;
    std::uint64_t seed = kDefaultSeed;
    ArmSampling arm_sampling = ArmSampling::kRandom;
    ZeroStratumPolicy zero_strata = ZeroStratumPolicy::kArmRate;
    unsigned threads = 0;  // 0 = hardware concurrency

    // Chain probabilities shared by every setting.
    double s1_given_w1 = 0.7;
    double s1_given_w2 = 0.2;
    double w1_given_x1 = 0.8;
    double w1_given_x2 = 0.2;

    std::string label() const;  // e.g. "A1B2"
    void validate() const;
};

/// Parses "A1B2" style labels.
void parse_setting_label(std::string_view label, ScenarioConfig& c);

/// Flat key=value text: outcome, treatment, setting, n, reps, seed, arms,
/// zero_strata, threads. Unknown keys are errors.
ScenarioConfig parse_scenario_config(std::string_view text);
ScenarioConfig read_scenario_config_file(const std::string& path);

/// Joint over X, W, S, Y (levels x1/x2 and so on) factorized as
/// pr(x) pr(w|x) pr(s|w) pr(y|x,s).
DiscreteJointDistribution build_scenario_distribution(const ScenarioConfig& c);

/// The three conditioning sets compared: {S}, {W}, {S,W}.
const std::vector<VarSet>& scenario_conditioning_sets();

struct CellResult {
    VarSet conditioning;
    EffectKind effect = EffectKind::kNDE;
    double population_value = 0.0;
    double mean_estimate = 0.0;
    double sqrt_avar = 0.0;
    double sqrt_var = 0.0;  // NaN with fewer than two replications
    double ratio = 0.0;     // sqrt_var / sqrt_avar
};

struct SimulationResult {
    ScenarioConfig config;
    std::uint64_t n_x1 = 0;  // analytic arm split
    std::uint64_t n_x2 = 0;
    std::vector<CellResult> cells;  // NDE then NIE for each conditioning set
    std::vector<std::uint64_t> empty_strata;           // per conditioning set, summed over replications
    std::vector<std::uint64_t> replications_affected;  // per conditioning set
    std::uint64_t arm_redraws = 0;                     // random splits that left an arm empty
    bool insufficient_replications = false;
    double max_decomposition_residual = 0.0;  // max |NDE + NIE - TE| over replications and sets

    const CellResult& cell(const VarSet& conditioning, EffectKind effect) const;
};

/// Analytic arm split: n_x1 = round(N pr(x1)), n_x2 = N - n_x1.
std::pair<std::uint64_t, std::uint64_t> analytic_arm_sizes(const ScenarioConfig& c);

/// Analytic columns only (no sampling).
SimulationResult analytic_scenario(const ScenarioConfig& c);

/// Monte Carlo run plus analytic columns. Deterministic for a given seed and
/// independent of the thread count.
SimulationResult run_scenario(const ScenarioConfig& c);

/// Every setting at N = 1000 and 2000, ordered A1 then A2, B1..B3, N.
std::vector<SimulationResult> reproduce_table4(std::uint64_t seed = kDefaultSeed, std::uint64_t replications = 10000,
                                               unsigned threads = 0);
std::vector<SimulationResult> reproduce_table4_analytic();

std::string format_simulation_csv(const std::vector<SimulationResult>& results);
/// Human-readable layout: one block per outcome setting and effect, rows per
/// N with analytic and empirical lines, columns S, W, {S,W} for B1..B3.
std::string format_table4(const std::vector<SimulationResult>& results);

}  // namespace medkit
