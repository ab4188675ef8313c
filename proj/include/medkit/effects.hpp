#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "medkit/distribution.hpp"
#include "medkit/varset.hpp"

namespace medkit {

struct EffectQuery {
    std::string treatment;
    std::string outcome;
    std::string x;        // treated level
    std::string x_prime;  // baseline level
    std::string y;        // outcome level
    VarSet mediators;
    VarSet covariates;

    /// Checks names against `d` and the role constraints. Allows x == x_prime
    /// only when `allow_equal_levels` is set.
    void validate(const DiscreteJointDistribution& d, bool allow_equal_levels = false) const;
};

enum class EffectKind { kCDE, kNDE, kNIE, kTE };
std::string_view to_string(EffectKind kind);

struct EffectEstimate {
    EffectKind kind;
    double value = 0.0;
    std::optional<double> variance;
    EffectQuery query;
};

/// Which identification formula the natural effects use. ArmConditional
/// weights strata by pr(s,z|x') and assumes randomized treatment;
/// CovariateWeighted weights by pr(s|x',z)pr(z).
enum class NaturalEffectForm { kArmConditional, kCovariateWeighted };

/// Controlled direct effect with mediators fixed at `mediator_levels`.
EffectEstimate cde(const DiscreteJointDistribution& d, const EffectQuery& q, const Assignment& mediator_levels);
EffectEstimate nde(const DiscreteJointDistribution& d, const EffectQuery& q,
                   NaturalEffectForm form = NaturalEffectForm::kArmConditional);
EffectEstimate nie(const DiscreteJointDistribution& d, const EffectQuery& q,
                   NaturalEffectForm form = NaturalEffectForm::kArmConditional);
EffectEstimate te(const DiscreteJointDistribution& d, const EffectQuery& q);

/// Replaces the variables `v` by a single variable `ps_name` whose levels are
/// the distinct values of pr(first level of treatment | v), rounded to 12
/// decimals and labelled by that value.
DiscreteJointDistribution propensity_reduce(const DiscreteJointDistribution& d, const std::string& treatment,
                                            const VarSet& v, const std::string& ps_name = "PS");

// Count-based plug-in estimates for a binary treatment and binary outcome,
// used by the simulation harness. Per stratum u of the conditioning set:
// n1u/n2u are arm counts and n1uy/n2uy those with the outcome of interest.
struct StratumCounts {
    std::uint64_t n1u = 0;
    std::uint64_t n1uy = 0;
    std::uint64_t n2u = 0;
    std::uint64_t n2uy = 0;
};

/// What to do with a stratum that has no treated-arm observations.
/// kArmRate substitutes the treated arm's overall outcome rate (the stratum
/// weight pr(u|x1) is zero there, so TE = NDE + NIE still holds exactly);
/// kDropStratum omits the stratum from both sums.
enum class ZeroStratumPolicy { kArmRate, kDropStratum };

struct PlugInEffects {
    double nde = 0.0;
    double nie = 0.0;
    double te = 0.0;
    std::size_t empty_strata = 0;
};

PlugInEffects plug_in_natural_effects(const std::vector<StratumCounts>& strata,
                                      ZeroStratumPolicy policy = ZeroStratumPolicy::kArmRate);

}  // namespace medkit
