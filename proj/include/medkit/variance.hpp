#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "medkit/distribution.hpp"
#include "medkit/varset.hpp"

namespace medkit {

/// Delta-method approximation of E(n_{x2,u}^2 / n_{x1,u}) for multinomial
/// stratum counts with arm sizes n_x1, n_x2 and stratum probabilities
/// pr(u|x1), pr(u|x2).
double delta_expectation_ratio(double n_x1, double n_x2, double p_u_x1, double p_u_x2);

struct VarianceInput {
    std::string treatment;
    std::string outcome;
    std::string x1;
    std::string x2;
    std::string y;
    VarSet conditioning;  // U, non-empty
    std::uint64_t n_x1 = 0;
    std::uint64_t n_x2 = 0;
};

/// Population quantities of one stratum u: pr(u|x1), pr(u|x2), pr(y|x1,u),
/// pr(y|x2,u). Conditional outcome rates are zero where the stratum is empty.
struct StratumProbabilities {
    double pu1 = 0.0;
    double pu2 = 0.0;
    double p1u = 0.0;
    double p2u = 0.0;
};

std::vector<StratumProbabilities> stratum_probabilities(const DiscreteJointDistribution& d, const VarianceInput& v);

double var_nde(const std::vector<StratumProbabilities>& strata, double n_x1, double n_x2);
double var_nie(const std::vector<StratumProbabilities>& strata, double n_x1, double n_x2);
double var_nde(const DiscreteJointDistribution& d, const VarianceInput& v);
double var_nie(const DiscreteJointDistribution& d, const VarianceInput& v);

/// Σ_u pr(y|x1,t,u) pr(y|x2,t,u) pr(u|t) - pr(y|x1,t) pr(y|x2,t).
double cov_t(const DiscreteJointDistribution& d, const std::string& treatment, const std::string& outcome,
             const std::string& y, const std::string& x1, const std::string& x2, const VarSet& u, const Assignment& t);

struct Theorem4Report {
    VarSet u;
    VarSet t;

    // Part I: Y ⫫ T | {X} ∪ U.
    bool condition_I_applicable = false;
    bool part_I_equivalence = false;  // NDE and NIE agree between U and U ∪ T

    // Part II: X ⫫ U | T plus the size condition, and cov(t) <= 0 for NDE.
    bool x_independent_of_u_given_t = false;
    std::map<std::string, bool> size_condition;  // keyed by "T=t" labels
    std::map<std::string, double> cov;
    bool condition_II_applicable_nie = false;
    bool condition_II_applicable_nde = false;
    bool part_II_equivalence = false;  // NDE and NIE agree between T and U ∪ T

    bool condition_II_applicable() const { return condition_II_applicable_nie || condition_II_applicable_nde; }

    std::vector<std::string> predictions;
    std::vector<std::string> unmet_premises;
};

Theorem4Report theorem4_advise(const DiscreteJointDistribution& d, const std::string& treatment,
                               const std::string& outcome, const std::string& y, const std::string& x1,
                               const std::string& x2, const VarSet& u, const VarSet& t, std::uint64_t n_x1,
                               std::uint64_t n_x2, double tol = 1e-9);

}  // namespace medkit
