#pragma once

#include <optional>
#include <string>
#include <vector>

#include "medkit/distribution.hpp"
#include "medkit/graph.hpp"
#include "medkit/varset.hpp"

namespace medkit {

/// Answers conditional-independence queries, either from an exact
/// distribution or from d-separation in a DAG.
class IndependenceOracle {
public:
    virtual ~IndependenceOracle() = default;
    /// A ⫫ B | C. Empty A or B is always independent.
    virtual bool independent(const VarSet& a, const VarSet& b, const VarSet& c) const = 0;
    virtual bool has_variable(const std::string& name) const = 0;
};

class DistributionOracle final : public IndependenceOracle {
public:
    explicit DistributionOracle(const DiscreteJointDistribution& d, double tol = 1e-9) : d_(d), tol_(tol) {}
    bool independent(const VarSet& a, const VarSet& b, const VarSet& c) const override;
    bool has_variable(const std::string& name) const override { return d_.schema().has(name); }

private:
    const DiscreteJointDistribution& d_;
    double tol_;
};

class GraphOracle final : public IndependenceOracle {
public:
    explicit GraphOracle(const DirectedGraph& g) : g_(g) {}
    bool independent(const VarSet& a, const VarSet& b, const VarSet& c) const override;
    bool has_variable(const std::string& name) const override { return g_.has_node(name); }

private:
    const DirectedGraph& g_;
};

struct MarkovBoundary {
    VarSet boundary;
    bool unique = true;  // false when another minimal blanket of the same size exists
};

/// Smallest M ⊆ relative with target ⫫ (relative \ M) | M. Subsets are tried
/// by size, then in the order of `relative`. At most 12 candidate variables.
MarkovBoundary markov_boundary(const IndependenceOracle& oracle, const std::string& target, const VarSet& relative);

struct EquivalenceQuery {
    std::string treatment;
    std::string outcome;
    std::string x;
    std::string x_prime;
    VarSet t1;
    VarSet t2;
};

struct Theorem1Result {
    bool branch_i = false;   // X ⫫ T2\T1 | T1 and Y ⫫ T1\T2 | {X} ∪ T2
    bool branch_ii = false;  // the same with T1 and T2 swapped
    bool passed() const { return branch_i || branch_ii; }
};

struct Theorem2Result {
    bool passed = false;
    std::optional<VarSet> common_blanket;  // M ⊆ T1 ∩ T2 that is a blanket of X in both sets
    MarkovBoundary t1_boundary;
    MarkovBoundary t2_boundary;
};

struct Theorem3Result {
    bool passed = false;
    MarkovBoundary y_boundary;  // of Y relative to T1 ∪ T2 ∪ {X}
    bool condition_1 = false;   // X ⫫ (U\{X}) ∩ (T2\T1) | T1
    bool condition_2 = false;   // X ⫫ (U\{X}) ∩ (T1\T2) | T2
};

Theorem1Result check_theorem1(const IndependenceOracle& oracle, const EquivalenceQuery& q);
Theorem2Result check_theorem2(const IndependenceOracle& oracle, const EquivalenceQuery& q);
Theorem3Result check_theorem3(const IndependenceOracle& oracle, const EquivalenceQuery& q);

struct StandardizedValue {
    std::string y;
    double lhs = 0.0;  // via T1
    double rhs = 0.0;  // via T2
};

struct DirectCheck {
    bool equal = false;
    double max_discrepancy = 0.0;
    std::vector<StandardizedValue> values;
};

/// Σ_t pr(y|x,t) pr(t|x') for every level y of the outcome, in level order.
/// An empty T gives pr(y|x).
std::vector<double> standardized_outcome(const DiscreteJointDistribution& d, const std::string& treatment,
                                         const std::string& outcome, const std::string& x, const std::string& x_prime,
                                         const VarSet& t);

/// Compares the standardized outcome under T1 and T2 for every y.
DirectCheck weakly_equivalent_direct(const DiscreteJointDistribution& d, const EquivalenceQuery& q, double tol = 1e-9);

struct EquivalenceVerdict {
    std::optional<DirectCheck> direct;  // absent for graph-only queries
    Theorem1Result theorem1;
    Theorem2Result theorem2;
    Theorem3Result theorem3;
    std::vector<std::string> notes;

    bool any_theorem() const { return theorem1.passed() || theorem2.passed || theorem3.passed; }
};

struct EquivalenceTolerances {
    double independence = 1e-9;
    double direct = 1e-9;
};

EquivalenceVerdict assess_equivalence(const DiscreteJointDistribution& d, const EquivalenceQuery& q,
                                      const EquivalenceTolerances& tol = {});
EquivalenceVerdict assess_equivalence(const DirectedGraph& g, const EquivalenceQuery& q);

struct IdentityCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

/// For binary X: Σ_t pr(y|x,t)pr(t|x') = [Σ_t pr(y|x,t)pr(t) - pr(x,y)] / pr(x').
IdentityCheck dichotomous_identity_check(const DiscreteJointDistribution& d, const std::string& treatment,
                                         const std::string& outcome, const VarSet& t, const std::string& y,
                                         const std::string& x, const std::string& x_prime, double tol = 1e-12);

}  // namespace medkit
