#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "medkit/varset.hpp"

namespace medkit {

struct Variable {
    std::string name;
    std::vector<std::string> levels;

    std::size_t level_index(std::string_view label) const;
    bool operator==(const Variable&) const = default;
};

/// Partial assignment of category labels to variable names.
using Assignment = std::map<std::string, std::string>;

/// Variable schema shared by distributions and contingency tables. Cells are
/// stored densely in mixed-radix order with the first variable varying slowest.
class Schema {
public:
    Schema() = default;
    explicit Schema(std::vector<Variable> variables);

    const std::vector<Variable>& variables() const { return vars_; }
    std::size_t num_variables() const { return vars_.size(); }
    std::size_t num_cells() const { return cells_; }
    VarSet names() const;

    bool has(std::string_view name) const;
    std::size_t position(std::string_view name) const;
    const Variable& variable(std::string_view name) const { return vars_[position(name)]; }

    /// Level index of variable `var` (by position) in cell `cell`.
    std::size_t level_of(std::size_t cell, std::size_t var) const { return (cell / strides_[var]) % vars_[var].levels.size(); }
    std::size_t stride(std::size_t var) const { return strides_[var]; }

    /// Sub-schema over `keep`, in the order given.
    Schema subset(const VarSet& keep) const;

    /// Maps every cell of this schema to the corresponding cell of subset(keep).
    std::vector<std::size_t> projection(const VarSet& keep) const;

    bool operator==(const Schema& o) const { return vars_ == o.vars_; }

private:
    std::vector<Variable> vars_;
    std::vector<std::size_t> strides_;
    std::size_t cells_ = 1;
};

class DiscreteJointDistribution {
public:
    /// Entries must be non-negative with total mass within 1e-6 of one; the
    /// table is then renormalized to sum to one.
    DiscreteJointDistribution(std::vector<Variable> variables, std::vector<double> table);
    DiscreteJointDistribution(Schema schema, std::vector<double> table);

    const Schema& schema() const { return schema_; }
    const std::vector<Variable>& variables() const { return schema_.variables(); }
    const std::vector<double>& table() const { return table_; }
    VarSet names() const { return schema_.names(); }
    const Variable& variable(std::string_view name) const { return schema_.variable(name); }

    /// Dense table of the marginal over `keep`, in keep order.
    std::vector<double> project(const VarSet& keep) const;

    /// Marginal probability of a partial assignment.
    double probability(const Assignment& event) const;

private:
    Schema schema_;
    std::vector<double> table_;
};

DiscreteJointDistribution marginal(const DiscreteJointDistribution& d, const VarSet& keep);

/// Distribution of `target` given the event `given`. An empty target means
/// every variable not named in `given`.
DiscreteJointDistribution conditional(const DiscreteJointDistribution& d, const VarSet& target,
                                      const Assignment& given);

/// Largest |pr(a,b|c) - pr(a|c)pr(b|c)| over configurations with pr(c) > 0.
double independence_discrepancy(const DiscreteJointDistribution& d, const VarSet& a, const VarSet& b,
                                const VarSet& c);

/// A ⫫ B | C within `tol`. An empty A or B is trivially independent.
bool conditionally_independent(const DiscreteJointDistribution& d, const VarSet& a, const VarSet& b,
                               const VarSet& c, double tol = 1e-9);

class ContingencyTable {
public:
    ContingencyTable(std::vector<Variable> variables, std::vector<std::uint64_t> counts);
    ContingencyTable(Schema schema, std::vector<std::uint64_t> counts);

    const Schema& schema() const { return schema_; }
    const std::vector<Variable>& variables() const { return schema_.variables(); }
    const std::vector<std::uint64_t>& counts() const { return counts_; }
    std::uint64_t total() const;

    /// n_x for each level of `treatment`.
    std::vector<std::uint64_t> arm_totals(std::string_view treatment) const;

private:
    Schema schema_;
    std::vector<std::uint64_t> counts_;
};

/// Plug-in estimate: pr(x) from arm totals, pr(rest|x) from within-arm
/// frequencies. Throws EmptyTreatmentArm if any arm of `treatment` is empty.
DiscreteJointDistribution from_counts(const ContingencyTable& t, std::string_view treatment);

/// Multinomial draw of `n` items over the cell probabilities `probs`.
std::vector<std::uint64_t> sample_multinomial(std::uint64_t n, const std::vector<double>& probs,
                                              std::mt19937_64& rng);

/// Per-arm multinomial draw over the remaining cells: arm x receives
/// arm_sizes[x] subjects distributed by pr(.|x). Arms missing from the map get
/// no subjects.
ContingencyTable sample_counts(const DiscreteJointDistribution& d, std::string_view treatment,
                               const std::map<std::string, std::uint64_t>& arm_sizes, std::mt19937_64& rng);
ContingencyTable sample_counts(const DiscreteJointDistribution& d, std::string_view treatment,
                               const std::map<std::string, std::uint64_t>& arm_sizes, std::uint64_t seed);

// CSV with one column per variable plus a trailing `prob` (or `count`)
// column. Levels are ordered by first appearance; absent cells are zero.
DiscreteJointDistribution parse_distribution_csv(std::string_view text);
ContingencyTable parse_counts_csv(std::string_view text);
DiscreteJointDistribution read_distribution_file(const std::string& path);
ContingencyTable read_counts_file(const std::string& path);
std::string format_distribution_csv(const DiscreteJointDistribution& d);
std::string format_counts_csv(const ContingencyTable& t);

}  // namespace medkit
