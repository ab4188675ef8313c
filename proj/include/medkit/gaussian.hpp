#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "medkit/varset.hpp"

namespace medkit {

/// Correlation matrix with variable names and the sample size it came from.
/// Construction checks symmetry, unit diagonal, |r| <= 1 and positive
/// semidefiniteness.
class CorrelationMatrix {
public:
    CorrelationMatrix(VarSet names, Eigen::MatrixXd values, std::uint64_t n);

    const VarSet& names() const { return names_; }
    const Eigen::MatrixXd& values() const { return values_; }
    std::uint64_t sample_size() const { return n_; }
    std::size_t index(std::string_view name) const;
    double at(std::string_view a, std::string_view b) const { return values_(index(a), index(b)); }

private:
    VarSet names_;
    Eigen::MatrixXd values_;
    std::uint64_t n_;
};

/// Standardized partial regression coefficient of `treatment` when
/// `response` is regressed on `treatment` and `controls`.
double regression_coefficient(const CorrelationMatrix& c, const std::string& response, const std::string& treatment,
                              const VarSet& controls);

/// Residual variance of `target` after regressing on `predictors`, in
/// standardized units (1 - R^2).
double residual_variance(const CorrelationMatrix& c, const std::string& target, const VarSet& predictors);

/// sqrt of var(resid y | x, controls) / (n var(resid x | controls)).
double asymptotic_sd(const CorrelationMatrix& c, const std::string& response, const std::string& treatment,
                     const VarSet& controls);

/// Square CSV: header row of names (first cell ignored), then one row per
/// variable starting with its name.
CorrelationMatrix parse_correlation_csv(std::string_view text, std::uint64_t n);
CorrelationMatrix read_correlation_file(const std::string& path, std::uint64_t n);

}  // namespace medkit
