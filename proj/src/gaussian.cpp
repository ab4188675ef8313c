#include "medkit/gaussian.hpp"

#include <cmath>

#include "io_util.hpp"
#include "medkit/error.hpp"

namespace medkit {

namespace {

constexpr double kPivotFloor = 1e-10;
constexpr double kShapeTol = 1e-9;

}  // namespace

CorrelationMatrix::CorrelationMatrix(VarSet names, Eigen::MatrixXd values, std::uint64_t n)
    : names_(std::move(names)), values_(std::move(values)), n_(n) {
    const auto k = static_cast<Eigen::Index>(names_.size());
    if (values_.rows() != k || values_.cols() != k) throw Error(ErrorCode::kInvalidArgument, "matrix shape does not match names");
    if (has_duplicates(names_)) throw Error(ErrorCode::kInvalidArgument, "duplicate variable name");
    for (Eigen::Index i = 0; i < k; ++i) {
        if (std::abs(values_(i, i) - 1.0) > kShapeTol) throw Error(ErrorCode::kInvalidArgument, "diagonal entry of " + names_[i] + " is not 1");
        for (Eigen::Index j = 0; j < k; ++j) {
            const double v = values_(i, j);
            if (!std::isfinite(v) || std::abs(v) > 1.0 + kShapeTol) {
                throw Error(ErrorCode::kInvalidArgument, "correlation outside [-1,1] at " + names_[i] + "," + names_[j]);
            }
            if (std::abs(v - values_(j, i)) > kShapeTol) {
                throw Error(ErrorCode::kInvalidArgument, "matrix is not symmetric at " + names_[i] + "," + names_[j]);
            }
        }
    }
    if (k > 0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(values_, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < -kShapeTol) {
            throw Error(ErrorCode::kInvalidArgument, "matrix is not positive semidefinite");
        }
    }
}

std::size_t CorrelationMatrix::index(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return i;
    }
    throw Error(ErrorCode::kUnknownVariable, std::string(name));
}

namespace {

Eigen::MatrixXd block(const CorrelationMatrix& c, const VarSet& rows, const VarSet& cols) {
    Eigen::MatrixXd m(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) m(i, j) = c.at(rows[i], cols[j]);
    }
    return m;
}

// Solves R_pp b = R_pt for the predictor set.
Eigen::VectorXd solve(const CorrelationMatrix& c, const VarSet& predictors, const std::string& target) {
    if (has_duplicates(predictors) || contains(predictors, target)) {
        throw Error(ErrorCode::kOverlappingSets, "target and predictors must be distinct");
    }
    const Eigen::MatrixXd r = block(c, predictors, predictors);
    const Eigen::VectorXd rhs = block(c, predictors, {target});
    Eigen::LLT<Eigen::MatrixXd> llt(r);
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::kSingularDesign, "design " + format_set(predictors) + " is singular");
    const Eigen::MatrixXd l = llt.matrixL();
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
        if (l(i, i) * l(i, i) < kPivotFloor) throw Error(ErrorCode::kSingularDesign, "design " + format_set(predictors) + " is singular");
    }
    return llt.solve(rhs);
}

}  // namespace

double regression_coefficient(const CorrelationMatrix& c, const std::string& response, const std::string& treatment,
                              const VarSet& controls) {
    VarSet predictors{treatment};
    predictors.insert(predictors.end(), controls.begin(), controls.end());
    return solve(c, predictors, response)(0);
}

double residual_variance(const CorrelationMatrix& c, const std::string& target, const VarSet& predictors) {
    c.index(target);
    if (predictors.empty()) return 1.0;
    const Eigen::VectorXd b = solve(c, predictors, target);
    const Eigen::VectorXd r = block(c, predictors, {target});
    return 1.0 - r.dot(b);
}

double asymptotic_sd(const CorrelationMatrix& c, const std::string& response, const std::string& treatment,
                     const VarSet& controls) {
    if (c.sample_size() <= controls.size() + 2) {
        throw Error(ErrorCode::kInvalidArgument, "sample size must exceed the number of controls plus 2");
    }
    VarSet predictors{treatment};
    predictors.insert(predictors.end(), controls.begin(), controls.end());
    const double ry = residual_variance(c, response, predictors);
    const double rx = residual_variance(c, treatment, controls);
    if (!(rx >= kPivotFloor)) throw Error(ErrorCode::kSingularDesign, treatment + " is collinear with the controls");
    return std::sqrt(std::max(0.0, ry) / (static_cast<double>(c.sample_size()) * rx));
}

CorrelationMatrix parse_correlation_csv(std::string_view text, std::uint64_t n) {
    const auto lines = detail::content_lines(text);
    if (lines.empty()) throw Error(ErrorCode::kParseError, "empty correlation file");
    auto header = detail::split_csv_line(lines[0].second);
    if (header.size() < 2) throw Error(ErrorCode::kParseError, "line " + std::to_string(lines[0].first) + ": header needs variable names");
    VarSet names(header.begin() + 1, header.end());
    const std::size_t k = names.size();
    if (lines.size() != k + 1) {
        throw Error(ErrorCode::kParseError, "expected " + std::to_string(k) + " matrix rows, got " + std::to_string(lines.size() - 1));
    }
    Eigen::MatrixXd m(k, k);
    for (std::size_t i = 0; i < k; ++i) {
        const auto& [lineno, content] = lines[i + 1];
        const auto where = "line " + std::to_string(lineno) + ": ";
        const auto fields = detail::split_csv_line(content);
        if (fields.size() != k + 1) throw Error(ErrorCode::kParseError, where + "expected " + std::to_string(k + 1) + " fields");
        if (fields[0] != names[i]) throw Error(ErrorCode::kParseError, where + "row name '" + fields[0] + "' does not match column '" + names[i] + "'");
        for (std::size_t j = 0; j < k; ++j) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(fields[j + 1], &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != fields[j + 1].size()) throw Error(ErrorCode::kParseError, where + "invalid number '" + fields[j + 1] + "'");
            m(i, j) = v;
        }
    }
    return CorrelationMatrix(std::move(names), std::move(m), n);
}

CorrelationMatrix read_correlation_file(const std::string& path, std::uint64_t n) {
    return parse_correlation_csv(detail::read_text_file(path, "correlation"), n);
}

}  // namespace medkit
