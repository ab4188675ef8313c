#include "medkit/variance.hpp"

#include <cmath>

#include "medkit/equivalence.hpp"
#include "medkit/error.hpp"

namespace medkit {

double delta_expectation_ratio(double n_x1, double n_x2, double p_u_x1, double p_u_x2) {
    if (!(n_x1 > 0.0) || !(n_x2 > 0.0)) throw Error(ErrorCode::kInvalidArgument, "arm sizes must be positive");
    if (!(p_u_x1 > 0.0)) throw Error(ErrorCode::kZeroSupportStratum, "pr(u|x1) = 0");
    return n_x2 * n_x2 / (n_x1 * p_u_x1) * (p_u_x2 * (1.0 - p_u_x2) / n_x2 + p_u_x2 * p_u_x2);
}

namespace {

void check_input(const VarianceInput& v) {
    if (v.n_x1 == 0 || v.n_x2 == 0) throw Error(ErrorCode::kInvalidArgument, "arm sizes must be at least 1");
    if (v.conditioning.empty()) throw Error(ErrorCode::kInvalidArgument, "conditioning set must be non-empty");
}

void check_strata(const std::vector<StratumProbabilities>& strata, double n1, double n2) {
    if (!(n1 > 0.0) || !(n2 > 0.0)) throw Error(ErrorCode::kInvalidArgument, "arm sizes must be positive");
    for (const auto& s : strata) {
        if (s.pu2 > 0.0 && !(s.pu1 > 0.0)) throw Error(ErrorCode::kZeroSupportStratum, "pr(u|x1) = 0 where pr(u|x2) > 0");
    }
}

// Σ_u p1u(1-p1u)/n2^2 · E(n2u^2/n1u); strata with pr(u|x1) = pr(u|x2) = 0 carry no weight.
double resampling_term(const std::vector<StratumProbabilities>& strata, double n1, double n2) {
    double sum = 0.0;
    for (const auto& s : strata) {
        if (!(s.pu1 > 0.0)) continue;
        sum += s.p1u * (1.0 - s.p1u) / (n2 * n2) * delta_expectation_ratio(n1, n2, s.pu1, s.pu2);
    }
    return sum;
}

}  // namespace

std::vector<StratumProbabilities> stratum_probabilities(const DiscreteJointDistribution& d, const VarianceInput& v) {
    check_input(v);
    const auto& tv = d.variable(v.treatment);
    const auto& yv = d.variable(v.outcome);
    const std::size_t i1 = tv.level_index(v.x1), i2 = tv.level_index(v.x2), iy = yv.level_index(v.y);
    if (i1 == i2) throw Error(ErrorCode::kInvalidArgument, "x1 and x2 must differ");
    if (contains(v.conditioning, v.treatment) || contains(v.conditioning, v.outcome)) {
        throw Error(ErrorCode::kOverlappingSets, "conditioning set contains treatment or outcome");
    }
    VarSet order{v.treatment};
    order.insert(order.end(), v.conditioning.begin(), v.conditioning.end());
    order.push_back(v.outcome);
    const auto joint = d.project(order);
    const std::size_t nx = tv.levels.size(), ny = yv.levels.size();
    const std::size_t nu = joint.size() / (nx * ny);

    std::vector<StratumProbabilities> out(nu);
    std::vector<double> m1(nu, 0.0), m2(nu, 0.0);
    double a1 = 0.0, a2 = 0.0;
    for (std::size_t u = 0; u < nu; ++u) {
        for (std::size_t y = 0; y < ny; ++y) {
            m1[u] += joint[(i1 * nu + u) * ny + y];
            m2[u] += joint[(i2 * nu + u) * ny + y];
        }
        a1 += m1[u];
        a2 += m2[u];
    }
    if (!(a1 > 0.0) || !(a2 > 0.0)) throw Error(ErrorCode::kPositivityViolation, "a treatment arm has probability zero");
    for (std::size_t u = 0; u < nu; ++u) {
        auto& s = out[u];
        s.pu1 = m1[u] / a1;
        s.pu2 = m2[u] / a2;
        if (m1[u] > 0.0) s.p1u = joint[(i1 * nu + u) * ny + iy] / m1[u];
        if (m2[u] > 0.0) s.p2u = joint[(i2 * nu + u) * ny + iy] / m2[u];
    }
    return out;
}

double var_nde(const std::vector<StratumProbabilities>& strata, double n1, double n2) {
    check_strata(strata, n1, n2);
    double nde = 0.0, spread = 0.0, control_noise = 0.0;
    for (const auto& s : strata) {
        const double diff = s.p1u - s.p2u;
        nde += diff * s.pu2;
        spread += diff * diff * s.pu2;
        control_noise += s.p2u * (1.0 - s.p2u) * s.pu2;
    }
    return spread / n2 - nde * nde / n2 + resampling_term(strata, n1, n2) + control_noise / n2;
}

double var_nie(const std::vector<StratumProbabilities>& strata, double n1, double n2) {
    check_strata(strata, n1, n2);
    double cross = 0.0, py1 = 0.0, second = 0.0, first = 0.0;
    for (const auto& s : strata) {
        cross += s.p1u * (1.0 - s.p1u) * s.pu2;
        py1 += s.p1u * s.pu1;
        second += s.p1u * s.p1u * s.pu2;
        first += s.p1u * s.pu2;
    }
    return resampling_term(strata, n1, n2) - 2.0 * cross / n1 + py1 * (1.0 - py1) / n1 + (second - first * first) / n2;
}

double var_nde(const DiscreteJointDistribution& d, const VarianceInput& v) {
    return var_nde(stratum_probabilities(d, v), static_cast<double>(v.n_x1), static_cast<double>(v.n_x2));
}

double var_nie(const DiscreteJointDistribution& d, const VarianceInput& v) {
    return var_nie(stratum_probabilities(d, v), static_cast<double>(v.n_x1), static_cast<double>(v.n_x2));
}

double cov_t(const DiscreteJointDistribution& d, const std::string& treatment, const std::string& outcome,
             const std::string& y, const std::string& x1, const std::string& x2, const VarSet& u, const Assignment& t) {
    const auto& tv = d.variable(treatment);
    const std::size_t i1 = tv.level_index(x1), i2 = tv.level_index(x2);
    const std::size_t iy = d.variable(outcome).level_index(y);
    for (const auto& [name, label] : t) {
        if (contains(u, name) || name == treatment || name == outcome) {
            throw Error(ErrorCode::kOverlappingSets, "'" + name + "' cannot be both fixed and summed over");
        }
    }
    // Distribution of (X, U, Y) given T = t.
    VarSet target{treatment};
    target.insert(target.end(), u.begin(), u.end());
    target.push_back(outcome);
    const auto slice = conditional(d, target, t);
    const auto& joint = slice.table();
    const std::size_t nx = tv.levels.size(), ny = d.variable(outcome).levels.size();
    const std::size_t nu = joint.size() / (nx * ny);

    auto xu = [&](std::size_t x, std::size_t ui) {
        double s = 0.0;
        for (std::size_t yi = 0; yi < ny; ++yi) s += joint[(x * nu + ui) * ny + yi];
        return s;
    };
    double sum = 0.0, a1 = 0.0, a2 = 0.0, y1 = 0.0, y2 = 0.0;
    for (std::size_t ui = 0; ui < nu; ++ui) {
        double pu = 0.0;
        for (std::size_t x = 0; x < nx; ++x) pu += xu(x, ui);
        const double m1 = xu(i1, ui), m2 = xu(i2, ui);
        a1 += m1;
        a2 += m2;
        y1 += joint[(i1 * nu + ui) * ny + iy];
        y2 += joint[(i2 * nu + ui) * ny + iy];
        if (!(pu > 0.0)) continue;
        if (!(m1 > 0.0) || !(m2 > 0.0)) {
            throw Error(ErrorCode::kPositivityViolation, "a stratum of " + format_set(u) + " lacks one treatment arm");
        }
        sum += (joint[(i1 * nu + ui) * ny + iy] / m1) * (joint[(i2 * nu + ui) * ny + iy] / m2) * pu;
    }
    if (!(a1 > 0.0) || !(a2 > 0.0)) throw Error(ErrorCode::kPositivityViolation, "a treatment arm is empty given t");
    return sum - (y1 / a1) * (y2 / a2);
}

namespace {

std::string label_of(const Assignment& a) {
    std::string out;
    for (const auto& [name, level] : a) {
        if (!out.empty()) out += ",";
        out += name + "=" + level;
    }
    return out;
}

bool effects_agree(const DiscreteJointDistribution& d, const std::string& treatment, const std::string& outcome,
                   const std::string& x1, const std::string& x2, const VarSet& a, const VarSet& b) {
    // NDE depends on the set only through the standardized outcome at (x1, x2);
    // NIE through pr(y|x1), which is common to every set.
    EquivalenceQuery q{treatment, outcome, x1, x2, a, b};
    return weakly_equivalent_direct(d, q, 1e-9).equal;
}

}  // namespace

Theorem4Report theorem4_advise(const DiscreteJointDistribution& d, const std::string& treatment,
                               const std::string& outcome, const std::string& y, const std::string& x1,
                               const std::string& x2, const VarSet& u, const VarSet& t, std::uint64_t n_x1,
                               std::uint64_t n_x2, double tol) {
    if (u.empty() || t.empty()) throw Error(ErrorCode::kInvalidArgument, "U and T must be non-empty");
    if (!set_intersection(u, t).empty()) throw Error(ErrorCode::kOverlappingSets, "U and T overlap");
    if (n_x1 == 0 || n_x2 == 0) throw Error(ErrorCode::kInvalidArgument, "arm sizes must be at least 1");
    d.variable(outcome).level_index(y);

    Theorem4Report r;
    r.u = u;
    r.t = t;
    const VarSet ut = set_union(u, t);

    VarSet xu = u;
    xu.push_back(treatment);
    r.condition_I_applicable = conditionally_independent(d, {outcome}, t, xu, tol);
    r.part_I_equivalence = effects_agree(d, treatment, outcome, x1, x2, u, ut);
    if (r.condition_I_applicable) {
        r.predictions.push_back("a.var(NDE; " + format_set(u) + ") <= a.var(NDE; " + format_set(ut) + ")");
        r.predictions.push_back("a.var(NIE; " + format_set(u) + ") <= a.var(NIE; " + format_set(ut) + ")");
    } else {
        r.unmet_premises.push_back("part I: " + outcome + " is not independent of " + format_set(t) + " given " + format_set(xu));
    }

    r.x_independent_of_u_given_t = conditionally_independent(d, {treatment}, u, t, tol);
    r.part_II_equivalence = effects_agree(d, treatment, outcome, x1, x2, t, ut);

    // Enumerate the configurations of T.
    const Schema ts = d.schema().subset(t);
    const double n1 = static_cast<double>(n_x1), n2 = static_cast<double>(n_x2);
    bool size_ok = true, cov_ok = true;
    for (std::size_t cell = 0; cell < ts.num_cells(); ++cell) {
        Assignment at;
        for (std::size_t k = 0; k < ts.num_variables(); ++k) {
            at[ts.variables()[k].name] = ts.variables()[k].levels[ts.level_of(cell, k)];
        }
        Assignment with_x1 = at, with_x2 = at;
        with_x1[treatment] = x1;
        with_x2[treatment] = x2;
        Assignment arm1{{treatment, x1}}, arm2{{treatment, x2}};
        const double pt1 = d.probability(with_x1) / d.probability(arm1);
        const double pt2 = d.probability(with_x2) / d.probability(arm2);
        const auto key = label_of(at);
        const bool fits = 1.0 + n2 * pt2 <= n1 * pt1;
        r.size_condition[key] = fits;
        size_ok = size_ok && fits;
        if (d.probability(at) > 0.0) {
            const double c = cov_t(d, treatment, outcome, y, x1, x2, u, at);
            r.cov[key] = c;
            cov_ok = cov_ok && c <= tol;
        }
    }
    r.condition_II_applicable_nie = r.x_independent_of_u_given_t && size_ok;
    r.condition_II_applicable_nde = r.condition_II_applicable_nie && cov_ok;
    if (!r.x_independent_of_u_given_t) {
        r.unmet_premises.push_back("part II: " + treatment + " is not independent of " + format_set(u) + " given " + format_set(t));
    }
    if (!size_ok) r.unmet_premises.push_back("part II: size condition 1 + n_x2 pr(t|x2) <= n_x1 pr(t|x1) fails for some t");
    if (!cov_ok) r.unmet_premises.push_back("part II (NDE): cov(t) > 0 for some t");
    if (r.condition_II_applicable_nde) {
        r.predictions.push_back("a.var(NDE; " + format_set(t) + ") <= a.var(NDE; " + format_set(ut) + ")");
    }
    if (r.condition_II_applicable_nie) {
        r.predictions.push_back("a.var(NIE; " + format_set(t) + ") <= a.var(NIE; " + format_set(ut) + ")");
    }
    return r;
}

}  // namespace medkit
