#include "medkit/equivalence.hpp"

#include <cmath>

#include "medkit/error.hpp"

namespace medkit {

bool DistributionOracle::independent(const VarSet& a, const VarSet& b, const VarSet& c) const {
    return conditionally_independent(d_, a, b, c, tol_);
}

bool GraphOracle::independent(const VarSet& a, const VarSet& b, const VarSet& c) const {
    if (a.empty() || b.empty()) {
        for (const auto* set : {&a, &b, &c}) {
            for (const auto& n : *set) g_.id(n);
        }
        return true;
    }
    return d_separated(g_, {a, b, c});
}

namespace {

constexpr std::size_t kMaxBoundaryCandidates = 12;

void require_known(const IndependenceOracle& oracle, const VarSet& vars) {
    for (const auto& n : vars) {
        if (!oracle.has_variable(n)) throw Error(ErrorCode::kUnknownVariable, n);
    }
}

void validate(const IndependenceOracle& oracle, const EquivalenceQuery& q) {
    require_known(oracle, {q.treatment, q.outcome});
    require_known(oracle, q.t1);
    require_known(oracle, q.t2);
    if (q.treatment == q.outcome) throw Error(ErrorCode::kOverlappingSets, "treatment and outcome coincide");
    for (const auto* set : {&q.t1, &q.t2}) {
        if (has_duplicates(*set)) throw Error(ErrorCode::kOverlappingSets, "repeated variable in " + format_set(*set));
        if (contains(*set, q.treatment) || contains(*set, q.outcome)) {
            throw Error(ErrorCode::kOverlappingSets, "candidate sets may not contain treatment or outcome");
        }
    }
}

VarSet pick(const VarSet& from, const std::vector<std::size_t>& idx) {
    VarSet out;
    for (auto i : idx) out.push_back(from[i]);
    return out;
}

// Advances `idx` to the next k-combination of {0..n-1} in lexicographic order.
bool next_combination(std::vector<std::size_t>& idx, std::size_t n) {
    const std::size_t k = idx.size();
    for (std::size_t i = k; i-- > 0;) {
        if (idx[i] < n - k + i) {
            ++idx[i];
            for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
            return true;
        }
    }
    return false;
}

}  // namespace

MarkovBoundary markov_boundary(const IndependenceOracle& oracle, const std::string& target, const VarSet& relative) {
    require_known(oracle, {target});
    require_known(oracle, relative);
    if (contains(relative, target)) throw Error(ErrorCode::kOverlappingSets, "target inside its relative set");
    if (has_duplicates(relative)) throw Error(ErrorCode::kOverlappingSets, "repeated variable in " + format_set(relative));
    if (relative.size() > kMaxBoundaryCandidates) {
        throw Error(ErrorCode::kTooManyVariables, std::to_string(relative.size()) + " candidates exceed the limit of " +
                                                      std::to_string(kMaxBoundaryCandidates));
    }
    const std::size_t n = relative.size();
    for (std::size_t k = 0; k <= n; ++k) {
        std::vector<std::size_t> idx(k);
        for (std::size_t i = 0; i < k; ++i) idx[i] = i;
        std::optional<VarSet> found;
        do {
            VarSet m = pick(relative, idx);
            if (oracle.independent({target}, set_difference(relative, m), m)) {
                if (found) return {*found, false};
                found = std::move(m);
            }
        } while (k > 0 && next_combination(idx, n));
        if (found) return {*found, true};
    }
    return {relative, true};  // unreachable: the full set is always a blanket
}

Theorem1Result check_theorem1(const IndependenceOracle& oracle, const EquivalenceQuery& q) {
    validate(oracle, q);
    auto branch = [&](const VarSet& a, const VarSet& b) {
        VarSet given = b;
        given.push_back(q.treatment);
        return oracle.independent({q.treatment}, set_difference(b, a), a) &&
               oracle.independent({q.outcome}, set_difference(a, b), given);
    };
    return {branch(q.t1, q.t2), branch(q.t2, q.t1)};
}

Theorem2Result check_theorem2(const IndependenceOracle& oracle, const EquivalenceQuery& q) {
    validate(oracle, q);
    Theorem2Result r;
    r.t1_boundary = markov_boundary(oracle, q.treatment, q.t1);
    r.t2_boundary = markov_boundary(oracle, q.treatment, q.t2);

    const VarSet common = set_intersection(q.t1, q.t2);
    const std::size_t n = common.size();
    for (std::size_t k = 0; k <= n && !r.passed; ++k) {
        std::vector<std::size_t> idx(k);
        for (std::size_t i = 0; i < k; ++i) idx[i] = i;
        do {
            VarSet m = pick(common, idx);
            if (oracle.independent({q.treatment}, set_difference(q.t1, m), m) &&
                oracle.independent({q.treatment}, set_difference(q.t2, m), m)) {
                r.passed = true;
                r.common_blanket = std::move(m);
                break;
            }
        } while (k > 0 && next_combination(idx, n));
    }
    return r;
}

Theorem3Result check_theorem3(const IndependenceOracle& oracle, const EquivalenceQuery& q) {
    validate(oracle, q);
    Theorem3Result r;
    VarSet relative = set_union(q.t1, q.t2);
    relative.push_back(q.treatment);
    r.y_boundary = markov_boundary(oracle, q.outcome, relative);
    VarSet u = r.y_boundary.boundary;
    u.erase(std::remove(u.begin(), u.end(), q.treatment), u.end());
    r.condition_1 = oracle.independent({q.treatment}, set_intersection(u, set_difference(q.t2, q.t1)), q.t1);
    r.condition_2 = oracle.independent({q.treatment}, set_intersection(u, set_difference(q.t1, q.t2)), q.t2);
    r.passed = r.condition_1 && r.condition_2;
    return r;
}

std::vector<double> standardized_outcome(const DiscreteJointDistribution& d, const std::string& treatment,
                                         const std::string& outcome, const std::string& x, const std::string& x_prime,
                                         const VarSet& t) {
    const auto& tv = d.variable(treatment);
    const auto& yv = d.variable(outcome);
    const std::size_t ix = tv.level_index(x), ixp = tv.level_index(x_prime);
    VarSet order{treatment};
    order.insert(order.end(), t.begin(), t.end());
    order.push_back(outcome);
    const auto joint = d.project(order);  // ((x * nt) + t) * ny + y
    const std::size_t nx = tv.levels.size(), ny = yv.levels.size();
    const std::size_t nt = joint.size() / (nx * ny);

    auto xt = [&](std::size_t xi, std::size_t ti) {
        double s = 0.0;
        for (std::size_t y = 0; y < ny; ++y) s += joint[(xi * nt + ti) * ny + y];
        return s;
    };
    double pxp = 0.0;
    for (std::size_t ti = 0; ti < nt; ++ti) pxp += xt(ixp, ti);
    if (!(pxp > 0.0)) throw Error(ErrorCode::kPositivityViolation, "pr(" + treatment + "=" + x_prime + ") = 0");

    std::vector<double> out(ny, 0.0);
    for (std::size_t ti = 0; ti < nt; ++ti) {
        const double w = xt(ixp, ti) / pxp;
        if (!(w > 0.0)) continue;
        const double pxt = xt(ix, ti);
        if (!(pxt > 0.0)) {
            throw Error(ErrorCode::kPositivityViolation,
                        "a stratum of " + format_set(t) + " has no mass at " + treatment + "=" + x);
        }
        for (std::size_t y = 0; y < ny; ++y) out[y] += joint[(ix * nt + ti) * ny + y] / pxt * w;
    }
    return out;
}

DirectCheck weakly_equivalent_direct(const DiscreteJointDistribution& d, const EquivalenceQuery& q, double tol) {
    DistributionOracle oracle(d);
    validate(oracle, q);
    const auto& yv = d.variable(q.outcome);
    DirectCheck r;
    if (q.x == q.x_prime) {
        // Both sides reduce to pr(y|x).
        r.equal = true;
        const auto v = standardized_outcome(d, q.treatment, q.outcome, q.x, q.x_prime, {});
        for (std::size_t y = 0; y < v.size(); ++y) r.values.push_back({yv.levels[y], v[y], v[y]});
        return r;
    }
    const auto lhs = standardized_outcome(d, q.treatment, q.outcome, q.x, q.x_prime, q.t1);
    const auto rhs = standardized_outcome(d, q.treatment, q.outcome, q.x, q.x_prime, q.t2);
    for (std::size_t y = 0; y < lhs.size(); ++y) {
        r.values.push_back({yv.levels[y], lhs[y], rhs[y]});
        r.max_discrepancy = std::max(r.max_discrepancy, std::abs(lhs[y] - rhs[y]));
    }
    r.equal = r.max_discrepancy <= tol;
    return r;
}

namespace {

void theorem_notes(EquivalenceVerdict& v, const EquivalenceQuery& q) {
    if (!v.theorem2.t1_boundary.unique || !v.theorem2.t2_boundary.unique || !v.theorem3.y_boundary.unique) {
        v.notes.push_back("Markov boundary is not unique; the first minimal blanket in variable order was used");
    }
    if (same_members(q.t1, q.t2)) v.notes.push_back("T1 and T2 coincide");
    if (q.x == q.x_prime) v.notes.push_back("x equals x'; any two sets are equivalent");
}

}  // namespace

EquivalenceVerdict assess_equivalence(const DiscreteJointDistribution& d, const EquivalenceQuery& q,
                                      const EquivalenceTolerances& tol) {
    DistributionOracle oracle(d, tol.independence);
    EquivalenceVerdict v;
    v.direct = weakly_equivalent_direct(d, q, tol.direct);
    v.theorem1 = check_theorem1(oracle, q);
    v.theorem2 = check_theorem2(oracle, q);
    v.theorem3 = check_theorem3(oracle, q);
    theorem_notes(v, q);
    if (v.any_theorem() && !v.direct->equal) {
        v.notes.push_back("a sufficient condition passed but the direct check failed; tolerances are inconsistent");
    }
    if (!v.any_theorem() && v.direct->equal && q.x != q.x_prime) {
        v.notes.push_back("sets are weakly equivalent although no sufficient condition applies");
    }
    return v;
}

EquivalenceVerdict assess_equivalence(const DirectedGraph& g, const EquivalenceQuery& q) {
    GraphOracle oracle(g);
    EquivalenceVerdict v;
    v.theorem1 = check_theorem1(oracle, q);
    v.theorem2 = check_theorem2(oracle, q);
    v.theorem3 = check_theorem3(oracle, q);
    theorem_notes(v, q);
    return v;
}

IdentityCheck dichotomous_identity_check(const DiscreteJointDistribution& d, const std::string& treatment,
                                         const std::string& outcome, const VarSet& t, const std::string& y,
                                         const std::string& x, const std::string& x_prime, double tol) {
    const auto& tv = d.variable(treatment);
    if (tv.levels.size() != 2) {
        throw Error(ErrorCode::kNonBinaryTreatment, treatment + " has " + std::to_string(tv.levels.size()) + " levels");
    }
    if (t.empty()) throw Error(ErrorCode::kInvalidArgument, "the identity needs a non-empty set");
    if (x == x_prime) throw Error(ErrorCode::kInvalidArgument, "x and x' must differ");
    const std::size_t iy = d.variable(outcome).level_index(y);

    IdentityCheck r;
    r.lhs = standardized_outcome(d, treatment, outcome, x, x_prime, t)[iy];

    // Σ_t pr(y|x,t) pr(t), over t with pr(t) > 0; needs pr(x,t) > 0 there.
    VarSet order = t;
    order.push_back(treatment);
    order.push_back(outcome);
    const auto joint = d.project(order);  // (t * 2 + x) * ny + y
    const std::size_t ny = d.variable(outcome).levels.size();
    const std::size_t nt = joint.size() / (2 * ny);
    const std::size_t ix = tv.level_index(x), ixp = tv.level_index(x_prime);
    double weighted = 0.0, pxp = 0.0, pxy = 0.0;
    for (std::size_t ti = 0; ti < nt; ++ti) {
        double pt = 0.0, pxt = 0.0;
        for (std::size_t xi = 0; xi < 2; ++xi) {
            for (std::size_t yi = 0; yi < ny; ++yi) {
                const double p = joint[(ti * 2 + xi) * ny + yi];
                pt += p;
                if (xi == ix) pxt += p;
                if (xi == ixp) pxp += p;
            }
        }
        const double pxty = joint[(ti * 2 + ix) * ny + iy];
        pxy += pxty;
        if (!(pt > 0.0)) continue;
        if (!(pxt > 0.0)) throw Error(ErrorCode::kPositivityViolation, "a stratum of " + format_set(t) + " has no mass at " + treatment + "=" + x);
        weighted += pxty / pxt * pt;
    }
    r.rhs = (weighted - pxy) / pxp;
    r.holds = std::abs(r.lhs - r.rhs) <= tol;
    return r;
}

}  // namespace medkit
