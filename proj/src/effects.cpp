#include "medkit/effects.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "medkit/error.hpp"

namespace medkit {

std::string_view to_string(EffectKind kind) {
    switch (kind) {
        case EffectKind::kCDE: return "CDE";
        case EffectKind::kNDE: return "NDE";
        case EffectKind::kNIE: return "NIE";
        case EffectKind::kTE: return "TE";
    }
    return "?";
}

void EffectQuery::validate(const DiscreteJointDistribution& d, bool allow_equal_levels) const {
    const auto& tv = d.variable(treatment);
    const auto& yv = d.variable(outcome);
    if (treatment == outcome) throw Error(ErrorCode::kOverlappingSets, "treatment and outcome coincide");
    tv.level_index(x);
    tv.level_index(x_prime);
    yv.level_index(y);
    if (!allow_equal_levels && x == x_prime) throw Error(ErrorCode::kInvalidArgument, "x and x' must differ");
    VarSet seen{treatment, outcome};
    for (const auto* set : {&mediators, &covariates}) {
        for (const auto& name : *set) {
            d.variable(name);
            if (contains(seen, name)) throw Error(ErrorCode::kOverlappingSets, "'" + name + "' appears in more than one role");
            seen.push_back(name);
        }
    }
}

namespace {

// Dense marginal over [treatment, middle..., outcome] with accessors by level.
struct Layout {
    std::vector<double> joint;
    std::size_t nx = 0, nm = 0, ny = 0;
    std::size_t ix = 0, ixp = 0, iy = 0;

    Layout(const DiscreteJointDistribution& d, const EffectQuery& q, const VarSet& middle) {
        VarSet all{q.treatment};
        all.insert(all.end(), middle.begin(), middle.end());
        all.push_back(q.outcome);
        joint = d.project(all);
        const auto& tv = d.variable(q.treatment);
        const auto& yv = d.variable(q.outcome);
        nx = tv.levels.size();
        ny = yv.levels.size();
        nm = joint.size() / (nx * ny);
        ix = tv.level_index(q.x);
        ixp = tv.level_index(q.x_prime);
        iy = yv.level_index(q.y);
    }

    double at(std::size_t x, std::size_t m, std::size_t y) const { return joint[(x * nm + m) * ny + y]; }
    double xm(std::size_t x, std::size_t m) const {
        double s = 0.0;
        for (std::size_t y = 0; y < ny; ++y) s += at(x, m, y);
        return s;
    }
    double arm(std::size_t x) const {
        double s = 0.0;
        for (std::size_t m = 0; m < nm; ++m) s += xm(x, m);
        return s;
    }
};

void require_arm(double p, const std::string& label) {
    if (!(p > 0.0)) throw Error(ErrorCode::kPositivityViolation, "pr(" + label + ") = 0");
}

[[noreturn]] void stratum_violation(const EffectQuery& q, const std::string& level) {
    throw Error(ErrorCode::kPositivityViolation,
                "a stratum of " + format_set(set_union(q.mediators, q.covariates)) + " has no mass at " + q.treatment + "=" + level);
}

double arm_conditional_nde(const Layout& L, const EffectQuery& q) {
    const double px = L.arm(L.ix), pxp = L.arm(L.ixp);
    require_arm(px, q.x);
    require_arm(pxp, q.x_prime);
    double sum = 0.0;
    for (std::size_t m = 0; m < L.nm; ++m) {
        const double pxpm = L.xm(L.ixp, m);
        if (!(pxpm > 0.0)) continue;
        const double pxm = L.xm(L.ix, m);
        if (!(pxm > 0.0)) stratum_violation(q, q.x);
        sum += (L.at(L.ix, m, L.iy) / pxm - L.at(L.ixp, m, L.iy) / pxpm) * (pxpm / pxp);
    }
    return sum;
}

double arm_conditional_nie(const Layout& L, const EffectQuery& q) {
    const double px = L.arm(L.ix), pxp = L.arm(L.ixp);
    require_arm(px, q.x);
    require_arm(pxp, q.x_prime);
    double sum = 0.0;
    for (std::size_t m = 0; m < L.nm; ++m) {
        const double pxm = L.xm(L.ix, m);
        const double pxpm = L.xm(L.ixp, m);
        if (!(pxm > 0.0)) {
            if (pxpm > 0.0) stratum_violation(q, q.x);
            continue;
        }
        sum += (L.at(L.ix, m, L.iy) / pxm) * (pxm / px - pxpm / pxp);
    }
    return sum;
}

// Covariate-weighted forms: middle = [S..., Z...], m = s * nz + z.
double covariate_weighted(const Layout& L, const EffectQuery& q, std::size_t nz, bool direct) {
    const std::size_t ns = L.nm / nz;
    double total = 0.0;
    for (std::size_t z = 0; z < nz; ++z) {
        double pz = 0.0, pxz = 0.0, pxpz = 0.0;
        for (std::size_t s = 0; s < ns; ++s) {
            for (std::size_t x = 0; x < L.nx; ++x) pz += L.xm(x, s * nz + z);
            pxz += L.xm(L.ix, s * nz + z);
            pxpz += L.xm(L.ixp, s * nz + z);
        }
        if (!(pz > 0.0)) continue;
        if (!(pxz > 0.0)) stratum_violation(q, q.x);
        if (!(pxpz > 0.0)) stratum_violation(q, q.x_prime);
        for (std::size_t s = 0; s < ns; ++s) {
            const std::size_t m = s * nz + z;
            const double pxm = L.xm(L.ix, m), pxpm = L.xm(L.ixp, m);
            const double w_base = pxpm / pxpz;  // pr(s|x',z)
            const double w_treat = pxm / pxz;   // pr(s|x,z)
            if (direct) {
                if (!(w_base > 0.0)) continue;
                if (!(pxm > 0.0)) stratum_violation(q, q.x);
                total += (L.at(L.ix, m, L.iy) / pxm - L.at(L.ixp, m, L.iy) / pxpm) * w_base * pz;
            } else {
                if (!(pxm > 0.0)) {
                    if (w_base > 0.0) stratum_violation(q, q.x);
                    continue;
                }
                total += (L.at(L.ix, m, L.iy) / pxm) * (w_treat - w_base) * pz;
            }
        }
    }
    return total;
}

std::size_t domain_size(const DiscreteJointDistribution& d, const VarSet& vars) {
    std::size_t n = 1;
    for (const auto& v : vars) n *= d.variable(v).levels.size();
    return n;
}

EffectEstimate natural(const DiscreteJointDistribution& d, const EffectQuery& q, NaturalEffectForm form, bool direct) {
    q.validate(d, true);
    EffectEstimate e{direct ? EffectKind::kNDE : EffectKind::kNIE, 0.0, std::nullopt, q};
    if (form == NaturalEffectForm::kArmConditional) {
        const Layout L(d, q, set_union(q.mediators, q.covariates));
        e.value = direct ? arm_conditional_nde(L, q) : arm_conditional_nie(L, q);
    } else {
        const Layout L(d, q, set_union(q.mediators, q.covariates));
        require_arm(L.arm(L.ix), q.x);
        require_arm(L.arm(L.ixp), q.x_prime);
        e.value = covariate_weighted(L, q, domain_size(d, q.covariates), direct);
    }
    return e;
}

}  // namespace

EffectEstimate cde(const DiscreteJointDistribution& d, const EffectQuery& q, const Assignment& mediator_levels) {
    q.validate(d, true);
    if (mediator_levels.size() != q.mediators.size()) {
        throw Error(ErrorCode::kInvalidArgument, "CDE needs a level for every mediator in " + format_set(q.mediators));
    }
    std::size_t s_index = 0;
    for (const auto& name : q.mediators) {
        auto it = mediator_levels.find(name);
        if (it == mediator_levels.end()) throw Error(ErrorCode::kInvalidArgument, "no level given for mediator " + name);
        const auto& var = d.variable(name);
        s_index = s_index * var.levels.size() + var.level_index(it->second);
    }
    const Layout L(d, q, set_union(q.mediators, q.covariates));
    const std::size_t nz = domain_size(d, q.covariates);
    double total = 0.0;
    for (std::size_t z = 0; z < nz; ++z) {
        double pz = 0.0;
        for (std::size_t m = z; m < L.nm; m += nz) {
            for (std::size_t x = 0; x < L.nx; ++x) pz += L.xm(x, m);
        }
        if (!(pz > 0.0)) continue;
        const std::size_t m = s_index * nz + z;
        const double pxm = L.xm(L.ix, m), pxpm = L.xm(L.ixp, m);
        if (!(pxm > 0.0)) stratum_violation(q, q.x);
        if (!(pxpm > 0.0)) stratum_violation(q, q.x_prime);
        total += (L.at(L.ix, m, L.iy) / pxm - L.at(L.ixp, m, L.iy) / pxpm) * pz;
    }
    return {EffectKind::kCDE, total, std::nullopt, q};
}

EffectEstimate nde(const DiscreteJointDistribution& d, const EffectQuery& q, NaturalEffectForm form) {
    return natural(d, q, form, true);
}

EffectEstimate nie(const DiscreteJointDistribution& d, const EffectQuery& q, NaturalEffectForm form) {
    return natural(d, q, form, false);
}

EffectEstimate te(const DiscreteJointDistribution& d, const EffectQuery& q) {
    q.validate(d, true);
    const Layout L(d, q, {});
    const double px = L.arm(L.ix), pxp = L.arm(L.ixp);
    require_arm(px, q.x);
    require_arm(pxp, q.x_prime);
    return {EffectKind::kTE, L.at(L.ix, 0, L.iy) / px - L.at(L.ixp, 0, L.iy) / pxp, std::nullopt, q};
}

DiscreteJointDistribution propensity_reduce(const DiscreteJointDistribution& d, const std::string& treatment,
                                            const VarSet& v, const std::string& ps_name) {
    const auto& tv = d.variable(treatment);
    if (tv.levels.size() != 2) {
        throw Error(ErrorCode::kNonBinaryTreatment, treatment + " has " + std::to_string(tv.levels.size()) + " levels");
    }
    if (contains(v, treatment)) throw Error(ErrorCode::kOverlappingSets, "treatment inside the reduced set");
    if (has_duplicates(v)) throw Error(ErrorCode::kOverlappingSets, "repeated variable in " + format_set(v));
    for (const auto& name : v) d.variable(name);
    if (d.schema().has(ps_name) && !contains(v, ps_name)) {
        throw Error(ErrorCode::kInvalidArgument, "score variable name '" + ps_name + "' already in use");
    }

    const VarSet rest = set_difference(d.names(), v);
    VarSet order = rest;
    order.insert(order.end(), v.begin(), v.end());
    const auto joint = d.project(order);
    const std::size_t nv = domain_size(d, v);
    const std::size_t nrest = joint.size() / nv;
    const std::size_t tpos = static_cast<std::size_t>(std::find(rest.begin(), rest.end(), treatment) - rest.begin());
    const Schema rest_schema = d.schema().subset(rest);

    // Score pr(first treatment level | v) for every v with positive mass.
    std::vector<double> score(nv, -1.0);
    std::map<long long, std::size_t> groups;  // rounded score (units of 1e-12) -> level
    for (std::size_t iv = 0; iv < nv; ++iv) {
        double pv = 0.0, pxv = 0.0;
        for (std::size_t r = 0; r < nrest; ++r) {
            const double p = joint[r * nv + iv];
            pv += p;
            if (rest_schema.level_of(r, tpos) == 0) pxv += p;
        }
        if (!(pv > 0.0)) continue;
        const double b = pxv / pv;
        if (!(b > 0.0 && b < 1.0)) {
            throw Error(ErrorCode::kDegeneratePropensity, "pr(" + treatment + "=" + tv.levels[0] + "|v) = " + std::to_string(b));
        }
        const auto key = std::llround(b * 1e12);
        score[iv] = static_cast<double>(key);
        groups.emplace(key, 0);
    }
    Variable ps{ps_name, {}};
    for (auto& [key, level] : groups) {
        level = ps.levels.size();
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.12f", static_cast<double>(key) * 1e-12);
        ps.levels.emplace_back(buf);
    }

    std::vector<Variable> vars = rest_schema.variables();
    vars.push_back(ps);
    const std::size_t nps = ps.levels.size();
    std::vector<double> table(nrest * nps, 0.0);
    for (std::size_t iv = 0; iv < nv; ++iv) {
        if (score[iv] < 0.0) continue;
        const std::size_t level = groups.at(static_cast<long long>(score[iv]));
        for (std::size_t r = 0; r < nrest; ++r) table[r * nps + level] += joint[r * nv + iv];
    }
    return DiscreteJointDistribution(std::move(vars), std::move(table));
}

PlugInEffects plug_in_natural_effects(const std::vector<StratumCounts>& strata, ZeroStratumPolicy policy) {
    std::uint64_t n1 = 0, n2 = 0, y1 = 0, y2 = 0;
    for (const auto& s : strata) {
        if (s.n1uy > s.n1u || s.n2uy > s.n2u) throw Error(ErrorCode::kInvalidArgument, "outcome count exceeds stratum count");
        n1 += s.n1u;
        n2 += s.n2u;
        y1 += s.n1uy;
        y2 += s.n2uy;
    }
    if (n1 == 0 || n2 == 0) throw Error(ErrorCode::kEmptyTreatmentArm, "a treatment arm has no observations");
    const double dn1 = static_cast<double>(n1), dn2 = static_cast<double>(n2);
    const double arm_rate = static_cast<double>(y1) / dn1;

    PlugInEffects out;
    out.te = arm_rate - static_cast<double>(y2) / dn2;
    for (const auto& s : strata) {
        const double pu1 = static_cast<double>(s.n1u) / dn1;
        const double pu2 = static_cast<double>(s.n2u) / dn2;
        const double p2 = s.n2u > 0 ? static_cast<double>(s.n2uy) / static_cast<double>(s.n2u) : 0.0;
        double p1 = 0.0;
        if (s.n1u > 0) {
            p1 = static_cast<double>(s.n1uy) / static_cast<double>(s.n1u);
        } else {
            ++out.empty_strata;
            if (policy == ZeroStratumPolicy::kDropStratum) continue;
            p1 = arm_rate;
        }
        out.nde += (p1 - p2) * pu2;
        out.nie += p1 * (pu1 - pu2);
    }
    return out;
}

}  // namespace medkit
