#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "medkit/distribution.hpp"
#include "medkit/effects.hpp"
#include "medkit/equivalence.hpp"
#include "medkit/error.hpp"
#include "medkit/gaussian.hpp"
#include "medkit/graph.hpp"
#include "medkit/simulation.hpp"
#include "medkit/variance.hpp"
#include "medkit/version.hpp"

namespace medkit::cli {

namespace {

using json = nlohmann::ordered_json;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

struct Output {
    std::string format;
    std::string path;
};

void emit(const std::string& text, const Output& o, std::ostream& out) {
    if (o.path.empty()) {
        out << text;
        return;
    }
    std::ofstream file(o.path);
    if (!file) throw UsageError("cannot write output file '" + o.path + "'");
    file << text;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::string& source) {
    if (flag) {
        source = "flag";
        return *flag;
    }
    if (const char* env = std::getenv("MEDIATION_KIT_SEED"); env && *env) {
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            if (env[0] == '-') throw std::invalid_argument("negative");
            v = std::stoull(env, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || env[used] != '\0') throw UsageError(std::string("MEDIATION_KIT_SEED is not a valid seed: '") + env + "'");
        source = "environment";
        return v;
    }
    source = "default";
    return kDefaultSeed;
}

json envelope(const std::string& command, json config) {
    json j;
    j["tool"] = "medkit";
    j["version"] = kVersion;
    j["command"] = command;
    j["config"] = std::move(config);
    return j;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json to_json(const VarSet& s) { return json(s); }

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string fmt(double v) {
    if (!std::isfinite(v)) return "";
    std::ostringstream s;
    s.precision(12);
    s << v;
    return s.str();
}

void require_format(const std::string& f, std::initializer_list<const char*> allowed) {
    for (const char* a : allowed) {
        if (f == a) return;
    }
    throw UsageError("unsupported --format '" + f + "' for this command");
}

// ---------------------------------------------------------------- estimate

struct EstimateOptions {
    std::string dist, counts, treatment = "X", outcome = "Y", x, xprime, y, mediators, covariates, s, form = "arm";
};

Assignment parse_assignment(const std::string& text) {
    Assignment a;
    for (const auto& item : parse_var_list(text)) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw UsageError("expected NAME=LEVEL in '" + item + "'");
        a[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
    }
    return a;
}

void default_levels(const DiscreteJointDistribution& d, const std::string& treatment, const std::string& outcome,
                    std::string& x, std::string& xprime, std::string* y) {
    const auto& tv = d.variable(treatment);
    if (x.empty()) x = tv.levels[0];
    if (xprime.empty()) {
        for (const auto& l : tv.levels) {
            if (l != x) {
                xprime = l;
                break;
            }
        }
        if (xprime.empty()) throw UsageError("treatment " + treatment + " has a single level");
    }
    if (y && y->empty()) *y = d.variable(outcome).levels[0];
}

int cmd_estimate(const EstimateOptions& o, const Output& output, std::ostream& out) {
    if (o.dist.empty() == o.counts.empty()) throw UsageError("estimate needs exactly one of --dist or --counts");
    std::optional<ContingencyTable> table;
    std::optional<DiscreteJointDistribution> dist;
    if (!o.counts.empty()) {
        table = read_counts_file(o.counts);
        dist = from_counts(*table, o.treatment);
    } else {
        dist = read_distribution_file(o.dist);
    }
    const auto& d = *dist;
    EffectQuery q{o.treatment, o.outcome, o.x, o.xprime, o.y, parse_var_list(o.mediators), parse_var_list(o.covariates)};
    d.variable(q.treatment);
    d.variable(q.outcome);
    default_levels(d, q.treatment, q.outcome, q.x, q.x_prime, &q.y);
    q.validate(d);
    NaturalEffectForm form;
    if (o.form == "arm") form = NaturalEffectForm::kArmConditional;
    else if (o.form == "covariate") form = NaturalEffectForm::kCovariateWeighted;
    else throw UsageError("--form must be arm or covariate");

    const auto total = te(d, q);
    auto direct = nde(d, q, form);
    auto indirect = nie(d, q, form);
    json notes = json::array();

    const VarSet u = set_union(q.mediators, q.covariates);
    if (table && !u.empty()) {
        const auto arms = table->arm_totals(q.treatment);
        const auto& tv = d.variable(q.treatment);
        VarianceInput v{q.treatment, q.outcome, q.x, q.x_prime, q.y, u, arms[tv.level_index(q.x)], arms[tv.level_index(q.x_prime)]};
        try {
            const auto strata = stratum_probabilities(d, v);
            direct.variance = var_nde(strata, static_cast<double>(v.n_x1), static_cast<double>(v.n_x2));
            indirect.variance = var_nie(strata, static_cast<double>(v.n_x1), static_cast<double>(v.n_x2));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::kZeroSupportStratum) throw;
            notes.push_back(std::string("variances omitted: ") + e.what());
        }
    } else if (!table) {
        notes.push_back("variances need arm sizes; supply --counts");
    }

    struct Row {
        std::string kind;
        std::string levels;
        double value;
        std::optional<double> variance;
        std::string error;
    };
    std::vector<Row> rows{{"TE", "", total.value, std::nullopt, ""},
                          {"NDE", "", direct.value, direct.variance, ""},
                          {"NIE", "", indirect.value, indirect.variance, ""}};

    std::vector<Assignment> cde_levels;
    if (!o.s.empty()) {
        cde_levels.push_back(parse_assignment(o.s));
    } else if (!q.mediators.empty()) {
        const Schema ms = d.schema().subset(q.mediators);
        for (std::size_t cell = 0; cell < ms.num_cells(); ++cell) {
            Assignment a;
            for (std::size_t k = 0; k < ms.num_variables(); ++k) a[ms.variables()[k].name] = ms.variables()[k].levels[ms.level_of(cell, k)];
            cde_levels.push_back(a);
        }
    }
    for (const auto& a : cde_levels) {
        std::string label;
        for (const auto& [k, v] : a) label += (label.empty() ? "" : ",") + k + "=" + v;
        try {
            rows.push_back({"CDE", label, cde(d, q, a).value, std::nullopt, ""});
        } catch (const Error& e) {
            if (e.code() != ErrorCode::kPositivityViolation || !o.s.empty()) throw;
            rows.push_back({"CDE", label, std::numeric_limits<double>::quiet_NaN(), std::nullopt, e.what()});
        }
    }
    const double residual = total.value - direct.value - indirect.value;

    if (output.format == "csv") {
        std::string text = "kind,levels,value,variance,note\n";
        for (const auto& r : rows) {
            text += r.kind + "," + csv_escape(r.levels) + "," + fmt(r.value) + "," + (r.variance ? fmt(*r.variance) : "") + "," +
                    csv_escape(r.error) + "\n";
        }
        text += "residual,TE-NDE-NIE," + fmt(residual) + ",,\n";
        emit(text, output, out);
        return kOk;
    }
    json config{{"source", table ? "counts" : "distribution"},
                {"path", table ? o.counts : o.dist},
                {"treatment", q.treatment},
                {"outcome", q.outcome},
                {"x", q.x},
                {"xprime", q.x_prime},
                {"y", q.y},
                {"mediators", to_json(q.mediators)},
                {"covariates", to_json(q.covariates)},
                {"form", o.form}};
    auto j = envelope("estimate", std::move(config));
    j["seed"] = nullptr;
    json est = json::array();
    for (const auto& r : rows) {
        json e{{"kind", r.kind}, {"value", number_or_null(r.value)}};
        if (!r.levels.empty()) e["mediator_levels"] = r.levels;
        e["variance"] = r.variance ? json(*r.variance) : json(nullptr);
        if (!r.error.empty()) e["error"] = r.error;
        est.push_back(std::move(e));
    }
    j["estimates"] = std::move(est);
    if (table) {
        json arms;
        const auto totals = table->arm_totals(q.treatment);
        const auto& tv = d.variable(q.treatment);
        for (std::size_t i = 0; i < totals.size(); ++i) arms[tv.levels[i]] = totals[i];
        j["arm_sizes"] = std::move(arms);
    }
    j["diagnostics"] = {{"decomposition_residual", residual}};
    j["notes"] = std::move(notes);
    emit(j.dump(2) + "\n", output, out);
    return kOk;
}

// ------------------------------------------------------------- equivalence

struct EquivalenceOptions {
    std::string dist, graph, treatment = "X", outcome = "Y", x, xprime, t1, t2;
    double tol = 1e-9;
    double ci_tol = 1e-9;
};

json verdict_json(const EquivalenceVerdict& v) {
    json j;
    if (v.direct) {
        json values = json::array();
        for (const auto& s : v.direct->values) values.push_back({{"y", s.y}, {"t1", s.lhs}, {"t2", s.rhs}});
        j["direct"] = {{"equal", v.direct->equal}, {"max_discrepancy", v.direct->max_discrepancy}, {"values", values}};
    }
    j["theorem1"] = {{"passed", v.theorem1.passed()}, {"branch_i", v.theorem1.branch_i}, {"branch_ii", v.theorem1.branch_ii}};
    j["theorem2"] = {{"passed", v.theorem2.passed},
                     {"common_blanket", v.theorem2.common_blanket ? json(*v.theorem2.common_blanket) : json(nullptr)},
                     {"t1_boundary", v.theorem2.t1_boundary.boundary},
                     {"t2_boundary", v.theorem2.t2_boundary.boundary}};
    j["theorem3"] = {{"passed", v.theorem3.passed},
                     {"y_boundary", v.theorem3.y_boundary.boundary},
                     {"condition_1", v.theorem3.condition_1},
                     {"condition_2", v.theorem3.condition_2}};
    j["notes"] = v.notes;
    return j;
}

void verdict_csv(const std::string& source, const EquivalenceVerdict& v, std::string& text) {
    auto row = [&](const std::string& key, const std::string& value) { text += source + "," + key + "," + csv_escape(value) + "\n"; };
    if (v.direct) {
        row("direct_equal", v.direct->equal ? "true" : "false");
        row("max_discrepancy", fmt(v.direct->max_discrepancy));
    }
    row("theorem1", v.theorem1.passed() ? "true" : "false");
    row("theorem2", v.theorem2.passed ? "true" : "false");
    row("theorem3", v.theorem3.passed ? "true" : "false");
    row("y_boundary", format_set(v.theorem3.y_boundary.boundary));
}

int cmd_equivalence(const EquivalenceOptions& o, const Output& output, std::ostream& out) {
    if (o.dist.empty() && o.graph.empty()) throw UsageError("equivalence needs --dist, --graph or both");
    if (!(o.tol > 0.0) || !(o.ci_tol > 0.0)) throw UsageError("tolerances must be positive");
    EquivalenceQuery q{o.treatment, o.outcome, o.x, o.xprime, parse_var_list(o.t1), parse_var_list(o.t2)};
    std::optional<DiscreteJointDistribution> d;
    std::optional<DirectedGraph> g;
    if (!o.dist.empty()) {
        d = read_distribution_file(o.dist);
        d->variable(q.treatment);
        d->variable(q.outcome);
        default_levels(*d, q.treatment, q.outcome, q.x, q.x_prime, nullptr);
        d->variable(q.treatment).level_index(q.x);
        d->variable(q.treatment).level_index(q.x_prime);
    }
    if (!o.graph.empty()) g = read_graph_file(o.graph);

    json config{{"dist", o.dist.empty() ? json(nullptr) : json(o.dist)},
                {"graph", o.graph.empty() ? json(nullptr) : json(o.graph)},
                {"treatment", q.treatment},
                {"outcome", q.outcome},
                {"x", q.x.empty() ? json(nullptr) : json(q.x)},
                {"xprime", q.x_prime.empty() ? json(nullptr) : json(q.x_prime)},
                {"t1", q.t1},
                {"t2", q.t2},
                {"tol", o.tol},
                {"ci_tol", o.ci_tol}};
    auto j = envelope("equivalence", std::move(config));
    j["seed"] = nullptr;
    std::string text = "source,key,value\n";

    const bool trivial = same_members(q.t1, q.t2) && !has_duplicates(q.t1);
    if (trivial) {
        // Identical sets: validate names, skip the checks.
        for (const auto& n : q.t1) {
            if (d) d->variable(n);
            if (g) g->id(n);
            if (n == q.treatment || n == q.outcome) throw Error(ErrorCode::kOverlappingSets, "candidate sets may not contain treatment or outcome");
        }
        j["trivial"] = true;
        j["equivalent"] = true;
        text += "query,trivial,true\nquery,equivalent,true\n";
    } else {
        j["trivial"] = false;
        if (d) {
            const auto v = assess_equivalence(*d, q, {o.ci_tol, o.tol});
            j["distributional"] = verdict_json(v);
            j["equivalent"] = v.direct->equal;
            verdict_csv("distribution", v, text);
        }
        if (g) {
            const auto v = assess_equivalence(*g, q);
            j["graphical"] = verdict_json(v);
            if (!d) j["equivalent"] = v.any_theorem() ? json(true) : json(nullptr);
            verdict_csv("graph", v, text);
        }
    }
    if (output.format == "csv") emit(text, output, out);
    else emit(j.dump(2) + "\n", output, out);
    return kOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
    std::string setting, config, arms, zero_strata;
    std::optional<std::uint64_t> n, reps, seed;
    std::optional<unsigned> threads;
    bool all = false;
    bool analytic_only = false;
};

int cmd_simulate(const SimulateOptions& o, const Output& output, std::ostream& out) {
    if (o.all && (!o.setting.empty() || o.n || !o.config.empty())) {
        throw UsageError("--all runs every setting at both sample sizes; drop --setting, --n and --config");
    }
    if (!o.all && o.setting.empty() && o.config.empty()) throw UsageError("simulate needs --setting, --config or --all");
    ScenarioConfig base;
    if (!o.config.empty()) base = read_scenario_config_file(o.config);
    if (!o.setting.empty()) parse_setting_label(o.setting, base);
    if (o.n) base.total_n = *o.n;
    if (o.reps) base.replications = *o.reps;
    if (o.threads) base.threads = *o.threads;
    if (!o.arms.empty()) {
        if (o.arms == "random") base.arm_sampling = ArmSampling::kRandom;
        else if (o.arms == "fixed") base.arm_sampling = ArmSampling::kFixed;
        else throw UsageError("--arms must be random or fixed");
    }
    if (!o.zero_strata.empty()) {
        if (o.zero_strata == "arm_rate") base.zero_strata = ZeroStratumPolicy::kArmRate;
        else if (o.zero_strata == "drop") base.zero_strata = ZeroStratumPolicy::kDropStratum;
        else throw UsageError("--zero-strata must be arm_rate or drop");
    }
    std::string seed_source = "config";
    if (o.seed || o.config.empty()) base.seed = resolve_seed(o.seed, seed_source);
    if (base.replications == 0) throw UsageError("--reps must be at least 1");

    std::vector<SimulationResult> results;
    if (o.all) {
        for (auto a : {"A1", "A2"}) {
            for (auto b : {"B1", "B2", "B3"}) {
                for (std::uint64_t n : {1000u, 2000u}) {
                    ScenarioConfig c = base;
                    parse_setting_label(std::string(a) + b, c);
                    c.total_n = n;
                    results.push_back(o.analytic_only ? analytic_scenario(c) : run_scenario(c));
                }
            }
        }
    } else {
        results.push_back(o.analytic_only ? analytic_scenario(base) : run_scenario(base));
    }

    if (output.format == "csv") {
        emit(format_simulation_csv(results), output, out);
        return kOk;
    }
    if (output.format == "table") {
        emit(format_table4(results), output, out);
        return kOk;
    }
    json config{{"settings", o.all ? json("all") : json(base.label())},
                {"n", o.all ? json(nullptr) : json(base.total_n)},
                {"reps", base.replications},
                {"arms", std::string(to_string(base.arm_sampling))},
                {"zero_strata", std::string(to_string(base.zero_strata))},
                {"analytic_only", o.analytic_only},
                {"seed_source", seed_source}};
    auto j = envelope("simulate", std::move(config));
    j["seed"] = base.seed;
    json rs = json::array();
    for (const auto& r : results) {
        json cells = json::array();
        for (std::size_t i = 0; i < r.cells.size(); ++i) {
            const auto& c = r.cells[i];
            cells.push_back({{"effect", std::string(to_string(c.effect))},
                             {"conditioning", c.conditioning},
                             {"population", c.population_value},
                             {"mean_estimate", number_or_null(c.mean_estimate)},
                             {"sqrt_avar", c.sqrt_avar},
                             {"sqrt_var", number_or_null(c.sqrt_var)},
                             {"ratio", number_or_null(c.ratio)},
                             {"empty_strata", r.empty_strata[i / 2]}});
        }
        rs.push_back({{"setting", r.config.label()},
                      {"n", r.config.total_n},
                      {"n_x1", r.n_x1},
                      {"n_x2", r.n_x2},
                      {"insufficient_replications", r.insufficient_replications},
                      {"arm_redraws", r.arm_redraws},
                      {"max_decomposition_residual", r.max_decomposition_residual},
                      {"cells", std::move(cells)}});
    }
    j["results"] = std::move(rs);
    emit(j.dump(2) + "\n", output, out);
    return kOk;
}

// ---------------------------------------------------------------- gaussian

struct GaussianOptions {
    std::string corr, treatment = "X", outcome = "Y";
    std::optional<std::uint64_t> n;
    std::vector<std::string> controls;
};

int cmd_gaussian(const GaussianOptions& o, const Output& output, std::ostream& out) {
    if (!o.n) throw UsageError("gaussian needs --n");
    const auto c = read_correlation_file(o.corr, *o.n);
    c.index(o.treatment);
    c.index(o.outcome);
    std::vector<VarSet> sets;
    if (o.controls.empty()) {
        VarSet others;
        for (const auto& name : c.names()) {
            if (name != o.treatment && name != o.outcome) others.push_back(name);
        }
        if (others.size() > 12) throw Error(ErrorCode::kTooManyVariables, "give --controls explicitly");
        // Every subset, by size then in column order.
        for (std::size_t k = 0; k <= others.size(); ++k) {
            for (std::size_t mask = 0; mask < (std::size_t{1} << others.size()); ++mask) {
                if (static_cast<std::size_t>(__builtin_popcountll(mask)) != k) continue;
                VarSet s;
                for (std::size_t i = 0; i < others.size(); ++i) {
                    if (mask >> i & 1) s.push_back(others[i]);
                }
                sets.push_back(s);
            }
        }
    } else {
        for (const auto& text : o.controls) sets.push_back(parse_var_list(text));
    }

    json rows = json::array();
    std::string text = "controls,coefficient,asymptotic_sd\n";
    for (const auto& s : sets) {
        const double beta = regression_coefficient(c, o.outcome, o.treatment, s);
        std::optional<double> sd;
        if (c.sample_size() > s.size() + 2) sd = asymptotic_sd(c, o.outcome, o.treatment, s);
        rows.push_back({{"controls", s}, {"coefficient", beta}, {"asymptotic_sd", sd ? json(*sd) : json(nullptr)}});
        text += csv_escape(format_set(s)) + "," + fmt(beta) + "," + (sd ? fmt(*sd) : "") + "\n";
    }
    if (output.format == "csv") {
        emit(text, output, out);
        return kOk;
    }
    auto j = envelope("gaussian", {{"corr", o.corr}, {"n", *o.n}, {"treatment", o.treatment}, {"outcome", o.outcome}});
    j["seed"] = nullptr;
    j["results"] = std::move(rows);
    emit(j.dump(2) + "\n", output, out);
    return kOk;
}

}  // namespace

std::vector<std::string> parse_var_list(const std::string& text) {
    std::string t = trim(text);
    if (t.size() >= 2 && t.front() == '{' && t.back() == '}') t = t.substr(1, t.size() - 2);
    std::vector<std::string> out;
    if (trim(t).empty()) return out;
    std::size_t start = 0;
    while (true) {
        const auto comma = t.find(',', start);
        auto item = trim(t.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (item.empty()) throw UsageError("empty entry in list '" + text + "'");
        out.push_back(item);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Mediation analysis toolkit for discrete data", "medkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Output output;
    auto add_output = [&](CLI::App* sub) {
        sub->add_option("--format", output.format, "Report format");
        sub->add_option("--out", output.path, "Write the report to a file");
    };

    EstimateOptions est;
    auto* estimate = app.add_subcommand("estimate", "Point estimates of TE, NDE, NIE and CDE");
    estimate->add_option("--dist", est.dist, "Distribution CSV (prob column)")->check(CLI::ExistingFile);
    estimate->add_option("--counts", est.counts, "Counts CSV (count column)")->check(CLI::ExistingFile);
    estimate->add_option("--treatment", est.treatment, "Treatment variable")->capture_default_str();
    estimate->add_option("--outcome", est.outcome, "Outcome variable")->capture_default_str();
    estimate->add_option("--x", est.x, "Treated level (default: first level)");
    estimate->add_option("--xprime", est.xprime, "Baseline level (default: next level)");
    estimate->add_option("--y", est.y, "Outcome level (default: first level)");
    estimate->add_option("--mediators", est.mediators, "Comma separated mediator set");
    estimate->add_option("--covariates", est.covariates, "Comma separated covariate set");
    estimate->add_option("--s", est.s, "Mediator levels for the CDE, e.g. S=s1");
    estimate->add_option("--form", est.form, "Natural effect form: arm or covariate")->capture_default_str();
    add_output(estimate);

    EquivalenceOptions eqo;
    auto* equivalence = app.add_subcommand("equivalence", "Weak equivalence of two variable sets");
    equivalence->add_option("--dist", eqo.dist, "Distribution CSV")->check(CLI::ExistingFile);
    equivalence->add_option("--graph", eqo.graph, "Graph file")->check(CLI::ExistingFile);
    equivalence->add_option("--treatment", eqo.treatment, "Treatment variable")->capture_default_str();
    equivalence->add_option("--outcome", eqo.outcome, "Outcome variable")->capture_default_str();
    equivalence->add_option("--x", eqo.x, "Treated level");
    equivalence->add_option("--xprime", eqo.xprime, "Baseline level");
    equivalence->add_option("--t1", eqo.t1, "First set")->required();
    equivalence->add_option("--t2", eqo.t2, "Second set")->required();
    equivalence->add_option("--tol", eqo.tol, "Tolerance of the direct comparison")->capture_default_str();
    equivalence->add_option("--ci-tol", eqo.ci_tol, "Tolerance of independence checks")->capture_default_str();
    add_output(equivalence);

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo runs of the chain scenarios");
    simulate->add_option("--setting", sim.setting, "Scenario label such as A1B1");
    simulate->add_option("--config", sim.config, "key=value scenario file")->check(CLI::ExistingFile);
    simulate->add_option("--n", sim.n, "Total sample size");
    simulate->add_option("--reps", sim.reps, "Replications");
    simulate->add_option("--seed", sim.seed, "Seed (falls back to MEDIATION_KIT_SEED)");
    simulate->add_option("--threads", sim.threads, "Worker threads (0 = all cores)");
    simulate->add_option("--arms", sim.arms, "Arm sizes: random or fixed");
    simulate->add_option("--zero-strata", sim.zero_strata, "Empty treated strata: arm_rate or drop");
    simulate->add_flag("--all", sim.all, "Every setting at N = 1000 and 2000");
    simulate->add_flag("--analytic-only", sim.analytic_only, "Skip sampling");
    add_output(simulate);

    GaussianOptions gau;
    auto* gaussian = app.add_subcommand("gaussian", "Regression coefficients from a correlation matrix");
    gaussian->add_option("--corr", gau.corr, "Correlation CSV")->required()->check(CLI::ExistingFile);
    gaussian->add_option("--n", gau.n, "Sample size");
    gaussian->add_option("--treatment", gau.treatment, "Treatment variable")->capture_default_str();
    gaussian->add_option("--outcome", gau.outcome, "Response variable")->capture_default_str();
    gaussian->add_option("--controls", gau.controls, "Control set (repeatable; default: every subset)");
    add_output(gaussian);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsageError;
    }

    try {
        if (estimate->parsed()) {
            if (output.format.empty()) output.format = "json";
            require_format(output.format, {"json", "csv"});
            return cmd_estimate(est, output, out);
        }
        if (equivalence->parsed()) {
            if (output.format.empty()) output.format = "json";
            require_format(output.format, {"json", "csv"});
            return cmd_equivalence(eqo, output, out);
        }
        if (simulate->parsed()) {
            if (output.format.empty()) output.format = "csv";
            require_format(output.format, {"json", "csv", "table"});
            return cmd_simulate(sim, output, out);
        }
        if (output.format.empty()) output.format = "json";
        require_format(output.format, {"json", "csv"});
        return cmd_gaussian(gau, output, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return is_input_error(e.code()) ? kUsageError : kComputationError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kComputationError;
    }
}

}  // namespace medkit::cli
