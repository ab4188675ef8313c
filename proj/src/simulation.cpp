#include "medkit/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>
#include <tuple>

#include "io_util.hpp"
#include "medkit/error.hpp"
#include "medkit/variance.hpp"

namespace medkit {

std::string_view to_string(OutcomeSetting s) { return s == OutcomeSetting::kA1 ? "A1" : "A2"; }

std::string_view to_string(TreatmentSetting s) {
    switch (s) {
        case TreatmentSetting::kB1: return "B1";
        case TreatmentSetting::kB2: return "B2";
        case TreatmentSetting::kB3: return "B3";
    }
    return "?";
}

std::string_view to_string(ArmSampling s) { return s == ArmSampling::kRandom ? "random" : "fixed"; }

std::string_view to_string(ZeroStratumPolicy p) { return p == ZeroStratumPolicy::kArmRate ? "arm_rate" : "drop"; }

double treated_share(TreatmentSetting s) {
    switch (s) {
        case TreatmentSetting::kB1: return 0.1;
        case TreatmentSetting::kB2: return 0.5;
        case TreatmentSetting::kB3: return 0.9;
    }
    return 0.0;
}

std::string ScenarioConfig::label() const { return std::string(to_string(outcome)) + std::string(to_string(treatment)); }

void ScenarioConfig::validate() const {
    if (total_n < 2) throw Error(ErrorCode::kInvalidArgument, "total sample size must be at least 2");
    if (replications == 0) throw Error(ErrorCode::kInvalidArgument, "replications must be at least 1");
    for (double p : {s1_given_w1, s1_given_w2, w1_given_x1, w1_given_x2}) {
        if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "chain probabilities must lie in [0,1]");
    }
    const auto [n1, n2] = analytic_arm_sizes(*this);
    if (n1 == 0 || n2 == 0) throw Error(ErrorCode::kInvalidArgument, "sample size too small for both arms");
}

void parse_setting_label(std::string_view label, ScenarioConfig& c) {
    if (label.size() != 4) throw Error(ErrorCode::kInvalidArgument, "setting must look like A1B2, got '" + std::string(label) + "'");
    const auto a = label.substr(0, 2), b = label.substr(2, 2);
    if (a == "A1") c.outcome = OutcomeSetting::kA1;
    else if (a == "A2") c.outcome = OutcomeSetting::kA2;
    else throw Error(ErrorCode::kInvalidArgument, "unknown outcome setting '" + std::string(a) + "'");
    if (b == "B1") c.treatment = TreatmentSetting::kB1;
    else if (b == "B2") c.treatment = TreatmentSetting::kB2;
    else if (b == "B3") c.treatment = TreatmentSetting::kB3;
    else throw Error(ErrorCode::kInvalidArgument, "unknown treatment setting '" + std::string(b) + "'");
}

namespace {

std::uint64_t parse_uint(const std::string& v, const std::string& where) {
    std::size_t used = 0;
    unsigned long long n = 0;
    try {
        if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
        n = std::stoull(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty()) throw Error(ErrorCode::kParseError, where + "expected a non-negative integer, got '" + v + "'");
    return n;
}

}  // namespace

ScenarioConfig parse_scenario_config(std::string_view text) {
    ScenarioConfig c;
    for (const auto& [lineno, line] : detail::content_lines(text)) {
        const auto where = "line " + std::to_string(lineno) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::kParseError, where + "expected key=value");
        const auto key = detail::trim(line.substr(0, eq));
        const auto value = detail::trim(line.substr(eq + 1));
        try {
            if (key == "setting") {
                parse_setting_label(value, c);
            } else if (key == "outcome") {
                ScenarioConfig tmp;
                parse_setting_label(value + "B1", tmp);
                c.outcome = tmp.outcome;
            } else if (key == "treatment") {
                ScenarioConfig tmp;
                parse_setting_label("A1" + value, tmp);
                c.treatment = tmp.treatment;
            } else if (key == "n") {
                c.total_n = parse_uint(value, where);
            } else if (key == "reps") {
                c.replications = parse_uint(value, where);
            } else if (key == "seed") {
                c.seed = parse_uint(value, where);
            } else if (key == "threads") {
                c.threads = static_cast<unsigned>(parse_uint(value, where));
            } else if (key == "arms") {
                if (value == "random") c.arm_sampling = ArmSampling::kRandom;
                else if (value == "fixed") c.arm_sampling = ArmSampling::kFixed;
                else throw Error(ErrorCode::kParseError, where + "arms must be random or fixed");
            } else if (key == "zero_strata") {
                if (value == "arm_rate") c.zero_strata = ZeroStratumPolicy::kArmRate;
                else if (value == "drop") c.zero_strata = ZeroStratumPolicy::kDropStratum;
                else throw Error(ErrorCode::kParseError, where + "zero_strata must be arm_rate or drop");
            } else {
                throw Error(ErrorCode::kParseError, where + "unknown key '" + key + "'");
            }
        } catch (const Error& e) {
            if (e.code() == ErrorCode::kParseError) throw;
            throw Error(ErrorCode::kParseError, where + e.what());
        }
    }
    return c;
}

ScenarioConfig read_scenario_config_file(const std::string& path) {
    return parse_scenario_config(detail::read_text_file(path, "scenario config"));
}

DiscreteJointDistribution build_scenario_distribution(const ScenarioConfig& c) {
    const double px1 = treated_share(c.treatment);
    // pr(y1|x,s) indexed [x][s].
    double py1[2][2];
    if (c.outcome == OutcomeSetting::kA1) {
        py1[0][0] = 0.7; py1[0][1] = 0.2; py1[1][0] = 0.6; py1[1][1] = 0.2;
    } else {
        py1[0][0] = 0.7; py1[0][1] = 0.2; py1[1][0] = 0.2; py1[1][1] = 0.6;
    }
    const double pw1[2] = {c.w1_given_x1, c.w1_given_x2};
    const double ps1[2] = {c.s1_given_w1, c.s1_given_w2};

    std::vector<Variable> vars{{"X", {"x1", "x2"}}, {"W", {"w1", "w2"}}, {"S", {"s1", "s2"}}, {"Y", {"y1", "y2"}}};
    std::vector<double> table;
    table.reserve(16);
    for (int x = 0; x < 2; ++x) {
        const double p_x = x == 0 ? px1 : 1.0 - px1;
        for (int w = 0; w < 2; ++w) {
            const double p_w = w == 0 ? pw1[x] : 1.0 - pw1[x];
            for (int s = 0; s < 2; ++s) {
                const double p_s = s == 0 ? ps1[w] : 1.0 - ps1[w];
                for (int y = 0; y < 2; ++y) {
                    const double p_y = y == 0 ? py1[x][s] : 1.0 - py1[x][s];
                    table.push_back(p_x * p_w * p_s * p_y);
                }
            }
        }
    }
    return DiscreteJointDistribution(std::move(vars), std::move(table));
}

const std::vector<VarSet>& scenario_conditioning_sets() {
    static const std::vector<VarSet> sets{{"S"}, {"W"}, {"S", "W"}};
    return sets;
}

const CellResult& SimulationResult::cell(const VarSet& conditioning, EffectKind effect) const {
    for (const auto& c : cells) {
        if (c.effect == effect && same_members(c.conditioning, conditioning)) return c;
    }
    throw Error(ErrorCode::kInvalidArgument, "no result for " + format_set(conditioning));
}

std::pair<std::uint64_t, std::uint64_t> analytic_arm_sizes(const ScenarioConfig& c) {
    const auto n1 = static_cast<std::uint64_t>(std::llround(static_cast<double>(c.total_n) * treated_share(c.treatment)));
    return {n1, c.total_n - n1};
}

SimulationResult analytic_scenario(const ScenarioConfig& c) {
    c.validate();
    const auto d = build_scenario_distribution(c);
    SimulationResult r;
    r.config = c;
    std::tie(r.n_x1, r.n_x2) = analytic_arm_sizes(c);
    for (const auto& set : scenario_conditioning_sets()) {
        const VarianceInput v{"X", "Y", "x1", "x2", "y1", set, r.n_x1, r.n_x2};
        const auto strata = stratum_probabilities(d, v);
        const EffectQuery q{"X", "Y", "x1", "x2", "y1", set, {}};
        CellResult de{set, EffectKind::kNDE, nde(d, q).value, std::numeric_limits<double>::quiet_NaN(),
                      std::sqrt(var_nde(strata, static_cast<double>(r.n_x1), static_cast<double>(r.n_x2))),
                      std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
        CellResult ie{set, EffectKind::kNIE, nie(d, q).value, std::numeric_limits<double>::quiet_NaN(),
                      std::sqrt(var_nie(strata, static_cast<double>(r.n_x1), static_cast<double>(r.n_x2))),
                      std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
        r.cells.push_back(de);
        r.cells.push_back(ie);
    }
    r.empty_strata.assign(scenario_conditioning_sets().size(), 0);
    r.replications_affected.assign(scenario_conditioning_sets().size(), 0);
    return r;
}

namespace {

struct ReplicationOutput {
    // Per conditioning set.
    std::vector<double> nde, nie;
    std::vector<std::uint32_t> empty;
    double residual = 0.0;
    bool redrawn = false;
};

std::mt19937_64 replication_rng(std::uint64_t seed, std::uint64_t rep) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(rep >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace

SimulationResult run_scenario(const ScenarioConfig& c) {
    SimulationResult r = analytic_scenario(c);
    const auto d = build_scenario_distribution(c);
    const auto& sets = scenario_conditioning_sets();
    const std::size_t nsets = sets.size();

    // Within-arm cell probabilities over (W, S, Y).
    const VarSet cell_vars{"W", "S", "Y"};
    const auto arm1 = conditional(d, cell_vars, {{"X", "x1"}});
    const auto arm2 = conditional(d, cell_vars, {{"X", "x2"}});
    // Cell -> (stratum, outcome) index, outcome level y1 = 0.
    std::vector<std::vector<std::size_t>> maps;
    std::vector<std::size_t> nstrata;
    for (const auto& set : sets) {
        VarSet keep = set;
        keep.push_back("Y");
        maps.push_back(arm1.schema().projection(keep));
        nstrata.push_back(arm1.schema().subset(set).num_cells());
    }

    const double px1 = treated_share(c.treatment);
    const std::uint64_t reps = c.replications;
    std::vector<ReplicationOutput> out(reps);

    auto work = [&](std::uint64_t begin, std::uint64_t end) {
        std::vector<StratumCounts> strata;
        for (std::uint64_t rep = begin; rep < end; ++rep) {
            auto rng = replication_rng(c.seed, rep);
            auto& o = out[rep];
            std::uint64_t n1 = r.n_x1, n2 = r.n_x2;
            if (c.arm_sampling == ArmSampling::kRandom) {
                std::binomial_distribution<std::uint64_t> split(c.total_n, px1);
                do {
                    n1 = split(rng);
                    n2 = c.total_n - n1;
                    if (n1 == 0 || n2 == 0) o.redrawn = true;
                } while (n1 == 0 || n2 == 0);
            }
            const auto c1 = sample_multinomial(n1, arm1.table(), rng);
            const auto c2 = sample_multinomial(n2, arm2.table(), rng);
            o.nde.resize(nsets);
            o.nie.resize(nsets);
            o.empty.resize(nsets);
            for (std::size_t k = 0; k < nsets; ++k) {
                strata.assign(nstrata[k], StratumCounts{});
                for (std::size_t cell = 0; cell < c1.size(); ++cell) {
                    const std::size_t u = maps[k][cell] / 2;
                    const bool y1 = maps[k][cell] % 2 == 0;
                    strata[u].n1u += c1[cell];
                    strata[u].n2u += c2[cell];
                    if (y1) {
                        strata[u].n1uy += c1[cell];
                        strata[u].n2uy += c2[cell];
                    }
                }
                const auto e = plug_in_natural_effects(strata, c.zero_strata);
                o.nde[k] = e.nde;
                o.nie[k] = e.nie;
                o.empty[k] = static_cast<std::uint32_t>(e.empty_strata);
                o.residual = std::max(o.residual, std::abs(e.nde + e.nie - e.te));
            }
        }
    };

    unsigned threads = c.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : c.threads;
    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, reps));
    if (threads <= 1) {
        work(0, reps);
    } else {
        std::vector<std::thread> pool;
        const std::uint64_t chunk = (reps + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::uint64_t begin = t * chunk, end = std::min(reps, begin + chunk);
            if (begin < end) pool.emplace_back(work, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    // Serial reduction in replication order keeps results thread-count independent.
    r.insufficient_replications = reps < 2;
    for (const auto& o : out) {
        r.max_decomposition_residual = std::max(r.max_decomposition_residual, o.residual);
        if (o.redrawn) ++r.arm_redraws;
        for (std::size_t k = 0; k < nsets; ++k) {
            r.empty_strata[k] += o.empty[k];
            if (o.empty[k] > 0) ++r.replications_affected[k];
        }
    }
    for (std::size_t k = 0; k < nsets; ++k) {
        for (int which = 0; which < 2; ++which) {
            auto& cell = r.cells[2 * k + which];
            double mean = 0.0;
            for (const auto& o : out) mean += which == 0 ? o.nde[k] : o.nie[k];
            mean /= static_cast<double>(reps);
            cell.mean_estimate = mean;
            if (reps >= 2) {
                double ss = 0.0;
                for (const auto& o : out) {
                    const double dev = (which == 0 ? o.nde[k] : o.nie[k]) - mean;
                    ss += dev * dev;
                }
                cell.sqrt_var = std::sqrt(ss / static_cast<double>(reps - 1));
                cell.ratio = cell.sqrt_var / cell.sqrt_avar;
            }
        }
    }
    return r;
}

namespace {

std::vector<ScenarioConfig> table4_configs(std::uint64_t seed, std::uint64_t reps, unsigned threads) {
    std::vector<ScenarioConfig> out;
    for (auto a : {OutcomeSetting::kA1, OutcomeSetting::kA2}) {
        for (auto b : {TreatmentSetting::kB1, TreatmentSetting::kB2, TreatmentSetting::kB3}) {
            for (std::uint64_t n : {1000u, 2000u}) {
                ScenarioConfig c;
                c.outcome = a;
                c.treatment = b;
                c.total_n = n;
                c.replications = reps;
                c.seed = seed;
                c.threads = threads;
                out.push_back(c);
            }
        }
    }
    return out;
}

std::string fmt(double v, int digits = 6) {
    if (std::isnan(v)) return "NA";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string set_label(const VarSet& s) { return s.size() == 1 ? s[0] : format_set(s); }

}  // namespace

std::vector<SimulationResult> reproduce_table4(std::uint64_t seed, std::uint64_t replications, unsigned threads) {
    std::vector<SimulationResult> out;
    for (const auto& c : table4_configs(seed, replications, threads)) out.push_back(run_scenario(c));
    return out;
}

std::vector<SimulationResult> reproduce_table4_analytic() {
    std::vector<SimulationResult> out;
    for (const auto& c : table4_configs(kDefaultSeed, 1, 1)) out.push_back(analytic_scenario(c));
    return out;
}

std::string format_simulation_csv(const std::vector<SimulationResult>& results) {
    std::string out =
        "setting,n,n_x1,n_x2,reps,seed,effect,conditioning,population,mean_estimate,sqrt_avar,sqrt_var,ratio,"
        "empty_strata,replications_affected\n";
    for (const auto& r : results) {
        for (std::size_t i = 0; i < r.cells.size(); ++i) {
            const auto& c = r.cells[i];
            const std::size_t k = i / 2;
            out += r.config.label() + "," + std::to_string(r.config.total_n) + "," + std::to_string(r.n_x1) + "," +
                   std::to_string(r.n_x2) + "," + std::to_string(r.config.replications) + "," +
                   std::to_string(r.config.seed) + "," + std::string(to_string(c.effect)) + ",\"" +
                   set_label(c.conditioning) + "\"," + fmt(c.population_value, 8) + "," + fmt(c.mean_estimate, 8) +
                   "," + fmt(c.sqrt_avar, 8) + "," + fmt(c.sqrt_var, 8) + "," + fmt(c.ratio, 4) + "," +
                   std::to_string(r.empty_strata[k]) + "," + std::to_string(r.replications_affected[k]) + "\n";
        }
    }
    return out;
}

std::string format_table4(const std::vector<SimulationResult>& results) {
    auto find = [&](OutcomeSetting a, TreatmentSetting b, std::uint64_t n) -> const SimulationResult* {
        for (const auto& r : results) {
            if (r.config.outcome == a && r.config.treatment == b && r.config.total_n == n) return &r;
        }
        return nullptr;
    };
    std::string out;
    char line[256];
    for (auto a : {OutcomeSetting::kA1, OutcomeSetting::kA2}) {
        for (auto effect : {EffectKind::kNDE, EffectKind::kNIE}) {
            std::snprintf(line, sizeof line, "%s %s\n%-6s %-11s", std::string(to_string(a)).c_str(),
                          std::string(to_string(effect)).c_str(), "n", "");
            out += line;
            for (auto b : {TreatmentSetting::kB1, TreatmentSetting::kB2, TreatmentSetting::kB3}) {
                std::snprintf(line, sizeof line, " | %-22s", std::string(to_string(b)).c_str());
                out += line;
            }
            out += "\n";
            std::snprintf(line, sizeof line, "%-6s %-11s", "", "");
            out += line;
            for (int b = 0; b < 3; ++b) {
                std::snprintf(line, sizeof line, " | %-6s %-6s %-8s", "S", "W", "{S,W}");
                out += line;
            }
            out += "\n";
            for (std::uint64_t n : {1000u, 2000u}) {
                for (int row = 0; row < 2; ++row) {
                    std::snprintf(line, sizeof line, "%-6s %-11s", row == 0 ? std::to_string(n).c_str() : "",
                                  row == 0 ? "sqrt(a.var)" : "sqrt(var)");
                    out += line;
                    for (auto b : {TreatmentSetting::kB1, TreatmentSetting::kB2, TreatmentSetting::kB3}) {
                        out += " |";
                        const auto* r = find(a, b, n);
                        for (const auto& set : scenario_conditioning_sets()) {
                            double v = std::numeric_limits<double>::quiet_NaN();
                            if (r) {
                                const auto& cell = r->cell(set, effect);
                                v = row == 0 ? cell.sqrt_avar : cell.sqrt_var;
                            }
                            std::snprintf(line, sizeof line, " %-6s", fmt(v, 4).c_str());
                            out += line;
                        }
                        out += "  ";
                    }
                    out += "\n";
                }
            }
            out += "\n";
        }
    }
    return out;
}

}  // namespace medkit
