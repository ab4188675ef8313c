#include "medkit/distribution.hpp"

#include <cmath>
#include <charconv>
#include <limits>
#include <numeric>
#include <sstream>

#include "io_util.hpp"
#include "medkit/error.hpp"

namespace medkit {

std::size_t Variable::level_index(std::string_view label) const {
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (levels[i] == label) return i;
    }
    throw Error(ErrorCode::kInvalidArgument, "variable " + name + " has no level '" + std::string(label) + "'");
}

Schema::Schema(std::vector<Variable> variables) : vars_(std::move(variables)) {
    strides_.assign(vars_.size(), 1);
    for (std::size_t i = vars_.size(); i-- > 0;) {
        const auto& v = vars_[i];
        if (v.name.empty()) throw Error(ErrorCode::kInvalidArgument, "empty variable name");
        if (v.levels.empty()) throw Error(ErrorCode::kInvalidArgument, "variable " + v.name + " has no levels");
        if (has_duplicates(v.levels)) throw Error(ErrorCode::kInvalidArgument, "variable " + v.name + " repeats a level");
        strides_[i] = cells_;
        if (cells_ > std::numeric_limits<std::size_t>::max() / v.levels.size()) {
            throw Error(ErrorCode::kTooManyVariables, "table too large");
        }
        cells_ *= v.levels.size();
    }
    if (has_duplicates(names())) throw Error(ErrorCode::kInvalidArgument, "duplicate variable name");
}

VarSet Schema::names() const {
    VarSet out;
    for (const auto& v : vars_) out.push_back(v.name);
    return out;
}

bool Schema::has(std::string_view name) const {
    for (const auto& v : vars_) {
        if (v.name == name) return true;
    }
    return false;
}

std::size_t Schema::position(std::string_view name) const {
    for (std::size_t i = 0; i < vars_.size(); ++i) {
        if (vars_[i].name == name) return i;
    }
    throw Error(ErrorCode::kUnknownVariable, std::string(name));
}

Schema Schema::subset(const VarSet& keep) const {
    if (has_duplicates(keep)) throw Error(ErrorCode::kOverlappingSets, "repeated variable in " + format_set(keep));
    std::vector<Variable> vars;
    for (const auto& name : keep) vars.push_back(variable(name));
    return Schema(std::move(vars));
}

std::vector<std::size_t> Schema::projection(const VarSet& keep) const {
    const Schema sub = subset(keep);
    std::vector<std::size_t> pos;
    for (const auto& name : keep) pos.push_back(position(name));
    std::vector<std::size_t> out(cells_);
    for (std::size_t cell = 0; cell < cells_; ++cell) {
        std::size_t idx = 0;
        for (std::size_t k = 0; k < pos.size(); ++k) idx += level_of(cell, pos[k]) * sub.stride(k);
        out[cell] = idx;
    }
    return out;
}

DiscreteJointDistribution::DiscreteJointDistribution(std::vector<Variable> variables, std::vector<double> table)
    : DiscreteJointDistribution(Schema(std::move(variables)), std::move(table)) {}

DiscreteJointDistribution::DiscreteJointDistribution(Schema schema, std::vector<double> table)
    : schema_(std::move(schema)), table_(std::move(table)) {
    if (table_.size() != schema_.num_cells()) {
        throw Error(ErrorCode::kInvalidArgument, "table has " + std::to_string(table_.size()) + " entries, expected " +
                                                     std::to_string(schema_.num_cells()));
    }
    double total = 0.0;
    for (double p : table_) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw Error(ErrorCode::kInvalidArgument, "negative or non-finite probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-6) {
        throw Error(ErrorCode::kInvalidArgument, "probabilities sum to " + std::to_string(total));
    }
    for (double& p : table_) p /= total;
}

std::vector<double> DiscreteJointDistribution::project(const VarSet& keep) const {
    const auto map = schema_.projection(keep);
    std::vector<double> out(schema_.subset(keep).num_cells(), 0.0);
    for (std::size_t i = 0; i < table_.size(); ++i) out[map[i]] += table_[i];
    return out;
}

double DiscreteJointDistribution::probability(const Assignment& event) const {
    std::vector<std::pair<std::size_t, std::size_t>> fixed;
    for (const auto& [name, label] : event) {
        auto pos = schema_.position(name);
        fixed.emplace_back(pos, schema_.variables()[pos].level_index(label));
    }
    double p = 0.0;
    for (std::size_t cell = 0; cell < table_.size(); ++cell) {
        bool match = true;
        for (auto [pos, level] : fixed) {
            if (schema_.level_of(cell, pos) != level) {
                match = false;
                break;
            }
        }
        if (match) p += table_[cell];
    }
    return p;
}

DiscreteJointDistribution marginal(const DiscreteJointDistribution& d, const VarSet& keep) {
    auto table = d.project(keep);
    return DiscreteJointDistribution(d.schema().subset(keep), std::move(table));
}

DiscreteJointDistribution conditional(const DiscreteJointDistribution& d, const VarSet& target, const Assignment& given) {
    VarSet tgt = target;
    if (tgt.empty()) {
        for (const auto& name : d.names()) {
            if (!given.count(name)) tgt.push_back(name);
        }
    }
    for (const auto& name : tgt) {
        d.schema().position(name);
        if (given.count(name)) throw Error(ErrorCode::kOverlappingSets, name + " is both target and condition");
    }
    VarSet all = tgt;
    for (const auto& [name, label] : given) all.push_back(name);
    const Schema sub = d.schema().subset(all);
    const auto joint = d.project(all);

    std::size_t offset = 0;
    for (std::size_t k = tgt.size(); k < all.size(); ++k) {
        offset += sub.variables()[k].level_index(given.at(all[k])) * sub.stride(k);
    }
    const Schema target_schema = d.schema().subset(tgt);
    std::vector<double> slice(target_schema.num_cells());
    double mass = 0.0;
    for (std::size_t i = 0; i < slice.size(); ++i) {
        // Target variables lead `all`, so the target cell index scales by the
        // product of the given-variable radices.
        slice[i] = joint[i * (sub.num_cells() / target_schema.num_cells()) + offset];
        mass += slice[i];
    }
    if (!(mass > 0.0)) throw Error(ErrorCode::kZeroProbabilityCondition, "conditioning event has probability zero");
    for (double& p : slice) p /= mass;
    return DiscreteJointDistribution(target_schema, std::move(slice));
}

double independence_discrepancy(const DiscreteJointDistribution& d, const VarSet& a, const VarSet& b, const VarSet& c) {
    for (const auto* set : {&a, &b, &c}) {
        for (const auto& name : *set) d.schema().position(name);
    }
    if (!set_intersection(a, b).empty() || !set_intersection(a, c).empty() || !set_intersection(b, c).empty()) {
        throw Error(ErrorCode::kOverlappingSets, "independence sets must be disjoint");
    }
    if (a.empty() || b.empty()) return 0.0;
    VarSet all = a;
    all.insert(all.end(), b.begin(), b.end());
    all.insert(all.end(), c.begin(), c.end());
    const Schema sub = d.schema().subset(all);
    const auto joint = d.project(all);

    std::size_t na = 1, nb = 1, nc = 1;
    for (std::size_t k = 0; k < a.size(); ++k) na *= sub.variables()[k].levels.size();
    for (std::size_t k = a.size(); k < a.size() + b.size(); ++k) nb *= sub.variables()[k].levels.size();
    for (std::size_t k = a.size() + b.size(); k < all.size(); ++k) nc *= sub.variables()[k].levels.size();

    // joint index = (ia * nb + ib) * nc + ic
    std::vector<double> pc(nc, 0.0), pac(na * nc, 0.0), pbc(nb * nc, 0.0);
    for (std::size_t ia = 0; ia < na; ++ia) {
        for (std::size_t ib = 0; ib < nb; ++ib) {
            for (std::size_t ic = 0; ic < nc; ++ic) {
                const double p = joint[(ia * nb + ib) * nc + ic];
                pc[ic] += p;
                pac[ia * nc + ic] += p;
                pbc[ib * nc + ic] += p;
            }
        }
    }
    double worst = 0.0;
    for (std::size_t ic = 0; ic < nc; ++ic) {
        if (!(pc[ic] > 0.0)) continue;
        for (std::size_t ia = 0; ia < na; ++ia) {
            for (std::size_t ib = 0; ib < nb; ++ib) {
                const double lhs = joint[(ia * nb + ib) * nc + ic] / pc[ic];
                const double rhs = (pac[ia * nc + ic] / pc[ic]) * (pbc[ib * nc + ic] / pc[ic]);
                worst = std::max(worst, std::abs(lhs - rhs));
            }
        }
    }
    return worst;
}

bool conditionally_independent(const DiscreteJointDistribution& d, const VarSet& a, const VarSet& b, const VarSet& c,
                               double tol) {
    return independence_discrepancy(d, a, b, c) <= tol;
}

ContingencyTable::ContingencyTable(std::vector<Variable> variables, std::vector<std::uint64_t> counts)
    : ContingencyTable(Schema(std::move(variables)), std::move(counts)) {}

ContingencyTable::ContingencyTable(Schema schema, std::vector<std::uint64_t> counts)
    : schema_(std::move(schema)), counts_(std::move(counts)) {
    if (counts_.size() != schema_.num_cells()) {
        throw Error(ErrorCode::kInvalidArgument, "count table has " + std::to_string(counts_.size()) +
                                                     " entries, expected " + std::to_string(schema_.num_cells()));
    }
}

std::uint64_t ContingencyTable::total() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::vector<std::uint64_t> ContingencyTable::arm_totals(std::string_view treatment) const {
    const auto pos = schema_.position(treatment);
    std::vector<std::uint64_t> out(schema_.variables()[pos].levels.size(), 0);
    for (std::size_t cell = 0; cell < counts_.size(); ++cell) out[schema_.level_of(cell, pos)] += counts_[cell];
    return out;
}

DiscreteJointDistribution from_counts(const ContingencyTable& t, std::string_view treatment) {
    const auto arms = t.arm_totals(treatment);
    const auto& levels = t.schema().variable(treatment).levels;
    for (std::size_t i = 0; i < arms.size(); ++i) {
        if (arms[i] == 0) throw Error(ErrorCode::kEmptyTreatmentArm, "no observations with " + std::string(treatment) + "=" + levels[i]);
    }
    // pr(x) pr(rest|x) = (n_x/N)(n_{x,rest}/n_x) = n_{x,rest}/N.
    const double total = static_cast<double>(t.total());
    std::vector<double> table(t.counts().size());
    for (std::size_t i = 0; i < table.size(); ++i) table[i] = static_cast<double>(t.counts()[i]) / total;
    return DiscreteJointDistribution(t.schema(), std::move(table));
}

std::vector<std::uint64_t> sample_multinomial(std::uint64_t n, const std::vector<double>& probs, std::mt19937_64& rng) {
    std::vector<std::uint64_t> out(probs.size(), 0);
    double remaining_mass = std::accumulate(probs.begin(), probs.end(), 0.0);
    std::uint64_t remaining = n;
    for (std::size_t i = 0; i < probs.size() && remaining > 0; ++i) {
        if (i + 1 == probs.size() || remaining_mass <= probs[i]) {
            out[i] = remaining;
            remaining = 0;
            break;
        }
        const double p = probs[i] / remaining_mass;
        if (p > 0.0) {
            std::binomial_distribution<std::uint64_t> draw(remaining, std::min(1.0, p));
            out[i] = draw(rng);
            remaining -= out[i];
        }
        remaining_mass -= probs[i];
    }
    return out;
}

ContingencyTable sample_counts(const DiscreteJointDistribution& d, std::string_view treatment,
                               const std::map<std::string, std::uint64_t>& arm_sizes, std::mt19937_64& rng) {
    const auto& schema = d.schema();
    const auto pos = schema.position(treatment);
    const auto& xvar = schema.variables()[pos];
    std::vector<std::uint64_t> counts(schema.num_cells(), 0);
    const std::size_t stride = schema.stride(pos);
    const std::size_t radix = xvar.levels.size();

    for (const auto& [label, n] : arm_sizes) {
        const auto level = xvar.level_index(label);
        if (n == 0) continue;
        std::vector<std::size_t> cells;
        std::vector<double> probs;
        for (std::size_t cell = 0; cell < counts.size(); ++cell) {
            if ((cell / stride) % radix == level) {
                cells.push_back(cell);
                probs.push_back(d.table()[cell]);
            }
        }
        if (!(std::accumulate(probs.begin(), probs.end(), 0.0) > 0.0)) {
            throw Error(ErrorCode::kZeroProbabilityCondition, "arm " + label + " has probability zero");
        }
        const auto draw = sample_multinomial(n, probs, rng);
        for (std::size_t k = 0; k < cells.size(); ++k) counts[cells[k]] = draw[k];
    }
    return ContingencyTable(schema, std::move(counts));
}

ContingencyTable sample_counts(const DiscreteJointDistribution& d, std::string_view treatment,
                               const std::map<std::string, std::uint64_t>& arm_sizes, std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    std::mt19937_64 rng(seq);
    return sample_counts(d, treatment, arm_sizes, rng);
}

namespace {

struct ParsedTable {
    Schema schema;
    std::vector<double> values;
};

ParsedTable parse_table_csv(std::string_view text, std::string_view value_column, bool integral) {
    const auto lines = detail::content_lines(text);
    if (lines.empty()) throw Error(ErrorCode::kParseError, "empty table file");
    const auto header = detail::split_csv_line(lines[0].second);
    if (header.size() < 2 || header.back() != value_column) {
        throw Error(ErrorCode::kParseError, "line " + std::to_string(lines[0].first) + ": header must end with '" +
                                                std::string(value_column) + "' after at least one variable column");
    }
    const std::size_t nvars = header.size() - 1;
    std::vector<Variable> vars(nvars);
    for (std::size_t k = 0; k < nvars; ++k) {
        if (header[k].empty()) throw Error(ErrorCode::kParseError, "line " + std::to_string(lines[0].first) + ": empty column name");
        vars[k].name = header[k];
    }
    if (has_duplicates(VarSet(header.begin(), header.end()))) {
        throw Error(ErrorCode::kParseError, "line " + std::to_string(lines[0].first) + ": duplicate column name");
    }

    struct Row {
        std::size_t line;
        std::vector<std::size_t> levels;
        double value;
    };
    std::vector<Row> rows;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto& [lineno, content] = lines[r];
        const auto where = "line " + std::to_string(lineno) + ": ";
        const auto fields = detail::split_csv_line(content);
        if (fields.size() != header.size()) {
            throw Error(ErrorCode::kParseError, where + "expected " + std::to_string(header.size()) + " fields, got " +
                                                    std::to_string(fields.size()));
        }
        Row row{lineno, {}, 0.0};
        for (std::size_t k = 0; k < nvars; ++k) {
            if (fields[k].empty()) throw Error(ErrorCode::kParseError, where + "empty level in column " + header[k]);
            auto& levels = vars[k].levels;
            auto it = std::find(levels.begin(), levels.end(), fields[k]);
            if (it == levels.end()) {
                levels.push_back(fields[k]);
                row.levels.push_back(levels.size() - 1);
            } else {
                row.levels.push_back(static_cast<std::size_t>(it - levels.begin()));
            }
        }
        const auto& v = fields.back();
        if (integral) {
            std::uint64_t n = 0;
            auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
            if (ec != std::errc() || ptr != v.data() + v.size()) {
                throw Error(ErrorCode::kParseError, where + "invalid count '" + v + "'");
            }
            row.value = static_cast<double>(n);
        } else {
            std::size_t used = 0;
            double p = 0.0;
            try {
                p = std::stod(v, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != v.size() || v.empty() || !std::isfinite(p) || p < 0.0) {
                throw Error(ErrorCode::kParseError, where + "invalid probability '" + v + "'");
            }
            row.value = p;
        }
        rows.push_back(std::move(row));
    }

    Schema schema(std::move(vars));
    std::vector<double> values(schema.num_cells(), 0.0);
    std::vector<bool> seen(schema.num_cells(), false);
    for (const auto& row : rows) {
        std::size_t idx = 0;
        for (std::size_t k = 0; k < nvars; ++k) idx += row.levels[k] * schema.stride(k);
        if (seen[idx]) throw Error(ErrorCode::kParseError, "line " + std::to_string(row.line) + ": duplicate configuration");
        seen[idx] = true;
        values[idx] = row.value;
    }
    return {std::move(schema), std::move(values)};
}

std::string format_number(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

template <typename Value, typename Fmt>
std::string format_table_csv(const Schema& schema, const std::vector<Value>& values, std::string_view column, Fmt fmt) {
    std::string out;
    for (const auto& v : schema.variables()) out += v.name + ",";
    out += std::string(column) + "\n";
    for (std::size_t cell = 0; cell < values.size(); ++cell) {
        for (std::size_t k = 0; k < schema.num_variables(); ++k) {
            out += schema.variables()[k].levels[schema.level_of(cell, k)] + ",";
        }
        out += fmt(values[cell]) + "\n";
    }
    return out;
}

}  // namespace

DiscreteJointDistribution parse_distribution_csv(std::string_view text) {
    auto parsed = parse_table_csv(text, "prob", false);
    return DiscreteJointDistribution(std::move(parsed.schema), std::move(parsed.values));
}

ContingencyTable parse_counts_csv(std::string_view text) {
    auto parsed = parse_table_csv(text, "count", true);
    std::vector<std::uint64_t> counts(parsed.values.begin(), parsed.values.end());
    return ContingencyTable(std::move(parsed.schema), std::move(counts));
}

DiscreteJointDistribution read_distribution_file(const std::string& path) {
    return parse_distribution_csv(detail::read_text_file(path, "distribution"));
}

ContingencyTable read_counts_file(const std::string& path) {
    return parse_counts_csv(detail::read_text_file(path, "counts"));
}

std::string format_distribution_csv(const DiscreteJointDistribution& d) {
    return format_table_csv(d.schema(), d.table(), "prob", format_number);
}

std::string format_counts_csv(const ContingencyTable& t) {
    return format_table_csv(t.schema(), t.counts(), "count", [](std::uint64_t n) { return std::to_string(n); });
}

}  // namespace medkit
