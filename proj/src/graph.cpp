#include "medkit/graph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>

#include "medkit/error.hpp"

namespace medkit {

namespace {

bool valid_token(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '#') return false;
    }
    return true;
}

}  // namespace

DirectedGraph DirectedGraph::build(std::vector<std::string> nodes, std::vector<Edge> edges) {
    DirectedGraph g;
    g.names_ = std::move(nodes);
    for (std::size_t i = 0; i < g.names_.size(); ++i) {
        const auto& n = g.names_[i];
        if (!valid_token(n)) throw Error(ErrorCode::kInvalidArgument, "invalid node name '" + n + "'");
        if (!g.index_.emplace(n, i).second) throw Error(ErrorCode::kInvalidArgument, "duplicate node '" + n + "'");
    }
    g.parents_.assign(g.names_.size(), {});
    g.children_.assign(g.names_.size(), {});
    for (const auto& e : edges) {
        auto p = g.index_.find(e.parent);
        auto c = g.index_.find(e.child);
        if (p == g.index_.end() || c == g.index_.end()) {
            throw Error(ErrorCode::kUnknownEndpoint, "edge " + e.parent + " -> " + e.child);
        }
        if (p->second == c->second) throw Error(ErrorCode::kCycleDetected, "self-loop on " + e.parent);
        auto& ch = g.children_[p->second];
        if (std::find(ch.begin(), ch.end(), c->second) != ch.end()) {
            throw Error(ErrorCode::kDuplicateEdge, "edge " + e.parent + " -> " + e.child);
        }
        ch.push_back(c->second);
        g.parents_[c->second].push_back(p->second);
    }
    g.edges_ = std::move(edges);

    // Kahn's algorithm; leftover nodes lie on a cycle.
    std::vector<std::size_t> indegree(g.names_.size());
    for (std::size_t i = 0; i < g.names_.size(); ++i) indegree[i] = g.parents_[i].size();
    std::deque<NodeId> ready;
    for (std::size_t i = 0; i < indegree.size(); ++i) {
        if (indegree[i] == 0) ready.push_back(i);
    }
    while (!ready.empty()) {
        NodeId n = ready.front();
        ready.pop_front();
        g.topo_.push_back(n);
        for (NodeId c : g.children_[n]) {
            if (--indegree[c] == 0) ready.push_back(c);
        }
    }
    if (g.topo_.size() != g.names_.size()) {
        std::string members;
        for (std::size_t i = 0; i < indegree.size(); ++i) {
            if (indegree[i] > 0) members += " " + g.names_[i];
        }
        throw Error(ErrorCode::kCycleDetected, "cycle through" + members);
    }
    return g;
}

bool DirectedGraph::has_node(std::string_view name) const {
    return index_.find(std::string(name)) != index_.end();
}

DirectedGraph::NodeId DirectedGraph::id(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) throw Error(ErrorCode::kUnknownNode, std::string(name));
    return it->second;
}

VarSet DirectedGraph::parents(std::string_view name) const {
    VarSet out;
    for (NodeId p : parents_[id(name)]) out.push_back(names_[p]);
    return out;
}

VarSet DirectedGraph::children(std::string_view name) const {
    VarSet out;
    for (NodeId c : children_[id(name)]) out.push_back(names_[c]);
    return out;
}

namespace {

std::vector<bool> reach(const DirectedGraph& g, const VarSet& set, bool downward) {
    std::vector<bool> seen(g.size(), false);
    std::vector<DirectedGraph::NodeId> stack;
    for (const auto& n : set) stack.push_back(g.id(n));
    while (!stack.empty()) {
        auto n = stack.back();
        stack.pop_back();
        const auto& next = downward ? g.child_ids(n) : g.parent_ids(n);
        for (auto m : next) {
            if (!seen[m]) {
                seen[m] = true;
                stack.push_back(m);
            }
        }
    }
    return seen;
}

VarSet collect(const DirectedGraph& g, const std::vector<bool>& mask) {
    VarSet out;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) out.push_back(g.name(i));
    }
    return out;
}

}  // namespace

VarSet DirectedGraph::descendants(const VarSet& set) const { return collect(*this, reach(*this, set, true)); }

VarSet DirectedGraph::ancestors(const VarSet& set) const { return collect(*this, reach(*this, set, false)); }

DirectedGraph DirectedGraph::without_edges(const std::function<bool(const Edge&)>& drop) const {
    std::vector<Edge> kept;
    for (const auto& e : edges_) {
        if (!drop(e)) kept.push_back(e);
    }
    return build(names_, std::move(kept));
}

bool d_separated(const DirectedGraph& g, const SeparationQuery& q) {
    if (q.a.empty() || q.b.empty()) throw Error(ErrorCode::kInvalidArgument, "separation query needs non-empty A and B");
    const std::size_t n = g.size();
    std::vector<bool> in_a(n), in_b(n), observed(n);
    auto mark = [&](const VarSet& set, std::vector<bool>& mask) {
        for (const auto& name : set) {
            auto id = g.id(name);
            if (in_a[id] || in_b[id] || observed[id]) {
                throw Error(ErrorCode::kOverlappingSets, "'" + name + "' appears in more than one set");
            }
            mask[id] = true;
        }
    };
    mark(q.a, in_a);
    mark(q.b, in_b);
    mark(q.given, observed);

    // Observed nodes and their ancestors: colliders in this set are open.
    std::vector<bool> opens_collider = observed;
    {
        std::vector<DirectedGraph::NodeId> stack;
        for (std::size_t i = 0; i < n; ++i) {
            if (observed[i]) stack.push_back(i);
        }
        while (!stack.empty()) {
            auto v = stack.back();
            stack.pop_back();
            for (auto p : g.parent_ids(v)) {
                if (!opens_collider[p]) {
                    opens_collider[p] = true;
                    stack.push_back(p);
                }
            }
        }
    }

    // Traversal state: (node, arrived from a child = "up") or (node, arrived from a parent = "down").
    std::vector<bool> visited_up(n), visited_down(n);
    std::vector<std::pair<DirectedGraph::NodeId, bool>> stack;
    for (std::size_t i = 0; i < n; ++i) {
        if (in_a[i]) stack.emplace_back(i, true);
    }
    while (!stack.empty()) {
        auto [v, up] = stack.back();
        stack.pop_back();
        auto& visited = up ? visited_up : visited_down;
        if (visited[v]) continue;
        visited[v] = true;
        if (in_b[v]) return false;
        if (up) {
            if (observed[v]) continue;
            for (auto p : g.parent_ids(v)) stack.emplace_back(p, true);
            for (auto c : g.child_ids(v)) stack.emplace_back(c, false);
        } else {
            if (!observed[v]) {
                for (auto c : g.child_ids(v)) stack.emplace_back(c, false);
            }
            if (opens_collider[v]) {
                for (auto p : g.parent_ids(v)) stack.emplace_back(p, true);
            }
        }
    }
    return true;
}

VarSet graphical_markov_boundary(const DirectedGraph& g, std::string_view target) {
    const auto t = g.id(target);
    std::vector<bool> in(g.size(), false);
    for (auto p : g.parent_ids(t)) in[p] = true;
    for (auto c : g.child_ids(t)) {
        in[c] = true;
        for (auto cp : g.parent_ids(c)) in[cp] = true;
    }
    in[t] = false;
    return collect(g, in);
}

AuditReport audit_identification_assumptions(const DirectedGraph& g, const std::string& treatment,
                                             const std::string& outcome, const VarSet& mediators,
                                             const VarSet& covariates) {
    VarSet all{treatment, outcome};
    for (const auto* set : {&mediators, &covariates}) {
        for (const auto& n : *set) {
            g.id(n);
            if (contains(all, n)) throw Error(ErrorCode::kOverlappingSets, "'" + n + "' appears in more than one role");
            all.push_back(n);
        }
    }
    g.id(treatment);
    g.id(outcome);
    if (treatment == outcome) throw Error(ErrorCode::kOverlappingSets, "treatment and outcome coincide");

    AuditReport report;
    report.caveat =
        "Conditions (a) and (b) are statements about potential responses. These checks are a graphical "
        "surrogate valid when the graph is a complete causal description with no hidden confounding; "
        "they cannot detect confounding the graph omits.";

    const auto tparents = g.parents(treatment);
    report.randomization.name = "randomized treatment";
    report.randomization.passed = tparents.empty();
    report.randomization.detail = tparents.empty() ? treatment + " has no parents"
                                                   : treatment + " has parents " + format_set(tparents);

    AuditCheck nondesc{"covariates are not descendants of treatment or mediators", true, ""};
    {
        VarSet roots = mediators;
        roots.push_back(treatment);
        const auto desc = g.descendants(roots);
        const auto bad = set_intersection(covariates, desc);
        nondesc.passed = bad.empty();
        nondesc.detail = bad.empty() ? "ok" : "descendants in covariates: " + format_set(bad);
    }

    AuditCheck backdoor{"covariates and treatment block mediator-outcome back-door paths", true, ""};
    AuditCheck fixed{"covariates block mediator-outcome back-door paths with treatment fixed", true, ""};
    if (!mediators.empty()) {
        const auto cut_mediators = g.without_edges([&](const DirectedGraph::Edge& e) {
            return contains(mediators, e.parent);
        });
        VarSet given = covariates;
        given.push_back(treatment);
        backdoor.passed = d_separated(cut_mediators, {mediators, {outcome}, given});
        backdoor.detail = backdoor.passed ? "ok" : "open back-door path given " + format_set(given);

        const auto cut_both = g.without_edges([&](const DirectedGraph::Edge& e) {
            return contains(mediators, e.parent) || e.parent == treatment || e.child == treatment;
        });
        fixed.passed = d_separated(cut_both, {mediators, {outcome}, covariates});
        fixed.detail = fixed.passed ? "ok" : "open back-door path given " + format_set(covariates);
    } else {
        backdoor.detail = fixed.detail = "no mediators";
    }

    report.covariate_sufficiency.name = "covariate sufficiency";
    report.covariate_sufficiency.passed = nondesc.passed && backdoor.passed && fixed.passed;
    report.covariate_sufficiency.detail = report.covariate_sufficiency.passed ? "all back-door checks pass"
                                                                              : "see subchecks";
    report.subchecks = {nondesc, backdoor, fixed};
    return report;
}

DirectedGraph parse_graph(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    bool have_nodes = false;
    std::vector<std::string> nodes;
    std::vector<DirectedGraph::Edge> edges;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        std::string keyword;
        if (!(fields >> keyword)) continue;
        auto where = "line " + std::to_string(lineno) + ": ";
        if (keyword == "nodes") {
            if (have_nodes) throw Error(ErrorCode::kParseError, where + "second 'nodes' header");
            have_nodes = true;
            for (std::string tok; fields >> tok;) nodes.push_back(tok);
        } else if (keyword == "edge") {
            if (!have_nodes) throw Error(ErrorCode::kParseError, where + "'edge' before 'nodes' header");
            DirectedGraph::Edge e;
            std::string extra;
            if (!(fields >> e.parent >> e.child) || (fields >> extra)) {
                throw Error(ErrorCode::kParseError, where + "expected 'edge PARENT CHILD'");
            }
            edges.push_back(std::move(e));
        } else {
            throw Error(ErrorCode::kParseError, where + "unknown keyword '" + keyword + "'");
        }
    }
    if (!have_nodes) throw Error(ErrorCode::kParseError, "missing 'nodes' header");
    return DirectedGraph::build(std::move(nodes), std::move(edges));
}

std::string format_graph(const DirectedGraph& g) {
    std::string out = "nodes";
    for (const auto& n : g.nodes()) out += " " + n;
    out += "\n";
    for (const auto& e : g.edges()) out += "edge " + e.parent + " " + e.child + "\n";
    return out;
}

DirectedGraph read_graph_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kParseError, "cannot open graph file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_graph(buf.str());
}

}  // namespace medkit
