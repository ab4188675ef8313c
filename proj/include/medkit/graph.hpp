#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "medkit/varset.hpp"

namespace medkit {

/// Immutable DAG over named variables. Construction rejects cycles, self-loops,
/// duplicate edges and edges with undeclared endpoints.
class DirectedGraph {
public:
    using NodeId = std::size_t;

    struct Edge {
        std::string parent;
        std::string child;
        bool operator==(const Edge&) const = default;
    };

    static DirectedGraph build(std::vector<std::string> nodes, std::vector<Edge> edges);

    const std::vector<std::string>& nodes() const { return names_; }
    const std::vector<Edge>& edges() const { return edges_; }
    std::size_t size() const { return names_.size(); }

    bool has_node(std::string_view name) const;
    NodeId id(std::string_view name) const;
    const std::string& name(NodeId id) const { return names_.at(id); }

    const std::vector<NodeId>& parent_ids(NodeId id) const { return parents_.at(id); }
    const std::vector<NodeId>& child_ids(NodeId id) const { return children_.at(id); }
    VarSet parents(std::string_view name) const;
    VarSet children(std::string_view name) const;

    /// Nodes reachable by directed paths from `set`, excluding the set itself
    /// unless a member is a descendant of another member.
    VarSet descendants(const VarSet& set) const;
    VarSet ancestors(const VarSet& set) const;

    /// A topological order, computed once at construction.
    const std::vector<NodeId>& topological_order() const { return topo_; }

    /// Copy of this graph with every edge for which `drop` returns true removed.
    DirectedGraph without_edges(const std::function<bool(const Edge&)>& drop) const;

private:
    DirectedGraph() = default;

    std::vector<std::string> names_;
    std::vector<Edge> edges_;
    std::unordered_map<std::string, NodeId> index_;
    std::vector<std::vector<NodeId>> parents_;
    std::vector<std::vector<NodeId>> children_;
    std::vector<NodeId> topo_;
};

struct SeparationQuery {
    VarSet a;
    VarSet b;
    VarSet given;
};

/// d-separation by reachability (Bayes ball), linear in the size of the graph.
/// Throws UnknownNode for names not in `g`, InvalidArgument when A or B is
/// empty or the three sets overlap.
bool d_separated(const DirectedGraph& g, const SeparationQuery& q);

/// Parents, children and co-parents of `target`, in graph node order.
VarSet graphical_markov_boundary(const DirectedGraph& g, std::string_view target);

struct AuditCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct AuditReport {
    AuditCheck randomization;         // condition (b)
    AuditCheck covariate_sufficiency; // condition (a)
    std::vector<AuditCheck> subchecks;
    std::string caveat;

    bool all_passed() const { return randomization.passed && covariate_sufficiency.passed; }
};

/// Graphical surrogate for the two identification conditions of the mediation
/// formulas: (b) the treatment has no parents; (a) the covariates block every
/// back-door path between the mediators and the outcome, with and without the
/// treatment held fixed, and contain no descendants of treatment or mediators.
AuditReport audit_identification_assumptions(const DirectedGraph& g, const std::string& treatment,
                                             const std::string& outcome, const VarSet& mediators,
                                             const VarSet& covariates);

// Plain text format: a `nodes A B C` header followed by one `edge A B` per
// line. Blank lines and `#` comments are ignored on input.
DirectedGraph parse_graph(std::string_view text);
std::string format_graph(const DirectedGraph& g);
DirectedGraph read_graph_file(const std::string& path);

}  // namespace medkit
