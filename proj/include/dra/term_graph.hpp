#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "dra/relation.hpp"
#include "dra/term.hpp"

namespace dra {

// 2-pointed labelled directed graph: vertices 0..n-1, edges carry variable
// labels, and two distinguished vertices (input, output).
struct LabelledEdge {
    int src;
    std::string label;
    int dst;

    auto operator<=>(const LabelledEdge&) const = default;
};

class TermGraph {
public:
    TermGraph(int vertex_count, std::vector<LabelledEdge> edges, int input, int output)
        : vertex_count_(vertex_count), edges_(std::move(edges)), input_(input), output_(output) {
        std::sort(edges_.begin(), edges_.end());
        edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
        if (input_ < 0 || input_ >= vertex_count_ || output_ < 0 || output_ >= vertex_count_)
            throw std::invalid_argument("input/output vertex out of range");
        for (const auto& e : edges_)
            if (e.src < 0 || e.src >= vertex_count_ || e.dst < 0 || e.dst >= vertex_count_)
                throw std::invalid_argument("edge endpoint out of range");
    }

    int vertex_count() const { return vertex_count_; }
    const std::vector<LabelledEdge>& edges() const { return edges_; }
    int input() const { return input_; }
    int output() const { return output_; }

    bool has_edge(int u, const std::string& label, int v) const {
        return std::binary_search(edges_.begin(), edges_.end(), LabelledEdge{u, label, v});
    }

    bool operator==(const TermGraph& other) const = default;

private:
    int vertex_count_;
    std::vector<LabelledEdge> edges_; // sorted, unique
    int input_;
    int output_;
};

namespace detail {

// Minimal union-find for quotienting vertex sets.
class UnionFind {
public:
    explicit UnionFind(int n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    int find(int x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void merge(int a, int b) { parent_[find(a)] = find(b); }

private:
    std::vector<int> parent_;
};

} // namespace detail

// Composition: disjoint union with the output of g1 identified with the input
// of g2; the result is renumbered densely in order of first appearance.
inline TermGraph graph_compose(const TermGraph& g1, const TermGraph& g2) {
    int n1 = g1.vertex_count();
    int total = n1 + g2.vertex_count();
    detail::UnionFind uf(total);
    uf.merge(n1 + g2.input(), g1.output());

    std::vector<int> dense(total, -1);
    int next = 0;
    auto id_of = [&](int raw) {
        int root = uf.find(raw);
        if (dense[root] == -1) dense[root] = next++;
        return dense[root];
    };

    // Number vertices of g1 first, then g2, so ids stay stable and small.
    for (int v = 0; v < total; ++v) id_of(v);

    std::vector<LabelledEdge> edges;
    edges.reserve(g1.edges().size() + g2.edges().size());
    for (const auto& e : g1.edges()) edges.push_back({id_of(e.src), e.label, id_of(e.dst)});
    for (const auto& e : g2.edges()) edges.push_back({id_of(n1 + e.src), e.label, id_of(n1 + e.dst)});

    return TermGraph(next, std::move(edges), id_of(g1.input()), id_of(n1 + g2.output()));
}

// Inductive construction of the term graph of a join-free term: a variable is
// a single labelled edge between distinct input and output; dom moves the
// output onto the input, ran the input onto the output; composition glues.
inline TermGraph build_term_graph(const Term& t) {
    switch (t.kind()) {
    case TermKind::Variable:
        return TermGraph(2, {{0, t.var_name(), 1}}, 0, 1);
    case TermKind::Dom: {
        TermGraph g = build_term_graph(t.child());
        return TermGraph(g.vertex_count(), g.edges(), g.input(), g.input());
    }
    case TermKind::Ran: {
        TermGraph g = build_term_graph(t.child());
        return TermGraph(g.vertex_count(), g.edges(), g.output(), g.output());
    }
    case TermKind::Comp:
        return graph_compose(build_term_graph(t.left()), build_term_graph(t.right()));
    case TermKind::Join:
        throw std::invalid_argument("term graphs are defined for join-free terms only");
    }
    throw std::logic_error("unreachable");
}

struct VertexMap {
    std::vector<int> assignment; // indexed by source vertex
};

namespace detail {

// Backtracking homomorphism search with arc-consistency filtering on edge
// labels and fail-first vertex selection.  Input and output are pre-assigned.
class HomSearch {
public:
    HomSearch(const TermGraph& from, const TermGraph& to) : from_(from), to_(to) {
        int label_count = 0;
        std::map<std::string, int> label_ids;
        for (const auto& e : from_.edges()) {
            auto [it, inserted] = label_ids.try_emplace(e.label, label_count);
            if (inserted) ++label_count;
            from_edges_.push_back({e.src, it->second, e.dst});
        }
        to_adj_.assign(label_count, {});
        for (auto& adj : to_adj_) adj.assign(to_.vertex_count(), {});
        to_radj_.assign(label_count, {});
        for (auto& adj : to_radj_) adj.assign(to_.vertex_count(), {});
        std::vector<char> label_in_to(label_count, 0);
        for (const auto& e : to_.edges()) {
            auto it = label_ids.find(e.label);
            if (it == label_ids.end()) continue; // label absent from `from`
            label_in_to[it->second] = 1;
            to_adj_[it->second][e.src].push_back(e.dst);
            to_radj_[it->second][e.dst].push_back(e.src);
        }
        // Edges of `from` whose label never occurs in `to` are unmatchable.
        for (const auto& e : from_edges_)
            if (!label_in_to[e.label]) {
                impossible_ = true;
                return;
            }
    }

    std::optional<VertexMap> run() {
        if (impossible_) return std::nullopt;
        int n = from_.vertex_count();
        std::vector<std::vector<char>> cand(n, std::vector<char>(to_.vertex_count(), 1));
        // Intersect, so input == output in `from` forces input == output in `to`.
        auto restrict_to = [&](int v, int target) {
            for (int p = 0; p < to_.vertex_count(); ++p) cand[v][p] &= (p == target);
        };
        restrict_to(from_.input(), to_.input());
        restrict_to(from_.output(), to_.output());
        if (!propagate(cand)) return std::nullopt;
        VertexMap map;
        map.assignment.assign(n, -1);
        if (!search(cand, map)) return std::nullopt;
        return map;
    }

private:
    struct IntEdge {
        int src;
        int label;
        int dst;
    };

    const TermGraph& from_;
    const TermGraph& to_;
    std::vector<IntEdge> from_edges_;
    std::vector<std::vector<std::vector<int>>> to_adj_;  // label -> src -> dsts
    std::vector<std::vector<std::vector<int>>> to_radj_; // label -> dst -> srcs
    bool impossible_ = false;

    static int count(const std::vector<char>& set) {
        int c = 0;
        for (char b : set) c += b;
        return c;
    }

    // Arc consistency over the labelled edge constraints.
    bool propagate(std::vector<std::vector<char>>& cand) const {
        bool changed = true;
        while (changed) {
            changed = false;
            for (const auto& e : from_edges_) {
                for (int p = 0; p < to_.vertex_count(); ++p) {
                    if (!cand[e.src][p]) continue;
                    bool supported = false;
                    for (int q : to_adj_[e.label][p])
                        if (cand[e.dst][q]) {
                            supported = true;
                            break;
                        }
                    if (!supported) {
                        cand[e.src][p] = 0;
                        changed = true;
                    }
                }
                for (int q = 0; q < to_.vertex_count(); ++q) {
                    if (!cand[e.dst][q]) continue;
                    bool supported = false;
                    for (int p : to_radj_[e.label][q])
                        if (cand[e.src][p]) {
                            supported = true;
                            break;
                        }
                    if (!supported) {
                        cand[e.dst][q] = 0;
                        changed = true;
                    }
                }
            }
        }
        for (int v = 0; v < from_.vertex_count(); ++v)
            if (count(cand[v]) == 0) return false;
        return true;
    }

    bool search(std::vector<std::vector<char>>& cand, VertexMap& map) const {
        int branch = -1;
        int best = to_.vertex_count() + 1;
        for (int v = 0; v < from_.vertex_count(); ++v) {
            int c = count(cand[v]);
            if (c > 1 && c < best) {
                best = c;
                branch = v;
            }
        }
        if (branch == -1) {
            // All candidate sets are singletons; read the map off.
            for (int v = 0; v < from_.vertex_count(); ++v)
                for (int p = 0; p < to_.vertex_count(); ++p)
                    if (cand[v][p]) map.assignment[v] = p;
            return check(map);
        }
        for (int p = 0; p < to_.vertex_count(); ++p) {
            if (!cand[branch][p]) continue;
            auto saved = cand;
            for (int q = 0; q < to_.vertex_count(); ++q) cand[branch][q] = (q == p);
            if (propagate(cand) && search(cand, map)) return true;
            cand = std::move(saved);
        }
        return false;
    }

    bool check(const VertexMap& map) const {
        for (const auto& e : from_edges_) {
            int p = map.assignment[e.src];
            int q = map.assignment[e.dst];
            bool found = false;
            for (int r : to_adj_[e.label][p])
                if (r == q) {
                    found = true;
                    break;
                }
            if (!found) return false;
        }
        return true;
    }
};

} // namespace detail

// Complete search for a label-, input- and output-preserving homomorphism.
inline std::optional<VertexMap> hom_exists(const TermGraph& from, const TermGraph& to) {
    return detail::HomSearch(from, to).run();
}

// Checks an alleged homomorphism edge by edge.
inline bool verify_homomorphism(const TermGraph& from, const TermGraph& to, const VertexMap& map) {
    if (static_cast<int>(map.assignment.size()) != from.vertex_count()) return false;
    for (int v : map.assignment)
        if (v < 0 || v >= to.vertex_count()) return false;
    if (map.assignment[from.input()] != to.input()) return false;
    if (map.assignment[from.output()] != to.output()) return false;
    for (const auto& e : from.edges())
        if (!to.has_edge(map.assignment[e.src], e.label, map.assignment[e.dst])) return false;
    return true;
}

// The canonical model of a term graph: universe = vertices, each variable
// denotes its edge set.
inline RelationalModel graph_to_model(const TermGraph& g) {
    RelationalModel m{g.vertex_count(), {}};
    std::map<std::string, std::vector<Relation::Pair>> pairs;
    for (const auto& e : g.edges()) pairs[e.label].emplace_back(e.src, e.dst);
    for (auto& [var, ps] : pairs) m.valuation.emplace(var, Relation(g.vertex_count(), std::move(ps)));
    return m;
}

// Structural sanity of built term graphs: no variable-labelled loops.
inline bool has_variable_loop(const TermGraph& g) {
    for (const auto& e : g.edges())
        if (e.src == e.dst) return true;
    return false;
}

// Reachability (reflexive-transitive closure of the edge set) is
// antisymmetric, i.e. the only mutually reachable pairs are loops.
inline bool reachability_antisymmetric(const TermGraph& g) {
    int n = g.vertex_count();
    std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
    for (int v = 0; v < n; ++v) reach[v][v] = 1;
    for (const auto& e : g.edges()) reach[e.src][e.dst] = 1;
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            if (reach[i][k])
                for (int j = 0; j < n; ++j)
                    if (reach[k][j]) reach[i][j] = 1;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && reach[i][j] && reach[j][i]) return false;
    return true;
}

inline std::string to_dot(const TermGraph& g) {
    std::string out = "digraph term_graph {\n";
    for (int v = 0; v < g.vertex_count(); ++v) {
        out += "  v" + std::to_string(v) + " [label=\"" + std::to_string(v);
        if (v == g.input()) out += " (input)";
        if (v == g.output()) out += " (output)";
        out += "\"];\n";
    }
    for (const auto& e : g.edges())
        out += "  v" + std::to_string(e.src) + " -> v" + std::to_string(e.dst) + " [label=\"" +
               e.label + "\"];\n";
    out += "}\n";
    return out;
}

} // namespace dra
