#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dra/decision.hpp"
#include "dra/rng.hpp"
#include "dra/term.hpp"

namespace dra {

// Finite stages of the upset-labelled graph construction.  Edge labels are
// principal upsets of the free algebra, represented intensionally by a
// join-free generator term; membership a in c^ is decided as c <= a through
// the decision module.

struct UpsetLabel {
    Term generator;

    bool contains(const Term& a, FreeOrder& order) const { return order.leq(generator, a); }
};

class LabelledGraph {
public:
    const std::vector<int>& nodes() const { return nodes_; }
    const std::map<std::pair<int, int>, Term>& labels() const { return labels_; }

    bool has_node(int u) const { return std::binary_search(nodes_.begin(), nodes_.end(), u); }

    bool has_edge(int u, int v) const { return labels_.count({u, v}) > 0; }

    const Term* generator(int u, int v) const {
        auto it = labels_.find({u, v});
        return it == labels_.end() ? nullptr : &it->second;
    }

    int add_node() {
        int id = nodes_.empty() ? 0 : nodes_.back() + 1;
        nodes_.push_back(id);
        return id;
    }

    // Sets the label of (u, v); existing labels are never overwritten by the
    // construction, so overwriting here is reserved for tests planting
    // defects.
    void set_label(int u, int v, Term generator) {
        if (!has_node(u) || !has_node(v)) throw std::invalid_argument("unknown node");
        labels_.insert_or_assign({u, v}, std::move(generator));
    }

    std::vector<std::pair<int, int>> edges() const {
        std::vector<std::pair<int, int>> out;
        out.reserve(labels_.size());
        for (const auto& [edge, gen] : labels_) out.push_back(edge);
        return out;
    }

    std::vector<int> predecessors(int u) const {
        std::vector<int> out;
        for (const auto& [edge, gen] : labels_)
            if (edge.second == u) out.push_back(edge.first);
        return out;
    }

    std::vector<int> successors(int u) const {
        std::vector<int> out;
        for (const auto& [edge, gen] : labels_)
            if (edge.first == u) out.push_back(edge.second);
        return out;
    }

private:
    std::vector<int> nodes_; // sorted
    std::map<std::pair<int, int>, Term> labels_;
};

// Initial stage: one fresh component per pool element a, with the edge
// (u_a, v_a) labelled a^, loops labelled dom(a)^ and ran(a)^, and u_a = v_a
// exactly when a is a domain element of the free algebra.
inline LabelledGraph init_graph(const std::vector<Term>& elements, FreeOrder& order) {
    if (elements.empty()) throw std::invalid_argument("element pool must be non-empty");
    LabelledGraph g;
    for (const Term& a : elements) {
        if (a.contains_join())
            throw std::invalid_argument("pool elements must be join-free: " + format_term(a));
        if (order.is_domain_element(a)) {
            int u = g.add_node();
            g.set_label(u, u, a);
        } else {
            int u = g.add_node();
            int v = g.add_node();
            g.set_label(u, v, a);
            g.set_label(u, u, Term::dom(a));
            g.set_label(v, v, Term::ran(a));
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Coherence

struct CoherenceFailure {
    std::string condition; // GenC, PriC, CompC, DomC, RanC, IdeC
    std::vector<std::pair<int, int>> edges;
    std::string detail;
};

struct CoherenceReport {
    std::vector<CoherenceFailure> failures;

    bool pass() const { return failures.empty(); }
};

inline CoherenceReport coherence_check(const LabelledGraph& g, FreeOrder& order) {
    CoherenceReport report;
    auto edges = g.edges();

    // GenC: the edge set is reflexive on incident nodes, transitive and
    // antisymmetric.
    std::set<int> incident;
    for (const auto& [u, v] : edges) {
        incident.insert(u);
        incident.insert(v);
    }
    for (int u : incident)
        if (!g.has_edge(u, u))
            report.failures.push_back({"GenC", {{u, u}}, "missing loop at incident node"});
    for (const auto& [u, v] : edges)
        if (u != v && g.has_edge(v, u))
            report.failures.push_back({"GenC", {{u, v}, {v, u}}, "antisymmetry violated"});
    for (const auto& [u, w] : edges)
        for (const auto& [w2, v] : edges)
            if (w == w2 && !g.has_edge(u, v))
                report.failures.push_back({"GenC", {{u, w}, {w, v}}, "transitivity violated"});

    // PriC holds by representation: every label is stored as a generator
    // whose principal upset it denotes.

    // CompC: gen(u,v) <= gen(u,w) ; gen(w,v) for every labelled triangle.
    for (const auto& [edge1, gen1] : g.labels())
        for (const auto& [edge2, gen2] : g.labels()) {
            if (edge1.second != edge2.first) continue;
            const Term* guv = g.generator(edge1.first, edge2.second);
            if (guv == nullptr) continue; // already a GenC failure
            if (!order.leq(*guv, Term::comp(gen1, gen2)))
                report.failures.push_back({"CompC",
                                           {edge1, edge2, {edge1.first, edge2.second}},
                                           "composition not supported by triangle"});
        }

    for (const auto& [edge, gen] : g.labels()) {
        auto [u, v] = edge;
        // DomC / RanC: loops carry exactly the domain/range of each label.
        const Term* guu = g.generator(u, u);
        if (guu != nullptr && !order.eq(*guu, Term::dom(gen)))
            report.failures.push_back({"DomC", {edge}, "loop at source is not dom of the label"});
        const Term* gvv = g.generator(v, v);
        if (gvv != nullptr && !order.eq(*gvv, Term::ran(gen)))
            report.failures.push_back({"RanC", {edge}, "loop at target is not ran of the label"});
        // IdeC: loops carry domain elements, proper edges do not.
        bool dom_elt = order.is_domain_element(gen);
        if (u == v && !dom_elt)
            report.failures.push_back({"IdeC", {edge}, "loop labelled by a non-domain element"});
        if (u != v && dom_elt)
            report.failures.push_back({"IdeC", {edge}, "proper edge labelled by a domain element"});
    }
    return report;
}

// ---------------------------------------------------------------------------
// Successor steps

// Domain step at a loop (u,u) labelled c^: when c <= dom(a) and dom(c);a is
// not a domain element, adjoin w with (u,w) labelled dom(c);a, loop
// ran(dom(c);a), and every predecessor edge (p,u) with generator d extended
// by (p,w) labelled d;a.
inline LabelledGraph step_dom(const LabelledGraph& g, int u, const Term& a, FreeOrder& order) {
    const Term* loop = g.generator(u, u);
    if (loop == nullptr) throw std::invalid_argument("step_dom: node has no labelled loop");
    const Term c = *loop;
    if (!order.leq(c, Term::dom(a))) return g;
    Term witness = Term::comp(Term::dom(c), a);
    if (order.is_domain_element(witness)) return g;

    LabelledGraph next = g;
    int w = next.add_node();
    next.set_label(u, w, witness);
    next.set_label(w, w, Term::ran(witness));
    for (int p : g.predecessors(u)) {
        if (p == u) continue;
        next.set_label(p, w, Term::comp(*g.generator(p, u), a));
    }
    return next;
}

// Mirror step for range at a loop (u,u) labelled c^: when c <= ran(a) and
// a;ran(c) is not a range element, adjoin w with (w,u) labelled a;ran(c),
// loop dom(a;ran(c)), and successor edges (u,p) extended by (w,p) = a;d.
inline LabelledGraph step_ran(const LabelledGraph& g, int u, const Term& a, FreeOrder& order) {
    const Term* loop = g.generator(u, u);
    if (loop == nullptr) throw std::invalid_argument("step_ran: node has no labelled loop");
    const Term c = *loop;
    if (!order.leq(c, Term::ran(a))) return g;
    Term witness = Term::comp(a, Term::ran(c));
    if (order.eq(witness, Term::ran(witness))) return g;

    LabelledGraph next = g;
    int w = next.add_node();
    next.set_label(w, u, witness);
    next.set_label(w, w, Term::dom(witness));
    for (int p : g.successors(u)) {
        if (p == u) continue;
        next.set_label(w, p, Term::comp(a, *g.generator(u, p)));
    }
    return next;
}

// Composition step at an edge (u,v) labelled c^: when c <= a;b, u != v, and
// neither dom(c);a;dom(b;ran(c)) nor ran(dom(c);a);b;ran(c) is a domain
// element, adjoin a midpoint w with the five label equations of the
// construction (edge (u,w), edge (w,v), loop (w,w), and extensions through
// predecessors of u and successors of v).
inline LabelledGraph step_comp(const LabelledGraph& g, int u, int v, const Term& a, const Term& b,
                               FreeOrder& order) {
    const Term* label = g.generator(u, v);
    if (label == nullptr) throw std::invalid_argument("step_comp: edge is not labelled");
    const Term c = *label;
    if (!order.leq(c, Term::comp(a, b))) return g; // (CC1)
    if (u == v) return g;                          // (CC2)
    Term left = Term::comp(Term::comp(Term::dom(c), a), Term::dom(Term::comp(b, Term::ran(c))));
    Term right = Term::comp(Term::comp(Term::ran(Term::comp(Term::dom(c), a)), b), Term::ran(c));
    if (order.is_domain_element(left)) return g;          // (CC3)
    if (order.eq(right, Term::ran(right))) return g;      // (CC4)

    LabelledGraph next = g;
    int w = next.add_node();
    next.set_label(u, w, left);
    next.set_label(w, v, right);
    next.set_label(w, w,
                   Term::comp(Term::ran(Term::comp(Term::dom(c), a)),
                              Term::dom(Term::comp(b, Term::ran(c)))));
    Term dbrc = Term::dom(Term::comp(b, Term::ran(c)));
    Term rdca = Term::ran(Term::comp(Term::dom(c), a));
    for (int p : g.predecessors(u)) {
        if (p == u) continue;
        next.set_label(p, w, Term::comp(Term::comp(*g.generator(p, u), a), dbrc));
    }
    for (int q : g.successors(v)) {
        if (q == v) continue;
        next.set_label(w, q, Term::comp(Term::comp(rdca, b), *g.generator(v, q)));
    }
    return next;
}

// ---------------------------------------------------------------------------
// Scheduling and saturation defects

struct ScheduledStep {
    int kind; // 0 = dom, 1 = ran, 2 = comp
    int u;
    int v;
    Term a;
    Term b;
};

// Closes the pool under immediate subterms, so witnesses for the factors of
// composite pool elements can be scheduled and reported.
inline std::vector<Term> subterm_closure(const std::vector<Term>& pool) {
    std::vector<Term> out;
    auto push = [&](const Term& t, auto&& self) -> void {
        for (const Term& seen : out)
            if (seen == t) return;
        out.push_back(t);
        switch (t.kind()) {
        case TermKind::Variable: return;
        case TermKind::Dom:
        case TermKind::Ran: self(t.child(), self); return;
        case TermKind::Comp:
        case TermKind::Join:
            self(t.left(), self);
            self(t.right(), self);
            return;
        }
    };
    for (const Term& t : pool) push(t, push);
    return out;
}

// Deterministic fair scheduler: each sweep snapshots the current loops and
// edges, enumerates every applicable (step, nodes, pool elements) tuple, and
// yields them in a seed-derived order.  Every tuple over nodes present at a
// sweep boundary recurs in all later sweeps.
class Scheduler {
public:
    Scheduler(std::vector<Term> pool, std::uint64_t seed)
        : pool_(subterm_closure(pool)), seed_(seed) {
        if (pool_.empty()) throw std::invalid_argument("element pool must be non-empty");
        for (const Term& t : pool_)
            if (t.contains_join())
                throw std::invalid_argument("pool elements must be join-free: " + format_term(t));
    }

    const std::vector<Term>& effective_pool() const { return pool_; }

    ScheduledStep next(const LabelledGraph& g) {
        if (queue_pos_ >= queue_.size()) refill(g);
        return queue_[queue_pos_++];
    }

private:
    std::vector<Term> pool_;
    std::uint64_t seed_;
    std::uint64_t sweep_ = 0;
    std::vector<ScheduledStep> queue_;
    std::size_t queue_pos_ = 0;

    void refill(const LabelledGraph& g) {
        queue_.clear();
        queue_pos_ = 0;
        for (const auto& [edge, gen] : g.labels()) {
            auto [u, v] = edge;
            if (u == v) {
                for (const Term& a : pool_) {
                    queue_.push_back({0, u, u, a, a});
                    queue_.push_back({1, u, u, a, a});
                }
            } else {
                for (const Term& a : pool_)
                    for (const Term& b : pool_) queue_.push_back({2, u, v, a, b});
            }
        }
        // Seeded Fisher-Yates; a fresh stream per sweep keeps sweeps distinct.
        SplitMix64 rng(seed_ * 0x9e3779b97f4a7c15ull + sweep_);
        for (std::size_t i = queue_.size(); i > 1; --i)
            std::swap(queue_[i - 1], queue_[rng.below(i)]);
        ++sweep_;
    }
};

inline LabelledGraph apply_step(const LabelledGraph& g, const ScheduledStep& step,
                                FreeOrder& order) {
    switch (step.kind) {
    case 0: return step_dom(g, step.u, step.a, order);
    case 1: return step_ran(g, step.u, step.a, order);
    case 2: return step_comp(g, step.u, step.v, step.a, step.b, order);
    default: throw std::invalid_argument("unknown step kind");
    }
}

struct CompDefect {
    int u, v;
    Term a, b;
};
struct DomDefect {
    int u;
    Term a;
};
struct RanDefect {
    int u;
    Term a;
};

struct DefectReport {
    std::vector<CompDefect> comp;
    std::vector<DomDefect> dom;
    std::vector<RanDefect> ran;

    bool saturated() const { return comp.empty() && dom.empty() && ran.empty(); }
};

// Saturation defects relative to the (subterm-closed) pool: compositions,
// domains and ranges asserted by some label that lack a witnessing node.
inline DefectReport saturation_defects(const LabelledGraph& g, const std::vector<Term>& pool,
                                       FreeOrder& order) {
    std::vector<Term> elems = subterm_closure(pool);
    DefectReport report;
    for (const auto& [edge, gen] : g.labels()) {
        auto [u, v] = edge;
        for (const Term& a : elems)
            for (const Term& b : elems) {
                if (!order.leq(gen, Term::comp(a, b))) continue;
                bool witnessed = false;
                for (int w : g.nodes()) {
                    const Term* guw = g.generator(u, w);
                    const Term* gwv = g.generator(w, v);
                    if (guw && gwv && order.leq(*guw, a) && order.leq(*gwv, b)) {
                        witnessed = true;
                        break;
                    }
                }
                if (!witnessed) report.comp.push_back({u, v, a, b});
            }
    }
    for (int u : g.nodes()) {
        const Term* loop = g.generator(u, u);
        if (loop == nullptr) continue;
        for (const Term& a : elems) {
            if (order.leq(*loop, Term::dom(a))) {
                bool witnessed = false;
                for (int w : g.nodes()) {
                    const Term* guw = g.generator(u, w);
                    if (guw && order.leq(*guw, a)) {
                        witnessed = true;
                        break;
                    }
                }
                if (!witnessed) report.dom.push_back({u, a});
            }
            if (order.leq(*loop, Term::ran(a))) {
                bool witnessed = false;
                for (int w : g.nodes()) {
                    const Term* gwu = g.generator(w, u);
                    if (gwu && order.leq(*gwu, a)) {
                        witnessed = true;
                        break;
                    }
                }
                if (!witnessed) report.ran.push_back({u, a});
            }
        }
    }
    return report;
}

struct SaturationResult {
    LabelledGraph graph;
    DefectReport defects;
};

// Builds the initial stage and applies `rounds` scheduler-driven steps.  The
// optional observer sees the graph after every step.
inline SaturationResult run_saturation(
    const std::vector<Term>& elements, int rounds, std::uint64_t seed, FreeOrder& order,
    const std::function<void(int, const LabelledGraph&)>& observer = {}) {
    if (rounds < 0) throw std::invalid_argument("rounds must be non-negative");
    LabelledGraph g = init_graph(elements, order);
    Scheduler scheduler(elements, seed);
    for (int i = 0; i < rounds; ++i) {
        g = apply_step(g, scheduler.next(g), order);
        if (observer) observer(i, g);
    }
    return {g, saturation_defects(g, elements, order)};
}

// ---------------------------------------------------------------------------
// Dumps

inline std::string to_dot(const LabelledGraph& g) {
    std::string out = "digraph stage {\n";
    for (int u : g.nodes()) out += "  n" + std::to_string(u) + ";\n";
    for (const auto& [edge, gen] : g.labels())
        out += "  n" + std::to_string(edge.first) + " -> n" + std::to_string(edge.second) +
               " [label=\"" + format_term(gen) + "\"];\n";
    out += "}\n";
    return out;
}

} // namespace dra
