#pragma once

#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dra/relation.hpp"
#include "dra/term.hpp"
#include "dra/term_graph.hpp"

namespace dra {

// Decides validity of s <= t and s = t over the angelic (comp, dom, ran, join)
// representation class: reduce both sides to join normal form, then for every
// left disjunct find a right disjunct whose term graph maps homomorphically
// into it.  Failures yield a concrete separating model.

struct DisjunctWitness {
    int disjunct; // index into the left-hand join normal form
    int target;   // index into the right-hand join normal form
    VertexMap map;
    bool backward = false; // for equations: witness of the t <= s direction
};

struct Counterexample {
    RelationalModel model;
    std::pair<int, int> witness;
    int disjunct;
    bool backward = false; // for equations: the t <= s direction failed
};

enum class DecisionRelation { Leq, Eq };

struct Verdict {
    DecisionRelation relation = DecisionRelation::Leq;
    bool valid = false;
    std::vector<DisjunctWitness> witnesses;       // present iff valid
    std::optional<Counterexample> counterexample; // present iff !valid
};

struct DecideOptions {
    long long jnf_node_cap = 100000;
};

namespace detail {

struct GraphCache {
    std::unordered_map<Term, TermGraph, TermHash> graphs;

    const TermGraph& of(const Term& t) {
        auto it = graphs.find(t);
        if (it == graphs.end()) it = graphs.emplace(t, build_term_graph(t)).first;
        return it->second;
    }
};

inline Verdict decide_leq_impl(const Term& s, const Term& t, const DecideOptions& opts,
                               GraphCache& cache, bool backward) {
    Verdict v;
    v.relation = DecisionRelation::Leq;
    std::vector<Term> ss = join_normal_form(s, opts.jnf_node_cap);
    std::vector<Term> ts = join_normal_form(t, opts.jnf_node_cap);

    std::vector<std::set<std::string>> tvars;
    tvars.reserve(ts.size());
    for (const Term& tj : ts) tvars.push_back(variables_of(tj));

    for (int i = 0; i < static_cast<int>(ss.size()); ++i) {
        const TermGraph& gs = cache.of(ss[i]);
        std::set<std::string> svars = variables_of(ss[i]);
        bool found = false;
        for (int j = 0; j < static_cast<int>(ts.size()); ++j) {
            // A homomorphism needs every label of G_t to occur in G_s.
            if (!std::includes(svars.begin(), svars.end(), tvars[j].begin(), tvars[j].end()))
                continue;
            if (auto map = hom_exists(cache.of(ts[j]), gs)) {
                v.witnesses.push_back({i, j, std::move(*map), backward});
                found = true;
                break;
            }
        }
        if (!found) {
            std::set<std::string> all = variables_of(s);
            collect_variables(t, all);
            Counterexample cx{model_with_empty_vars(graph_to_model(gs), all),
                              {gs.input(), gs.output()},
                              i,
                              backward};
            v.valid = false;
            v.witnesses.clear();
            v.counterexample = std::move(cx);
            return v;
        }
    }
    v.valid = true;
    return v;
}

} // namespace detail

inline Verdict decide_leq(const Term& s, const Term& t, const DecideOptions& opts = {}) {
    detail::GraphCache cache;
    return detail::decide_leq_impl(s, t, opts, cache, false);
}

inline Verdict decide_eq(const Term& s, const Term& t, const DecideOptions& opts = {}) {
    detail::GraphCache cache;
    Verdict fwd = detail::decide_leq_impl(s, t, opts, cache, false);
    if (!fwd.valid) {
        fwd.relation = DecisionRelation::Eq;
        return fwd;
    }
    Verdict bwd = detail::decide_leq_impl(t, s, opts, cache, true);
    Verdict v;
    v.relation = DecisionRelation::Eq;
    v.valid = bwd.valid;
    if (bwd.valid) {
        v.witnesses = std::move(fwd.witnesses);
        v.witnesses.insert(v.witnesses.end(), bwd.witnesses.begin(), bwd.witnesses.end());
    } else {
        v.counterexample = std::move(bwd.counterexample);
    }
    return v;
}

// Re-checks a verdict from scratch: homomorphism witnesses are verified edge
// by edge against freshly built graphs, counterexamples are re-evaluated in
// the relation engine.  Returns false on any discrepancy.
inline bool certify(const Verdict& v, const Term& s, const Term& t) {
    try {
        std::vector<Term> ss = join_normal_form(s);
        std::vector<Term> ts = join_normal_form(t);
        bool is_eq = v.relation == DecisionRelation::Eq;

        if (v.valid) {
            if (v.counterexample.has_value()) return false;
            // Every left disjunct needs a verified witness; for equations the
            // same holds in the backward direction.
            std::vector<char> covered_fwd(ss.size(), 0), covered_bwd(ts.size(), 0);
            for (const DisjunctWitness& w : v.witnesses) {
                const std::vector<Term>& from_side = w.backward ? ts : ss;
                const std::vector<Term>& to_side = w.backward ? ss : ts;
                if (w.disjunct < 0 || w.disjunct >= static_cast<int>(from_side.size())) return false;
                if (w.target < 0 || w.target >= static_cast<int>(to_side.size())) return false;
                TermGraph gs = build_term_graph(from_side[w.disjunct]);
                TermGraph gt = build_term_graph(to_side[w.target]);
                if (!verify_homomorphism(gt, gs, w.map)) return false;
                (w.backward ? covered_bwd : covered_fwd)[w.disjunct] = 1;
            }
            for (char c : covered_fwd)
                if (!c) return false;
            if (is_eq)
                for (char c : covered_bwd)
                    if (!c) return false;
            return true;
        }

        if (!v.counterexample.has_value()) return false;
        const Counterexample& cx = *v.counterexample;
        const Term& lhs = cx.backward ? t : s;
        const Term& rhs = cx.backward ? s : t;
        // The model must separate the sides with the witness pair on the left
        // side only, i.e. it refutes lhs <= rhs.
        Relation le = eval(lhs, cx.model, Mode::Angelic);
        Relation re = eval(rhs, cx.model, Mode::Angelic);
        const auto& [wu, wv] = cx.witness;
        if (!le.contains(wu, wv) || re.contains(wu, wv)) return false;
        EquationReport report = check_equation(lhs, rhs, cx.model, Mode::Angelic);
        return !report.holds;
    } catch (const std::exception&) {
        return false;
    }
}

// Memoizing front end to the decision procedure, used where the free-algebra
// order is queried repeatedly on overlapping term pairs.
class FreeOrder {
public:
    bool leq(const Term& s, const Term& t) {
        std::pair<Term, Term> key{s, t};
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        bool result = decide_leq(s, t).valid;
        cache_.emplace(std::move(key), result);
        return result;
    }

    bool eq(const Term& s, const Term& t) { return leq(s, t) && leq(t, s); }

    bool is_domain_element(const Term& t) { return eq(t, Term::dom(t)); }

    std::size_t cache_size() const { return cache_.size(); }

private:
    std::unordered_map<std::pair<Term, Term>, bool, TermPairHash> cache_;
};

} // namespace dra
