#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "dra/relation.hpp"
#include "dra/term.hpp"

namespace dra {

// Finite (*, D, R)-algebras given by operation tables, exhaustive enumeration
// under equational and quasi-equational constraints, and the partial-map
// representation machinery (Wagner-Preston base step plus range-defect repair
// rounds with connector edges).

struct FiniteAlgebra {
    int size = 0;
    std::vector<std::vector<int>> star; // size x size
    std::vector<int> D;
    std::vector<int> R;

    bool operator==(const FiniteAlgebra&) const = default;
};

class AxiomViolationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PreconditionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An equational law over the demonic signature (join-free terms).
struct Law {
    std::string label;
    Term lhs;
    Term rhs;
};

// A quasi-equational law: if all premises hold then all conclusions hold.
struct QuasiLaw {
    std::string label;
    std::vector<std::pair<Term, Term>> premises;
    std::vector<std::pair<Term, Term>> conclusions;
};

namespace detail {
inline Law mk_law(std::string label, std::string_view lhs, std::string_view rhs) {
    return Law{std::move(label), parse_term(lhs), parse_term(rhs)};
}
} // namespace detail

// The demonic axioms, in catalog order (20)-(30).
inline const std::vector<Law>& axd_laws() {
    static const std::vector<Law> laws = {
        detail::mk_law("20", "x;(y;z)", "(x;y);z"),
        detail::mk_law("21", "dom(x);x", "x"),
        detail::mk_law("22", "x;ran(x)", "x"),
        detail::mk_law("23", "dom(x);dom(y)", "dom(y);dom(x)"),
        detail::mk_law("24", "dom(dom(x);y)", "dom(x);dom(y)"),
        detail::mk_law("25", "x;dom(y)", "dom(x;y);x"),
        detail::mk_law("26", "dom(ran(x))", "ran(x)"),
        detail::mk_law("27", "ran(dom(x))", "dom(x)"),
        detail::mk_law("28", "ran(ran(x))", "ran(x)"),
        detail::mk_law("29", "ran(x);ran(y)", "ran(y);ran(x)"),
        detail::mk_law("30", "ran(x;y);ran(y)", "ran(x;y)"),
    };
    return laws;
}

// Laws (20)-(25): the restriction-semigroup fragment required by the
// Wagner-Preston representation.
inline std::vector<Law> restriction_semigroup_laws() {
    const auto& all = axd_laws();
    return std::vector<Law>(all.begin(), all.begin() + 6);
}

// Cycle-freeness quasi-identities (31)-(32).
inline const std::vector<QuasiLaw>& cycle_free_quasi_laws() {
    static const std::vector<QuasiLaw> laws = {
        QuasiLaw{"31",
                 {{parse_term("x;y"), parse_term("x")}},
                 {{parse_term("dom(y)"), parse_term("y")}}},
        QuasiLaw{"32",
                 {{parse_term("x;y"), parse_term("dom(z)")}},
                 {{parse_term("x"), parse_term("dom(x)")}, {parse_term("y"), parse_term("dom(y)")}}},
    };
    return laws;
}

// ---------------------------------------------------------------------------
// Evaluation over tables.  star entries may be -1 (unknown) during
// enumeration; unknown propagates.

namespace detail {

inline int eval_partial(const Term& t, const FiniteAlgebra& a,
                        const std::map<std::string, int>& assignment) {
    switch (t.kind()) {
    case TermKind::Variable: {
        auto it = assignment.find(t.var_name());
        if (it == assignment.end())
            throw std::invalid_argument("unassigned variable '" + t.var_name() + "'");
        return it->second;
    }
    case TermKind::Dom: {
        int c = eval_partial(t.child(), a, assignment);
        return c < 0 ? -1 : a.D[c];
    }
    case TermKind::Ran: {
        int c = eval_partial(t.child(), a, assignment);
        return c < 0 ? -1 : a.R[c];
    }
    case TermKind::Comp: {
        int l = eval_partial(t.left(), a, assignment);
        int r = eval_partial(t.right(), a, assignment);
        return (l < 0 || r < 0) ? -1 : a.star[l][r];
    }
    case TermKind::Join:
        throw std::invalid_argument("join is not part of the demonic signature");
    }
    throw std::logic_error("unreachable");
}

template <typename Fn>
inline void for_all_assignments(const std::set<std::string>& vars, int size, Fn&& fn) {
    std::vector<std::string> names(vars.begin(), vars.end());
    std::map<std::string, int> assignment;
    std::vector<int> values(names.size(), 0);
    while (true) {
        for (std::size_t i = 0; i < names.size(); ++i) assignment[names[i]] = values[i];
        if (!fn(assignment)) return;
        std::size_t i = 0;
        while (i < values.size() && ++values[i] == size) values[i++] = 0;
        if (i == values.size()) return;
    }
}

} // namespace detail

inline int eval_in_algebra(const Term& t, const FiniteAlgebra& a,
                           const std::map<std::string, int>& assignment) {
    int r = detail::eval_partial(t, a, assignment);
    if (r < 0) throw std::invalid_argument("operation table is incomplete");
    return r;
}

struct LawViolation {
    std::string label;
    std::map<std::string, int> assignment;
    int lhs_value;
    int rhs_value;
};

inline std::vector<LawViolation> law_violations(const FiniteAlgebra& a, const Law& law) {
    std::set<std::string> vars = variables_of(law.lhs);
    collect_variables(law.rhs, vars);
    std::vector<LawViolation> out;
    detail::for_all_assignments(vars, a.size, [&](const std::map<std::string, int>& asg) {
        int l = detail::eval_partial(law.lhs, a, asg);
        int r = detail::eval_partial(law.rhs, a, asg);
        if (l >= 0 && r >= 0 && l != r) out.push_back({law.label, asg, l, r});
        return true;
    });
    return out;
}

inline bool satisfies(const FiniteAlgebra& a, const Law& law) {
    return law_violations(a, law).empty();
}

struct QuasiLawViolation {
    std::string label;
    std::map<std::string, int> assignment;
};

inline std::vector<QuasiLawViolation> quasi_law_violations(const FiniteAlgebra& a,
                                                           const QuasiLaw& law) {
    std::set<std::string> vars;
    for (const auto& [l, r] : law.premises) {
        collect_variables(l, vars);
        collect_variables(r, vars);
    }
    for (const auto& [l, r] : law.conclusions) {
        collect_variables(l, vars);
        collect_variables(r, vars);
    }
    std::vector<QuasiLawViolation> out;
    detail::for_all_assignments(vars, a.size, [&](const std::map<std::string, int>& asg) {
        for (const auto& [l, r] : law.premises)
            if (eval_in_algebra(l, a, asg) != eval_in_algebra(r, a, asg)) return true;
        for (const auto& [l, r] : law.conclusions)
            if (eval_in_algebra(l, a, asg) != eval_in_algebra(r, a, asg)) {
                out.push_back({law.label, asg});
                return true;
            }
        return true;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Enumeration

struct EnumConstraints {
    std::vector<Law> laws;
    std::vector<QuasiLaw> quasi;
    // Search-space reductions, each justified by the law set that sets it:
    // leftid forces star[D(x)][x] = x, rightid forces star[x][R(x)] = x, and
    // the D(R)/R(D)/R(R) laws pin D and R to idempotent maps onto a common
    // fixed-point set.
    bool force_left_identity = false;
    bool force_right_identity = false;
    bool dr_common_image = false;

    static EnumConstraints axd() {
        EnumConstraints c;
        c.laws = axd_laws();
        c.force_left_identity = true;
        c.force_right_identity = true;
        c.dr_common_image = true;
        return c;
    }

    static EnumConstraints axd_cycle_free() {
        EnumConstraints c = axd();
        c.quasi = cycle_free_quasi_laws();
        return c;
    }

    static EnumConstraints restriction() {
        EnumConstraints c;
        c.laws = restriction_semigroup_laws();
        c.force_left_identity = true;
        c.force_right_identity = true;
        return c;
    }
};

// Streams every algebra over the fixed carrier {0..n-1} satisfying the
// constraints.  D and R vectors are filled first, then the star table row by
// row with incremental consistency pruning.  A step budget bounds the search;
// running out is reported distinctly from completion.
class AlgebraEnumerator {
public:
    enum class Status { Running, Complete, BudgetExhausted };

    AlgebraEnumerator(int size, EnumConstraints constraints, long long budget = 50000000)
        : size_(size), constraints_(std::move(constraints)), budget_(budget) {
        if (size_ < 1) throw std::invalid_argument("carrier size must be positive");
        for (const Law& law : constraints_.laws) {
            std::set<std::string> vars = variables_of(law.lhs);
            collect_variables(law.rhs, vars);
            law_vars_.push_back(std::move(vars));
        }
        build_dr_candidates();
    }

    std::optional<FiniteAlgebra> next() {
        while (buffer_pos_ >= buffer_.size()) {
            if (status_ == Status::BudgetExhausted) return std::nullopt;
            if (pair_index_ >= dr_candidates_.size()) {
                status_ = Status::Complete;
                return std::nullopt;
            }
            buffer_.clear();
            buffer_pos_ = 0;
            search_pair(dr_candidates_[pair_index_].first, dr_candidates_[pair_index_].second);
            ++pair_index_;
        }
        return buffer_[buffer_pos_++];
    }

    std::vector<FiniteAlgebra> all() {
        std::vector<FiniteAlgebra> out;
        while (auto a = next()) out.push_back(std::move(*a));
        return out;
    }

    Status status() const { return status_; }

private:
    int size_;
    EnumConstraints constraints_;
    long long budget_;
    std::vector<std::set<std::string>> law_vars_;
    std::vector<std::pair<std::vector<int>, std::vector<int>>> dr_candidates_;
    std::size_t pair_index_ = 0;
    std::vector<FiniteAlgebra> buffer_;
    std::size_t buffer_pos_ = 0;
    Status status_ = Status::Running;

    static void enumerate_maps(int size, const std::function<bool(const std::vector<int>&)>& keep,
                               std::vector<std::vector<int>>& out) {
        std::vector<int> map(size, 0);
        while (true) {
            if (keep(map)) out.push_back(map);
            int i = 0;
            while (i < size && ++map[i] == size) map[i++] = 0;
            if (i == size) return;
        }
    }

    void build_dr_candidates() {
        std::vector<std::vector<int>> d_maps;
        enumerate_maps(size_, [](const std::vector<int>& m) {
            for (std::size_t i = 0; i < m.size(); ++i)
                if (m[m[i]] != m[i]) return false; // D is idempotent
            return true;
        }, d_maps);
        for (const auto& d : d_maps) {
            std::vector<int> image;
            for (int i = 0; i < size_; ++i)
                if (d[i] == i) image.push_back(i);
            std::vector<std::vector<int>> r_maps;
            if (constraints_.dr_common_image) {
                // R fixes the image of D pointwise and maps into it.
                enumerate_maps(size_, [&](const std::vector<int>& m) {
                    for (int i : image)
                        if (m[i] != i) return false;
                    for (int i = 0; i < size_; ++i)
                        if (d[m[i]] != m[i]) return false;
                    return true;
                }, r_maps);
            } else {
                enumerate_maps(size_, [](const std::vector<int>&) { return true; }, r_maps);
            }
            for (auto& r : r_maps) dr_candidates_.emplace_back(d, r);
        }
    }

    bool consistent(const FiniteAlgebra& a) const {
        for (std::size_t i = 0; i < constraints_.laws.size(); ++i) {
            const Law& law = constraints_.laws[i];
            bool ok = true;
            detail::for_all_assignments(law_vars_[i], size_, [&](const std::map<std::string, int>& asg) {
                int l = detail::eval_partial(law.lhs, a, asg);
                int r = detail::eval_partial(law.rhs, a, asg);
                if (l >= 0 && r >= 0 && l != r) {
                    ok = false;
                    return false;
                }
                return true;
            });
            if (!ok) return false;
        }
        return true;
    }

    void search_pair(const std::vector<int>& d, const std::vector<int>& r) {
        FiniteAlgebra a;
        a.size = size_;
        a.star.assign(size_, std::vector<int>(size_, -1));
        a.D = d;
        a.R = r;
        if (constraints_.force_left_identity)
            for (int x = 0; x < size_; ++x) {
                int& cell = a.star[d[x]][x];
                if (cell >= 0 && cell != x) return;
                cell = x;
            }
        if (constraints_.force_right_identity)
            for (int x = 0; x < size_; ++x) {
                int& cell = a.star[x][r[x]];
                if (cell >= 0 && cell != x) return;
                cell = x;
            }
        if (!consistent(a)) return;
        std::vector<std::pair<int, int>> free_cells;
        for (int i = 0; i < size_; ++i)
            for (int j = 0; j < size_; ++j)
                if (a.star[i][j] < 0) free_cells.emplace_back(i, j);
        dfs(a, free_cells, 0);
    }

    void dfs(FiniteAlgebra& a, const std::vector<std::pair<int, int>>& free_cells, std::size_t idx) {
        if (status_ == Status::BudgetExhausted) return;
        if (--budget_ < 0) {
            status_ = Status::BudgetExhausted;
            return;
        }
        if (idx == free_cells.size()) {
            for (const QuasiLaw& q : constraints_.quasi)
                if (!quasi_law_violations(a, q).empty()) return;
            buffer_.push_back(a);
            return;
        }
        auto [i, j] = free_cells[idx];
        for (int v = 0; v < size_; ++v) {
            a.star[i][j] = v;
            if (consistent(a)) dfs(a, free_cells, idx + 1);
            if (status_ == Status::BudgetExhausted) break;
        }
        a.star[i][j] = -1;
    }
};

// ---------------------------------------------------------------------------
// Partial-map representations

struct PartialMapRepr {
    struct Connector {
        int element; // edge label
        int from;    // point inside a copy
        int to;      // pre-existing point
        int group;   // index into `groups`
    };
    struct CopyGroup {
        int defect_element;
        int defect_point;
        int round;
        int first_point;
        std::vector<int> elements; // base elements copied, sorted; the copy of
                                   // elements[k] is point first_point + k
    };

    int algebra_size = 0;
    std::vector<int> base_of;  // per point: the carrier element it represents
    std::vector<int> round_of; // per point: 0 for the original carrier
    std::vector<std::vector<std::pair<int, int>>> edges; // per element, sorted
    std::vector<Connector> connectors;
    std::vector<CopyGroup> groups;

    int point_count() const { return static_cast<int>(base_of.size()); }

    bool has_edge(int element, int from, int to) const {
        const auto& es = edges[element];
        return std::binary_search(es.begin(), es.end(), std::pair<int, int>{from, to});
    }
};

struct RangeDefect {
    int element;
    int point;

    auto operator<=>(const RangeDefect&) const = default;
};

namespace detail {

inline std::vector<std::vector<std::pair<int, int>>> wp_edge_sets(const FiniteAlgebra& a) {
    std::vector<std::vector<std::pair<int, int>>> edges(a.size);
    for (int e = 0; e < a.size; ++e) {
        for (int x = 0; x < a.size; ++x)
            edges[e].emplace_back(a.star[x][a.D[e]], a.star[x][e]);
        std::sort(edges[e].begin(), edges[e].end());
        edges[e].erase(std::unique(edges[e].begin(), edges[e].end()), edges[e].end());
    }
    return edges;
}

} // namespace detail

// The Wagner-Preston representation of a restriction semigroup over its own
// carrier: element a acts by x*D(a) |-> x*a.
inline PartialMapRepr wagner_preston(const FiniteAlgebra& a) {
    for (const Law& law : restriction_semigroup_laws()) {
        auto violations = law_violations(a, law);
        if (!violations.empty()) {
            std::string msg = "algebra violates law (" + law.label + ") " + format_term(law.lhs) +
                              " = " + format_term(law.rhs) + " at";
            for (const auto& [var, val] : violations.front().assignment)
                msg += " " + var + "=" + std::to_string(val);
            throw AxiomViolationError(msg);
        }
    }
    PartialMapRepr r;
    r.algebra_size = a.size;
    r.base_of.resize(a.size);
    r.round_of.assign(a.size, 0);
    for (int i = 0; i < a.size; ++i) r.base_of[i] = i;
    r.edges = detail::wp_edge_sets(a);
    return r;
}

// Points reachable from `start` by edges of any element, including `start`.
inline std::vector<int> forward_closure(const PartialMapRepr& r, int start) {
    if (start < 0 || start >= r.point_count()) throw std::invalid_argument("unknown point");
    std::vector<char> seen(r.point_count(), 0);
    std::vector<int> stack{start};
    seen[start] = 1;
    while (!stack.empty()) {
        int p = stack.back();
        stack.pop_back();
        for (const auto& es : r.edges)
            for (const auto& [x, y] : es)
                if (x == p && !seen[y]) {
                    seen[y] = 1;
                    stack.push_back(y);
                }
    }
    std::vector<int> out;
    for (int p = 0; p < r.point_count(); ++p)
        if (seen[p]) out.push_back(p);
    return out;
}

struct ReprCheckFailure {
    std::string check; // "domain", "composition", "faithfulness", "connector"
    std::string detail;
};

struct ReprReport {
    std::vector<ReprCheckFailure> failures;

    bool pass() const { return failures.empty(); }

    bool pass_check(const std::string& check) const {
        for (const auto& f : failures)
            if (f.check == check) return false;
        return true;
    }

    // The obligations that survive the addition of connector edges: domain
    // elements act as partial identities and distinct elements stay apart.
    // Full composition closure is a cycle-free-only guarantee.
    bool domain_correct() const { return pass_check("domain"); }
    bool faithful() const { return pass_check("faithfulness"); }
    bool composition_correct() const { return pass_check("composition"); }
};

namespace detail {

inline Relation edges_as_relation(const PartialMapRepr& r, int element) {
    return Relation(std::max(r.point_count(), 1), r.edges[element]);
}

// Domain half of hypothesis (1): D(x)-edges are exactly the identity loops on
// the domain of x's edges.
inline void check_domain_correctness(const FiniteAlgebra& a, const PartialMapRepr& r,
                                     ReprReport& report) {
    for (int x = 0; x < a.size; ++x) {
        Relation rx = edges_as_relation(r, x);
        Relation rdx = edges_as_relation(r, a.D[x]);
        if (rel_dom(rx) != rdx)
            report.failures.push_back(
                {"domain", "D(" + std::to_string(x) + ") = " + std::to_string(a.D[x]) +
                               " is not the identity on the domain of element " + std::to_string(x)});
    }
}

// Composition half of hypothesis (1): demonic composition of the edge sets
// agrees with the star table, universal quantifier included.
inline void check_composition(const FiniteAlgebra& a, const PartialMapRepr& r,
                              ReprReport& report) {
    for (int x = 0; x < a.size; ++x)
        for (int y = 0; y < a.size; ++y) {
            Relation lhs = rel_demonic(edges_as_relation(r, x), edges_as_relation(r, y));
            Relation rhs = edges_as_relation(r, a.star[x][y]);
            if (lhs != rhs) {
                std::pair<int, int> w{-1, -1};
                for (const auto& p : lhs.pairs())
                    if (!rhs.contains(p.first, p.second)) w = p;
                if (w.first < 0)
                    for (const auto& p : rhs.pairs())
                        if (!lhs.contains(p.first, p.second)) w = p;
                report.failures.push_back(
                    {"composition", std::to_string(x) + " * " + std::to_string(y) + " = " +
                                        std::to_string(a.star[x][y]) + " misrepresented at pair (" +
                                        std::to_string(w.first) + "," + std::to_string(w.second) + ")"});
            }
        }
}

} // namespace detail

// Checks the two inductive hypotheses of the gluing construction, plus the
// connector-edge consequences, on the current representation.
inline ReprReport verify_partial_repr(const FiniteAlgebra& a, const PartialMapRepr& r) {
    ReprReport report;
    detail::check_domain_correctness(a, r, report);
    detail::check_composition(a, r, report);

    for (int x = 0; x < a.size; ++x)
        for (int y = x + 1; y < a.size; ++y)
            if (r.edges[x] == r.edges[y])
                report.failures.push_back({"faithfulness", "elements " + std::to_string(x) + " and " +
                                                               std::to_string(y) +
                                                               " have identical edge sets"});

    // Connector-edge consequences: a connector u -a-> q, with u -a-> v and
    // v -b-> w inside the copy, forces q to have a b-successor q', and every
    // such q' to receive u -(a*b)-> q' (and v -b-> q' unless b is a domain
    // element, in which case q' = q and w = v).
    auto wp = detail::wp_edge_sets(a);
    for (const auto& c : r.connectors) {
        const auto& group = r.groups[c.group];
        int u_elem = r.base_of[c.from];
        for (int b = 0; b < a.size; ++b) {
            for (std::size_t k = 0; k < group.elements.size(); ++k) {
                int v_elem = group.elements[k];
                if (v_elem == u_elem) continue;
                bool uav = std::binary_search(wp[c.element].begin(), wp[c.element].end(),
                                              std::pair<int, int>{u_elem, v_elem});
                if (!uav) continue;
                for (std::size_t m = 0; m < group.elements.size(); ++m) {
                    int w_elem = group.elements[m];
                    if (!std::binary_search(wp[b].begin(), wp[b].end(),
                                            std::pair<int, int>{v_elem, w_elem}))
                        continue;
                    bool some_q2 = false;
                    for (const auto& [q1, q2] : r.edges[b]) {
                        if (q1 != c.to) continue;
                        some_q2 = true;
                        int ab = a.star[c.element][b];
                        if (!r.has_edge(ab, c.from, q2))
                            report.failures.push_back(
                                {"connector", "missing (" + std::to_string(c.element) + "*" +
                                                  std::to_string(b) + ")-edge from point " +
                                                  std::to_string(c.from) + " to " + std::to_string(q2)});
                        if (a.D[b] == b) {
                            if (q2 != c.to || w_elem != v_elem)
                                report.failures.push_back(
                                    {"connector", "domain element " + std::to_string(b) +
                                                      " moved point " + std::to_string(c.to)});
                        } else {
                            int v_copy = group.first_point + static_cast<int>(k);
                            if (!r.has_edge(b, v_copy, q2))
                                report.failures.push_back(
                                    {"connector", "missing " + std::to_string(b) + "-edge from copy point " +
                                                      std::to_string(v_copy) + " to " + std::to_string(q2)});
                        }
                    }
                    if (!some_q2)
                        report.failures.push_back(
                            {"connector", "point " + std::to_string(c.to) + " has no " +
                                              std::to_string(b) + "-successor for connector from " +
                                              std::to_string(c.from)});
                }
            }
        }
    }
    return report;
}

// All (element, point) pairs where the range element R(s) is defined at the
// point but the point has no incoming s-edge.  Requires the domain half of
// hypothesis (1), so that "R(s) defined at p" reads off the R(s)-loop.
inline std::vector<RangeDefect> range_defects(const FiniteAlgebra& a, const PartialMapRepr& r) {
    ReprReport report;
    detail::check_domain_correctness(a, r, report);
    if (!report.pass())
        throw PreconditionError("representation violates domain-correctness: " +
                                report.failures.front().detail);
    std::vector<RangeDefect> out;
    for (int s = 0; s < a.size; ++s) {
        std::vector<char> has_incoming(r.point_count(), 0);
        for (const auto& [p, q] : r.edges[s]) has_incoming[q] = 1;
        for (int p = 0; p < r.point_count(); ++p)
            if (r.has_edge(a.R[s], p, p) && !has_incoming[p]) out.push_back({s, p});
    }
    std::sort(out.begin(), out.end());
    return out;
}

// The union digraph of all elements' edges has only loops as cycles.
inline bool only_loop_cycles(const PartialMapRepr& r) {
    int n = r.point_count();
    std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
    for (const auto& es : r.edges)
        for (const auto& [x, y] : es) reach[x][y] = 1;
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

// One simultaneous repair round: for every range defect (s, p), adjoin a
// fresh copy of the forward closure of D(s) in the Wagner-Preston graph and
// wire connector edges from the copy into the pre-round representation.  The
// defect is cured by the connector leaving the copy of D(s) along s.
inline PartialMapRepr repair_round(const FiniteAlgebra& a, const PartialMapRepr& r,
                                   bool allow_non_cycle_free = false) {
    if (!allow_non_cycle_free) {
        for (const QuasiLaw& q : cycle_free_quasi_laws()) {
            auto violations = quasi_law_violations(a, q);
            if (!violations.empty()) {
                std::string msg =
                    "algebra is not cycle-free: quasi-law (" + q.label + ") fails at";
                for (const auto& [var, val] : violations.front().assignment)
                    msg += " " + var + "=" + std::to_string(val);
                throw PreconditionError(msg);
            }
        }
    }

    std::vector<RangeDefect> defects = range_defects(a, r); // also enforces hypothesis (1)
    if (defects.empty()) return r;

    auto wp = detail::wp_edge_sets(a);
    auto wp_reachable = [&](int start) {
        std::vector<char> seen(a.size, 0);
        std::vector<int> stack{start};
        seen[start] = 1;
        while (!stack.empty()) {
            int p = stack.back();
            stack.pop_back();
            for (int e = 0; e < a.size; ++e)
                for (const auto& [x, y] : wp[e])
                    if (x == p && !seen[y]) {
                        seen[y] = 1;
                        stack.push_back(y);
                    }
        }
        std::vector<int> out;
        for (int p = 0; p < a.size; ++p)
            if (seen[p]) out.push_back(p);
        return out;
    };

    PartialMapRepr next = r;
    const PartialMapRepr& old = r; // q-lookups use the pre-round state
    int round = 1;
    for (int p = 0; p < r.point_count(); ++p) round = std::max(round, r.round_of[p] + 1);

    for (const RangeDefect& defect : defects) {
        int s = defect.element;
        int p = defect.point;
        int ds = a.D[s];
        std::vector<int> reach = wp_reachable(ds);
        std::vector<char> in_fs(a.size, 0);
        for (int v : wp_reachable(s)) in_fs[v] = 1;

        PartialMapRepr::CopyGroup group;
        group.defect_element = s;
        group.defect_point = p;
        group.round = round;
        group.first_point = next.point_count();
        group.elements = reach;
        int group_index = static_cast<int>(next.groups.size());

        std::vector<int> copy_id(a.size, -1);
        for (std::size_t k = 0; k < reach.size(); ++k) {
            copy_id[reach[k]] = group.first_point + static_cast<int>(k);
            next.base_of.push_back(reach[k]);
            next.round_of.push_back(round);
        }
        next.groups.push_back(group);

        // Interior edges of the copy.
        for (int e = 0; e < a.size; ++e)
            for (const auto& [x, y] : wp[e])
                if (copy_id[x] >= 0 && copy_id[y] >= 0)
                    next.edges[e].emplace_back(copy_id[x], copy_id[y]);

        // Connector edges: u -lab-> v inside the copy with v in F_s, v = s*c
        // along an edge s -c-> v, and p -c-> q in the old part.
        for (int u_e : reach) {
            for (int v_e : reach) {
                if (u_e == v_e || !in_fs[v_e]) continue;
                for (int lab = 0; lab < a.size; ++lab) {
                    if (!std::binary_search(wp[lab].begin(), wp[lab].end(),
                                            std::pair<int, int>{u_e, v_e}))
                        continue;
                    for (int c = 0; c < a.size; ++c) {
                        if (a.star[s][a.D[c]] != s || a.star[s][c] != v_e) continue;
                        for (const auto& [q1, q2] : old.edges[c]) {
                            if (q1 != p) continue;
                            next.edges[lab].emplace_back(copy_id[u_e], q2);
                            next.connectors.push_back({lab, copy_id[u_e], q2, group_index});
                        }
                    }
                }
            }
        }
    }

    for (auto& es : next.edges) {
        std::sort(es.begin(), es.end());
        es.erase(std::unique(es.begin(), es.end()), es.end());
    }
    {
        auto& cs = next.connectors;
        std::sort(cs.begin(), cs.end(), [](const auto& a_, const auto& b_) {
            return std::tie(a_.element, a_.from, a_.to, a_.group) <
                   std::tie(b_.element, b_.from, b_.to, b_.group);
        });
        cs.erase(std::unique(cs.begin(), cs.end(),
                             [](const auto& a_, const auto& b_) {
                                 return a_.element == b_.element && a_.from == b_.from &&
                                        a_.to == b_.to && a_.group == b_.group;
                             }),
                 cs.end());
    }
    return next;
}

} // namespace dra
