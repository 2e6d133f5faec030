#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dra/rng.hpp"
#include "dra/term.hpp"

namespace dra {

// A finite binary relation over the dense universe {0, ..., n-1}.  Pairs are
// kept sorted lexicographically, so the successors of a source form a
// contiguous row and composition runs in O(deg).
class Relation {
public:
    using Pair = std::pair<int, int>;

    Relation(int universe, std::vector<Pair> pairs) : universe_(universe), pairs_(std::move(pairs)) {
        if (universe_ < 1) throw std::invalid_argument("universe size must be positive");
        std::sort(pairs_.begin(), pairs_.end());
        pairs_.erase(std::unique(pairs_.begin(), pairs_.end()), pairs_.end());
        for (const auto& [u, v] : pairs_)
            if (u < 0 || v < 0 || u >= universe_ || v >= universe_)
                throw std::invalid_argument("relation pair out of universe bounds");
    }

    static Relation empty(int universe) { return Relation(universe, {}); }

    static Relation identity(int universe) {
        std::vector<Pair> pairs;
        pairs.reserve(universe);
        for (int u = 0; u < universe; ++u) pairs.emplace_back(u, u);
        return Relation(universe, std::move(pairs));
    }

    int universe() const { return universe_; }
    const std::vector<Pair>& pairs() const { return pairs_; }
    bool empty_set() const { return pairs_.empty(); }

    bool contains(int u, int v) const {
        return std::binary_search(pairs_.begin(), pairs_.end(), Pair{u, v});
    }

    // Successor row of u: a contiguous [first, last) range.
    std::pair<std::vector<Pair>::const_iterator, std::vector<Pair>::const_iterator> row(int u) const {
        return std::equal_range(pairs_.begin(), pairs_.end(), Pair{u, 0},
                                [](const Pair& a, const Pair& b) { return a.first < b.first; });
    }

    bool operator==(const Relation& other) const {
        return universe_ == other.universe_ && pairs_ == other.pairs_;
    }
    bool operator!=(const Relation& other) const { return !(*this == other); }

    bool subset_of(const Relation& other) const {
        return std::includes(other.pairs_.begin(), other.pairs_.end(), pairs_.begin(), pairs_.end());
    }

private:
    int universe_;
    std::vector<Pair> pairs_;
};

namespace detail {
inline void require_same_universe(const Relation& x, const Relation& y) {
    if (x.universe() != y.universe())
        throw std::invalid_argument("relations live on different universes");
}
} // namespace detail

inline Relation rel_dom(const Relation& x) {
    std::vector<Relation::Pair> out;
    int prev = -1;
    for (const auto& [u, v] : x.pairs())
        if (u != prev) {
            out.emplace_back(u, u);
            prev = u;
        }
    return Relation(x.universe(), std::move(out));
}

inline Relation rel_ran(const Relation& x) {
    std::vector<Relation::Pair> out;
    for (const auto& [u, v] : x.pairs()) out.emplace_back(v, v);
    return Relation(x.universe(), std::move(out));
}

inline Relation rel_angelic(const Relation& x, const Relation& y) {
    detail::require_same_universe(x, y);
    std::vector<Relation::Pair> out;
    for (const auto& [u, w] : x.pairs()) {
        auto [first, last] = y.row(w);
        for (auto it = first; it != last; ++it) out.emplace_back(u, it->second);
    }
    return Relation(x.universe(), std::move(out));
}

// Demonic composition: keep only sources whose entire successor set under x
// lies in dom(y), then compose those rows angelically.
inline Relation rel_demonic(const Relation& x, const Relation& y) {
    detail::require_same_universe(x, y);
    Relation dy = rel_dom(y);
    std::vector<Relation::Pair> out;
    const auto& xp = x.pairs();
    std::size_t i = 0;
    while (i < xp.size()) {
        int u = xp[i].first;
        std::size_t j = i;
        bool total = true;
        while (j < xp.size() && xp[j].first == u) {
            if (!dy.contains(xp[j].second, xp[j].second)) total = false;
            ++j;
        }
        if (total)
            for (std::size_t k = i; k < j; ++k) {
                auto [first, last] = y.row(xp[k].second);
                for (auto it = first; it != last; ++it) out.emplace_back(u, it->second);
            }
        i = j;
    }
    return Relation(x.universe(), std::move(out));
}

inline Relation rel_join(const Relation& x, const Relation& y) {
    detail::require_same_universe(x, y);
    std::vector<Relation::Pair> out = x.pairs();
    out.insert(out.end(), y.pairs().begin(), y.pairs().end());
    return Relation(x.universe(), std::move(out));
}

enum class RelOp { Dom, Ran, Angelic, Demonic, Join };

inline Relation relational_op(RelOp op, const Relation& x, const Relation* y = nullptr) {
    switch (op) {
    case RelOp::Dom: return rel_dom(x);
    case RelOp::Ran: return rel_ran(x);
    case RelOp::Angelic:
    case RelOp::Demonic:
    case RelOp::Join:
        if (y == nullptr) throw std::invalid_argument("binary relational operation needs two operands");
        if (op == RelOp::Angelic) return rel_angelic(x, *y);
        if (op == RelOp::Demonic) return rel_demonic(x, *y);
        return rel_join(x, *y);
    }
    throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// Models and evaluation

struct RelationalModel {
    int universe;
    std::map<std::string, Relation> valuation;
};

inline RelationalModel model_with_empty_vars(RelationalModel m, const std::set<std::string>& vars) {
    for (const std::string& v : vars)
        m.valuation.emplace(v, Relation::empty(m.universe));
    return m;
}

enum class Mode { Angelic, Demonic };

inline Relation eval(const Term& t, const RelationalModel& m, Mode mode) {
    switch (t.kind()) {
    case TermKind::Variable: {
        auto it = m.valuation.find(t.var_name());
        if (it == m.valuation.end())
            throw std::invalid_argument("unbound variable '" + t.var_name() + "'");
        return it->second;
    }
    case TermKind::Dom: return rel_dom(eval(t.child(), m, mode));
    case TermKind::Ran: return rel_ran(eval(t.child(), m, mode));
    case TermKind::Comp: {
        Relation l = eval(t.left(), m, mode);
        Relation r = eval(t.right(), m, mode);
        return mode == Mode::Angelic ? rel_angelic(l, r) : rel_demonic(l, r);
    }
    case TermKind::Join:
        if (mode == Mode::Demonic)
            throw std::invalid_argument("join is not part of the demonic signature");
        return rel_join(eval(t.left(), m, mode), eval(t.right(), m, mode));
    }
    throw std::logic_error("unreachable");
}

struct EquationReport {
    enum class Side { Lhs, Rhs };
    bool holds = false;
    std::optional<std::pair<int, int>> witness; // in exactly one side when !holds
    Side side = Side::Lhs;
};

inline EquationReport check_equation(const Term& s, const Term& t, const RelationalModel& m,
                                     Mode mode) {
    Relation ls = eval(s, m, mode);
    Relation rs = eval(t, m, mode);
    EquationReport report;
    if (ls == rs) {
        report.holds = true;
        return report;
    }
    for (const auto& p : ls.pairs())
        if (!rs.contains(p.first, p.second)) {
            report.witness = p;
            report.side = EquationReport::Side::Lhs;
            return report;
        }
    for (const auto& p : rs.pairs())
        if (!ls.contains(p.first, p.second)) {
            report.witness = p;
            report.side = EquationReport::Side::Rhs;
            return report;
        }
    throw std::logic_error("unequal relations without a witness");
}

// Seeded random model: each candidate pair is included independently with
// probability `density`, drawn from splitmix64 so runs reproduce exactly.
// Pairs are drawn variable by variable in the given order, source-major.
inline RelationalModel random_model(int universe, const std::vector<std::string>& variables,
                                    double density, std::uint64_t seed) {
    if (universe < 1) throw std::invalid_argument("universe size must be positive");
    if (density < 0.0 || density > 1.0) throw std::invalid_argument("density must be in [0, 1]");
    SplitMix64 rng(seed);
    RelationalModel m{universe, {}};
    for (const std::string& var : variables) {
        std::vector<Relation::Pair> pairs;
        for (int u = 0; u < universe; ++u)
            for (int v = 0; v < universe; ++v)
                if (rng.next_double() < density) pairs.emplace_back(u, v);
        m.valuation.emplace(var, Relation(universe, std::move(pairs)));
    }
    return m;
}

} // namespace dra
