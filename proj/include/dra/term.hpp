#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dra/rng.hpp"

namespace dra {

// Terms over the signature (composition ';', dom, ran, join '+').
//
// Grammar (whitespace insignificant):
//   term := comp ('+' comp)*
//   comp := atom (';' atom)*
//   atom := 'dom' '(' term ')' | 'ran' '(' term ')' | var | '(' term ')'
//   var  := [a-z][a-zA-Z0-9_]*   excluding the reserved words dom, ran
//
// Composition binds tighter than join; both associate to the left.

enum class TermKind { Variable, Dom, Ran, Comp, Join };

class ParseError : public std::runtime_error {
public:
    ParseError(std::string msg, std::size_t offset)
        : std::runtime_error(std::move(msg)), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

class ResourceLimitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Immutable AST with shared structure.  Nodes cache hash, size and a join
// flag so that copies are O(1) and containers can key terms cheaply.
class Term {
    struct Node;
    using NodePtr = std::shared_ptr<const Node>;

    struct Node {
        TermKind kind;
        std::string name; // Variable only
        NodePtr left;     // Dom/Ran child, Comp/Join left
        NodePtr right;    // Comp/Join right
        std::size_t hash = 0;
        int node_count = 1;
        bool has_join = false;
    };

    NodePtr node_;

    explicit Term(NodePtr n) : node_(std::move(n)) {}

    static std::size_t mix(std::size_t a, std::size_t b) {
        return a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
    }

    static Term make_unary(TermKind k, const Term& child, std::size_t tag) {
        auto n = std::make_shared<Node>();
        n->kind = k;
        n->left = child.node_;
        n->hash = mix(tag, child.hash());
        n->node_count = 1 + child.node_count();
        n->has_join = child.contains_join();
        return Term(std::move(n));
    }

    static Term make_binary(TermKind k, const Term& l, const Term& r, std::size_t tag) {
        auto n = std::make_shared<Node>();
        n->kind = k;
        n->left = l.node_;
        n->right = r.node_;
        n->hash = mix(mix(tag, l.hash()), r.hash());
        n->node_count = 1 + l.node_count() + r.node_count();
        n->has_join = (k == TermKind::Join) || l.contains_join() || r.contains_join();
        return Term(std::move(n));
    }

public:
    static bool valid_variable_name(std::string_view name) {
        if (name.empty() || name == "dom" || name == "ran") return false;
        if (name[0] < 'a' || name[0] > 'z') return false;
        for (char c : name.substr(1)) {
            bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                      (c >= '0' && c <= '9') || c == '_';
            if (!ok) return false;
        }
        return true;
    }

    static Term variable(std::string name) {
        if (!valid_variable_name(name))
            throw std::invalid_argument("invalid variable name: '" + name + "'");
        auto n = std::make_shared<Node>();
        n->kind = TermKind::Variable;
        n->hash = mix(0x761u, std::hash<std::string>{}(name));
        n->name = std::move(name);
        return Term(std::move(n));
    }

    static Term dom(const Term& t) { return make_unary(TermKind::Dom, t, 0xd0u); }
    static Term ran(const Term& t) { return make_unary(TermKind::Ran, t, 0x4au); }
    static Term comp(const Term& l, const Term& r) { return make_binary(TermKind::Comp, l, r, 0xc0u); }
    static Term join(const Term& l, const Term& r) { return make_binary(TermKind::Join, l, r, 0x10u); }

    TermKind kind() const { return node_->kind; }
    const std::string& var_name() const { return node_->name; }
    Term child() const { return Term(node_->left); }  // Dom/Ran
    Term left() const { return Term(node_->left); }   // Comp/Join
    Term right() const { return Term(node_->right); } // Comp/Join
    std::size_t hash() const { return node_->hash; }
    int node_count() const { return node_->node_count; }
    bool contains_join() const { return node_->has_join; }

    bool operator==(const Term& other) const {
        if (node_ == other.node_) return true;
        if (node_->hash != other.node_->hash || node_->kind != other.node_->kind ||
            node_->node_count != other.node_->node_count)
            return false;
        switch (node_->kind) {
        case TermKind::Variable: return node_->name == other.node_->name;
        case TermKind::Dom:
        case TermKind::Ran: return child() == other.child();
        case TermKind::Comp:
        case TermKind::Join: return left() == other.left() && right() == other.right();
        }
        return false;
    }
    bool operator!=(const Term& other) const { return !(*this == other); }
};

struct TermHash {
    std::size_t operator()(const Term& t) const { return t.hash(); }
};

struct TermPairHash {
    std::size_t operator()(const std::pair<Term, Term>& p) const {
        return p.first.hash() * 0x9e3779b97f4a7c15ull + p.second.hash();
    }
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    Term parse() {
        Term t = parse_term();
        skip_ws();
        if (pos_ != text_.size())
            throw ParseError("unexpected input", pos_);
        return t;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < text_.size() &&
               (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
                text_[pos_] == '\r'))
            ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c, const char* what) {
        if (!eat(c))
            throw ParseError(std::string("expected '") + c + "' (" + what + ")", pos_);
    }

    Term parse_term() {
        Term t = parse_comp();
        while (eat('+')) t = Term::join(t, parse_comp());
        return t;
    }

    Term parse_comp() {
        Term t = parse_atom();
        while (eat(';')) t = Term::comp(t, parse_atom());
        return t;
    }

    Term parse_atom() {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("expected a term", pos_);
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            Term t = parse_term();
            expect(')', "closing parenthesis");
            return t;
        }
        if (c >= 'a' && c <= 'z') {
            std::size_t start = pos_;
            ++pos_;
            while (pos_ < text_.size()) {
                char d = text_[pos_];
                bool ok = (d >= 'a' && d <= 'z') || (d >= 'A' && d <= 'Z') ||
                          (d >= '0' && d <= '9') || d == '_';
                if (!ok) break;
                ++pos_;
            }
            std::string name(text_.substr(start, pos_ - start));
            if (name == "dom" || name == "ran") {
                skip_ws();
                if (pos_ < text_.size() && text_[pos_] == '(') {
                    ++pos_;
                    Term t = parse_term();
                    expect(')', "closing parenthesis");
                    return name == "dom" ? Term::dom(t) : Term::ran(t);
                }
                throw ParseError("reserved word '" + name + "' used as a variable", start);
            }
            return Term::variable(std::move(name));
        }
        throw ParseError("expected a term", pos_);
    }
};

} // namespace detail

inline Term parse_term(std::string_view text) { return detail::Parser(text).parse(); }

// ---------------------------------------------------------------------------
// Printing (minimal parentheses; parse_term(format_term(t)) == t)

namespace detail {

// context: 0 = join allowed, 1 = comp allowed, 2 = atom required
inline void format_into(const Term& t, int context, std::string& out) {
    switch (t.kind()) {
    case TermKind::Variable:
        out += t.var_name();
        return;
    case TermKind::Dom:
    case TermKind::Ran:
        out += (t.kind() == TermKind::Dom) ? "dom(" : "ran(";
        format_into(t.child(), 0, out);
        out += ')';
        return;
    case TermKind::Comp: {
        bool parens = context > 1;
        if (parens) out += '(';
        format_into(t.left(), 1, out);
        out += ';';
        format_into(t.right(), 2, out);
        if (parens) out += ')';
        return;
    }
    case TermKind::Join: {
        bool parens = context > 0;
        if (parens) out += '(';
        format_into(t.left(), 0, out);
        out += " + ";
        format_into(t.right(), 1, out);
        if (parens) out += ')';
        return;
    }
    }
}

} // namespace detail

inline std::string format_term(const Term& t) {
    std::string out;
    detail::format_into(t, 0, out);
    return out;
}

// ---------------------------------------------------------------------------
// Join normal form

namespace detail {

inline void jnf_rec(const Term& t, std::vector<Term>& out, long long& budget) {
    auto charge = [&](int n) {
        budget -= n;
        if (budget < 0)
            throw ResourceLimitError("join normal form exceeded the node-count cap");
    };
    switch (t.kind()) {
    case TermKind::Variable:
        charge(1);
        out.push_back(t);
        return;
    case TermKind::Dom:
    case TermKind::Ran: {
        std::vector<Term> inner;
        jnf_rec(t.child(), inner, budget);
        charge(static_cast<int>(inner.size()));
        for (const Term& s : inner)
            out.push_back(t.kind() == TermKind::Dom ? Term::dom(s) : Term::ran(s));
        return;
    }
    case TermKind::Comp: {
        std::vector<Term> ls, rs;
        jnf_rec(t.left(), ls, budget);
        jnf_rec(t.right(), rs, budget);
        for (const Term& a : ls)
            for (const Term& b : rs) {
                charge(a.node_count() + b.node_count() + 1);
                out.push_back(Term::comp(a, b));
            }
        return;
    }
    case TermKind::Join:
        jnf_rec(t.left(), out, budget);
        jnf_rec(t.right(), out, budget);
        return;
    }
}

} // namespace detail

// Distributes all operations over join using the additivity laws, returning
// join-free disjuncts in left-to-right distribution order with structural
// duplicates removed.  Throws ResourceLimitError past `node_cap` total nodes.
inline std::vector<Term> join_normal_form(const Term& t, long long node_cap = 100000) {
    std::vector<Term> raw;
    long long budget = node_cap;
    detail::jnf_rec(t, raw, budget);
    std::vector<Term> out;
    for (const Term& s : raw) {
        bool seen = false;
        for (const Term& prev : out)
            if (prev == s) {
                seen = true;
                break;
            }
        if (!seen) out.push_back(s);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Out-signature: per-variable count of occurrences outside any dom/ran.

struct OutSignature {
    std::map<std::string, int> counts;

    bool operator==(const OutSignature& other) const { return counts == other.counts; }
    bool operator!=(const OutSignature& other) const { return counts != other.counts; }
};

namespace detail {

inline void out_sig_rec(const Term& t, bool shielded, OutSignature& sig) {
    switch (t.kind()) {
    case TermKind::Variable: {
        auto [it, inserted] = sig.counts.try_emplace(t.var_name(), 0);
        if (!shielded) ++it->second;
        return;
    }
    case TermKind::Dom:
    case TermKind::Ran:
        out_sig_rec(t.child(), true, sig);
        return;
    case TermKind::Comp:
        out_sig_rec(t.left(), shielded, sig);
        out_sig_rec(t.right(), shielded, sig);
        return;
    case TermKind::Join:
        throw std::invalid_argument("out_signature is defined for join-free terms only");
    }
}

} // namespace detail

inline OutSignature out_signature(const Term& t) {
    OutSignature sig;
    detail::out_sig_rec(t, false, sig);
    return sig;
}

// ---------------------------------------------------------------------------
// Generic term utilities

inline void collect_variables(const Term& t, std::set<std::string>& out) {
    switch (t.kind()) {
    case TermKind::Variable: out.insert(t.var_name()); return;
    case TermKind::Dom:
    case TermKind::Ran: collect_variables(t.child(), out); return;
    case TermKind::Comp:
    case TermKind::Join:
        collect_variables(t.left(), out);
        collect_variables(t.right(), out);
        return;
    }
}

inline std::set<std::string> variables_of(const Term& t) {
    std::set<std::string> vars;
    collect_variables(t, vars);
    return vars;
}

inline Term substitute(const Term& t, const std::map<std::string, Term>& sigma) {
    switch (t.kind()) {
    case TermKind::Variable: {
        auto it = sigma.find(t.var_name());
        return it == sigma.end() ? t : it->second;
    }
    case TermKind::Dom: return Term::dom(substitute(t.child(), sigma));
    case TermKind::Ran: return Term::ran(substitute(t.child(), sigma));
    case TermKind::Comp: return Term::comp(substitute(t.left(), sigma), substitute(t.right(), sigma));
    case TermKind::Join: return Term::join(substitute(t.left(), sigma), substitute(t.right(), sigma));
    }
    throw std::logic_error("unreachable");
}

// Subterm positions are preorder indices: 0 is the root, then left subtree,
// then right subtree.
inline Term subterm_at(const Term& t, int pos) {
    if (pos == 0) return t;
    switch (t.kind()) {
    case TermKind::Variable: throw std::out_of_range("subterm position out of range");
    case TermKind::Dom:
    case TermKind::Ran: return subterm_at(t.child(), pos - 1);
    case TermKind::Comp:
    case TermKind::Join: {
        int left_size = t.left().node_count();
        if (pos - 1 < left_size) return subterm_at(t.left(), pos - 1);
        return subterm_at(t.right(), pos - 1 - left_size);
    }
    }
    throw std::logic_error("unreachable");
}

inline Term replace_at(const Term& t, int pos, const Term& replacement) {
    if (pos == 0) return replacement;
    switch (t.kind()) {
    case TermKind::Variable: throw std::out_of_range("subterm position out of range");
    case TermKind::Dom: return Term::dom(replace_at(t.child(), pos - 1, replacement));
    case TermKind::Ran: return Term::ran(replace_at(t.child(), pos - 1, replacement));
    case TermKind::Comp:
    case TermKind::Join: {
        int left_size = t.left().node_count();
        Term l = t.left(), r = t.right();
        if (pos - 1 < left_size)
            l = replace_at(l, pos - 1, replacement);
        else
            r = replace_at(r, pos - 1 - left_size, replacement);
        return t.kind() == TermKind::Comp ? Term::comp(l, r) : Term::join(l, r);
    }
    }
    throw std::logic_error("unreachable");
}

// Random term over `vars`, nested at most `max_depth` operations deep.
// Joins are only produced when `allow_join` is set.
inline Term random_term(SplitMix64& rng, const std::vector<std::string>& vars, int max_depth,
                        bool allow_join) {
    if (max_depth <= 0 || rng.below(4) == 0)
        return Term::variable(vars[rng.below(vars.size())]);
    switch (rng.below(allow_join ? 4 : 3)) {
    case 0: return Term::dom(random_term(rng, vars, max_depth - 1, allow_join));
    case 1: return Term::ran(random_term(rng, vars, max_depth - 1, allow_join));
    case 2:
        return Term::comp(random_term(rng, vars, max_depth - 1, allow_join),
                          random_term(rng, vars, max_depth - 1, allow_join));
    default:
        return Term::join(random_term(rng, vars, max_depth - 1, allow_join),
                          random_term(rng, vars, max_depth - 1, allow_join));
    }
}

} // namespace dra
