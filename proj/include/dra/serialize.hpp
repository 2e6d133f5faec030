#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dra/axioms.hpp"
#include "dra/decision.hpp"
#include "dra/demonic.hpp"
#include "dra/relation.hpp"
#include "dra/saturation.hpp"
#include "dra/term.hpp"

namespace dra {

// JSON readers and writers for the file formats: relational models, finite
// algebras, verdicts and saturation stages.  ordered_json keeps key order
// stable so identical inputs produce byte-identical output.
using Json = nlohmann::ordered_json;

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Model files: {"universe": n, "vars": {"x": [[0,1],[0,2]], ...}}
inline Json model_to_json(const RelationalModel& m) {
    Json vars = Json::object();
    for (const auto& [name, rel] : m.valuation) {
        Json pairs = Json::array();
        for (const auto& [u, v] : rel.pairs()) pairs.push_back(Json::array({u, v}));
        vars[name] = std::move(pairs);
    }
    return Json{{"universe", m.universe}, {"vars", std::move(vars)}};
}

inline RelationalModel model_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("universe") || !j.contains("vars"))
        throw FormatError("model must be an object with 'universe' and 'vars'");
    if (!j["universe"].is_number_integer() || j["universe"].get<int>() < 1)
        throw FormatError("'universe' must be a positive integer");
    int universe = j["universe"].get<int>();
    RelationalModel m{universe, {}};
    if (!j["vars"].is_object()) throw FormatError("'vars' must be an object");
    for (const auto& [name, pairs] : j["vars"].items()) {
        if (!Term::valid_variable_name(name))
            throw FormatError("invalid variable name '" + name + "'");
        if (!pairs.is_array()) throw FormatError("pairs of '" + name + "' must be an array");
        std::vector<Relation::Pair> ps;
        for (const auto& p : pairs) {
            if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() ||
                !p[1].is_number_integer())
                throw FormatError("each pair must be a 2-element integer array");
            int u = p[0].get<int>();
            int v = p[1].get<int>();
            if (u < 0 || v < 0 || u >= universe || v >= universe)
                throw FormatError("pair out of universe bounds in '" + name + "'");
            ps.emplace_back(u, v);
        }
        std::vector<Relation::Pair> sorted = ps;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw FormatError("duplicate pair in '" + name + "'");
        m.valuation.emplace(name, Relation(universe, std::move(ps)));
    }
    return m;
}

inline Json relation_to_json(const Relation& r) {
    Json pairs = Json::array();
    for (const auto& [u, v] : r.pairs()) pairs.push_back(Json::array({u, v}));
    return pairs;
}

// Algebra files: {"size": n, "star": [[..]..], "D": [..], "R": [..]}
inline Json algebra_to_json(const FiniteAlgebra& a) {
    return Json{{"size", a.size}, {"star", a.star}, {"D", a.D}, {"R", a.R}};
}

inline FiniteAlgebra algebra_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("size") || !j.contains("star") || !j.contains("D") ||
        !j.contains("R"))
        throw FormatError("algebra must be an object with 'size', 'star', 'D' and 'R'");
    FiniteAlgebra a;
    if (!j["size"].is_number_integer() || j["size"].get<int>() < 1)
        throw FormatError("'size' must be a positive integer");
    a.size = j["size"].get<int>();
    auto check_element = [&](const Json& e) {
        if (!e.is_number_integer() || e.get<int>() < 0 || e.get<int>() >= a.size)
            throw FormatError("table entry out of carrier range");
        return e.get<int>();
    };
    if (!j["star"].is_array() || static_cast<int>(j["star"].size()) != a.size)
        throw FormatError("'star' must be a size x size table");
    for (const auto& row : j["star"]) {
        if (!row.is_array() || static_cast<int>(row.size()) != a.size)
            throw FormatError("'star' must be a size x size table");
        std::vector<int> r;
        for (const auto& e : row) r.push_back(check_element(e));
        a.star.push_back(std::move(r));
    }
    for (const char* key : {"D", "R"}) {
        if (!j[key].is_array() || static_cast<int>(j[key].size()) != a.size)
            throw FormatError(std::string("'") + key + "' must be a vector of length size");
        std::vector<int>& target = key[0] == 'D' ? a.D : a.R;
        for (const auto& e : j[key]) target.push_back(check_element(e));
    }
    return a;
}

// Verdicts: {"relation", "valid", "witnesses", "counterexample"}
inline Json verdict_to_json(const Verdict& v) {
    Json j;
    j["relation"] = v.relation == DecisionRelation::Eq ? "eq" : "leq";
    j["valid"] = v.valid;
    Json witnesses = Json::array();
    for (const auto& w : v.witnesses)
        witnesses.push_back(Json{{"direction", w.backward ? "backward" : "forward"},
                                 {"disjunct", w.disjunct},
                                 {"target", w.target},
                                 {"map", w.map.assignment}});
    j["witnesses"] = std::move(witnesses);
    if (v.counterexample) {
        const Counterexample& cx = *v.counterexample;
        j["counterexample"] = Json{{"direction", cx.backward ? "backward" : "forward"},
                                   {"model", model_to_json(cx.model)},
                                   {"witness", Json::array({cx.witness.first, cx.witness.second})},
                                   {"disjunct", cx.disjunct}};
    } else {
        j["counterexample"] = nullptr;
    }
    return j;
}

inline Verdict verdict_from_json(const Json& j) {
    Verdict v;
    if (!j.is_object() || !j.contains("relation") || !j.contains("valid"))
        throw FormatError("verdict must be an object with 'relation' and 'valid'");
    std::string rel = j["relation"].get<std::string>();
    if (rel != "eq" && rel != "leq") throw FormatError("'relation' must be 'eq' or 'leq'");
    v.relation = rel == "eq" ? DecisionRelation::Eq : DecisionRelation::Leq;
    v.valid = j["valid"].get<bool>();
    if (j.contains("witnesses"))
        for (const auto& w : j["witnesses"]) {
            DisjunctWitness d;
            d.backward = w.at("direction").get<std::string>() == "backward";
            d.disjunct = w.at("disjunct").get<int>();
            d.target = w.at("target").get<int>();
            d.map.assignment = w.at("map").get<std::vector<int>>();
            v.witnesses.push_back(std::move(d));
        }
    if (j.contains("counterexample") && !j["counterexample"].is_null()) {
        const Json& c = j["counterexample"];
        Counterexample cx{model_from_json(c.at("model")),
                          {c.at("witness").at(0).get<int>(), c.at("witness").at(1).get<int>()},
                          c.at("disjunct").get<int>(),
                          c.at("direction").get<std::string>() == "backward"};
        v.counterexample = std::move(cx);
    }
    return v;
}

// Saturation stages: nodes plus labelled edges with generator terms.
inline Json stage_to_json(const LabelledGraph& g) {
    Json edges = Json::array();
    for (const auto& [edge, gen] : g.labels())
        edges.push_back(
            Json{{"from", edge.first}, {"to", edge.second}, {"generator", format_term(gen)}});
    return Json{{"nodes", g.nodes()}, {"edges", std::move(edges)}};
}

inline Json defects_to_json(const DefectReport& d) {
    Json comp = Json::array();
    for (const auto& c : d.comp)
        comp.push_back(Json{{"from", c.u},
                            {"to", c.v},
                            {"a", format_term(c.a)},
                            {"b", format_term(c.b)}});
    Json dom = Json::array();
    for (const auto& c : d.dom) dom.push_back(Json{{"node", c.u}, {"a", format_term(c.a)}});
    Json ran = Json::array();
    for (const auto& c : d.ran) ran.push_back(Json{{"node", c.u}, {"a", format_term(c.a)}});
    return Json{{"comp", std::move(comp)}, {"dom", std::move(dom)}, {"ran", std::move(ran)}};
}

inline std::vector<Term> elements_from_json(const Json& j) {
    if (!j.is_array() || j.empty()) throw FormatError("elements file must be a non-empty array");
    std::vector<Term> out;
    for (const auto& e : j) {
        if (!e.is_string()) throw FormatError("elements must be term strings");
        out.push_back(parse_term(e.get<std::string>()));
    }
    return out;
}

inline Json repr_to_json(const PartialMapRepr& r) {
    Json points = Json::array();
    for (int p = 0; p < r.point_count(); ++p)
        points.push_back(Json{{"id", p}, {"element", r.base_of[p]}, {"round", r.round_of[p]}});
    Json edges = Json::object();
    for (int e = 0; e < static_cast<int>(r.edges.size()); ++e) {
        Json list = Json::array();
        for (const auto& [x, y] : r.edges[e]) list.push_back(Json::array({x, y}));
        edges[std::to_string(e)] = std::move(list);
    }
    Json connectors = Json::array();
    for (const auto& c : r.connectors)
        connectors.push_back(
            Json{{"element", c.element}, {"from", c.from}, {"to", c.to}, {"group", c.group}});
    return Json{{"points", std::move(points)},
                {"edges", std::move(edges)},
                {"connectors", std::move(connectors)}};
}

inline Json scan_report_to_json(const ScanReport& r) {
    Json violations = Json::array();
    for (const auto& v : r.violations) {
        Json sigma = Json::object();
        for (const auto& [var, term] : v.substitution) sigma[var] = format_term(term);
        violations.push_back(Json{{"axiom", v.axiom_label},
                                  {"model_index", v.model_index},
                                  {"model", model_to_json(v.model)},
                                  {"substitution", std::move(sigma)},
                                  {"witness", Json::array({v.witness.first, v.witness.second})}});
    }
    return Json{{"models_tested", r.models_tested}, {"violations", std::move(violations)}};
}

} // namespace dra
