#include <catch_amalgamated.hpp>

#include "dra/term_graph.hpp"

using namespace dra;

namespace {

// All join-free terms over {x, y} with at most max_nodes AST nodes.
std::vector<Term> enumerate_terms(int max_nodes) {
    std::vector<std::vector<Term>> by_size(max_nodes + 1);
    if (max_nodes >= 1) by_size[1] = {Term::variable("x"), Term::variable("y")};
    for (int n = 2; n <= max_nodes; ++n) {
        for (const Term& t : by_size[n - 1]) {
            by_size[n].push_back(Term::dom(t));
            by_size[n].push_back(Term::ran(t));
        }
        for (int i = 1; i + 1 < n; ++i)
            for (const Term& l : by_size[i])
                for (const Term& r : by_size[n - 1 - i]) by_size[n].push_back(Term::comp(l, r));
    }
    std::vector<Term> all;
    for (auto& v : by_size) all.insert(all.end(), v.begin(), v.end());
    return all;
}

} // namespace

TEST_CASE("term graph construction", "[term_graph]") {
    SECTION("dom moves the output onto the input") {
        TermGraph g = build_term_graph(parse_term("dom(x)"));
        REQUIRE(g.vertex_count() == 2);
        REQUIRE(g.edges() == std::vector<LabelledEdge>{{0, "x", 1}});
        REQUIRE(g.input() == 0);
        REQUIRE(g.output() == 0);
    }
    SECTION("x;x is a three-vertex chain") {
        TermGraph g = build_term_graph(parse_term("x;x"));
        REQUIRE(g.vertex_count() == 3);
        REQUIRE(g.edges() == std::vector<LabelledEdge>{{0, "x", 1}, {1, "x", 2}});
        REQUIRE(g.input() == 0);
        REQUIRE(g.output() == 2);
    }
    SECTION("x;ran(x) glues both edges onto the shared target") {
        TermGraph g = build_term_graph(parse_term("x;ran(x)"));
        REQUIRE(g.vertex_count() == 3);
        REQUIRE(g.edges() == std::vector<LabelledEdge>{{0, "x", 1}, {2, "x", 1}});
        REQUIRE(g.input() == 0);
        REQUIRE(g.output() == 1);
    }
    SECTION("join is rejected") {
        REQUIRE_THROWS_AS(build_term_graph(parse_term("x + y")), std::invalid_argument);
    }
}

TEST_CASE("graph composition glues output to input", "[term_graph]") {
    TermGraph gx = build_term_graph(parse_term("x"));
    SECTION("two single edges chain") {
        TermGraph g = graph_compose(gx, build_term_graph(parse_term("y")));
        REQUIRE(g.vertex_count() == 3);
        REQUIRE(g.edges() == std::vector<LabelledEdge>{{0, "x", 1}, {1, "y", 2}});
    }
    SECTION("composing with a range graph reproduces x;ran(x)") {
        TermGraph g = graph_compose(gx, build_term_graph(parse_term("ran(x)")));
        REQUIRE(g == build_term_graph(parse_term("x;ran(x)")));
    }
    SECTION("dom(x);y branches at the input") {
        TermGraph g = graph_compose(build_term_graph(parse_term("dom(x)")),
                                    build_term_graph(parse_term("y")));
        REQUIRE(g.vertex_count() == 3);
        REQUIRE(g.has_edge(0, "x", 1));
        REQUIRE(g.has_edge(0, "y", 2));
        REQUIRE(g.input() == 0);
        REQUIRE(g.output() == 2);
    }
}

TEST_CASE("homomorphism search", "[term_graph]") {
    SECTION("x;ran(x) retracts onto a single edge") {
        TermGraph from = build_term_graph(parse_term("x;ran(x)"));
        TermGraph to = build_term_graph(parse_term("x"));
        auto map = hom_exists(from, to);
        REQUIRE(map.has_value());
        REQUIRE(map->assignment == std::vector<int>{0, 1, 0});
        REQUIRE(verify_homomorphism(from, to, *map));
    }
    SECTION("label vocabulary mismatch has no homomorphism") {
        REQUIRE_FALSE(
            hom_exists(build_term_graph(parse_term("x;y")), build_term_graph(parse_term("x")))
                .has_value());
    }
    SECTION("identity homomorphism always exists") {
        for (const Term& t : enumerate_terms(4)) {
            TermGraph g = build_term_graph(t);
            auto map = hom_exists(g, g);
            REQUIRE(map.has_value());
            REQUIRE(verify_homomorphism(g, g, *map));
        }
    }
    SECTION("input/output identification must be respected") {
        // dom(x) has input == output; x does not
        REQUIRE_FALSE(
            hom_exists(build_term_graph(parse_term("dom(x)")), build_term_graph(parse_term("x")))
                .has_value());
    }
}

TEST_CASE("graph_to_model", "[term_graph]") {
    SECTION("a single edge becomes a singleton relation") {
        RelationalModel m = graph_to_model(build_term_graph(parse_term("x")));
        REQUIRE(m.universe == 2);
        REQUIRE(m.valuation.at("x") == Relation(2, {{0, 1}}));
    }
    SECTION("the input/output pair satisfies the defining term") {
        TermGraph g = build_term_graph(parse_term("dom(x)"));
        RelationalModel m = graph_to_model(g);
        REQUIRE(eval(parse_term("dom(x)"), m, Mode::Angelic).contains(g.input(), g.output()));
    }
    SECTION("the canonical model separates the twisted law") {
        TermGraph g = build_term_graph(parse_term("dom(x;y);x"));
        REQUIRE(g.vertex_count() == 4);
        RelationalModel m = graph_to_model(g);
        Relation lhs = eval(parse_term("dom(x;y);x"), m, Mode::Angelic);
        Relation rhs = eval(parse_term("x;dom(y)"), m, Mode::Angelic);
        REQUIRE(lhs.contains(g.input(), g.output()));
        REQUIRE_FALSE(rhs.contains(g.input(), g.output()));
    }
}

TEST_CASE("built term graphs are loop-free and acyclic up to loops", "[term_graph][property]") {
    for (const Term& t : enumerate_terms(5)) {
        TermGraph g = build_term_graph(t);
        REQUIRE_FALSE(has_variable_loop(g));
        REQUIRE(reachability_antisymmetric(g));
    }
}

TEST_CASE("the defining pair always lies in the term's own model", "[term_graph][property]") {
    // (input, output) belongs to the evaluation of s in the canonical model of G_s
    for (const Term& t : enumerate_terms(5)) {
        TermGraph g = build_term_graph(t);
        RelationalModel m = graph_to_model(g);
        REQUIRE(eval(t, m, Mode::Angelic).contains(g.input(), g.output()));
    }
}

TEST_CASE("homomorphism existence matches the evaluation oracle", "[term_graph][property]") {
    // Small-scale version of the main equivalence; the acceptance suite runs
    // the full enumeration at six nodes.
    auto terms = enumerate_terms(4);
    std::set<std::string> xy{"x", "y"};
    for (const Term& s : terms) {
        TermGraph gs = build_term_graph(s);
        RelationalModel m = model_with_empty_vars(graph_to_model(gs), xy);
        for (const Term& t : terms) {
            bool hom = hom_exists(build_term_graph(t), gs).has_value();
            bool oracle = eval(t, m, Mode::Angelic).contains(gs.input(), gs.output());
            REQUIRE(hom == oracle);
        }
    }
}

TEST_CASE("dot dump marks the distinguished vertices", "[term_graph]") {
    std::string dot = to_dot(build_term_graph(parse_term("dom(x)")));
    REQUIRE(dot.find("digraph") != std::string::npos);
    REQUIRE(dot.find("(input)") != std::string::npos);
    REQUIRE(dot.find("(output)") != std::string::npos);
    REQUIRE(dot.find("label=\"x\"") != std::string::npos);
}
