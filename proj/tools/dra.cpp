// dra: command-line front end for the domain-range algebra toolkit.
//
// JSON goes to stdout, a human-readable summary to stderr.  Exit codes:
//   0  operation ran and produced its result
//   1  usage, parse or file-format error
//   2  internal verification failure (a certificate did not re-check)

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dra/axioms.hpp"
#include "dra/decision.hpp"
#include "dra/demonic.hpp"
#include "dra/relation.hpp"
#include "dra/saturation.hpp"
#include "dra/serialize.hpp"
#include "dra/term.hpp"
#include "dra/term_graph.hpp"

namespace {

using dra::Json;

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw dra::FormatError("cannot open file: " + path);
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw dra::FormatError("invalid JSON in " + path + ": " + e.what());
    }
    return j;
}

void emit(const Json& payload) {
    Json out;
    out["schema"] = 1;
    for (const auto& [k, v] : payload.items()) out[k] = v;
    std::cout << out.dump(2) << "\n";
}

int run_decide(bool leq, const std::string& lhs_text, const std::string& rhs_text) {
    dra::Term lhs = dra::parse_term(lhs_text);
    dra::Term rhs = dra::parse_term(rhs_text);
    dra::Verdict v = leq ? dra::decide_leq(lhs, rhs) : dra::decide_eq(lhs, rhs);
    if (!dra::certify(v, lhs, rhs)) {
        std::cerr << "internal error: verdict failed self-certification\n";
        return 2;
    }
    Json j = dra::verdict_to_json(v);
    j["lhs"] = dra::format_term(lhs);
    j["rhs"] = dra::format_term(rhs);
    emit(j);
    std::cerr << (leq ? "leq" : "eq") << " is " << (v.valid ? "valid" : "invalid") << "\n";
    return 0;
}

int run_eval(const std::string& model_path, const std::string& mode_name,
             const std::string& term_text) {
    dra::RelationalModel m = dra::model_from_json(read_json_file(model_path));
    dra::Mode mode = mode_name == "demonic" ? dra::Mode::Demonic : dra::Mode::Angelic;
    dra::Term t = dra::parse_term(term_text);
    dra::Relation r = dra::eval(t, m, mode);
    emit(Json{{"term", dra::format_term(t)},
              {"mode", mode_name},
              {"universe", r.universe()},
              {"result", dra::relation_to_json(r)}});
    std::cerr << "evaluated to " << r.pairs().size() << " pair(s)\n";
    return 0;
}

int run_scan(const std::string& catalog_name, int models, int universe, std::uint64_t seed,
             double density, int depth, int threads) {
    const dra::AxiomCatalog& catalog =
        catalog_name == "axd" ? dra::axd_catalog() : dra::axa_catalog();
    dra::ScanOptions opts;
    opts.models = models;
    opts.max_universe = universe;
    opts.seed = seed;
    opts.density = density;
    opts.substitution_depth = depth;
    opts.threads = threads;
    dra::ScanReport report = dra::soundness_scan(catalog, opts);
    for (const auto& v : report.violations)
        if (!dra::reverify_violation(catalog, v)) {
            std::cerr << "internal error: a reported violation did not re-verify\n";
            return 2;
        }
    Json j = dra::scan_report_to_json(report);
    j["catalog"] = catalog_name;
    emit(j);
    std::cerr << "scanned " << report.models_tested << " models, " << report.violations.size()
              << " violation(s)\n";
    return 0;
}

int run_axioms_list(const std::string& catalog_name) {
    const dra::AxiomCatalog& catalog =
        catalog_name == "axd" ? dra::axd_catalog() : dra::axa_catalog();
    Json axioms = Json::array();
    for (const auto& ax : catalog.equations) {
        axioms.push_back(Json{{"label", ax.label},
                              {"lhs", dra::format_term(ax.lhs)},
                              {"rhs", dra::format_term(ax.rhs)},
                              {"kind", ax.leq ? "leq" : "eq"}});
        std::cerr << "(" << ax.label << ") " << dra::format_term(ax.lhs)
                  << (ax.leq ? " <= " : " = ") << dra::format_term(ax.rhs) << "\n";
    }
    Json quasi = Json::array();
    for (const auto& q : catalog.quasi_equations) {
        Json prem = Json::array();
        for (const auto& [l, r] : q.premises)
            prem.push_back(dra::format_term(l) + " = " + dra::format_term(r));
        Json conc = Json::array();
        for (const auto& [l, r] : q.conclusions)
            conc.push_back(dra::format_term(l) + " = " + dra::format_term(r));
        quasi.push_back(Json{{"label", q.label}, {"premises", prem}, {"conclusions", conc}});
        std::cerr << "(" << q.label << ") quasi-identity\n";
    }
    emit(Json{{"catalog", catalog_name}, {"axioms", axioms}, {"quasi", quasi}});
    return 0;
}

int run_saturate(const std::string& elements_path, int rounds, std::uint64_t seed,
                 const std::string& dot_path) {
    std::vector<dra::Term> elements = dra::elements_from_json(read_json_file(elements_path));
    dra::FreeOrder order;
    dra::SaturationResult result = dra::run_saturation(elements, rounds, seed, order);
    if (!dot_path.empty()) {
        std::ofstream dot(dot_path);
        if (!dot) throw dra::FormatError("cannot write DOT file: " + dot_path);
        dot << dra::to_dot(result.graph);
    }
    Json j = dra::stage_to_json(result.graph);
    j["rounds"] = rounds;
    j["seed"] = seed;
    j["defects"] = dra::defects_to_json(result.defects);
    emit(j);
    std::cerr << "stage has " << result.graph.nodes().size() << " node(s); remaining defects: "
              << result.defects.comp.size() << " comp, " << result.defects.dom.size() << " dom, "
              << result.defects.ran.size() << " ran\n";
    return 0;
}

int run_enumerate(int size, const std::string& constraints_name, long long budget, int limit) {
    dra::EnumConstraints constraints;
    if (constraints_name == "axd")
        constraints = dra::EnumConstraints::axd();
    else if (constraints_name == "axd,cyclefree")
        constraints = dra::EnumConstraints::axd_cycle_free();
    else if (constraints_name == "restriction")
        constraints = dra::EnumConstraints::restriction();
    else
        throw dra::FormatError("unknown constraint set: " + constraints_name);
    dra::AlgebraEnumerator en(size, constraints, budget);
    Json algebras = Json::array();
    int count = 0;
    while (auto a = en.next()) {
        ++count;
        if (limit < 0 || count <= limit) algebras.push_back(dra::algebra_to_json(*a));
    }
    bool complete = en.status() == dra::AlgebraEnumerator::Status::Complete;
    emit(Json{{"size", size},
              {"constraints", constraints_name},
              {"count", count},
              {"complete", complete},
              {"algebras", std::move(algebras)}});
    std::cerr << "enumerated " << count << " algebra(s)"
              << (complete ? "" : " (search budget exhausted)") << "\n";
    return 0;
}

int run_wp(const std::string& algebra_path, int repair_rounds, bool unsafe) {
    dra::FiniteAlgebra a = dra::algebra_from_json(read_json_file(algebra_path));
    dra::PartialMapRepr r = dra::wagner_preston(a);
    bool cycle_free = dra::check_cycle_free(a).cycle_free();
    Json rounds = Json::array();
    int executed = 0;
    for (int i = 0; i < repair_rounds; ++i) {
        std::vector<dra::RangeDefect> defects = dra::range_defects(a, r);
        Json defect_list = Json::array();
        for (const auto& d : defects)
            defect_list.push_back(Json{{"element", d.element}, {"point", d.point}});
        rounds.push_back(Json{{"round", i}, {"defects", defect_list}});
        if (defects.empty()) break;
        r = dra::repair_round(a, r, unsafe);
        ++executed;
    }
    std::vector<dra::RangeDefect> final_defects = dra::range_defects(a, r);
    Json defect_list = Json::array();
    for (const auto& d : final_defects)
        defect_list.push_back(Json{{"element", d.element}, {"point", d.point}});
    dra::ReprReport report = dra::verify_partial_repr(a, r);
    Json failures = Json::array();
    for (const auto& f : report.failures)
        failures.push_back(Json{{"check", f.check}, {"detail", f.detail}});
    Json j{{"cycle_free", cycle_free},
           {"repair_rounds_executed", executed},
           {"rounds", std::move(rounds)},
           {"representation", dra::repr_to_json(r)},
           {"remaining_defects", std::move(defect_list)},
           {"verification_failures", std::move(failures)}};
    if (!cycle_free && executed > 0)
        j["caveat"] = "input is not cycle-free; repair rounds carry no representability guarantee";
    emit(j);
    std::cerr << "representation has " << r.point_count() << " point(s), " << final_defects.size()
              << " remaining defect(s)\n";
    return 0;
}

int run_certify(const std::string& verdict_path, const std::string& lhs_text,
                const std::string& rhs_text) {
    dra::Verdict v = dra::verdict_from_json(read_json_file(verdict_path));
    dra::Term lhs = dra::parse_term(lhs_text);
    dra::Term rhs = dra::parse_term(rhs_text);
    bool ok = dra::certify(v, lhs, rhs);
    emit(Json{{"certified", ok}});
    std::cerr << (ok ? "verdict certified\n" : "verdict did NOT certify\n");
    return ok ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"equational reasoning for binary relations with domain, range and composition"};
    app.require_subcommand(1);

    auto* decide = app.add_subcommand("decide", "decide validity of an inequality or equation");
    bool decide_leq_flag = false, decide_eq_flag = false;
    decide->add_flag("--leq", decide_leq_flag, "decide lhs <= rhs");
    decide->add_flag("--eq", decide_eq_flag, "decide lhs = rhs");
    std::string lhs, rhs;
    decide->add_option("lhs", lhs, "left-hand term")->required();
    decide->add_option("rhs", rhs, "right-hand term")->required();

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a term in a model file");
    std::string model_path, mode_name = "angelic", eval_term;
    eval_cmd->add_option("--model", model_path, "model JSON file")->required();
    eval_cmd->add_option("--mode", mode_name, "angelic or demonic")
        ->check(CLI::IsMember({"angelic", "demonic"}))
        ->capture_default_str();
    eval_cmd->add_option("term", eval_term, "term to evaluate")->required();

    auto* scan = app.add_subcommand("scan", "soundness-scan an axiom catalog over random models");
    std::string scan_catalog = "axa";
    int scan_models = 1000, scan_universe = 5, scan_depth = 3, threads = 1;
    std::uint64_t scan_seed = 0;
    double scan_density = 0.3;
    scan->add_option("--catalog", scan_catalog, "axa or axd")
        ->check(CLI::IsMember({"axa", "axd"}))
        ->capture_default_str();
    scan->add_option("--models", scan_models, "number of models")->capture_default_str();
    scan->add_option("--universe", scan_universe, "maximum universe size (models cycle 2..K)")
        ->capture_default_str();
    scan->add_option("--seed", scan_seed, "random seed")->capture_default_str();
    scan->add_option("--density", scan_density, "edge density")->capture_default_str();
    scan->add_option("--depth", scan_depth, "random substitution depth")->capture_default_str();
    scan->add_option("--threads", threads, "worker threads; reports merge deterministically")
        ->capture_default_str();

    auto* axioms = app.add_subcommand("axioms", "axiom catalog utilities");
    auto* axioms_list = axioms->add_subcommand("list", "print a catalog");
    std::string list_catalog = "axa";
    axioms_list->add_option("--catalog", list_catalog, "axa or axd")
        ->check(CLI::IsMember({"axa", "axd"}))
        ->capture_default_str();

    auto* saturate = app.add_subcommand("saturate", "run the labelled-graph construction");
    std::string elements_path, dot_path;
    int rounds = 0;
    std::uint64_t sat_seed = 0;
    saturate->add_option("--elements", elements_path, "JSON array of join-free terms")->required();
    saturate->add_option("--rounds", rounds, "scheduled steps to apply")->capture_default_str();
    saturate->add_option("--seed", sat_seed, "scheduler seed")->capture_default_str();
    saturate->add_option("--dot", dot_path, "also write the stage as DOT to this file");

    auto* enumerate = app.add_subcommand("enumerate", "enumerate finite algebras");
    int enum_size = 2, enum_limit = -1;
    long long enum_budget = 50000000;
    std::string enum_constraints = "axd";
    enumerate->add_option("--size", enum_size, "carrier size")->required();
    enumerate->add_option("--constraints", enum_constraints, "axd, axd,cyclefree or restriction")
        ->capture_default_str();
    enumerate->add_option("--budget", enum_budget, "search step budget")->capture_default_str();
    enumerate->add_option("--limit", enum_limit, "emit at most this many algebras (-1 = all)")
        ->capture_default_str();

    auto* wp = app.add_subcommand("wp", "Wagner-Preston representation with repair rounds");
    std::string algebra_path;
    int repair_rounds = 3;
    bool unsafe = false;
    wp->add_option("--algebra", algebra_path, "algebra JSON file")->required();
    wp->add_option("--repair-rounds", repair_rounds, "maximum repair rounds")->capture_default_str();
    wp->add_flag("--unsafe", unsafe, "run repair rounds on non-cycle-free input");

    auto* certify_cmd = app.add_subcommand("certify", "re-check a stored verdict");
    std::string verdict_path, cert_lhs, cert_rhs;
    certify_cmd->add_option("--verdict", verdict_path, "verdict JSON file")->required();
    certify_cmd->add_option("lhs", cert_lhs, "left-hand term")->required();
    certify_cmd->add_option("rhs", cert_rhs, "right-hand term")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*decide) {
            if (decide_leq_flag == decide_eq_flag) {
                std::cerr << "decide: exactly one of --leq / --eq is required\n";
                return 1;
            }
            return run_decide(decide_leq_flag, lhs, rhs);
        }
        if (*eval_cmd) return run_eval(model_path, mode_name, eval_term);
        if (*scan)
            return run_scan(scan_catalog, scan_models, scan_universe, scan_seed, scan_density,
                            scan_depth, threads);
        if (*axioms) {
            if (*axioms_list) return run_axioms_list(list_catalog);
            std::cerr << "axioms: missing subcommand (try 'list')\n";
            return 1;
        }
        if (*saturate) return run_saturate(elements_path, rounds, sat_seed, dot_path);
        if (*enumerate) return run_enumerate(enum_size, enum_constraints, enum_budget, enum_limit);
        if (*wp) return run_wp(algebra_path, repair_rounds, unsafe);
        if (*certify_cmd) return run_certify(verdict_path, cert_lhs, cert_rhs);
    } catch (const dra::ParseError& e) {
        std::cerr << "parse error at offset " << e.offset() << ": " << e.what() << "\n";
        return 1;
    } catch (const dra::FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
