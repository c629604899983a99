// ctxlab: an exact-arithmetic workbench for the resource theory of
// contextuality. Builds and validates empirical models over measurement
// scenarios, applies the free operations, computes contextual fractions by
// exact LP, evaluates/normalizes terms of the free-operation language,
// expands the measurement-protocols comonad and checks/searches simulations.
//
// Exit codes: 0 success/true, 1 domain false (contextual / not isomorphic /
// NotFound), 2 usage or typing error, 3 enumeration guard exceeded.

#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "ctxlab/errors.hpp"
#include "ctxlab/fraction.hpp"
#include "ctxlab/generators.hpp"
#include "ctxlab/json_io.hpp"
#include "ctxlab/props.hpp"
#include "ctxlab/protocols.hpp"
#include "ctxlab/simulate.hpp"
#include "ctxlab/terms.hpp"

using namespace ctxlab;

namespace {

int g_exit = 0;

void emit(const Json& j) { std::cout << j.dump(2) << "\n"; }

EmpiricalModel load_model(const std::string& path) {
    return model_from_json(load_json_file(path));
}

OutcomeFamily family_from_json(const Json& j, const Scenario& s) {
    OutcomeFamily h;
    for (const auto& [id, table] : j.at("outcome_maps").items()) {
        Measurement m = Measurement::parse(id);
        OutcomeMap om;
        for (const auto& [from, to] : table.items()) om.map.emplace(from, to.get<std::string>());
        if (j.contains("codomains") && j.at("codomains").contains(id)) {
            om.codomain = j.at("codomains").at(id).get<std::vector<std::string>>();
        } else {
            for (const auto& o : s.outcomes(m)) {
                const std::string& img = om.map.at(o);
                if (std::find(om.codomain.begin(), om.codomain.end(), img) == om.codomain.end())
                    om.codomain.push_back(img);
            }
        }
        h.emplace(m, std::move(om));
    }
    return h;
}

VertexMap vertex_map_from_json(const Json& j) {
    VertexMap vm;
    VertexSet verts;
    for (const auto& [from, to] : j.at("vertex_map").items()) {
        Measurement neu = Measurement::parse(from);
        vm.map.emplace(neu, Measurement::parse(to.get<std::string>()));
        verts.push_back(neu);
    }
    verts = make_vertex_set(std::move(verts));
    std::vector<VertexSet> facets;
    if (j.contains("facets")) {
        for (const auto& facet : j.at("facets")) {
            std::vector<Measurement> f;
            for (const auto& id : facet) f.push_back(Measurement::parse(id.get<std::string>()));
            facets.push_back(make_vertex_set(std::move(f)));
        }
        vm.domain = SimplicialComplex::from_facets(std::move(facets), verts);
    }
    return vm;
}

Measurement::Branches branches_from_text(const std::string& text) {
    // "0:y1,1:y2"
    Measurement::Branches out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t colon = text.find(':', pos);
        if (colon == std::string::npos) throw DomainError("bad branch list '" + text + "'");
        std::size_t comma = text.find(',', colon);
        std::string label = text.substr(pos, colon - pos);
        std::string id = text.substr(colon + 1, comma == std::string::npos ? comma
                                                                           : comma - colon - 1);
        out.emplace_back(label, Measurement::parse(id));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

Environment bindings_from_file(const std::string& path) {
    Environment env;
    if (path.empty()) return env;
    Json j = load_json_file(path);
    for (const auto& [name, val] : j.items()) {
        if (val.is_string()) env.emplace(name, load_model(val.get<std::string>()));
        else env.emplace(name, model_from_json(val));
    }
    return env;
}

TypingContext context_of(const Environment& env) {
    TypingContext ctx;
    for (const auto& [name, model] : env) ctx.emplace_back(name, model.scenario());
    return ctx;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact workbench for the resource theory of contextuality"};
    app.require_subcommand(1);
    bool as_json = false;
    app.add_flag("--json", as_json, "machine-readable output");

    // -------- validate --------
    auto* validate = app.add_subcommand("validate", "validate a scenario or model file");
    std::string v_scenario, v_model;
    validate->add_option("--scenario", v_scenario, "scenario JSON file");
    validate->add_option("--model", v_model, "model JSON file");
    validate->callback([&] {
        ValidationReport report;
        try {
            if (!v_scenario.empty()) {
                Scenario s = scenario_from_json(load_json_file(v_scenario));
                report = validate_scenario(s);
            } else if (!v_model.empty()) {
                EmpiricalModel e = load_model(v_model);
                report = validate_model(e);
            } else {
                throw CLI::ValidationError("validate", "need --scenario or --model");
            }
        } catch (const DomainError& e) {
            // loader-level rejections are reported, not crashes
            report.problems.push_back(e.what());
        }
        if (as_json) {
            Json j;
            j["ok"] = report.ok();
            j["problems"] = report.problems;
            emit(j);
        } else {
            std::cout << (report.ok() ? "valid" : report.to_string()) << "\n";
        }
        if (!report.ok()) g_exit = 1;
    });

    // -------- cf --------
    auto* cfc = app.add_subcommand("cf", "contextual fraction by exact LP");
    std::string cf_model, cf_decompose, cf_cert;
    cfc->add_option("--model", cf_model, "model JSON file")->required();
    cfc->add_option("--decompose", cf_decompose,
                    "write e^NC / e' decomposition JSON to PREFIX.nc.json / PREFIX.c.json");
    cfc->add_option("--certificate", cf_cert, "write the dual Bell functional to FILE");
    cfc->callback([&] {
        EmpiricalModel e = load_model(cf_model);
        NcfResult r = ncf(e);
        if (as_json) {
            Json j;
            j["cf"] = rational_string(1 - r.optimum);
            j["ncf"] = rational_string(r.optimum);
            emit(j);
        } else {
            std::cout << "CF = " << rational_string(1 - r.optimum) << "\n"
                      << "NCF = " << rational_string(r.optimum) << "\n";
        }
        if (!cf_decompose.empty()) {
            if (r.noncontextual_part)
                std::ofstream(cf_decompose + ".nc.json")
                    << model_to_json(*r.noncontextual_part).dump(2) << "\n";
            if (r.contextual_part)
                std::ofstream(cf_decompose + ".c.json")
                    << model_to_json(*r.contextual_part).dump(2) << "\n";
        }
        if (!cf_cert.empty())
            std::ofstream(cf_cert) << certificate_to_json(r.certificate).dump(2) << "\n";
    });

    // -------- op --------
    auto* op = app.add_subcommand("op", "apply a free operation to model files");
    std::string op_name, op_model, op_model2, op_lambda = "1/2", op_map, op_x, op_branches,
                op_morphism, op_face;
    op->add_option("name", op_name,
                   "pull|coarse|mix|choice|tensor|cond|pushforward|marginal|iso")
        ->required();
    op->add_option("--model", op_model, "first model JSON file")->required();
    op->add_option("--model2", op_model2, "second model JSON file");
    op->add_option("--lambda", op_lambda, "mixing weight p/q");
    op->add_option("--map", op_map, "vertex/outcome map JSON file");
    op->add_option("--x", op_x, "conditioned measurement id");
    op->add_option("--branches", op_branches, "branch family o:y,o':y'");
    op->add_option("--morphism", op_morphism, "morphism JSON file");
    op->add_option("--face", op_face, "comma-separated measurement ids");
    op->callback([&] {
        EmpiricalModel e = load_model(op_model);
        if (op_name == "mix") {
            emit(model_to_json(mix(e, load_model(op_model2), parse_rational(op_lambda))));
        } else if (op_name == "choice") {
            emit(model_to_json(choice(e, load_model(op_model2))));
        } else if (op_name == "tensor") {
            emit(model_to_json(tensor(e, load_model(op_model2))));
        } else if (op_name == "cond") {
            emit(model_to_json(
                conditional(e, Measurement::parse(op_x), branches_from_text(op_branches))));
        } else if (op_name == "pull") {
            Json mj = load_json_file(op_map);
            VertexMap vm = vertex_map_from_json(mj);
            if (!mj.contains("facets")) {
                // maximal domain: preimages of facets
                VertexSet verts;
                for (const auto& [neu, old] : vm.map) verts.push_back(neu);
                verts = make_vertex_set(std::move(verts));
                std::vector<VertexSet> pre;
                for (const auto& facet : e.scenario().complex().facets()) {
                    VertexSet p;
                    for (const auto& [neu, old] : vm.map)
                        if (vertex_contains(facet, old)) p.push_back(neu);
                    pre.push_back(make_vertex_set(std::move(p)));
                }
                vm.domain = SimplicialComplex::from_facets(std::move(pre), verts);
            }
            emit(model_to_json(pullback(vm, e)));
        } else if (op_name == "coarse") {
            Json mj = load_json_file(op_map);
            emit(model_to_json(coarse_grain(e, family_from_json(mj, e.scenario()))));
        } else if (op_name == "pushforward") {
            DeterministicMorphism m = morphism_from_json(load_json_file(op_morphism));
            emit(model_to_json(pushforward(m, e)));
        } else if (op_name == "marginal") {
            std::vector<Measurement> f;
            std::size_t pos = 0;
            while (pos <= op_face.size() && !op_face.empty()) {
                std::size_t comma = op_face.find(',', pos);
                f.push_back(Measurement::parse(
                    op_face.substr(pos, comma == std::string::npos ? comma : comma - pos)));
                if (comma == std::string::npos) break;
                pos = comma + 1;
            }
            Distribution d = e.marginal(make_vertex_set(std::move(f)));
            Json j = Json::object();
            for (const auto& [a, w] : d.weights()) j[a.key()] = rational_string(w);
            emit(j);
        } else if (op_name == "iso") {
            auto witness = find_isomorphism(e, load_model(op_model2));
            if (witness) {
                Json j;
                j["isomorphic"] = true;
                Json f = Json::object();
                for (const auto& [a, b] : witness->f) f[a.id()] = b.id();
                j["vertex_bijection"] = f;
                Json h = Json::object();
                for (const auto& [x, om] : witness->h) {
                    Json hm = Json::object();
                    for (const auto& [p, o] : om.map) hm[p] = o;
                    h[x.id()] = hm;
                }
                j["outcome_bijections"] = h;
                emit(j);
            } else {
                emit(Json{{"isomorphic", false}});
                g_exit = 1;
            }
        } else {
            throw CLI::ValidationError("op", "unknown operation '" + op_name + "'");
        }
    });

    // -------- term --------
    auto* term = app.add_subcommand("term", "typecheck/evaluate/normalize terms");
    std::string t_mode, t_src, t_file, t_bindings;
    term->add_option("mode", t_mode, "check|eval|normalize")->required();
    term->add_option("--term", t_src, "term text");
    term->add_option("--term-file", t_file, "file holding the term text");
    term->add_option("--bindings", t_bindings, "JSON mapping variables to model files");
    term->callback([&] {
        std::string src = !t_file.empty() ? read_text_file(t_file) : t_src;
        Term t = parse_term(src);
        Environment env = bindings_from_file(t_bindings);
        TypingContext ctx = context_of(env);
        if (t_mode == "check") {
            Scenario s = typecheck(ctx, t);
            emit(scenario_to_json(s));
        } else if (t_mode == "eval") {
            emit(model_to_json(eval_term(t, env)));
        } else if (t_mode == "normalize") {
            Term n = normalize(ctx, t);
            if (as_json) {
                Json j;
                j["normalized"] = render_term(n);
                j["normal_grammar"] = matches_normal_grammar(n);
                emit(j);
            } else {
                std::cout << render_term(n) << "\n";
            }
        } else {
            throw CLI::ValidationError("term", "unknown mode '" + t_mode + "'");
        }
    });

    // -------- mp --------
    auto* mp = app.add_subcommand("mp", "measurement-protocols comonad");
    std::string mp_mode, mp_scenario_file, mp_model_file;
    int mp_depth = 2;
    mp->add_option("mode", mp_mode, "expand|protocols")->required();
    mp->add_option("--depth", mp_depth, "run-length bound (default 2)");
    mp->add_option("--scenario", mp_scenario_file, "scenario JSON file");
    mp->add_option("--model", mp_model_file, "model JSON file");
    mp->callback([&] {
        Scenario base = !mp_model_file.empty()
                            ? load_model(mp_model_file).scenario()
                            : scenario_from_json(load_json_file(mp_scenario_file));
        MpSpace space = MpSpace::build(base, mp_depth);
        if (mp_mode == "protocols") {
            Json j = Json::array();
            for (const auto& p : space.protocols()) j.push_back(p.serialize());
            emit(j);
        } else if (mp_mode == "expand") {
            if (!mp_model_file.empty()) {
                emit(model_to_json(mp_model(load_model(mp_model_file), space)));
            } else {
                emit(scenario_to_json(space.materialize()));
            }
        } else {
            throw CLI::ValidationError("mp", "unknown mode '" + mp_mode + "'");
        }
    });

    // -------- sim --------
    auto* sim = app.add_subcommand("sim", "simulations between models");
    std::string s_mode, s_sim, s_source, s_target, s_out;
    int s_depth = 2, s_budget = 4;
    sim->add_option("mode", s_mode, "check|find|refute|extract-term")->required();
    sim->add_option("--sim", s_sim, "simulation JSON file");
    sim->add_option("--source", s_source, "source model JSON file");
    sim->add_option("--target", s_target, "target model JSON file");
    sim->add_option("--depth", s_depth, "protocol depth bound");
    sim->add_option("--ancilla-budget", s_budget, "coin-ancilla outcome budget");
    sim->add_option("--out", s_out, "write the found simulation here");
    sim->callback([&] {
        if (s_mode == "check") {
            Simulation s = simulation_from_json(load_json_file(s_sim));
            SimulationCheck c = check_simulation(s);
            if (as_json) emit(Json{{"ok", c.ok}, {"report", c.report}});
            else std::cout << (c.ok ? "verified" : c.report) << "\n";
            if (!c.ok) g_exit = 1;
        } else if (s_mode == "find") {
            auto found =
                find_simulation(load_model(s_source), load_model(s_target), s_depth, s_budget);
            if (found) {
                Json j = simulation_to_json(*found);
                if (!s_out.empty()) std::ofstream(s_out) << j.dump(2) << "\n";
                else emit(j);
            } else {
                std::cout << "NotFound: no simulation within depth " << s_depth
                          << " and ancilla budget " << s_budget
                          << " (bound-relative, not a nonexistence proof)\n";
                g_exit = 1;
            }
        } else if (s_mode == "refute") {
            bool refuted = refute_by_fraction(load_model(s_source), load_model(s_target));
            if (as_json) emit(Json{{"refuted", refuted}});
            else
                std::cout << (refuted ? "refuted: NCF(source) > NCF(target)"
                                      : "not refuted by the fraction")
                          << "\n";
            if (!refuted) g_exit = 1;
        } else if (s_mode == "extract-term") {
            Simulation s = simulation_from_json(load_json_file(s_sim));
            Term t = simulation_to_term(s);
            std::cout << render_term(t) << "\n";
        } else {
            throw CLI::ValidationError("sim", "unknown mode '" + s_mode + "'");
        }
    });

    // -------- gen --------
    auto* gen = app.add_subcommand("gen", "example model generators");
    std::string g_name, g_assign, g_scenario;
    int g_k = 2;
    std::string g_lambda = "1/2";
    gen->add_option("name", g_name, "pr|deterministic|coin|mix-demo")->required();
    gen->add_option("--assign", g_assign, "global assignment x1=0,... (deterministic)");
    gen->add_option("--scenario", g_scenario, "scenario file (deterministic)");
    gen->add_option("--k", g_k, "coin outcomes");
    gen->add_option("--lambda", g_lambda, "mix-demo weight of the PR box");
    gen->callback([&] {
        if (g_name == "pr") {
            emit(model_to_json(pr_box()));
        } else if (g_name == "deterministic") {
            Scenario s = g_scenario.empty() ? pr_scenario()
                                            : scenario_from_json(load_json_file(g_scenario));
            Assignment a = assignment_from_key(s, s.measurements(), g_assign);
            emit(model_to_json(deterministic_model(s, a)));
        } else if (g_name == "coin") {
            emit(model_to_json(uniform_coin_model(g_k)));
        } else if (g_name == "mix-demo") {
            // PR mixed with the all-correlated noncontextual box
            Scenario s = pr_scenario();
            EmpiricalModel d0 = deterministic_model(
                s, assignment_from_key(s, s.measurements(), "x1=0,x2=0,y1=0,y2=0"));
            EmpiricalModel d1 = deterministic_model(
                s, assignment_from_key(s, s.measurements(), "x1=1,x2=1,y1=1,y2=1"));
            EmpiricalModel nc = mix(d0, d1, Rational(1, 2));
            emit(model_to_json(mix(pr_box(), nc, parse_rational(g_lambda))));
        } else {
            throw CLI::ValidationError("gen", "unknown generator '" + g_name + "'");
        }
    });

    // -------- props --------
    auto* props = app.add_subcommand("props", "randomized property suites");
    std::string p_suite;
    std::uint64_t p_seed = 1;
    int p_cases = 20;
    props->add_option("suite", p_suite, "prop1-monotonicity|eq-soundness|normal-form|prop2|"
                                        "comonad-laws|thm2-roundtrip|nocloning-easy|"
                                        "mp-nosignalling")
        ->required();
    props->add_option("--seed", p_seed, "64-bit seed");
    props->add_option("--cases", p_cases, "case count (per rule for eq-soundness)");
    props->callback([&] {
        SuiteReport r = run_suite(p_suite, p_seed, p_cases);
        if (as_json) {
            Json j;
            j["suite"] = r.suite;
            j["seed"] = r.seed;
            j["checks"] = r.checks;
            j["failures"] = r.failures;
            j["counterexamples"] = r.counterexamples;
            emit(j);
        } else {
            std::cout << r.suite << ": " << (r.checks - r.failures) << "/" << r.checks
                      << " checks passed (seed " << r.seed << ")\n";
            for (const auto& c : r.counterexamples) std::cout << "counterexample: " << c << "\n";
        }
        if (!r.ok()) g_exit = 1;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const GuardExceeded& e) {
        std::cerr << "guard exceeded: " << e.what() << "\n";
        return 3;
    } catch (const ParseError& e) {
        std::cerr << "syntax error: " << e.what() << "\n";
        return 2;
    } catch (const IllTyped& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
    return g_exit;
}
