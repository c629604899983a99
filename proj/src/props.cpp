#include "ctxlab/props.hpp"

#include <algorithm>
#include <functional>

#include "ctxlab/errors.hpp"
#include "ctxlab/fraction.hpp"
#include "ctxlab/generators.hpp"
#include "ctxlab/json_io.hpp"
#include "ctxlab/protocols.hpp"
#include "ctxlab/simulate.hpp"
#include "ctxlab/terms.hpp"

namespace ctxlab {

namespace {

void record(SuiteReport& r, bool pass, const std::function<std::string()>& witness) {
    r.checks++;
    if (!pass) {
        r.failures++;
        if (r.counterexamples.size() < 8) r.counterexamples.push_back(witness());
    }
}

std::string model_witness(const std::string& law, const EmpiricalModel& e) {
    Json j;
    j["law"] = law;
    j["model"] = model_to_json(e);
    return j.dump();
}

// ---- prop1 ------------------------------------------------------------

SuiteReport prop1(std::uint64_t seed, int cases) {
    SuiteReport r{"prop1-monotonicity", seed};
    std::vector<EmpiricalModel> corpus = corpus_models(seed, cases);
    Rng rng = Rng(seed).split();
    for (const auto& e : corpus) {
        Rational cfe = cf(e);
        const Scenario& s = e.scenario();

        if (!s.measurements().empty()) {
            PullbackData f = random_pullback_data(rng, s);
            VertexMap vm;
            vm.map = std::map<Measurement, Measurement>(f.vmap.begin(), f.vmap.end());
            VertexSet vs;
            for (const auto& [neu, _] : f.vmap) vs.push_back(neu);
            vm.domain = SimplicialComplex::from_facets(f.facets.value(),
                                                       make_vertex_set(std::move(vs)));
            record(r, cf(pullback(vm, e)) <= cfe, [&] { return model_witness("CF(f*e)<=CF(e)", e); });

            CoarseData hd = random_coarse_data(rng, s, rng.chance(1, 2));
            OutcomeFamily h;
            for (const auto& [m, entry] : hd) {
                OutcomeMap om;
                om.codomain = entry.codomain.value();
                for (const auto& [a, b] : entry.pairs) om.map.emplace(a, b);
                h.emplace(m, std::move(om));
            }
            record(r, cf(coarse_grain(e, h)) <= cfe,
                   [&] { return model_witness("CF(e/h)<=CF(e)", e); });
        }

        EmpiricalModel e2 = random_model(rng, s);
        Rational cfe2 = cf(e2);
        Rational lambda = random_probability(rng);
        record(r, cf(mix(e, e2, lambda)) <= lambda * cfe + (1 - lambda) * cfe2,
               [&] { return model_witness("mix convexity", e); });

        EmpiricalModel other = random_model(rng, random_scenario(rng, 3, 2));
        Rational cfo = cf(other);
        record(r, cf(choice(e, other)) == std::max(cfe, cfo),
               [&] { return model_witness("CF(e&e')=max", e); });
        record(r, ncf(tensor(e, other)).optimum == (1 - cfe) * (1 - cfo),
               [&] { return model_witness("NCF(e(x)e')=NCF NCF", e); });

        if (auto site = random_cond_site(rng, s)) {
            record(r, cf(conditional(e, site->x, site->branches)) == cfe,
                   [&] { return model_witness("CF(e[x?y])=CF(e)", e); });
        }
    }
    return r;
}

// ---- eq-soundness -------------------------------------------------------

SuiteReport eq_soundness(std::uint64_t seed, int cases_per_rule) {
    SuiteReport r{"eq-soundness", seed};
    const auto& rules = equational_rules();
    for (const auto& rule : rules) {
        Rng rng(seed + static_cast<std::uint64_t>(rule.number) * 0x9e37ULL);
        for (int i = 0; i < cases_per_rule; ++i) {
            RuleInstance inst = random_rule_instance(rng, rule.number);
            auto rhs = rule.apply(inst.ctx, inst.lhs);
            bool pass = rhs.has_value();
            if (pass) {
                EmpiricalModel left = eval_term(inst.lhs, inst.env);
                EmpiricalModel right = eval_term(*rhs, inst.env);
                pass = left == right || is_isomorphic(left, right);
            }
            record(r, pass, [&] {
                Json j;
                j["rule"] = rule.number;
                j["name"] = rule.name;
                j["lhs"] = render_term(inst.lhs);
                return j.dump();
            });
        }
    }
    return r;
}

// ---- normal form ----------------------------------------------------------

SuiteReport normal_form(std::uint64_t seed, int cases) {
    SuiteReport r{"normal-form", seed};
    Rng rng(seed);
    for (int i = 0; i < cases; ++i) {
        RandomTerm t = random_term(rng, 12);
        Term n = normalize(t.ctx, t.term);
        bool grammar = matches_normal_grammar(n);
        EmpiricalModel before = eval_term(t.term, t.env);
        EmpiricalModel after = eval_term(n, t.env);
        bool preserved = before == after || is_isomorphic(before, after);
        record(r, grammar && preserved, [&] {
            Json j;
            j["term"] = render_term(t.term);
            j["normalized"] = render_term(n);
            j["grammar"] = grammar;
            return j.dump();
        });
    }
    return r;
}

// ---- Prop 2 (both directions) ----------------------------------------------

SuiteReport prop2(std::uint64_t seed, int cases) {
    SuiteReport r{"prop2", seed};
    Rng rng(seed);
    for (int i = 0; i < cases; ++i) {
        // closed terms evaluate to noncontextual models
        Term t = random_closed_term(rng, 8);
        EmpiricalModel e = eval_term(t, {});
        record(r, is_noncontextual(e), [&] {
            Json j;
            j["closed_term"] = render_term(t);
            return j.dump();
        });

        // noncontextual models round-trip through their witness terms
        EmpiricalModel nc = random_noncontextual(rng, random_scenario(rng, 3, 2));
        Term w = noncontextual_to_term(nc);
        EmpiricalModel back = eval_term(w, {});
        record(r, back == nc || is_isomorphic(back, nc),
               [&] { return model_witness("prop2 round trip", nc); });
    }
    return r;
}

// ---- comonad laws ----------------------------------------------------------

std::vector<Scenario> small_scenarios(int max_vertices) {
    std::vector<Scenario> out;
    std::vector<Measurement> pool;
    for (const char* id : {"a", "b", "c"}) pool.push_back(Measurement::base(id));
    for (int n = 1; n <= max_vertices; ++n) {
        VertexSet verts(pool.begin(), pool.begin() + n);
        // all nonempty subsets
        std::vector<VertexSet> subsets;
        for (std::size_t mask = 1; mask < (std::size_t(1) << n); ++mask) {
            VertexSet sub;
            for (int i = 0; i < n; ++i)
                if (mask & (std::size_t(1) << i)) sub.push_back(verts[i]);
            subsets.push_back(sub);
        }
        // all covering antichains of subsets
        std::size_t m = subsets.size();
        for (std::size_t mask = 1; mask < (std::size_t(1) << m); ++mask) {
            std::vector<VertexSet> facets;
            for (std::size_t i = 0; i < m; ++i)
                if (mask & (std::size_t(1) << i)) facets.push_back(subsets[i]);
            bool antichain = true;
            for (const auto& f : facets)
                for (const auto& g : facets)
                    if (!(f == g) && vertex_subset(f, g)) antichain = false;
            if (!antichain) continue;
            std::set<Measurement> covered;
            for (const auto& f : facets) covered.insert(f.begin(), f.end());
            if (covered.size() != static_cast<std::size_t>(n)) continue;
            std::vector<std::pair<Measurement, std::vector<std::string>>> outcomes;
            for (const auto& v : verts) outcomes.emplace_back(v, std::vector<std::string>{"0", "1"});
            out.push_back(Scenario::make(std::move(outcomes),
                                         SimplicialComplex::from_facets(std::move(facets))));
        }
    }
    return out;
}

std::optional<MpMorphism> random_mp_morphism(Rng& rng, const MpSpace& space,
                                             const Scenario& target) {
    for (int attempt = 0; attempt < 32; ++attempt) {
        MpMorphism m;
        m.source = space;
        m.target = target;
        for (const auto& y : target.measurements()) {
            const Protocol& p = space.protocols()[rng.below(space.protocols().size())];
            std::map<std::string, std::string> hy;
            const auto& outs = target.outcomes(y);
            for (const auto& run : p.maximal_runs())
                hy.emplace(run.serialize(), outs[rng.below(outs.size())]);
            m.pi.insert_or_assign(y, p);
            m.h.insert_or_assign(y, std::move(hy));
        }
        try {
            m.validate();
            return m;
        } catch (const DomainError&) {
        }
    }
    return std::nullopt;
}

SuiteReport comonad_laws(std::uint64_t seed, int cases) {
    SuiteReport r{"comonad-laws", seed};
    Rng rng(seed);
    for (const Scenario& x : small_scenarios(3)) {
        int depth = std::min<int>(2, x.measurements().size());
        MpSpace space = MpSpace::build(x, depth);

        // epsilon-dagger = identity
        MpToMpMorphism ext = mp_extend(mp_counit(space), space, space);
        bool identity = true;
        for (const Protocol& q : space.protocols()) {
            if (!(ext.pi.at(q.serialize()) == q)) identity = false;
            for (const auto& run : q.maximal_runs())
                if (ext.h.at(q.serialize()).at(run.serialize()) != run.serialize())
                    identity = false;
        }
        record(r, identity, [&] { return "epsilon-dagger != id on " + scenario_to_json(x).dump(); });

        for (int i = 0; i < cases; ++i) {
            Scenario y = random_scenario(rng, 2, 2);
            auto m = random_mp_morphism(rng, space, y);
            if (!m) continue;

            // counit absorption: eps_Y after m-dagger equals m
            int ydepth = static_cast<int>(y.measurements().size());
            MpSpace yspace = MpSpace::build(y, ydepth);
            int e1 = std::max(depth, extension_depth(*m, ydepth));
            MpSpace xext = MpSpace::build(x, e1);
            MpToMpMorphism mdag = mp_extend(*m, xext, yspace);
            MpMorphism back = compose_counit(mdag, y);
            record(r, back.equal_on(*m),
                   [&] { return "eps after dagger mismatch on " + scenario_to_json(x).dump(); });

            // dagger of a composite = composite of daggers
            Scenario x2 = random_scenario(rng, 2, 2);
            MpSpace yspace2 = MpSpace::build(y, std::min<int>(2, y.measurements().size()));
            auto m2 = random_mp_morphism(rng, yspace2, x2);
            if (!m2) continue;
            MpSpace x2space = MpSpace::build(x2, static_cast<int>(x2.measurements().size()));
            int em = std::max(yspace2.depth(),
                              extension_depth(*m2, x2space.depth()));
            MpSpace yext = MpSpace::build(y, em);
            MpToMpMorphism m2dag = mp_extend(*m2, yext, x2space);

            int en1 = std::max(depth, extension_depth(*m, yspace2.depth()));
            MpSpace xext1 = MpSpace::build(x, en1);
            MpToMpMorphism ndag1 = mp_extend(*m, xext1, yspace2);
            MpMorphism mn = compose(*m2, ndag1);

            int big = std::max({depth, extension_depth(mn, x2space.depth()),
                                extension_depth(*m, em)});
            MpSpace xbig = MpSpace::build(x, big);
            MpToMpMorphism lhs = mp_extend(mn, xbig, x2space);
            MpToMpMorphism ndag2 = mp_extend(*m, xbig, yext);
            MpToMpMorphism rhs = compose_mp(m2dag, ndag2);
            record(r, lhs.equal_on(rhs),
                   [&] { return "third co-Kleisli law mismatch on " + scenario_to_json(x).dump(); });
        }
    }
    return r;
}

// ---- Theorem 2 round trip ---------------------------------------------------

SuiteReport thm2(std::uint64_t seed, int cases) {
    SuiteReport r{"thm2-roundtrip", seed};
    Rng rng(seed);
    for (int i = 0; i < cases; ++i) {
        RandomTerm t = random_single_var_term(rng, 8);
        const std::string& var = t.ctx.front().first;
        const EmpiricalModel& d = t.env.at(var);
        Simulation sim = term_to_simulation(t.ctx, t.term, d);
        SimulationCheck check = check_simulation(sim);
        EmpiricalModel expect = eval_term(t.term, t.env);
        bool pass = check.ok && (sim.target == expect || is_isomorphic(sim.target, expect));
        // Theorem 3 cross-check on every verified simulation
        if (pass) pass = ncf(sim.source).optimum <= ncf(sim.target).optimum;
        record(r, pass, [&] {
            Json j;
            j["term"] = render_term(t.term);
            j["check"] = check.report;
            return j.dump();
        });
    }
    return r;
}

// ---- no-cloning easy direction ----------------------------------------------

SuiteReport nocloning(std::uint64_t seed, int cases) {
    SuiteReport r{"nocloning-easy", seed};
    Rng rng(seed);
    for (int i = 0; i < cases; ++i) {
        EmpiricalModel e = random_noncontextual(rng, random_scenario(rng, 3, 2));
        EmpiricalModel ee = tensor(e, e);
        Simulation sim;
        sim.source = e;
        sim.ancilla = e;  // the free resource
        sim.target = ee;
        sim.depth = 1;
        EmpiricalModel dc = sim.base();
        for (const auto& x : ee.scenario().measurements()) {
            // target Left(x) reads the source copy, Right(x) the ancilla copy
            Protocol p = counit_protocol(dc.scenario(), x);
            std::map<std::string, std::string> h;
            for (const auto& run : p.maximal_runs())
                h.emplace(run.serialize(), run.steps()[0].second);
            sim.protocol_for.emplace(x, std::move(p));
            sim.outcome_for.emplace(x, std::move(h));
        }
        SimulationCheck check = check_simulation(sim);
        bool pass = check.ok && ncf(sim.source).optimum <= ncf(sim.target).optimum;
        record(r, pass, [&] { return model_witness("nocloning: " + check.report, e); });
    }
    return r;
}

// ---- MP no-signalling --------------------------------------------------------

SuiteReport mp_nosignalling(std::uint64_t seed, int cases) {
    SuiteReport r{"mp-nosignalling", seed};
    for (const auto& e : corpus_models(seed, cases)) {
        int depth = e.scenario().measurements().size() <= 3 ? 2 : 2;
        bool pass = false;
        std::string why;
        try {
            MpSpace space = MpSpace::build(e.scenario(), depth);
            auto report = validate_model(mp_model(e, space));
            pass = report.ok();
            why = report.to_string();
        } catch (const GuardExceeded& g) {
            // fall back to depth 1 rather than abort the whole suite
            MpSpace space = MpSpace::build(e.scenario(), 1);
            auto report = validate_model(mp_model(e, space));
            pass = report.ok();
            why = report.to_string();
        }
        record(r, pass, [&] { return model_witness("mp no-signalling: " + why, e); });
    }
    return r;
}

}  // namespace

std::vector<EmpiricalModel> corpus_models(std::uint64_t seed, int cases) {
    std::vector<EmpiricalModel> out;
    out.push_back(pr_box());
    Rng rng(seed);
    for (int i = 0; i < cases; ++i) {
        Scenario s = rng.chance(1, 3) ? pr_scenario() : random_scenario(rng, 4, 2);
        out.push_back(random_model(rng, s));
    }
    return out;
}

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names = {
        "prop1-monotonicity", "eq-soundness", "normal-form",     "prop2",
        "comonad-laws",       "thm2-roundtrip", "nocloning-easy", "mp-nosignalling"};
    return names;
}

SuiteReport run_suite(const std::string& name, std::uint64_t seed, int cases) {
    if (name == "prop1-monotonicity") return prop1(seed, cases);
    if (name == "eq-soundness") return eq_soundness(seed, cases);
    if (name == "normal-form") return normal_form(seed, cases);
    if (name == "prop2") return prop2(seed, cases);
    if (name == "comonad-laws") return comonad_laws(seed, cases);
    if (name == "thm2-roundtrip") return thm2(seed, cases);
    if (name == "nocloning-easy") return nocloning(seed, cases);
    if (name == "mp-nosignalling") return mp_nosignalling(seed, cases);
    throw DomainError("unknown suite '" + name + "'");
}

}  // namespace ctxlab
