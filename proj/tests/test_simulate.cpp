#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ctxlab/fraction.hpp"
#include "ctxlab/simulate.hpp"
#include "test_helpers.hpp"

using namespace ctxlab;
using namespace ctxlab::testing;

namespace {

// counit-style self-simulation e ⇝ e with ancilla z
Simulation self_simulation(const EmpiricalModel& e) {
    Simulation sim;
    sim.source = e;
    sim.ancilla = zero_model();
    sim.target = e;
    sim.depth = 1;
    EmpiricalModel dc = sim.base();
    for (const auto& x : e.scenario().measurements()) {
        Measurement lx = Measurement::left(x);
        Protocol p = counit_protocol(dc.scenario(), lx);
        std::map<std::string, std::string> h;
        for (const auto& r : p.maximal_runs()) h.emplace(r.serialize(), r.steps()[0].second);
        sim.protocol_for.emplace(x, std::move(p));
        sim.outcome_for.emplace(x, std::move(h));
    }
    return sim;
}

}  // namespace

TEST_CASE("counit self-simulation verifies") {
    Simulation sim = self_simulation(pr_box());
    auto check = check_simulation(sim);
    CHECK_MESSAGE(check.ok, check.report);
}

TEST_CASE("no-cloning easy direction: noncontextual e simulates e ⊗ e") {
    EmpiricalModel e = correlated_nc_box();
    EmpiricalModel ee = tensor(e, e);
    Simulation sim;
    sim.source = e;
    sim.ancilla = ee;  // the free resource
    sim.target = ee;
    sim.depth = 1;
    EmpiricalModel dc = sim.base();
    for (const auto& x : ee.scenario().measurements()) {
        Measurement addr = Measurement::right(x);  // measure the ancilla copy
        Protocol p = counit_protocol(dc.scenario(), addr);
        std::map<std::string, std::string> h;
        for (const auto& r : p.maximal_runs()) h.emplace(r.serialize(), r.steps()[0].second);
        sim.protocol_for.emplace(x, std::move(p));
        sim.outcome_for.emplace(x, std::move(h));
    }
    auto check = check_simulation(sim);
    CHECK_MESSAGE(check.ok, check.report);
    CHECK(ncf(sim.source).optimum <= ncf(sim.target).optimum);
}

TEST_CASE("a deliberately wrong outcome map is reported with a facet") {
    Simulation sim = self_simulation(pr_box());
    // swap the two outcomes of x1's translation
    auto& h = sim.outcome_for.at(M("x1"));
    for (auto& [run, o] : h) o = (o == "0") ? "1" : "0";
    auto check = check_simulation(sim);
    CHECK(!check.ok);
    CHECK(check.report.find("facet") != std::string::npos);
}

TEST_CASE("contextual ancilla is rejected") {
    Simulation sim = self_simulation(pr_box());
    sim.ancilla = pr_box();
    // protocols now live on the wrong scenario; the ancilla check fires first
    auto check = check_simulation(sim);
    CHECK(!check.ok);
    CHECK(check.report.find("ancilla") != std::string::npos);
}

TEST_CASE("term_to_simulation: identity term gives a counit simulation") {
    EmpiricalModel pr = pr_box();
    TypingContext ctx{{"v", pr.scenario()}};
    Simulation sim = term_to_simulation(ctx, parse_term("v"), pr);
    CHECK(sim.depth == 1);
    auto check = check_simulation(sim);
    CHECK_MESSAGE(check.ok, check.report);
    CHECK(is_isomorphic(sim.target, pr));
}

TEST_CASE("term_to_simulation: conditional measurement becomes adaptive") {
    EmpiricalModel pr = pr_box();
    TypingContext ctx{{"v", pr.scenario()}};
    Term t = parse_term("v[x1?(0:y1,1:y2)]");
    Simulation sim = term_to_simulation(ctx, t, pr);
    CHECK(sim.depth == 2);
    auto check = check_simulation(sim);
    CHECK_MESSAGE(check.ok, check.report);
    CHECK(is_isomorphic(sim.target, eval_term(t, {{"v", pr}})));

    // the protocol for the conditional measurement branches on x1
    Measurement name = Measurement::conditional(M("x1"), {{"0", M("y1")}, {"1", M("y2")}});
    const Protocol& p = sim.protocol_for.at(name);
    CHECK(p.depth() == 2);
    CHECK(p.next_after(Run{}) == Measurement::left(M("x1")));
}

TEST_CASE("term_to_simulation: tensor with the singleton uses an ancilla") {
    EmpiricalModel pr = pr_box();
    TypingContext ctx{{"v", pr.scenario()}};
    Term t = parse_term("v (x) u");
    Simulation sim = term_to_simulation(ctx, t, pr);
    auto check = check_simulation(sim);
    CHECK_MESSAGE(check.ok, check.report);
    CHECK(!sim.ancilla.scenario().measurements().empty());
    CHECK(is_isomorphic(sim.target, eval_term(t, {{"v", pr}})));
}

TEST_CASE("term_to_simulation: mixtures ride on a coin ancilla") {
    EmpiricalModel pr = pr_box();
    TypingContext ctx{{"v", pr.scenario()}};
    // mix the source with a closed deterministic-ish component
    Term closed = noncontextual_to_term(correlated_nc_box());
    Term t = Term::mix(parse_term("v"), Rational(1, 3), closed);
    Simulation sim = term_to_simulation(ctx, t, pr);
    auto check = check_simulation(sim);
    CHECK_MESSAGE(check.ok, check.report);
    EmpiricalModel expect = mix(pr, correlated_nc_box(), Rational(1, 3));
    CHECK(sim.target == expect);
    CHECK(is_noncontextual(sim.ancilla));
}

TEST_CASE("term_to_simulation: coarse-graining and translation only") {
    EmpiricalModel pr = pr_box();
    TypingContext ctx{{"v", pr.scenario()}};
    Term t = parse_term("v /[x1: 0>1, 1>0; x2: 0>0, 1>1; y1: 0>0, 1>1; y2: 0>0, 1>1]");
    Simulation sim = term_to_simulation(ctx, t, pr);
    auto check = check_simulation(sim);
    CHECK_MESSAGE(check.ok, check.report);
    CHECK(sim.target == eval_term(t, {{"v", pr}}));
}

TEST_CASE("find_simulation: u simulates u at depth 1 with ancilla z") {
    EmpiricalModel u = singleton_model();
    auto sim = find_simulation(u, u, 1, 1);
    REQUIRE(sim.has_value());
    CHECK(sim->ancilla.scenario().measurements().empty());
    CHECK(check_simulation(*sim).ok);
}

TEST_CASE("find_simulation: outcome-flipped PR found at depth 1") {
    EmpiricalModel pr = pr_box();
    OutcomeFamily flip;
    for (const auto& m : pr.scenario().measurements()) {
        OutcomeMap om;
        om.codomain = {"0", "1"};
        om.map = {{"0", "1"}, {"1", "0"}};
        flip.emplace(m, om);
    }
    EmpiricalModel flipped = coarse_grain(pr, flip);
    auto sim = find_simulation(pr, flipped, 1, 1);
    REQUIRE(sim.has_value());
    CHECK(check_simulation(*sim).ok);
    CHECK(ncf(sim->source).optimum <= ncf(sim->target).optimum);
}

TEST_CASE("find_simulation honestly fails within bounds") {
    // a coin cannot simulate the PR box (and the fraction refutes it outright)
    EmpiricalModel d = correlated_nc_box();
    EmpiricalModel pr = pr_box();
    CHECK(refute_by_fraction(d, pr));
    auto sim = find_simulation(d, pr, 1, 2);
    CHECK(!sim.has_value());
}

TEST_CASE("refute_by_fraction directions") {
    EmpiricalModel pr = pr_box();
    EmpiricalModel nc = correlated_nc_box();
    CHECK(refute_by_fraction(nc, pr));  // NCF 1 > 0
    CHECK(!refute_by_fraction(pr, pr));
    CHECK(!refute_by_fraction(pr, nc));  // 0 <= 1: not refuted by the fraction
    CHECK(!refute_by_fraction(pr, tensor(pr, pr)));
}

TEST_CASE("simulation_to_term extracts a working witness") {
    EmpiricalModel pr = pr_box();
    TypingContext ctx{{"v", pr.scenario()}};

    // counit self-simulation -> term
    Simulation sim = self_simulation(pr);
    Term t = simulation_to_term(sim, "v");
    CHECK(typecheck(ctx, t) == pr.scenario());
    CHECK(is_isomorphic(eval_term(t, {{"v", pr}}), pr));

    // adaptive simulation from a conditional term, extracted back
    Term cond = parse_term("v[x1?(0:y1,1:y2)]");
    Simulation sim2 = term_to_simulation(ctx, cond, pr);
    Term t2 = simulation_to_term(sim2, "v");
    CHECK(is_isomorphic(eval_term(t2, {{"v", pr}}), eval_term(cond, {{"v", pr}})));
}
