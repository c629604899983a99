#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ctxlab/errors.hpp"
#include "ctxlab/model.hpp"
#include "test_helpers.hpp"

using namespace ctxlab;
using namespace ctxlab::testing;

TEST_CASE("PR box validates; perturbed table does not") {
    EmpiricalModel pr = pr_box();
    CHECK(validate_model(pr).ok());

    // perturb one entry without renormalizing -> sum != 1
    VertexSet f = VS({"x2", "y2"});
    CHECK_THROWS_AS(Distribution::make(f, {{A({{"x2", "0"}, {"y2", "1"}}), Rational(3, 4)},
                                           {A({{"x2", "1"}, {"y2", "0"}}), Rational(1, 2)}}),
                    DomainError);
}

TEST_CASE("correlated box validates (noncontextual)") {
    CHECK(validate_model(correlated_nc_box()).ok());
}

TEST_CASE("signalling table fails validation") {
    Scenario s = pr_scenario();
    std::map<VertexSet, Distribution> dists;
    auto point2 = [&](const char* a, const char* av, const char* b, const char* bv) {
        return Distribution::point(A({{a, av}, {b, bv}}));
    };
    // x1 marginal differs between x1y1 (always 0) and x1y2 (always 1)
    dists.emplace(VS({"x1", "y1"}), point2("x1", "0", "y1", "0"));
    dists.emplace(VS({"x1", "y2"}), point2("x1", "1", "y2", "0"));
    dists.emplace(VS({"x2", "y1"}), point2("x2", "0", "y1", "0"));
    dists.emplace(VS({"x2", "y2"}), point2("x2", "0", "y2", "0"));
    EmpiricalModel bad = EmpiricalModel::make(s, std::move(dists));
    CHECK(!validate_model(bad).ok());
}

TEST_CASE("marginals of the PR box") {
    EmpiricalModel pr = pr_box();
    Distribution mx1 = pr.marginal(VS({"x1"}));
    CHECK(mx1.at(A({{"x1", "0"}})) == Rational(1, 2));
    CHECK(mx1.at(A({{"x1", "1"}})) == Rational(1, 2));

    Distribution mempty = pr.marginal({});
    CHECK(mempty.at(Assignment{}) == Rational(1));

    CHECK(pr.marginal(VS({"x1", "y1"})) == pr.at_facet(VS({"x1", "y1"})));

    // computed via either covering facet, the answer agrees
    Distribution via_y1 = pr.at_facet(VS({"x1", "y1"})).marginal_to(VS({"x1"}));
    Distribution via_y2 = pr.at_facet(VS({"x1", "y2"})).marginal_to(VS({"x1"}));
    CHECK(via_y1 == via_y2);

    CHECK_THROWS_AS(pr.marginal(VS({"x1", "x2"})), DomainError);
}

TEST_CASE("zero and singleton models") {
    EmpiricalModel z = zero_model();
    CHECK(z.scenario().measurements().empty());
    CHECK(z.at_facet({}).at(Assignment{}) == Rational(1));

    EmpiricalModel u = singleton_model();
    Measurement star = u.scenario().measurements().front();
    CHECK(u.at_facet({star}).at(Assignment::make({{star, "star"}})) == Rational(1));
}

TEST_CASE("pullback along identity and alias-collapsing maps") {
    EmpiricalModel pr = pr_box();
    VertexMap id{pr.scenario().complex(), {}};
    for (const auto& m : pr.scenario().measurements()) id.map.emplace(m, m);
    CHECK(pullback(id, pr) == pr);

    // two aliases of x1 on a fresh two-vertex scenario with facet {a,a2}
    auto cx = SimplicialComplex::from_facets({VS({"a", "a2"})});
    VertexMap f{cx, {{M("a"), M("x1")}, {M("a2"), M("x1")}}};
    EmpiricalModel e2 = pullback(f, pr);
    Distribution d = e2.at_facet(VS({"a", "a2"}));
    CHECK(d.at(A({{"a", "0"}, {"a2", "0"}})) == Rational(1, 2));
    CHECK(d.at(A({{"a", "1"}, {"a2", "1"}})) == Rational(1, 2));
    CHECK(d.at(A({{"a", "0"}, {"a2", "1"}})) == Rational(0));
    CHECK(validate_model(e2).ok());

    // non-simplicial map rejected: {x1,x2} is not a face
    auto cx2 = SimplicialComplex::from_facets({VS({"a", "b"})});
    VertexMap g{cx2, {{M("a"), M("x1")}, {M("b"), M("x2")}}};
    CHECK_THROWS_AS(pullback(g, pr), DomainError);
}

TEST_CASE("pullback along the inclusion into a conditional extension") {
    EmpiricalModel pr = pr_box();
    EmpiricalModel ext = conditional(pr, M("x1"), {{"0", M("y1")}, {"1", M("y2")}});
    VertexMap incl{pr.scenario().complex(), {}};
    for (const auto& m : pr.scenario().measurements()) incl.map.emplace(m, m);
    CHECK(pullback(incl, ext) == pr);
}

TEST_CASE("coarse-graining") {
    EmpiricalModel pr = pr_box();
    OutcomeFamily id;
    for (const auto& m : pr.scenario().measurements()) {
        OutcomeMap om;
        om.codomain = {"0", "1"};
        om.map = {{"0", "0"}, {"1", "1"}};
        id.emplace(m, om);
    }
    CHECK(coarse_grain(pr, id) == pr);

    // flip Bob's outcomes
    OutcomeFamily flip = id;
    for (const char* b : {"y1", "y2"}) flip.at(M(b)).map = {{"0", "1"}, {"1", "0"}};
    EmpiricalModel flipped = coarse_grain(pr, flip);
    CHECK(validate_model(flipped).ok());
    // anti-correlated on x1y1 now
    CHECK(flipped.at_facet(VS({"x1", "y1"})).at(A({{"x1", "0"}, {"y1", "1"}})) == Rational(1, 2));
    // correlated on x2y2 now
    CHECK(flipped.at_facet(VS({"x2", "y2"})).at(A({{"x2", "0"}, {"y2", "0"}})) == Rational(1, 2));

    // all-constant coarse-graining gives a deterministic model
    OutcomeFamily constant;
    for (const auto& m : pr.scenario().measurements()) {
        OutcomeMap om;
        om.codomain = {"c"};
        om.map = {{"0", "c"}, {"1", "c"}};
        constant.emplace(m, om);
    }
    EmpiricalModel det = coarse_grain(pr, constant);
    for (const auto& [facet, dist] : det.facet_distributions())
        CHECK(dist.weights().size() == 1);

    // partial family rejected
    OutcomeFamily partial = id;
    partial.erase(M("y2"));
    CHECK_THROWS_AS(coarse_grain(pr, partial), DomainError);
}

TEST_CASE("mix follows the displayed formula (lambda weights the first argument)") {
    EmpiricalModel pr = pr_box();
    EmpiricalModel nc = correlated_nc_box();
    CHECK(mix(pr, nc, Rational(1)) == pr);
    CHECK(mix(pr, nc, Rational(0)) == nc);
    CHECK(mix(pr, pr, Rational(1, 3)) == pr);
    CHECK(validate_model(mix(pr, nc, Rational(1, 2))).ok());
    CHECK_THROWS_AS(mix(pr, nc, Rational(3, 2)), DomainError);
    CHECK_THROWS_AS(mix(pr, zero_model(), Rational(1, 2)), DomainError);
}

TEST_CASE("choice") {
    EmpiricalModel pr = pr_box();
    EmpiricalModel both = choice(pr, pr);
    CHECK(both.scenario().complex().facets().size() == 8);
    CHECK(validate_model(both).ok());
    Distribution d = both.at_facet(VS({"l.x1", "l.y1"}));
    CHECK(d.at(A({{"l.x1", "0"}, {"l.y1", "0"}})) == Rational(1, 2));

    // z & e is e up to relabeling
    EmpiricalModel ze = choice(zero_model(), pr);
    CHECK(is_isomorphic(ze, pr));
}

TEST_CASE("tensor") {
    EmpiricalModel u = singleton_model();
    EmpiricalModel uu = tensor(u, u);
    CHECK(uu.scenario().measurements().size() == 2);
    CHECK(uu.scenario().complex().facets().size() == 1);
    CHECK(uu.at_facet(uu.scenario().complex().facets()[0]).weights().size() == 1);

    EmpiricalModel pr = pr_box();
    CHECK(is_isomorphic(tensor(zero_model(), pr), pr));

    EmpiricalModel prpr = tensor(pr, pr);
    CHECK(prpr.scenario().complex().facets().size() == 16);
    CHECK(validate_model(prpr).ok());
    Distribution d = prpr.marginal(VS({"l.x1", "r.x1"}));
    CHECK(d.at(A({{"l.x1", "0"}, {"r.x1", "1"}})) == Rational(1, 4));
}

TEST_CASE("conditional measurement on PR against the displayed formula") {
    EmpiricalModel pr = pr_box();
    Measurement x1 = M("x1");
    Measurement::Branches y = {{"0", M("y1")}, {"1", M("y2")}};
    EmpiricalModel ext = conditional(pr, x1, y);
    Measurement name = Measurement::conditional(x1, y);
    CHECK(validate_model(ext).ok());

    // Oracle: evaluate the case formula directly from the Table-I rows at the
    // face {x1?y}: weight of (o,o') is e_{x1,y_o}(x1=o, y_o=o').
    Distribution dm = ext.marginal({name});
    for (const auto& [o, yo] : y) {
        for (const std::string& o2 : std::vector<std::string>{"0", "1"}) {
            Rational expect =
                pr.marginal(make_vertex_set({x1, yo})).at(Assignment::make({{x1, o}, {yo, o2}}));
            CHECK(dm.at(Assignment::make({{name, pair_label(o, o2)}})) == expect);
        }
    }
    // PR's perfect correlations pin these to 1/2,0,0,1/2
    CHECK(dm.at(Assignment::make({{name, "(0,0)"}})) == Rational(1, 2));
    CHECK(dm.at(Assignment::make({{name, "(0,1)"}})) == Rational(0));
    CHECK(dm.at(Assignment::make({{name, "(1,0)"}})) == Rational(0));
    CHECK(dm.at(Assignment::make({{name, "(1,1)"}})) == Rational(1, 2));

    // old faces keep their distributions
    CHECK(ext.marginal(VS({"x1", "y1"})) == pr.at_facet(VS({"x1", "y1"})));

    // guard clause: on the face {x1, x1?y}, s(x1) must agree with the first
    // component of the dependent pair
    Distribution joint = ext.marginal(make_vertex_set({x1, name}));
    CHECK(joint.at(Assignment::make({{x1, "1"}, {name, "(0,0)"}})) == Rational(0));
    CHECK(joint.at(Assignment::make({{x1, "0"}, {name, "(0,0)"}})) == Rational(1, 2));
}

TEST_CASE("pushforward equals pullback-then-coarse-grain") {
    EmpiricalModel pr = pr_box();

    // a morphism onto a single-Alice-measurement scenario with outcome swap
    auto cx = SimplicialComplex::from_facets({VS({"m"})});
    Scenario target = Scenario::make({{M("m"), {"a", "b"}}}, cx);
    DeterministicMorphism mo;
    mo.source = pr.scenario();
    mo.target = target;
    mo.pi.emplace(M("m"), M("x1"));
    OutcomeMap om;
    om.codomain = {"a", "b"};
    om.map = {{"0", "b"}, {"1", "a"}};
    mo.outcome.emplace(M("m"), om);

    EmpiricalModel pushed = pushforward(mo, pr);
    CHECK(pushed.at_facet(VS({"m"})).at(A({{"m", "a"}})) == Rational(1, 2));

    // identity morphism fixes the model
    CHECK(pushforward(identity_morphism(pr.scenario()), pr) == pr);

    // factorization through pullback + coarse-graining (exact equality)
    VertexMap f{target.complex(), mo.pi};
    OutcomeFamily h;
    h.emplace(M("m"), om);
    CHECK(pushed == coarse_grain(pullback(f, pr), h));
}

TEST_CASE("morphism composition") {
    EmpiricalModel pr = pr_box();
    DeterministicMorphism id = identity_morphism(pr.scenario());
    CHECK(compose(id, id) == id);
    CHECK(pushforward(compose(id, id), pr) == pr);
}

TEST_CASE("isomorphism search") {
    EmpiricalModel pr = pr_box();
    CHECK(is_isomorphic(pr, pr));

    // relabeled PR
    auto cx = SimplicialComplex::from_facets(
        {VS({"a1", "b1"}), VS({"a1", "b2"}), VS({"a2", "b1"}), VS({"a2", "b2"})});
    VertexMap f{cx,
                {{M("a1"), M("x1")}, {M("a2"), M("x2")}, {M("b1"), M("y1")}, {M("b2"), M("y2")}}};
    EmpiricalModel relabeled = pullback(f, pr);
    auto witness = find_isomorphism(pr, relabeled);
    REQUIRE(witness.has_value());
    VertexMap wf{relabeled.scenario().complex(), witness->f};
    CHECK(coarse_grain(pullback(wf, pr), witness->h) == relabeled);

    // PR is not isomorphic to the correlated noncontextual box
    CHECK(!is_isomorphic(pr, correlated_nc_box()));

    // outcome-permuted PR is isomorphic to PR
    OutcomeFamily flip;
    for (const auto& m : pr.scenario().measurements()) {
        OutcomeMap om;
        om.codomain = {"0", "1"};
        om.map = {{"0", "1"}, {"1", "0"}};
        flip.emplace(m, om);
    }
    CHECK(is_isomorphic(pr, coarse_grain(pr, flip)));
}

TEST_CASE("operations preserve compatibility") {
    EmpiricalModel pr = pr_box();
    EmpiricalModel nc = correlated_nc_box();
    CHECK(validate_model(mix(pr, nc, Rational(2, 7))).ok());
    CHECK(validate_model(tensor(pr, nc)).ok());
    CHECK(validate_model(choice(pr, nc)).ok());
    CHECK(validate_model(conditional(pr, M("y2"), {{"0", M("x1")}, {"1", M("x2")}})).ok());
}
