#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "ctxlab/errors.hpp"
#include "ctxlab/scenario.hpp"
#include "test_helpers.hpp"

using namespace ctxlab;
using namespace ctxlab::testing;

TEST_CASE("measurement ids round-trip through parse") {
    Measurement x = M("x1");
    CHECK(x.id() == "x1");
    CHECK(Measurement::parse(x.id()) == x);

    Measurement lx = Measurement::left(x);
    CHECK(lx.id() == "l.x1");
    CHECK(Measurement::parse("l.x1") == lx);

    Measurement cond = Measurement::conditional(x, {{"0", M("y1")}, {"1", M("y2")}});
    CHECK(cond.id() == "x1?(0:y1,1:y2)");
    CHECK(Measurement::parse(cond.id()) == cond);

    // conditional-of-injection vs injection-of-conditional disambiguate
    Measurement c_of_l = Measurement::conditional(lx, {{"0", M("r.y1")}});
    Measurement l_of_c = Measurement::left(cond);
    CHECK(c_of_l.id() == "l.x1?(0:r.y1)");
    CHECK(l_of_c.id() == "l.(x1?(0:y1,1:y2))");
    CHECK(Measurement::parse(c_of_l.id()) == c_of_l);
    CHECK(Measurement::parse(l_of_c.id()) == l_of_c);

    // labels with structural characters get quoted
    Measurement odd = Measurement::base("x1=0|x1=1");
    CHECK(Measurement::parse(odd.id()) == odd);
    Measurement tagged_protocol = Measurement::base("l.x=0;r.y=1");
    CHECK(Measurement::parse(tagged_protocol.id()) == tagged_protocol);
    CHECK(tagged_protocol.id().front() == '"');
}

TEST_CASE("pair labels") {
    std::string p = pair_label("0", "1");
    CHECK(p == "(0,1)");
    auto [a, b] = split_pair_label(p);
    CHECK(a == "0");
    CHECK(b == "1");
    std::string nested = pair_label(p, "x");
    CHECK(split_pair_label(nested).first == "(0,1)");
    CHECK(is_pair_label(p));
    CHECK(!is_pair_label("plain"));
}

TEST_CASE("PR scenario validates") {
    Scenario s = pr_scenario();
    CHECK(validate_scenario(s).ok());
    CHECK(s.complex().facets().size() == 4);
}

TEST_CASE("singleton and zero scenarios validate") {
    CHECK(validate_scenario(Scenario::zero()).ok());
    CHECK(validate_scenario(Scenario::singleton()).ok());
    CHECK(Scenario::zero().measurements().empty());
    CHECK(Scenario::singleton().measurements().size() == 1);
}

TEST_CASE("empty outcome set rejected") {
    CHECK_THROWS_AS(Scenario::make({{M("x1"), {}}},
                                   SimplicialComplex::from_facets({VS({"x1"})})),
                    DomainError);
}

TEST_CASE("is_face on the PR complex") {
    Scenario s = pr_scenario();
    CHECK(s.complex().is_face(VS({"x1", "y2"})));
    CHECK(!s.complex().is_face(VS({"x1", "x2"})));
    CHECK(s.complex().is_face({}));
    CHECK_THROWS_AS(s.complex().is_face(VS({"nope"})), DomainError);
}

TEST_CASE("enumerate_assignments order and count") {
    Scenario s = pr_scenario();
    auto as = enumerate_assignments(s, VS({"x1", "y1"}));
    REQUIRE(as.size() == 4);
    CHECK(as[0].key() == "x1=0,y1=0");
    CHECK(as[1].key() == "x1=0,y1=1");
    CHECK(as[2].key() == "x1=1,y1=0");
    CHECK(as[3].key() == "x1=1,y1=1");

    auto empty = enumerate_assignments(s, {});
    REQUIRE(empty.size() == 1);
    CHECK(empty[0].size() == 0);

    Scenario t = Scenario::make({{M("x"), {"a", "b", "c"}}},
                                SimplicialComplex::from_facets({VS({"x"})}));
    CHECK(enumerate_assignments(t, VS({"x"})).size() == 3);

    // re-running yields the identical sequence
    CHECK(enumerate_assignments(s, VS({"x1", "y1"})) == as);
}

TEST_CASE("assignment restriction") {
    Assignment a = A({{"x1", "0"}, {"y1", "1"}});
    CHECK(a.restrict(VS({"x1"})).key() == "x1=0");
    CHECK(a.restrict({}).size() == 0);
    CHECK(a.restrict(a.domain()) == a);
    CHECK_THROWS_AS(a.restrict(VS({"x2"})), DomainError);
}

TEST_CASE("link of a face") {
    Scenario s = pr_scenario();
    // brute-force oracle: faces of lk_sigma are exactly
    // { tau : tau∩sigma=∅, tau∪sigma a face }
    auto oracle_link_faces = [&](const VertexSet& sigma) {
        std::set<VertexSet> faces;
        for (const auto& tau : s.complex().all_faces())
            if (vertex_disjoint(tau, sigma) && s.complex().is_face(vertex_union(tau, sigma)))
                faces.insert(tau);
        return faces;
    };

    SimplicialComplex lk = s.complex().link(VS({"x1"}));
    auto lk_faces = lk.all_faces();
    std::set<VertexSet> got(lk_faces.begin(), lk_faces.end());
    CHECK(got == oracle_link_faces(VS({"x1"})));
    CHECK(lk.facets().size() == 2);  // {y1}, {y2}

    // link of the empty face is the complex itself
    CHECK(s.complex().link({}) == s.complex());

    // link in a solid simplex
    auto simplex = SimplicialComplex::from_facets({VS({"a", "b", "c"})});
    CHECK(simplex.link(VS({"a"})) == SimplicialComplex::from_facets({VS({"b", "c"})}));

    CHECK_THROWS_AS(s.complex().link(VS({"x1", "x2"})), DomainError);
}

TEST_CASE("iterated links compose") {
    auto simplex = SimplicialComplex::from_facets({VS({"a", "b", "c", "d"})});
    auto one = simplex.link(VS({"a"})).link(VS({"b"}));
    auto two = simplex.link(VS({"a", "b"}));
    CHECK(one == two);
}

TEST_CASE("join and coproduct facet counts") {
    Scenario s = pr_scenario();
    auto j = join(s.complex(), s.complex());
    CHECK(j.facets().size() == 16);
    for (const auto& f : j.facets()) CHECK(f.size() == 4);

    auto c = coproduct(s.complex(), s.complex());
    CHECK(c.facets().size() == 8);
    for (const auto& f : c.facets()) CHECK(f.size() == 2);

    // neutral element: joining with the zero complex relabels
    auto z = Scenario::zero().complex();
    auto jz = join(s.complex(), z);
    CHECK(jz.facets().size() == 4);
    CHECK(jz.vertices().size() == 4);
    for (const auto& v : jz.vertices()) CHECK(v.kind() == Measurement::Kind::Left);

    // two one-vertex complexes
    auto d1 = Scenario::singleton().complex();
    CHECK(join(d1, d1).facets().size() == 1);
    CHECK(join(d1, d1).facets()[0].size() == 2);
    CHECK(coproduct(d1, d1).facets().size() == 2);
}

TEST_CASE("downward closure of reported faces") {
    Scenario s = pr_scenario();
    for (const auto& f : s.complex().all_faces())
        for (const auto& m : f) {
            VertexSet sub;
            for (const auto& x : f)
                if (!(x == m)) sub.push_back(x);
            CHECK(s.complex().is_face(sub));
        }
}

TEST_CASE("extend_conditional on PR") {
    Scenario s = pr_scenario();
    Measurement x1 = M("x1");
    Measurement::Branches y = {{"0", M("y1")}, {"1", M("y2")}};
    Scenario s2 = extend_conditional(s, x1, y);
    Measurement name = Measurement::conditional(x1, y);

    CHECK(s2.measurements().size() == 5);
    CHECK(s2.outcomes(name).size() == 4);
    CHECK(s2.complex().is_face({name}));
    CHECK(s2.complex().is_face(make_vertex_set({name, x1})));
    // {x1?y, y1} requires {y1,x1,y2} ∈ Σ for branch o=1 -> not a face
    CHECK(!s2.complex().is_face(make_vertex_set({name, M("y1")})));

    // brute-force oracle for the extended complex
    for (const auto& sigma : s.complex().all_faces()) {
        bool expect = true;
        for (const auto& [o, yo] : y)
            if (!s.complex().is_face(vertex_union(sigma, make_vertex_set({x1, yo}))))
                expect = false;
        CHECK(s2.complex().is_face(vertex_union(sigma, {name})) == expect);
        // old faces survive
        CHECK(s2.complex().is_face(sigma));
    }

    // degenerate adaptivity: constant family
    Measurement::Branches yconst = {{"0", M("y1")}, {"1", M("y1")}};
    Scenario s3 = extend_conditional(s, x1, yconst);
    CHECK(s3.outcomes(Measurement::conditional(x1, yconst)).size() == 4);

    // y_o must be in the link of x
    Measurement::Branches bad = {{"0", M("x1")}, {"1", M("y2")}};
    CHECK_THROWS_AS(extend_conditional(s, x1, bad), DomainError);
}

TEST_CASE("conditional name collision rejected") {
    Scenario s = pr_scenario();
    Measurement x1 = M("x1");
    Measurement::Branches y = {{"0", M("y1")}, {"1", M("y2")}};
    Scenario s2 = extend_conditional(s, x1, y);
    CHECK_THROWS_AS(extend_conditional(s2, x1, y), DomainError);
}
