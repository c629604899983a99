#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ctxlab/fraction.hpp"
#include "test_helpers.hpp"

using namespace ctxlab;
using namespace ctxlab::testing;

TEST_CASE("simplex basics") {
    // max x s.t. x <= 1
    auto r = simplex_solve({{Rational(1)}}, {Rational(1)}, {Rational(1)});
    CHECK(r.status == LpStatus::Optimal);
    CHECK(r.optimum == Rational(1));

    // max x+y s.t. x+y <= 1, x <= 1/2
    auto r2 = simplex_solve({{Rational(1), Rational(1)}, {Rational(1), Rational(0)}},
                            {Rational(1), Rational(1, 2)}, {Rational(1), Rational(1)});
    CHECK(r2.optimum == Rational(1));

    // unbounded: max x, no constraints binding
    auto r3 = simplex_solve({{Rational(-1)}}, {Rational(1)}, {Rational(1)});
    CHECK(r3.status == LpStatus::Unbounded);

    // dual of r2 is feasible and matches the optimum
    Rational dual_obj = r2.dual[0] * Rational(1) + r2.dual[1] * Rational(1, 2);
    CHECK(dual_obj == r2.optimum);
    CHECK(r2.dual[0] >= 0);
    CHECK(r2.dual[1] >= 0);
    // y.A >= c columnwise
    CHECK(r2.dual[0] + r2.dual[1] >= Rational(1));
    CHECK(r2.dual[0] >= Rational(1));
}

TEST_CASE("simplex equality rows") {
    // x + y = 1, x - free-ish: max x
    Matrix A = {{Rational(1), Rational(1)}};
    auto r = simplex_solve_mixed(A, {Rational(1)}, {Rational(1), Rational(0)},
                                 {RowType::Eq});
    CHECK(r.status == LpStatus::Optimal);
    CHECK(r.optimum == Rational(1));

    // infeasible: x + y = 1 and x + y <= 1/2
    Matrix A2 = {{Rational(1), Rational(1)}, {Rational(1), Rational(1)}};
    auto r2 = simplex_solve_mixed(A2, {Rational(1), Rational(1, 2)},
                                  {Rational(0), Rational(0)}, {RowType::Eq, RowType::Le});
    CHECK(r2.status == LpStatus::Infeasible);
}

TEST_CASE("PR box: NCF 0 with brute-force cross-check") {
    EmpiricalModel pr = pr_box();
    NcfResult r = ncf(pr);
    CHECK(r.optimum == Rational(0));
    CHECK(cf(pr) == Rational(1));
    CHECK(!is_noncontextual(pr));

    // brute force: every one of the 16 global assignments hits a zero cell
    GlobalAssignmentTable t = GlobalAssignmentTable::build(pr.scenario());
    CHECK(t.globals.size() == 16);
    for (const auto& g : t.globals) {
        bool hits_zero = false;
        for (const auto& facet : pr.scenario().complex().facets())
            if (pr.at_facet(facet).at(g.restrict(facet)) == 0) hits_zero = true;
        CHECK(hits_zero);
    }

    // certificate: separates PR from the noncontextual polytope
    CHECK(r.certificate.evaluate(pr) == r.optimum);
    CHECK(r.certificate.dominates_noncontextual(pr.scenario()));

    // optimum 0: contextual part is e itself
    REQUIRE(r.contextual_part.has_value());
    CHECK(*r.contextual_part == pr);
    CHECK(!r.noncontextual_part.has_value());
}

TEST_CASE("deterministic model has NCF 1") {
    Scenario s = pr_scenario();
    Assignment g = A({{"x1", "0"}, {"x2", "1"}, {"y1", "0"}, {"y2", "1"}});
    EmpiricalModel det = deterministic_model(s, g);
    NcfResult r = ncf(det);
    CHECK(r.optimum == Rational(1));
    CHECK(is_noncontextual(det));
    REQUIRE(r.noncontextual_part.has_value());
    CHECK(*r.noncontextual_part == det);
    CHECK(!r.contextual_part.has_value());
    CHECK(r.weights.size() == 1);
    CHECK(r.weights.begin()->first == g);
}

TEST_CASE("mix of PR and a noncontextual box has NCF exactly 1 - lambda") {
    EmpiricalModel pr = pr_box();
    EmpiricalModel nc = correlated_nc_box();
    EmpiricalModel m = mix(pr, nc, Rational(1, 3));  // 1/3 PR + 2/3 noncontextual
    NcfResult r = ncf(m);
    CHECK(r.optimum == Rational(2, 3));
    CHECK(cf(m) == Rational(1, 3));
    CHECK(!is_noncontextual(m));

    // decomposition soundness: mix(eNC, e', optimum) == m exactly
    REQUIRE(r.noncontextual_part.has_value());
    REQUIRE(r.contextual_part.has_value());
    CHECK(mix(*r.noncontextual_part, *r.contextual_part, r.optimum) == m);
    CHECK(is_noncontextual(*r.noncontextual_part));

    // certificate replay
    CHECK(r.certificate.evaluate(m) == r.optimum);
    CHECK(r.certificate.dominates_noncontextual(m.scenario()));

    // NCF(PR mixed at 1/2) = 1/2
    CHECK(ncf(mix(pr, nc, Rational(1, 2))).optimum == Rational(1, 2));
}

TEST_CASE("CF of zero and singleton models is 0") {
    CHECK(cf(zero_model()) == Rational(0));
    CHECK(cf(singleton_model()) == Rational(0));
    CHECK(is_noncontextual(zero_model()));
    CHECK(is_noncontextual(singleton_model()));
}

TEST_CASE("ncf LP shape on PR") {
    // 16 variables before presolve; presolve removes all of them since every
    // global hits a zero cell -> optimum 0 without pivoting
    EmpiricalModel pr = pr_box();
    CHECK(ncf(pr).optimum == Rational(0));
    CHECK(ncf(pr).weights.empty());
}

TEST_CASE("Prop 1 instances on fixed models") {
    EmpiricalModel pr = pr_box();
    EmpiricalModel nc = correlated_nc_box();

    // CF(e & e') = max
    CHECK(cf(choice(pr, nc)) == Rational(1));
    CHECK(cf(choice(nc, nc)) == Rational(0));

    // NCF(e ⊗ e') = NCF(e) NCF(e')
    EmpiricalModel m = mix(pr, nc, Rational(1, 2));  // NCF 1/2
    CHECK(ncf(tensor(m, nc)).optimum == Rational(1, 2));
    CHECK(ncf(tensor(pr, pr)).optimum == Rational(0));

    // CF(e[x?y]) = CF(e)
    EmpiricalModel ext = conditional(m, M("x1"), {{"0", M("y1")}, {"1", M("y2")}});
    CHECK(cf(ext) == cf(m));

    // convexity: CF(e +_λ e') <= λ CF(e) + (1-λ) CF(e')
    Rational lambda(2, 5);
    CHECK(cf(mix(pr, nc, lambda)) <= lambda * cf(pr) + (1 - lambda) * cf(nc));
}
