#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ctxlab/errors.hpp"
#include "ctxlab/fraction.hpp"
#include "ctxlab/terms.hpp"
#include "test_helpers.hpp"

using namespace ctxlab;
using namespace ctxlab::testing;

namespace {

TypingContext pr_ctx() { return {{"v", pr_scenario()}}; }
Environment pr_env() { return {{"v", pr_box()}}; }

}  // namespace

TEST_CASE("parsing the spec examples") {
    Term t1 = parse_term("u (x) u");
    CHECK(t1.kind() == Term::Kind::Tensor);
    CHECK(t1.child(0).kind() == Term::Kind::One);
    CHECK(t1.child(1).kind() == Term::Kind::One);

    Term t2 = parse_term("v1 +_1/2 z");
    CHECK(t2.kind() == Term::Kind::Mix);
    CHECK(t2.lambda() == Rational(1, 2));
    CHECK(t2.child(0).var_name() == "v1");
    CHECK(t2.child(1).kind() == Term::Kind::Zero);

    Term t3 = parse_term("v[x1?(0:y1,1:y2)]");
    CHECK(t3.kind() == Term::Kind::Cond);
    CHECK(t3.cond_data().x == M("x1"));
    REQUIRE(t3.cond_data().branches.size() == 2);
    CHECK(t3.cond_data().branches[0] == std::pair(std::string("0"), M("y1")));
    CHECK(t3.cond_data().branches[1] == std::pair(std::string("1"), M("y2")));
}

TEST_CASE("parse errors carry positions") {
    CHECK_THROWS_AS(parse_term("u (x)"), ParseError);
    CHECK_THROWS_AS(parse_term("v +_ z"), ParseError);
    CHECK_THROWS_AS(parse_term("v[x1?(0:y1]"), ParseError);
    try {
        parse_term("u (x)\n  +");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
    }
}

TEST_CASE("precedence: postfix > tensor > choice > mix") {
    Term t = parse_term("a (x) b[m?(0:n)] & c +_1/3 d");
    CHECK(t.kind() == Term::Kind::Mix);
    CHECK(t.child(0).kind() == Term::Kind::Choice);
    CHECK(t.child(0).child(0).kind() == Term::Kind::Tensor);
    CHECK(t.child(0).child(0).child(1).kind() == Term::Kind::Cond);
}

TEST_CASE("render/parse round trip") {
    std::vector<std::string> sources = {
        "u (x) u",
        "v1 +_1/2 z",
        "v[x1?(0:y1,1:y2)]",
        "pull[a:x1, b:y1 | {a,b}] v",
        "v /[x1: 0>a, 1>a | {a,b}; x2: 0>0, 1>1; y1: 0>0, 1>1; y2: 0>0, 1>1]",
        "(v & z) (x) u",
        "( u +_1/3 u ) +_2/7 u",
    };
    for (const auto& src : sources) {
        Term t = parse_term(src);
        Term again = parse_term(render_term(t));
        CHECK(again == t);
    }
}

TEST_CASE("typing the base cases and tensor rule") {
    Scenario s = typecheck({}, parse_term("u (x) u"));
    CHECK(s.measurements().size() == 2);
    CHECK(s.complex().facets().size() == 1);
    CHECK(typecheck({}, Term::zero()) == Scenario::zero());
}

TEST_CASE("linearity: repeated variables rejected") {
    CHECK_THROWS_AS(typecheck(pr_ctx(), parse_term("v +_1/2 v")), IllTyped);
    CHECK_THROWS_AS(typecheck(pr_ctx(), parse_term("v (x) v")), IllTyped);
    // unused context entries are fine
    CHECK(typecheck(pr_ctx(), parse_term("u")) == Scenario::singleton());
    // unbound variable
    CHECK_THROWS_AS(typecheck({}, parse_term("w")), IllTyped);
}

TEST_CASE("conditional typing matches extend_conditional") {
    Scenario s = typecheck(pr_ctx(), parse_term("v[x1?(0:y1,1:y2)]"));
    Scenario expect =
        extend_conditional(pr_scenario(), M("x1"), {{"0", M("y1")}, {"1", M("y2")}});
    CHECK(s == expect);
    // branch outside the link
    CHECK_THROWS_AS(typecheck(pr_ctx(), parse_term("v[x1?(0:x2,1:y2)]")), IllTyped);
}

TEST_CASE("evaluation basics") {
    CHECK(eval_term(parse_term("v"), pr_env()) == pr_box());
    CHECK(is_isomorphic(eval_term(parse_term("z & v"), pr_env()), pr_box()));
    CHECK(eval_term(parse_term("u (x) u"), {}).scenario().measurements().size() == 2);

    // mix weight orientation: lambda weights the first argument
    Environment env = {{"v", pr_box()}, {"w", correlated_nc_box()}};
    CHECK(eval_term(parse_term("v +_1/1 w"), env) == pr_box());
    CHECK(eval_term(parse_term("v +_0/1 w"), env) == correlated_nc_box());
}

TEST_CASE("Prop 2 witness for a deterministic model evaluates back") {
    Scenario s = pr_scenario();
    Assignment g = A({{"x1", "0"}, {"x2", "1"}, {"y1", "0"}, {"y2", "1"}});
    EmpiricalModel det = deterministic_model(s, g);
    Term t = noncontextual_to_term(det);
    CHECK(t.free_vars().empty());
    CHECK(matches_normal_grammar(t));
    CHECK(eval_term(t, {}) == det);
}

TEST_CASE("noncontextual_to_term round trip on a mixture") {
    EmpiricalModel nc = correlated_nc_box();
    Term t = noncontextual_to_term(nc);
    CHECK(eval_term(t, {}) == nc);
    CHECK_THROWS_AS(noncontextual_to_term(pr_box()), DomainError);
}

TEST_CASE("rule 28 eliminates choice") {
    const auto& rules = equational_rules();
    REQUIRE(rules.size() == 28);
    Term t = parse_term("v & u");
    auto out = rules[27].apply(pr_ctx(), t);
    REQUIRE(out.has_value());
    CHECK(out->kind() == Term::Kind::Pullback);
    CHECK(out->child().kind() == Term::Kind::Tensor);
    CHECK(is_isomorphic(eval_term(*out, pr_env()), eval_term(t, pr_env())));
}

TEST_CASE("rule 11 composes pullbacks") {
    // g*(f*a) -> (f o g)* a on a two-step relabeling of PR
    Term inner = parse_term("pull[a1:x1, a2:x2, b1:y1, b2:y2] v");
    Term t = Term::pullback(
        PullbackData{{{M("c1"), M("a1")}, {M("c2"), M("b1")}}, std::nullopt}, inner);
    auto out = equational_rules()[10].apply(pr_ctx(), t);
    REQUIRE(out.has_value());
    CHECK(out->kind() == Term::Kind::Pullback);
    CHECK(out->child().kind() == Term::Kind::Var);
    CHECK(eval_term(*out, pr_env()) == eval_term(t, pr_env()));
}

TEST_CASE("rule 23 is blocked when the outer conditional uses the inner one") {
    Term inner = parse_term("v[x1?(0:y1,1:y2)]");
    Measurement name = Measurement::conditional(M("x1"), {{"0", M("y1")}, {"1", M("y2")}});
    // condition on the conditional itself: swapping would be ill-scoped
    Scenario ext = typecheck(pr_ctx(), inner);
    SimplicialComplex lk = ext.complex().link({name});
    REQUIRE(lk.has_vertex(M("x1")));
    Measurement::Branches outer;
    for (const auto& o : ext.outcomes(name)) outer.emplace_back(o, M("x1"));
    Term t = Term::cond(inner, CondData{name, outer});
    CHECK(typecheck(pr_ctx(), t).measurements().size() == 6);
    CHECK(!equational_rules()[22].apply(pr_ctx(), t).has_value());

    // two independent conditionals do swap
    Term t2 = parse_term("v[x1?(0:y1,1:y2)][x2?(0:y1,1:y1)]");
    auto out = equational_rules()[22].apply(pr_ctx(), t2);
    REQUIRE(out.has_value());
    CHECK(is_isomorphic(eval_term(*out, pr_env()), eval_term(t2, pr_env())));
}

TEST_CASE("rule 25 side condition requires surjective h_x") {
    // non-surjective at x1: codomain {a,b,c} with image {a,b}
    Term t = parse_term(
        "(v /[x1: 0>a, 1>b | {a,b,c}; x2: 0>0, 1>1; y1: 0>0, 1>1; y2: 0>0, 1>1])"
        "[x1?(a:y1,b:y2,c:y2)]");
    CHECK(typecheck(pr_ctx(), t).measurements().size() == 5);
    CHECK(!equational_rules()[24].apply(pr_ctx(), t).has_value());

    // surjective version rewrites and stays sound
    Term t2 = parse_term(
        "(v /[x1: 0>a, 1>b | {a,b}; x2: 0>0, 1>1; y1: 0>0, 1>1; y2: 0>0, 1>1])"
        "[x1?(a:y1,b:y2)]");
    auto out = equational_rules()[24].apply(pr_ctx(), t2);
    REQUIRE(out.has_value());
    CHECK(out->kind() == Term::Kind::Coarse);
    CHECK(is_isomorphic(eval_term(*out, pr_env()), eval_term(t2, pr_env())));
}

TEST_CASE("every rule example from the monoid laws is sound on PR") {
    Environment env = pr_env();
    TypingContext ctx = pr_ctx();
    std::vector<std::string> lhss = {"v & u", "u & v", "v (x) u", "u (x) v",
                                     "v & z",  "z & v", "v (x) z", "z (x) v"};
    for (const auto& src : lhss) {
        Term t = parse_term(src);
        for (const auto& rule : equational_rules()) {
            auto out = rule.apply(ctx, t);
            if (!out) continue;
            CHECK_MESSAGE(is_isomorphic(eval_term(*out, env), eval_term(t, env)),
                          "rule ", rule.number, " on ", src);
        }
    }
}

TEST_CASE("normalize: choice elimination example") {
    TypingContext ctx = pr_ctx();
    Term t = parse_term("z & v");
    Term n = normalize(ctx, t);
    CHECK(matches_normal_grammar(n));
    CHECK(typecheck(ctx, n) == typecheck(ctx, t));
    CHECK(eval_term(n, pr_env()) == eval_term(t, pr_env()));
}

TEST_CASE("normalize: conditional floats above tensor") {
    TypingContext ctx = pr_ctx();
    Term t = parse_term("v[x1?(0:y1,1:y2)] (x) u");
    Term n = normalize(ctx, t);
    CHECK(matches_normal_grammar(n));
    // shape: (f*((v (x) u)[...]))/h
    CHECK(n.kind() == Term::Kind::Coarse);
    CHECK(n.child().kind() == Term::Kind::Pullback);
    CHECK(n.child().child().kind() == Term::Kind::Cond);
    CHECK(eval_term(n, pr_env()) == eval_term(t, pr_env()));
}

TEST_CASE("normalize: mixes float to the top, zero weights dropped") {
    TypingContext ctx = {{"v", pr_scenario()}, {"w", pr_scenario()}};
    Environment env = {{"v", pr_box()}, {"w", correlated_nc_box()}};
    Term t = parse_term("(v +_1/3 w) & u");
    Term n = normalize(ctx, t);
    CHECK(matches_normal_grammar(n));
    CHECK(eval_term(n, env) == eval_term(t, env));

    Term t2 = parse_term(
        "v[x2?(0:y1,1:y2)][x1?(0:y1,1:y2)] +_0/1 w[x2?(0:y1,1:y2)][x1?(0:y1,1:y2)]");
    Term n2 = normalize(ctx, t2);
    CHECK(matches_normal_grammar(n2));
    CHECK(n2.kind() != Term::Kind::Mix);  // single surviving component
    CHECK(eval_term(n2, env) == eval_term(t2, env));
}

TEST_CASE("normalize an already-normal term is stable up to wrappers") {
    TypingContext ctx = pr_ctx();
    Term t = parse_term("v");
    Term n = normalize(ctx, t);
    CHECK(matches_normal_grammar(n));
    CHECK(n.kind() == Term::Kind::Coarse);
    CHECK(n.child().child() == t);
    Term again = normalize(ctx, n);
    CHECK(matches_normal_grammar(again));
    CHECK(eval_term(again, pr_env()) == pr_box());
}

TEST_CASE("normalize blocks on a collapsed conditional site") {
    // aliasing pullback below a conditional whose branches collapse onto the
    // site; the equational theory has no sound rewrite here
    Scenario w = Scenario::make({{M("w"), {"0", "1"}}},
                                SimplicialComplex::from_facets({VS({"w"})}));
    TypingContext ctx = {{"m", w}};
    Term t = parse_term("(pull[p:w, q:w | {p,q}] m)[p?(0:q,1:q)]");
    CHECK(typecheck(ctx, t).measurements().size() == 3);
    CHECK_THROWS_AS(normalize(ctx, t), DomainError);
}

TEST_CASE("normalizing a nested mixture keeps the exact convex weights") {
    // three-component mixture below a coarse-graining and a conditional
    TypingContext ctx = {{"v", pr_scenario()}, {"w", pr_scenario()}, {"w2", pr_scenario()}};
    Environment env = {{"v", pr_box()}, {"w", correlated_nc_box()}, {"w2", correlated_nc_box()}};
    Term t = parse_term(
        "((v +_1/4 (w +_2/3 w2))"
        " /[x1: 0>1, 1>0; x2: 0>0, 1>1; y1: 0>0, 1>1; y2: 0>1, 1>0])"
        "[x1?(1:y1,0:y2)]");
    Term n = normalize(ctx, t);
    CHECK(matches_normal_grammar(n));
    CHECK(typecheck(ctx, n) == typecheck(ctx, t));
    CHECK(eval_term(n, env) == eval_term(t, env));
}
