#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ctxlab/errors.hpp"
#include "ctxlab/protocols.hpp"
#include "test_helpers.hpp"

using namespace ctxlab;
using namespace ctxlab::testing;

namespace {

Run R(std::initializer_list<std::pair<const char*, const char*>> steps) {
    std::vector<std::pair<Measurement, std::string>> s;
    for (const auto& [m, o] : steps) s.emplace_back(M(m), std::string(o));
    return Run(std::move(s));
}

// "measure x1; if 0 measure y1 else y2" over the PR scenario
Protocol adaptive_pr_protocol() {
    return Protocol::from_runs({R({{"x1", "0"}, {"y1", "0"}}), R({{"x1", "0"}, {"y1", "1"}}),
                                R({{"x1", "1"}, {"y2", "0"}}), R({{"x1", "1"}, {"y2", "1"}})},
                               pr_scenario());
}

}  // namespace

TEST_CASE("run basics and merge") {
    Run r = R({{"x1", "0"}, {"y1", "1"}});
    CHECK(r.context() == VS({"x1", "y1"}));
    CHECK(r.serialize() == "x1=0;y1=1");
    CHECK(Run::deserialize(pr_scenario(), "x1=0;y1=1") == r);
    CHECK(Run{}.serialize() == "stop");

    // merge with the empty run
    CHECK(merge(r, Run{}) == r);
    CHECK(merge(Run{}, r) == r);

    // skip already-performed measurements
    Run a = R({{"x1", "0"}});
    Run b = R({{"x1", "0"}, {"y1", "1"}});
    CHECK(merge(a, b) == b);
    CHECK(merge(b, a) == b);

    // inconsistent runs collapse to the empty run
    Run c = R({{"x1", "1"}});
    CHECK(!consistent(a, c));
    CHECK(merge(a, c) == Run{});

    // context of a merge is the union
    Run d = R({{"y1", "1"}, {"x2", "0"}});
    CHECK(consistent(r, d));
    CHECK(merge(r, d).context() == VS({"x1", "x2", "y1"}));
}

TEST_CASE("merge is associative on pairwise-consistent runs") {
    Run a = R({{"x1", "0"}});
    Run b = R({{"x1", "0"}, {"y1", "1"}});
    Run c = R({{"y1", "1"}, {"x2", "0"}});
    CHECK(merge(merge(a, b), c) == merge(a, merge(b, c)));
}

TEST_CASE("is_protocol conditions") {
    Scenario s = pr_scenario();
    // counit protocol is valid
    CHECK(is_protocol({Run{}, R({{"x1", "0"}}), R({{"x1", "1"}})}, s).ok);
    // missing sibling outcome: condition (ii)
    auto c2 = is_protocol({Run{}, R({{"x1", "0"}})}, s);
    CHECK(!c2.ok);
    CHECK(c2.violation.find("(ii)") != std::string::npos);
    // missing prefix: condition (i)
    auto c1 = is_protocol({R({{"x1", "0"}}), R({{"x1", "1"}})}, s);
    CHECK(!c1.ok);
    CHECK(c1.violation.find("(i)") != std::string::npos);
    // non-deterministic branching: condition (iii)
    auto c3 = is_protocol({Run{}, R({{"x1", "0"}}), R({{"y1", "0"}}), R({{"y1", "1"}}),
                           R({{"x1", "1"}})},
                          s);
    CHECK(!c3.ok);
    CHECK(c3.violation.find("(iii)") != std::string::npos);
    // adaptive branching on different prefixes is fine
    CHECK(is_protocol(adaptive_pr_protocol().all_runs(), s).ok);
    // non-face run context
    auto c4 = is_protocol({Run{}, R({{"x1", "0"}}), R({{"x1", "1"}}),
                           R({{"x1", "0"}, {"x2", "0"}}), R({{"x1", "0"}, {"x2", "1"}})},
                          s);
    CHECK(!c4.ok);
}

TEST_CASE("protocol enumeration over the singleton scenario") {
    MpSpace space = MpSpace::build(Scenario::singleton(), -1);
    // {stop} and the star-measuring protocol
    CHECK(space.protocols().size() == 2);
    Scenario mp = space.materialize();
    CHECK(mp.measurements().size() == 2);
}

TEST_CASE("depth-1 protocols over PR mirror the base scenario") {
    MpSpace space = MpSpace::build(pr_scenario(), 1);
    CHECK(space.protocols().size() == 5);  // stop + one per measurement

    // counit protocols are compatible iff the base measurements are
    Protocol px = counit_protocol(pr_scenario(), M("x1"));
    Protocol py = counit_protocol(pr_scenario(), M("y1"));
    Protocol px2 = counit_protocol(pr_scenario(), M("x2"));
    CHECK(space.compatible({px, py}));
    CHECK(!space.compatible({px, px2}));
}

TEST_CASE("depth-2 protocol count over PR") {
    MpSpace space = MpSpace::build(pr_scenario(), 2);
    // stop + per first measurement (4), 3 continuations for each of 2 outcomes
    CHECK(space.protocols().size() == 1 + 4 * 9);
}

TEST_CASE("mp distribution of the adaptive PR protocol") {
    EmpiricalModel pr = pr_box();
    MpSpace space = MpSpace::build(pr_scenario(), 2);
    Protocol q = adaptive_pr_protocol();
    REQUIRE(space.contains(q));
    Distribution d = mp_distribution(pr, space, {q});
    Measurement qm = space.measurement_of(q);
    auto at = [&](const char* runserial) {
        return d.at(Assignment::make({{qm, runserial}}));
    };
    CHECK(at("x1=0;y1=0") == Rational(1, 2));
    CHECK(at("x1=0;y1=1") == Rational(0));
    CHECK(at("x1=1;y2=0") == Rational(0));
    CHECK(at("x1=1;y2=1") == Rational(1, 2));
}

TEST_CASE("MP(u) at the star protocol is a point mass") {
    EmpiricalModel u = singleton_model();
    MpSpace space = MpSpace::build(u.scenario(), -1);
    Measurement star = u.scenario().measurements().front();
    Distribution d = mp_distribution(u, space, {counit_protocol(u.scenario(), star)});
    CHECK(d.weights().size() == 1);
}

TEST_CASE("inconsistent run pairs get zero joint weight") {
    EmpiricalModel pr = pr_box();
    MpSpace space = MpSpace::build(pr_scenario(), 2);
    // protocols "measure x1 then y1" and "measure y1 then x1" are compatible;
    // joint outcomes disagreeing on shared measurements must vanish
    Protocol q1 = Protocol::from_runs({R({{"x1", "0"}, {"y1", "0"}}),
                                       R({{"x1", "0"}, {"y1", "1"}}),
                                       R({{"x1", "1"}, {"y1", "0"}}),
                                       R({{"x1", "1"}, {"y1", "1"}})},
                                      pr_scenario());
    Protocol q2 = Protocol::from_runs({R({{"y1", "0"}, {"x1", "0"}}),
                                       R({{"y1", "0"}, {"x1", "1"}}),
                                       R({{"y1", "1"}, {"x1", "0"}}),
                                       R({{"y1", "1"}, {"x1", "1"}})},
                                      pr_scenario());
    REQUIRE(space.compatible({q1, q2}));
    Distribution d = mp_distribution(pr, space, {q1, q2});
    Assignment clash = Assignment::make(
        {{space.measurement_of(q1), "x1=0;y1=0"}, {space.measurement_of(q2), "y1=1;x1=1"}});
    CHECK(d.at(clash) == Rational(0));
    Assignment agree = Assignment::make(
        {{space.measurement_of(q1), "x1=0;y1=0"}, {space.measurement_of(q2), "y1=0;x1=0"}});
    CHECK(d.at(agree) == Rational(1, 2));
}

TEST_CASE("MP model of PR validates at depth 1 and 2") {
    EmpiricalModel pr = pr_box();
    for (int depth : {1, 2}) {
        MpSpace space = MpSpace::build(pr_scenario(), depth);
        EmpiricalModel m = mp_model(pr, space);
        CHECK(validate_model(m).ok());
    }
}

TEST_CASE("pushforward along the counit recovers the base model") {
    EmpiricalModel pr = pr_box();
    MpSpace space = MpSpace::build(pr_scenario(), 2);
    DeterministicMorphism eps = counit_morphism(pr_scenario(), 2);
    EmpiricalModel mp = mp_model(pr, space);
    CHECK(pushforward(eps, mp) == pr);
}

TEST_CASE("counit extension is the identity") {
    for (const Scenario& s : {Scenario::singleton(), pr_scenario()}) {
        int depth = s.measurements().size() > 2 ? 2 : -1;
        MpSpace space = MpSpace::build(s, depth);
        MpMorphism eps = mp_counit(space);
        MpToMpMorphism ext = mp_extend(eps, space, space);
        for (const Protocol& q : space.protocols()) {
            CHECK(ext.pi.at(q.serialize()) == q);
            for (const auto& r : q.maximal_runs())
                CHECK(ext.h.at(q.serialize()).at(r.serialize()) == r.serialize());
        }
    }
}

TEST_CASE("counit after extension recovers the morphism") {
    // m : MP(PR) -> Y for a single-measurement target Y with adaptive protocol
    Scenario y = Scenario::make({{M("m"), {"a", "b"}}},
                                SimplicialComplex::from_facets({VS({"m"})}));
    MpSpace space = MpSpace::build(pr_scenario(), 2);
    MpMorphism m;
    m.source = space;
    m.target = y;
    Protocol q = adaptive_pr_protocol();
    m.pi.emplace(M("m"), q);
    std::map<std::string, std::string> hm;
    hm.emplace("x1=0;y1=0", "a");
    hm.emplace("x1=0;y1=1", "b");
    hm.emplace("x1=1;y2=0", "b");
    hm.emplace("x1=1;y2=1", "a");
    m.h.emplace(M("m"), hm);
    m.validate();

    MpSpace yspace = MpSpace::build(y, -1);
    MpToMpMorphism ext = mp_extend(m, space, yspace);
    MpMorphism back = compose_counit(ext, y);
    CHECK(back.equal_on(m));
}

TEST_CASE("third co-Kleisli law on a two-measurement example") {
    // Z = PR, Y = one biased relay measurement, X = one output measurement
    Scenario yscen = Scenario::make({{M("m"), {"a", "b"}}},
                                    SimplicialComplex::from_facets({VS({"m"})}));
    Scenario xscen = Scenario::make({{M("out"), {"0", "1"}}},
                                    SimplicialComplex::from_facets({VS({"out"})}));
    MpSpace zspace = MpSpace::build(pr_scenario(), 2);
    MpSpace yspace = MpSpace::build(yscen, -1);

    MpMorphism n;  // MP(Z) -> Y
    n.source = zspace;
    n.target = yscen;
    Protocol q = adaptive_pr_protocol();
    n.pi.emplace(M("m"), q);
    n.h.emplace(M("m"), std::map<std::string, std::string>{{"x1=0;y1=0", "a"},
                                                           {"x1=0;y1=1", "b"},
                                                           {"x1=1;y2=0", "b"},
                                                           {"x1=1;y2=1", "a"}});
    n.validate();

    MpMorphism m;  // MP(Y) -> X
    m.source = yspace;
    m.target = xscen;
    Protocol my = counit_protocol(yscen, M("m"));
    m.pi.emplace(M("out"), my);
    m.h.emplace(M("out"),
                std::map<std::string, std::string>{{"m=a", "1"}, {"m=b", "0"}});
    m.validate();

    MpToMpMorphism ndag = mp_extend(n, zspace, yspace);
    MpMorphism m_after_ndag = compose(m, ndag);
    MpSpace xspace = MpSpace::build(xscen, -1);
    MpToMpMorphism lhs = mp_extend(m_after_ndag, zspace, xspace);
    MpToMpMorphism mdag = mp_extend(m, yspace, xspace);
    MpToMpMorphism rhs = compose_mp(mdag, ndag);
    CHECK(lhs.equal_on(rhs));
}

TEST_CASE("comonoidal morphism at depth 1 over PR and u") {
    Scenario u = Scenario::singleton();
    DeterministicMorphism como = comonoidal_morphism(pr_scenario(), u, 1);
    como.validate();
    EmpiricalModel joint = tensor(pr_box(), singleton_model());
    MpSpace jspace = MpSpace::build(joint.scenario(), 1);
    EmpiricalModel lhs = pushforward(como, mp_model(joint, jspace));

    MpSpace prspace = MpSpace::build(pr_scenario(), 1);
    MpSpace uspace = MpSpace::build(u, 1);
    EmpiricalModel rhs = tensor(mp_model(pr_box(), prspace), mp_model(singleton_model(), uspace));
    CHECK(lhs == rhs);
}

TEST_CASE("depth monotonicity: lower-depth protocols embed") {
    MpSpace d1 = MpSpace::build(pr_scenario(), 1);
    MpSpace d2 = MpSpace::build(pr_scenario(), 2);
    EmpiricalModel pr = pr_box();
    for (const Protocol& p : d1.protocols()) {
        CHECK(d2.contains(p));
        CHECK(mp_distribution(pr, d1, {p}) == mp_distribution(pr, d2, {p}));
    }
}

TEST_CASE("mp_extend reports insufficient depth") {
    // extension of the adaptive morphism needs depth 2; a depth-1 source
    // cannot hold the interpreting protocol
    Scenario y = Scenario::make({{M("m"), {"a", "b"}}},
                                SimplicialComplex::from_facets({VS({"m"})}));
    MpSpace space = MpSpace::build(pr_scenario(), 2);
    MpSpace shallow = MpSpace::build(pr_scenario(), 1);
    MpMorphism m;
    m.source = space;
    m.target = y;
    m.pi.emplace(M("m"), adaptive_pr_protocol());
    m.h.emplace(M("m"), std::map<std::string, std::string>{{"x1=0;y1=0", "a"},
                                                           {"x1=0;y1=1", "b"},
                                                           {"x1=1;y2=0", "b"},
                                                           {"x1=1;y2=1", "a"}});
    MpSpace yspace = MpSpace::build(y, -1);
    CHECK(extension_depth(m, 1) == 2);
    CHECK_THROWS_AS(mp_extend(m, shallow, yspace), DomainError);
}
