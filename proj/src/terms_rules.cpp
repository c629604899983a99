#include <algorithm>

#include "ctxlab/errors.hpp"
#include "ctxlab/terms.hpp"

// The oriented equational theory, one rewrite per paper equation, always
// left-to-right. Rules assume resolved terms (explicit facets/codomains);
// each apply() wrapper resolves first and refuses (nullopt) whenever the
// rewritten side fails to typecheck, which realizes the blanket "both sides
// well-typed" proviso.

namespace ctxlab {

namespace {

using K = Term::Kind;

Measurement cond_name(const CondData& c) { return Measurement::conditional(c.x, c.branches); }

std::vector<Measurement> targets_of(const CondData& c) {
    std::vector<Measurement> out;
    for (const auto& [o, y] : c.branches) out.push_back(y);
    return out;
}

const CoarseEntry& entry_at(const CoarseData& h, const Measurement& x) {
    for (const auto& [m, e] : h)
        if (m == x) return e;
    throw DomainError("coarse family has no entry for " + x.id());
}

std::string apply_entry(const CoarseEntry& e, const std::string& o) {
    for (const auto& [from, to] : e.pairs)
        if (from == o) return to;
    throw DomainError("outcome map undefined at '" + o + "'");
}

std::vector<std::string> entry_codomain(const CoarseEntry& e) {
    if (e.codomain) return *e.codomain;
    std::vector<std::string> out;
    for (const auto& [from, to] : e.pairs)
        if (std::find(out.begin(), out.end(), to) == out.end()) out.push_back(to);
    return out;
}

bool entry_surjective(const CoarseEntry& e) {
    auto cod = entry_codomain(e);
    for (const auto& c : cod) {
        bool hit = false;
        for (const auto& [from, to] : e.pairs)
            if (to == c) hit = true;
        if (!hit) return false;
    }
    return true;
}

// Tagged copairing [h, j] of coarse families.
CoarseData copair(const CoarseData& h, const CoarseData& j) {
    CoarseData out;
    for (const auto& [m, e] : h) out.emplace_back(Measurement::left(m), e);
    for (const auto& [m, e] : j) out.emplace_back(Measurement::right(m), e);
    return out;
}

// Tagged copairing [f, g] of pullback maps over the given combined domain.
PullbackData copair(const PullbackData& f, const PullbackData& g, bool as_join) {
    PullbackData out;
    for (const auto& [neu, old] : f.vmap)
        out.vmap.emplace_back(Measurement::left(neu), Measurement::left(old));
    for (const auto& [neu, old] : g.vmap)
        out.vmap.emplace_back(Measurement::right(neu), Measurement::right(old));
    SimplicialComplex fd = SimplicialComplex::from_facets(f.facets.value(), {});
    SimplicialComplex gd = SimplicialComplex::from_facets(g.facets.value(), {});
    // domains may have isolated vertices not present in any listed facet
    VertexSet fv, gv;
    for (const auto& [neu, _] : f.vmap) fv.push_back(neu);
    for (const auto& [neu, _] : g.vmap) gv.push_back(neu);
    fd = SimplicialComplex::from_facets(f.facets.value(), make_vertex_set(std::move(fv)));
    gd = SimplicialComplex::from_facets(g.facets.value(), make_vertex_set(std::move(gv)));
    out.facets = (as_join ? join(fd, gd) : coproduct(fd, gd)).facets();
    return out;
}

CondData tag_left(const CondData& c) {
    Measurement::Branches branches;
    for (const auto& [o, y] : c.branches) branches.emplace_back(o, Measurement::left(y));
    return CondData{Measurement::left(c.x), std::move(branches)};
}

// Build + typecheck guard shared by every rule.
std::optional<Term> guarded(const TypingContext& ctx, Term rhs) {
    try {
        typecheck(ctx, rhs);
        return rhs;
    } catch (const IllTyped&) {
        return std::nullopt;
    } catch (const DomainError&) {
        return std::nullopt;
    }
}

std::optional<Term> r1(const TypingContext& ctx, const Term& t) {
    if (t.kind() != K::Choice) return std::nullopt;
    return guarded(ctx, Term::choice(t.child(1), t.child(0)));
}

std::optional<Term> r2(const TypingContext& ctx, const Term& t) {
    if (t.kind() != K::Choice || t.child(1).kind() != K::Choice) return std::nullopt;
    return guarded(ctx, Term::choice(Term::choice(t.child(0), t.child(1).child(0)),
                                     t.child(1).child(1)));
}

std::optional<Term> r3(const TypingContext& ctx, const Term& t) {
    if (t.kind() != K::Choice) return std::nullopt;
    if (t.child(1).kind() == K::Zero) return guarded(ctx, t.child(0));
    if (t.child(0).kind() == K::Zero) return guarded(ctx, t.child(1));
    return std::nullopt;
}

std::optional<Term> r4(const TypingContext& ctx, const Term& t) {
    if (t.kind() != K::Tensor) return std::nullopt;
    return guarded(ctx, Term::tensor(t.child(1), t.child(0)));
}

std::optional<Term> r5(const TypingContext& ctx, const Term& t) {
    if (t.kind() != K::Tensor || t.child(1).kind() != K::Tensor) return std::nullopt;
    return guarded(ctx, Term::tensor(Term::tensor(t.child(0), t.child(1).child(0)),
                                     t.child(1).child(1)));
}

std::optional<Term> r6(const TypingContext& ctx, const Term& t) {
    if (t.kind() != K::Tensor) return std::nullopt;
    if (t.child(1).kind() == K::Zero) return guarded(ctx, t.child(0));
    if (t.child(0).kind() == K::Zero) return guarded(ctx, t.child(1));
    return std::nullopt;
}

// a +_0 b = a is read through convex commutativity (the evaluator gives
// lambda to the first argument): the sound orientation is a +_0 b -> b.
std::optional<Term> r7(const TypingContext& ctx, const Term& t) {
    if (t.kind() != K::Mix || t.lambda() != 0) return std::nullopt;
    return guarded(ctx, t.child(1));
}

std::optional<Term> r8(const TypingContext& ctx, const Term& t) {
    if (t.kind() != K::Mix || !(t.child(0) == t.child(1))) return std::nullopt;
    return guarded(ctx, t.child(0));
}

std::optional<Term> r9(const TypingContext& ctx, const Term& t) {
    if (t.kind() != K::Mix) return std::nullopt;
    return guarded(ctx, Term::mix(t.child(1), 1 - t.lambda(), t.child(0)));
}

std::optional<Term> r10(const TypingContext& ctx, const Term& t) {
    if (t.kind() != K::Mix || t.child(0).kind() != K::Mix) return std::nullopt;
    Rational l = t.child(0).lambda(), lp = t.lambda();
    if (l * lp == 1) return std::nullopt;  // degenerate; eliminate +_1 first
    Rational mu = (lp - l * lp) / (1 - l * lp);
    return guarded(ctx, Term::mix(t.child(0).child(0), l * lp,
                                  Term::mix(t.child(0).child(1), mu, t.child(1))));
}

std::optional<Term> r11(const TypingContext& ctx, const Term& t) {
    if (t.kind() != K::Pullback || t.child().kind() != K::Pullback) return std::nullopt;
    const PullbackData& g = t.pullback_data();
    const PullbackData& f = t.child().pullback_data();
    auto f_of = [&](const Measurement& m) -> const Measurement& {
        for (const auto& [neu, old] : f.vmap)
            if (neu == m) return old;
        throw DomainError("composition outside inner map domain");
    };
    PullbackData comp;
    comp.facets = g.facets;
    try {
        for (const auto& [neu, old] : g.vmap) comp.vmap.emplace_back(neu, f_of(old));
    } catch (const DomainError&) {
        return std::nullopt;
    }
    return guarded(ctx, Term::pullback(std::move(comp), t.child().child()));
}

std::optional<Term> r12(const TypingContext& ctx, const Term& t) {
    if (t.kind() != K::Coarse || t.child().kind() != K::Coarse) return std::nullopt;
    const CoarseData& j = t.coarse_data();
    const CoarseData& h = t.child().coarse_data();
    CoarseData comp;
    try {
        for (const auto& [x, he] : h) {
            const CoarseEntry& je = entry_at(j, x);
            CoarseEntry e;
            for (const auto& [o, mid] : he.pairs) e.pairs.emplace_back(o, apply_entry(je, mid));
            e.codomain = entry_codomain(je);
            comp.emplace_back(x, std::move(e));
        }
    } catch (const DomainError&) {
        return std::nullopt;
    }
    return guarded(ctx, Term::coarse(t.child().child(), std::move(comp)));
}

std::optional<Term> r13(const TypingContext& ctx, const Term& t) {
    if (t.kind() != K::Pullback || t.child().kind() != K::Coarse) return std::nullopt;
    const PullbackData& f = t.pullback_data();
    const CoarseData& h = t.child().coarse_data();
    CoarseData fh;
    try {
        for (const auto& [neu, old] : f.vmap) fh.emplace_back(neu, entry_at(h, old));
    } catch (const DomainError&) {
        return std::nullopt;
    }
    return guarded(ctx, Term::coarse(Term::pullback(f, t.child().child()), std::move(fh)));
}

std::optional<Term> r14(const TypingContext& ctx, const Term& t) {
    if (t.kind() != K::Pullback || t.child().kind() != K::Mix) return std::nullopt;
    const Term& m = t.child();
    return guarded(ctx, Term::mix(Term::pullback(t.pullback_data(), m.child(0)), m.lambda(),
                                  Term::pullback(t.pullback_data(), m.child(1))));
}

std::optional<Term> r15(const TypingContext& ctx, const Term& t) {
    if (t.kind() != K::Coarse || t.child().kind() != K::Mix) return std::nullopt;
    const Term& m = t.child();
    return guarded(ctx, Term::mix(Term::coarse(m.child(0), t.coarse_data()), m.lambda(),
                                  Term::coarse(m.child(1), t.coarse_data())));
}

std::optional<Term> r16(const TypingContext& ctx, const Term& t) {
    if (t.kind() != K::Choice || t.child(0).kind() != K::Mix || t.child(1).kind() != K::Mix)
        return std::nullopt;
    const Term& l = t.child(0);
    const Term& r = t.child(1);
    if (l.lambda() != r.lambda()) return std::nullopt;
    return guarded(ctx, Term::mix(Term::choice(l.child(0), r.child(0)), l.lambda(),
                                  Term::choice(l.child(1), r.child(1))));
}

std::optional<Term> r17(const TypingContext& ctx, const Term& t) {
    if (t.kind() != K::Tensor || t.child(0).kind() != K::Mix) return std::nullopt;
    const Term& m = t.child(0);
    return guarded(ctx, Term::mix(Term::tensor(m.child(0), t.child(1)), m.lambda(),
                                  Term::tensor(m.child(1), t.child(1))));
}

std::optional<Term> r18(const TypingContext& ctx, const Term& t) {
    if (t.kind() != K::Cond || t.child().kind() != K::Mix) return std::nullopt;
    const Term& m = t.child();
    return guarded(ctx, Term::mix(Term::cond(m.child(0), t.cond_data()), m.lambda(),
                                  Term::cond(m.child(1), t.cond_data())));
}

std::optional<Term> r19(const TypingContext& ctx, const Term& t) {
    if (t.kind() != K::Choice || t.child(0).kind() != K::Coarse ||
        t.child(1).kind() != K::Coarse)
        return std::nullopt;
    return guarded(ctx,
                   Term::coarse(Term::choice(t.child(0).child(), t.child(1).child()),
                                copair(t.child(0).coarse_data(), t.child(1).coarse_data())));
}

std::optional<Term> r20(const TypingContext& ctx, const Term& t) {
    if (t.kind() != K::Tensor || t.child(0).kind() != K::Coarse ||
        t.child(1).kind() != K::Coarse)
        return std::nullopt;
    return guarded(ctx,
                   Term::coarse(Term::tensor(t.child(0).child(), t.child(1).child()),
                                copair(t.child(0).coarse_data(), t.child(1).coarse_data())));
}

std::optional<Term> r21(const TypingContext& ctx, const Term& t) {
    if (t.kind() != K::Choice || t.child(0).kind() != K::Pullback ||
        t.child(1).kind() != K::Pullback)
        return std::nullopt;
    PullbackData fg =
        copair(t.child(0).pullback_data(), t.child(1).pullback_data(), /*as_join=*/false);
    return guarded(ctx, Term::pullback(std::move(fg),
                                       Term::choice(t.child(0).child(), t.child(1).child())));
}

std::optional<Term> r22(const TypingContext& ctx, const Term& t) {
    if (t.kind() != K::Tensor || t.child(0).kind() != K::Pullback ||
        t.child(1).kind() != K::Pullback)
        return std::nullopt;
    PullbackData fg =
        copair(t.child(0).pullback_data(), t.child(1).pullback_data(), /*as_join=*/true);
    return guarded(ctx, Term::pullback(std::move(fg),
                                       Term::tensor(t.child(0).child(), t.child(1).child())));
}

std::optional<Term> r23(const TypingContext& ctx, const Term& t) {
    if (t.kind() != K::Cond || t.child().kind() != K::Cond) return std::nullopt;
    const CondData& outer = t.cond_data();
    const CondData& inner = t.child().cond_data();
    Measurement inner_name = cond_name(inner);
    // side condition: the outer conditional must not use the inner one
    if (outer.x == inner_name) return std::nullopt;
    for (const auto& [o, y] : outer.branches)
        if (y == inner_name) return std::nullopt;
    return guarded(ctx, Term::cond(Term::cond(t.child().child(), outer), inner));
}

std::optional<Term> r24(const TypingContext& ctx, const Term& t) {
    if (t.kind() != K::Cond || t.child().kind() != K::Pullback) return std::nullopt;
    const CondData& c = t.cond_data();
    const PullbackData& f = t.child().pullback_data();
    auto f_of = [&](const Measurement& m) -> const Measurement& {
        for (const auto& [neu, old] : f.vmap)
            if (neu == m) return old;
        throw DomainError("vertex outside map domain");
    };
    CondData inner;
    PullbackData ext = f;
    try {
        inner.x = f_of(c.x);
        for (const auto& [o, y] : c.branches) inner.branches.emplace_back(o, f_of(y));
        SimplicialComplex dom = SimplicialComplex::from_facets(f.facets.value(), [&] {
            VertexSet vs;
            for (const auto& [neu, _] : f.vmap) vs.push_back(neu);
            return make_vertex_set(std::move(vs));
        }());
        ext.facets = extend_complex(dom, c.x, targets_of(c), cond_name(c)).facets();
        ext.vmap.emplace_back(cond_name(c), cond_name(inner));
    } catch (const DomainError&) {
        return std::nullopt;
    }
    return guarded(ctx,
                   Term::pullback(std::move(ext), Term::cond(t.child().child(), std::move(inner))));
}

std::optional<Term> r25(const TypingContext& ctx, const Term& t) {
    if (t.kind() != K::Cond || t.child().kind() != K::Coarse) return std::nullopt;
    const CondData& c = t.cond_data();
    const CoarseData& h = t.child().coarse_data();
    try {
        const CoarseEntry& hx = entry_at(h, c.x);
        // side condition: h_x surjective, else the two sides live on
        // non-isomorphic complexes (see the notes on eq. (25))
        if (!entry_surjective(hx)) return std::nullopt;
        auto branch_of = [&](const std::string& label) -> const Measurement& {
            for (const auto& [o, y] : c.branches)
                if (o == label) return y;
            throw DomainError("branch label missing: " + label);
        };
        CondData inner;
        inner.x = c.x;
        for (const auto& [o, q] : hx.pairs) inner.branches.emplace_back(o, branch_of(q));
        // extended family: pairs (o,o') -> (h_x(o), h_{y_{h_x(o)}}(o'))
        CoarseEntry tilde;
        for (const auto& [o, q] : hx.pairs) {
            const Measurement& yq = branch_of(q);
            const CoarseEntry& hy = entry_at(h, yq);
            for (const auto& [o2, _] : hy.pairs)
                tilde.pairs.emplace_back(pair_label(o, o2),
                                         pair_label(q, apply_entry(hy, o2)));
        }
        std::vector<std::string> cod;
        for (const auto& q : entry_codomain(hx))
            for (const auto& q2 : entry_codomain(entry_at(h, branch_of(q))))
                cod.push_back(pair_label(q, q2));
        tilde.codomain = std::move(cod);
        CoarseData htilde = h;
        htilde.emplace_back(cond_name(inner), std::move(tilde));
        return guarded(ctx, Term::coarse(Term::cond(t.child().child(), std::move(inner)),
                                         std::move(htilde)));
    } catch (const DomainError&) {
        return std::nullopt;
    }
}

std::optional<Term> r26(const TypingContext& ctx, const Term& t) {
    if (t.kind() != K::Choice || t.child(0).kind() != K::Cond) return std::nullopt;
    return guarded(ctx, Term::cond(Term::choice(t.child(0).child(), t.child(1)),
                                   tag_left(t.child(0).cond_data())));
}

std::optional<Term> r27(const TypingContext& ctx, const Term& t) {
    if (t.kind() != K::Tensor || t.child(0).kind() != K::Cond) return std::nullopt;
    return guarded(ctx, Term::cond(Term::tensor(t.child(0).child(), t.child(1)),
                                   tag_left(t.child(0).cond_data())));
}

std::optional<Term> r28(const TypingContext& ctx, const Term& t) {
    if (t.kind() != K::Choice) return std::nullopt;
    try {
        Scenario sa = typecheck(ctx, t.child(0));
        Scenario sb = typecheck(ctx, t.child(1));
        PullbackData incl;
        SimplicialComplex cop = coproduct(sa.complex(), sb.complex());
        for (const auto& v : cop.vertices()) incl.vmap.emplace_back(v, v);
        incl.facets = cop.facets();
        return guarded(ctx,
                       Term::pullback(std::move(incl), Term::tensor(t.child(0), t.child(1))));
    } catch (const IllTyped&) {
        return std::nullopt;
    }
}

template <std::optional<Term> (*Impl)(const TypingContext&, const Term&)>
std::optional<Term> resolved(const TypingContext& ctx, const Term& t) {
    try {
        return Impl(ctx, resolve_term(ctx, t));
    } catch (const IllTyped&) {
        return std::nullopt;
    }
}

}  // namespace

const std::vector<RewriteRule>& equational_rules() {
    static const std::vector<RewriteRule> rules = {
        {1, "choice commutativity", resolved<r1>},
        {2, "choice associativity", resolved<r2>},
        {3, "choice unit", resolved<r3>},
        {4, "tensor commutativity", resolved<r4>},
        {5, "tensor associativity", resolved<r5>},
        {6, "tensor unit", resolved<r6>},
        {7, "mix zero-weight elimination", resolved<r7>},
        {8, "mix idempotence", resolved<r8>},
        {9, "mix commutativity", resolved<r9>},
        {10, "mix associativity", resolved<r10>},
        {11, "pullback composition", resolved<r11>},
        {12, "coarse-graining composition", resolved<r12>},
        {13, "pullback over coarse-graining", resolved<r13>},
        {14, "pullback over mix", resolved<r14>},
        {15, "coarse-graining over mix", resolved<r15>},
        {16, "choice over mixes", resolved<r16>},
        {17, "tensor over mix", resolved<r17>},
        {18, "conditional over mix", resolved<r18>},
        {19, "choice of coarse-grainings", resolved<r19>},
        {20, "tensor of coarse-grainings", resolved<r20>},
        {21, "choice of pullbacks", resolved<r21>},
        {22, "tensor of pullbacks", resolved<r22>},
        {23, "conditional swap", resolved<r23>},
        {24, "conditional over pullback", resolved<r24>},
        {25, "conditional over coarse-graining", resolved<r25>},
        {26, "conditional over choice", resolved<r26>},
        {27, "conditional over tensor", resolved<r27>},
        {28, "choice elimination", resolved<r28>},
    };
    return rules;
}

}  // namespace ctxlab
