#include <algorithm>
#include <stdexcept>

#include "ctxlab/errors.hpp"
#include "ctxlab/terms.hpp"

// Normal form pipeline (staged, as in the normal-form proposition's proof):
//   1. eliminate & rewriting a & b into i*(a ⊗ b);
//   2. float probabilistic mixes to the top and right-associate them;
//   3. hoist measurement translations and outcome coarse-grainings to a
//      single (f* t2)/h wrapper per mix component, fusing adjacent ones;
//   4. float conditionals above tensors, right-associating tensor chains.
// Stages 3-4 keep every component's outer scenario literally equal to the
// original term's scenario by folding the induced vertex renamings into the
// wrapper, so the top-level mixes stay well-typed.

namespace ctxlab {

namespace {

using K = Term::Kind;

Measurement cond_name(const CondData& c) { return Measurement::conditional(c.x, c.branches); }

// ---- stage 1 ---------------------------------------------------------------

Term eliminate_choice(const TypingContext& ctx, const Term& t) {
    switch (t.kind()) {
        case K::Var:
        case K::Zero:
        case K::One:
            return t;
        case K::Pullback:
            return Term::pullback(t.pullback_data(), eliminate_choice(ctx, t.child()));
        case K::Coarse:
            return Term::coarse(eliminate_choice(ctx, t.child()), t.coarse_data());
        case K::Mix:
            return Term::mix(eliminate_choice(ctx, t.child(0)), t.lambda(),
                             eliminate_choice(ctx, t.child(1)));
        case K::Tensor:
            return Term::tensor(eliminate_choice(ctx, t.child(0)),
                                eliminate_choice(ctx, t.child(1)));
        case K::Cond:
            return Term::cond(eliminate_choice(ctx, t.child()), t.cond_data());
        case K::Choice: {
            Term a = eliminate_choice(ctx, t.child(0));
            Term b = eliminate_choice(ctx, t.child(1));
            Scenario sa = typecheck(ctx, a);
            Scenario sb = typecheck(ctx, b);
            SimplicialComplex cop = coproduct(sa.complex(), sb.complex());
            PullbackData incl;
            for (const auto& v : cop.vertices()) incl.vmap.emplace_back(v, v);
            incl.facets = cop.facets();
            return Term::pullback(std::move(incl), Term::tensor(std::move(a), std::move(b)));
        }
    }
    throw std::logic_error("unknown term kind");
}

// ---- stage 2 ---------------------------------------------------------------

Term float_mixes(const Term& t) {
    switch (t.kind()) {
        case K::Var:
        case K::Zero:
        case K::One:
            return t;
        case K::Mix:
            return Term::mix(float_mixes(t.child(0)), t.lambda(), float_mixes(t.child(1)));
        case K::Choice:
            throw std::logic_error("choice must be eliminated before mix floating");
        case K::Pullback: {
            Term c = float_mixes(t.child());
            if (c.kind() == K::Mix)
                return Term::mix(float_mixes(Term::pullback(t.pullback_data(), c.child(0))),
                                 c.lambda(),
                                 float_mixes(Term::pullback(t.pullback_data(), c.child(1))));
            return Term::pullback(t.pullback_data(), std::move(c));
        }
        case K::Coarse: {
            Term c = float_mixes(t.child());
            if (c.kind() == K::Mix)
                return Term::mix(float_mixes(Term::coarse(c.child(0), t.coarse_data())),
                                 c.lambda(),
                                 float_mixes(Term::coarse(c.child(1), t.coarse_data())));
            return Term::coarse(std::move(c), t.coarse_data());
        }
        case K::Cond: {
            Term c = float_mixes(t.child());
            if (c.kind() == K::Mix)
                return Term::mix(float_mixes(Term::cond(c.child(0), t.cond_data())), c.lambda(),
                                 float_mixes(Term::cond(c.child(1), t.cond_data())));
            return Term::cond(std::move(c), t.cond_data());
        }
        case K::Tensor: {
            Term a = float_mixes(t.child(0));
            Term b = float_mixes(t.child(1));
            if (a.kind() == K::Mix)
                return Term::mix(float_mixes(Term::tensor(a.child(0), b)), a.lambda(),
                                 float_mixes(Term::tensor(a.child(1), b)));
            if (b.kind() == K::Mix)
                return Term::mix(float_mixes(Term::tensor(a, b.child(0))), b.lambda(),
                                 float_mixes(Term::tensor(a, b.child(1))));
            return Term::tensor(std::move(a), std::move(b));
        }
    }
    throw std::logic_error("unknown term kind");
}

void collect_mix(const Term& t, const Rational& scale,
                 std::vector<std::pair<Rational, Term>>& out) {
    if (t.kind() == K::Mix) {
        collect_mix(t.child(0), scale * t.lambda(), out);
        collect_mix(t.child(1), scale * (1 - t.lambda()), out);
        return;
    }
    if (scale != 0) out.emplace_back(scale, t);
}

// ---- stage 3 ---------------------------------------------------------------

const CoarseEntry& entry_at(const CoarseData& h, const Measurement& x) {
    for (const auto& [m, e] : h)
        if (m == x) return e;
    throw std::logic_error("missing coarse entry for " + x.id());
}

std::string apply_entry(const CoarseEntry& e, const std::string& o) {
    for (const auto& [from, to] : e.pairs)
        if (from == o) return to;
    throw std::logic_error("outcome map undefined at '" + o + "'");
}

Measurement map_of(const PullbackData& f, const Measurement& m) {
    for (const auto& [neu, old] : f.vmap)
        if (neu == m) return old;
    throw std::logic_error("vertex map undefined at " + m.id());
}

struct Wrapped {
    Scenario outer;          // scenario of the original subterm
    PullbackData f;          // outer complex -> core scenario
    Term core;               // tensors/conditionals over base cases
    Scenario core_scenario;
    CoarseData h;            // keyed by outer vertices
};

Wrapped identity_wrap(const Term& core, const Scenario& s) {
    Wrapped w{s, {}, core, s, {}};
    for (const auto& v : s.measurements()) w.f.vmap.emplace_back(v, v);
    w.f.facets = s.complex().facets();
    for (const auto& v : s.measurements()) {
        CoarseEntry e;
        for (const auto& o : s.outcomes(v)) e.pairs.emplace_back(o, o);
        e.codomain = s.outcomes(v);
        w.h.emplace_back(v, std::move(e));
    }
    return w;
}

Wrapped build_wrapped(const TypingContext& ctx, const Term& t);

Wrapped wrap_tensor(const TypingContext& ctx, const Term& t) {
    Wrapped a = build_wrapped(ctx, t.child(0));
    Wrapped b = build_wrapped(ctx, t.child(1));
    Wrapped w{join_scenarios(a.outer, b.outer),
              {},
              Term::tensor(a.core, b.core),
              join_scenarios(a.core_scenario, b.core_scenario),
              {}};
    for (const auto& [neu, old] : a.f.vmap)
        w.f.vmap.emplace_back(Measurement::left(neu), Measurement::left(old));
    for (const auto& [neu, old] : b.f.vmap)
        w.f.vmap.emplace_back(Measurement::right(neu), Measurement::right(old));
    w.f.facets = w.outer.complex().facets();
    for (const auto& [m, e] : a.h) w.h.emplace_back(Measurement::left(m), e);
    for (const auto& [m, e] : b.h) w.h.emplace_back(Measurement::right(m), e);
    return w;
}

Wrapped wrap_cond(const TypingContext& ctx, const Term& t) {
    Wrapped a = build_wrapped(ctx, t.child());
    const CondData& c = t.cond_data();
    Measurement name_outer = cond_name(c);
    Scenario outer2 = extend_conditional(a.outer, c.x, c.branches);

    auto branch_of = [&](const std::string& label) -> const Measurement& {
        for (const auto& [o, y] : c.branches)
            if (o == label) return y;
        throw std::logic_error("missing conditional branch for label " + label);
    };

    const CoarseEntry& hx = entry_at(a.h, c.x);
    Measurement fx = map_of(a.f, c.x);
    CondData inner;
    inner.x = fx;
    for (const auto& [o_core, q] : hx.pairs) {
        Measurement target = map_of(a.f, branch_of(q));
        if (target == fx)
            throw DomainError(
                "normalization blocked: the hoisted translation collapses conditional "
                "site " + c.x.id() + " with branch target " + branch_of(q).id() +
                " (no normal form reachable by the equational theory)");
        inner.branches.emplace_back(o_core, target);
    }
    Scenario core2 = extend_conditional(a.core_scenario, inner.x, inner.branches);
    Measurement name_inner = cond_name(inner);

    Wrapped w{outer2, a.f, Term::cond(a.core, inner), core2, a.h};
    w.f.vmap.emplace_back(name_outer, name_inner);
    w.f.facets = outer2.complex().facets();
    CoarseEntry tilde;
    for (const auto& [o_core, q] : hx.pairs) {
        const CoarseEntry& hy = entry_at(a.h, branch_of(q));
        for (const auto& [o2, _] : hy.pairs)
            tilde.pairs.emplace_back(pair_label(o_core, o2),
                                     pair_label(q, apply_entry(hy, o2)));
    }
    tilde.codomain = outer2.outcomes(name_outer);
    w.h.emplace_back(name_outer, std::move(tilde));
    return w;
}

Wrapped build_wrapped(const TypingContext& ctx, const Term& t) {
    switch (t.kind()) {
        case K::Var:
        case K::Zero:
        case K::One:
            return identity_wrap(t, typecheck(ctx, t));
        case K::Tensor:
            return wrap_tensor(ctx, t);
        case K::Cond:
            return wrap_cond(ctx, t);
        case K::Coarse: {
            Wrapped a = build_wrapped(ctx, t.child());
            CoarseData j = t.coarse_data();
            Wrapped w{a.outer, a.f, a.core, a.core_scenario, {}};
            for (const auto& [m, he] : a.h) {
                const CoarseEntry& je = entry_at(j, m);
                CoarseEntry e;
                for (const auto& [o, mid] : he.pairs)
                    e.pairs.emplace_back(o, apply_entry(je, mid));
                e.codomain = je.codomain;
                w.h.emplace_back(m, std::move(e));
            }
            OutcomeFamily jf;
            for (const auto& [m, je] : j) {
                OutcomeMap om;
                om.codomain = je.codomain.value();
                for (const auto& [o, o2] : je.pairs) om.map.emplace(o, o2);
                jf.emplace(m, std::move(om));
            }
            w.outer = coarse_scenario(a.outer, jf);
            return w;
        }
        case K::Pullback: {
            Wrapped a = build_wrapped(ctx, t.child());
            const PullbackData& g = t.pullback_data();
            Wrapped w{a.outer, {}, a.core, a.core_scenario, {}};
            for (const auto& [neu, old] : g.vmap) {
                w.f.vmap.emplace_back(neu, map_of(a.f, old));
                w.h.emplace_back(neu, entry_at(a.h, old));
            }
            w.f.facets = g.facets;
            VertexMap vm;
            vm.map = std::map<Measurement, Measurement>(g.vmap.begin(), g.vmap.end());
            VertexSet vs;
            for (const auto& [neu, _] : g.vmap) vs.push_back(neu);
            vm.domain = SimplicialComplex::from_facets(g.facets.value(),
                                                       make_vertex_set(std::move(vs)));
            w.outer = pullback_scenario(vm, a.outer);
            return w;
        }
        case K::Mix:
        case K::Choice:
            throw std::logic_error("mix/choice inside a component");
    }
    throw std::logic_error("unknown term kind");
}

// ---- stage 4 ---------------------------------------------------------------

struct Reordered {
    Term term;                                  // conds over a right-nested chain
    std::map<Measurement, Measurement> rename;  // old scenario -> new scenario
};

// Vertex of leaf `i` in a right-nested chain Tensor(l0, Tensor(l1, ...)):
// leaf i < n-1 contributes R^i(L(v)), the last leaf R^{n-1}(v).
Measurement chain_vertex(std::size_t i, std::size_t n, const Measurement& v) {
    if (n == 1) return v;
    Measurement m = (i == n - 1) ? v : Measurement::left(v);
    std::size_t rights = (i == n - 1) ? n - 1 : i;
    for (std::size_t k = 0; k < rights; ++k) m = Measurement::right(m);
    return m;
}

// Splits a reordered term into its conditional stack (inner first) and
// tensor-chain leaves (left to right).
void split_reordered(const Term& t, std::vector<CondData>& conds, std::vector<Term>& leaves) {
    if (t.kind() == K::Cond) {
        split_reordered(t.child(), conds, leaves);
        conds.push_back(t.cond_data());
        return;
    }
    if (t.kind() == K::Tensor) {
        std::vector<CondData> dummy;
        split_reordered(t.child(0), dummy, leaves);
        if (!dummy.empty()) throw std::logic_error("cond below tensor after reorder");
        split_reordered(t.child(1), dummy, leaves);
        if (!dummy.empty()) throw std::logic_error("cond below tensor after reorder");
        return;
    }
    leaves.push_back(t);
}

Reordered reorder(const TypingContext& ctx, const Term& core) {
    switch (core.kind()) {
        case K::Var:
        case K::Zero:
        case K::One: {
            Reordered r{core, {}};
            for (const auto& v : typecheck(ctx, core).measurements()) r.rename.emplace(v, v);
            return r;
        }
        case K::Cond: {
            Reordered a = reorder(ctx, core.child());
            const CondData& c = core.cond_data();
            CondData c2;
            c2.x = a.rename.at(c.x);
            for (const auto& [o, y] : c.branches) c2.branches.emplace_back(o, a.rename.at(y));
            Reordered r{Term::cond(a.term, c2), std::move(a.rename)};
            r.rename.emplace(cond_name(c), cond_name(c2));
            return r;
        }
        case K::Tensor: {
            Reordered a = reorder(ctx, core.child(0));
            Reordered b = reorder(ctx, core.child(1));
            std::vector<CondData> conds_a, conds_b;
            std::vector<Term> leaves_a, leaves_b;
            split_reordered(a.term, conds_a, leaves_a);
            split_reordered(b.term, conds_b, leaves_b);
            std::size_t na = leaves_a.size(), nb = leaves_b.size(), n = na + nb;

            // embeddings of the two sub-chains into the combined chain
            std::map<Measurement, Measurement> embed_a, embed_b;
            for (std::size_t i = 0; i < na; ++i)
                for (const auto& v : typecheck(ctx, leaves_a[i]).measurements())
                    embed_a.emplace(chain_vertex(i, na, v), chain_vertex(i, n, v));
            for (std::size_t i = 0; i < nb; ++i)
                for (const auto& v : typecheck(ctx, leaves_b[i]).measurements())
                    embed_b.emplace(chain_vertex(i, nb, v), chain_vertex(na + i, n, v));

            std::vector<Term> leaves = leaves_a;
            leaves.insert(leaves.end(), leaves_b.begin(), leaves_b.end());
            Term chain = leaves.back();
            for (std::size_t i = leaves.size() - 1; i-- > 0;)
                chain = Term::tensor(leaves[i], std::move(chain));

            auto apply_conds = [&](Term term, const std::vector<CondData>& conds,
                                   std::map<Measurement, Measurement>& embed) {
                for (const auto& c : conds) {
                    CondData c2;
                    c2.x = embed.at(c.x);
                    for (const auto& [o, y] : c.branches)
                        c2.branches.emplace_back(o, embed.at(y));
                    term = Term::cond(std::move(term), c2);
                    embed.emplace(cond_name(c), cond_name(c2));
                }
                return term;
            };
            Term out = apply_conds(chain, conds_a, embed_a);
            out = apply_conds(std::move(out), conds_b, embed_b);

            Reordered r{std::move(out), {}};
            for (const auto& [v, v2] : a.rename)
                r.rename.emplace(Measurement::left(v), embed_a.at(v2));
            for (const auto& [v, v2] : b.rename)
                r.rename.emplace(Measurement::right(v), embed_b.at(v2));
            return r;
        }
        default:
            throw std::logic_error("unexpected node inside a component core");
    }
}

Term assemble_component(const TypingContext& ctx, const Term& component) {
    Wrapped w = build_wrapped(ctx, component);
    Reordered r = reorder(ctx, w.core);
    PullbackData f;
    for (const auto& [neu, old] : w.f.vmap) f.vmap.emplace_back(neu, r.rename.at(old));
    f.facets = w.f.facets;
    Term t1 = Term::coarse(Term::pullback(std::move(f), r.term), w.h);
    if (!(typecheck(ctx, t1) == w.outer))
        throw std::logic_error("normalization changed a component scenario");
    return t1;
}

}  // namespace

Term normalize(const TypingContext& ctx, const Term& t) {
    typecheck(ctx, t);
    Term r = resolve_term(ctx, t);
    r = eliminate_choice(ctx, r);
    r = float_mixes(r);

    std::vector<std::pair<Rational, Term>> parts;
    collect_mix(r, Rational(1), parts);
    if (parts.empty()) throw std::logic_error("empty mixture after floating");

    std::vector<std::pair<Rational, Term>> components;
    for (auto& [wt, comp] : parts) components.emplace_back(wt, assemble_component(ctx, comp));

    Term acc = components.back().second;
    Rational tail = components.back().first;
    for (auto it = components.rbegin() + 1; it != components.rend(); ++it) {
        tail += it->first;
        acc = Term::mix(it->second, it->first / tail, std::move(acc));
    }
    typecheck(ctx, acc);
    return acc;
}

bool matches_normal_grammar(const Term& t) {
    // t4 ::= z | u | v
    auto is_t4 = [](const Term& x) {
        return x.kind() == K::Zero || x.kind() == K::One || x.kind() == K::Var;
    };
    // t3 ::= t4 | t4 (x) t3
    auto is_t3 = [&](const Term& x) {
        const Term* cur = &x;
        while (cur->kind() == K::Tensor) {
            if (!is_t4(cur->child(0))) return false;
            cur = &cur->child(1);
        }
        return is_t4(*cur);
    };
    // t2 ::= t3 | t2[x?y]
    auto is_t2 = [&](const Term& x) {
        const Term* cur = &x;
        while (cur->kind() == K::Cond) cur = &cur->child();
        return is_t3(*cur);
    };
    // t1 ::= (f* t2)/h
    auto is_t1 = [&](const Term& x) {
        return x.kind() == K::Coarse && x.child().kind() == K::Pullback &&
               is_t2(x.child().child());
    };
    // t0 ::= mix tree over t1 (the paper's grammar is associativity-ambiguous
    // between its displayed production and its proof; both readings accepted)
    struct Check {
        static bool t0(const Term& x, const decltype(is_t1)& leaf) {
            if (x.kind() == K::Mix) return t0(x.child(0), leaf) && t0(x.child(1), leaf);
            return leaf(x);
        }
    };
    return Check::t0(t, is_t1);
}

}  // namespace ctxlab
