#include "ctxlab/generators.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "ctxlab/errors.hpp"

namespace ctxlab {

Scenario pr_scenario() {
    static const Scenario s = [] {
        std::vector<std::pair<Measurement, std::vector<std::string>>> outcomes;
        for (const char* id : {"x1", "x2", "y1", "y2"})
            outcomes.emplace_back(Measurement::base(id), std::vector<std::string>{"0", "1"});
        auto facet = [](const char* a, const char* b) {
            return make_vertex_set({Measurement::base(a), Measurement::base(b)});
        };
        return Scenario::make(std::move(outcomes),
                              SimplicialComplex::from_facets({facet("x1", "y1"),
                                                              facet("x1", "y2"),
                                                              facet("x2", "y1"),
                                                              facet("x2", "y2")}));
    }();
    return s;
}

EmpiricalModel pr_box() {
    static const EmpiricalModel pr = [] {
        Scenario s = pr_scenario();
        Rational half(1, 2);
        std::map<VertexSet, Distribution> dists;
        for (const auto& facet : s.complex().facets()) {
            bool anti = facet == make_vertex_set({Measurement::base("x2"),
                                                  Measurement::base("y2")});
            std::map<Assignment, Rational> w;
            for (const auto& a : enumerate_assignments(s, facet)) {
                const std::string& o1 = a.entries()[0].second;
                const std::string& o2 = a.entries()[1].second;
                bool corr = o1 == o2;
                if (anti ? !corr : corr) w[a] = half;
            }
            dists.emplace(facet, Distribution::make(facet, std::move(w)));
        }
        return EmpiricalModel::make(s, std::move(dists), true);
    }();
    return pr;
}

EmpiricalModel pr_relabeling(Rng& rng) {
    EmpiricalModel e = pr_box();
    // party-preserving measurement swaps keep the facet structure
    std::map<Measurement, Measurement> swap;
    bool swap_a = rng.chance(1, 2), swap_b = rng.chance(1, 2);
    auto put = [&](const char* a, const char* b, bool s) {
        Measurement ma = Measurement::base(a), mb = Measurement::base(b);
        swap.emplace(ma, s ? mb : ma);
        swap.emplace(mb, s ? ma : mb);
    };
    put("x1", "x2", swap_a);
    put("y1", "y2", swap_b);
    e = pullback(VertexMap{e.scenario().complex(), swap}, e);

    OutcomeFamily flips;
    for (const auto& m : e.scenario().measurements()) {
        OutcomeMap om;
        om.codomain = {"0", "1"};
        bool flip = rng.chance(1, 2);
        om.map = flip ? std::map<std::string, std::string>{{"0", "1"}, {"1", "0"}}
                      : std::map<std::string, std::string>{{"0", "0"}, {"1", "1"}};
        flips.emplace(m, std::move(om));
    }
    return coarse_grain(e, flips);
}

EmpiricalModel uniform_coin_model(int outcomes) {
    Measurement m = Measurement::base("coin");
    std::vector<std::string> outs;
    for (int i = 0; i < outcomes; ++i) outs.push_back(std::to_string(i));
    Scenario s = Scenario::make({{m, outs}}, SimplicialComplex::from_facets({{m}}));
    std::map<Assignment, Rational> w;
    for (int i = 0; i < outcomes; ++i)
        w[Assignment::make({{m, outs[i]}})] = Rational(1, outcomes);
    return EmpiricalModel::make(s, {{VertexSet{m}, Distribution::make({m}, std::move(w))}});
}

Rational random_probability(Rng& rng, int max_den) {
    int den = rng.range(1, max_den);
    int num = rng.range(0, den);
    return Rational(num, den);
}

std::vector<Rational> random_convex_weights(Rng& rng, std::size_t k, int max_den) {
    // exact stick-breaking with bounded denominators per draw
    std::vector<Rational> w(k);
    Rational left(1);
    for (std::size_t i = 0; i + 1 < k; ++i) {
        Rational p = random_probability(rng, max_den);
        w[i] = p * left;
        left -= w[i];
    }
    w[k - 1] = left;
    return w;
}

Scenario random_scenario(Rng& rng, int max_measurements, int max_outcomes) {
    int n = rng.range(1, max_measurements);
    std::vector<std::pair<Measurement, std::vector<std::string>>> outcomes;
    VertexSet verts;
    for (int i = 0; i < n; ++i) {
        Measurement m = Measurement::base("m" + std::to_string(i));
        int k = max_outcomes <= 2 ? 2 : rng.range(2, max_outcomes);
        std::vector<std::string> os;
        for (int j = 0; j < k; ++j) os.push_back(std::to_string(j));
        outcomes.emplace_back(m, std::move(os));
        verts.push_back(m);
    }
    verts = make_vertex_set(std::move(verts));
    // random covering facets: a few random subsets; normalization covers the rest
    std::vector<VertexSet> facets;
    int f = rng.range(1, std::max(1, n));
    for (int i = 0; i < f; ++i) {
        VertexSet facet;
        for (const auto& v : verts)
            if (rng.chance(1, 2)) facet.push_back(v);
        if (!facet.empty()) facets.push_back(facet);
    }
    return Scenario::make(std::move(outcomes),
                          SimplicialComplex::from_facets(std::move(facets), verts));
}

EmpiricalModel random_deterministic(Rng& rng, const Scenario& s) {
    std::vector<std::pair<Measurement, std::string>> entries;
    for (const auto& m : s.measurements()) {
        const auto& os = s.outcomes(m);
        entries.emplace_back(m, os[rng.below(os.size())]);
    }
    return deterministic_model(s, Assignment::make(std::move(entries)));
}

EmpiricalModel random_noncontextual(Rng& rng, const Scenario& s, int max_components) {
    int k = rng.range(1, max_components);
    auto weights = random_convex_weights(rng, k);
    EmpiricalModel acc = random_deterministic(rng, s);
    Rational used = weights[0];
    for (int i = 1; i < k; ++i) {
        // acc carries mass `used`; blend in the next component exactly
        Rational total = used + weights[i];
        if (total == 0) continue;
        acc = mix(acc, random_deterministic(rng, s), used / total);
        used = total;
    }
    return acc;
}

EmpiricalModel random_model(Rng& rng, const Scenario& s) {
    EmpiricalModel nc = random_noncontextual(rng, s);
    if (s == pr_scenario() && rng.chance(1, 2)) {
        Rational lambda = random_probability(rng);
        return mix(pr_relabeling(rng), nc, lambda);
    }
    return nc;
}

PullbackData random_pullback_data(Rng& rng, const Scenario& s, int max_domain) {
    int n = rng.range(1, max_domain);
    PullbackData f;
    const VertexSet& xs = s.measurements();
    VertexSet domain_verts;
    for (int i = 0; i < n; ++i) {
        Measurement neu = Measurement::base("p" + std::to_string(i));
        f.vmap.emplace_back(neu, xs[rng.below(xs.size())]);
        domain_verts.push_back(neu);
    }
    domain_verts = make_vertex_set(std::move(domain_verts));
    // maximal induced complex (preimages of facets), sometimes thinned
    std::vector<VertexSet> pre;
    for (const auto& facet : s.complex().facets()) {
        VertexSet p;
        for (const auto& [neu, old] : f.vmap)
            if (vertex_contains(facet, old)) p.push_back(neu);
        p = make_vertex_set(std::move(p));
        if (!p.empty() && rng.chance(4, 5)) pre.push_back(p);
    }
    f.facets = SimplicialComplex::from_facets(std::move(pre), domain_verts).facets();
    return f;
}

CoarseData random_coarse_data(Rng& rng, const Scenario& s, bool surjective) {
    CoarseData h;
    for (const auto& m : s.measurements()) {
        const auto& os = s.outcomes(m);
        int k = surjective ? rng.range(1, static_cast<int>(os.size()))
                           : rng.range(1, static_cast<int>(os.size()) + 1);
        std::vector<std::string> cod;
        for (int i = 0; i < k; ++i) cod.push_back("g" + std::to_string(i));
        CoarseEntry entry;
        std::vector<int> image(os.size());
        if (surjective) {
            // hit every codomain label at least once
            for (int i = 0; i < k; ++i) image[i] = i;
            for (std::size_t i = k; i < os.size(); ++i) image[i] = rng.range(0, k - 1);
            for (std::size_t i = os.size(); i-- > 1;)
                std::swap(image[i], image[rng.below(i + 1)]);
        } else {
            for (std::size_t i = 0; i < os.size(); ++i) image[i] = rng.range(0, k - 1);
        }
        for (std::size_t i = 0; i < os.size(); ++i)
            entry.pairs.emplace_back(os[i], cod[image[i]]);
        entry.codomain = std::move(cod);
        h.emplace_back(m, std::move(entry));
    }
    return h;
}

std::optional<CondData> random_cond_site(Rng& rng, const Scenario& s) {
    VertexSet candidates;
    for (const auto& x : s.measurements())
        if (!s.complex().link({x}).vertices().empty()) candidates.push_back(x);
    if (candidates.empty()) return std::nullopt;
    for (int attempt = 0; attempt < 8; ++attempt) {
        const Measurement& x = candidates[rng.below(candidates.size())];
        VertexSet lk = s.complex().link({x}).vertices();
        Measurement::Branches branches;
        for (const auto& o : s.outcomes(x))
            branches.emplace_back(o, lk[rng.below(lk.size())]);
        Measurement name = Measurement::conditional(x, branches);
        if (!s.has(name)) return CondData{x, std::move(branches)};
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Random terms
// ---------------------------------------------------------------------------

namespace {

struct TermGen {
    Rng& rng;
    TypingContext ctx;
    Environment env;
    int vars_left;
    int var_counter = 0;
    bool single_var;
    bool used_var = false;

    Term fresh_var(std::optional<Scenario> wanted) {
        Scenario s = wanted ? *wanted : random_scenario(rng, 3, 2);
        std::string name = "v" + std::to_string(var_counter++);
        ctx.emplace_back(name, s);
        env.emplace(name, random_model(rng, s));
        return Term::var(name);
    }

    bool may_use_var() {
        if (single_var) return !used_var;
        return vars_left > 0;
    }

    // a term over a *given* scenario (for the second mix operand)
    Term on_scenario(const Scenario& s, int budget) {
        if (budget > 2 && may_use_var() && rng.chance(1, 3)) {
            Term a = gen(budget / 2, s);
            return a;
        }
        if (may_use_var() && rng.chance(2, 3)) {
            if (single_var) used_var = true;
            else vars_left--;
            return fresh_var(s);
        }
        // closed fallback: a deterministic witness on s
        EmpiricalModel det = random_deterministic(rng, s);
        return noncontextual_to_term(det);
    }

    Term gen(int budget, std::optional<Scenario> wanted = std::nullopt) {
        if (wanted) return on_scenario(*wanted, budget);
        if (budget <= 1) {
            int pick = rng.range(0, 2);
            if (pick == 0 && may_use_var()) {
                if (single_var) used_var = true;
                else vars_left--;
                return fresh_var(std::nullopt);
            }
            return rng.chance(1, 2) ? Term::one() : Term::zero();
        }
        int pick = rng.range(0, 6);
        switch (pick) {
            case 0: {  // pullback
                Term a = gen(budget - 2);
                Scenario s = typecheck(ctx, a);
                if (s.measurements().empty()) return a;
                return Term::pullback(random_pullback_data(rng, s), std::move(a));
            }
            case 1: {  // coarse (surjective; see the eq.(25) notes)
                Term a = gen(budget - 2);
                Scenario s = typecheck(ctx, a);
                if (s.measurements().empty()) return a;
                return Term::coarse(std::move(a), random_coarse_data(rng, s, true));
            }
            case 2: {  // mix
                Term a = gen(budget / 2);
                Scenario s = typecheck(ctx, a);
                Term b = on_scenario(s, budget / 2);
                return Term::mix(std::move(a), random_probability(rng), std::move(b));
            }
            case 3:
                return Term::choice(gen(budget / 2), gen(budget / 2));
            case 4:
                return Term::tensor(gen(budget / 2), gen(budget / 2));
            case 5: {  // conditional
                Term a = gen(budget - 2);
                Scenario s = typecheck(ctx, a);
                if (auto site = random_cond_site(rng, s))
                    return Term::cond(std::move(a), std::move(*site));
                return a;
            }
            default: {
                if (may_use_var()) {
                    if (single_var) used_var = true;
                    else vars_left--;
                    return fresh_var(std::nullopt);
                }
                return Term::one();
            }
        }
    }
};

}  // namespace

RandomTerm random_term(Rng& rng, int max_nodes, int max_vars) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        TermGen g{rng, {}, {}, max_vars, 0, false, false};
        try {
            Term t = g.gen(max_nodes);
            typecheck(g.ctx, t);
            // reject terms the equational theory cannot normalize
            normalize(g.ctx, t);
            return {std::move(g.ctx), std::move(g.env), std::move(t)};
        } catch (const DomainError&) {
        } catch (const IllTyped&) {
        }
    }
    throw std::logic_error("random term generation failed to converge");
}

RandomTerm random_single_var_term(Rng& rng, int max_nodes) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        TermGen g{rng, {}, {}, 1, 0, true, false};
        try {
            Term t = g.gen(max_nodes);
            if (t.free_vars().empty()) continue;
            typecheck(g.ctx, t);
            normalize(g.ctx, t);
            // keep only the used variable in the context
            std::string used = t.free_vars().front();
            TypingContext ctx;
            Environment env;
            for (auto& [name, sc] : g.ctx)
                if (name == used) ctx.emplace_back(name, sc);
            env.emplace(used, g.env.at(used));
            return {std::move(ctx), std::move(env), std::move(t)};
        } catch (const DomainError&) {
        } catch (const IllTyped&) {
        }
    }
    throw std::logic_error("single-variable term generation failed to converge");
}

Term random_closed_term(Rng& rng, int max_nodes) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        TermGen g{rng, {}, {}, 0, 0, false, true};  // no variables available
        try {
            Term t = g.gen(max_nodes);
            typecheck({}, t);
            return t;
        } catch (const DomainError&) {
        } catch (const IllTyped&) {
        }
    }
    throw std::logic_error("closed term generation failed to converge");
}

// ---------------------------------------------------------------------------
// Rule instances
// ---------------------------------------------------------------------------

namespace {

struct InstanceGen {
    Rng& rng;
    TypingContext ctx;
    Environment env;
    int counter = 0;

    Term var_on(const Scenario& s) {
        std::string name = "a" + std::to_string(counter++);
        ctx.emplace_back(name, s);
        env.emplace(name, random_model(rng, s));
        return Term::var(name);
    }
    Term var_small() { return var_on(random_scenario(rng, 3, 2)); }

    std::optional<Term> lhs(int rule) {
        switch (rule) {
            case 1:
                return Term::choice(var_small(), var_small());
            case 2:
                return Term::choice(var_small(), Term::choice(var_small(), var_small()));
            case 3:
                return rng.chance(1, 2) ? Term::choice(var_small(), Term::zero())
                                        : Term::choice(Term::zero(), var_small());
            case 4:
                return Term::tensor(var_small(), var_small());
            case 5:
                return Term::tensor(var_small(), Term::tensor(var_small(), var_small()));
            case 6:
                return rng.chance(1, 2) ? Term::tensor(var_small(), Term::zero())
                                        : Term::tensor(Term::zero(), var_small());
            case 7: {
                Scenario s = random_scenario(rng, 3, 2);
                return Term::mix(var_on(s), Rational(0), var_on(s));
            }
            case 8: {
                Term closed = random_closed_term(rng, 4);
                return Term::mix(closed, random_probability(rng), closed);
            }
            case 9: {
                Scenario s = random_scenario(rng, 3, 2);
                return Term::mix(var_on(s), random_probability(rng), var_on(s));
            }
            case 10: {
                Scenario s = random_scenario(rng, 3, 2);
                Rational l = random_probability(rng), lp = random_probability(rng);
                if (l * lp == 1) l = Rational(1, 2);
                return Term::mix(Term::mix(var_on(s), l, var_on(s)), lp, var_on(s));
            }
            case 11: {
                Term a = var_small();
                Scenario sa = typecheck(ctx, a);
                PullbackData f = random_pullback_data(rng, sa);
                Term inner = Term::pullback(f, a);
                Scenario si = typecheck(ctx, inner);
                return Term::pullback(random_pullback_data(rng, si), inner);
            }
            case 12: {
                Term a = var_small();
                Scenario sa = typecheck(ctx, a);
                Term inner = Term::coarse(a, random_coarse_data(rng, sa, rng.chance(1, 2)));
                Scenario si = typecheck(ctx, inner);
                return Term::coarse(inner, random_coarse_data(rng, si, rng.chance(1, 2)));
            }
            case 13: {
                Term a = var_small();
                Scenario sa = typecheck(ctx, a);
                Term inner = Term::coarse(a, random_coarse_data(rng, sa, rng.chance(1, 2)));
                Scenario si = typecheck(ctx, inner);
                return Term::pullback(random_pullback_data(rng, si), inner);
            }
            case 14: {
                Scenario s = random_scenario(rng, 3, 2);
                Term m = Term::mix(var_on(s), random_probability(rng), var_on(s));
                return Term::pullback(random_pullback_data(rng, s), m);
            }
            case 15: {
                Scenario s = random_scenario(rng, 3, 2);
                Term m = Term::mix(var_on(s), random_probability(rng), var_on(s));
                return Term::coarse(m, random_coarse_data(rng, s, rng.chance(1, 2)));
            }
            case 16: {
                Scenario s1 = random_scenario(rng, 3, 2), s2 = random_scenario(rng, 3, 2);
                Rational l = random_probability(rng);
                return Term::choice(Term::mix(var_on(s1), l, var_on(s1)),
                                    Term::mix(var_on(s2), l, var_on(s2)));
            }
            case 17: {
                Scenario s = random_scenario(rng, 3, 2);
                return Term::tensor(Term::mix(var_on(s), random_probability(rng), var_on(s)),
                                    var_small());
            }
            case 18: {
                Scenario s = random_scenario(rng, 3, 2);
                auto site = random_cond_site(rng, s);
                if (!site) return std::nullopt;
                return Term::cond(Term::mix(var_on(s), random_probability(rng), var_on(s)),
                                  std::move(*site));
            }
            case 19:
            case 20: {
                Term a = var_small(), b = var_small();
                Scenario sa = typecheck(ctx, a), sb = typecheck(ctx, b);
                Term ca = Term::coarse(a, random_coarse_data(rng, sa, rng.chance(1, 2)));
                Term cb = Term::coarse(b, random_coarse_data(rng, sb, rng.chance(1, 2)));
                return rule == 19 ? Term::choice(std::move(ca), std::move(cb))
                                  : Term::tensor(std::move(ca), std::move(cb));
            }
            case 21:
            case 22: {
                Term a = var_small(), b = var_small();
                Scenario sa = typecheck(ctx, a), sb = typecheck(ctx, b);
                Term pa = Term::pullback(random_pullback_data(rng, sa), a);
                Term pb = Term::pullback(random_pullback_data(rng, sb), b);
                return rule == 21 ? Term::choice(std::move(pa), std::move(pb))
                                  : Term::tensor(std::move(pa), std::move(pb));
            }
            case 23: {
                Term a = var_small();
                Scenario sa = typecheck(ctx, a);
                auto c1 = random_cond_site(rng, sa);
                if (!c1) return std::nullopt;
                Term inner = Term::cond(a, *c1);
                Scenario si = typecheck(ctx, inner);
                Measurement name = Measurement::conditional(c1->x, c1->branches);
                // avoid the inner conditional in the outer site
                for (int tries = 0; tries < 8; ++tries) {
                    auto c2 = random_cond_site(rng, si);
                    if (!c2) break;
                    bool uses = c2->x == name;
                    for (const auto& [o, y] : c2->branches)
                        if (y == name) uses = true;
                    if (!uses) return Term::cond(inner, std::move(*c2));
                }
                return std::nullopt;
            }
            case 24: {
                Term a = var_small();
                Scenario sa = typecheck(ctx, a);
                Term inner = Term::pullback(random_pullback_data(rng, sa), a);
                Scenario si = typecheck(ctx, inner);
                auto site = random_cond_site(rng, si);
                if (!site) return std::nullopt;
                return Term::cond(inner, std::move(*site));
            }
            case 25: {
                Term a = var_small();
                Scenario sa = typecheck(ctx, a);
                Term inner = Term::coarse(a, random_coarse_data(rng, sa, true));
                Scenario si = typecheck(ctx, inner);
                auto site = random_cond_site(rng, si);
                if (!site) return std::nullopt;
                return Term::cond(inner, std::move(*site));
            }
            case 26:
            case 27: {
                Term a = var_small();
                Scenario sa = typecheck(ctx, a);
                auto site = random_cond_site(rng, sa);
                if (!site) return std::nullopt;
                Term ca = Term::cond(a, std::move(*site));
                return rule == 26 ? Term::choice(std::move(ca), var_small())
                                  : Term::tensor(std::move(ca), var_small());
            }
            case 28:
                return Term::choice(var_small(), var_small());
        }
        throw DomainError("unknown rule number " + std::to_string(rule));
    }
};

}  // namespace

RuleInstance random_rule_instance(Rng& rng, int rule_number) {
    const auto& rules = equational_rules();
    if (rule_number < 1 || rule_number > static_cast<int>(rules.size()))
        throw DomainError("rule number out of range");
    const RewriteRule& rule = rules[rule_number - 1];
    for (int attempt = 0; attempt < 256; ++attempt) {
        InstanceGen g{rng, {}, {}, 0};
        std::optional<Term> lhs;
        try {
            lhs = g.lhs(rule_number);
            if (!lhs) continue;
            typecheck(g.ctx, *lhs);
        } catch (const IllTyped&) {
            continue;
        } catch (const DomainError&) {
            continue;
        }
        if (!rule.apply(g.ctx, *lhs)) continue;
        return {std::move(g.ctx), std::move(g.env), std::move(*lhs)};
    }
    throw std::logic_error("rule instance generation failed for rule " +
                           std::to_string(rule_number));
}

}  // namespace ctxlab
