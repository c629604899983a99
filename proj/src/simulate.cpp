#include "ctxlab/simulate.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

#include "ctxlab/errors.hpp"
#include "ctxlab/fraction.hpp"
#include "ctxlab/guard.hpp"

namespace ctxlab {

EmpiricalModel Simulation::base() const { return tensor(source, ancilla); }

SimulationCheck check_simulation(const Simulation& sim) {
    auto fail = [](std::string why) { return SimulationCheck{false, std::move(why)}; };
    if (!is_noncontextual(sim.ancilla)) return fail("ancilla is contextual");

    EmpiricalModel dc = sim.base();
    MpSpace space = MpSpace::build(dc.scenario(), sim.depth);
    const Scenario& target = sim.target.scenario();

    for (const auto& x : target.measurements()) {
        auto it = sim.protocol_for.find(x);
        if (it == sim.protocol_for.end()) return fail("no protocol for " + x.id());
        if (!space.contains(it->second))
            return fail("protocol for " + x.id() + " exceeds depth " +
                        std::to_string(sim.depth));
        auto ht = sim.outcome_for.find(x);
        if (ht == sim.outcome_for.end()) return fail("no outcome map for " + x.id());
        for (const auto& r : it->second.maximal_runs()) {
            auto jt = ht->second.find(r.serialize());
            if (jt == ht->second.end())
                return fail("outcome map for " + x.id() + " misses run " + r.serialize());
            const auto& outs = target.outcomes(x);
            if (std::find(outs.begin(), outs.end(), jt->second) == outs.end())
                return fail("outcome map for " + x.id() + " lands outside its outcome set");
        }
    }

    for (const auto& facet : target.complex().facets()) {
        // dedup protocols: distinct target measurements may share one
        std::vector<Protocol> sigma;
        for (const auto& x : facet) sigma.push_back(sim.protocol_for.at(x));
        std::sort(sigma.begin(), sigma.end());
        sigma.erase(std::unique(sigma.begin(), sigma.end()), sigma.end());
        if (!space.compatible(sigma))
            return fail("protocols of a target facet are incompatible");

        Distribution md = mp_distribution(dc, space, sigma);
        std::map<Assignment, Rational> pushed;
        for (const auto& [t, w] : md.weights()) {
            std::vector<std::pair<Measurement, std::string>> entries;
            for (const auto& x : facet) {
                const Protocol& p = sim.protocol_for.at(x);
                const std::string& run = t.at(space.measurement_of(p));
                entries.emplace_back(x, sim.outcome_for.at(x).at(run));
            }
            pushed[Assignment::make(std::move(entries))] += w;
        }
        const Distribution& expect = sim.target.at_facet(facet);
        for (const auto& a : enumerate_assignments(target, facet)) {
            Rational lhs = pushed.count(a) ? pushed.at(a) : Rational(0);
            Rational rhs = expect.at(a);
            if (lhs != rhs) {
                std::string fname;
                for (const auto& m : facet) fname += (fname.empty() ? "" : ",") + m.id();
                return fail("pushforward mismatch at facet {" + fname + "}, assignment " +
                            a.key() + ": got " + rational_string(lhs) + ", target has " +
                            rational_string(rhs));
            }
        }
    }
    return {};
}

bool refute_by_fraction(const EmpiricalModel& d, const EmpiricalModel& e) {
    return ncf(d).optimum > ncf(e).optimum;
}

// ---------------------------------------------------------------------------
// term_to_simulation
// ---------------------------------------------------------------------------

namespace {

// Left-fold tensor address: part i of n in ((p0 ⊗ p1) ⊗ p2)...
Measurement fold_address(std::size_t i, std::size_t n, const Measurement& v) {
    if (n == 1) return v;
    Measurement m = (i == n - 1) ? Measurement::right(v) : fold_address(i, n - 1, v);
    if (i == n - 1) return m;
    return Measurement::left(m);
}

EmpiricalModel coin_model(const std::vector<Rational>& weights) {
    Measurement coin = Measurement::base("coin");
    std::vector<std::string> outs;
    for (std::size_t i = 0; i < weights.size(); ++i) outs.push_back("c" + std::to_string(i));
    Scenario s = Scenario::make({{coin, outs}}, SimplicialComplex::from_facets({{coin}}));
    std::map<Assignment, Rational> w;
    for (std::size_t i = 0; i < weights.size(); ++i)
        w[Assignment::make({{coin, outs[i]}})] = weights[i];
    return EmpiricalModel::make(
        s, {{VertexSet{coin}, Distribution::make({coin}, std::move(w))}});
}

// Splits a normal form into weighted (f* t2)/h components.
void split_normal(const Term& t, const Rational& scale,
                  std::vector<std::pair<Rational, Term>>& out) {
    if (t.kind() == Term::Kind::Mix) {
        split_normal(t.child(0), scale * t.lambda(), out);
        split_normal(t.child(1), scale * (1 - t.lambda()), out);
        return;
    }
    if (scale != 0) out.emplace_back(scale, t);
}

// Strategy leaf: relative run extension plus the composite outcome label.
struct Branch {
    Run extension;
    std::string label;
};

}  // namespace

Simulation term_to_simulation(const TypingContext& ctx, const Term& t, const EmpiricalModel& d) {
    if (ctx.size() != 1) throw DomainError("term_to_simulation needs a single-variable context");
    const std::string& var = ctx.front().first;
    if (!(ctx.front().second == d.scenario()))
        throw DomainError("binding scenario does not match the source model");

    Environment env{{var, d}};
    EmpiricalModel e = eval_term(t, env);
    Term n = normalize(ctx, t);

    std::vector<std::pair<Rational, Term>> parts;
    split_normal(n, Rational(1), parts);
    std::size_t ncomp = parts.size();

    // locate the variable component (normal form uses the variable at most once)
    std::size_t var_at = ncomp;
    for (std::size_t i = 0; i < ncomp; ++i)
        if (!parts[i].second.free_vars().empty()) var_at = i;

    // ancilla parts: mixing coin, closed-component models, stop/"u" leaves of
    // the variable component's tensor chain
    std::vector<EmpiricalModel> ancilla_parts;
    int coin_at = -1;
    if (ncomp > 1) {
        std::vector<Rational> w;
        for (const auto& [wt, _] : parts) w.push_back(wt);
        coin_at = static_cast<int>(ancilla_parts.size());
        ancilla_parts.push_back(coin_model(w));
    }
    std::map<std::size_t, std::size_t> closed_part_at;  // component -> ancilla index
    for (std::size_t i = 0; i < ncomp; ++i) {
        if (i == var_at) continue;
        closed_part_at[i] = ancilla_parts.size();
        ancilla_parts.push_back(eval_term(parts[i].second, {}));
    }

    // decompose the variable component (f* t2)/h
    const CoarseData* h = nullptr;
    const PullbackData* f = nullptr;
    std::vector<Term> leaves;
    std::vector<CondData> conds;
    if (var_at < ncomp) {
        const Term& comp = parts[var_at].second;
        if (comp.kind() != Term::Kind::Coarse || comp.child().kind() != Term::Kind::Pullback)
            throw std::logic_error("normal form component is not (f* t2)/h");
        h = &comp.coarse_data();
        f = &comp.child().pullback_data();
        const Term* cur = &comp.child().child();
        while (cur->kind() == Term::Kind::Cond) {
            conds.push_back(cur->cond_data());
            cur = &cur->child();
        }
        std::reverse(conds.begin(), conds.end());  // outermost first; order unused
        const Term* chain = cur;
        while (chain->kind() == Term::Kind::Tensor) {
            leaves.push_back(chain->child(0));
            chain = &chain->child(1);
        }
        leaves.push_back(*chain);
    }
    std::map<std::size_t, std::size_t> uleaf_part_at;  // leaf index -> ancilla index
    for (std::size_t j = 0; j < leaves.size(); ++j) {
        if (leaves[j].kind() == Term::Kind::One) {
            uleaf_part_at[j] = ancilla_parts.size();
            ancilla_parts.push_back(singleton_model());
        } else if (leaves[j].kind() != Term::Kind::Var && leaves[j].kind() != Term::Kind::Zero) {
            throw std::logic_error("normal form chain has a non-base leaf");
        }
    }

    EmpiricalModel ancilla = zero_model();
    if (!ancilla_parts.empty()) {
        ancilla = ancilla_parts[0];
        for (std::size_t i = 1; i < ancilla_parts.size(); ++i)
            ancilla = tensor(ancilla, ancilla_parts[i]);
    }
    std::size_t nparts = ancilla_parts.size();
    auto in_base = [&](std::size_t part, const Measurement& v) {
        // ancilla part vertex, addressed inside d ⊗ c
        return Measurement::right(fold_address(part, nparts, v));
    };

    EmpiricalModel dc = tensor(d, ancilla);

    // addresses of the variable component's chain vertices in d ⊗ c
    std::map<Measurement, Measurement> chain_addr;
    for (std::size_t j = 0; j < leaves.size(); ++j) {
        if (leaves[j].kind() == Term::Kind::Var) {
            for (const auto& x : d.scenario().measurements()) {
                Measurement cv = x;
                // chain vertex naming matches terms_normalize: R^j L or R^{n-1}
                // (reuse the same shape here)
                Measurement tagged = cv;
                if (leaves.size() > 1) {
                    tagged = (j == leaves.size() - 1) ? cv : Measurement::left(cv);
                    std::size_t rights = (j == leaves.size() - 1) ? leaves.size() - 1 : j;
                    for (std::size_t k = 0; k < rights; ++k) tagged = Measurement::right(tagged);
                }
                chain_addr.emplace(tagged, Measurement::left(x));
            }
        } else if (leaves[j].kind() == Term::Kind::One) {
            Measurement star = Measurement::base("star");
            Measurement tagged = star;
            if (leaves.size() > 1) {
                tagged = (j == leaves.size() - 1) ? star : Measurement::left(star);
                std::size_t rights = (j == leaves.size() - 1) ? leaves.size() - 1 : j;
                for (std::size_t k = 0; k < rights; ++k) tagged = Measurement::right(tagged);
            }
            chain_addr.emplace(tagged, in_base(uleaf_part_at[j], star));
        }
    }

    // adaptive realization of a t2-scenario measurement over d ⊗ c
    std::function<std::vector<Branch>(const Measurement&, const Assignment&)> realize =
        [&](const Measurement& m, const Assignment& acc) -> std::vector<Branch> {
        std::vector<Branch> out;
        if (m.kind() == Measurement::Kind::Conditional) {
            const Measurement base_m = m.cond_base();
            for (const Branch& first : realize(base_m, acc)) {
                // pick the branch measurement for the observed outcome
                const Measurement* next = nullptr;
                for (const auto& [o, y] : m.cond_branches())
                    if (o == first.label) next = &y;
                if (!next) throw std::logic_error("missing conditional branch in realization");
                Assignment acc2 = acc.merged_with(first.extension.assignment());
                for (const Branch& second : realize(*next, acc2)) {
                    Run combined = first.extension;
                    for (const auto& [mm, oo] : second.extension.steps())
                        combined = combined.extended(mm, oo);
                    out.push_back({combined, pair_label(first.label, second.label)});
                }
            }
            return out;
        }
        Measurement addr = chain_addr.at(m);
        if (acc.defines(addr)) return {{Run{}, acc.at(addr)}};
        for (const auto& o : dc.scenario().outcomes(addr))
            out.push_back({Run{}.extended(addr, o), o});
        return out;
    };

    auto coarse_entry = [&](const Measurement& x) -> const CoarseEntry& {
        for (const auto& [m, entry] : *h)
            if (m == x) return entry;
        throw std::logic_error("normal form coarse family misses a measurement");
    };
    auto mapped_vertex = [&](const Measurement& x) -> const Measurement& {
        for (const auto& [neu, old] : f->vmap)
            if (neu == x) return old;
        throw std::logic_error("normal form vertex map misses a measurement");
    };

    Simulation sim;
    sim.source = d;
    sim.ancilla = ancilla;
    sim.target = e;

    Measurement coin_addr = Measurement::base("coin");
    if (coin_at >= 0) coin_addr = in_base(coin_at, Measurement::base("coin"));

    std::size_t max_len = 1;
    for (const auto& x : e.scenario().measurements()) {
        std::vector<Run> runs;
        std::map<std::string, std::string> hmap;
        auto add_branch = [&](const Run& prefix, std::size_t component) {
            if (component == var_at) {
                const CoarseEntry& hx = coarse_entry(x);
                Assignment acc = prefix.assignment();
                for (const Branch& b : realize(mapped_vertex(x), acc)) {
                    Run full = prefix;
                    for (const auto& [mm, oo] : b.extension.steps())
                        full = full.extended(mm, oo);
                    runs.push_back(full);
                    std::string target_label;
                    for (const auto& [from, to] : hx.pairs)
                        if (from == b.label) target_label = to;
                    if (target_label.empty())
                        throw std::logic_error("coarse family misses a composite label");
                    hmap[full.serialize()] = target_label;
                }
            } else {
                Measurement copy = in_base(closed_part_at.at(component), x);
                for (const auto& o : e.scenario().outcomes(x)) {
                    Run full = prefix.extended(copy, o);
                    runs.push_back(full);
                    hmap[full.serialize()] = o;
                }
            }
        };
        if (ncomp == 1) {
            add_branch(Run{}, var_at < ncomp ? var_at : 0);
        } else {
            for (std::size_t i = 0; i < ncomp; ++i)
                add_branch(Run{}.extended(coin_addr, "c" + std::to_string(i)), i);
        }
        Protocol p = Protocol::from_runs(runs, dc.scenario());
        max_len = std::max(max_len, p.depth());
        sim.protocol_for.emplace(x, std::move(p));
        sim.outcome_for.emplace(x, std::move(hmap));
    }
    sim.depth = static_cast<int>(max_len);
    return sim;
}

// ---------------------------------------------------------------------------
// find_simulation
// ---------------------------------------------------------------------------

namespace {

// nondecreasing coin-size tuples with product <= budget, smallest first
void coin_tuples(int budget, int minsize, std::vector<int>& cur,
                 std::vector<std::vector<int>>& out) {
    out.push_back(cur);
    for (int k = minsize; k <= budget; ++k) {
        cur.push_back(k);
        coin_tuples(budget / k, k, cur, out);
        cur.pop_back();
    }
}

EmpiricalModel uniform_coin(int k, int index) {
    Measurement m = Measurement::base("coin" + std::to_string(index));
    std::vector<std::string> outs;
    for (int i = 0; i < k; ++i) outs.push_back(std::to_string(i));
    Scenario s = Scenario::make({{m, outs}}, SimplicialComplex::from_facets({{m}}));
    std::map<Assignment, Rational> w;
    for (int i = 0; i < k; ++i) w[Assignment::make({{m, outs[i]}})] = Rational(1, k);
    return EmpiricalModel::make(s, {{VertexSet{m}, Distribution::make({m}, std::move(w))}});
}

}  // namespace

std::optional<Simulation> find_simulation(const EmpiricalModel& d, const EmpiricalModel& e,
                                          int depth, int ancilla_budget) {
    std::vector<std::vector<int>> tuples;
    std::vector<int> cur;
    coin_tuples(std::max(ancilla_budget, 1), 2, cur, tuples);
    std::sort(tuples.begin(), tuples.end(),
              [](const auto& a, const auto& b) {
                  long long pa = 1, pb = 1;
                  for (int x : a) pa *= x;
                  for (int x : b) pb *= x;
                  if (pa != pb) return pa < pb;
                  return a < b;
              });

    const Scenario& ts = e.scenario();
    const VertexSet& xs = ts.measurements();

    for (const auto& tuple : tuples) {
        EmpiricalModel ancilla = zero_model();
        for (std::size_t i = 0; i < tuple.size(); ++i) {
            EmpiricalModel c = uniform_coin(tuple[i], static_cast<int>(i));
            ancilla = (i == 0) ? c : tensor(ancilla, c);
        }
        EmpiricalModel dc = tensor(d, ancilla);
        MpSpace space = MpSpace::build(dc.scenario(), depth);

        // per-measurement candidates: (protocol, outcome maps matching the
        // singleton marginal of e)
        struct Cand {
            const Protocol* p;
            std::vector<std::map<std::string, std::string>> hs;
        };
        std::vector<std::vector<Cand>> cands(xs.size());
        bool viable = true;
        for (std::size_t i = 0; i < xs.size() && viable; ++i) {
            const auto& outs = ts.outcomes(xs[i]);
            Distribution want = e.marginal({xs[i]});
            for (const Protocol& p : space.protocols()) {
                Distribution have = mp_distribution(dc, space, {p});
                Measurement pm = space.measurement_of(p);
                const auto& runs = p.maximal_runs();
                // assign outcomes to runs so pushed weights match `want`
                std::map<std::string, Rational> need;
                for (const auto& o : outs) need[o] = want.at(Assignment::make({{xs[i], o}}));
                std::vector<std::map<std::string, std::string>> found;
                std::map<std::string, std::string> partial;
                std::function<void(std::size_t, std::map<std::string, Rational>&)> rec =
                    [&](std::size_t j, std::map<std::string, Rational>& left) {
                        if (found.size() > 64) return;  // plenty of witnesses
                        if (j == runs.size()) {
                            for (const auto& [o, r] : left)
                                if (r != 0) return;
                            found.push_back(partial);
                            return;
                        }
                        Rational w = have.at(
                            Assignment::make({{pm, runs[j].serialize()}}));
                        for (const auto& o : outs) {
                            if (left[o] < w) continue;
                            left[o] -= w;
                            partial[runs[j].serialize()] = o;
                            rec(j + 1, left);
                            partial.erase(runs[j].serialize());
                            left[o] += w;
                        }
                    };
                rec(0, need);
                if (!found.empty()) cands[i].push_back({&p, std::move(found)});
            }
            if (cands[i].empty()) viable = false;
        }
        if (!viable) continue;

        // DFS over protocol choices with facet-local verification
        Simulation sim;
        sim.source = d;
        sim.ancilla = ancilla;
        sim.target = e;
        sim.depth = depth;

        std::function<bool(std::size_t)> assign = [&](std::size_t i) -> bool {
            if (i == xs.size()) return true;
            for (const Cand& c : cands[i]) {
                sim.protocol_for.insert_or_assign(xs[i], *c.p);
                for (const auto& hmap : c.hs) {
                    sim.outcome_for.insert_or_assign(xs[i], hmap);
                    // verify every facet fully assigned so far
                    bool ok = true;
                    for (const auto& facet : ts.complex().facets()) {
                        bool complete = true;
                        bool uses = false;
                        for (const auto& v : facet) {
                            if (v == xs[i]) uses = true;
                            if (!sim.protocol_for.count(v)) complete = false;
                        }
                        if (!complete || !uses) continue;
                        std::vector<Protocol> sigma;
                        for (const auto& v : facet) sigma.push_back(sim.protocol_for.at(v));
                        std::sort(sigma.begin(), sigma.end());
                        sigma.erase(std::unique(sigma.begin(), sigma.end()), sigma.end());
                        if (!space.compatible(sigma)) {
                            ok = false;
                            break;
                        }
                        Distribution md = mp_distribution(dc, space, sigma);
                        std::map<Assignment, Rational> pushed;
                        for (const auto& [tt, w] : md.weights()) {
                            std::vector<std::pair<Measurement, std::string>> entries;
                            for (const auto& v : facet)
                                entries.emplace_back(
                                    v, sim.outcome_for.at(v).at(
                                           tt.at(space.measurement_of(sim.protocol_for.at(v)))));
                            pushed[Assignment::make(std::move(entries))] += w;
                        }
                        std::map<Assignment, Rational> nonzero;
                        for (const auto& [a, w] : pushed)
                            if (w != 0) nonzero.emplace(a, w);
                        if (!(nonzero == sim.target.at_facet(facet).weights())) ok = false;
                        if (!ok) break;
                    }
                    if (ok && assign(i + 1)) return true;
                }
                sim.outcome_for.erase(xs[i]);
                sim.protocol_for.erase(xs[i]);
            }
            return false;
        };
        if (assign(0)) {
            auto check = check_simulation(sim);
            if (!check.ok) throw std::logic_error("search produced an invalid simulation: " +
                                                  check.report);
            return sim;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// simulation -> term extraction
// ---------------------------------------------------------------------------

namespace {

struct Extractor {
    const Simulation& sim;
    Scenario dc;          // d ⊗ c scenario
    Measurement uvertex;  // stop-branch spare measurement in the term scenario
    Term term;            // built so far
    TypingContext ctx;
    std::set<std::string> added;  // conditional names already extended

    // term-scenario vertex of a d ⊗ c measurement inside v ⊗ (c-term ⊗ u)
    Measurement base_addr(const Measurement& m) const {
        if (m.kind() == Measurement::Kind::Left) return m;  // d part: Left(x)
        return Measurement::right(Measurement::left(m.inner()));
    }

    Measurement name_protocol(const Protocol& p) {
        if (p.maximal_runs().size() == 1 && p.maximal_runs()[0].empty()) return uvertex;
        const Measurement& first = p.maximal_runs()[0].steps()[0].first;
        if (p.depth() == 1) return base_addr(first);
        // group continuations per outcome of the first measurement
        Measurement::Branches branches;
        for (const auto& o : dc.outcomes(first)) {
            std::vector<Run> cont;
            for (const auto& r : p.maximal_runs()) {
                if (r.steps()[0] == std::pair(first, o)) {
                    std::vector<std::pair<Measurement, std::string>> rest(
                        r.steps().begin() + 1, r.steps().end());
                    cont.emplace_back(std::move(rest));
                }
            }
            Protocol sub = Protocol::from_runs(std::move(cont), dc);
            branches.emplace_back(o, name_protocol(sub));
        }
        Measurement name = Measurement::conditional(base_addr(first), branches);
        if (!added.count(name.id())) {
            term = Term::cond(term, CondData{base_addr(first), branches});
            typecheck(ctx, term);  // surfaces link violations immediately
            added.insert(name.id());
        }
        return name;
    }

    // composite outcome label of a maximal run, relative to name_protocol
    std::string label_of(const Protocol& p, const Run& r) const {
        if (r.empty()) return "star";
        if (p.depth() == 1) return r.steps()[0].second;
        const auto& [first, o] = r.steps()[0];
        std::vector<std::pair<Measurement, std::string>> rest(r.steps().begin() + 1,
                                                              r.steps().end());
        std::vector<Run> cont;
        for (const auto& rr : p.maximal_runs())
            if (rr.steps()[0] == std::pair(first, o))
                cont.emplace_back(std::vector<std::pair<Measurement, std::string>>(
                    rr.steps().begin() + 1, rr.steps().end()));
        Protocol sub = Protocol::from_runs(std::move(cont), dc);
        return pair_label(o, label_of(sub, Run(std::move(rest))));
    }
};

}  // namespace

Term simulation_to_term(const Simulation& sim, const std::string& var) {
    Term cterm = noncontextual_to_term(sim.ancilla);
    Term base = Term::tensor(Term::var(var), Term::tensor(cterm, Term::one()));

    Extractor ex{sim,
                 sim.base().scenario(),
                 Measurement::right(Measurement::right(Measurement::base("star"))),
                 base,
                 {{var, sim.source.scenario()}},
                 {}};
    typecheck(ex.ctx, ex.term);

    PullbackData pi;
    CoarseData h;
    const Scenario& ts = sim.target.scenario();
    for (const auto& x : ts.measurements()) {
        const Protocol& p = sim.protocol_for.at(x);
        pi.vmap.emplace_back(x, ex.name_protocol(p));
        CoarseEntry entry;
        for (const auto& r : p.maximal_runs())
            entry.pairs.emplace_back(ex.label_of(p, r), sim.outcome_for.at(x).at(r.serialize()));
        entry.codomain = ts.outcomes(x);
        h.emplace_back(x, std::move(entry));
    }
    pi.facets = ts.complex().facets();
    Term out = Term::coarse(Term::pullback(std::move(pi), ex.term), std::move(h));
    typecheck(ex.ctx, out);
    return out;
}

}  // namespace ctxlab
