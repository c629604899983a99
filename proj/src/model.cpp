#include "ctxlab/model.hpp"

#include <algorithm>
#include <functional>
#include <iostream>
#include <set>

#include "ctxlab/errors.hpp"
#include "ctxlab/guard.hpp"

namespace ctxlab {

Distribution Distribution::make(VertexSet domain, std::map<Assignment, Rational> weights) {
    Distribution d;
    d.domain_ = std::move(domain);
    Rational total = 0;
    for (auto& [a, w] : weights) {
        if (w < 0) throw DomainError("negative weight at " + a.key());
        if (a.domain() != d.domain_)
            throw DomainError("assignment domain mismatch at '" + a.key() + "'");
        total += w;
        if (w > 0) d.weights_.emplace(a, w);
    }
    if (total != 1)
        throw DomainError("weights sum to " + rational_string(total) + ", expected 1");
    return d;
}

Distribution Distribution::point(const Assignment& a) {
    return make(a.domain(), {{a, Rational(1)}});
}

Rational Distribution::at(const Assignment& a) const {
    auto it = weights_.find(a);
    return it == weights_.end() ? Rational(0) : it->second;
}

Distribution Distribution::marginal_to(const VertexSet& tau) const {
    if (!vertex_subset(tau, domain_)) throw DomainError("marginal outside distribution domain");
    std::map<Assignment, Rational> out;
    for (const auto& [a, w] : weights_) out[a.restrict(tau)] += w;
    return make(tau, std::move(out));
}

Measurement VertexMap::operator()(const Measurement& m) const {
    auto it = map.find(m);
    if (it == map.end()) throw DomainError("vertex map undefined at " + m.id());
    return it->second;
}

VertexSet VertexMap::image(const VertexSet& sigma) const {
    VertexSet out;
    out.reserve(sigma.size());
    for (const auto& v : sigma) out.push_back((*this)(v));
    return make_vertex_set(std::move(out));
}

EmpiricalModel EmpiricalModel::make(Scenario scenario,
                                    std::map<VertexSet, Distribution> facet_dists,
                                    bool check_compatibility) {
    EmpiricalModel e;
    const auto& facets = scenario.complex().facets();
    for (const auto& f : facets) {
        auto it = facet_dists.find(f);
        if (it == facet_dists.end())
            throw DomainError("missing distribution for a facet");
        if (it->second.domain() != f)
            throw DomainError("distribution domain differs from its facet");
    }
    if (facet_dists.size() != facets.size())
        throw DomainError("distribution given for a non-facet");
    e.scenario_ = std::move(scenario);
    e.dists_ = std::move(facet_dists);
    if (check_compatibility) {
        auto report = validate_model(e);
        if (!report.ok()) throw DomainError("incompatible model:\n" + report.to_string());
    }
    return e;
}

const Distribution& EmpiricalModel::at_facet(const VertexSet& facet) const {
    auto it = dists_.find(facet);
    if (it == dists_.end()) throw DomainError("not a facet of the model's scenario");
    return it->second;
}

Distribution EmpiricalModel::marginal(const VertexSet& sigma) const {
    for (const auto& [f, d] : dists_)
        if (vertex_subset(sigma, f)) return d.marginal_to(sigma);
    throw DomainError("marginal requested at a non-face");
}

ValidationReport validate_model(const EmpiricalModel& e) {
    ValidationReport r;
    const auto& facets = e.scenario().complex().facets();
    for (const auto& f : facets) {
        const auto& d = e.at_facet(f);
        Rational total = 0;
        for (const auto& [a, w] : d.weights()) {
            if (w < 0) r.problems.push_back("negative weight at " + a.key());
            total += w;
        }
        if (total != 1) r.problems.push_back("weights sum differs from 1 on a facet");
    }
    for (std::size_t i = 0; i < facets.size(); ++i) {
        for (std::size_t j = i + 1; j < facets.size(); ++j) {
            VertexSet common = vertex_intersection(facets[i], facets[j]);
            if (e.at_facet(facets[i]).marginal_to(common) !=
                e.at_facet(facets[j]).marginal_to(common)) {
                std::string key;
                for (const auto& m : common) key += (key.empty() ? "" : ",") + m.id();
                r.problems.push_back("facet marginals disagree on {" + key + "}");
            }
        }
    }
    return r;
}

EmpiricalModel zero_model() {
    return EmpiricalModel::make(Scenario::zero(),
                                {{VertexSet{}, Distribution::point(Assignment{})}});
}

EmpiricalModel singleton_model() {
    Scenario u = Scenario::singleton();
    Measurement star = u.measurements().front();
    Assignment a = Assignment::make({{star, "star"}});
    return EmpiricalModel::make(u, {{VertexSet{star}, Distribution::point(a)}});
}

EmpiricalModel deterministic_model(const Scenario& s, const Assignment& global) {
    if (global.domain() != s.measurements())
        throw DomainError("deterministic model needs a full global assignment");
    std::map<VertexSet, Distribution> dists;
    for (const auto& f : s.complex().facets())
        dists.emplace(f, Distribution::point(global.restrict(f)));
    return EmpiricalModel::make(s, std::move(dists));
}

Scenario pullback_scenario(const VertexMap& f, const Scenario& s) {
    std::vector<std::pair<Measurement, std::vector<std::string>>> outcomes;
    for (const auto& v : f.domain.vertices()) {
        Measurement target = f(v);
        if (!s.has(target)) throw DomainError("vertex map lands outside the scenario: " + target.id());
        outcomes.emplace_back(v, s.outcomes(target));
    }
    for (const auto& [k, v] : f.map)
        if (!f.domain.has_vertex(k))
            throw DomainError("vertex map defined on unknown vertex " + k.id());
    for (const auto& facet : f.domain.facets())
        if (!s.complex().is_face(f.image(facet)))
            throw DomainError("vertex map is not simplicial");
    return Scenario::make(std::move(outcomes), f.domain);
}

EmpiricalModel pullback(const VertexMap& f, const EmpiricalModel& e) {
    Scenario s2 = pullback_scenario(f, e.scenario());
    std::map<VertexSet, Distribution> dists;
    for (const auto& facet : s2.complex().facets()) {
        VertexSet img = f.image(facet);
        Distribution md = e.marginal(img);
        std::map<Assignment, Rational> weights;
        for (const auto& [t, w] : md.weights()) {
            std::vector<std::pair<Measurement, std::string>> entries;
            for (const auto& v : facet) entries.emplace_back(v, t.at(f(v)));
            weights[Assignment::make(std::move(entries))] += w;
        }
        dists.emplace(facet, Distribution::make(facet, std::move(weights)));
    }
    return EmpiricalModel::make(std::move(s2), std::move(dists));
}

namespace {

void check_family(const Scenario& s, const OutcomeFamily& h) {
    for (const auto& m : s.measurements()) {
        auto it = h.find(m);
        if (it == h.end()) throw DomainError("outcome family missing entry for " + m.id());
        const OutcomeMap& om = it->second;
        if (om.codomain.empty()) throw DomainError("empty codomain for " + m.id());
        std::set<std::string> cod(om.codomain.begin(), om.codomain.end());
        if (cod.size() != om.codomain.size())
            throw DomainError("duplicate codomain label for " + m.id());
        for (const auto& o : s.outcomes(m)) {
            auto jt = om.map.find(o);
            if (jt == om.map.end())
                throw DomainError("outcome map for " + m.id() + " undefined at '" + o + "'");
            if (!cod.count(jt->second))
                throw DomainError("outcome map for " + m.id() + " lands outside its codomain");
        }
    }
    if (h.size() != s.measurements().size())
        throw DomainError("outcome family defined on unknown measurements");
}

}  // namespace

Scenario coarse_scenario(const Scenario& s, const OutcomeFamily& h) {
    check_family(s, h);
    std::vector<std::pair<Measurement, std::vector<std::string>>> outcomes;
    for (const auto& m : s.measurements()) outcomes.emplace_back(m, h.at(m).codomain);
    return Scenario::make(std::move(outcomes), s.complex());
}

EmpiricalModel coarse_grain(const EmpiricalModel& e, const OutcomeFamily& h) {
    Scenario s2 = coarse_scenario(e.scenario(), h);
    std::map<VertexSet, Distribution> dists;
    for (const auto& [facet, d] : e.facet_distributions()) {
        std::map<Assignment, Rational> weights;
        for (const auto& [t, w] : d.weights()) {
            std::vector<std::pair<Measurement, std::string>> entries;
            for (const auto& [m, o] : t.entries()) entries.emplace_back(m, h.at(m).map.at(o));
            weights[Assignment::make(std::move(entries))] += w;
        }
        dists.emplace(facet, Distribution::make(facet, std::move(weights)));
    }
    return EmpiricalModel::make(std::move(s2), std::move(dists));
}

EmpiricalModel mix(const EmpiricalModel& e, const EmpiricalModel& e2, const Rational& lambda) {
    if (!(e.scenario() == e2.scenario()))
        throw DomainError("mix needs both models on the same scenario");
    if (lambda < 0 || lambda > 1)
        throw DomainError("mixing weight " + rational_string(lambda) + " outside [0,1]");
    std::map<VertexSet, Distribution> dists;
    for (const auto& [facet, d] : e.facet_distributions()) {
        std::map<Assignment, Rational> weights;
        for (const auto& [a, w] : d.weights()) weights[a] += lambda * w;
        for (const auto& [a, w] : e2.at_facet(facet).weights())
            weights[a] += (1 - lambda) * w;
        dists.emplace(facet, Distribution::make(facet, std::move(weights)));
    }
    return EmpiricalModel::make(e.scenario(), std::move(dists));
}

namespace {

Assignment tag_assignment(const Assignment& a, bool leftside) {
    std::vector<std::pair<Measurement, std::string>> entries;
    for (const auto& [m, o] : a.entries())
        entries.emplace_back(leftside ? Measurement::left(m) : Measurement::right(m), o);
    return Assignment::make(std::move(entries));
}

// Splits a tagged facet back into its left/right untagged parts.
std::pair<VertexSet, VertexSet> untag_split(const VertexSet& facet) {
    VertexSet left, right;
    for (const auto& m : facet) {
        if (m.kind() == Measurement::Kind::Left) left.push_back(m.inner());
        else if (m.kind() == Measurement::Kind::Right) right.push_back(m.inner());
        else throw DomainError("untagged vertex in a composite scenario: " + m.id());
    }
    return {make_vertex_set(std::move(left)), make_vertex_set(std::move(right))};
}

}  // namespace

EmpiricalModel choice(const EmpiricalModel& e, const EmpiricalModel& e2) {
    Scenario s = coproduct_scenarios(e.scenario(), e2.scenario());
    std::map<VertexSet, Distribution> dists;
    for (const auto& facet : s.complex().facets()) {
        auto [lpart, rpart] = untag_split(facet);
        std::map<Assignment, Rational> weights;
        if (rpart.empty() && !lpart.empty()) {
            Distribution dl = e.marginal(lpart);
            for (const auto& [a, w] : dl.weights())
                weights.emplace(tag_assignment(a, true), w);
        } else if (lpart.empty() && !rpart.empty()) {
            Distribution dr = e2.marginal(rpart);
            for (const auto& [a, w] : dr.weights())
                weights.emplace(tag_assignment(a, false), w);
        } else if (lpart.empty() && rpart.empty()) {
            weights.emplace(Assignment{}, Rational(1));
        } else {
            throw DomainError("mixed facet in a coproduct complex");
        }
        dists.emplace(facet, Distribution::make(facet, std::move(weights)));
    }
    return EmpiricalModel::make(std::move(s), std::move(dists));
}

EmpiricalModel tensor(const EmpiricalModel& e, const EmpiricalModel& e2) {
    Scenario s = join_scenarios(e.scenario(), e2.scenario());
    std::map<VertexSet, Distribution> dists;
    for (const auto& facet : s.complex().facets()) {
        auto [lpart, rpart] = untag_split(facet);
        Distribution dl = e.marginal(lpart);
        Distribution dr = e2.marginal(rpart);
        std::map<Assignment, Rational> weights;
        for (const auto& [a, wa] : dl.weights())
            for (const auto& [b, wb] : dr.weights())
                weights.emplace(tag_assignment(a, true).merged_with(tag_assignment(b, false)),
                                wa * wb);
        dists.emplace(facet, Distribution::make(facet, std::move(weights)));
    }
    return EmpiricalModel::make(std::move(s), std::move(dists));
}

EmpiricalModel conditional(const EmpiricalModel& e, const Measurement& x,
                           const Measurement::Branches& branches) {
    Scenario s2 = extend_conditional(e.scenario(), x, branches);
    Measurement name = Measurement::conditional(x, branches);
    std::map<VertexSet, Distribution> dists;
    for (const auto& facet : s2.complex().facets()) {
        if (!vertex_contains(facet, name)) {
            dists.emplace(facet, e.marginal(facet));
            continue;
        }
        VertexSet sigma;
        for (const auto& m : facet)
            if (!(m == name)) sigma.push_back(m);
        std::map<Assignment, Rational> weights;
        for (const auto& [o, y] : branches) {
            VertexSet ctx = vertex_union(sigma, make_vertex_set({x, y}));
            Distribution md = e.marginal(ctx);
            for (const auto& [t, w] : md.weights()) {
                if (t.at(x) != o) continue;
                Assignment sa = t.restrict(sigma).with(name, pair_label(o, t.at(y)));
                weights[sa] += w;
            }
        }
        dists.emplace(facet, Distribution::make(facet, std::move(weights)));
    }
    return EmpiricalModel::make(std::move(s2), std::move(dists));
}

void DeterministicMorphism::validate() const {
    for (const auto& x : target.measurements()) {
        auto it = pi.find(x);
        if (it == pi.end()) throw DomainError("morphism vertex map undefined at " + x.id());
        if (!source.has(it->second))
            throw DomainError("morphism vertex map lands outside the source scenario");
        auto ht = outcome.find(x);
        if (ht == outcome.end()) throw DomainError("morphism outcome map missing at " + x.id());
        const auto& om = ht->second;
        if (om.codomain != target.outcomes(x))
            throw DomainError("morphism outcome codomain differs from target outcomes at " +
                              x.id());
        for (const auto& p : source.outcomes(it->second)) {
            auto jt = om.map.find(p);
            if (jt == om.map.end())
                throw DomainError("morphism outcome map partial at " + x.id());
            if (std::find(om.codomain.begin(), om.codomain.end(), jt->second) ==
                om.codomain.end())
                throw DomainError("morphism outcome map lands outside target outcomes");
        }
    }
    for (const auto& facet : target.complex().facets()) {
        VertexSet img;
        for (const auto& v : facet) img.push_back(pi.at(v));
        if (!source.complex().is_face(make_vertex_set(std::move(img))))
            throw DomainError("morphism vertex map is not simplicial");
    }
}

DeterministicMorphism identity_morphism(const Scenario& s) {
    DeterministicMorphism m;
    m.source = s;
    m.target = s;
    for (const auto& x : s.measurements()) {
        m.pi.emplace(x, x);
        OutcomeMap om;
        om.codomain = s.outcomes(x);
        for (const auto& o : om.codomain) om.map.emplace(o, o);
        m.outcome.emplace(x, std::move(om));
    }
    return m;
}

DeterministicMorphism compose(const DeterministicMorphism& g, const DeterministicMorphism& f) {
    if (!(f.target == g.source)) throw DomainError("morphism composition type mismatch");
    DeterministicMorphism m;
    m.source = f.source;
    m.target = g.target;
    for (const auto& x : g.target.measurements()) {
        Measurement mid = g.pi.at(x);
        m.pi.emplace(x, f.pi.at(mid));
        OutcomeMap om;
        om.codomain = g.outcome.at(x).codomain;
        for (const auto& [p, q] : f.outcome.at(mid).map)
            om.map.emplace(p, g.outcome.at(x).map.at(q));
        m.outcome.emplace(x, std::move(om));
    }
    return m;
}

EmpiricalModel pushforward(const DeterministicMorphism& m, const EmpiricalModel& d) {
    if (!(m.source == d.scenario())) throw DomainError("pushforward source scenario mismatch");
    m.validate();
    std::map<VertexSet, Distribution> dists;
    for (const auto& facet : m.target.complex().facets()) {
        VertexSet img;
        for (const auto& v : facet) img.push_back(m.pi.at(v));
        img = make_vertex_set(std::move(img));
        Distribution md = d.marginal(img);
        std::map<Assignment, Rational> weights;
        for (const auto& [t, w] : md.weights()) {
            std::vector<std::pair<Measurement, std::string>> entries;
            for (const auto& v : facet)
                entries.emplace_back(v, m.outcome.at(v).map.at(t.at(m.pi.at(v))));
            weights[Assignment::make(std::move(entries))] += w;
        }
        dists.emplace(facet, Distribution::make(facet, std::move(weights)));
    }
    return EmpiricalModel::make(m.target, std::move(dists));
}

namespace {

// Sorted multiset of singleton-marginal weights, a cheap vertex invariant.
std::vector<Rational> singleton_profile(const EmpiricalModel& e, const Measurement& m) {
    std::vector<Rational> out;
    Distribution d = e.marginal({m});
    for (const auto& [a, w] : d.weights()) out.push_back(w);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::size_t> facet_size_multiset(const Scenario& s) {
    std::vector<std::size_t> out;
    for (const auto& f : s.complex().facets()) out.push_back(f.size());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::optional<ModelIso> find_isomorphism(const EmpiricalModel& e, const EmpiricalModel& d) {
    const Scenario& se = e.scenario();
    const Scenario& sd = d.scenario();
    if (se.measurements().size() != sd.measurements().size()) return std::nullopt;
    if (facet_size_multiset(se) != facet_size_multiset(sd)) return std::nullopt;

    const VertexSet& xd = sd.measurements();
    // Candidate images per d-vertex, filtered by outcome count, facet degree
    // and singleton-marginal profile.
    std::map<Measurement, std::vector<std::size_t>> degree_d, degree_e;
    for (const auto& f : sd.complex().facets())
        for (const auto& v : f) degree_d[v].push_back(f.size());
    for (const auto& f : se.complex().facets())
        for (const auto& v : f) degree_e[v].push_back(f.size());
    for (auto& [_, v] : degree_d) std::sort(v.begin(), v.end());
    for (auto& [_, v] : degree_e) std::sort(v.begin(), v.end());

    std::vector<std::vector<Measurement>> candidates;
    unsigned long long space = 1;
    for (const auto& x : xd) {
        std::vector<Measurement> c;
        auto prof = singleton_profile(d, x);
        for (const auto& y : se.measurements()) {
            if (se.outcomes(y).size() != sd.outcomes(x).size()) continue;
            if (degree_e[y] != degree_d[x]) continue;
            if (singleton_profile(e, y) != prof) continue;
            c.push_back(y);
        }
        if (c.empty()) return std::nullopt;
        space *= c.size();
        candidates.push_back(std::move(c));
    }
    if (space > guard_limit())
        std::cerr << "ctxlab: warning: isomorphism search space ~" << space
                  << " exceeds guard; proceeding\n";

    // Backtrack over vertex bijections; verify facet structure, then try
    // marginal-compatible outcome bijections and check the full equation.
    std::map<Measurement, Measurement> f;
    std::set<Measurement> used;

    // Outcome bijections compatible with singleton marginals for a fixed pair.
    auto outcome_bijections = [&](const Measurement& x, const Measurement& y) {
        const auto& ox = sd.outcomes(x);   // target labels (codomain of h_x)
        const auto& oy = se.outcomes(y);   // source labels (domain of h_x)
        Distribution mx = d.marginal({x});
        Distribution my = e.marginal({y});
        std::vector<std::map<std::string, std::string>> result;
        std::vector<int> pick(oy.size(), -1);
        std::vector<bool> taken(ox.size(), false);
        auto weight_d = [&](const std::string& o) {
            return mx.at(Assignment::make({{x, o}}));
        };
        auto weight_e = [&](const std::string& p) {
            return my.at(Assignment::make({{y, p}}));
        };
        std::function<void(std::size_t)> rec = [&](std::size_t i) {
            if (i == oy.size()) {
                std::map<std::string, std::string> h;
                for (std::size_t k = 0; k < oy.size(); ++k) h[oy[k]] = ox[pick[k]];
                result.push_back(std::move(h));
                return;
            }
            for (std::size_t j = 0; j < ox.size(); ++j) {
                if (taken[j]) continue;
                if (weight_e(oy[i]) != weight_d(ox[j])) continue;
                taken[j] = true;
                pick[i] = static_cast<int>(j);
                rec(i + 1);
                taken[j] = false;
            }
        };
        rec(0);
        return result;
    };

    std::optional<ModelIso> found;

    std::function<bool()> try_outcomes = [&]() -> bool {
        // f fixed; check simpliciality both ways via facet image bijection.
        std::set<VertexSet> efacets(se.complex().facets().begin(), se.complex().facets().end());
        std::set<VertexSet> images;
        for (const auto& facet : sd.complex().facets()) {
            VertexSet img;
            for (const auto& v : facet) img.push_back(f.at(v));
            img = make_vertex_set(std::move(img));
            if (img.size() != facet.size()) return false;
            if (!efacets.count(img)) return false;
            images.insert(img);
        }
        if (images.size() != efacets.size()) return false;

        std::vector<std::vector<std::map<std::string, std::string>>> hs;
        for (const auto& x : xd) {
            auto bij = outcome_bijections(x, f.at(x));
            if (bij.empty()) return false;
            hs.push_back(std::move(bij));
        }
        // Iterate the product of per-vertex bijections.
        std::vector<std::size_t> idx(xd.size(), 0);
        while (true) {
            OutcomeFamily h;
            for (std::size_t i = 0; i < xd.size(); ++i) {
                OutcomeMap om;
                om.codomain = sd.outcomes(xd[i]);
                om.map = hs[i][idx[i]];
                h.emplace(xd[i], std::move(om));
            }
            VertexMap vm{sd.complex(), f};
            if (coarse_grain(pullback(vm, e), h) == d) {
                found = ModelIso{f, std::move(h)};
                return true;
            }
            std::size_t i = xd.size();
            bool done = true;
            while (i > 0) {
                --i;
                if (++idx[i] < hs[i].size()) {
                    done = false;
                    break;
                }
                idx[i] = 0;
            }
            if (done) return false;
        }
    };

    std::function<bool(std::size_t)> assign = [&](std::size_t i) -> bool {
        if (i == xd.size()) return try_outcomes();
        for (const auto& y : candidates[i]) {
            if (used.count(y)) continue;
            f.insert_or_assign(xd[i], y);
            used.insert(y);
            if (assign(i + 1)) return true;
            used.erase(y);
            f.erase(xd[i]);
        }
        return false;
    };

    if (xd.empty()) {
        // Both scenarios empty: models are equal iff both are the zero model.
        if (e == d) return ModelIso{};
        return std::nullopt;
    }
    assign(0);
    return found;
}

bool is_isomorphic(const EmpiricalModel& e, const EmpiricalModel& d) {
    return find_isomorphism(e, d).has_value();
}

}  // namespace ctxlab
