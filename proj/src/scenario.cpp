#include "ctxlab/scenario.hpp"

#include <algorithm>
#include <set>

#include "ctxlab/errors.hpp"
#include "ctxlab/guard.hpp"

namespace ctxlab {

VertexSet make_vertex_set(std::vector<Measurement> ms) {
    std::sort(ms.begin(), ms.end());
    ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
    return ms;
}

bool vertex_subset(const VertexSet& a, const VertexSet& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

VertexSet vertex_union(const VertexSet& a, const VertexSet& b) {
    VertexSet out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

VertexSet vertex_intersection(const VertexSet& a, const VertexSet& b) {
    VertexSet out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

bool vertex_disjoint(const VertexSet& a, const VertexSet& b) {
    return vertex_intersection(a, b).empty();
}

bool vertex_contains(const VertexSet& a, const Measurement& m) {
    return std::binary_search(a.begin(), a.end(), m);
}

std::string ValidationReport::to_string() const {
    if (ok()) return "ok";
    std::string out;
    for (const auto& p : problems) {
        out += p;
        out.push_back('\n');
    }
    return out;
}

SimplicialComplex SimplicialComplex::from_facets(std::vector<VertexSet> facets,
                                                 const VertexSet& extra_vertices) {
    SimplicialComplex c;
    std::set<Measurement> verts(extra_vertices.begin(), extra_vertices.end());
    for (auto& f : facets) {
        f = make_vertex_set(std::move(f));
        verts.insert(f.begin(), f.end());
    }
    // Every vertex must sit in some facet; uncovered ones become singletons.
    for (const auto& v : verts) {
        bool covered = false;
        for (const auto& f : facets)
            if (vertex_contains(f, v)) {
                covered = true;
                break;
            }
        if (!covered) facets.push_back({v});
    }
    // Antichain: drop facets contained in another.
    std::sort(facets.begin(), facets.end());
    facets.erase(std::unique(facets.begin(), facets.end()), facets.end());
    std::vector<VertexSet> maximal;
    for (std::size_t i = 0; i < facets.size(); ++i) {
        bool contained = false;
        for (std::size_t j = 0; j < facets.size() && !contained; ++j)
            if (i != j && vertex_subset(facets[i], facets[j]) && facets[i] != facets[j])
                contained = true;
        if (!contained) maximal.push_back(facets[i]);
    }
    if (maximal.empty()) maximal.push_back({});  // Δ0: the empty face
    c.vertices_.assign(verts.begin(), verts.end());
    c.facets_ = std::move(maximal);
    return c;
}

bool SimplicialComplex::has_vertex(const Measurement& m) const {
    return vertex_contains(vertices_, m);
}

bool SimplicialComplex::is_face(const VertexSet& sigma) const {
    for (const auto& v : sigma)
        if (!has_vertex(v)) throw DomainError("unknown vertex " + v.id());
    for (const auto& f : facets_)
        if (vertex_subset(sigma, f)) return true;
    return false;
}

std::vector<VertexSet> SimplicialComplex::all_faces() const {
    std::set<VertexSet> faces;
    faces.insert({});
    for (const auto& f : facets_) {
        check_guard("face enumeration", faces.size() + (1ULL << std::min<std::size_t>(f.size(), 62)));
        // all subsets of f
        std::size_t n = f.size();
        for (std::size_t mask = 1; mask < (std::size_t(1) << n); ++mask) {
            VertexSet sub;
            for (std::size_t i = 0; i < n; ++i)
                if (mask & (std::size_t(1) << i)) sub.push_back(f[i]);
            faces.insert(sub);
        }
    }
    std::vector<VertexSet> out(faces.begin(), faces.end());
    std::sort(out.begin(), out.end(), [](const VertexSet& a, const VertexSet& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a < b;
    });
    return out;
}

SimplicialComplex SimplicialComplex::link(const VertexSet& sigma) const {
    if (!is_face(sigma)) throw DomainError("link of a non-face");
    std::vector<VertexSet> facets;
    for (const auto& f : facets_) {
        if (!vertex_subset(sigma, f)) continue;
        VertexSet tau;
        std::set_difference(f.begin(), f.end(), sigma.begin(), sigma.end(),
                            std::back_inserter(tau));
        facets.push_back(std::move(tau));
    }
    return from_facets(std::move(facets));
}

namespace {

VertexSet tag_set(const VertexSet& vs, bool leftside) {
    VertexSet out;
    out.reserve(vs.size());
    for (const auto& v : vs)
        out.push_back(leftside ? Measurement::left(v) : Measurement::right(v));
    return make_vertex_set(std::move(out));
}

}  // namespace

SimplicialComplex join(const SimplicialComplex& a, const SimplicialComplex& b) {
    std::vector<VertexSet> facets;
    for (const auto& fa : a.facets())
        for (const auto& fb : b.facets())
            facets.push_back(vertex_union(tag_set(fa, true), tag_set(fb, false)));
    return SimplicialComplex::from_facets(std::move(facets),
                                          vertex_union(tag_set(a.vertices(), true),
                                                       tag_set(b.vertices(), false)));
}

SimplicialComplex coproduct(const SimplicialComplex& a, const SimplicialComplex& b) {
    std::vector<VertexSet> facets;
    for (const auto& fa : a.facets()) facets.push_back(tag_set(fa, true));
    for (const auto& fb : b.facets()) facets.push_back(tag_set(fb, false));
    return SimplicialComplex::from_facets(std::move(facets),
                                          vertex_union(tag_set(a.vertices(), true),
                                                       tag_set(b.vertices(), false)));
}

Scenario::Scenario() : d_(nullptr) { *this = zero(); }

Scenario Scenario::make(std::vector<std::pair<Measurement, std::vector<std::string>>> outcomes,
                        SimplicialComplex complex) {
    auto d = std::make_shared<Data>();
    for (auto& [m, os] : outcomes) {
        if (os.empty()) throw DomainError("empty outcome set for " + m.id());
        std::set<std::string> seen(os.begin(), os.end());
        if (seen.size() != os.size()) throw DomainError("duplicate outcome label for " + m.id());
        if (!d->outcomes.emplace(m, std::move(os)).second)
            throw DomainError("duplicate measurement " + m.id());
    }
    for (const auto& v : complex.vertices())
        if (!d->outcomes.count(v)) throw DomainError("no outcome set for " + v.id());
    if (d->outcomes.size() != complex.vertices().size())
        throw DomainError("outcome sets given for measurements outside the complex");
    d->complex = std::move(complex);
    return Scenario(std::move(d));
}

Scenario Scenario::zero() {
    static const Scenario z = make({}, SimplicialComplex::from_facets({}));
    return z;
}

Scenario Scenario::singleton() {
    static const Scenario u = [] {
        Measurement star = Measurement::base("star");
        return make({{star, {"star"}}}, SimplicialComplex::from_facets({{star}}));
    }();
    return u;
}

bool Scenario::has(const Measurement& m) const { return d_->outcomes.count(m) > 0; }

const std::vector<std::string>& Scenario::outcomes(const Measurement& m) const {
    auto it = d_->outcomes.find(m);
    if (it == d_->outcomes.end()) throw DomainError("unknown measurement " + m.id());
    return it->second;
}

int Scenario::outcome_index(const Measurement& m, const std::string& label) const {
    const auto& os = outcomes(m);
    for (std::size_t i = 0; i < os.size(); ++i)
        if (os[i] == label) return static_cast<int>(i);
    throw DomainError("unknown outcome '" + label + "' for " + m.id());
}

bool Scenario::operator==(const Scenario& o) const {
    if (d_ == o.d_) return true;
    return d_->complex == o.d_->complex && d_->outcomes == o.d_->outcomes;
}

ValidationReport validate_scenario(const Scenario& s) {
    ValidationReport r;
    for (const auto& m : s.measurements()) {
        if (s.outcomes(m).empty()) r.problems.push_back("empty outcome set for " + m.id());
    }
    const auto& facets = s.complex().facets();
    for (std::size_t i = 0; i < facets.size(); ++i)
        for (std::size_t j = 0; j < facets.size(); ++j)
            if (i != j && vertex_subset(facets[i], facets[j]))
                r.problems.push_back("facet contained in another facet");
    for (const auto& v : s.measurements()) {
        bool covered = false;
        for (const auto& f : facets)
            if (vertex_contains(f, v)) covered = true;
        if (!covered) r.problems.push_back("vertex " + v.id() + " not covered by any facet");
    }
    return r;
}

Assignment Assignment::make(std::vector<std::pair<Measurement, std::string>> entries) {
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 0; i + 1 < entries.size(); ++i)
        if (entries[i].first == entries[i + 1].first)
            throw DomainError("assignment mentions " + entries[i].first.id() + " twice");
    Assignment a;
    a.entries_ = std::move(entries);
    return a;
}

VertexSet Assignment::domain() const {
    VertexSet out;
    out.reserve(entries_.size());
    for (const auto& [m, _] : entries_) out.push_back(m);
    return out;
}

bool Assignment::defines(const Measurement& m) const {
    for (const auto& [k, _] : entries_)
        if (k == m) return true;
    return false;
}

const std::string& Assignment::at(const Measurement& m) const {
    for (const auto& [k, v] : entries_)
        if (k == m) return v;
    throw DomainError("assignment does not define " + m.id());
}

Assignment Assignment::restrict(const VertexSet& tau) const {
    std::vector<std::pair<Measurement, std::string>> out;
    for (const auto& m : tau) {
        if (!defines(m)) throw DomainError("restriction outside assignment domain: " + m.id());
        out.emplace_back(m, at(m));
    }
    return make(std::move(out));
}

Assignment Assignment::merged_with(const Assignment& other) const {
    auto out = entries_;
    for (const auto& [m, v] : other.entries_) {
        if (defines(m)) {
            if (at(m) != v) throw DomainError("conflicting assignments for " + m.id());
        } else {
            out.emplace_back(m, v);
        }
    }
    return make(std::move(out));
}

Assignment Assignment::with(const Measurement& m, const std::string& label) const {
    auto out = entries_;
    out.emplace_back(m, label);
    return make(std::move(out));
}

std::string Assignment::key() const {
    std::string out;
    bool first = true;
    for (const auto& [m, v] : entries_) {
        if (!first) out.push_back(',');
        first = false;
        out += m.id() + "=" + v;
    }
    return out;
}

std::vector<Assignment> enumerate_assignments(const Scenario& s, const VertexSet& sigma) {
    for (const auto& m : sigma)
        if (!s.has(m)) throw DomainError("unknown measurement " + m.id());
    check_guard("assignment enumeration", count_assignments(s, sigma));
    std::vector<Assignment> out;
    std::vector<std::size_t> idx(sigma.size(), 0);
    while (true) {
        std::vector<std::pair<Measurement, std::string>> entries;
        for (std::size_t i = 0; i < sigma.size(); ++i)
            entries.emplace_back(sigma[i], s.outcomes(sigma[i])[idx[i]]);
        out.push_back(Assignment::make(std::move(entries)));
        // odometer, rightmost fastest
        std::size_t i = sigma.size();
        while (i > 0) {
            --i;
            if (++idx[i] < s.outcomes(sigma[i]).size()) break;
            idx[i] = 0;
            if (i == 0) return out;
        }
        if (sigma.empty()) return out;
    }
}

unsigned long long count_assignments(const Scenario& s, const VertexSet& sigma) {
    unsigned long long n = 1;
    for (const auto& m : sigma) {
        n *= s.outcomes(m).size();
        if (n > guard_limit() * 2) return n;  // early out before overflow
    }
    return n;
}

SimplicialComplex extend_complex(const SimplicialComplex& c, const Measurement& x,
                                 const std::vector<Measurement>& branch_targets,
                                 const Measurement& name) {
    // New faces sigma ∪ {name} need sigma ∪ {x, y_o} ∈ Σ for all o. Maximal
    // such sigma arise as intersections of facet tuples (F_o) with
    // {x, y_o} ⊆ F_o.
    std::vector<std::vector<const VertexSet*>> candidates;  // per branch
    unsigned long long tuple_count = 1;
    for (const auto& y : branch_targets) {
        std::vector<const VertexSet*> cand;
        for (const auto& f : c.facets())
            if (vertex_contains(f, x) && vertex_contains(f, y)) cand.push_back(&f);
        if (cand.empty()) throw DomainError("no facet contains both " + x.id() + " and " + y.id());
        tuple_count *= cand.size();
        check_guard("conditional extension", tuple_count);
        candidates.push_back(std::move(cand));
    }
    std::set<VertexSet> new_faces;
    std::vector<std::size_t> idx(candidates.size(), 0);
    while (true) {
        VertexSet inter = *candidates[0][idx[0]];
        for (std::size_t i = 1; i < candidates.size(); ++i)
            inter = vertex_intersection(inter, *candidates[i][idx[i]]);
        new_faces.insert(vertex_union(inter, {name}));
        std::size_t i = candidates.size();
        bool done = true;
        while (i > 0) {
            --i;
            if (++idx[i] < candidates[i].size()) {
                done = false;
                break;
            }
            idx[i] = 0;
        }
        if (done) break;
    }

    std::vector<VertexSet> facets = c.facets();
    for (const auto& f : new_faces) facets.push_back(f);
    VertexSet verts = c.vertices();
    verts.push_back(name);
    return SimplicialComplex::from_facets(std::move(facets), make_vertex_set(std::move(verts)));
}

Scenario extend_conditional(const Scenario& s, const Measurement& x,
                            const Measurement::Branches& branches) {
    if (!s.has(x)) throw DomainError("conditional on unknown measurement " + x.id());
    const auto& ox = s.outcomes(x);
    if (branches.size() != ox.size())
        throw DomainError("conditional branch family must cover every outcome of " + x.id());
    for (std::size_t i = 0; i < ox.size(); ++i)
        if (branches[i].first != ox[i])
            throw DomainError("conditional branches must follow declared outcome order of " +
                              x.id());
    SimplicialComplex lk = s.complex().link({x});
    std::vector<Measurement> targets;
    for (const auto& [o, y] : branches) {
        if (!lk.has_vertex(y))
            throw DomainError("branch target " + y.id() + " is not in the link of " + x.id());
        targets.push_back(y);
    }

    Measurement name = Measurement::conditional(x, branches);
    if (s.has(name)) throw DomainError("conditional name collides with existing measurement " +
                                       name.id());

    // Outcomes: dependent pairs (o, o') in declared-order product.
    std::vector<std::string> labels;
    for (const auto& [o, y] : branches)
        for (const auto& o2 : s.outcomes(y)) labels.push_back(pair_label(o, o2));

    std::vector<std::pair<Measurement, std::vector<std::string>>> outcomes;
    for (const auto& m : s.measurements()) outcomes.emplace_back(m, s.outcomes(m));
    outcomes.emplace_back(name, std::move(labels));
    return Scenario::make(std::move(outcomes), extend_complex(s.complex(), x, targets, name));
}

namespace {

std::vector<std::pair<Measurement, std::vector<std::string>>> tagged_outcomes(const Scenario& a,
                                                                              const Scenario& b) {
    std::vector<std::pair<Measurement, std::vector<std::string>>> out;
    for (const auto& m : a.measurements())
        out.emplace_back(Measurement::left(m), a.outcomes(m));
    for (const auto& m : b.measurements())
        out.emplace_back(Measurement::right(m), b.outcomes(m));
    return out;
}

}  // namespace

Scenario join_scenarios(const Scenario& a, const Scenario& b) {
    return Scenario::make(tagged_outcomes(a, b), join(a.complex(), b.complex()));
}

Scenario coproduct_scenarios(const Scenario& a, const Scenario& b) {
    return Scenario::make(tagged_outcomes(a, b), coproduct(a.complex(), b.complex()));
}

}  // namespace ctxlab
