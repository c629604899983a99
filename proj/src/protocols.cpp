#include "ctxlab/protocols.hpp"

#include <algorithm>
#include <functional>
#include <mutex>
#include <set>
#include <stdexcept>

#include "ctxlab/errors.hpp"
#include "ctxlab/guard.hpp"

namespace ctxlab {

Run::Run(std::vector<std::pair<Measurement, std::string>> steps) : steps_(std::move(steps)) {
    std::set<Measurement> seen;
    for (const auto& [m, o] : steps_)
        if (!seen.insert(m).second) throw DomainError("run repeats measurement " + m.id());
}

VertexSet Run::context() const {
    VertexSet out;
    for (const auto& [m, o] : steps_) out.push_back(m);
    return make_vertex_set(std::move(out));
}

Assignment Run::assignment() const {
    std::vector<std::pair<Measurement, std::string>> entries(steps_.begin(), steps_.end());
    return Assignment::make(std::move(entries));
}

bool Run::is_prefix_of(const Run& other) const {
    if (length() > other.length()) return false;
    for (std::size_t i = 0; i < length(); ++i)
        if (steps_[i] != other.steps_[i]) return false;
    return true;
}

Run Run::prefix(std::size_t n) const {
    return Run({steps_.begin(), steps_.begin() + std::min(n, steps_.size())});
}

Run Run::extended(const Measurement& m, const std::string& outcome) const {
    auto steps = steps_;
    steps.emplace_back(m, outcome);
    return Run(std::move(steps));
}

std::string Run::serialize() const {
    if (steps_.empty()) return "stop";
    std::string out;
    for (const auto& [m, o] : steps_) {
        if (!out.empty()) out.push_back(';');
        out += m.id() + "=" + o;
    }
    return out;
}

namespace {

bool plain_ids(const Scenario& s) {
    for (const auto& m : s.measurements())
        if (m.id().find_first_of("=;|") != std::string::npos) return false;
    return true;
}

}  // namespace

Run Run::deserialize(const Scenario& s, const std::string& text) {
    if (text == "stop") return Run{};
    if (!plain_ids(s))
        throw DomainError("run deserialization over nested MP scenarios is not supported");
    std::vector<std::pair<Measurement, std::string>> steps;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t semi = text.find(';', pos);
        std::string step = text.substr(pos, semi == std::string::npos ? semi : semi - pos);
        std::size_t eq = step.find('=');
        if (eq == std::string::npos) throw DomainError("bad run step '" + step + "'");
        Measurement m = Measurement::parse(step.substr(0, eq));
        std::string o = step.substr(eq + 1);
        if (!s.has(m)) throw DomainError("run mentions unknown measurement " + m.id());
        if (s.outcome_index(m, o) < 0) throw DomainError("bad outcome in run");
        steps.emplace_back(std::move(m), std::move(o));
        if (semi == std::string::npos) break;
        pos = semi + 1;
    }
    return Run(std::move(steps));
}

bool consistent(const Run& a, const Run& b) {
    for (const auto& [m, o] : a.steps())
        for (const auto& [m2, o2] : b.steps())
            if (m == m2 && o != o2) return false;
    return true;
}

Run merge(const Run& a, const Run& b) {
    if (!consistent(a, b)) return Run{};
    Run acc = a;
    for (const auto& [m, o] : b.steps()) {
        bool done = false;
        for (const auto& [m2, _] : acc.steps())
            if (m2 == m) done = true;
        if (!done) acc = acc.extended(m, o);  // "no need to redo it"
    }
    return acc;
}

ProtocolCheck is_protocol(const std::vector<Run>& runs, const Scenario& s) {
    auto fail = [](std::string why) { return ProtocolCheck{false, std::move(why)}; };
    if (runs.empty()) return fail("a protocol must be a non-empty set of runs");
    std::set<Run> set(runs.begin(), runs.end());
    for (const auto& r : runs) {
        try {
            if (!s.complex().is_face(r.context()))
                return fail("run context is not a face: " + r.serialize());
            for (const auto& [m, o] : r.steps()) s.outcome_index(m, o);
        } catch (const DomainError& e) {
            return fail(e.what());
        }
        // (i) prefix closure
        for (std::size_t n = 0; n < r.length(); ++n)
            if (!set.count(r.prefix(n)))
                return fail("condition (i): missing prefix of " + r.serialize());
    }
    for (const auto& r : runs) {
        if (r.empty()) continue;
        Run head = r.prefix(r.length() - 1);
        const auto& [x, o] = r.steps().back();
        // (ii) outcome completeness
        for (const auto& o2 : s.outcomes(x))
            if (!set.count(head.extended(x, o2)))
                return fail("condition (ii): missing sibling outcome '" + o2 + "' after " +
                            head.serialize());
        // (iii) deterministic branching
        for (const auto& r2 : runs) {
            if (r2.empty() || r2.length() != r.length()) continue;
            if (!(r2.prefix(r2.length() - 1) == head)) continue;
            if (!(r2.steps().back().first == x))
                return fail("condition (iii): runs " + r.serialize() + " and " + r2.serialize() +
                            " branch to different measurements");
        }
    }
    return {};
}

Protocol Protocol::from_runs(std::vector<Run> runs, const Scenario& s) {
    std::set<Run> closed;
    for (const auto& r : runs)
        for (std::size_t n = 0; n <= r.length(); ++n) closed.insert(r.prefix(n));
    std::vector<Run> all(closed.begin(), closed.end());
    ProtocolCheck c = is_protocol(all, s);
    if (!c.ok) throw DomainError("not a measurement protocol: " + c.violation);
    Protocol p;
    for (const auto& r : all) {
        bool maximal = true;
        for (const auto& r2 : all)
            if (!(r == r2) && r.is_prefix_of(r2)) maximal = false;
        if (maximal) p.maximal_.push_back(r);
    }
    std::sort(p.maximal_.begin(), p.maximal_.end());
    return p;
}

std::vector<Run> Protocol::all_runs() const {
    std::set<Run> closed;
    for (const auto& r : maximal_)
        for (std::size_t n = 0; n <= r.length(); ++n) closed.insert(r.prefix(n));
    return {closed.begin(), closed.end()};
}

std::size_t Protocol::depth() const {
    std::size_t d = 0;
    for (const auto& r : maximal_) d = std::max(d, r.length());
    return d;
}

std::optional<Measurement> Protocol::next_after(const Run& prefix) const {
    for (const auto& r : maximal_)
        if (prefix.is_prefix_of(r) && prefix.length() < r.length())
            return r.steps()[prefix.length()].first;
    return std::nullopt;
}

bool Protocol::contains(const Run& r) const {
    for (const auto& m : maximal_)
        if (r.is_prefix_of(m)) return true;
    return false;
}

std::string Protocol::serialize() const {
    std::string out;
    for (const auto& r : maximal_) {
        if (!out.empty()) out.push_back('|');
        out += r.serialize();
    }
    return out;
}

Protocol Protocol::deserialize(const Scenario& s, const std::string& text) {
    if (!plain_ids(s))
        throw DomainError("protocol deserialization over nested MP scenarios is not supported");
    std::vector<Run> runs;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t bar = text.find('|', pos);
        runs.push_back(Run::deserialize(
            s, text.substr(pos, bar == std::string::npos ? bar : bar - pos)));
        if (bar == std::string::npos) break;
        pos = bar + 1;
    }
    return from_runs(std::move(runs), s);
}

Protocol counit_protocol(const Scenario& s, const Measurement& x) {
    std::vector<Run> runs;
    for (const auto& o : s.outcomes(x)) runs.push_back(Run{}.extended(x, o));
    return Protocol::from_runs(std::move(runs), s);
}

Protocol stop_protocol() {
    // the empty-run protocol is valid on every scenario
    return Protocol::from_runs({Run{}}, Scenario::zero());
}

// ---------------------------------------------------------------------------
// MpSpace
// ---------------------------------------------------------------------------

struct MpSpace::Data {
    Scenario base;
    int depth;
    std::vector<Protocol> protocols;
    std::map<std::string, std::size_t> index;  // serialize -> position
    mutable std::map<std::pair<std::size_t, std::size_t>, bool> pairwise;
    mutable std::mutex mutex;
};

namespace {

// All protocol continuations from context sigma with at most `depth` further
// steps, each given by its set of maximal runs (which extend `sofar`).
std::vector<std::vector<Run>> enumerate_from(const Scenario& s, const VertexSet& sigma,
                                             int depth, const Run& sofar,
                                             unsigned long long& budget) {
    auto spend = [&] {
        if (budget == 0) throw GuardExceeded("measurement protocol enumeration", guard_limit());
        budget--;
    };
    spend();
    std::vector<std::vector<Run>> out;
    out.push_back({sofar});  // stop here: sofar is maximal

    if (depth == 0) return out;
    SimplicialComplex lk = s.complex().link(sigma);
    for (const auto& x : lk.vertices()) {
        // continue with x: pick one continuation per outcome (cartesian product)
        std::vector<std::vector<std::vector<Run>>> alts;
        for (const auto& o : s.outcomes(x))
            alts.push_back(
                enumerate_from(s, vertex_union(sigma, {x}), depth - 1, sofar.extended(x, o),
                               budget));
        std::vector<std::size_t> idx(alts.size(), 0);
        while (true) {
            spend();
            std::vector<Run> combined;
            for (std::size_t i = 0; i < alts.size(); ++i)
                for (const auto& r : alts[i][idx[i]]) combined.push_back(r);
            out.push_back(std::move(combined));
            std::size_t i = alts.size();
            bool done = true;
            while (i > 0) {
                --i;
                if (++idx[i] < alts[i].size()) {
                    done = false;
                    break;
                }
                idx[i] = 0;
            }
            if (done) break;
        }
    }
    return out;
}

}  // namespace

MpSpace MpSpace::build(const Scenario& base, int depth) {
    auto d = std::make_shared<Data>();
    d->base = base;
    int cap = static_cast<int>(base.measurements().size());
    d->depth = depth < 0 ? cap : std::min(depth, cap);

    unsigned long long budget = guard_limit();
    std::vector<std::vector<Run>> runsets = enumerate_from(base, {}, d->depth, Run{}, budget);

    std::set<Protocol> protos;
    for (auto& rs : runsets) protos.insert(Protocol::from_runs(rs, base));
    d->protocols.assign(protos.begin(), protos.end());
    for (std::size_t i = 0; i < d->protocols.size(); ++i)
        d->index.emplace(d->protocols[i].serialize(), i);
    MpSpace out;
    out.d_ = std::move(d);
    return out;
}

const Scenario& MpSpace::base() const { return d_->base; }
int MpSpace::depth() const { return d_->depth; }
const std::vector<Protocol>& MpSpace::protocols() const { return d_->protocols; }

Measurement MpSpace::measurement_of(const Protocol& p) const {
    if (!contains(p)) throw DomainError("protocol outside this MP space: " + p.serialize());
    return Measurement::base(p.serialize());
}

const Protocol& MpSpace::protocol_of(const Measurement& m) const {
    if (m.kind() != Measurement::Kind::Base)
        throw DomainError("not an MP measurement: " + m.id());
    auto it = d_->index.find(m.base_name());
    if (it == d_->index.end()) throw DomainError("not an MP measurement: " + m.id());
    return d_->protocols[it->second];
}

bool MpSpace::contains(const Protocol& p) const { return d_->index.count(p.serialize()) > 0; }

namespace {

// Search for a pairwise-consistent choice of runs whose joint context is not
// a face; absence of such a witness is exactly n-ary compatibility. A partial
// violating choice extends by empty runs, so it may stop early.
bool find_incompatibility(const Scenario& base, const std::vector<std::vector<Run>>& runs,
                          std::size_t i, std::vector<const Run*>& chosen) {
    VertexSet ctx;
    for (const Run* r : chosen) ctx = vertex_union(ctx, r->context());
    if (!base.complex().is_face(ctx)) return true;
    if (i == runs.size()) return false;
    for (const Run& r : runs[i]) {
        bool ok = true;
        for (const Run* prev : chosen)
            if (!consistent(*prev, r)) ok = false;
        if (!ok) continue;
        chosen.push_back(&r);
        if (find_incompatibility(base, runs, i + 1, chosen)) return true;
        chosen.pop_back();
    }
    return false;
}

bool runs_compatible(const Scenario& base, const std::vector<const Protocol*>& ps) {
    std::vector<std::vector<Run>> runs;
    for (const Protocol* p : ps) runs.push_back(p->all_runs());
    std::vector<const Run*> chosen;
    return !find_incompatibility(base, runs, 0, chosen);
}

}  // namespace

bool MpSpace::compatible(const std::vector<Protocol>& ps) const {
    // memoized pairwise prefilter
    std::vector<std::size_t> ids;
    for (const auto& p : ps) {
        auto it = d_->index.find(p.serialize());
        if (it == d_->index.end())
            throw DomainError("protocol outside this MP space: " + p.serialize());
        ids.push_back(it->second);
    }
    for (std::size_t a = 0; a < ids.size(); ++a)
        for (std::size_t b = a + 1; b < ids.size(); ++b) {
            auto key = std::minmax(ids[a], ids[b]);
            bool pair_ok;
            {
                std::lock_guard<std::mutex> lock(d_->mutex);
                auto it = d_->pairwise.find(key);
                if (it != d_->pairwise.end()) {
                    pair_ok = it->second;
                } else {
                    pair_ok = runs_compatible(
                        d_->base, {&d_->protocols[key.first], &d_->protocols[key.second]});
                    d_->pairwise.emplace(key, pair_ok);
                }
            }
            if (!pair_ok) return false;
        }
    if (ps.size() <= 2) return true;
    std::vector<const Protocol*> ptrs;
    for (std::size_t id : ids) ptrs.push_back(&d_->protocols[id]);
    return runs_compatible(d_->base, ptrs);
}

Scenario MpSpace::materialize() const {
    const auto& ps = d_->protocols;
    std::size_t n = ps.size();

    // maximal compatible sets, Bron-Kerbosch style over the monotone predicate
    std::vector<VertexSet> facets;
    unsigned long long work = 0;
    std::function<void(std::vector<std::size_t>&, std::vector<std::size_t>,
                       std::vector<std::size_t>)>
        expand = [&](std::vector<std::size_t>& R, std::vector<std::size_t> P,
                     std::vector<std::size_t> X) {
            if (++work > guard_limit())
                throw GuardExceeded("MP facet enumeration", work);
            if (P.empty() && X.empty()) {
                VertexSet f;
                for (std::size_t i : R) f.push_back(Measurement::base(ps[i].serialize()));
                facets.push_back(make_vertex_set(std::move(f)));
                return;
            }
            while (!P.empty()) {
                std::size_t v = P.front();
                P.erase(P.begin());
                R.push_back(v);
                auto extends = [&](std::size_t w) {
                    std::vector<Protocol> test;
                    for (std::size_t i : R) test.push_back(ps[i]);
                    test.push_back(ps[w]);
                    return compatible(test);
                };
                std::vector<std::size_t> P2, X2;
                for (std::size_t w : P)
                    if (extends(w)) P2.push_back(w);
                for (std::size_t w : X)
                    if (extends(w)) X2.push_back(w);
                expand(R, std::move(P2), std::move(X2));
                R.pop_back();
                X.push_back(v);
            }
        };
    std::vector<std::size_t> R, P, X;
    for (std::size_t i = 0; i < n; ++i) P.push_back(i);
    expand(R, std::move(P), std::move(X));

    std::vector<std::pair<Measurement, std::vector<std::string>>> outcomes;
    for (const auto& p : ps) {
        std::vector<std::string> labels;
        for (const auto& r : p.maximal_runs()) labels.push_back(r.serialize());
        outcomes.emplace_back(Measurement::base(p.serialize()), std::move(labels));
    }
    return Scenario::make(std::move(outcomes), SimplicialComplex::from_facets(std::move(facets)));
}

Distribution mp_distribution(const EmpiricalModel& e, const MpSpace& space,
                             const std::vector<Protocol>& sigma) {
    if (!space.compatible(sigma)) throw DomainError("incompatible protocol set");
    VertexSet domain;
    for (const auto& p : sigma) domain.push_back(space.measurement_of(p));
    domain = make_vertex_set(std::move(domain));
    if (domain.size() != sigma.size()) throw DomainError("repeated protocol in the set");

    std::map<Assignment, Rational> weights;
    std::vector<std::size_t> idx(sigma.size(), 0);
    while (true) {
        std::vector<const Run*> runs;
        for (std::size_t i = 0; i < sigma.size(); ++i)
            runs.push_back(&sigma[i].maximal_runs()[idx[i]]);
        bool ok = true;
        for (std::size_t a = 0; a < runs.size() && ok; ++a)
            for (std::size_t b = a + 1; b < runs.size() && ok; ++b)
                if (!consistent(*runs[a], *runs[b])) ok = false;
        if (ok) {
            VertexSet ctx;
            Assignment joint;
            for (const Run* r : runs) {
                ctx = vertex_union(ctx, r->context());
                joint = joint.merged_with(r->assignment());
            }
            Rational w = e.marginal(ctx).at(joint.restrict(ctx));
            if (w != 0) {
                std::vector<std::pair<Measurement, std::string>> entries;
                for (std::size_t i = 0; i < sigma.size(); ++i)
                    entries.emplace_back(space.measurement_of(sigma[i]),
                                         runs[i]->serialize());
                weights[Assignment::make(std::move(entries))] += w;
            }
        }
        std::size_t i = sigma.size();
        bool done = true;
        while (i > 0) {
            --i;
            if (++idx[i] < sigma[i].maximal_runs().size()) {
                done = false;
                break;
            }
            idx[i] = 0;
        }
        if (done || sigma.empty()) break;
    }
    return Distribution::make(domain, std::move(weights));
}

EmpiricalModel mp_model(const EmpiricalModel& e, const MpSpace& space) {
    Scenario s = space.materialize();
    std::map<VertexSet, Distribution> dists;
    for (const auto& facet : s.complex().facets()) {
        std::vector<Protocol> sigma;
        for (const auto& m : facet) sigma.push_back(space.protocol_of(m));
        dists.emplace(facet, mp_distribution(e, space, sigma));
    }
    return EmpiricalModel::make(std::move(s), std::move(dists));
}

// ---------------------------------------------------------------------------
// Comonad structure
// ---------------------------------------------------------------------------

void MpMorphism::validate() const {
    for (const auto& y : target.measurements()) {
        auto it = pi.find(y);
        if (it == pi.end()) throw DomainError("mp morphism undefined at " + y.id());
        if (!source.contains(it->second))
            throw DomainError("mp morphism maps " + y.id() + " outside its source space");
        auto ht = h.find(y);
        if (ht == h.end()) throw DomainError("mp morphism outcome map missing at " + y.id());
        for (const auto& r : it->second.maximal_runs()) {
            auto jt = ht->second.find(r.serialize());
            if (jt == ht->second.end())
                throw DomainError("mp morphism outcome map partial at " + y.id());
            if (std::find(target.outcomes(y).begin(), target.outcomes(y).end(), jt->second) ==
                target.outcomes(y).end())
                throw DomainError("mp morphism outcome map lands outside target outcomes");
        }
    }
    for (const auto& facet : target.complex().facets()) {
        std::vector<Protocol> sigma;
        for (const auto& y : facet) sigma.push_back(pi.at(y));
        std::sort(sigma.begin(), sigma.end());
        sigma.erase(std::unique(sigma.begin(), sigma.end()), sigma.end());
        if (!source.compatible(sigma))
            throw DomainError("mp morphism is not simplicial on a target facet");
    }
}

bool MpMorphism::equal_on(const MpMorphism& other) const {
    return target == other.target && pi == other.pi && h == other.h;
}

bool MpToMpMorphism::equal_on(const MpToMpMorphism& other) const {
    return pi == other.pi && h == other.h;
}

MpMorphism mp_counit(const MpSpace& space) {
    MpMorphism m;
    m.source = space;
    m.target = space.base();
    for (const auto& x : space.base().measurements()) {
        Protocol p = counit_protocol(space.base(), x);
        std::map<std::string, std::string> hx;
        for (const auto& r : p.maximal_runs()) hx.emplace(r.serialize(), r.steps()[0].second);
        m.pi.emplace(x, std::move(p));
        m.h.emplace(x, std::move(hx));
    }
    m.validate();
    return m;
}

int extension_depth(const MpMorphism& m, int ydepth) {
    std::size_t longest = 0;
    for (const auto& [y, p] : m.pi) longest = std::max(longest, p.depth());
    unsigned long long need = static_cast<unsigned long long>(std::max(ydepth, 0)) * longest;
    std::size_t cap = m.source.base().measurements().size();
    return static_cast<int>(std::min<unsigned long long>(need, cap));
}

namespace {

// Interprets a maximal run of pi-dagger(Q) back as the run of Q it simulates.
Run decode_run(const MpMorphism& m, const Protocol& q, const Run& merged) {
    Assignment acc = merged.assignment();
    Run yrun;
    while (auto next = q.next_after(yrun)) {
        const Protocol& interp = m.pi.at(*next);
        Run walk;
        while (auto need = interp.next_after(walk)) {
            if (!acc.defines(*need))
                throw std::logic_error("mp extension decode: measurement not in merged run");
            walk = walk.extended(*need, acc.at(*need));
        }
        yrun = yrun.extended(*next, m.h.at(*next).at(walk.serialize()));
    }
    return yrun;
}

}  // namespace

MpToMpMorphism mp_extend(const MpMorphism& m, const MpSpace& extended_source,
                         const MpSpace& target_space) {
    if (!(target_space.base() == m.target))
        throw DomainError("mp_extend target space mismatch");
    if (!(extended_source.base() == m.source.base()))
        throw DomainError("mp_extend source base mismatch");
    MpToMpMorphism out;
    out.source = extended_source;
    out.target = target_space;
    const Scenario& base = m.source.base();

    for (const Protocol& q : target_space.protocols()) {
        // generating merges: per maximal run of q, all pairwise-consistent
        // tuples of interpreting maximal runs
        std::set<Run> gen;
        gen.insert(Run{});
        for (const Run& ymax : q.maximal_runs()) {
            std::vector<std::vector<const Run*>> cand;
            for (const auto& [y, p] : ymax.steps()) {
                std::vector<const Run*> c;
                for (const Run& r : m.pi.at(y).maximal_runs())
                    if (m.h.at(y).at(r.serialize()) == p) c.push_back(&r);
                cand.push_back(std::move(c));
            }
            std::vector<const Run*> chosen;
            std::function<void(std::size_t)> rec = [&](std::size_t i) {
                if (i == cand.size()) {
                    Run acc;
                    for (const Run* r : chosen) acc = merge(acc, *r);
                    gen.insert(acc);
                    return;
                }
                for (const Run* r : cand[i]) {
                    bool ok = true;
                    for (const Run* prev : chosen)
                        if (!consistent(*prev, *r)) ok = false;
                    if (!ok) continue;
                    chosen.push_back(r);
                    rec(i + 1);
                    chosen.pop_back();
                }
            };
            rec(0);
        }
        Protocol piq = Protocol::from_runs({gen.begin(), gen.end()}, base);
        if (!extended_source.contains(piq))
            throw DomainError("mp_extend: allocated depth cannot hold protocol " +
                              piq.serialize() + " interpreting " + q.serialize());
        std::map<std::string, std::string> hq;
        for (const Run& r : piq.maximal_runs()) {
            Run yrun = decode_run(m, q, r);
            if (!q.contains(yrun) || q.next_after(yrun))
                throw std::logic_error("mp extension decoded a non-maximal target run");
            hq.emplace(r.serialize(), yrun.serialize());
        }
        out.pi.emplace(q.serialize(), std::move(piq));
        out.h.emplace(q.serialize(), std::move(hq));
    }
    return out;
}

MpMorphism compose_counit(const MpToMpMorphism& mdag, const Scenario& y) {
    if (!(mdag.target.base() == y)) throw DomainError("compose_counit scenario mismatch");
    MpMorphism out;
    out.source = mdag.source;
    out.target = y;
    for (const auto& x : y.measurements()) {
        Protocol cp = counit_protocol(y, x);
        std::string key = cp.serialize();
        Protocol p = mdag.pi.at(key);
        std::map<std::string, std::string> hx;
        for (const auto& [rser, cser] : mdag.h.at(key)) {
            Run crun = Run::deserialize(y, cser);
            hx.emplace(rser, crun.steps()[0].second);
        }
        out.pi.emplace(x, std::move(p));
        out.h.emplace(x, std::move(hx));
    }
    return out;
}

MpMorphism compose(const MpMorphism& m, const MpToMpMorphism& ndag) {
    if (!(ndag.target.base() == m.source.base()))
        throw DomainError("compose: target/source spaces disagree");
    MpMorphism out;
    out.source = ndag.source;
    out.target = m.target;
    for (const auto& z : m.target.measurements()) {
        std::string key = m.pi.at(z).serialize();
        Protocol p = ndag.pi.at(key);
        std::map<std::string, std::string> hz;
        for (const auto& [rser, mid] : ndag.h.at(key)) hz.emplace(rser, m.h.at(z).at(mid));
        out.pi.emplace(z, std::move(p));
        out.h.emplace(z, std::move(hz));
    }
    return out;
}

MpToMpMorphism compose_mp(const MpToMpMorphism& a, const MpToMpMorphism& b) {
    MpToMpMorphism out;
    out.source = b.source;
    out.target = a.target;
    for (const auto& [qser, mid_protocol] : a.pi) {
        std::string midser = mid_protocol.serialize();
        out.pi.emplace(qser, b.pi.at(midser));
        std::map<std::string, std::string> hq;
        for (const auto& [rser, mser] : b.h.at(midser))
            hq.emplace(rser, a.h.at(qser).at(mser));
        out.h.emplace(qser, std::move(hq));
    }
    return out;
}

DeterministicMorphism counit_morphism(const Scenario& s, int depth) {
    if (depth == 0) throw DomainError("counit needs depth >= 1");
    MpSpace space = MpSpace::build(s, depth);
    DeterministicMorphism m;
    m.source = space.materialize();
    m.target = s;
    for (const auto& x : s.measurements()) {
        Protocol p = counit_protocol(s, x);
        m.pi.emplace(x, space.measurement_of(p));
        OutcomeMap om;
        om.codomain = s.outcomes(x);
        for (const auto& r : p.maximal_runs()) om.map.emplace(r.serialize(), r.steps()[0].second);
        m.outcome.emplace(x, std::move(om));
    }
    m.validate();
    return m;
}

DeterministicMorphism comonoidal_morphism(const Scenario& x, const Scenario& y, int depth) {
    Scenario joint = join_scenarios(x, y);
    MpSpace jspace = MpSpace::build(joint, depth);
    MpSpace xspace = MpSpace::build(x, depth);
    MpSpace yspace = MpSpace::build(y, depth);
    Scenario target = join_scenarios(xspace.materialize(), yspace.materialize());

    auto embed = [&](const Protocol& p, bool leftside) {
        std::vector<Run> runs;
        for (const auto& r : p.maximal_runs()) {
            std::vector<std::pair<Measurement, std::string>> steps;
            for (const auto& [m, o] : r.steps())
                steps.emplace_back(leftside ? Measurement::left(m) : Measurement::right(m), o);
            runs.emplace_back(std::move(steps));
        }
        return Protocol::from_runs(std::move(runs), joint);
    };

    DeterministicMorphism m;
    m.source = jspace.materialize();
    m.target = target;
    auto handle = [&](const MpSpace& side, bool leftside) {
        for (const Protocol& p : side.protocols()) {
            Measurement tv = leftside ? Measurement::left(side.measurement_of(p))
                                      : Measurement::right(side.measurement_of(p));
            Protocol ep = embed(p, leftside);
            m.pi.emplace(tv, jspace.measurement_of(ep));
            OutcomeMap om;
            om.codomain = target.outcomes(tv);
            for (std::size_t i = 0; i < ep.maximal_runs().size(); ++i) {
                // embedding preserves the sorted order of maximal runs
                om.map.emplace(ep.maximal_runs()[i].serialize(),
                               p.maximal_runs()[i].serialize());
            }
            m.outcome.emplace(tv, std::move(om));
        }
    };
    handle(xspace, true);
    handle(yspace, false);
    m.validate();
    return m;
}

}  // namespace ctxlab
