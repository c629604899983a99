#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctxlab/rational.hpp"
#include "ctxlab/scenario.hpp"

namespace ctxlab {

// A probability distribution over the assignments on a fixed context.
// Only nonzero weights are stored; weights are exact rationals summing to 1.
class Distribution {
public:
    static Distribution make(VertexSet domain, std::map<Assignment, Rational> weights);
    static Distribution point(const Assignment& a);

    const VertexSet& domain() const { return domain_; }
    const std::map<Assignment, Rational>& weights() const { return weights_; }
    Rational at(const Assignment& a) const;

    // Marginal to tau ⊆ domain.
    Distribution marginal_to(const VertexSet& tau) const;

    bool operator==(const Distribution&) const = default;

private:
    VertexSet domain_;
    std::map<Assignment, Rational> weights_;
};

// Per-measurement outcome translation h_x : O_x -> O'_x with an explicit,
// ordered codomain.
struct OutcomeMap {
    std::vector<std::string> codomain;
    std::map<std::string, std::string> map;
    bool operator==(const OutcomeMap&) const = default;
};
using OutcomeFamily = std::map<Measurement, OutcomeMap>;

// A simplicial map f : Σ' -> Σ given by its domain complex and vertex map.
struct VertexMap {
    SimplicialComplex domain;
    std::map<Measurement, Measurement> map;

    Measurement operator()(const Measurement& m) const;
    VertexSet image(const VertexSet& sigma) const;
};

// An empirical model: one exact distribution per facet, compatible family.
class EmpiricalModel {
public:
    // Validates distribution shape per facet (domain match, sum-to-one) and,
    // when `check_compatibility`, the pairwise facet marginal equations.
    static EmpiricalModel make(Scenario scenario, std::map<VertexSet, Distribution> facet_dists,
                               bool check_compatibility = false);

    const Scenario& scenario() const { return scenario_; }
    const std::map<VertexSet, Distribution>& facet_distributions() const { return dists_; }
    const Distribution& at_facet(const VertexSet& facet) const;

    // Distribution on any face, computed from a covering facet.
    Distribution marginal(const VertexSet& sigma) const;

    bool operator==(const EmpiricalModel&) const = default;

private:
    Scenario scenario_;
    std::map<VertexSet, Distribution> dists_;
};

// Full invariant check including compatibility of all facet pairs.
ValidationReport validate_model(const EmpiricalModel& e);

// The unique models on the zero and singleton scenarios.
EmpiricalModel zero_model();
EmpiricalModel singleton_model();

// A deterministic model concentrated on one global assignment.
EmpiricalModel deterministic_model(const Scenario& s, const Assignment& global);

// The free operations of the resource theory.
EmpiricalModel pullback(const VertexMap& f, const EmpiricalModel& e);
Scenario pullback_scenario(const VertexMap& f, const Scenario& s);
EmpiricalModel coarse_grain(const EmpiricalModel& e, const OutcomeFamily& h);
Scenario coarse_scenario(const Scenario& s, const OutcomeFamily& h);
EmpiricalModel mix(const EmpiricalModel& e, const EmpiricalModel& e2, const Rational& lambda);
EmpiricalModel choice(const EmpiricalModel& e, const EmpiricalModel& e2);
EmpiricalModel tensor(const EmpiricalModel& e, const EmpiricalModel& e2);
EmpiricalModel conditional(const EmpiricalModel& e, const Measurement& x,
                           const Measurement::Branches& branches);

// A morphism <pi, h> : source -> target in Emp. pi maps the *target* complex
// into the source complex; h translates outcomes towards the target.
struct DeterministicMorphism {
    Scenario source;
    Scenario target;
    std::map<Measurement, Measurement> pi;  // target vertex -> source vertex
    OutcomeFamily outcome;                  // target vertex -> (P_{pi(x)} -> O_x)

    void validate() const;  // throws DomainError when ill-formed
    bool operator==(const DeterministicMorphism&) const = default;
};

DeterministicMorphism identity_morphism(const Scenario& s);
// g after f: apply f : Z -> Y first, then g : Y -> X.
DeterministicMorphism compose(const DeterministicMorphism& g, const DeterministicMorphism& f);
EmpiricalModel pushforward(const DeterministicMorphism& m, const EmpiricalModel& d);

// Witness that d == (f* e)/h with f a simplicial isomorphism and h_x outcome
// bijections (paper orientation: f maps d's complex onto e's).
struct ModelIso {
    std::map<Measurement, Measurement> f;  // X_d -> X_e, bijective
    OutcomeFamily h;                       // per X_d vertex: O_{f(x)} -> O'_x
};

std::optional<ModelIso> find_isomorphism(const EmpiricalModel& e, const EmpiricalModel& d);
bool is_isomorphic(const EmpiricalModel& e, const EmpiricalModel& d);

}  // namespace ctxlab
