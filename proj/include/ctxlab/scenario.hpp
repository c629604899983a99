#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctxlab/measurement.hpp"

namespace ctxlab {

// Sorted, duplicate-free set of measurements.
using VertexSet = std::vector<Measurement>;

VertexSet make_vertex_set(std::vector<Measurement> ms);
bool vertex_subset(const VertexSet& a, const VertexSet& b);
VertexSet vertex_union(const VertexSet& a, const VertexSet& b);
VertexSet vertex_intersection(const VertexSet& a, const VertexSet& b);
bool vertex_disjoint(const VertexSet& a, const VertexSet& b);
bool vertex_contains(const VertexSet& a, const Measurement& m);

struct ValidationReport {
    std::vector<std::string> problems;
    bool ok() const { return problems.empty(); }
    std::string to_string() const;
};

// An abstract simplicial complex stored by its facets (maximal faces).
class SimplicialComplex {
public:
    // Normalizes: sorts, deduplicates, drops faces contained in others.
    // Vertices are taken from the facets plus `extra_vertices` (which become
    // singleton facets if not covered).
    static SimplicialComplex from_facets(std::vector<VertexSet> facets,
                                         const VertexSet& extra_vertices = {});

    const VertexSet& vertices() const { return vertices_; }
    const std::vector<VertexSet>& facets() const { return facets_; }

    bool has_vertex(const Measurement& m) const;
    // True iff sigma is contained in some facet. Throws DomainError when
    // sigma mentions an unknown vertex.
    bool is_face(const VertexSet& sigma) const;

    // All faces, smallest first; exponential, intended for desk-scale use.
    std::vector<VertexSet> all_faces() const;

    // lk_sigma = { tau : tau ∩ sigma = ∅, tau ∪ sigma a face }.
    SimplicialComplex link(const VertexSet& sigma) const;

    bool operator==(const SimplicialComplex& o) const {
        return vertices_ == o.vertices_ && facets_ == o.facets_;
    }

private:
    VertexSet vertices_;
    std::vector<VertexSet> facets_;  // sorted lexicographically, antichain
};

// Simplicial join with left/right vertex tagging: faces are sigma ⊔ sigma'.
SimplicialComplex join(const SimplicialComplex& a, const SimplicialComplex& b);
// Coproduct with left/right vertex tagging: no mixed faces.
SimplicialComplex coproduct(const SimplicialComplex& a, const SimplicialComplex& b);

// A measurement scenario <X, Sigma, O>. Immutable and cheaply copyable.
class Scenario {
public:
    // Default-constructs the zero scenario (cheap shared copy).
    Scenario();

    static Scenario make(std::vector<std::pair<Measurement, std::vector<std::string>>> outcomes,
                         SimplicialComplex complex);

    // <∅, Δ0, ()>.
    static Scenario zero();
    // <{star}, Δ1, O_star = {star}>.
    static Scenario singleton();

    const SimplicialComplex& complex() const { return d_->complex; }
    const VertexSet& measurements() const { return d_->complex.vertices(); }
    bool has(const Measurement& m) const;
    const std::vector<std::string>& outcomes(const Measurement& m) const;
    int outcome_index(const Measurement& m, const std::string& label) const;

    bool operator==(const Scenario& o) const;

private:
    struct Data {
        SimplicialComplex complex;
        std::map<Measurement, std::vector<std::string>> outcomes;
    };
    explicit Scenario(std::shared_ptr<const Data> d) : d_(std::move(d)) {}
    std::shared_ptr<const Data> d_;
};

// Rechecks all Scenario invariants (useful on loaded data).
ValidationReport validate_scenario(const Scenario& s);

// An outcome assignment on a set of measurements, sorted by measurement.
class Assignment {
public:
    Assignment() = default;
    static Assignment make(std::vector<std::pair<Measurement, std::string>> entries);

    const std::vector<std::pair<Measurement, std::string>>& entries() const { return entries_; }
    VertexSet domain() const;
    bool defines(const Measurement& m) const;
    const std::string& at(const Measurement& m) const;
    std::size_t size() const { return entries_.size(); }

    // Projection to tau ⊆ domain; DomainError otherwise.
    Assignment restrict(const VertexSet& tau) const;
    // Union with a disjoint-or-agreeing assignment; DomainError on conflict.
    Assignment merged_with(const Assignment& other) const;
    Assignment with(const Measurement& m, const std::string& label) const;

    // "x1=0,y1=1" over sorted rendered ids.
    std::string key() const;

    bool operator==(const Assignment&) const = default;
    auto operator<=>(const Assignment&) const = default;

private:
    std::vector<std::pair<Measurement, std::string>> entries_;
};

// All assignments on sigma in documented deterministic order: positions
// sorted by measurement id, outcome indices in declared order, rightmost
// position varying fastest.
std::vector<Assignment> enumerate_assignments(const Scenario& s, const VertexSet& sigma);
// Product of the outcome-set sizes over sigma.
unsigned long long count_assignments(const Scenario& s, const VertexSet& sigma);

// Adds the conditional measurement x?y. `branches` maps every outcome of x
// (in declared order) to a vertex of lk_{x}; DomainError on violations and on
// name collisions with existing measurements.
Scenario extend_conditional(const Scenario& s, const Measurement& x,
                            const Measurement::Branches& branches);

// Complex-level part of the extension: Σ ∪ {σ∪{name} : ∀o. σ∪{x,y_o} ∈ Σ}.
// Branch targets are the y_o (labels don't matter for faces).
SimplicialComplex extend_complex(const SimplicialComplex& c, const Measurement& x,
                                 const std::vector<Measurement>& branch_targets,
                                 const Measurement& name);

// Scenario-level join/coproduct (used by tensor / choice).
Scenario join_scenarios(const Scenario& a, const Scenario& b);
Scenario coproduct_scenarios(const Scenario& a, const Scenario& b);

}  // namespace ctxlab
