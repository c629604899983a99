#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ctxlab/model.hpp"
#include "ctxlab/scenario.hpp"

namespace ctxlab {

// An adaptive interaction record: ordered (measurement, outcome) steps with
// distinct measurements whose set is a face.
class Run {
public:
    Run() = default;
    explicit Run(std::vector<std::pair<Measurement, std::string>> steps);

    const std::vector<std::pair<Measurement, std::string>>& steps() const { return steps_; }
    std::size_t length() const { return steps_.size(); }
    bool empty() const { return steps_.empty(); }

    VertexSet context() const;       // sigma_run
    Assignment assignment() const;   // s_run
    bool is_prefix_of(const Run& other) const;  // proper or equal
    Run prefix(std::size_t n) const;
    Run extended(const Measurement& m, const std::string& outcome) const;

    // "x1=0;y1=1"; empty run renders "stop".
    std::string serialize() const;
    static Run deserialize(const Scenario& s, const std::string& text);

    bool operator==(const Run&) const = default;
    auto operator<=>(const Run&) const = default;

private:
    std::vector<std::pair<Measurement, std::string>> steps_;
};

// Runs agree on all common measurements.
bool consistent(const Run& a, const Run& b);
// The paper's merge: interleaves b into a, skipping already-performed
// measurements; collapses to the empty run on inconsistent inputs.
Run merge(const Run& a, const Run& b);

// A measurement protocol: non-empty, prefix-closed, outcome-complete,
// deterministically branching set of runs. Stored by its maximal runs.
class Protocol {
public:
    // Prefix-closes the given runs and asserts conditions (i)-(iii).
    static Protocol from_runs(std::vector<Run> runs, const Scenario& s);

    const std::vector<Run>& maximal_runs() const { return maximal_; }
    std::vector<Run> all_runs() const;  // prefix closure
    std::size_t depth() const;          // longest run

    // next measurement after a (non-maximal) run prefix, if any
    std::optional<Measurement> next_after(const Run& prefix) const;
    bool contains(const Run& r) const;

    // sorted maximal runs joined with '|'
    std::string serialize() const;
    static Protocol deserialize(const Scenario& s, const std::string& text);

    bool operator==(const Protocol&) const = default;
    auto operator<=>(const Protocol&) const = default;

private:
    std::vector<Run> maximal_;  // sorted
};

struct ProtocolCheck {
    bool ok = true;
    std::string violation;  // names the violated condition with witnesses
};
ProtocolCheck is_protocol(const std::vector<Run>& runs, const Scenario& s);

// The one-measurement protocol {Λ} ∪ {x} × O_x.
Protocol counit_protocol(const Scenario& s, const Measurement& x);
// The do-nothing protocol {Λ}.
Protocol stop_protocol();

// MP_d(X) without the simplicial complex materialized: the protocol list,
// the measurement naming, and the n-ary compatibility oracle.
class MpSpace {
public:
    // depth < 0 means unbounded (runs are capped by |X| anyway).
    static MpSpace build(const Scenario& base, int depth);

    const Scenario& base() const;
    int depth() const;
    const std::vector<Protocol>& protocols() const;

    Measurement measurement_of(const Protocol& p) const;  // Base(serialize)
    const Protocol& protocol_of(const Measurement& m) const;
    bool contains(const Protocol& p) const;

    // Every pairwise-consistent choice of runs has a face as its joint
    // context (the n-ary condition; memoized pairwise prefilter).
    bool compatible(const std::vector<Protocol>& ps) const;

    // Full MP scenario with facets enumerated (guarded).
    Scenario materialize() const;

private:
    struct Data;
    std::shared_ptr<Data> d_;
};

// Distribution of MP(e) on a compatible set of protocols, computed directly
// from the definition (no complex materialization).
Distribution mp_distribution(const EmpiricalModel& e, const MpSpace& space,
                             const std::vector<Protocol>& sigma);

// MP(e) as an empirical model over space.materialize().
EmpiricalModel mp_model(const EmpiricalModel& e, const MpSpace& space);

// Morphism MP_d(X) -> Y at protocol level: pi maps each y to a protocol
// over X, h_y translates its maximal runs to P_y outcomes.
struct MpMorphism {
    MpSpace source;
    Scenario target;
    std::map<Measurement, Protocol> pi;
    std::map<Measurement, std::map<std::string, std::string>> h;  // run serial -> outcome

    void validate() const;
    bool equal_on(const MpMorphism& other) const;  // same target, pi and h
};

// Morphism MP_d(X) -> MP_d'(Y) at protocol level.
struct MpToMpMorphism {
    MpSpace source;
    MpSpace target;
    std::map<std::string, Protocol> pi;  // serialized Q over Y -> protocol over X
    std::map<std::string, std::map<std::string, std::string>> h;

    bool equal_on(const MpToMpMorphism& other) const;
};

// counit: MP_d(X) -> X, x viewed as its one-measurement protocol.
MpMorphism mp_counit(const MpSpace& space);

// co-Kleisli extension: lifts m : MP(X) -> Y to MP(X) -> MP(Y). The source
// space must contain every merged interpretation (validated; allocate with
// extension_depth first).
MpToMpMorphism mp_extend(const MpMorphism& m, const MpSpace& extended_source,
                         const MpSpace& target_space);
// Depth needed by the source of mp_extend over target protocols up to ydepth.
int extension_depth(const MpMorphism& m, int ydepth);

// epsilon after m-dagger and dagger-of-composites, for the law checks.
MpMorphism compose_counit(const MpToMpMorphism& mdag, const Scenario& y);
MpMorphism compose(const MpMorphism& m, const MpToMpMorphism& ndag);
// a : MP(Y) -> MP(X) after b : MP(Z) -> MP(Y), giving MP(Z) -> MP(X).
MpToMpMorphism compose_mp(const MpToMpMorphism& a, const MpToMpMorphism& b);

// Materialized counit as a scenario morphism (desk-scale; pushes MP(e) to e).
DeterministicMorphism counit_morphism(const Scenario& s, int depth);

// Comonoidal part: MP(X ⊗ Y) -> MP(X) ⊗ MP(Y) as a materialized morphism.
DeterministicMorphism comonoidal_morphism(const Scenario& x, const Scenario& y, int depth);

}  // namespace ctxlab
