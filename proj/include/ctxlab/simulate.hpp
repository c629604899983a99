#pragma once

#include <map>
#include <optional>
#include <string>

#include "ctxlab/model.hpp"
#include "ctxlab/protocols.hpp"
#include "ctxlab/terms.hpp"

namespace ctxlab {

// A simulation d ⇝ e: a deterministic morphism MP(d ⊗ c) -> e with a
// noncontextual ancilla c, stored at protocol level. `protocol_for` maps each
// target measurement to an adaptive protocol over the d ⊗ c scenario and
// `outcome_for` translates its maximal runs (serialized) to target outcomes.
struct Simulation {
    EmpiricalModel source;   // d
    EmpiricalModel ancilla;  // c
    EmpiricalModel target;   // e
    int depth = 1;
    std::map<Measurement, Protocol> protocol_for;
    std::map<Measurement, std::map<std::string, std::string>> outcome_for;

    EmpiricalModel base() const;  // d ⊗ c
};

struct SimulationCheck {
    bool ok = true;
    std::string report;  // first discrepancy / failed invariant
};

// Verifies: ancilla noncontextual (LP), protocols well-formed and inside
// MP_depth(d ⊗ c), simpliciality on target facets, and exact facet-by-facet
// pushforward equality with the target.
SimulationCheck check_simulation(const Simulation& sim);

// Theorem-2 constructive direction: compile a one-free-variable term into a
// verified simulation of eval(t[d/v]) by d. Normalizes t, sends the closed
// mixture components into the ancilla together with a mixing coin, realizes
// the (f* t2)/h component measurement-wise, and turns iterated conditionals
// into adaptive protocols.
Simulation term_to_simulation(const TypingContext& ctx, const Term& t, const EmpiricalModel& d);

// Bounded exhaustive search: ancillas are tensors of uniform coins within
// `ancilla_budget` (product of outcome counts), protocols within `depth`.
// nullopt means "no simulation within these bounds", never a general proof.
std::optional<Simulation> find_simulation(const EmpiricalModel& d, const EmpiricalModel& e,
                                          int depth, int ancilla_budget);

// Theorem 3: NCF(d) > NCF(e) refutes d ⇝ e unconditionally.
bool refute_by_fraction(const EmpiricalModel& d, const EmpiricalModel& e);

// Theorem-2 simulation->term direction: extract a witnessing term
// (pi* T)/h with T building the used part of MP(d ⊗ c) from v by iterated
// conditionals (with a spare singleton measurement as the stop branch) and
// the ancilla via its closed-term representation.
Term simulation_to_term(const Simulation& sim, const std::string& var = "v");

}  // namespace ctxlab
