#pragma once

#include <string>

#include "json.hpp"

#include "ctxlab/fraction.hpp"
#include "ctxlab/model.hpp"
#include "ctxlab/scenario.hpp"
#include "ctxlab/simulate.hpp"

namespace ctxlab {

using Json = nlohmann::json;

// Scenario file format:
//   {"measurements": [{"id": "x1", "outcomes": ["0","1"]}, ...],
//    "facets": [["x1","y1"], ...]}
// The loader rejects duplicate ids, unknown ids in facets, empty outcome
// sets, facets contained in other facets and ids that do not round-trip
// through the measurement-id grammar.
Json scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const Json& j);

// Model file format:
//   {"scenario": {...} | "scenario_file": "path",
//    "distributions": [{"facet": ["x1","y1"],
//                       "dist": {"x1=0,y1=0": "1/2", ...}}, ...]}
// Assignment keys are "id=outcome" pairs joined by commas, ids sorted.
Json model_to_json(const EmpiricalModel& e, bool inline_scenario = true);
EmpiricalModel model_from_json(const Json& j);

Json morphism_to_json(const DeterministicMorphism& m);
DeterministicMorphism morphism_from_json(const Json& j);

Json certificate_to_json(const DualCertificate& c);

// Simulation format: source/ancilla/target models, depth, protocols as
// sorted run lists "x1=0;y1=1|...", outcome maps as run -> outcome tables.
Json simulation_to_json(const Simulation& sim);
Simulation simulation_from_json(const Json& j);

// Assignment-string parsing against a known (sorted) domain.
Assignment assignment_from_key(const Scenario& s, const VertexSet& domain,
                               const std::string& key);

std::string read_text_file(const std::string& path);
Json load_json_file(const std::string& path);

}  // namespace ctxlab
