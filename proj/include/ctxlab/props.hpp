#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctxlab/model.hpp"

namespace ctxlab {

struct SuiteReport {
    std::string suite;
    std::uint64_t seed = 0;
    int checks = 0;
    int failures = 0;
    std::vector<std::string> counterexamples;  // serialized for replay
    bool ok() const { return failures == 0 && checks > 0; }
};

// Randomized suites driving the per-module invariants:
//   prop1-monotonicity | eq-soundness | normal-form | prop2 | comonad-laws |
//   thm2-roundtrip | nocloning-easy | mp-nosignalling
// `cases` means models for prop1/mp, instances per rule for eq-soundness,
// terms for normal-form/prop2/thm2, models for nocloning, and sampled
// morphisms per scenario for comonad-laws.
SuiteReport run_suite(const std::string& name, std::uint64_t seed, int cases);
const std::vector<std::string>& suite_names();

// The seeded random-model corpus shared by prop1-monotonicity and the MP
// no-signalling suite (plus the PR box).
std::vector<EmpiricalModel> corpus_models(std::uint64_t seed, int cases);

}  // namespace ctxlab
