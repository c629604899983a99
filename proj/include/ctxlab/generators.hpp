#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ctxlab/model.hpp"
#include "ctxlab/terms.hpp"

namespace ctxlab {

// splitmix64; a single 64-bit seed, splittable into independent streams.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    std::uint64_t below(std::uint64_t n) { return n ? next() % n : 0; }
    int range(int lo, int hi) { return lo + static_cast<int>(below(hi - lo + 1)); }
    bool chance(int num, int den) { return below(den) < static_cast<std::uint64_t>(num); }
    Rng split() { return Rng(next() ^ 0xa5a5a5a5deadbeefULL); }

private:
    std::uint64_t state_;
};

// Library models.
Scenario pr_scenario();
EmpiricalModel pr_box();
// A PR box composed with random outcome flips and party-preserving
// measurement swaps; stays on the PR scenario and keeps CF = 1.
EmpiricalModel pr_relabeling(Rng& rng);
EmpiricalModel uniform_coin_model(int outcomes);

// Rationals with bounded denominators (exact arithmetic stays small).
Rational random_probability(Rng& rng, int max_den = 32);
std::vector<Rational> random_convex_weights(Rng& rng, std::size_t k, int max_den = 32);

// Random small scenarios/models. Scenarios have 1..max_measurements
// measurements with 2..max_outcomes outcomes and a random covering complex.
Scenario random_scenario(Rng& rng, int max_measurements = 4, int max_outcomes = 2);
EmpiricalModel random_deterministic(Rng& rng, const Scenario& s);
// Convex mixture of deterministic models.
EmpiricalModel random_noncontextual(Rng& rng, const Scenario& s, int max_components = 4);
// Mixture as above; on the PR scenario, optionally mixes in a PR relabeling
// (the library contextual models).
EmpiricalModel random_model(Rng& rng, const Scenario& s);

// Simplicial map with a fresh-named domain into s (used by pullbacks).
PullbackData random_pullback_data(Rng& rng, const Scenario& s, int max_domain = 4);
// Total outcome family; surjective onto its codomains when `surjective`.
CoarseData random_coarse_data(Rng& rng, const Scenario& s, bool surjective = true);
// A conditional site (x, branches) when some link is non-empty.
std::optional<CondData> random_cond_site(Rng& rng, const Scenario& s);

// A random well-typed term over fresh variables with bound random models.
// Coarse-grainings are surjective and conditional sites live below at most
// benign pullbacks, so the term normalizes (see the notes on eq. (24)/(25)).
struct RandomTerm {
    TypingContext ctx;
    Environment env;
    Term term;
};
RandomTerm random_term(Rng& rng, int max_nodes, int max_vars = 3);
// As above but with exactly one free variable (Theorem-2 corpora).
RandomTerm random_single_var_term(Rng& rng, int max_nodes);
// Closed term (Prop-2 corpora).
Term random_closed_term(Rng& rng, int max_nodes);

// A randomized well-typed instance of a numbered rewrite rule's left side,
// guaranteed to fire (rule.apply succeeds).
struct RuleInstance {
    TypingContext ctx;
    Environment env;
    Term lhs;
};
RuleInstance random_rule_instance(Rng& rng, int rule_number);

}  // namespace ctxlab
