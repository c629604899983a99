#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ctxlab/model.hpp"
#include "ctxlab/rational.hpp"
#include "ctxlab/scenario.hpp"

namespace ctxlab {

// Attachment data for f*t. `facets` empty-optional means the maximal complex
// making the map simplicial (defaulted concrete syntax); rewriting works on
// resolved terms where facets are explicit.
struct PullbackData {
    std::vector<std::pair<Measurement, Measurement>> vmap;  // new vertex -> old vertex
    std::optional<std::vector<VertexSet>> facets;
    bool operator==(const PullbackData&) const = default;
};

// One measurement's entry of a coarse-graining family t/h.
struct CoarseEntry {
    std::vector<std::pair<std::string, std::string>> pairs;  // outcome -> outcome
    std::optional<std::vector<std::string>> codomain;        // empty = image order
    bool operator==(const CoarseEntry&) const = default;
};
using CoarseData = std::vector<std::pair<Measurement, CoarseEntry>>;

struct CondData {
    Measurement x = Measurement::base("_");
    Measurement::Branches branches;
    bool operator==(const CondData&) const = default;
};

// Immutable AST of the free-operation language:
//   t ::= v | z | u | f*t | t/h | t +_λ t | t & t | t ⊗ t | t[x?y]
class Term {
public:
    enum class Kind { Var, Zero, One, Pullback, Coarse, Mix, Choice, Tensor, Cond };

    static Term var(std::string name);
    static Term zero();
    static Term one();
    static Term pullback(PullbackData f, Term t);
    static Term coarse(Term t, CoarseData h);
    static Term mix(Term a, Rational lambda, Term b);
    static Term choice(Term a, Term b);
    static Term tensor(Term a, Term b);
    static Term cond(Term t, CondData c);

    Kind kind() const;
    const std::string& var_name() const;
    const Term& child(int i = 0) const;
    const PullbackData& pullback_data() const;
    const CoarseData& coarse_data() const;
    const CondData& cond_data() const;
    const Rational& lambda() const;

    int size() const;  // node count
    std::vector<std::string> free_vars() const;

    bool operator==(const Term& o) const;

    struct Node;
    // Internal node handle; Node is only defined in the implementation.
    explicit Term(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

private:
    std::shared_ptr<const Node> node_;
};

// Ordered variable typing context; duplicate names rejected by typecheck.
using TypingContext = std::vector<std::pair<std::string, Scenario>>;
using Environment = std::map<std::string, EmpiricalModel>;

// Concrete syntax (see README for the full EBNF):
//   z | u | ident | pull[new:old,... | {f},{f}] t | t /[x: o>o',... | {cod}; ...]
//   | t +_1/2 t | t & t | t (x) t | t[x?(o:y,...)]
Term parse_term(const std::string& src);
// Canonical rendering; parse_term(render_term(t)) == t for resolved terms.
std::string render_term(const Term& t);

// Table-II typing judgment. Returns the judged scenario; throws IllTyped
// naming the violated rule (including repeated variable use).
Scenario typecheck(const TypingContext& ctx, const Term& t);

// Structural evaluation t[env/vars]; env scenarios induce the context.
EmpiricalModel eval_term(const Term& t, const Environment& env);

// Fills in defaulted pullback facets and coarse codomains, and orders coarse
// entries by the child's declared outcomes. Rewriting assumes resolved terms.
Term resolve_term(const TypingContext& ctx, const Term& t);

// One oriented rewrite rule per paper equation, applied at the root.
struct RewriteRule {
    int number;
    std::string name;
    // nullopt when the pattern or a side condition does not match.
    std::optional<Term> (*apply)(const TypingContext& ctx, const Term& t);
};
const std::vector<RewriteRule>& equational_rules();

// Staged normal-form pipeline: eliminate &, float mixes, hoist translations
// and coarse-grainings, float conditionals above tensors. The result matches
// the normal-form grammar and evaluates to the same model (same scenario).
Term normalize(const TypingContext& ctx, const Term& t);

// Normal-form grammar membership:
//   t0: mix tree over t1;  t1: (f* t2)/h;  t2: conds over t3;
//   t3: right-nested tensors of t4;  t4: z | u | var.
bool matches_normal_grammar(const Term& t);

// Prop-2 witness: a closed term (right-nested mixture of (f*u)/h
// deterministic witnesses from the LP decomposition) evaluating to e exactly.
// DomainError when e is contextual.
Term noncontextual_to_term(const EmpiricalModel& e);

}  // namespace ctxlab
