#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "ctxlab/model.hpp"
#include "ctxlab/rational.hpp"

namespace ctxlab {

using Matrix = std::vector<std::vector<Rational>>;

enum class LpStatus { Optimal, Unbounded, Infeasible };

struct SimplexResult {
    LpStatus status = LpStatus::Optimal;
    Rational optimum;
    std::vector<Rational> primal;  // structural variables only
    std::vector<Rational> dual;    // one multiplier per row
};

// Exact simplex for max { c.x : A x <= b, x >= 0 } with b >= 0. Smallest-index
// (Bland) pivoting throughout, so it terminates on every input. The result's
// dual vector is feasible and matches the optimum (strong duality from the
// final tableau).
SimplexResult simplex_solve(const Matrix& A, const std::vector<Rational>& b,
                            const std::vector<Rational>& c);

enum class RowType { Le, Eq };

// Two-phase variant with per-row <= / == senses (b >= 0 still required).
SimplexResult simplex_solve_mixed(const Matrix& A, const std::vector<Rational>& b,
                                  const std::vector<Rational>& c,
                                  const std::vector<RowType>& types);

// Global assignments of a scenario with per-(facet, local assignment)
// incidence lists.
struct GlobalAssignmentTable {
    std::vector<Assignment> globals;
    std::map<std::pair<VertexSet, Assignment>, std::vector<std::size_t>> incidence;

    static GlobalAssignmentTable build(const Scenario& s);
};

// Bell-type functional from the LP dual: every noncontextual model scores
// >= 1 while e scores exactly NCF(e).
struct DualCertificate {
    std::map<std::pair<VertexSet, Assignment>, Rational> coefficients;
    Rational evaluate(const EmpiricalModel& e) const;
    // Checks >= 1 on every deterministic global of the scenario.
    bool dominates_noncontextual(const Scenario& s) const;
};

struct NcfResult {
    Rational optimum;                        // NCF(e)
    std::map<Assignment, Rational> weights;  // nonzero global weights
    std::optional<EmpiricalModel> noncontextual_part;  // when optimum > 0
    std::optional<EmpiricalModel> contextual_part;     // when optimum < 1
    DualCertificate certificate;
};

NcfResult ncf(const EmpiricalModel& e);
Rational cf(const EmpiricalModel& e);

// Decided twice: LP optimum == 1 and an equality-constrained feasibility LP;
// throws std::logic_error if the two routes ever disagree.
bool is_noncontextual(const EmpiricalModel& e);

}  // namespace ctxlab
