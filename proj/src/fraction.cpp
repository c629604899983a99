#include "ctxlab/fraction.hpp"

#include <algorithm>
#include <stdexcept>

#include "ctxlab/errors.hpp"
#include "ctxlab/guard.hpp"

namespace ctxlab {

namespace {

// Dense tableau simplex, smallest-index pivot rule. Variables are columns of
// `tab`; `basis[i]` is the variable occupying row i. `obj` holds current
// reduced costs, `objval` the current objective value.
struct Tableau {
    Matrix tab;                  // m x n
    std::vector<Rational> rhs;   // m
    std::vector<Rational> obj;   // n (reduced costs)
    Rational objval = 0;
    std::vector<std::size_t> basis;

    void pivot(std::size_t row, std::size_t col) {
        Rational p = tab[row][col];
        for (auto& v : tab[row]) v /= p;
        rhs[row] /= p;
        for (std::size_t i = 0; i < tab.size(); ++i) {
            if (i == row || tab[i][col] == 0) continue;
            Rational factor = tab[i][col];
            for (std::size_t j = 0; j < tab[i].size(); ++j)
                tab[i][j] -= factor * tab[row][j];
            rhs[i] -= factor * rhs[row];
        }
        if (obj[col] != 0) {
            Rational factor = obj[col];
            for (std::size_t j = 0; j < obj.size(); ++j) obj[j] -= factor * tab[row][j];
            objval += factor * rhs[row];
        }
        basis[row] = col;
    }

    // Returns false when unbounded.
    bool run() {
        while (true) {
            std::size_t enter = obj.size();
            for (std::size_t j = 0; j < obj.size(); ++j)
                if (obj[j] > 0) {
                    enter = j;
                    break;
                }
            if (enter == obj.size()) return true;
            std::size_t leave = tab.size();
            Rational best;
            for (std::size_t i = 0; i < tab.size(); ++i) {
                if (tab[i][enter] <= 0) continue;
                Rational ratio = rhs[i] / tab[i][enter];
                if (leave == tab.size() || ratio < best ||
                    (ratio == best && basis[i] < basis[leave])) {
                    leave = i;
                    best = ratio;
                }
            }
            if (leave == tab.size()) return false;
            pivot(leave, enter);
        }
    }
};

}  // namespace

SimplexResult simplex_solve_mixed(const Matrix& A, const std::vector<Rational>& b,
                                  const std::vector<Rational>& c,
                                  const std::vector<RowType>& types) {
    std::size_t m = A.size();
    std::size_t n = c.size();
    if (b.size() != m || types.size() != m)
        throw DomainError("simplex: inconsistent LP dimensions");
    for (const auto& row : A)
        if (row.size() != n) throw DomainError("simplex: inconsistent LP dimensions");
    for (const auto& v : b)
        if (v < 0) throw DomainError("simplex: negative right-hand side");

    std::size_t slacks = 0;
    for (auto t : types)
        if (t == RowType::Le) slacks++;
    bool need_phase1 = slacks != m;

    // Columns: structural | slacks | artificials (phase 1 only, on Eq rows).
    std::size_t arts = need_phase1 ? (m - slacks) : 0;
    std::size_t total = n + slacks + arts;

    Tableau t;
    t.tab.assign(m, std::vector<Rational>(total, Rational(0)));
    t.rhs = b;
    t.basis.assign(m, 0);
    std::size_t slack_at = n, art_at = n + slacks;
    std::vector<std::size_t> slack_col(m, SIZE_MAX), art_col(m, SIZE_MAX);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) t.tab[i][j] = A[i][j];
        if (types[i] == RowType::Le) {
            slack_col[i] = slack_at;
            t.tab[i][slack_at] = 1;
            t.basis[i] = slack_at++;
        } else {
            art_col[i] = art_at;
            t.tab[i][art_at] = 1;
            t.basis[i] = art_at++;
        }
    }

    if (need_phase1) {
        // max -(sum of artificials)
        t.obj.assign(total, Rational(0));
        t.objval = 0;
        for (std::size_t i = 0; i < m; ++i) {
            if (art_col[i] == SIZE_MAX) continue;
            // price out the artificial basis variable
            for (std::size_t j = 0; j < total; ++j) t.obj[j] += t.tab[i][j];
            t.objval -= t.rhs[i];
        }
        for (std::size_t i = 0; i < m; ++i)
            if (art_col[i] != SIZE_MAX) t.obj[art_col[i]] = 0;
        if (!t.run()) throw std::logic_error("phase-1 LP cannot be unbounded");
        if (t.objval != 0) {
            SimplexResult r;
            r.status = LpStatus::Infeasible;
            return r;
        }
        // Drive remaining artificials out of the basis where possible.
        for (std::size_t i = 0; i < m; ++i) {
            if (t.basis[i] < n + slacks) continue;
            std::size_t col = total;
            for (std::size_t j = 0; j < n + slacks && col == total; ++j)
                if (t.tab[i][j] != 0) col = j;
            if (col != total) t.pivot(i, col);
            // else: the row is all zeros over real variables (redundant);
            // the artificial stays basic at value 0, harmless.
        }
        // Freeze artificial columns at zero.
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = n + slacks; j < total; ++j) t.tab[i][j] = 0;
    }

    // Phase 2 objective: price c through the current basis.
    t.obj.assign(total, Rational(0));
    for (std::size_t j = 0; j < n; ++j) t.obj[j] = c[j];
    t.objval = 0;
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t bv = t.basis[i];
        if (bv < n && c[bv] != 0) {
            Rational factor = c[bv];
            for (std::size_t j = 0; j < total; ++j) t.obj[j] -= factor * t.tab[i][j];
            t.objval += factor * t.rhs[i];
        }
    }
    for (std::size_t i = 0; i < m; ++i) t.obj[t.basis[i]] = 0;

    SimplexResult r;
    if (!t.run()) {
        r.status = LpStatus::Unbounded;
        return r;
    }
    r.status = LpStatus::Optimal;
    r.optimum = t.objval;
    r.primal.assign(n, Rational(0));
    for (std::size_t i = 0; i < m; ++i)
        if (t.basis[i] < n) r.primal[t.basis[i]] = t.rhs[i];
    // Dual multipliers: for Le rows, y_i = -reduced cost of the slack.
    // For Eq rows, recover y from c_B B^{-1} via the artificial column before
    // it was frozen; easiest exact route: y solves y.A_B = c_B, but the
    // tableau already gives it as c_j - obj_j on any column that formed the
    // initial identity. Artificial columns were zeroed, so recompute for Eq
    // rows from scratch below.
    r.dual.assign(m, Rational(0));
    bool any_eq = false;
    for (std::size_t i = 0; i < m; ++i) {
        if (slack_col[i] != SIZE_MAX) r.dual[i] = -t.obj[slack_col[i]];
        else any_eq = true;
    }
    if (any_eq) {
        // Solve y.B = c_B exactly with Gaussian elimination, B the basis
        // columns of the original system (structural/slack columns only).
        std::size_t dim = m;
        Matrix M(dim, std::vector<Rational>(dim + 1, Rational(0)));
        // Row k of M: sum_i y_i * B[i][k] = cB[k] where B[i][k] is the
        // original coefficient of basis variable k in row i.
        for (std::size_t k = 0; k < dim; ++k) {
            std::size_t var = t.basis[k];
            for (std::size_t i = 0; i < m; ++i) {
                Rational coeff = 0;
                if (var < n) coeff = A[i][var];
                else if (var < n + slacks) coeff = (slack_col[i] == var) ? 1 : 0;
                else coeff = (art_col[i] == var) ? 1 : 0;
                M[k][i] = coeff;
            }
            Rational cB = 0;
            if (var < n) cB = c[var];
            M[k][dim] = cB;
        }
        // Gaussian elimination with partial (first nonzero) pivoting.
        std::vector<Rational> y(dim, Rational(0));
        std::size_t row = 0;
        std::vector<std::size_t> pivot_col(dim, SIZE_MAX);
        for (std::size_t col = 0; col < dim && row < dim; ++col) {
            std::size_t pr = row;
            while (pr < dim && M[pr][col] == 0) pr++;
            if (pr == dim) continue;
            std::swap(M[pr], M[row]);
            Rational p = M[row][col];
            for (auto& v : M[row]) v /= p;
            for (std::size_t i = 0; i < dim; ++i) {
                if (i == row || M[i][col] == 0) continue;
                Rational f = M[i][col];
                for (std::size_t j = 0; j <= dim; ++j) M[i][j] -= f * M[row][j];
            }
            pivot_col[row] = col;
            row++;
        }
        for (std::size_t i = 0; i < row; ++i)
            if (pivot_col[i] != SIZE_MAX) y[pivot_col[i]] = M[i][dim];
        r.dual = y;
    }
    return r;
}

SimplexResult simplex_solve(const Matrix& A, const std::vector<Rational>& b,
                            const std::vector<Rational>& c) {
    return simplex_solve_mixed(A, b, c, std::vector<RowType>(A.size(), RowType::Le));
}

GlobalAssignmentTable GlobalAssignmentTable::build(const Scenario& s) {
    check_guard("global assignment table", count_assignments(s, s.measurements()));
    GlobalAssignmentTable t;
    t.globals = enumerate_assignments(s, s.measurements());
    for (const auto& facet : s.complex().facets()) {
        for (std::size_t g = 0; g < t.globals.size(); ++g) {
            Assignment local = t.globals[g].restrict(facet);
            t.incidence[{facet, local}].push_back(g);
        }
    }
    return t;
}

Rational DualCertificate::evaluate(const EmpiricalModel& e) const {
    Rational total = 0;
    for (const auto& [key, y] : coefficients) {
        const auto& [facet, local] = key;
        total += y * e.marginal(facet).at(local);
    }
    return total;
}

bool DualCertificate::dominates_noncontextual(const Scenario& s) const {
    GlobalAssignmentTable t = GlobalAssignmentTable::build(s);
    for (const auto& g : t.globals) {
        Rational score = 0;
        for (const auto& [key, y] : coefficients)
            if (g.restrict(key.first) == key.second) score += y;
        if (score < 1) return false;
    }
    return true;
}

namespace {

struct NcfLp {
    GlobalAssignmentTable table;
    std::vector<std::size_t> kept;                       // global indices that survive presolve
    std::vector<std::pair<VertexSet, Assignment>> rows;  // kept rows (rhs > 0)
    std::vector<std::pair<VertexSet, Assignment>> zero_rows;
    bool dropped_positive_row = false;  // a rhs>0 cell lost all its globals
    Matrix A;
    std::vector<Rational> b;
};

// Columns are global assignments; a global hitting a zero cell of e is forced
// to weight 0 and dropped. Zero-rhs rows then have no surviving columns and
// are dropped too (their duals are fixed to 1 afterwards).
NcfLp build_ncf_lp(const EmpiricalModel& e) {
    NcfLp lp;
    lp.table = GlobalAssignmentTable::build(e.scenario());
    std::size_t n = lp.table.globals.size();
    std::vector<bool> keep(n, true);
    for (const auto& [key, globals] : lp.table.incidence) {
        Rational rhs = e.at_facet(key.first).at(key.second);
        if (rhs == 0)
            for (std::size_t g : globals) keep[g] = false;
    }
    for (std::size_t g = 0; g < n; ++g)
        if (keep[g]) lp.kept.push_back(g);
    std::vector<std::size_t> col(n, SIZE_MAX);
    for (std::size_t j = 0; j < lp.kept.size(); ++j) col[lp.kept[j]] = j;

    for (const auto& [key, globals] : lp.table.incidence) {
        Rational rhs = e.at_facet(key.first).at(key.second);
        if (rhs == 0) {
            lp.zero_rows.push_back(key);
            continue;
        }
        std::vector<Rational> row(lp.kept.size(), Rational(0));
        bool any = false;
        for (std::size_t g : globals)
            if (col[g] != SIZE_MAX) {
                row[col[g]] = 1;
                any = true;
            }
        if (!any) {  // 0 <= rhs holds trivially; 0 == rhs cannot
            lp.dropped_positive_row = true;
            continue;
        }
        lp.rows.push_back(key);
        lp.A.push_back(std::move(row));
        lp.b.push_back(rhs);
    }
    return lp;
}

}  // namespace

NcfResult ncf(const EmpiricalModel& e) {
    NcfLp lp = build_ncf_lp(e);
    NcfResult out;

    SimplexResult sr;
    if (lp.kept.empty()) {
        sr.status = LpStatus::Optimal;
        sr.optimum = 0;
    } else {
        std::vector<Rational> c(lp.kept.size(), Rational(1));
        sr = simplex_solve(lp.A, lp.b, c);
        if (sr.status != LpStatus::Optimal)
            throw std::logic_error("ncf LP must have an optimum");
    }
    out.optimum = sr.optimum;
    if (out.optimum < 0 || out.optimum > 1)
        throw std::logic_error("ncf optimum escaped [0,1]");

    for (std::size_t j = 0; j < lp.kept.size(); ++j)
        if (sr.primal[j] != 0)
            out.weights.emplace(lp.table.globals[lp.kept[j]], sr.primal[j]);

    // Dual certificate: kept rows get their multipliers, removed zero-rhs
    // rows get 1 (free, covers the dual constraints of dropped columns).
    for (std::size_t i = 0; i < lp.rows.size(); ++i)
        if (sr.dual.size() > i && sr.dual[i] != 0)
            out.certificate.coefficients.emplace(lp.rows[i], sr.dual[i]);
    for (const auto& key : lp.zero_rows) out.certificate.coefficients.emplace(key, Rational(1));

    const Scenario& s = e.scenario();
    if (out.optimum > 0) {
        std::map<VertexSet, Distribution> dists;
        for (const auto& facet : s.complex().facets()) {
            std::map<Assignment, Rational> w;
            for (const auto& [g, wg] : out.weights) w[g.restrict(facet)] += wg / out.optimum;
            dists.emplace(facet, Distribution::make(facet, std::move(w)));
        }
        out.noncontextual_part = EmpiricalModel::make(s, std::move(dists));
    }
    if (out.optimum < 1) {
        std::map<VertexSet, Distribution> dists;
        Rational rest = 1 - out.optimum;
        for (const auto& facet : s.complex().facets()) {
            std::map<Assignment, Rational> pushed;
            for (const auto& [g, wg] : out.weights) pushed[g.restrict(facet)] += wg;
            std::map<Assignment, Rational> w;
            for (const auto& [a, p] : e.at_facet(facet).weights()) {
                Rational residual = p - pushed[a];
                if (residual < 0) throw std::logic_error("negative residual in ncf decomposition");
                if (residual != 0) w[a] = residual / rest;
            }
            dists.emplace(facet, Distribution::make(facet, std::move(w)));
        }
        out.contextual_part = EmpiricalModel::make(s, std::move(dists));
    }
    return out;
}

Rational cf(const EmpiricalModel& e) { return 1 - ncf(e).optimum; }

bool is_noncontextual(const EmpiricalModel& e) {
    bool via_optimum = ncf(e).optimum == 1;

    // Independent route: equality-constrained feasibility d|_C = e_C.
    NcfLp lp = build_ncf_lp(e);
    bool via_feasibility;
    if (lp.dropped_positive_row || lp.kept.empty()) {
        via_feasibility = false;
    } else {
        std::vector<Rational> c(lp.kept.size(), Rational(0));
        SimplexResult sr = simplex_solve_mixed(lp.A, lp.b, c,
                                               std::vector<RowType>(lp.A.size(), RowType::Eq));
        via_feasibility = sr.status == LpStatus::Optimal;
    }
    if (via_optimum != via_feasibility)
        throw std::logic_error("noncontextuality decision routes disagree");
    return via_optimum;
}

}  // namespace ctxlab
