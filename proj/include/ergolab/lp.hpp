#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ergolab/common.hpp"

namespace ergolab {

// min c.x  s.t.  A_le x <= b_le,  A_eq x = b_eq,  x >= 0
struct LpProblem {
  std::size_t num_vars = 0;
  std::vector<std::vector<double>> le_rows;
  std::vector<double> le_rhs;
  std::vector<std::vector<double>> eq_rows;
  std::vector<double> eq_rhs;
  std::vector<double> objective;
};

struct LpSolution {
  std::vector<double> x;
  double objective = 0.0;
};

// Dense two-phase primal simplex with Bland's rule. Bland makes every pivot
// choice index-deterministic and rules out cycling on the degenerate rows our
// minimax instances produce. Intended for small problems (tens of variables,
// hundreds of rows).
class SimplexSolver {
 public:
  explicit SimplexSolver(double tol = 1e-9) : tol_(tol) {}

  LpSolution solve(const LpProblem& p) const {
    const std::size_t n = p.num_vars;
    if (p.objective.size() != n) throw InvalidParameter("objective length mismatch");
    for (const auto& r : p.le_rows)
      if (r.size() != n) throw InvalidParameter("constraint row length mismatch");
    for (const auto& r : p.eq_rows)
      if (r.size() != n) throw InvalidParameter("constraint row length mismatch");
    if (p.le_rows.size() != p.le_rhs.size() || p.eq_rows.size() != p.eq_rhs.size())
      throw InvalidParameter("constraint/rhs count mismatch");

    const std::size_t m_le = p.le_rows.size();
    const std::size_t m = m_le + p.eq_rows.size();
    const std::size_t slack0 = n;
    const std::size_t art0 = n + m_le;
    const std::size_t cols = art0 + m;  // worst case: one artificial per row
    std::size_t num_art = 0;

    // tableau[i] = row of length cols+1 (last entry rhs)
    std::vector<std::vector<double>> tab(m, std::vector<double>(cols + 1, 0.0));
    std::vector<std::size_t> basis(m);

    for (std::size_t i = 0; i < m; ++i) {
      const bool is_le = i < m_le;
      const auto& src = is_le ? p.le_rows[i] : p.eq_rows[i - m_le];
      double rhs = is_le ? p.le_rhs[i] : p.eq_rhs[i - m_le];
      double sign = rhs < 0.0 ? -1.0 : 1.0;
      for (std::size_t j = 0; j < n; ++j) tab[i][j] = sign * src[j];
      tab[i][cols] = sign * rhs;
      if (is_le) tab[i][slack0 + i] = sign;
      if (is_le && sign > 0.0) {
        basis[i] = slack0 + i;
      } else {
        std::size_t a = art0 + num_art++;
        tab[i][a] = 1.0;
        basis[i] = a;
      }
    }

    auto is_artificial = [&](std::size_t j) { return j >= art0; };

    // phase 1: minimize the artificial sum. z starts as the phase-1 cost row
    // (+1 on artificial columns) priced out against the artificial basis, so
    // basic columns carry zero reduced cost.
    if (num_art > 0) {
      std::vector<double> z(cols + 1, 0.0);
      for (std::size_t j = art0; j < art0 + num_art; ++j) z[j] = 1.0;
      for (std::size_t i = 0; i < m; ++i)
        if (is_artificial(basis[i]))
          for (std::size_t j = 0; j <= cols; ++j) z[j] -= tab[i][j];
      run_simplex(tab, basis, z, cols);
      if (std::fabs(z[cols]) > 1e-7) throw LpInfeasible("phase 1 optimum nonzero");
      // drive surviving artificials out of the basis
      for (std::size_t i = 0; i < m; ++i) {
        if (!is_artificial(basis[i])) continue;
        std::size_t enter = cols;
        for (std::size_t j = 0; j < art0; ++j)
          if (std::fabs(tab[i][j]) > tol_) {
            enter = j;
            break;
          }
        if (enter == cols) {
          // redundant row; keep the artificial at zero
          continue;
        }
        pivot(tab, basis, i, enter, cols);
      }
    }

    // phase 2: real objective, artificial columns frozen at zero
    std::vector<double> z(cols + 1, 0.0);
    for (std::size_t j = 0; j < n; ++j) z[j] = p.objective[j];
    for (std::size_t i = 0; i < m; ++i) {
      if (is_artificial(basis[i])) continue;
      double cb = basis[i] < n ? p.objective[basis[i]] : 0.0;
      if (cb != 0.0)
        for (std::size_t j = 0; j <= cols; ++j) z[j] -= cb * tab[i][j];
    }
    for (std::size_t j = art0; j < cols; ++j) z[j] = 0.0;  // never re-enter artificials
    run_simplex(tab, basis, z, cols, art0);

    LpSolution sol;
    sol.x.assign(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      if (basis[i] < n) sol.x[basis[i]] = tab[i][cols];
    double obj = 0.0;
    for (std::size_t j = 0; j < n; ++j) obj += p.objective[j] * sol.x[j];
    sol.objective = obj;
    return sol;
  }

 private:
  void pivot(std::vector<std::vector<double>>& tab, std::vector<std::size_t>& basis,
             std::size_t row, std::size_t col, std::size_t cols) const {
    double pv = tab[row][col];
    for (std::size_t j = 0; j <= cols; ++j) tab[row][j] /= pv;
    for (std::size_t i = 0; i < tab.size(); ++i) {
      if (i == row) continue;
      double f = tab[i][col];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= cols; ++j) tab[i][j] -= f * tab[row][j];
    }
    basis[row] = col;
  }

  // Minimizes z over the tableau. `col_limit` restricts entering columns
  // (used to exclude artificials in phase 2).
  void run_simplex(std::vector<std::vector<double>>& tab, std::vector<std::size_t>& basis,
                   std::vector<double>& z, std::size_t cols,
                   std::size_t col_limit = std::numeric_limits<std::size_t>::max()) const {
    const std::size_t limit = std::min(col_limit, cols);
    const std::size_t max_iter = 2000 * (tab.size() + cols + 1);
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
      // Bland: entering column = lowest index with negative reduced cost
      std::size_t enter = limit;
      for (std::size_t j = 0; j < limit; ++j)
        if (z[j] < -tol_) {
          enter = j;
          break;
        }
      if (enter == limit) return;  // optimal
      // ratio test; Bland tie-break on smallest basis variable
      std::size_t leave = tab.size();
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < tab.size(); ++i) {
        if (tab[i][enter] > tol_) {
          double ratio = tab[i][cols] / tab[i][enter];
          if (ratio < best - 1e-15 ||
              (ratio < best + 1e-15 && (leave == tab.size() || basis[i] < basis[leave]))) {
            best = ratio;
            leave = i;
          }
        }
      }
      if (leave == tab.size()) throw LpNumericalFailure("objective unbounded");
      pivot(tab, basis, leave, enter, cols);
      double f = z[enter];
      for (std::size_t j = 0; j <= cols; ++j) z[j] -= f * tab[leave][j];
    }
    throw LpNumericalFailure("simplex iteration limit exceeded");
  }

  double tol_;
};

}  // namespace ergolab
