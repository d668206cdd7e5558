#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ergolab/averaging.hpp"
#include "ergolab/common.hpp"
#include "ergolab/lp.hpp"
#include "ergolab/systems.hpp"

namespace ergolab {

using IntMatrix = std::vector<std::vector<mpz_class>>;

namespace detail {

inline void require_square(const IntMatrix& A) {
  if (A.empty()) throw NonSquareMatrix("empty matrix");
  for (const auto& row : A)
    if (row.size() != A.size()) throw NonSquareMatrix("row length mismatch");
}

inline IntMatrix identity_matrix(std::size_t d) {
  IntMatrix I(d, std::vector<mpz_class>(d, 0));
  for (std::size_t i = 0; i < d; ++i) I[i][i] = 1;
  return I;
}

inline IntMatrix mat_mul(const IntMatrix& A, const IntMatrix& B) {
  const std::size_t d = A.size();
  IntMatrix C(d, std::vector<mpz_class>(d, 0));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < d; ++k) {
      if (A[i][k] == 0) continue;
      for (std::size_t j = 0; j < d; ++j) C[i][j] += A[i][k] * B[k][j];
    }
  return C;
}

inline IntMatrix mat_pow(const IntMatrix& A, std::uint64_t e) {
  IntMatrix result = identity_matrix(A.size());
  IntMatrix base = A;
  while (e > 0) {
    if (e & 1) result = mat_mul(result, base);
    e >>= 1;
    if (e > 0) base = mat_mul(base, base);
  }
  return result;
}

inline bool mat_eq(const IntMatrix& A, const IntMatrix& B) {
  for (std::size_t i = 0; i < A.size(); ++i)
    for (std::size_t j = 0; j < A.size(); ++j)
      if (A[i][j] != B[i][j]) return false;
  return true;
}

inline std::string mat_key(const IntMatrix& A) {
  std::string k;
  for (const auto& row : A)
    for (const auto& v : row) {
      k += v.get_str();
      k += ';';
    }
  return k;
}

inline std::uint64_t euler_phi(std::uint64_t m) {
  std::uint64_t result = m;
  std::uint64_t x = m;
  for (std::uint64_t p = 2; p * p <= x; ++p) {
    if (x % p == 0) {
      while (x % p == 0) x /= p;
      result -= result / p;
    }
  }
  if (x > 1) result -= result / x;
  return result;
}

}  // namespace detail

// L(d) = lcm{m >= 1 : phi(m) <= d}. Any eventual period of a d x d integer
// matrix divides L(d): eigenvalue roots of unity have cyclotomic degree
// phi(m) <= d. phi(m) >= sqrt(m/2) bounds the search to m <= 2 d^2.
inline std::uint64_t totient_lcm_bound(std::uint64_t d) {
  if (d < 1) throw InvalidParameter("dimension must be >= 1");
  mpz_class L = 1;
  for (std::uint64_t m = 1; m <= 2 * d * d; ++m) {
    if (detail::euler_phi(m) <= d) {
      mpz_class mm(static_cast<unsigned long>(m));
      mpz_lcm(L.get_mpz_t(), L.get_mpz_t(), mm.get_mpz_t());
    }
  }
  if (!L.fits_ulong_p()) throw InvalidParameter("totient lcm bound overflows 64 bits");
  return L.get_ui();
}

struct TamenessCertificate {
  IntMatrix matrix;
  std::uint64_t dimension = 0;
  std::uint64_t totient_lcm = 0;  // L(d); the decision compares A^d with A^{d+L(d)}
  bool tame = false;
  // first repeated pair of powers A^k = A^l, k < l, when tame
  std::optional<std::pair<std::uint64_t, std::uint64_t>> witness;
  bool shift_ignored = false;  // a shift vector was supplied; the verdict does not use it
};

// Exact tame/untame decision for the affine torus map w -> A w + b: tame iff
// the powers of A eventually repeat, and any repeat must show up within
// exponent d + L(d). Pure integer arithmetic; entries of untame powers grow
// exponentially, hence the big integers.
inline TamenessCertificate decide_tame(const IntMatrix& A,
                                       const std::optional<std::vector<Rational>>& shift = std::nullopt) {
  detail::require_square(A);
  TamenessCertificate cert;
  cert.matrix = A;
  cert.dimension = A.size();
  cert.totient_lcm = totient_lcm_bound(cert.dimension);
  cert.shift_ignored = shift.has_value();

  const std::uint64_t d = cert.dimension;
  const std::uint64_t hi = d + cert.totient_lcm;
  IntMatrix Ad = detail::mat_pow(A, d);
  IntMatrix Ahi = detail::mat_pow(A, hi);
  cert.tame = detail::mat_eq(Ad, Ahi);

  if (cert.tame) {
    // minimal witness: scan successive powers for the first repeat
    std::map<std::string, std::uint64_t> seen;
    IntMatrix P = detail::identity_matrix(d);
    seen.emplace(detail::mat_key(P), 0);
    for (std::uint64_t e = 1; e <= hi; ++e) {
      P = detail::mat_mul(P, A);
      auto [it, inserted] = seen.emplace(detail::mat_key(P), e);
      if (!inserted) {
        cert.witness = std::make_pair(it->second, e);
        break;
      }
    }
    // verify the witness by explicit powering
    if (!cert.witness ||
        !detail::mat_eq(detail::mat_pow(A, cert.witness->first), detail::mat_pow(A, cert.witness->second)))
      throw Error("InternalError", "tameness witness verification failed");
  }
  return cert;
}

// ---------------------------------------------------------------------------
// l1-flatness probe
// ---------------------------------------------------------------------------

struct FlatnessResult {
  std::string observable;
  std::vector<std::int64_t> shifts;
  std::size_t grid_size = 0;
  double value = 0.0;                // v* = min over sum|a_k| = 1 of the grid sup
  std::vector<double> coefficients;  // minimizing a
};

// Grid-restricted infimum of || sum_k a_k x o phi^{n(k)} || over coefficient
// vectors with sum |a_k| = 1. The l1 sphere is the union of 2^{K-1} sign
// facets (up to a global sign); on each facet the problem is the exact LP
//   min t  s.t.  |sum_k e_k u_k c_{ik}| <= t,  sum u = 1,  u >= 0,
// and v* is the minimum over facets. The result is a lower bound for the
// sup-norm infimum over the whole space: the grid max never exceeds the sup.
inline FlatnessResult flatness_lp(const SystemSpec& s, const Observable& x,
                                  std::vector<std::int64_t> shifts, const std::vector<Point>& grid,
                                  IterateOptions opts = {}) {
  const std::size_t K = shifts.size();
  if (K < 2) throw InvalidParameter("need at least two shifts");
  if (K > 16) throw InvalidParameter("more than 16 shifts is not supported");
  if (grid.empty()) throw InvalidParameter("grid must be nonempty");
  std::int64_t max_shift = 0;
  for (auto n : shifts) {
    if (n < 0) throw InvalidParameter("shifts must be nonnegative");
    max_shift = std::max(max_shift, n);
  }

  // c[i][k] = x(phi^{n(k)} w_i)
  const std::size_t G = grid.size();
  std::vector<std::vector<double>> c(G, std::vector<double>(K));
  parallel_for(G, [&](std::size_t i) {
    OrbitSegment orbit = iterate(s, grid[i], max_shift, opts);
    for (std::size_t k = 0; k < K; ++k)
      c[i][k] = x.eval(orbit.points[static_cast<std::size_t>(shifts[k])]);
  });

  SimplexSolver solver(1e-9);
  FlatnessResult best;
  best.observable = x.name;
  best.shifts = shifts;
  best.grid_size = G;
  best.value = std::numeric_limits<double>::infinity();

  const std::size_t facets = static_cast<std::size_t>(1) << (K - 1);
  for (std::size_t mask = 0; mask < facets; ++mask) {
    std::vector<double> sign(K);
    sign[0] = 1.0;  // global sign symmetry: fix the first coefficient nonnegative
    for (std::size_t k = 1; k < K; ++k) sign[k] = (mask >> (k - 1)) & 1 ? -1.0 : 1.0;

    LpProblem p;
    p.num_vars = K + 1;  // u_0..u_{K-1}, t
    p.objective.assign(K + 1, 0.0);
    p.objective[K] = 1.0;
    for (std::size_t i = 0; i < G; ++i) {
      std::vector<double> up(K + 1), dn(K + 1);
      for (std::size_t k = 0; k < K; ++k) {
        up[k] = sign[k] * c[i][k];
        dn[k] = -sign[k] * c[i][k];
      }
      up[K] = -1.0;
      dn[K] = -1.0;
      p.le_rows.push_back(std::move(up));
      p.le_rhs.push_back(0.0);
      p.le_rows.push_back(std::move(dn));
      p.le_rhs.push_back(0.0);
    }
    std::vector<double> eq(K + 1, 1.0);
    eq[K] = 0.0;
    p.eq_rows.push_back(std::move(eq));
    p.eq_rhs.push_back(1.0);

    LpSolution sol = solver.solve(p);
    if (sol.objective < best.value) {
      best.value = sol.objective;
      best.coefficients.assign(K, 0.0);
      for (std::size_t k = 0; k < K; ++k) best.coefficients[k] = sign[k] * sol.x[k];
    }
  }
  if (best.value < 0.0) best.value = 0.0;  // clip simplex tolerance noise
  return best;
}

}  // namespace ergolab
