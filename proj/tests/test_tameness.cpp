#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "ergolab/lp.hpp"
#include "ergolab/tameness.hpp"

using namespace ergolab;

namespace {

IntMatrix mat2(long a, long b, long c, long d) {
  return {{mpz_class(a), mpz_class(b)}, {mpz_class(c), mpz_class(d)}};
}

// independent totient: count residues coprime to m
std::uint64_t phi_by_counting(std::uint64_t m) {
  std::uint64_t count = 0;
  for (std::uint64_t k = 1; k <= m; ++k)
    if (std::gcd(k, m) == 1) ++count;
  return count;
}

IntMatrix conjugate(const IntMatrix& P, const IntMatrix& Pinv, const IntMatrix& A) {
  return detail::mat_mul(detail::mat_mul(P, A), Pinv);
}

}  // namespace

TEST_CASE("totient lcm bound") {
  CHECK(totient_lcm_bound(1) == 2);
  CHECK(totient_lcm_bound(2) == 12);
  CHECK(totient_lcm_bound(4) == 120);
  CHECK_THROWS_AS(totient_lcm_bound(0), InvalidParameter);

  SECTION("independent recomputation") {
    for (std::uint64_t d : {1ull, 2ull, 3ull, 4ull}) {
      mpz_class L = 1;
      for (std::uint64_t m = 1; m <= 2 * d * d; ++m)
        if (phi_by_counting(m) <= d) {
          mpz_class mm(static_cast<unsigned long>(m));
          mpz_lcm(L.get_mpz_t(), L.get_mpz_t(), mm.get_mpz_t());
        }
      CHECK(totient_lcm_bound(d) == L.get_ui());
    }
  }
}

TEST_CASE("tameness decisions") {
  SECTION("named small matrices") {
    CHECK_FALSE(decide_tame(mat2(1, 1, 0, 1)).tame);
    CHECK_FALSE(decide_tame({{mpz_class(2)}}).tame);

    auto id = decide_tame(mat2(1, 0, 0, 1));
    REQUIRE(id.tame);
    CHECK(id.witness == std::make_pair(std::uint64_t{0}, std::uint64_t{1}));

    auto quarter = decide_tame(mat2(0, -1, 1, 0));
    REQUIRE(quarter.tame);
    CHECK(quarter.witness == std::make_pair(std::uint64_t{0}, std::uint64_t{4}));

    auto nil = decide_tame(mat2(0, 1, 0, 0));
    REQUIRE(nil.tame);
    CHECK(nil.witness == std::make_pair(std::uint64_t{2}, std::uint64_t{3}));

    auto zero1 = decide_tame({{mpz_class(0)}});
    REQUIRE(zero1.tame);
    CHECK(zero1.witness == std::make_pair(std::uint64_t{1}, std::uint64_t{2}));
  }
  SECTION("witnesses verify by explicit powering") {
    for (auto& A : {mat2(0, -1, 1, 0), mat2(0, 1, 0, 0), mat2(-1, 0, 0, -1), mat2(1, 0, 0, -1)}) {
      auto cert = decide_tame(A);
      REQUIRE(cert.tame);
      REQUIRE(cert.witness);
      CHECK(detail::mat_eq(detail::mat_pow(A, cert.witness->first),
                           detail::mat_pow(A, cert.witness->second)));
    }
  }
  SECTION("shift vector is recorded but never used") {
    auto with = decide_tame(mat2(1, 1, 0, 1), std::vector<Rational>{Rational(0), make_rational(1, 3)});
    auto without = decide_tame(mat2(1, 1, 0, 1));
    CHECK(with.tame == without.tame);
    CHECK(with.shift_ignored);
    CHECK_FALSE(without.shift_ignored);
  }
  SECTION("malformed matrices") {
    CHECK_THROWS_AS(decide_tame({{mpz_class(1), mpz_class(2)}}), NonSquareMatrix);
    CHECK_THROWS_AS(decide_tame({}), NonSquareMatrix);
  }
  SECTION("oracle sweep over all 625 small matrices") {
    const std::uint64_t bound = 2 + totient_lcm_bound(2) + 1;
    for (int a = -2; a <= 2; ++a)
      for (int b = -2; b <= 2; ++b)
        for (int c = -2; c <= 2; ++c)
          for (int d = -2; d <= 2; ++d) {
            IntMatrix A = mat2(a, b, c, d);
            std::map<std::string, std::uint64_t> seen;
            IntMatrix P = detail::identity_matrix(2);
            seen.emplace(detail::mat_key(P), 0);
            bool cycles = false;
            for (std::uint64_t e = 1; e <= bound && !cycles; ++e) {
              P = detail::mat_mul(P, A);
              cycles = !seen.emplace(detail::mat_key(P), e).second;
            }
            REQUIRE(decide_tame(A).tame == cycles);
          }
  }
  SECTION("similarity invariance under unimodular conjugation") {
    // P = [[1,1],[0,1]], P^{-1} = [[1,-1],[0,1]]; Q = [[2,1],[1,1]], Q^{-1} = [[1,-1],[-1,2]]
    IntMatrix P = mat2(1, 1, 0, 1), Pinv = mat2(1, -1, 0, 1);
    IntMatrix Q = mat2(2, 1, 1, 1), Qinv = mat2(1, -1, -1, 2);
    for (auto& A : {mat2(1, 1, 0, 1), mat2(0, -1, 1, 0), mat2(2, 0, 0, 1), mat2(0, 1, 0, 0),
                    mat2(1, 0, 0, 1), mat2(2, 1, 1, 1)}) {
      bool base = decide_tame(A).tame;
      CHECK(decide_tame(conjugate(P, Pinv, A)).tame == base);
      CHECK(decide_tame(conjugate(Q, Qinv, A)).tame == base);
    }
  }
}

TEST_CASE("simplex solver") {
  SimplexSolver solver;

  SECTION("simple bounded minimum") {
    // min -x - y  s.t.  x + y <= 1
    LpProblem p;
    p.num_vars = 2;
    p.objective = {-1.0, -1.0};
    p.le_rows = {{1.0, 1.0}};
    p.le_rhs = {1.0};
    auto sol = solver.solve(p);
    CHECK(sol.objective == Catch::Approx(-1.0).margin(1e-9));
  }
  SECTION("equality constraint") {
    // min x  s.t.  x + y = 1
    LpProblem p;
    p.num_vars = 2;
    p.objective = {1.0, 0.0};
    p.eq_rows = {{1.0, 1.0}};
    p.eq_rhs = {1.0};
    auto sol = solver.solve(p);
    CHECK(sol.objective == Catch::Approx(0.0).margin(1e-9));
    CHECK(sol.x[1] == Catch::Approx(1.0).margin(1e-9));
  }
  SECTION("infeasible system") {
    // x <= -1 with x >= 0
    LpProblem p;
    p.num_vars = 1;
    p.objective = {1.0};
    p.le_rows = {{1.0}};
    p.le_rhs = {-1.0};
    CHECK_THROWS_AS(solver.solve(p), LpInfeasible);
  }
  SECTION("unbounded objective") {
    LpProblem p;
    p.num_vars = 1;
    p.objective = {-1.0};
    CHECK_THROWS_AS(solver.solve(p), LpNumericalFailure);
  }
  SECTION("degenerate rows do not cycle") {
    // several zero-rhs rows around the optimum
    LpProblem p;
    p.num_vars = 3;
    p.objective = {0.0, 0.0, 1.0};
    p.le_rows = {{1.0, -1.0, -1.0}, {-1.0, 1.0, -1.0}, {1.0, 1.0, -1.0}};
    p.le_rhs = {0.0, 0.0, 0.0};
    p.eq_rows = {{1.0, 1.0, 0.0}};
    p.eq_rhs = {1.0};
    auto sol = solver.solve(p);
    CHECK(sol.objective >= -1e-9);
  }
}

TEST_CASE("flatness probe") {
  SECTION("duplicate shifts cancel exactly") {
    SystemSpec s = interval_square();
    std::vector<Point> grid;
    for (int k = 0; k <= 6; ++k) grid.push_back(RealVec{{k / 6.0}});
    auto fr = flatness_lp(s, s.observable("t"), {0, 0}, grid);
    CHECK(fr.value <= 1e-12);
    CHECK(fr.coefficients[0] == Catch::Approx(0.5).margin(1e-9));
    CHECK(fr.coefficients[1] == Catch::Approx(-0.5).margin(1e-9));
  }
  SECTION("preconditions") {
    SystemSpec s = interval_square();
    std::vector<Point> grid = {Point(RealVec{{0.5}})};
    CHECK_THROWS_AS(flatness_lp(s, s.observable("t"), {0}, grid), InvalidParameter);
    CHECK_THROWS_AS(flatness_lp(s, s.observable("t"), {0, 1}, {}), InvalidParameter);
    CHECK_THROWS_AS(flatness_lp(s, s.observable("t"), {0, -1}, grid), InvalidParameter);
  }
  SECTION("cylinder grid forces 1/2 for the shift") {
    SystemSpec s = bernoulli_shift();
    std::vector<Point> grid;
    for (unsigned w = 0; w < 8; ++w) {
      std::string word;
      for (int i = 0; i < 3; ++i) word += ((w >> i) & 1) ? '1' : '0';
      grid.push_back(SymbolicPoint::eventually_periodic("", word));
    }
    auto fr = flatness_lp(s, s.observable("coord0"), {0, 1, 2}, grid);
    CHECK(fr.value == Catch::Approx(0.5).margin(1e-9));
    double l1 = 0;
    for (double a : fr.coefficients) l1 += std::fabs(a);
    CHECK(l1 == Catch::Approx(1.0).margin(1e-9));
  }
  SECTION("value is monotone in the grid and antitone in the shifts") {
    SystemSpec s = bernoulli_shift();
    std::vector<Point> big;
    for (unsigned w = 0; w < 16; ++w) {
      std::string word;
      for (int i = 0; i < 4; ++i) word += ((w >> i) & 1) ? '1' : '0';
      big.push_back(SymbolicPoint::eventually_periodic("", word));
    }
    std::vector<Point> small(big.begin(), big.begin() + 5);
    const Observable& x = s.observable("coord0");
    double v_big = flatness_lp(s, x, {0, 1, 2}, big).value;
    double v_small = flatness_lp(s, x, {0, 1, 2}, small).value;
    CHECK(v_small <= v_big + 1e-9);  // fewer grid constraints
    double v_fewer_shifts = flatness_lp(s, x, {0, 1}, big).value;
    CHECK(v_fewer_shifts + 1e-9 >= v_big);  // fewer coefficients
  }
  SECTION("matches a dense coefficient search on small instances") {
    auto brute = [](const std::vector<std::vector<double>>& c, int res) {
      double best = std::numeric_limits<double>::infinity();
      for (int m0 = 0; m0 <= res; ++m0)
        for (int m1 = 0; m1 + m0 <= res; ++m1) {
          int m2 = res - m0 - m1;
          for (int sgn = 0; sgn < 8; ++sgn) {
            double a0 = (sgn & 1 ? -1.0 : 1.0) * m0 / double(res);
            double a1 = (sgn & 2 ? -1.0 : 1.0) * m1 / double(res);
            double a2 = (sgn & 4 ? -1.0 : 1.0) * m2 / double(res);
            double worst = 0.0;
            for (const auto& row : c)
              worst = std::max(worst, std::fabs(a0 * row[0] + a1 * row[1] + a2 * row[2]));
            best = std::min(best, worst);
          }
        }
      return best;
    };

    for (double alpha : {0.3777, 0.122, (std::sqrt(5.0) - 1.0) / 2.0}) {
      SystemSpec s = rotation(alpha);
      const Observable& x = s.observable("cos2pi(1)");
      std::vector<Point> grid;
      for (int k = 0; k < 6; ++k) grid.push_back(RealVec{{k / 6.0}});
      auto fr = flatness_lp(s, x, {0, 1, 2}, grid);
      std::vector<std::vector<double>> c;
      for (const auto& p : grid) {
        auto orbit = iterate(s, p, 2);
        c.push_back({x.eval(orbit.points[0]), x.eval(orbit.points[1]), x.eval(orbit.points[2])});
      }
      CHECK(std::fabs(fr.value - brute(c, 50)) <= 0.02);
    }
  }
}
