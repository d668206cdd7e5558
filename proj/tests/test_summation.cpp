#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ergolab/summation.hpp"

using namespace ergolab;

namespace {

Rational exact_entry(const WeightVector& row, std::size_t i) {
  auto ws = row.exact_weights();
  REQUIRE(ws);
  return (*ws)[i];
}

}  // namespace

TEST_CASE("cesaro rows") {
  SummationMethod m = cesaro();

  auto r0 = m.row(0);
  REQUIRE(r0.indices == std::vector<std::int64_t>{0});
  CHECK(r0.weights[0] == 1.0);
  CHECK(exact_entry(r0, 0) == Rational(1));

  auto r2 = m.row(2);
  REQUIRE(r2.indices.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(exact_entry(r2, i) == make_rational(1, 3));

  CHECK(variation(m.row(4)) == Catch::Approx(0.2).epsilon(1e-15));
  CHECK(*variation_exact(m.row(4)) == make_rational(1, 5));
}

TEST_CASE("cesaro row invariants across sizes") {
  SummationMethod m = cesaro();
  for (std::int64_t n : {1, 2, 5, 17, 100, 999, 4096, 10000}) {
    auto row = m.row(n);
    REQUIRE(row.indices.size() == static_cast<std::size_t>(n + 1));
    CHECK(row.indices.front() == 0);
    CHECK(row.indices.back() == n);
    for (double w : row.weights) CHECK(w >= 0.0);
    CHECK(std::fabs(row.weight_sum() - 1.0) <= 1e-12);
    if (n <= 1000) {
      CHECK(*weight_sum_exact(row) == Rational(1));
      // v(n) * (n+1) = 1 exactly
      CHECK(*variation_exact(row) * Rational(n + 1) == Rational(1));
    }
  }
}

TEST_CASE("riesz with constant weights reproduces cesaro") {
  PSequence one{[](std::int64_t) { return 1.0; }, [](std::int64_t) { return Rational(1); }};
  SummationMethod r = riesz(std::move(one), "riesz-const");
  SummationMethod c = cesaro();
  for (std::int64_t n = 0; n <= 1000; ++n) {
    auto rr = r.row(n);
    auto cr = c.row(n);
    REQUIRE(rr.indices == cr.indices);
    for (std::size_t i = 0; i < rr.weights.size(); ++i) REQUIRE(rr.weights[i] == cr.weights[i]);
    if (n % 97 == 0 || n == 1000) {
      auto re = rr.exact_weights();
      auto ce = cr.exact_weights();
      REQUIRE(re);
      REQUIRE(ce);
      CHECK(*re == *ce);
    }
  }
}

TEST_CASE("logarithmic riesz row and variation") {
  SummationMethod m = riesz_log();
  auto r2 = m.row(2);
  CHECK(exact_entry(r2, 0) == make_rational(6, 11));
  CHECK(exact_entry(r2, 1) == make_rational(3, 11));
  CHECK(exact_entry(r2, 2) == make_rational(2, 11));

  // v(4) = (2 - 1/5) / H_5 = (9/5) * (60/137) = 108/137
  CHECK(*variation_exact(m.row(4)) == make_rational(108, 137));
}

TEST_CASE("riesz weight preconditions surface lazily") {
  PSequence growing{[](std::int64_t k) { return static_cast<double>(k + 1); }, nullptr};
  SummationMethod g = riesz(std::move(growing), "bad");
  CHECK_NOTHROW(g.row(0));
  CHECK_THROWS_AS(g.row(3), NonMonotoneWeights);

  PSequence dying{[](std::int64_t k) { return 1.0 - static_cast<double>(k); }, nullptr};
  SummationMethod d = riesz(std::move(dying), "bad2");
  CHECK_THROWS_AS(d.row(2), NonPositiveWeight);

  PSequence sqrtw{[](std::int64_t k) { return 1.0 / std::sqrt(static_cast<double>(k + 1)); }, nullptr};
  SummationMethod s = riesz(std::move(sqrtw), "riesz-sqrt");
  for (std::int64_t n : {3, 31, 301}) {
    auto row = s.row(n);
    CHECK_FALSE(row.exact());
    CHECK(std::fabs(row.weight_sum() - 1.0) <= 1e-12);
  }
}

TEST_CASE("interleave index bookkeeping") {
  SummationMethod a = cesaro();
  SummationMethod b = riesz_log();
  SummationMethod mix = interleave(a, b);

  auto same_row = [](const WeightVector& x, const WeightVector& y) {
    REQUIRE(x.indices == y.indices);
    for (std::size_t i = 0; i < x.weights.size(); ++i) REQUIRE(x.weights[i] == y.weights[i]);
  };

  same_row(mix.row(0), a.row(0));
  same_row(mix.row(3), a.row(2));
  same_row(mix.row(4), b.row(2));
  same_row(mix.row(7), a.row(4));

  SECTION("self-interleave odd rows") {
    SummationMethod self = interleave(cesaro(), cesaro());
    same_row(self.row(3), cesaro().row(2));
  }

  SECTION("subsequence over odd indices recovers the first method") {
    SummationMethod rec = subsequence(mix, [](std::int64_t n) { return 2 * n + 1; }, "odd");
    for (std::int64_t n = 0; n <= 30; ++n) same_row(rec.row(n), a.row(n + 1));
  }
}

TEST_CASE("subsequence maps") {
  SummationMethod c = cesaro();
  SummationMethod id = subsequence(c, [](std::int64_t n) { return n; }, "id");
  auto r = id.row(7);
  REQUIRE(r.indices.size() == 8);

  SummationMethod ev = subsequence(c, [](std::int64_t n) { return 2 * n; }, "even");
  CHECK(ev.row(1).indices.size() == 3);  // cesaro row 2

  SummationMethod flat = subsequence(c, [](std::int64_t) { return 5; }, "const");
  CHECK_NOTHROW(flat.row(0));
  CHECK_THROWS_AS(flat.row(1), NonIncreasingIndexMap);

  SummationMethod neg = subsequence(c, [](std::int64_t n) { return n - 1; }, "neg");
  CHECK_THROWS_AS(neg.row(0), NonIncreasingIndexMap);
}

TEST_CASE("validate_method") {
  SECTION("cesaro at 100") {
    auto rep = validate_method(cesaro(), 100, 0.02);
    REQUIRE(rep.variation_seq.size() == 101);
    CHECK(rep.row_sum_defect <= 1e-12);
    REQUIRE(rep.v_final_exact);
    CHECK(*rep.v_final_exact == make_rational(1, 101));
    CHECK(rep.pass);
  }
  SECTION("defective custom row is reported, not thrown") {
    std::vector<CustomRow> rows;
    rows.push_back({{0}, {1.0}, std::nullopt});
    rows.push_back({{0, 1}, {0.45, 0.45}, std::nullopt});
    auto rep = validate_method(custom_matrix(std::move(rows)), 1, 1.0);
    CHECK(rep.row_sum_defect == Catch::Approx(0.1).margin(1e-15));
    CHECK_FALSE(rep.pass);
  }
  SECTION("preconditions") {
    CHECK_THROWS_AS(validate_method(cesaro(), 0, 0.5), InvalidParameter);
  }
}

TEST_CASE("custom matrix validation") {
  CHECK_THROWS_AS(custom_matrix({CustomRow{{0, 0}, {0.5, 0.5}, std::nullopt}}), InvalidParameter);
  CHECK_THROWS_AS(custom_matrix({CustomRow{{-1}, {1.0}, std::nullopt}}), InvalidParameter);
  CHECK_THROWS_AS(custom_matrix({CustomRow{{0}, {-0.5}, std::nullopt}}), NonPositiveWeight);

  SummationMethod m = custom_matrix({CustomRow{{0}, {1.0}, std::nullopt},
                                     CustomRow{{0, 2}, {0.5, 0.5}, std::nullopt}});
  CHECK(m.row(1).max_index() == 2);
  CHECK_THROWS_AS(m.row(2), InvalidParameter);
  CHECK_THROWS_AS(m.row(-1), InvalidParameter);

  // sparse rows: variation counts the drops to zero inside the support range
  CHECK(variation(m.row(1)) == Catch::Approx(0.5 + 0.5 + 0.5));
}
