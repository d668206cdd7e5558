#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ergolab/common.hpp"

namespace ergolab {

// One row of a summation matrix S = {s_{n,k}}. Rows are finitely supported;
// `indices` lists the support in strictly increasing order. Float weights are
// always present; `make_exact`, when set, materializes the same row in exact
// rationals on demand (rows can be long, so the exact form is never built
// eagerly).
struct WeightVector {
  std::int64_t n = 0;
  std::vector<std::int64_t> indices;
  std::vector<double> weights;
  std::function<std::vector<Rational>()> make_exact;

  bool exact() const { return static_cast<bool>(make_exact); }
  std::int64_t max_index() const { return indices.empty() ? -1 : indices.back(); }

  double weight_sum() const {
    KahanSum s;
    for (double w : weights) s.add(w);
    return s.value();
  }

  std::optional<std::vector<Rational>> exact_weights() const {
    if (!make_exact) return std::nullopt;
    return make_exact();
  }
};

// A summation method is a pure row generator: row(n) must return the same row
// for the same n on every call. Methods are immutable and safe to share
// across threads.
struct SummationMethod {
  std::string name;
  std::string kind;
  std::function<WeightVector(std::int64_t)> row;
};

// ---------------------------------------------------------------------------
// Row variation v(n) = s_{n,0} + sum_{k=1..K} |s_{n,k} - s_{n,k-1}| where K is
// the last support index. Entries absent from the support count as zero.
// ---------------------------------------------------------------------------

inline double variation(const WeightVector& row) {
  KahanSum v;
  double prev_w = 0.0;
  std::int64_t prev_k = -1;
  for (std::size_t i = 0; i < row.indices.size(); ++i) {
    const std::int64_t k = row.indices[i];
    const double w = row.weights[i];
    if (k == 0) {
      v.add(w);
    } else if (prev_k == k - 1) {
      v.add(std::fabs(w - prev_w));
    } else {
      v.add(prev_w);  // drop to zero after the previous support point
      v.add(w);       // jump back up at k
    }
    prev_k = k;
    prev_w = w;
  }
  return v.value();
}

inline std::optional<Rational> variation_exact(const WeightVector& row) {
  auto ws = row.exact_weights();
  if (!ws) return std::nullopt;
  Rational v = 0;
  Rational prev_w = 0;
  std::int64_t prev_k = -1;
  for (std::size_t i = 0; i < row.indices.size(); ++i) {
    const std::int64_t k = row.indices[i];
    const Rational& w = (*ws)[i];
    if (k == 0) {
      v += w;
    } else if (prev_k == k - 1) {
      v += abs(w - prev_w);
    } else {
      v += prev_w;
      v += w;
    }
    prev_k = k;
    prev_w = w;
  }
  v.canonicalize();
  return v;
}

inline std::optional<Rational> weight_sum_exact(const WeightVector& row) {
  auto ws = row.exact_weights();
  if (!ws) return std::nullopt;
  Rational s = 0;
  for (const auto& w : *ws) s += w;
  s.canonicalize();
  return s;
}

// ---------------------------------------------------------------------------
// Constructors
// ---------------------------------------------------------------------------

// Uniform weights over 0..n.
inline SummationMethod cesaro() {
  SummationMethod m;
  m.name = "cesaro";
  m.kind = "cesaro";
  m.row = [](std::int64_t n) {
    if (n < 0) throw InvalidParameter("row index must be nonnegative");
    WeightVector row;
    row.n = n;
    row.indices.resize(static_cast<std::size_t>(n + 1));
    for (std::int64_t k = 0; k <= n; ++k) row.indices[static_cast<std::size_t>(k)] = k;
    row.weights.assign(static_cast<std::size_t>(n + 1), 1.0 / static_cast<double>(n + 1));
    row.make_exact = [n]() {
      return std::vector<Rational>(static_cast<std::size_t>(n + 1), make_rational(1, n + 1));
    };
    return row;
  };
  return m;
}

// Nonincreasing positive weight sequence p; both a float evaluation and an
// optional exact one. Builtins supply the float form directly so validation
// sweeps do not pay for rational arithmetic.
struct PSequence {
  std::function<double(std::int64_t)> value;
  std::function<Rational(std::int64_t)> exact;  // may be null
};

inline SummationMethod riesz(PSequence p, std::string name = "riesz") {
  if (!p.value) throw InvalidParameter("riesz requires a weight sequence");
  SummationMethod m;
  m.name = std::move(name);
  m.kind = "riesz";
  auto pv = p.value;
  auto pe = p.exact;
  m.row = [pv, pe](std::int64_t n) {
    if (n < 0) throw InvalidParameter("row index must be nonnegative");
    WeightVector row;
    row.n = n;
    row.indices.resize(static_cast<std::size_t>(n + 1));
    row.weights.resize(static_cast<std::size_t>(n + 1));
    KahanSum total;
    double prev = 0.0;
    for (std::int64_t k = 0; k <= n; ++k) {
      double v = pv(k);
      if (!(v > 0.0)) throw NonPositiveWeight("p_" + std::to_string(k));
      if (k > 0 && v > prev) throw NonMonotoneWeights("p_" + std::to_string(k) + " > p_" + std::to_string(k - 1));
      row.indices[static_cast<std::size_t>(k)] = k;
      row.weights[static_cast<std::size_t>(k)] = v;
      total.add(v);
      prev = v;
    }
    const double denom = total.value();
    for (auto& w : row.weights) w /= denom;
    if (pe) {
      row.make_exact = [pe, n]() {
        std::vector<Rational> ps(static_cast<std::size_t>(n + 1));
        Rational total = 0;
        for (std::int64_t k = 0; k <= n; ++k) {
          Rational v = pe(k);
          v.canonicalize();
          if (v <= 0) throw NonPositiveWeight("p_" + std::to_string(k));
          if (k > 0 && v > ps[static_cast<std::size_t>(k - 1)])
            throw NonMonotoneWeights("p_" + std::to_string(k));
          ps[static_cast<std::size_t>(k)] = v;
          total += v;
        }
        for (auto& v : ps) {
          v /= total;
          v.canonicalize();
        }
        return ps;
      };
    }
    return row;
  };
  return m;
}

// p_k = 1/(k+1), the logarithmic Riesz weights.
inline SummationMethod riesz_log() {
  PSequence p;
  p.value = [](std::int64_t k) { return 1.0 / static_cast<double>(k + 1); };
  p.exact = [](std::int64_t k) { return make_rational(1, k + 1); };
  return riesz(std::move(p), "riesz-log");
}

// Explicit matrix rows; each row is a sparse list of (k, weight). Exact when
// every weight was given as a rational.
struct CustomRow {
  std::vector<std::int64_t> indices;
  std::vector<double> weights;
  std::optional<std::vector<Rational>> exact;
};

inline SummationMethod custom_matrix(std::vector<CustomRow> rows, std::string name = "matrix") {
  for (std::size_t n = 0; n < rows.size(); ++n) {
    auto& r = rows[n];
    if (r.indices.size() != r.weights.size())
      throw InvalidParameter("row " + std::to_string(n) + ": index/weight length mismatch");
    if (r.exact && r.exact->size() != r.indices.size())
      throw InvalidParameter("row " + std::to_string(n) + ": exact weight length mismatch");
    for (std::size_t i = 0; i < r.indices.size(); ++i) {
      if (r.indices[i] < 0)
        throw InvalidParameter("row " + std::to_string(n) + ": negative column index");
      if (i > 0 && r.indices[i] <= r.indices[i - 1])
        throw InvalidParameter("row " + std::to_string(n) + ": column indices must increase");
      if (r.weights[i] < 0.0 || (r.exact && (*r.exact)[i] < 0))
        throw NonPositiveWeight("row " + std::to_string(n) + ": negative weight");
    }
  }
  auto shared = std::make_shared<const std::vector<CustomRow>>(std::move(rows));
  SummationMethod m;
  m.name = std::move(name);
  m.kind = "custom-matrix";
  m.row = [shared](std::int64_t n) {
    if (n < 0 || static_cast<std::size_t>(n) >= shared->size())
      throw InvalidParameter("matrix has no row " + std::to_string(n));
    const CustomRow& src = (*shared)[static_cast<std::size_t>(n)];
    WeightVector row;
    row.n = n;
    row.indices = src.indices;
    row.weights = src.weights;
    if (src.exact) {
      row.make_exact = [shared, n]() { return *(*shared)[static_cast<std::size_t>(n)].exact; };
    }
    return row;
  };
  return m;
}

// Mixed sequence: row(2n-1) = a.row(n), row(2n) = b.row(n); row(0) = a.row(0)
// so the generator is total.
inline SummationMethod interleave(SummationMethod a, SummationMethod b) {
  SummationMethod m;
  m.name = "interleave(" + a.name + "," + b.name + ")";
  m.kind = "interleaved";
  auto ra = a.row;
  auto rb = b.row;
  m.row = [ra, rb](std::int64_t n) {
    if (n < 0) throw InvalidParameter("row index must be nonnegative");
    WeightVector row = (n == 0) ? ra(0) : (n % 2 == 1 ? ra((n + 1) / 2) : rb(n / 2));
    row.n = n;
    return row;
  };
  return m;
}

// row(n) = base.row(index_map(n)); index_map must be strictly increasing and
// nonnegative. Violations surface at query time.
inline SummationMethod subsequence(SummationMethod base,
                                   std::function<std::int64_t(std::int64_t)> index_map,
                                   std::string map_name = "map") {
  if (!index_map) throw InvalidParameter("subsequence requires an index map");
  SummationMethod m;
  m.name = "subseq(" + base.name + "," + map_name + ")";
  m.kind = "subsequence";
  auto rb = base.row;
  m.row = [rb, index_map](std::int64_t n) {
    if (n < 0) throw InvalidParameter("row index must be nonnegative");
    const std::int64_t target = index_map(n);
    if (target < 0) throw NonIncreasingIndexMap("index_map(" + std::to_string(n) + ") < 0");
    if (n > 0 && index_map(n - 1) >= target)
      throw NonIncreasingIndexMap("index_map not strictly increasing at n=" + std::to_string(n));
    WeightVector row = rb(target);
    row.n = n;
    return row;
  };
  return m;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct MethodValidationReport {
  std::string method;
  std::int64_t max_n = 0;
  double threshold = 0.0;
  double row_sum_defect = 0.0;        // max over n <= max_n of |sum - 1|
  std::vector<double> variation_seq;  // v(n) for n = 0..max_n
  double v_final = 0.0;               // v(max_n); exact-backed when the row is exact
  std::optional<Rational> v_final_exact;
  bool pass = false;
};

// Checks row nonnegativity/sum and records the variation sequence. The
// vanishing-variation condition is a limit, so `pass` only reflects the
// witnesses at max_n against the supplied threshold.
inline MethodValidationReport validate_method(const SummationMethod& m, std::int64_t max_n,
                                              double threshold) {
  if (max_n < 1) throw InvalidParameter("max_n must be >= 1");
  MethodValidationReport rep;
  rep.method = m.name;
  rep.max_n = max_n;
  rep.threshold = threshold;
  rep.variation_seq.resize(static_cast<std::size_t>(max_n + 1));
  double defect = 0.0;
  for (std::int64_t n = 0; n <= max_n; ++n) {
    WeightVector row = m.row(n);
    rep.variation_seq[static_cast<std::size_t>(n)] = variation(row);
    defect = std::max(defect, std::fabs(row.weight_sum() - 1.0));
    if (n == max_n) {
      rep.v_final_exact = variation_exact(row);
      rep.v_final = rep.v_final_exact ? to_double(*rep.v_final_exact)
                                      : rep.variation_seq[static_cast<std::size_t>(n)];
    }
  }
  rep.row_sum_defect = defect;
  rep.pass = (defect <= 1e-12) && (rep.v_final <= threshold);
  return rep;
}

}  // namespace ergolab
