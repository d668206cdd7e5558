#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ergolab/common.hpp"
#include "ergolab/point.hpp"
#include "ergolab/summation.hpp"
#include "ergolab/systems.hpp"

namespace ergolab {

// A pairing result. `exact` is set when every ingredient (weights, orbit,
// observable) admitted rational evaluation; `value` is always the float view.
struct PairingValue {
  double value = 0.0;
  std::optional<Rational> exact;
};

struct EmpiricalAtom {
  Point point;
  double weight = 0.0;
  std::optional<Rational> weight_exact;
};

// Weighted Dirac combination along an orbit. Atoms at exactly equal points
// are merged; float points are never merged by closeness.
struct EmpiricalMeasure {
  std::vector<EmpiricalAtom> atoms;
  double normalization = 0.0;

  bool exact() const {
    for (const auto& a : atoms)
      if (!a.weight_exact) return false;
    return !atoms.empty();
  }
};

namespace detail {

inline void require_orbit_cover(const OrbitSegment& orbit, std::int64_t max_index) {
  if (static_cast<std::int64_t>(orbit.points.size()) <= max_index)
    throw InvalidParameter("orbit shorter than the weight row support");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Weighted averages (U_n x)(w) = sum_k s_{n,k} x(phi^k w)
// ---------------------------------------------------------------------------

inline PairingValue weighted_average_on(const OrbitSegment& orbit, const WeightVector& row,
                                        const Observable& x) {
  detail::require_orbit_cover(orbit, row.max_index());
  PairingValue out;
  KahanSum acc;
  for (std::size_t i = 0; i < row.indices.size(); ++i)
    acc.add(row.weights[i] * x.eval(orbit.points[static_cast<std::size_t>(row.indices[i])]));
  out.value = acc.value();

  // exact path: probe the first point before materializing the exact row
  if (row.exact() && x.eval_exact && !row.indices.empty() &&
      x.eval_exact(orbit.points[static_cast<std::size_t>(row.indices[0])])) {
    bool ok = true;
    auto ws = row.exact_weights();
    Rational sum = 0;
    for (std::size_t i = 0; i < row.indices.size() && ok; ++i) {
      auto xv = x.eval_exact(orbit.points[static_cast<std::size_t>(row.indices[i])]);
      if (!xv) {
        ok = false;
        break;
      }
      sum += (*ws)[i] * (*xv);
    }
    if (ok) {
      sum.canonicalize();
      out.exact = sum;
    }
  }
  return out;
}

inline PairingValue weighted_average(const SystemSpec& s, const SummationMethod& m, const Point& w,
                                     std::int64_t n, const Observable& x,
                                     IterateOptions opts = {}) {
  WeightVector row = m.row(n);
  OrbitSegment orbit = iterate(s, w, std::max<std::int64_t>(row.max_index(), 0), opts);
  return weighted_average_on(orbit, row, x);
}

// ---------------------------------------------------------------------------
// Empirical measures V_n delta_w
// ---------------------------------------------------------------------------

inline EmpiricalMeasure empirical_measure_on(const OrbitSegment& orbit, const WeightVector& row) {
  detail::require_orbit_cover(orbit, row.max_index());
  EmpiricalMeasure mu;
  auto exact_ws = row.exact_weights();

  std::map<std::string, std::size_t> slot;
  KahanSum norm;
  for (std::size_t i = 0; i < row.indices.size(); ++i) {
    const Point& p = orbit.points[static_cast<std::size_t>(row.indices[i])];
    const double wgt = row.weights[i];
    norm.add(wgt);
    auto key = merge_key(p);
    auto it = slot.find(key);
    if (it != slot.end()) {
      auto& atom = mu.atoms[it->second];
      atom.weight += wgt;
      if (atom.weight_exact && exact_ws) {
        *atom.weight_exact += (*exact_ws)[i];
        atom.weight_exact->canonicalize();
      } else {
        atom.weight_exact.reset();
      }
      continue;
    }
    slot.emplace(std::move(key), mu.atoms.size());
    EmpiricalAtom atom;
    atom.point = p;
    atom.weight = wgt;
    if (exact_ws) atom.weight_exact = (*exact_ws)[i];
    mu.atoms.push_back(std::move(atom));
  }
  mu.normalization = norm.value();
  return mu;
}

inline EmpiricalMeasure empirical_measure(const SystemSpec& s, const SummationMethod& m,
                                          const Point& w, std::int64_t n, IterateOptions opts = {}) {
  WeightVector row = m.row(n);
  OrbitSegment orbit = iterate(s, w, std::max<std::int64_t>(row.max_index(), 0), opts);
  return empirical_measure_on(orbit, row);
}

inline PairingValue pairing(const EmpiricalMeasure& mu, const Observable& x) {
  PairingValue out;
  KahanSum acc;
  for (const auto& a : mu.atoms) acc.add(a.weight * x.eval(a.point));
  out.value = acc.value();
  if (x.eval_exact) {
    Rational sum = 0;
    bool ok = !mu.atoms.empty();
    for (const auto& a : mu.atoms) {
      if (!a.weight_exact) {
        ok = false;
        break;
      }
      auto xv = x.eval_exact(a.point);
      if (!xv) {
        ok = false;
        break;
      }
      sum += *a.weight_exact * *xv;
    }
    if (ok) {
      sum.canonicalize();
      out.exact = sum;
    }
  }
  return out;
}

// Pairing against x composed with the system map: <x o phi, mu>.
inline PairingValue pairing_after_map(const SystemSpec& s, const EmpiricalMeasure& mu,
                                      const Observable& x) {
  PairingValue out;
  KahanSum acc;
  std::vector<Point> mapped;
  mapped.reserve(mu.atoms.size());
  for (const auto& a : mu.atoms) mapped.push_back(s.map(a.point));
  for (std::size_t i = 0; i < mu.atoms.size(); ++i) acc.add(mu.atoms[i].weight * x.eval(mapped[i]));
  out.value = acc.value();
  if (x.eval_exact) {
    Rational sum = 0;
    bool ok = !mu.atoms.empty();
    for (std::size_t i = 0; i < mu.atoms.size() && ok; ++i) {
      if (!mu.atoms[i].weight_exact) {
        ok = false;
        break;
      }
      auto xv = x.eval_exact(mapped[i]);
      if (!xv) {
        ok = false;
        break;
      }
      sum += *mu.atoms[i].weight_exact * *xv;
    }
    if (ok) {
      sum.canonicalize();
      out.exact = sum;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Average traces along checkpoints
// ---------------------------------------------------------------------------

struct AverageTrace {
  Point omega;
  std::string method;
  std::vector<std::int64_t> checkpoints;
  std::vector<std::string> observables;
  // values[j][i]: dictionary observable j averaged at checkpoint i
  std::vector<std::vector<double>> values;
  // residuals[j][i]: |<x o phi, V_n d_w> - <x, V_n d_w>| at checkpoint i
  std::vector<std::vector<double>> residuals;
};

// Default checkpoint schedule: n_i = ceil(ratio^i), deduplicated, capped and
// terminated at max_n. Geometric spacing exposes slow oscillation cheaply.
inline std::vector<std::int64_t> geometric_checkpoints(std::int64_t max_n, double ratio = 1.5) {
  if (max_n < 1) throw InvalidParameter("max_n must be >= 1");
  if (!(ratio > 1.0)) throw InvalidParameter("checkpoint ratio must exceed 1");
  std::vector<std::int64_t> cps;
  for (double v = 1.0; v <= static_cast<double>(max_n); v *= ratio) {
    auto n = static_cast<std::int64_t>(std::ceil(v));
    if (n > max_n) break;
    if (cps.empty() || n > cps.back()) cps.push_back(n);
  }
  if (cps.empty() || cps.back() != max_n) cps.push_back(max_n);
  return cps;
}

// Computes every dictionary average and the shift-invariance residual at each
// checkpoint. The orbit is computed once to the longest needed index and
// shared across checkpoints.
inline AverageTrace trace(const SystemSpec& s, const SummationMethod& m, const Point& w,
                          std::vector<std::int64_t> checkpoints, IterateOptions opts = {}) {
  if (checkpoints.empty()) throw InvalidParameter("at least one checkpoint required");
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i] < 0) throw InvalidParameter("checkpoints must be nonnegative");
    if (i > 0 && checkpoints[i] <= checkpoints[i - 1])
      throw InvalidParameter("checkpoints must be strictly increasing");
  }

  std::vector<WeightVector> rows;
  rows.reserve(checkpoints.size());
  std::int64_t max_index = 0;
  for (auto n : checkpoints) {
    rows.push_back(m.row(n));
    max_index = std::max(max_index, rows.back().max_index());
  }

  OrbitSegment orbit = iterate(s, w, max_index + 1, opts);

  AverageTrace t;
  t.omega = w;
  t.method = m.name;
  t.checkpoints = std::move(checkpoints);
  t.values.resize(s.dictionary.size());
  t.residuals.resize(s.dictionary.size());

  for (std::size_t j = 0; j < s.dictionary.size(); ++j) {
    const Observable& x = s.dictionary[j];
    t.observables.push_back(x.name);
    std::vector<double> xs(orbit.points.size());
    for (std::size_t k = 0; k < orbit.points.size(); ++k) xs[k] = x.eval(orbit.points[k]);
    t.values[j].resize(t.checkpoints.size());
    t.residuals[j].resize(t.checkpoints.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      KahanSum val, shifted;
      for (std::size_t e = 0; e < rows[i].indices.size(); ++e) {
        const auto k = static_cast<std::size_t>(rows[i].indices[e]);
        val.add(rows[i].weights[e] * xs[k]);
        shifted.add(rows[i].weights[e] * xs[k + 1]);
      }
      t.values[j][i] = val.value();
      t.residuals[j][i] = std::fabs(shifted.value() - val.value());
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Convergence detection
// ---------------------------------------------------------------------------

enum class ConvergenceStatus { converged, oscillating, undecided };

inline const char* to_string(ConvergenceStatus s) {
  switch (s) {
    case ConvergenceStatus::converged: return "converged";
    case ConvergenceStatus::oscillating: return "oscillating";
    default: return "undecided";
  }
}

struct ConvergenceVerdict {
  ConvergenceStatus status = ConvergenceStatus::undecided;
  std::optional<EmpiricalMeasure> limit;  // set when converged
  double cauchy_gap = 0.0;                // max tail oscillation over the dictionary
  std::string witness_observable;
  std::int64_t witness_low = 0;   // checkpoint pair realizing the gap
  std::int64_t witness_high = 0;
};

// Trichotomy over the tail (last half) of the checkpoints: converged when
// every dictionary average varies at most tol, oscillating when some
// observable attains a gap >= sep at two tail checkpoints, else undecided.
// Convergence is not finitely decidable; the verdict carries its evidence.
inline ConvergenceVerdict detect_convergence(const SystemSpec& s, const SummationMethod& m,
                                             const AverageTrace& t, double tol, double sep,
                                             IterateOptions opts = {}) {
  if (t.checkpoints.size() < 4) throw TooFewCheckpoints("need at least 4 checkpoints");
  const std::size_t count = t.checkpoints.size();
  const std::size_t tail_begin = count - (count + 1) / 2;

  ConvergenceVerdict v;
  for (std::size_t j = 0; j < t.values.size(); ++j) {
    std::size_t lo = tail_begin, hi = tail_begin;
    for (std::size_t i = tail_begin; i < count; ++i) {
      if (t.values[j][i] < t.values[j][lo]) lo = i;
      if (t.values[j][i] > t.values[j][hi]) hi = i;
    }
    double gap = t.values[j][hi] - t.values[j][lo];
    if (gap > v.cauchy_gap) {
      v.cauchy_gap = gap;
      v.witness_observable = t.observables[j];
      v.witness_low = t.checkpoints[std::min(lo, hi)];
      v.witness_high = t.checkpoints[std::max(lo, hi)];
    }
  }

  if (v.cauchy_gap <= tol) {
    v.status = ConvergenceStatus::converged;
    v.limit = empirical_measure(s, m, t.omega, t.checkpoints.back(), opts);
  } else if (v.cauchy_gap >= sep) {
    v.status = ConvergenceStatus::oscillating;
  } else {
    v.status = ConvergenceStatus::undecided;
  }
  return v;
}

}  // namespace ergolab
