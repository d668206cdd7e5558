#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ergolab/averaging.hpp"
#include "ergolab/common.hpp"
#include "ergolab/systems.hpp"

namespace ergolab {

// Weak-star pseudo-metric against a fixed dictionary:
//   d(mu, nu) = sum_j 2^{-j} |<x_j, mu> - <x_j, nu>| / ||x_j||, j = 1..J.
// Bounded by 2 on probability measures.
class MeasureDistance {
 public:
  explicit MeasureDistance(std::vector<Observable> dictionary)
      : dictionary_(std::move(dictionary)) {
    if (dictionary_.empty()) throw InvalidParameter("measure distance needs observables");
  }

  std::vector<double> signature(const EmpiricalMeasure& mu) const {
    std::vector<double> sig(dictionary_.size());
    for (std::size_t j = 0; j < dictionary_.size(); ++j) sig[j] = pairing(mu, dictionary_[j]).value;
    return sig;
  }

  double from_signatures(const std::vector<double>& a, const std::vector<double>& b) const {
    if (a.size() != dictionary_.size() || b.size() != dictionary_.size())
      throw DimensionMismatch("signature length");
    double d = 0.0;
    double scale = 0.5;
    for (std::size_t j = 0; j < dictionary_.size(); ++j) {
      d += scale * std::fabs(a[j] - b[j]) / dictionary_[j].sup_norm;
      scale *= 0.5;
    }
    return d;
  }

  double operator()(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) const {
    return from_signatures(signature(mu), signature(nu));
  }

  const std::vector<Observable>& dictionary() const { return dictionary_; }

 private:
  std::vector<Observable> dictionary_;
};

// Numerical invariance defect of a measure: max over the dictionary of
// |<x o phi, mu> - <x, mu>| / ||x||. Limit measures drive this to zero.
// Differences are taken in rational arithmetic whenever both pairings admit
// it, so push-forward-invariant exact measures report an exact zero there.
inline double ergodicity_residual(const SystemSpec& s, const EmpiricalMeasure& mu) {
  double r = 0.0;
  for (const auto& x : s.dictionary) {
    PairingValue shifted = pairing_after_map(s, mu, x);
    PairingValue plain = pairing(mu, x);
    double d;
    if (shifted.exact && plain.exact) {
      Rational diff = *shifted.exact - *plain.exact;
      d = std::fabs(to_double(diff)) / x.sup_norm;
    } else {
      d = std::fabs(shifted.value - plain.value) / x.sup_norm;
    }
    r = std::max(r, d);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Grid sweep and clustering
// ---------------------------------------------------------------------------

struct DecompositionReport {
  std::vector<Point> grid;
  std::vector<ConvergenceVerdict> limits;            // one per grid point
  std::vector<std::vector<std::size_t>> components;  // partition of decided grid indices
  std::vector<EmpiricalMeasure> representatives;     // lowest-index member's limit
  std::vector<double> representative_residuals;
  std::vector<std::size_t> undecided;                // excluded grid indices
  double eps = 0.0;
  std::int64_t n = 0;
  // partition diagnostics
  double max_intra_component_distance = 0.0;
  double min_representative_distance = 0.0;
};

// Computes the point-to-limit map over the grid: a convergence verdict (with
// limit measure and invariance residuals) per initial point. Grid points fan
// out to the worker pool; results land by index so scheduling cannot reorder
// them.
inline DecompositionReport psi_map(const SystemSpec& s, const SummationMethod& m,
                                   std::vector<Point> grid, std::int64_t n, double tol, double sep,
                                   IterateOptions opts = {}) {
  if (grid.empty()) throw InvalidParameter("grid must be nonempty");
  DecompositionReport rep;
  rep.n = n;
  rep.grid = std::move(grid);
  rep.limits.resize(rep.grid.size());
  auto checkpoints = geometric_checkpoints(n);
  parallel_for(rep.grid.size(), [&](std::size_t i) {
    AverageTrace t = trace(s, m, rep.grid[i], checkpoints, opts);
    rep.limits[i] = detect_convergence(s, m, t, tol, sep, opts);
  });
  return rep;
}

// Single-linkage clustering of the converged limits at threshold eps:
// components are the connected components of the "within eps" graph.
// Deterministic: components ordered by lowest member index.
inline void cluster(DecompositionReport& rep, const MeasureDistance& dist, double eps) {
  rep.eps = eps;
  rep.components.clear();
  rep.representatives.clear();
  rep.representative_residuals.clear();
  rep.undecided.clear();

  std::vector<std::size_t> decided;
  for (std::size_t i = 0; i < rep.limits.size(); ++i) {
    if (rep.limits[i].status == ConvergenceStatus::converged)
      decided.push_back(i);
    else
      rep.undecided.push_back(i);
  }
  if (decided.empty()) return;

  std::vector<std::vector<double>> sigs(decided.size());
  for (std::size_t a = 0; a < decided.size(); ++a)
    sigs[a] = dist.signature(*rep.limits[decided[a]].limit);

  // union-find over decided points
  std::vector<std::size_t> parent(decided.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };
  for (std::size_t a = 0; a < decided.size(); ++a)
    for (std::size_t b = a + 1; b < decided.size(); ++b)
      if (dist.from_signatures(sigs[a], sigs[b]) <= eps) {
        auto ra = find(a), rb = find(b);
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
      }

  std::vector<std::optional<std::size_t>> comp_of_root(decided.size());
  for (std::size_t a = 0; a < decided.size(); ++a) {
    auto r = find(a);
    if (!comp_of_root[r]) {
      comp_of_root[r] = rep.components.size();
      rep.components.emplace_back();
    }
    rep.components[*comp_of_root[r]].push_back(decided[a]);
  }

  for (const auto& comp : rep.components)
    rep.representatives.push_back(*rep.limits[comp.front()].limit);

  // partition diagnostics
  rep.max_intra_component_distance = 0.0;
  std::vector<std::size_t> pos(rep.limits.size(), 0);
  for (std::size_t a = 0; a < decided.size(); ++a) pos[decided[a]] = a;
  for (const auto& comp : rep.components)
    for (std::size_t i = 0; i < comp.size(); ++i)
      for (std::size_t j = i + 1; j < comp.size(); ++j)
        rep.max_intra_component_distance =
            std::max(rep.max_intra_component_distance,
                     dist.from_signatures(sigs[pos[comp[i]]], sigs[pos[comp[j]]]));
  rep.min_representative_distance = rep.representatives.size() > 1 ? 2.0 : 0.0;
  for (std::size_t i = 0; i < rep.components.size(); ++i)
    for (std::size_t j = i + 1; j < rep.components.size(); ++j)
      rep.min_representative_distance =
          std::min(rep.min_representative_distance,
                   dist.from_signatures(sigs[pos[rep.components[i].front()]],
                                        sigs[pos[rep.components[j].front()]]));
}

// ---------------------------------------------------------------------------
// Separation check
// ---------------------------------------------------------------------------

struct SeparationPair {
  std::size_t first = 0;
  std::size_t second = 0;
  std::optional<std::size_t> observable;  // separating dictionary index, or none
  double gap = 0.0;                       // pairing gap for that observable (best gap if none)
};

struct SeparationReport {
  std::vector<SeparationPair> pairs;
  double tolerance = 0.0;
  bool pass = false;  // every pair separated; NONE means the dictionary is too
                      // coarse, not that the measures are equal
};

inline SeparationReport separation_check(const std::vector<EmpiricalMeasure>& reps,
                                         const std::vector<Observable>& dictionary,
                                         double tolerance = 1e-6) {
  if (reps.empty()) throw InvalidParameter("need at least one representative");
  SeparationReport rep;
  rep.tolerance = tolerance;
  rep.pass = true;
  std::vector<std::vector<double>> sigs(reps.size(), std::vector<double>(dictionary.size()));
  for (std::size_t i = 0; i < reps.size(); ++i)
    for (std::size_t j = 0; j < dictionary.size(); ++j)
      sigs[i][j] = pairing(reps[i], dictionary[j]).value;

  for (std::size_t i = 0; i < reps.size(); ++i)
    for (std::size_t j = i + 1; j < reps.size(); ++j) {
      SeparationPair pr;
      pr.first = i;
      pr.second = j;
      double best = -1.0;
      for (std::size_t k = 0; k < dictionary.size(); ++k) {
        double gap = std::fabs(sigs[i][k] - sigs[j][k]);
        if (!pr.observable && gap > tolerance) {
          pr.observable = k;
          pr.gap = gap;
          break;
        }
        best = std::max(best, gap);
      }
      if (!pr.observable) {
        pr.gap = best;
        rep.pass = false;
      }
      rep.pairs.push_back(pr);
    }
  return rep;
}

// ---------------------------------------------------------------------------
// Grids
// ---------------------------------------------------------------------------

// Uniform lattice k/resolution per axis; the endpoint 1 is included on the
// interval but dropped on the torus (where 1 = 0).
inline std::vector<Point> uniform_grid(int dimension, std::int64_t resolution, bool exact,
                                       bool include_endpoint) {
  if (dimension < 1 || resolution < 1)
    throw InvalidParameter("grid needs dimension and resolution >= 1");
  const std::int64_t top = include_endpoint ? resolution : resolution - 1;
  std::vector<Point> pts;
  std::vector<std::int64_t> idx(static_cast<std::size_t>(dimension), 0);
  while (true) {
    if (exact) {
      RationalVec v;
      for (auto k : idx) v.x.push_back(make_rational(k, resolution));
      pts.push_back(v);
    } else {
      RealVec v;
      for (auto k : idx) v.x.push_back(static_cast<double>(k) / static_cast<double>(resolution));
      pts.push_back(v);
    }
    int c = dimension - 1;
    while (c >= 0) {
      if (++idx[static_cast<std::size_t>(c)] <= top) break;
      idx[static_cast<std::size_t>(c)] = 0;
      --c;
    }
    if (c < 0) break;
  }
  return pts;
}

}  // namespace ergolab
