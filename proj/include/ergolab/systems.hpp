#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ergolab/common.hpp"
#include "ergolab/point.hpp"

namespace ergolab {

// A named test function with a declared sup-norm bound. `eval_exact` is set
// only for observables that are rational-valued on exact points; it feeds the
// exact pairing path.
struct Observable {
  std::string name;
  double sup_norm = 1.0;
  std::function<double(const Point&)> eval;
  std::function<std::optional<Rational>(const Point&)> eval_exact;
};

// A semicascade: phase space, endomorphism, metric, and a fixed observable
// dictionary standing in for the continuous test functions. Immutable after
// construction; the map and metric are pure.
struct SystemSpec {
  std::string name;
  std::string space;        // torus | interval | shift | sphere
  int dimension = 1;        // coordinate count; 0 for the shift
  bool prefers_exact = false;  // float orbits of this map drift; CLI gates them
  std::function<Point(const Point&)> map;
  std::function<double(const Point&, const Point&)> metric;
  std::vector<Observable> dictionary;

  const Observable& observable(const std::string& nm) const {
    for (const auto& o : dictionary)
      if (o.name == nm) return o;
    throw InvalidParameter("unknown observable: " + nm);
  }
};

namespace detail {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline double circle_dist(double a, double b) {
  double d = std::fabs(fractional_part(a) - fractional_part(b));
  return std::min(d, 1.0 - d);
}

inline Observable const_one() {
  Observable o;
  o.name = "one";
  o.sup_norm = 1.0;
  o.eval = [](const Point&) { return 1.0; };
  o.eval_exact = [](const Point&) -> std::optional<Rational> { return Rational(1); };
  return o;
}

inline Observable coordinate(std::size_t i, std::string name) {
  Observable o;
  o.name = std::move(name);
  o.sup_norm = 1.0;
  o.eval = [i](const Point& p) { return coord(p, i); };
  o.eval_exact = [i](const Point& p) { return coord_exact(p, i); };
  return o;
}

// cos/sin(2*pi*<m, w>) characters of the torus.
inline std::string freq_suffix(const std::vector<long>& m) {
  std::string s = "(";
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(m[i]);
  }
  s += ')';
  return s;
}

inline double char_phase(const Point& p, const std::vector<long>& m) {
  double acc = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) acc += static_cast<double>(m[i]) * coord(p, i);
  return kTwoPi * acc;
}

inline Observable character_cos(std::vector<long> m) {
  Observable o;
  o.name = "cos2pi" + freq_suffix(m);
  o.sup_norm = 1.0;
  o.eval = [m](const Point& p) { return std::cos(char_phase(p, m)); };
  return o;
}

inline Observable character_sin(std::vector<long> m) {
  Observable o;
  o.name = "sin2pi" + freq_suffix(m);
  o.sup_norm = 1.0;
  o.eval = [m](const Point& p) { return std::sin(char_phase(p, m)); };
  return o;
}

inline void require_coords(const Point& p, std::size_t d, const char* system) {
  if (std::holds_alternative<SymbolicPoint>(p))
    throw InvalidParameter(std::string(system) + " does not act on symbolic points");
  if (coord_count(p) != d)
    throw DimensionMismatch(std::string(system) + " expects " + std::to_string(d) + " coordinates");
}

inline std::function<double(const Point&, const Point&)> torus_metric(std::size_t d) {
  return [d](const Point& a, const Point& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < d; ++i) m = std::max(m, circle_dist(coord(a, i), coord(b, i)));
    return m;
  };
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Circle rotation t -> t + alpha mod 1
// ---------------------------------------------------------------------------

inline SystemSpec rotation(double alpha_d, std::optional<Rational> alpha_q = std::nullopt) {
  const Rational aq = alpha_q ? *alpha_q : rational_of_double(alpha_d);
  SystemSpec s;
  s.name = "rotation";
  s.space = "torus";
  s.dimension = 1;
  s.map = [alpha_d, aq](const Point& p) -> Point {
    detail::require_coords(p, 1, "rotation");
    if (const auto* rv = std::get_if<RealVec>(&p))
      return RealVec{{fractional_part(rv->x[0] + alpha_d)}};
    const auto& q = std::get<RationalVec>(p);
    return RationalVec{{fractional_part(q.x[0] + aq)}};
  };
  s.metric = detail::torus_metric(1);
  s.dictionary = {detail::const_one(), detail::character_cos({1}), detail::character_sin({1}),
                  detail::character_cos({2}), detail::character_sin({2})};
  return s;
}

inline SystemSpec rotation(const Rational& alpha) {
  Rational a = fractional_part(alpha);
  return rotation(to_double(a), a);
}

// ---------------------------------------------------------------------------
// Affine torus endomorphism w -> A w + b mod 1
// ---------------------------------------------------------------------------

inline SystemSpec affine_torus(std::vector<std::vector<long>> A, std::vector<Rational> b) {
  const std::size_t d = A.size();
  if (d == 0) throw DimensionMismatch("matrix must be nonempty");
  for (const auto& row : A)
    if (row.size() != d) throw DimensionMismatch("matrix must be square");
  if (b.size() != d) throw DimensionMismatch("shift vector length must match matrix dimension");
  for (auto& q : b) q = fractional_part(q);

  bool identity = true;
  for (std::size_t i = 0; i < d && identity; ++i)
    for (std::size_t j = 0; j < d && identity; ++j)
      if (A[i][j] != (i == j ? 1 : 0)) identity = false;

  std::vector<double> bd(d);
  for (std::size_t i = 0; i < d; ++i) bd[i] = to_double(b[i]);

  SystemSpec s;
  s.name = "torus";
  s.space = "torus";
  s.dimension = static_cast<int>(d);
  s.prefers_exact = !identity;
  s.map = [A, b, bd, d](const Point& p) -> Point {
    detail::require_coords(p, d, "affine torus map");
    if (const auto* rv = std::get_if<RealVec>(&p)) {
      RealVec out;
      out.x.resize(d);
      for (std::size_t i = 0; i < d; ++i) {
        double acc = bd[i];
        for (std::size_t j = 0; j < d; ++j) acc += static_cast<double>(A[i][j]) * rv->x[j];
        out.x[i] = fractional_part(acc);
      }
      return out;
    }
    const auto& qv = std::get<RationalVec>(p);
    RationalVec out;
    out.x.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
      Rational acc = b[i];
      for (std::size_t j = 0; j < d; ++j) acc += Rational(A[i][j]) * qv.x[j];
      out.x[i] = fractional_part(acc);
    }
    return out;
  };
  s.metric = detail::torus_metric(d);
  for (std::size_t i = 0; i < d; ++i)
    s.dictionary.push_back(detail::coordinate(i, "t" + std::to_string(i)));
  std::vector<std::vector<long>> freqs;
  if (d == 1) {
    freqs = {{1}, {2}};
  } else {
    for (std::size_t i = 0; i < d; ++i) {
      std::vector<long> e(d, 0);
      e[i] = 1;
      freqs.push_back(e);
    }
    std::vector<long> e(d, 0);
    e[0] = 1;
    e[1] = 1;
    freqs.push_back(e);
  }
  for (auto& m : freqs) {
    s.dictionary.push_back(detail::character_cos(m));
    s.dictionary.push_back(detail::character_sin(m));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Interval maps on [0,1]
// ---------------------------------------------------------------------------

namespace detail {

inline void require_unit_interval(const Point& p) {
  require_coords(p, 1, "interval map");
  if (const auto* rv = std::get_if<RealVec>(&p)) {
    if (rv->x[0] < 0.0 || rv->x[0] > 1.0) throw InvalidParameter("interval point outside [0,1]");
  } else {
    const auto& q = std::get<RationalVec>(p).x[0];
    if (q < 0 || q > 1) throw InvalidParameter("interval point outside [0,1]");
  }
}

inline SystemSpec interval_base(std::string name, bool prefers_exact,
                                std::function<Point(const Point&)> map) {
  SystemSpec s;
  s.name = std::move(name);
  s.space = "interval";
  s.dimension = 1;
  s.prefers_exact = prefers_exact;
  s.map = std::move(map);
  s.metric = [](const Point& a, const Point& b) { return std::fabs(coord(a, 0) - coord(b, 0)); };

  Observable t2;
  t2.name = "t2";
  t2.sup_norm = 1.0;
  t2.eval = [](const Point& p) {
    double v = coord(p, 0);
    return v * v;
  };
  t2.eval_exact = [](const Point& p) -> std::optional<Rational> {
    auto v = coord_exact(p, 0);
    if (!v) return std::nullopt;
    Rational r = (*v) * (*v);
    r.canonicalize();
    return r;
  };
  Observable cpi;
  cpi.name = "cospi";
  cpi.sup_norm = 1.0;
  cpi.eval = [](const Point& p) { return std::cos(std::numbers::pi * coord(p, 0)); };

  s.dictionary = {const_one(), coordinate(0, "t"), std::move(t2), std::move(cpi)};
  return s;
}

}  // namespace detail

inline SystemSpec interval_square() {
  return detail::interval_base("interval-square", false, [](const Point& p) -> Point {
    detail::require_unit_interval(p);
    if (const auto* rv = std::get_if<RealVec>(&p)) return RealVec{{rv->x[0] * rv->x[0]}};
    Rational q = std::get<RationalVec>(p).x[0];
    q *= q;
    q.canonicalize();
    return RationalVec{{q}};
  });
}

inline SystemSpec interval_logistic(double r, std::optional<Rational> r_exact = std::nullopt) {
  if (!(r >= 0.0 && r <= 4.0)) throw InvalidParameter("logistic parameter must lie in [0,4]");
  const Rational rq = r_exact ? *r_exact : rational_of_double(r);
  if (rq < 0 || rq > 4) throw InvalidParameter("logistic parameter must lie in [0,4]");
  return detail::interval_base("interval-logistic", r > 1.0, [r, rq](const Point& p) -> Point {
    detail::require_unit_interval(p);
    if (const auto* rv = std::get_if<RealVec>(&p)) {
      double x = rv->x[0];
      return RealVec{{r * x * (1.0 - x)}};
    }
    const Rational& x = std::get<RationalVec>(p).x[0];
    Rational y = rq * x * (Rational(1) - x);
    y.canonicalize();
    return RationalVec{{y}};
  });
}

inline SystemSpec interval_logistic(const Rational& r) {
  return interval_logistic(to_double(r), r);
}

inline SystemSpec interval_tent() {
  return detail::interval_base("interval-tent", true, [](const Point& p) -> Point {
    detail::require_unit_interval(p);
    if (const auto* rv = std::get_if<RealVec>(&p)) {
      double x = rv->x[0];
      return RealVec{{x <= 0.5 ? 2.0 * x : 2.0 * (1.0 - x)}};
    }
    const Rational& x = std::get<RationalVec>(p).x[0];
    Rational y;
    if (x <= Rational(1, 2))
      y = Rational(2) * x;
    else
      y = Rational(2) * (Rational(1) - x);
    y.canonicalize();
    return RationalVec{{y}};
  });
}

// Piecewise-linear interval map given by breakpoints (x_i, y_i) with
// x_0 = 0 < x_1 < ... < x_m = 1 and y_i in [0,1]. The extension point for
// user-supplied interval dynamics.
inline SystemSpec interval_pwl(std::vector<std::pair<Rational, Rational>> bp) {
  if (bp.size() < 2) throw InvalidParameter("piecewise-linear map needs at least two breakpoints");
  if (bp.front().first != 0 || bp.back().first != 1)
    throw InvalidParameter("breakpoints must span [0,1]");
  for (std::size_t i = 0; i < bp.size(); ++i) {
    if (i > 0 && !(bp[i - 1].first < bp[i].first))
      throw InvalidParameter("breakpoint abscissae must increase");
    if (bp[i].second < 0 || bp[i].second > 1)
      throw InvalidParameter("breakpoint ordinates must lie in [0,1]");
  }
  bool steep = false;
  for (std::size_t i = 1; i < bp.size(); ++i) {
    Rational slope = (bp[i].second - bp[i - 1].second) / (bp[i].first - bp[i - 1].first);
    if (abs(slope) > 1) steep = true;
  }
  auto shared = std::make_shared<const std::vector<std::pair<Rational, Rational>>>(std::move(bp));
  return detail::interval_base("interval-pwl", steep, [shared](const Point& p) -> Point {
    detail::require_unit_interval(p);
    auto segment_eval_exact = [&](const Rational& x) {
      const auto& pts = *shared;
      std::size_t i = 1;
      while (i + 1 < pts.size() && x > pts[i].first) ++i;
      const auto& [x0, y0] = pts[i - 1];
      const auto& [x1, y1] = pts[i];
      Rational y = y0 + (y1 - y0) * (x - x0) / (x1 - x0);
      y.canonicalize();
      return y;
    };
    if (const auto* rv = std::get_if<RealVec>(&p))
      return RealVec{{to_double(segment_eval_exact(rational_of_double(rv->x[0])))}};
    return RationalVec{{segment_eval_exact(std::get<RationalVec>(p).x[0])}};
  });
}

// ---------------------------------------------------------------------------
// Left Bernoulli shift on binary sequences
// ---------------------------------------------------------------------------

inline SystemSpec bernoulli_shift() {
  SystemSpec s;
  s.name = "shift";
  s.space = "shift";
  s.dimension = 0;
  s.prefers_exact = true;
  s.map = [](const Point& p) -> Point {
    const auto* sp = std::get_if<SymbolicPoint>(&p);
    if (!sp) throw InvalidParameter("shift acts on symbolic points");
    return sp->shifted();
  };
  s.metric = [](const Point& a, const Point& b) {
    const auto* sa = std::get_if<SymbolicPoint>(&a);
    const auto* sb = std::get_if<SymbolicPoint>(&b);
    if (!sa || !sb) throw InvalidParameter("shift metric needs symbolic points");
    if (sa->key() == sb->key()) return 0.0;
    constexpr std::uint64_t kScanCap = 1u << 20;
    for (std::uint64_t k = 0; k < kScanCap; ++k)
      if (sa->symbol_at(k) != sb->symbol_at(k)) return 1.0 / static_cast<double>(1 + k);
    throw InvalidParameter("sequences agree beyond metric resolution");
  };

  auto symbol_obs = [](std::string name, std::function<int(const SymbolicPoint&)> f) {
    Observable o;
    o.name = std::move(name);
    o.sup_norm = 1.0;
    auto get = [f](const Point& p) -> int {
      const auto* sp = std::get_if<SymbolicPoint>(&p);
      if (!sp) throw InvalidParameter("observable needs a symbolic point");
      return f(*sp);
    };
    o.eval = [get](const Point& p) { return static_cast<double>(get(p)); };
    o.eval_exact = [get](const Point& p) -> std::optional<Rational> { return Rational(get(p)); };
    return o;
  };

  s.dictionary = {
      symbol_obs("coord0", [](const SymbolicPoint& w) { return w.symbol_at(0); }),
      symbol_obs("coord1", [](const SymbolicPoint& w) { return w.symbol_at(1); }),
      symbol_obs("prod01", [](const SymbolicPoint& w) { return w.symbol_at(0) * w.symbol_at(1); }),
      symbol_obs("cyl0", [](const SymbolicPoint& w) { return w.symbol_at(0) == 0 ? 1 : 0; }),
      symbol_obs("cyl1", [](const SymbolicPoint& w) { return w.symbol_at(0) == 1 ? 1 : 0; }),
      symbol_obs("cyl01",
                 [](const SymbolicPoint& w) { return (w.symbol_at(0) == 0 && w.symbol_at(1) == 1) ? 1 : 0; }),
  };
  return s;
}

// ---------------------------------------------------------------------------
// Projective action v -> Tv / |Tv| on the unit sphere
// ---------------------------------------------------------------------------

inline SystemSpec projective_action(std::vector<std::vector<double>> T) {
  const std::size_t n = T.size();
  if (n < 2) throw DimensionMismatch("projective action needs dimension >= 2");
  for (const auto& row : T)
    if (row.size() != n) throw DimensionMismatch("matrix must be square");

  // determinant by Gaussian elimination with partial pivoting
  {
    auto M = T;
    double det = 1.0;
    double scale = 0.0;
    for (const auto& row : M)
      for (double v : row) scale = std::max(scale, std::fabs(v));
    for (std::size_t c = 0; c < n; ++c) {
      std::size_t piv = c;
      for (std::size_t r = c + 1; r < n; ++r)
        if (std::fabs(M[r][c]) > std::fabs(M[piv][c])) piv = r;
      if (piv != c) {
        std::swap(M[piv], M[c]);
        det = -det;
      }
      det *= M[c][c];
      if (M[c][c] == 0.0) break;
      for (std::size_t r = c + 1; r < n; ++r) {
        double f = M[r][c] / M[c][c];
        for (std::size_t k = c; k < n; ++k) M[r][k] -= f * M[c][k];
      }
    }
    double tol = 1e-12 * std::max(1.0, std::pow(scale, static_cast<double>(n)));
    if (!(std::fabs(det) > tol)) throw SingularMatrix("determinant vanishes");
  }

  SystemSpec s;
  s.name = "projective";
  s.space = "sphere";
  s.dimension = static_cast<int>(n);
  s.map = [T, n](const Point& p) -> Point {
    const auto* rv = std::get_if<RealVec>(&p);
    if (!rv) throw InvalidParameter("projective action acts on float sphere points");
    if (rv->x.size() != n) throw DimensionMismatch("sphere point dimension");
    double nrm_in = 0.0;
    for (double v : rv->x) nrm_in += v * v;
    if (!(nrm_in > 0.0)) throw InvalidParameter("zero vector has no projective image");
    nrm_in = std::sqrt(nrm_in);
    RealVec out;
    out.x.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += T[i][j] * (rv->x[j] / nrm_in);
      out.x[i] = acc;
    }
    double nrm = 0.0;
    for (double v : out.x) nrm += v * v;
    nrm = std::sqrt(nrm);
    for (auto& v : out.x) v /= nrm;
    return out;
  };
  s.metric = [n](const Point& a, const Point& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = coord(a, i) - coord(b, i);
      acc += d * d;
    }
    return std::sqrt(acc);
  };
  for (std::size_t i = 0; i < n; ++i) {
    Observable o;
    o.name = "v" + std::to_string(i);
    o.sup_norm = 1.0;
    o.eval = [i](const Point& p) { return coord(p, i); };
    s.dictionary.push_back(std::move(o));
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      Observable o;
      o.name = "v" + std::to_string(i) + "v" + std::to_string(j);
      o.sup_norm = 1.0;
      o.eval = [i, j](const Point& p) { return coord(p, i) * coord(p, j); };
      s.dictionary.push_back(std::move(o));
    }
  return s;
}

// ---------------------------------------------------------------------------
// Orbit computation
// ---------------------------------------------------------------------------

struct CycleInfo {
  std::int64_t preperiod = 0;
  std::int64_t period = 0;
};

struct IterateOptions {
  std::size_t max_denominator_bits = 512;
  bool detect_cycles = true;
};

struct OrbitSegment {
  Point start;
  std::vector<Point> points;  // phi^k(start), 0 <= k <= n_steps
  std::optional<CycleInfo> cycle;
};

// Computes the orbit segment and, for exact representations, records the
// first exact repeat. Once a cycle is found the remaining points are copied
// from the cycle, which keeps long periodic orbits cheap and bit-identical.
inline OrbitSegment iterate(const SystemSpec& s, const Point& start, std::int64_t n_steps,
                            IterateOptions opts = {}) {
  if (n_steps < 0) throw InvalidParameter("orbit length must be nonnegative");
  OrbitSegment seg;
  seg.start = start;
  seg.points.reserve(static_cast<std::size_t>(n_steps) + 1);
  seg.points.push_back(start);

  const auto* sym = std::get_if<SymbolicPoint>(&start);
  const bool aperiodic_rule = sym && sym->kind() == SymbolicPoint::Kind::Blocks4;
  const bool track = opts.detect_cycles && is_exact(start) && !aperiodic_rule;

  auto check_overflow = [&opts](const Point& p, std::int64_t step) {
    if (const auto* qv = std::get_if<RationalVec>(&p)) {
      for (const auto& q : qv->x)
        if (denominator_bits(q) > opts.max_denominator_bits)
          throw RationalOverflow("denominator exceeds " + std::to_string(opts.max_denominator_bits) +
                                 " bits at step " + std::to_string(step));
    }
  };
  check_overflow(start, 0);

  std::map<std::string, std::int64_t> seen;
  if (track) seen.emplace(*exact_key(start), 0);

  for (std::int64_t k = 1; k <= n_steps; ++k) {
    if (seg.cycle) {
      const auto& c = *seg.cycle;
      seg.points.push_back(seg.points[static_cast<std::size_t>(c.preperiod + (k - c.preperiod) % c.period)]);
      continue;
    }
    Point next = s.map(seg.points.back());
    check_overflow(next, k);
    if (track) {
      auto key = *exact_key(next);
      auto [it, inserted] = seen.emplace(key, k);
      if (!inserted) {
        seg.cycle = CycleInfo{it->second, k - it->second};
        seg.points.push_back(seg.points[static_cast<std::size_t>(it->second)]);
        continue;
      }
    }
    seg.points.push_back(std::move(next));
  }
  return seg;
}

}  // namespace ergolab
