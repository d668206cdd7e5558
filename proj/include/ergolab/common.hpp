#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ergolab {

// Exact rational scalar. GMP keeps values canonical (lowest terms, positive
// denominator) after every canonicalize().
using Rational = mpq_class;

// ---------------------------------------------------------------------------
// Errors. Each domain error carries a stable name; the CLI maps them to
// exit code 1 and prints the name.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& what)
      : std::runtime_error(name + ": " + what), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

#define ERGOLAB_ERROR_TYPE(NAME)                                   \
  class NAME : public Error {                                      \
   public:                                                         \
    explicit NAME(const std::string& w = "") : Error(#NAME, w) {}  \
  };

ERGOLAB_ERROR_TYPE(NonMonotoneWeights)
ERGOLAB_ERROR_TYPE(NonPositiveWeight)
ERGOLAB_ERROR_TYPE(NonIncreasingIndexMap)
ERGOLAB_ERROR_TYPE(DimensionMismatch)
ERGOLAB_ERROR_TYPE(InvalidParameter)
ERGOLAB_ERROR_TYPE(SingularMatrix)
ERGOLAB_ERROR_TYPE(RationalOverflow)
ERGOLAB_ERROR_TYPE(TooFewCheckpoints)
ERGOLAB_ERROR_TYPE(NonSquareMatrix)
ERGOLAB_ERROR_TYPE(LpInfeasible)
ERGOLAB_ERROR_TYPE(LpNumericalFailure)

#undef ERGOLAB_ERROR_TYPE

// ---------------------------------------------------------------------------
// Rational helpers
// ---------------------------------------------------------------------------

inline double to_double(const Rational& q) { return q.get_d(); }

inline Rational make_rational(long num, long den) {
  if (den == 0) throw InvalidParameter("zero denominator");
  Rational q(num, den);
  q.canonicalize();
  return q;
}

// Parses "p/q" or a plain integer string. Returns nullopt for anything else
// (decimal strings are reserved for the float representation).
inline std::optional<Rational> parse_rational(const std::string& s) {
  if (s.empty()) return std::nullopt;
  auto is_int = [](const std::string& t) {
    if (t.empty()) return false;
    std::size_t i = (t[0] == '-' || t[0] == '+') ? 1 : 0;
    if (i == t.size()) return false;
    for (; i < t.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(t[i]))) return false;
    return true;
  };
  auto slash = s.find('/');
  if (slash == std::string::npos) {
    if (!is_int(s)) return std::nullopt;
    Rational q;
    if (q.set_str(s, 10) != 0) return std::nullopt;
    q.canonicalize();
    return q;
  }
  std::string num = s.substr(0, slash), den = s.substr(slash + 1);
  if (!is_int(num) || !is_int(den)) return std::nullopt;
  Rational q;
  if (q.set_str(num + "/" + den, 10) != 0) return std::nullopt;
  if (q.get_den() == 0) return std::nullopt;
  q.canonicalize();
  return q;
}

// Exact binary rational of a finite double.
inline Rational rational_of_double(double x) {
  if (!std::isfinite(x)) throw InvalidParameter("non-finite value");
  Rational q(x);
  q.canonicalize();
  return q;
}

inline std::size_t denominator_bits(const Rational& q) {
  return mpz_sizeinbase(q.get_den().get_mpz_t(), 2);
}

// q - floor(q), exact, in [0,1).
inline Rational fractional_part(const Rational& q) {
  mpz_class fl;
  mpz_fdiv_q(fl.get_mpz_t(), q.get_num().get_mpz_t(), q.get_den().get_mpz_t());
  Rational r = q - Rational(fl);
  r.canonicalize();
  return r;
}

inline std::string rational_to_string(const Rational& q) {
  return q.get_str();
}

// ---------------------------------------------------------------------------
// Numeric helpers
// ---------------------------------------------------------------------------

// Compensated summation; row sums and long averages must not lose more than
// O(eps) regardless of term count.
class KahanSum {
 public:
  void add(double x) {
    double y = x - c_;
    double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

inline double fractional_part(double x) {
  double f = x - std::floor(x);
  if (f >= 1.0) f = 0.0;  // guards against floor rounding at the boundary
  return f;
}

// %.17g: enough digits for binary64 round trips.
inline std::string format_double17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return std::string(buf);
}

// ---------------------------------------------------------------------------
// Parallelism. ERGOLAB_THREADS caps the worker count (0 or unset = auto).
// Work items write to disjoint indices so schedules cannot change results.
// ---------------------------------------------------------------------------

inline unsigned thread_budget() {
  if (const char* env = std::getenv("ERGOLAB_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  unsigned workers = thread_budget();
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  if (workers > count) workers = static_cast<unsigned>(count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (std::size_t i = w; i < count; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace ergolab
