#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ergolab/common.hpp"

namespace ergolab {

// Float coordinates.
struct RealVec {
  std::vector<double> x;
};

// Exact rational coordinates; GMP keeps entries in lowest terms.
struct RationalVec {
  std::vector<Rational> x;
};

// A binary sequence given by a finite description: either eventually periodic
// (preperiod word + period word) or the built-in block rule, whose j-th block
// (j >= 1) repeats the symbol j mod 2 for 4^j positions. Block-rule points
// carry an offset so the rule stays closed under the shift.
class SymbolicPoint {
 public:
  enum class Kind { EventuallyPeriodic, Blocks4 };

  static SymbolicPoint eventually_periodic(std::string pre, std::string per) {
    if (per.empty()) throw InvalidParameter("period word must be nonempty");
    check_word(pre);
    check_word(per);
    SymbolicPoint p;
    p.kind_ = Kind::EventuallyPeriodic;
    p.pre_ = std::move(pre);
    p.per_ = std::move(per);
    p.canonicalize();
    return p;
  }

  static SymbolicPoint blocks4(std::uint64_t offset = 0) {
    SymbolicPoint p;
    p.kind_ = Kind::Blocks4;
    p.offset_ = offset;
    return p;
  }

  Kind kind() const { return kind_; }
  const std::string& preperiod() const { return pre_; }
  const std::string& period() const { return per_; }
  std::uint64_t offset() const { return offset_; }

  int symbol_at(std::uint64_t k) const {
    if (kind_ == Kind::EventuallyPeriodic) {
      if (k < pre_.size()) return pre_[k] - '0';
      return per_[(k - pre_.size()) % per_.size()] - '0';
    }
    return blocks4_symbol(offset_ + k);
  }

  SymbolicPoint shifted() const {
    SymbolicPoint p = *this;
    if (kind_ == Kind::EventuallyPeriodic) {
      if (!p.pre_.empty()) {
        p.pre_.erase(p.pre_.begin());
      } else {
        p.per_ = p.per_.substr(1) + p.per_[0];
      }
      p.canonicalize();
    } else {
      p.offset_ += 1;
    }
    return p;
  }

  // Canonical identifier; equal sequences get equal keys.
  std::string key() const {
    if (kind_ == Kind::EventuallyPeriodic) return "s:" + pre_ + "|" + per_;
    return "b4:" + std::to_string(offset_);
  }

  // Symbol of the block-rule sequence at absolute position p. Positions are
  // limited so the cumulative block length arithmetic stays in 64 bits.
  static int blocks4_symbol(std::uint64_t p) {
    std::uint64_t cum = 0;
    std::uint64_t len = 4;
    for (int j = 1; j <= 30; ++j) {
      if (p < cum + len) return j % 2;
      cum += len;
      len *= 4;
    }
    throw InvalidParameter("block-rule position too large");
  }

  // Index of the first position after block j: 4 + 16 + ... + 4^j.
  static std::uint64_t blocks4_boundary(int j) {
    if (j < 1 || j > 30) throw InvalidParameter("block index out of range");
    std::uint64_t cum = 0;
    std::uint64_t len = 4;
    for (int i = 1; i <= j; ++i) {
      cum += len;
      len *= 4;
    }
    return cum;
  }

 private:
  SymbolicPoint() = default;

  static void check_word(const std::string& w) {
    for (char c : w)
      if (c != '0' && c != '1') throw InvalidParameter("symbol words use alphabet {0,1}");
  }

  // Minimal preperiod + primitive period, so representation equality matches
  // sequence equality.
  void canonicalize() {
    // shrink the period to its primitive root
    for (std::size_t d = 1; d <= per_.size() / 2; ++d) {
      if (per_.size() % d != 0) continue;
      bool repeats = true;
      for (std::size_t i = d; i < per_.size() && repeats; ++i)
        if (per_[i] != per_[i % d]) repeats = false;
      if (repeats) {
        per_ = per_.substr(0, d);
        break;
      }
    }
    // absorb preperiod symbols that already agree with the periodic tail
    while (!pre_.empty() && pre_.back() == per_.back()) {
      pre_.pop_back();
      per_ = per_.back() + per_.substr(0, per_.size() - 1);
    }
  }

  Kind kind_ = Kind::EventuallyPeriodic;
  std::string pre_, per_;
  std::uint64_t offset_ = 0;
};

using Point = std::variant<RealVec, RationalVec, SymbolicPoint>;

// ---------------------------------------------------------------------------
// Point helpers
// ---------------------------------------------------------------------------

inline bool is_exact(const Point& p) { return !std::holds_alternative<RealVec>(p); }

// Canonical key for exact representations; nullopt for floats. Cycle
// detection uses this, so float orbits never report cycles.
inline std::optional<std::string> exact_key(const Point& p) {
  if (const auto* rv = std::get_if<RationalVec>(&p)) {
    std::string k = "q:";
    for (const auto& q : rv->x) {
      k += q.get_str();
      k += ',';
    }
    return k;
  }
  if (const auto* sp = std::get_if<SymbolicPoint>(&p)) return sp->key();
  return std::nullopt;
}

// Representation-equality key for every point kind. Float coordinates are
// keyed bitwise (hex float), so merging identical atoms is sound while
// nothing is ever merged by closeness.
inline std::string merge_key(const Point& p) {
  if (const auto* rv = std::get_if<RealVec>(&p)) {
    std::string k = "f:";
    char buf[40];
    for (double v : rv->x) {
      std::snprintf(buf, sizeof(buf), "%a,", v);
      k += buf;
    }
    return k;
  }
  return *exact_key(p);
}

// Coordinate i as a double. For symbolic points this is the i-th symbol.
inline double coord(const Point& p, std::size_t i) {
  if (const auto* rv = std::get_if<RealVec>(&p)) {
    if (i >= rv->x.size()) throw DimensionMismatch("coordinate index");
    return rv->x[i];
  }
  if (const auto* qv = std::get_if<RationalVec>(&p)) {
    if (i >= qv->x.size()) throw DimensionMismatch("coordinate index");
    return to_double(qv->x[i]);
  }
  return static_cast<double>(std::get<SymbolicPoint>(p).symbol_at(i));
}

// Exact coordinate when the representation carries one.
inline std::optional<Rational> coord_exact(const Point& p, std::size_t i) {
  if (const auto* qv = std::get_if<RationalVec>(&p)) {
    if (i >= qv->x.size()) throw DimensionMismatch("coordinate index");
    return qv->x[i];
  }
  if (const auto* sp = std::get_if<SymbolicPoint>(&p))
    return Rational(sp->symbol_at(i));
  return std::nullopt;
}

inline std::size_t coord_count(const Point& p) {
  if (const auto* rv = std::get_if<RealVec>(&p)) return rv->x.size();
  if (const auto* qv = std::get_if<RationalVec>(&p)) return qv->x.size();
  return 0;  // symbolic points are infinite sequences
}

}  // namespace ergolab
