#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ergolab/common.hpp"
#include "ergolab/decomposition.hpp"
#include "ergolab/point.hpp"
#include "ergolab/summation.hpp"
#include "ergolab/systems.hpp"
#include "ergolab/tameness.hpp"

namespace ergolab::io {

using nlohmann::json;

// ---------------------------------------------------------------------------
// JSON emission with doubles at 17 significant digits (round-trip safe)
// ---------------------------------------------------------------------------

namespace detail {

inline void dump17(const json& j, std::string& out, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * depth), ' ');
  const std::string pad_in(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in + json(it.key()).dump() + ": ";
        dump17(it.value(), out, indent, depth + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& el : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        dump17(el, out, indent, depth + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case json::value_t::number_float:
      out += format_double17(j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

}  // namespace detail

inline std::string dump_json17(const json& j, int indent = 2) {
  std::string out;
  detail::dump17(j, out, indent, 0);
  out += '\n';
  return out;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParameter("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw InvalidParameter("bad JSON in " + path + ": " + e.what());
  }
  return j;
}

// ---------------------------------------------------------------------------
// Scalar parsing: "p/q" and integer strings are exact, decimals are floats
// ---------------------------------------------------------------------------

struct ScalarValue {
  double value = 0.0;
  std::optional<Rational> exact;
};

inline ScalarValue parse_scalar(const std::string& text) {
  ScalarValue v;
  if (auto q = parse_rational(text)) {
    v.exact = *q;
    v.value = to_double(*q);
    return v;
  }
  try {
    std::size_t used = 0;
    v.value = std::stod(text, &used);
    if (used != text.size()) throw InvalidParameter("bad numeric literal: " + text);
  } catch (const std::exception&) {
    throw InvalidParameter("bad numeric literal: " + text);
  }
  return v;
}

inline ScalarValue scalar_from_json(const json& j) {
  ScalarValue v;
  if (j.is_string()) return parse_scalar(j.get<std::string>());
  if (j.is_number_integer()) {
    v.exact = Rational(static_cast<long>(j.get<std::int64_t>()));
    v.value = to_double(*v.exact);
    return v;
  }
  if (j.is_number_float()) {
    v.value = j.get<double>();
    return v;
  }
  throw InvalidParameter("expected a number or rational string");
}

// ---------------------------------------------------------------------------
// Matrix files: {"rows": [[...], ...]}
// ---------------------------------------------------------------------------

inline IntMatrix load_int_matrix(const std::string& path) {
  json j = load_json_file(path);
  if (!j.contains("rows") || !j["rows"].is_array())
    throw InvalidParameter(path + ": expected {\"rows\": [[...], ...]}");
  IntMatrix A;
  for (const auto& row : j["rows"]) {
    std::vector<mpz_class> r;
    for (const auto& v : row) {
      if (v.is_number_integer()) {
        r.emplace_back(static_cast<long>(v.get<std::int64_t>()));
      } else if (v.is_string()) {
        mpz_class z;
        if (z.set_str(v.get<std::string>(), 10) != 0)
          throw InvalidParameter(path + ": bad integer entry " + v.get<std::string>());
        r.push_back(z);
      } else {
        throw InvalidParameter(path + ": integer matrix entries must be integers");
      }
    }
    A.push_back(std::move(r));
  }
  return A;
}

inline std::vector<std::vector<double>> load_real_matrix(const std::string& path) {
  json j = load_json_file(path);
  if (!j.contains("rows") || !j["rows"].is_array())
    throw InvalidParameter(path + ": expected {\"rows\": [[...], ...]}");
  std::vector<std::vector<double>> T;
  for (const auto& row : j["rows"]) {
    std::vector<double> r;
    for (const auto& v : row) r.push_back(scalar_from_json(v).value);
    T.push_back(std::move(r));
  }
  return T;
}

// long-only view of an integer matrix, for system constructors
inline std::vector<std::vector<long>> to_long_matrix(const IntMatrix& A) {
  std::vector<std::vector<long>> M;
  for (const auto& row : A) {
    std::vector<long> r;
    for (const auto& v : row) {
      if (!v.fits_slong_p()) throw InvalidParameter("matrix entry too large for the torus map");
      r.push_back(v.get_si());
    }
    M.push_back(std::move(r));
  }
  return M;
}

// ---------------------------------------------------------------------------
// Summation method files
// ---------------------------------------------------------------------------

// Custom matrix: {"rows": [[[k, s], ...], ...]} with s a float or "p/q".
inline SummationMethod load_custom_matrix(const std::string& path) {
  json j = load_json_file(path);
  if (!j.contains("rows") || !j["rows"].is_array())
    throw InvalidParameter(path + ": expected {\"rows\": [[[k, s], ...], ...]}");
  std::vector<CustomRow> rows;
  for (const auto& jrow : j["rows"]) {
    CustomRow row;
    bool all_exact = true;
    std::vector<Rational> exact;
    for (const auto& entry : jrow) {
      if (!entry.is_array() || entry.size() != 2)
        throw InvalidParameter(path + ": matrix entries are [k, s] pairs");
      row.indices.push_back(entry[0].get<std::int64_t>());
      ScalarValue s = scalar_from_json(entry[1]);
      row.weights.push_back(s.value);
      if (s.exact)
        exact.push_back(*s.exact);
      else
        all_exact = false;
    }
    if (all_exact && !row.indices.empty()) row.exact = std::move(exact);
    rows.push_back(std::move(row));
  }
  return custom_matrix(std::move(rows));
}

// Riesz weight prefix: {"p": [...]} with rational strings or floats. The
// method is defined for rows n < len(p).
inline SummationMethod load_riesz(const std::string& path) {
  json j = load_json_file(path);
  if (!j.contains("p") || !j["p"].is_array() || j["p"].empty())
    throw InvalidParameter(path + ": expected {\"p\": [...]}");
  auto values = std::make_shared<std::vector<ScalarValue>>();
  bool all_exact = true;
  for (const auto& v : j["p"]) {
    values->push_back(scalar_from_json(v));
    if (!values->back().exact) all_exact = false;
  }
  PSequence p;
  p.value = [values](std::int64_t k) {
    if (k < 0 || static_cast<std::size_t>(k) >= values->size())
      throw InvalidParameter("riesz weight file has no p_" + std::to_string(k));
    return (*values)[static_cast<std::size_t>(k)].value;
  };
  if (all_exact) {
    p.exact = [values](std::int64_t k) {
      if (k < 0 || static_cast<std::size_t>(k) >= values->size())
        throw InvalidParameter("riesz weight file has no p_" + std::to_string(k));
      return *(*values)[static_cast<std::size_t>(k)].exact;
    };
  }
  return riesz(std::move(p), "riesz-file");
}

inline std::function<std::int64_t(std::int64_t)> load_index_map(const std::string& path) {
  json j = load_json_file(path);
  const json* arr = nullptr;
  if (j.is_array())
    arr = &j;
  else if (j.contains("indices") && j["indices"].is_array())
    arr = &j["indices"];
  else
    throw InvalidParameter(path + ": expected {\"indices\": [...]} or a plain array");
  auto idx = std::make_shared<std::vector<std::int64_t>>();
  for (const auto& v : *arr) idx->push_back(v.get<std::int64_t>());
  return [idx](std::int64_t n) {
    if (n < 0 || static_cast<std::size_t>(n) >= idx->size())
      throw InvalidParameter("index map has no entry " + std::to_string(n));
    return (*idx)[static_cast<std::size_t>(n)];
  };
}

// ---------------------------------------------------------------------------
// Method spec strings:
//   cesaro | riesz:log | riesz:file=PATH | matrix:file=PATH
//   interleave(SPEC,SPEC) | subseq(SPEC, even|geometric:R|file=PATH)
// ---------------------------------------------------------------------------

namespace detail {

// splits on top-level commas (ignores commas inside parentheses)
inline std::vector<std::string> split_top_level(const std::string& s) {
  std::vector<std::string> parts;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

inline std::string strip(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

inline SummationMethod parse_method(const std::string& spec_in) {
  const std::string spec = detail::strip(spec_in);
  if (spec == "cesaro") return cesaro();
  if (spec == "riesz:log") return riesz_log();
  if (spec.rfind("riesz:file=", 0) == 0) return load_riesz(spec.substr(11));
  if (spec.rfind("matrix:file=", 0) == 0) return load_custom_matrix(spec.substr(12));

  auto call = [&](const std::string& head) -> std::optional<std::vector<std::string>> {
    if (spec.rfind(head + "(", 0) != 0 || spec.back() != ')') return std::nullopt;
    std::string inner = spec.substr(head.size() + 1, spec.size() - head.size() - 2);
    auto parts = detail::split_top_level(inner);
    for (auto& p : parts) p = detail::strip(p);
    return parts;
  };

  if (auto parts = call("interleave")) {
    if (parts->size() != 2) throw InvalidParameter("interleave takes two method specs");
    return interleave(parse_method((*parts)[0]), parse_method((*parts)[1]));
  }
  if (auto parts = call("subseq")) {
    if (parts->size() != 2) throw InvalidParameter("subseq takes a method spec and an index map");
    SummationMethod base = parse_method((*parts)[0]);
    const std::string& mapspec = (*parts)[1];
    if (mapspec == "even")
      return subsequence(std::move(base), [](std::int64_t n) { return 2 * n; }, "even");
    if (mapspec.rfind("geometric:", 0) == 0) {
      double r = parse_scalar(mapspec.substr(10)).value;
      if (!(r > 1.0)) throw InvalidParameter("geometric index map ratio must exceed 1");
      auto map = [r](std::int64_t n) {
        std::int64_t a = 1;
        double v = 1.0;
        for (std::int64_t i = 1; i <= n; ++i) {
          v *= r;
          a = std::max(a + 1, static_cast<std::int64_t>(std::ceil(v)));
        }
        return a;
      };
      return subsequence(std::move(base), map, mapspec);
    }
    if (mapspec.rfind("file=", 0) == 0)
      return subsequence(std::move(base), load_index_map(mapspec.substr(5)), "file");
    throw InvalidParameter("unknown index map spec: " + mapspec);
  }
  throw InvalidParameter("unknown method spec: " + spec);
}

// ---------------------------------------------------------------------------
// System spec strings:
//   rotation:alpha=V | torus:A=FILE,b=V,... | interval:square|logistic:r=V|tent|pwl=FILE
//   shift[:pre=W,per=W | :rule=blocks4] | projective:T=FILE
// ---------------------------------------------------------------------------

struct ParsedSystem {
  SystemSpec spec;
  std::optional<Point> default_point;  // shift specs may carry the start point
};

namespace detail {

// "k1=v1,k2=v2,extra" -> pairs; a comma token without '=' extends the
// previous value (so vector-valued b=1/2,0 parses whole).
inline std::vector<std::pair<std::string, std::string>> parse_kv(const std::string& s) {
  std::vector<std::pair<std::string, std::string>> kv;
  for (auto& tok : split_top_level(s)) {
    auto t = strip(tok);
    auto eq = t.find('=');
    if (eq == std::string::npos) {
      if (kv.empty()) throw InvalidParameter("expected key=value in: " + s);
      kv.back().second += "," + t;
    } else {
      kv.emplace_back(t.substr(0, eq), t.substr(eq + 1));
    }
  }
  return kv;
}

inline std::string find_kv(const std::vector<std::pair<std::string, std::string>>& kv,
                           const std::string& key) {
  for (const auto& [k, v] : kv)
    if (k == key) return v;
  throw InvalidParameter("missing " + key + "=...");
}

}  // namespace detail

inline ParsedSystem parse_system(const std::string& spec_in) {
  const std::string spec = detail::strip(spec_in);
  ParsedSystem out;

  if (spec.rfind("rotation:", 0) == 0) {
    auto kv = detail::parse_kv(spec.substr(9));
    std::string a = detail::find_kv(kv, "alpha");
    if (a == "golden") {
      out.spec = rotation((std::sqrt(5.0) - 1.0) / 2.0);
    } else {
      ScalarValue v = parse_scalar(a);
      out.spec = v.exact ? rotation(*v.exact) : rotation(v.value);
    }
    return out;
  }
  if (spec.rfind("torus:", 0) == 0) {
    auto kv = detail::parse_kv(spec.substr(6));
    IntMatrix A = load_int_matrix(detail::find_kv(kv, "A"));
    std::vector<Rational> b;
    std::string bs = detail::find_kv(kv, "b");
    for (auto& part : detail::split_top_level(bs)) {
      ScalarValue v = parse_scalar(detail::strip(part));
      b.push_back(v.exact ? *v.exact : rational_of_double(v.value));
    }
    out.spec = affine_torus(to_long_matrix(A), std::move(b));
    return out;
  }
  if (spec.rfind("interval:", 0) == 0) {
    std::string rest = spec.substr(9);
    if (rest == "square") {
      out.spec = interval_square();
    } else if (rest == "tent") {
      out.spec = interval_tent();
    } else if (rest.rfind("logistic:", 0) == 0) {
      auto kv = detail::parse_kv(rest.substr(9));
      ScalarValue v = parse_scalar(detail::find_kv(kv, "r"));
      out.spec = v.exact ? interval_logistic(*v.exact) : interval_logistic(v.value);
    } else if (rest.rfind("pwl=", 0) == 0) {
      json j = load_json_file(rest.substr(4));
      if (!j.contains("breakpoints") || !j["breakpoints"].is_array())
        throw InvalidParameter("piecewise-linear file needs {\"breakpoints\": [[x,y],...]}");
      std::vector<std::pair<Rational, Rational>> bp;
      for (const auto& e : j["breakpoints"]) {
        if (!e.is_array() || e.size() != 2)
          throw InvalidParameter("breakpoints are [x, y] pairs");
        ScalarValue x = scalar_from_json(e[0]), y = scalar_from_json(e[1]);
        bp.emplace_back(x.exact ? *x.exact : rational_of_double(x.value),
                        y.exact ? *y.exact : rational_of_double(y.value));
      }
      out.spec = interval_pwl(std::move(bp));
    } else {
      throw InvalidParameter("unknown interval map: " + rest);
    }
    return out;
  }
  if (spec == "shift" || spec.rfind("shift:", 0) == 0) {
    out.spec = bernoulli_shift();
    if (spec.size() > 5 && spec[5] == ':') {
      auto kv = detail::parse_kv(spec.substr(6));
      std::string pre, per, rule;
      for (const auto& [k, v] : kv) {
        if (k == "pre")
          pre = v;
        else if (k == "per")
          per = v;
        else if (k == "rule")
          rule = v;
        else
          throw InvalidParameter("unknown shift parameter: " + k);
      }
      if (!rule.empty()) {
        if (rule != "blocks4") throw InvalidParameter("unknown symbolic rule: " + rule);
        out.default_point = SymbolicPoint::blocks4();
      } else if (!per.empty()) {
        out.default_point = SymbolicPoint::eventually_periodic(pre, per);
      } else {
        throw InvalidParameter("shift spec needs per=... or rule=...");
      }
    }
    return out;
  }
  if (spec.rfind("projective:", 0) == 0) {
    auto kv = detail::parse_kv(spec.substr(11));
    out.spec = projective_action(load_real_matrix(detail::find_kv(kv, "T")));
    return out;
  }
  throw InvalidParameter("unknown system spec: " + spec);
}

// ---------------------------------------------------------------------------
// Points and grids
// ---------------------------------------------------------------------------

inline Point parse_point(const std::string& text_in, const SystemSpec& sys) {
  const std::string text = detail::strip(text_in);
  if (sys.space == "shift") {
    if (text.rfind("rule=", 0) == 0) {
      std::string rule = text.substr(5);
      std::uint64_t offset = 0;
      auto at = rule.find('@');
      if (at != std::string::npos) {
        offset = std::stoull(rule.substr(at + 1));
        rule = rule.substr(0, at);
      }
      if (rule != "blocks4") throw InvalidParameter("unknown symbolic rule: " + rule);
      return SymbolicPoint::blocks4(offset);
    }
    std::string pre, per;
    bool kv_form = text.find('=') != std::string::npos;
    if (kv_form) {
      for (const auto& [k, v] : detail::parse_kv(text)) {
        if (k == "pre")
          pre = v;
        else if (k == "per")
          per = v;
        else
          throw InvalidParameter("unknown point key: " + k);
      }
    } else {
      per = text;  // bare word = purely periodic sequence
    }
    return SymbolicPoint::eventually_periodic(pre, per);
  }

  std::vector<ScalarValue> coords;
  for (auto& part : detail::split_top_level(text)) coords.push_back(parse_scalar(detail::strip(part)));
  if (coords.size() != static_cast<std::size_t>(sys.dimension))
    throw DimensionMismatch("point needs " + std::to_string(sys.dimension) + " coordinates");

  bool all_exact = true;
  for (const auto& c : coords)
    if (!c.exact) all_exact = false;

  if (sys.space == "sphere") all_exact = false;  // sphere points are float-only

  if (all_exact) {
    RationalVec v;
    for (auto& c : coords) v.x.push_back(sys.space == "torus" ? fractional_part(*c.exact) : *c.exact);
    return v;
  }
  RealVec v;
  for (auto& c : coords) v.x.push_back(sys.space == "torus" ? fractional_part(c.value) : c.value);
  if (sys.space == "sphere") {
    double nrm = 0.0;
    for (double t : v.x) nrm += t * t;
    if (!(nrm > 0.0)) throw InvalidParameter("sphere point must be nonzero");
    nrm = std::sqrt(nrm);
    for (auto& t : v.x) t /= nrm;
  }
  return v;
}

// Grid specs: uniform:RES | exact:RES | cylinders:K (shift) | file=PATH
inline std::vector<Point> parse_grid(const std::string& spec_in, const SystemSpec& sys) {
  const std::string spec = detail::strip(spec_in);
  const bool endpoint = sys.space == "interval";
  if (spec.rfind("uniform:", 0) == 0) {
    if (sys.space == "shift") throw InvalidParameter("shift grids use cylinders:K or file=...");
    return uniform_grid(sys.dimension, std::stoll(spec.substr(8)), false, endpoint);
  }
  if (spec.rfind("exact:", 0) == 0) {
    if (sys.space == "shift" || sys.space == "sphere")
      throw InvalidParameter("exact grids need rational coordinates");
    return uniform_grid(sys.dimension, std::stoll(spec.substr(6)), true, endpoint);
  }
  if (spec.rfind("cylinders:", 0) == 0) {
    if (sys.space != "shift") throw InvalidParameter("cylinder grids are for the shift");
    int k = std::stoi(spec.substr(10));
    if (k < 1 || k > 20) throw InvalidParameter("cylinder word length out of range");
    std::vector<Point> pts;
    for (std::uint64_t w = 0; w < (1ull << k); ++w) {
      std::string word;
      for (int i = 0; i < k; ++i) word += ((w >> i) & 1) ? '1' : '0';
      pts.push_back(SymbolicPoint::eventually_periodic("", word));
    }
    return pts;
  }
  if (spec.rfind("file=", 0) == 0) {
    json j = load_json_file(spec.substr(5));
    if (!j.contains("points") || !j["points"].is_array())
      throw InvalidParameter("grid file needs {\"points\": [...]}");
    std::vector<Point> pts;
    for (const auto& e : j["points"]) {
      if (e.is_string()) {
        pts.push_back(parse_point(e.get<std::string>(), sys));
      } else if (e.is_array()) {
        std::string joined;
        for (const auto& c : e) {
          if (!joined.empty()) joined += ',';
          joined += c.is_string() ? c.get<std::string>() : format_double17(c.get<double>());
        }
        pts.push_back(parse_point(joined, sys));
      } else {
        throw InvalidParameter("grid points are arrays or spec strings");
      }
    }
    return pts;
  }
  throw InvalidParameter("unknown grid spec: " + spec);
}

// Checkpoints: geometric:R (default R=1.5) or list:n1,n2,...
inline std::vector<std::int64_t> parse_checkpoints(const std::string& spec_in, std::int64_t max_n) {
  const std::string spec = detail::strip(spec_in);
  if (spec.rfind("geometric", 0) == 0) {
    double ratio = 1.5;
    if (spec.size() > 9 && spec[9] == ':') ratio = parse_scalar(spec.substr(10)).value;
    return geometric_checkpoints(max_n, ratio);
  }
  if (spec.rfind("list:", 0) == 0) {
    std::vector<std::int64_t> cps;
    for (auto& p : detail::split_top_level(spec.substr(5))) cps.push_back(std::stoll(detail::strip(p)));
    return cps;
  }
  throw InvalidParameter("unknown checkpoint spec: " + spec);
}

// Shift lists: "0,1,2" or "range:0..5"
inline std::vector<std::int64_t> parse_shifts(const std::string& spec_in) {
  const std::string spec = detail::strip(spec_in);
  std::vector<std::int64_t> out;
  if (spec.rfind("range:", 0) == 0) {
    auto body = spec.substr(6);
    auto dots = body.find("..");
    if (dots == std::string::npos) throw InvalidParameter("range spec is range:a..b");
    std::int64_t a = std::stoll(body.substr(0, dots));
    std::int64_t b = std::stoll(body.substr(dots + 2));
    if (b < a) throw InvalidParameter("empty shift range");
    for (std::int64_t v = a; v <= b; ++v) out.push_back(v);
    return out;
  }
  for (auto& p : detail::split_top_level(spec)) out.push_back(std::stoll(detail::strip(p)));
  return out;
}

// ---------------------------------------------------------------------------
// Serialization helpers
// ---------------------------------------------------------------------------

inline json point_to_json(const Point& p) {
  if (const auto* rv = std::get_if<RealVec>(&p)) {
    json a = json::array();
    for (double v : rv->x) a.push_back(v);
    return a;
  }
  if (const auto* qv = std::get_if<RationalVec>(&p)) {
    json a = json::array();
    for (const auto& v : qv->x) a.push_back(v.get_str());
    return a;
  }
  const auto& sp = std::get<SymbolicPoint>(p);
  if (sp.kind() == SymbolicPoint::Kind::Blocks4)
    return json{{"rule", "blocks4"}, {"offset", sp.offset()}};
  return json{{"pre", sp.preperiod()}, {"per", sp.period()}};
}

inline json pairing_to_json(const PairingValue& v) {
  json j;
  j["value"] = v.value;
  if (v.exact) j["exact"] = v.exact->get_str();
  return j;
}

}  // namespace ergolab::io
