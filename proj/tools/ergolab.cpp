// ergolab — command-line front end: ergodic averages, quasi-ergodic
// decomposition, tameness certificates, and the scenario suite.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ergolab/averaging.hpp"
#include "ergolab/common.hpp"
#include "ergolab/decomposition.hpp"
#include "ergolab/io.hpp"
#include "ergolab/scenarios.hpp"
#include "ergolab/summation.hpp"
#include "ergolab/systems.hpp"
#include "ergolab/tameness.hpp"

namespace {

using ergolab::io::json;

void write_output(const std::string& out_path, const json& j) {
  std::string text = ergolab::io::dump_json17(j);
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw ergolab::InvalidParameter("cannot write " + out_path);
  f << text;
}

// Points whose float representation would silently drift under an expanding
// map are rejected unless --allow-float was given.
void gate_float_points(const ergolab::SystemSpec& s, const std::vector<ergolab::Point>& pts,
                       bool allow_float) {
  if (!s.prefers_exact || allow_float) return;
  for (const auto& p : pts)
    if (std::holds_alternative<ergolab::RealVec>(p))
      throw ergolab::InvalidParameter(
          "float iteration of " + s.name +
          " drifts; use rational coordinates or pass --allow-float");
}

json verdict_to_json(const ergolab::SystemSpec& s, const ergolab::ConvergenceVerdict& v) {
  json j;
  j["status"] = ergolab::to_string(v.status);
  j["cauchy_gap"] = v.cauchy_gap;
  j["witness_observable"] = v.witness_observable;
  j["witness_checkpoints"] = json::array({v.witness_low, v.witness_high});
  if (v.limit) {
    json pair;
    for (const auto& x : s.dictionary) pair[x.name] = ergolab::pairing(*v.limit, x).value;
    j["limit_pairings"] = pair;
    j["limit_support_size"] = v.limit->atoms.size();
  }
  return j;
}

// --config FILE: JSON object of long-flag -> value. Command-line flags win;
// unknown keys are usage errors.
std::vector<std::string> apply_config(const std::vector<std::string>& args,
                                      const std::set<std::string>& known_flags) {
  std::vector<std::string> out = args;
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size())
      config_path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      config_path = args[i].substr(9);
  }
  if (config_path.empty()) return out;

  json cfg = ergolab::io::load_json_file(config_path);
  if (!cfg.is_object()) throw CLI::ValidationError("--config", "config file must be a JSON object");
  for (auto it = cfg.begin(); it != cfg.end(); ++it) {
    const std::string& key = it.key();
    if (!known_flags.count(key))
      throw CLI::ValidationError("--config", "unknown key in config file: " + key);
    bool present = false;
    for (const auto& a : out)
      if (a == "--" + key || a.rfind("--" + key + "=", 0) == 0) present = true;
    if (present) continue;
    const json& v = it.value();
    if (v.is_boolean()) {
      if (v.get<bool>()) out.push_back("--" + key);
    } else if (v.is_string()) {
      out.push_back("--" + key + "=" + v.get<std::string>());
    } else {
      out.push_back("--" + key + "=" + v.dump());
    }
  }
  return out;
}

struct Flags {
  std::string system, method, point, grid, observable, shifts, out, csv, matrix, shift_vec;
  std::string checkpoints = "geometric:1.5";
  std::string filter;
  std::string config;
  std::int64_t n = 1000;
  std::int64_t max_n = 1000;
  double eps = 0.05;
  double tol = 0.01;
  double sep = 0.4;
  double threshold = 0.02;
  std::uint64_t seed = 12345;
  std::uint64_t max_denominator_bits = 512;
  bool all = false;
  bool allow_float = false;
  bool allow_large = false;
};

int run_average(const Flags& f) {
  auto parsed = ergolab::io::parse_system(f.system);
  const ergolab::SystemSpec& s = parsed.spec;
  ergolab::SummationMethod m = ergolab::io::parse_method(f.method);
  ergolab::Point w = f.point.empty()
                         ? (parsed.default_point ? *parsed.default_point
                                                 : throw ergolab::InvalidParameter("--point required"))
                         : ergolab::io::parse_point(f.point, s);
  gate_float_points(s, {w}, f.allow_float);
  ergolab::IterateOptions opts;
  opts.max_denominator_bits = f.max_denominator_bits;

  auto cps = ergolab::io::parse_checkpoints(f.checkpoints, f.n);
  ergolab::AverageTrace t = ergolab::trace(s, m, w, cps, opts);

  json j;
  j["system"] = f.system;
  j["method"] = m.name;
  j["point"] = ergolab::io::point_to_json(w);
  j["n"] = f.n;
  j["checkpoints"] = t.checkpoints;
  json values, residuals;
  for (std::size_t k = 0; k < t.observables.size(); ++k) {
    if (!f.observable.empty() && t.observables[k] != f.observable) continue;
    values[t.observables[k]] = t.values[k];
    residuals[t.observables[k]] = t.residuals[k];
  }
  if (!f.observable.empty() && values.empty())
    throw ergolab::InvalidParameter("unknown observable: " + f.observable);
  j["values"] = values;
  j["residuals"] = residuals;
  if (t.checkpoints.size() >= 4)
    j["verdict"] = verdict_to_json(s, ergolab::detect_convergence(s, m, t, f.tol, f.sep, opts));

  // exact pairings at the final checkpoint, when the ingredients allow them
  json exact;
  for (const auto& x : s.dictionary) {
    if (!f.observable.empty() && x.name != f.observable) continue;
    auto pv = ergolab::weighted_average(s, m, w, t.checkpoints.back(), x, opts);
    if (pv.exact) exact[x.name] = pv.exact->get_str();
  }
  if (!exact.empty()) j["exact_values_at_n"] = exact;
  write_output(f.out, j);
  return 0;
}

int run_decompose(const Flags& f) {
  auto parsed = ergolab::io::parse_system(f.system);
  const ergolab::SystemSpec& s = parsed.spec;
  ergolab::SummationMethod m = ergolab::io::parse_method(f.method);
  std::vector<ergolab::Point> grid = ergolab::io::parse_grid(f.grid, s);
  gate_float_points(s, grid, f.allow_float);
  ergolab::IterateOptions opts;
  opts.max_denominator_bits = f.max_denominator_bits;

  ergolab::DecompositionReport rep = ergolab::psi_map(s, m, grid, f.n, f.tol, f.sep, opts);
  ergolab::MeasureDistance dist(s.dictionary);
  ergolab::cluster(rep, dist, f.eps);
  for (const auto& mu : rep.representatives)
    rep.representative_residuals.push_back(ergolab::ergodicity_residual(s, mu));

  json j;
  j["system"] = f.system;
  j["method"] = m.name;
  j["n"] = f.n;
  j["eps"] = f.eps;
  j["grid_size"] = rep.grid.size();
  json comps = json::array();
  for (std::size_t c = 0; c < rep.components.size(); ++c) {
    json jc;
    jc["members"] = rep.components[c];
    json member_points = json::array();
    for (auto gi : rep.components[c]) member_points.push_back(ergolab::io::point_to_json(rep.grid[gi]));
    jc["member_points"] = member_points;
    json pairings;
    for (const auto& x : s.dictionary) {
      auto pv = ergolab::pairing(rep.representatives[c], x);
      pairings[x.name] = pv.value;
    }
    jc["representative_pairings"] = pairings;
    jc["ergodicity_residual"] = rep.representative_residuals[c];
    // components are certified ergodic only for exact cycles and fixed
    // points; everything else stays an empirical claim
    bool exact_rep = rep.representatives[c].exact();
    jc["kind"] = exact_rep ? "ergodic (exact cycle measure)" : "quasi-ergodic (empirical)";
    comps.push_back(jc);
  }
  j["components"] = comps;
  j["undecided"] = rep.undecided;
  json sepj;
  ergolab::SeparationReport sr = ergolab::separation_check(rep.representatives.empty()
                                                               ? std::vector<ergolab::EmpiricalMeasure>{}
                                                               : rep.representatives,
                                                           s.dictionary);
  sepj["pass"] = sr.pass;
  json pairs = json::array();
  for (const auto& pr : sr.pairs) {
    json jp;
    jp["first"] = pr.first;
    jp["second"] = pr.second;
    if (pr.observable)
      jp["observable"] = s.dictionary[*pr.observable].name;
    else
      jp["observable"] = nullptr;
    jp["gap"] = pr.gap;
    pairs.push_back(jp);
  }
  sepj["pairs"] = pairs;
  j["separation"] = sepj;
  j["diagnostics"] = json{{"max_intra_component_distance", rep.max_intra_component_distance},
                          {"min_representative_distance", rep.min_representative_distance}};
  write_output(f.out, j);
  return 0;
}

int run_tame(const Flags& f) {
  ergolab::IntMatrix A = ergolab::io::load_int_matrix(f.matrix);
  if (!A.empty() && A.size() > 8 && !f.allow_large)
    throw ergolab::InvalidParameter(
        "dimension " + std::to_string(A.size()) +
        " makes the exponent bound d + L(d) very large; pass --allow-large to proceed");
  std::optional<std::vector<ergolab::Rational>> shift;
  if (!f.shift_vec.empty()) {
    std::vector<ergolab::Rational> b;
    for (const auto& part : ergolab::io::detail::split_top_level(f.shift_vec)) {
      auto sv = ergolab::io::parse_scalar(ergolab::io::detail::strip(part));
      b.push_back(sv.exact ? *sv.exact : ergolab::rational_of_double(sv.value));
    }
    shift = std::move(b);
  }
  ergolab::TamenessCertificate cert = ergolab::decide_tame(A, shift);

  json j;
  j["verdict"] = cert.tame ? "tame" : "untame";
  if (cert.witness)
    j["witness"] = json::array({cert.witness->first, cert.witness->second});
  else
    j["witness"] = nullptr;
  j["d"] = cert.dimension;
  j["L"] = cert.totient_lcm;
  if (cert.shift_ignored)
    j["note"] = "shift vector recorded but unused: the verdict depends only on the matrix";
  write_output(f.out, j);
  return 0;
}

int run_flatness(const Flags& f) {
  auto parsed = ergolab::io::parse_system(f.system);
  const ergolab::SystemSpec& s = parsed.spec;
  const ergolab::Observable& x = s.observable(f.observable);
  std::vector<std::int64_t> shifts = ergolab::io::parse_shifts(f.shifts);
  std::vector<ergolab::Point> grid = ergolab::io::parse_grid(f.grid, s);
  gate_float_points(s, grid, f.allow_float);
  ergolab::IterateOptions opts;
  opts.max_denominator_bits = f.max_denominator_bits;

  ergolab::FlatnessResult fr = ergolab::flatness_lp(s, x, shifts, grid, opts);
  json j;
  j["system"] = f.system;
  j["observable"] = fr.observable;
  j["shifts"] = fr.shifts;
  j["grid_size"] = fr.grid_size;
  j["value"] = fr.value;
  j["coefficients"] = fr.coefficients;
  j["interpretation"] =
      "grid maximum is a lower bound for the sup norm: a value near zero is evidence of "
      "l1-flatness for this observable and shift set; a large value on a grid that realizes "
      "all sign patterns is a rigorous obstruction for them";
  write_output(f.out, j);
  return 0;
}

int run_validate_method(const Flags& f) {
  ergolab::SummationMethod m = ergolab::io::parse_method(f.method);
  ergolab::MethodValidationReport rep = ergolab::validate_method(m, f.max_n, f.threshold);
  json j;
  j["method"] = rep.method;
  j["max_n"] = rep.max_n;
  j["threshold"] = rep.threshold;
  j["row_sum_defect"] = rep.row_sum_defect;
  j["v_final"] = rep.v_final;
  if (rep.v_final_exact)
    j["v_final_exact"] = rep.v_final_exact->get_str();
  else
    j["v_final_exact"] = nullptr;
  j["pass"] = rep.pass;
  j["variation"] = rep.variation_seq;
  write_output(f.out, j);
  return 0;
}

int run_scenarios_cmd(const Flags& f) {
  std::vector<std::string> ids;
  if (f.all) {
    for (const auto& [id, summary] : ergolab::scenarios::scenario_table()) ids.push_back(id);
  } else if (!f.filter.empty()) {
    for (const auto& part : ergolab::io::detail::split_top_level(f.filter)) {
      std::string id = ergolab::io::detail::strip(part);
      bool known = false;
      for (const auto& [sid, summary] : ergolab::scenarios::scenario_table())
        if (sid == id) known = true;
      if (!known) throw CLI::ValidationError("--filter", "unknown scenario id: " + id);
      ids.push_back(id);
    }
  } else {
    throw CLI::ValidationError("scenarios", "pass --all or --filter <ids>");
  }

  std::vector<ergolab::scenarios::ScenarioResult> results;
  bool all_pass = true;
  for (const auto& id : ids) {
    auto r = ergolab::scenarios::run_scenario(id, f.seed);
    all_pass = all_pass && r.pass;
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.id << "  (" << ergolab::format_double17(r.wall_ms)
              << " ms)\n";
    for (const auto& c : r.checks)
      if (!c.pass) std::cout << "       failed: " << c.label << " — " << c.detail << "\n";
    results.push_back(std::move(r));
  }

  json j = json::array();
  for (const auto& r : results) {
    json jr;
    jr["id"] = r.id;
    jr["summary"] = r.summary;
    jr["pass"] = r.pass;
    jr["wall_ms"] = r.wall_ms;
    json checks = json::array();
    for (const auto& c : r.checks) {
      checks.push_back(json{{"label", c.label}, {"pass", c.pass}, {"detail", c.detail}, {"source", c.source}});
    }
    jr["checks"] = checks;
    j.push_back(jr);
  }
  if (!f.out.empty()) write_output(f.out, j);
  if (!f.csv.empty()) {
    std::ofstream csv(f.csv, std::ios::binary);
    if (!csv) throw ergolab::InvalidParameter("cannot write " + f.csv);
    csv << "id,pass,wall_ms,checks,failed\n";
    for (const auto& r : results) {
      std::size_t failed = 0;
      for (const auto& c : r.checks)
        if (!c.pass) ++failed;
      csv << r.id << ',' << (r.pass ? "true" : "false") << ',' << ergolab::format_double17(r.wall_ms)
          << ',' << r.checks.size() << ',' << failed << "\n";
    }
  }
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ergolab: weighted ergodic averages, quasi-ergodic decomposition, and tameness probes"};
  app.require_subcommand(1);

  Flags f;
  std::set<std::string> known;
  auto reg = [&known](CLI::Option* opt) {
    std::string n = opt->get_name(false, true);
    if (n.rfind("--", 0) == 0) known.insert(n.substr(2));
    return opt;
  };

  auto add_common = [&](CLI::App* sub) {
    reg(sub->add_option("--config", f.config, "JSON file mirroring the flags of this subcommand"));
    reg(sub->add_option("--out", f.out, "output JSON path (stdout when omitted)"));
    reg(sub->add_option("--max-denominator-bits", f.max_denominator_bits,
                        "rational orbit overflow guard"));
    reg(sub->add_flag("--allow-float", f.allow_float,
                      "permit float points on maps whose float orbits drift"));
  };

  CLI::App* avg = app.add_subcommand("average", "weighted ergodic averages along one orbit");
  reg(avg->add_option("--system", f.system, "system spec")->required());
  reg(avg->add_option("--method", f.method, "summation method spec")->required());
  reg(avg->add_option("--point", f.point, "initial point"));
  reg(avg->add_option("--n", f.n, "largest checkpoint")->required());
  reg(avg->add_option("--checkpoints", f.checkpoints, "geometric:<r> or list:<n1,n2,...>"));
  reg(avg->add_option("--observable", f.observable, "restrict output to one observable"));
  reg(avg->add_option("--tol", f.tol, "convergence tolerance"));
  reg(avg->add_option("--sep", f.sep, "oscillation separation threshold"));
  add_common(avg);

  CLI::App* dec = app.add_subcommand("decompose", "quasi-ergodic components over a grid");
  reg(dec->add_option("--system", f.system, "system spec")->required());
  reg(dec->add_option("--method", f.method, "summation method spec")->required());
  reg(dec->add_option("--grid", f.grid, "uniform:<res> | exact:<res> | cylinders:<k> | file=<path>")
          ->required());
  reg(dec->add_option("--n", f.n, "averaging horizon")->required());
  reg(dec->add_option("--eps", f.eps, "clustering threshold")->required());
  reg(dec->add_option("--tol", f.tol, "convergence tolerance"));
  reg(dec->add_option("--sep", f.sep, "oscillation separation threshold"));
  add_common(dec);

  CLI::App* tame = app.add_subcommand("tame", "exact tameness certificate for an integer matrix");
  reg(tame->add_option("--matrix", f.matrix, "matrix JSON file")->required());
  reg(tame->add_option("--shift", f.shift_vec, "torus shift vector (recorded, not used)"));
  reg(tame->add_flag("--allow-large", f.allow_large, "permit dimension > 8"));
  add_common(tame);

  CLI::App* flat = app.add_subcommand("flatness", "l1-flatness linear program");
  reg(flat->add_option("--system", f.system, "system spec")->required());
  reg(flat->add_option("--observable", f.observable, "dictionary observable name")->required());
  reg(flat->add_option("--shifts", f.shifts, "comma list or range:a..b")->required());
  reg(flat->add_option("--grid", f.grid, "grid spec")->required());
  add_common(flat);

  CLI::App* val = app.add_subcommand("validate-method", "summation matrix condition report");
  reg(val->add_option("--method", f.method, "summation method spec")->required());
  reg(val->add_option("--max-n", f.max_n, "largest row to check")->required());
  reg(val->add_option("--threshold", f.threshold, "variation pass threshold"));
  add_common(val);

  CLI::App* sc = app.add_subcommand("scenarios", "built-in verification scenarios");
  reg(sc->add_flag("--all", f.all, "run every scenario"));
  reg(sc->add_option("--filter", f.filter, "comma-separated scenario ids"));
  reg(sc->add_option("--seed", f.seed, "seed for randomized property checks"));
  reg(sc->add_option("--csv", f.csv, "write the summary table as CSV"));
  add_common(sc);

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = apply_config(args, known);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ergolab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  if (args.empty()) args = {"--help"};
  try {
    // CLI11's vector overload consumes the argument list from the back
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(avg)) return run_average(f);
    if (app.got_subcommand(dec)) return run_decompose(f);
    if (app.got_subcommand(tame)) return run_tame(f);
    if (app.got_subcommand(flat)) return run_flatness(f);
    if (app.got_subcommand(val)) return run_validate_method(f);
    if (app.got_subcommand(sc)) return run_scenarios_cmd(f);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ergolab::Error& e) {
    std::cerr << "error [" << e.name() << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
