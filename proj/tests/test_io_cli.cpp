#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ergolab/io.hpp"

using namespace ergolab;
namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "ergolab_io_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path write_file(const std::string& name, const std::string& content) {
  fs::path p = work_dir() / name;
  std::ofstream f(p, std::ios::binary);
  f << content;
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct CliRun {
  int exit_code;
  std::string out;
  std::string err;
};

CliRun run_cli(const std::string& args) {
  fs::path so = work_dir() / "cli_stdout.txt";
  fs::path se = work_dir() / "cli_stderr.txt";
  std::string cmd = std::string(ERGOLAB_CLI_PATH) + " " + args + " > " + so.string() + " 2> " +
                    se.string();
  int status = std::system(cmd.c_str());
  int code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
  return {code, read_file(so), read_file(se)};
}

}  // namespace

TEST_CASE("scalar parsing") {
  auto q = io::parse_scalar("3/4");
  REQUIRE(q.exact);
  CHECK(*q.exact == make_rational(3, 4));
  CHECK(io::parse_scalar("-2").exact.value() == Rational(-2));
  CHECK_FALSE(io::parse_scalar("0.25").exact);
  CHECK(io::parse_scalar("0.25").value == 0.25);
  CHECK_THROWS_AS(io::parse_scalar("abc"), InvalidParameter);
  CHECK_THROWS_AS(io::parse_scalar("1/0"), InvalidParameter);
}

TEST_CASE("json emission uses 17 significant digits") {
  io::json j;
  j["third"] = 1.0 / 3.0;
  j["whole"] = 2.0;
  j["int"] = 7;
  j["list"] = io::json::array({0.1, 0.2});
  std::string text = io::dump_json17(j);
  CHECK(text.find("0.33333333333333331") != std::string::npos);
  CHECK(text.find("0.10000000000000001") != std::string::npos);
  // round trip
  io::json back = io::json::parse(text);
  CHECK(back["third"].get<double>() == 1.0 / 3.0);
}

TEST_CASE("method spec parsing") {
  CHECK(io::parse_method("cesaro").kind == "cesaro");
  CHECK(io::parse_method("riesz:log").kind == "riesz");

  auto mix = io::parse_method("interleave(cesaro,riesz:log)");
  CHECK(mix.kind == "interleaved");
  CHECK(mix.row(3).indices.size() == 3);  // cesaro row 2

  auto sub = io::parse_method("subseq(cesaro,even)");
  CHECK(sub.row(2).indices.size() == 5);  // cesaro row 4

  auto nested = io::parse_method("interleave(subseq(cesaro,even),cesaro)");
  CHECK(nested.row(3).indices.size() == 5);  // subseq row 2 = cesaro row 4

  auto geo = io::parse_method("subseq(cesaro,geometric:2)");
  CHECK(geo.row(0).n == 0);
  CHECK(geo.row(3).indices.size() == 9);  // indices 1,2,4,8 -> cesaro row 8

  CHECK_THROWS_AS(io::parse_method("bogus"), InvalidParameter);
  CHECK_THROWS_AS(io::parse_method("subseq(cesaro,geometric:0.5)"), InvalidParameter);
  CHECK_THROWS_AS(io::parse_method("interleave(cesaro)"), InvalidParameter);
}

TEST_CASE("method files") {
  SECTION("custom matrix file") {
    auto p = write_file("matrix.json", R"({"rows": [[[0, "1/2"], [1, "1/2"]], [[0, 0.9]]]})");
    auto m = io::load_custom_matrix(p.string());
    auto r0 = m.row(0);
    CHECK(r0.exact());
    CHECK((*r0.exact_weights())[0] == make_rational(1, 2));
    auto r1 = m.row(1);
    CHECK_FALSE(r1.exact());
    CHECK(r1.weights[0] == 0.9);
  }
  SECTION("riesz weight file") {
    auto p = write_file("riesz.json", R"({"p": ["1", "1/2", "1/3", "1/4"]})");
    auto m = io::load_riesz(p.string());
    auto row = m.row(2);
    REQUIRE(row.exact());
    CHECK((*row.exact_weights())[0] == make_rational(6, 11));
    CHECK_THROWS_AS(m.row(10), InvalidParameter);
  }
  SECTION("index map file") {
    auto p = write_file("idx.json", R"({"indices": [0, 2, 5, 9]})");
    auto m = subsequence(cesaro(), io::load_index_map(p.string()), "file");
    CHECK(m.row(2).indices.size() == 6);  // cesaro row 5
  }
  SECTION("malformed files") {
    auto p = write_file("bad.json", "{not json");
    CHECK_THROWS_AS(io::load_custom_matrix(p.string()), InvalidParameter);
    CHECK_THROWS_AS(io::load_json_file("/nonexistent/file.json"), InvalidParameter);
  }
}

TEST_CASE("system spec parsing") {
  SECTION("rotation variants") {
    auto golden = io::parse_system("rotation:alpha=golden");
    CHECK(golden.spec.space == "torus");
    auto exact = io::parse_system("rotation:alpha=1/3");
    auto orbit = iterate(exact.spec, RationalVec{{Rational(0)}}, 5);
    REQUIRE(orbit.cycle);
    CHECK(orbit.cycle->period == 3);
  }
  SECTION("interval variants") {
    CHECK(io::parse_system("interval:square").spec.name == "interval-square");
    CHECK(io::parse_system("interval:tent").spec.name == "interval-tent");
    CHECK(io::parse_system("interval:logistic:r=3.5").spec.name == "interval-logistic");
    CHECK_THROWS_AS(io::parse_system("interval:cubic"), InvalidParameter);
  }
  SECTION("torus from files") {
    auto mp = write_file("shear.json", R"({"rows": [[1, 1], [0, 1]]})");
    auto sys = io::parse_system("torus:A=" + mp.string() + ",b=0,1/2");
    CHECK(sys.spec.dimension == 2);
    auto img = sys.spec.map(RationalVec{{Rational(0), Rational(0)}});
    CHECK(std::get<RationalVec>(img).x[1] == make_rational(1, 2));
  }
  SECTION("shift with a default point") {
    auto sys = io::parse_system("shift:pre=1,per=0");
    REQUIRE(sys.default_point);
    CHECK(std::get<SymbolicPoint>(*sys.default_point).preperiod() == "1");
    auto rule = io::parse_system("shift:rule=blocks4");
    REQUIRE(rule.default_point);
    CHECK(std::get<SymbolicPoint>(*rule.default_point).kind() == SymbolicPoint::Kind::Blocks4);
    CHECK_FALSE(io::parse_system("shift").default_point);
  }
  SECTION("projective from file") {
    auto mp = write_file("T.json", R"({"rows": [[2, 0], [0, 1]]})");
    auto sys = io::parse_system("projective:T=" + mp.string());
    CHECK(sys.spec.space == "sphere");
  }
  CHECK_THROWS_AS(io::parse_system("unknown:x=1"), InvalidParameter);
}

TEST_CASE("point and grid parsing") {
  auto interval = io::parse_system("interval:square").spec;
  auto torus2 = [] {
    auto mp = write_file("eye2.json", R"({"rows": [[1, 0], [0, 1]]})");
    return io::parse_system("torus:A=" + mp.string() + ",b=0,0").spec;
  }();
  auto shift = io::parse_system("shift").spec;

  SECTION("rationals stay exact, decimals go float") {
    Point a = io::parse_point("1/7", interval);
    CHECK(std::holds_alternative<RationalVec>(a));
    Point b = io::parse_point("0.3", interval);
    CHECK(std::holds_alternative<RealVec>(b));
    Point c = io::parse_point("1/3,0.5", torus2);  // mixed -> float
    CHECK(std::holds_alternative<RealVec>(c));
    CHECK_THROWS_AS(io::parse_point("0.1,0.2", interval), DimensionMismatch);
  }
  SECTION("torus coordinates reduce mod 1") {
    Point p = io::parse_point("5/4,-1/4", torus2);
    CHECK(std::get<RationalVec>(p).x[0] == make_rational(1, 4));
    CHECK(std::get<RationalVec>(p).x[1] == make_rational(3, 4));
  }
  SECTION("symbolic points") {
    Point w = io::parse_point("pre=1,per=01", shift);
    CHECK(std::get<SymbolicPoint>(w).preperiod() == "1");
    Point bare = io::parse_point("101", shift);
    CHECK(std::get<SymbolicPoint>(bare).period() == "101");
    Point rule = io::parse_point("rule=blocks4@3", shift);
    CHECK(std::get<SymbolicPoint>(rule).offset() == 3);
  }
  SECTION("grids") {
    CHECK(io::parse_grid("uniform:10", interval).size() == 11);
    CHECK(io::parse_grid("uniform:10", torus2).size() == 100);
    CHECK(io::parse_grid("exact:4", interval).size() == 5);
    CHECK(io::parse_grid("cylinders:3", shift).size() == 8);
    CHECK_THROWS_AS(io::parse_grid("cylinders:3", interval), InvalidParameter);
    auto gp = write_file("grid.json", R"({"points": [["1/2"], [0.25], "3/4"]})");
    auto pts = io::parse_grid("file=" + gp.string(), interval);
    REQUIRE(pts.size() == 3);
    CHECK(std::holds_alternative<RationalVec>(pts[0]));
    CHECK(std::holds_alternative<RealVec>(pts[1]));
  }
  SECTION("checkpoints and shifts") {
    auto cps = io::parse_checkpoints("geometric:2", 100);
    CHECK(cps.back() == 100);
    auto listed = io::parse_checkpoints("list:1,5,10", 0);
    CHECK(listed == std::vector<std::int64_t>{1, 5, 10});
    auto rng = io::parse_shifts("range:0..3");
    CHECK(rng == std::vector<std::int64_t>{0, 1, 2, 3});
    CHECK(io::parse_shifts("0,2,4") == std::vector<std::int64_t>{0, 2, 4});
    CHECK_THROWS_AS(io::parse_checkpoints("weird", 10), InvalidParameter);
  }
}

TEST_CASE("cli end to end") {
  SECTION("tameness verdicts and exit codes") {
    auto shear = write_file("cli_shear.json", R"({"rows": [[1, 1], [0, 1]]})");
    auto out = (work_dir() / "tame.json").string();
    auto r = run_cli("tame --matrix " + shear.string() + " --out " + out);
    REQUIRE(r.exit_code == 0);
    io::json j = io::json::parse(read_file(out));
    CHECK(j["verdict"] == "untame");
    CHECK(j["witness"].is_null());
    CHECK(j["d"] == 2);
    CHECK(j["L"] == 12);
  }
  SECTION("validate-method reports the closed-form variation") {
    auto out = (work_dir() / "vm.json").string();
    auto r = run_cli("validate-method --method cesaro --max-n 100 --out " + out);
    REQUIRE(r.exit_code == 0);
    io::json j = io::json::parse(read_file(out));
    CHECK(j["v_final"].get<double>() == Catch::Approx(1.0 / 101.0).margin(1e-15));
    CHECK(j["v_final_exact"] == "1/101");
    CHECK(j["pass"] == true);
    CHECK(j["variation"].size() == 101);
  }
  SECTION("average writes values, residuals, and a verdict") {
    auto out = (work_dir() / "avg.json").string();
    auto r = run_cli(
        "average --system rotation:alpha=1/4 --method cesaro --point 0 --n 100 --out " + out);
    REQUIRE(r.exit_code == 0);
    io::json j = io::json::parse(read_file(out));
    CHECK(j.contains("values"));
    CHECK(j.contains("residuals"));
    CHECK(j.contains("verdict"));
    CHECK(j["exact_values_at_n"].contains("one"));
  }
  SECTION("usage errors exit with 2") {
    CHECK(run_cli("average --system interval:square").exit_code == 2);  // missing required
    CHECK(run_cli("tame --matrix a.json --bogus-flag").exit_code == 2);
    CHECK(run_cli("scenarios --filter no-such-scenario").exit_code == 2);
    CHECK(run_cli("scenarios").exit_code == 2);
  }
  SECTION("domain errors exit with 1") {
    auto bad = write_file("cli_nonsquare.json", R"({"rows": [[1, 1]]})");
    auto r = run_cli("tame --matrix " + bad.string());
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("NonSquareMatrix") != std::string::npos);

    // float point on an expanding map without --allow-float
    auto r2 = run_cli("average --system interval:tent --method cesaro --point 0.3 --n 50");
    CHECK(r2.exit_code == 1);
    auto r3 = run_cli(
        "average --system interval:tent --method cesaro --point 0.3 --n 50 --allow-float --out " +
        (work_dir() / "tent.json").string());
    CHECK(r3.exit_code == 0);
  }
  SECTION("identical runs produce byte-identical outputs") {
    auto out1 = (work_dir() / "d1.json").string();
    auto out2 = (work_dir() / "d2.json").string();
    std::string args =
        "decompose --system interval:square --method cesaro --grid uniform:20 --n 500 --eps 0.05 "
        "--tol 0.2 --out ";
    REQUIRE(run_cli(args + out1).exit_code == 0);
    REQUIRE(run_cli(args + out2).exit_code == 0);
    CHECK(read_file(out1) == read_file(out2));

    auto a1 = (work_dir() / "a1.json").string();
    auto a2 = (work_dir() / "a2.json").string();
    std::string aargs =
        "average --system rotation:alpha=golden --method cesaro --point 0.0 --n 2000 --out ";
    REQUIRE(run_cli(aargs + a1).exit_code == 0);
    REQUIRE(run_cli(aargs + a2).exit_code == 0);
    CHECK(read_file(a1) == read_file(a2));
  }
  SECTION("config files mirror flags, command line wins") {
    auto cfg = write_file("avg_cfg.json",
                          R"({"system": "rotation:alpha=1/4", "method": "cesaro", "point": "0", "n": 40})");
    auto out = (work_dir() / "cfg_out.json").string();
    auto r = run_cli("average --config " + cfg.string() + " --out " + out);
    REQUIRE(r.exit_code == 0);
    io::json j = io::json::parse(read_file(out));
    CHECK(j["n"] == 40);

    auto r2 = run_cli("average --config " + cfg.string() + " --n 60 --out " + out);
    REQUIRE(r2.exit_code == 0);
    io::json j2 = io::json::parse(read_file(out));
    CHECK(j2["n"] == 60);

    auto bad = write_file("bad_cfg.json", R"({"no_such_flag": 1})");
    CHECK(run_cli("average --config " + bad.string()).exit_code == 2);
  }
  SECTION("scenario filter runs and emits tables") {
    auto out = (work_dir() / "sc.json").string();
    auto csv = (work_dir() / "sc.csv").string();
    auto r = run_cli("scenarios --filter torus-shear --out " + out + " --csv " + csv);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("[PASS] torus-shear") != std::string::npos);
    io::json j = io::json::parse(read_file(out));
    REQUIRE(j.is_array());
    CHECK(j[0]["id"] == "torus-shear");
    CHECK(j[0]["pass"] == true);
    std::string table = read_file(csv);
    CHECK(table.find("id,pass,wall_ms,checks,failed") != std::string::npos);
    CHECK(table.find("torus-shear,true") != std::string::npos);
  }
  SECTION("flatness subcommand") {
    auto out = (work_dir() / "flat.json").string();
    auto r = run_cli(
        "flatness --system shift --observable coord0 --shifts range:0..2 --grid cylinders:3 --out " +
        out);
    REQUIRE(r.exit_code == 0);
    io::json j = io::json::parse(read_file(out));
    CHECK(j["value"].get<double>() == Catch::Approx(0.5).margin(1e-9));
    CHECK(j["coefficients"].size() == 3);
  }
}
