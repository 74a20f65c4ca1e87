#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

#include "spinmetro/scan.hpp"

using namespace spinmetro;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ScanConfig ferro_cfg(int n, double hx, double hz = 0.0) {
    ScanConfig cfg;
    cfg.model.kind = ModelKind::FerroIsing;
    cfg.model.n = n;
    cfg.model.hx = hx;
    cfg.model.hz = hz;
    cfg.axes = {SpinAxis::X, SpinAxis::Y};
    return cfg;
}

int column(const ScanTable& t, const std::string& name) {
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        if (t.columns[i] == name) return int(i);
    return -1;
}

std::string emit_str(const ScanTable& t, const std::vector<ScalingReport>& reps,
                     const ScanConfig& cfg) {
    std::ostringstream os;
    emit(t, reps, cfg, os);
    return os.str();
}

fs::path scratch_dir() {
    auto d = fs::temp_directory_path() / "spinmetro_scan_io";
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int run_cli(const std::string& args) {
    const char* cli = std::getenv("SPINMETRO_CLI");
    REQUIRE(cli != nullptr);
    const std::string cmd = std::string(cli) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

} // namespace

TEST_CASE("a single point scan produces one complete row") {
    ScanConfig cfg = ferro_cfg(5, 0.6, 0.2);
    ScanTable t = run_scan(cfg);

    REQUIRE(t.rows.size() == 1);
    REQUIRE(t.rows[0].size() == t.columns.size());
    CHECK(t.flagged_rows == 0);

    const std::vector<std::string> want = {
        "n",    "hx",   "hy",   "hz",     "gamma",      "lambda",   "E0",    "E1", "gap",
        "F_xx", "F_xy", "F_yy", "U_xy",   "R_xy",       "R_full",   "degenerate",
        "fit_warn", "failed"};
    REQUIRE(t.columns == want);

    const auto& r = t.rows[0];
    CHECK(r[column(t, "n")] == 5.0);
    CHECK(r[column(t, "hx")] == 0.6);
    CHECK(r[column(t, "hz")] == 0.2);
    CHECK(r[column(t, "E0")] < r[column(t, "E1")]);
    CHECK(r[column(t, "gap")] > 0.0);
    CHECK(r[column(t, "F_xx")] > 0.0);
    CHECK(r[column(t, "F_yy")] > 0.0);
    CHECK(r[column(t, "R_xy")] >= 0.0);
    CHECK(r[column(t, "R_xy")] <= 1.0 + 1e-3);
    CHECK(r[column(t, "degenerate")] == 0.0);
    CHECK(r[column(t, "failed")] == 0.0);

    // the row must be the plain per-point evaluation, nothing rescaled
    auto direct = metro_point(cfg.model, {0.6, 0.0, 0.2}, cfg.axes, cfg.method);
    CHECK(r[column(t, "F_xx")] == doctest::Approx(direct.F(0, 0)).epsilon(1e-10));
    CHECK(r[column(t, "U_xy")] == doctest::Approx(direct.U(0, 1)).epsilon(1e-8));
    CHECK(r[column(t, "R_full")] == doctest::Approx(direct.R_full).epsilon(1e-8));
}

TEST_CASE("sweep grids run size major in declared order") {
    ScanConfig cfg = ferro_cfg(4, 0.6);
    cfg.axes = {SpinAxis::X};
    cfg.sweep = {{"hz", 0.1, 0.3, 3}};
    cfg.sizes = {4, 6};
    ScanTable t = run_scan(cfg);

    REQUIRE(t.rows.size() == 6);
    const int cn = column(t, "n"), cz = column(t, "hz");
    const double nwant[6] = {4, 4, 4, 6, 6, 6};
    const double zwant[3] = {0.1, 0.2, 0.3};
    for (int i = 0; i < 6; ++i) {
        CHECK(t.rows[i][cn] == nwant[i]);
        CHECK(t.rows[i][cz] == doctest::Approx(zwant[i % 3]).epsilon(1e-12));
    }
    // single-axis request: no pair columns at all
    CHECK(column(t, "U_xy") == -1);
    CHECK(column(t, "R_xy") == -1);
    CHECK(column(t, "F_xx") >= 0);
}

TEST_CASE("csv layout is stable and machine readable") {
    ScanTable t;
    t.columns = {"alpha", "beta"};
    t.rows = {{1.5, std::numeric_limits<double>::quiet_NaN()}, {0.123456789012345, 2.0}};
    ScanConfig cfg;

    SUBCASE("bare table") {
        CHECK(emit_str(t, {}, cfg) == "alpha,beta\n1.5,nan\n0.123456789012,2\n");
    }
    SUBCASE("fit reports ride as comment trailers") {
        ScalingReport rep = classify_scaling("beta", {4, 6, 8}, {1.0, 2.3, 4.1});
        const std::string out = emit_str(t, {rep}, cfg);
        CHECK(out.rfind("alpha,beta\n1.5,nan\n0.123456789012,2\n", 0) == 0);
        const auto tail = out.substr(out.find("# "));
        CHECK(tail.find("beta") != std::string::npos);
        CHECK(tail.find("preferred") != std::string::npos);
        CHECK(out.back() == '\n');
    }
}

TEST_CASE("json emission round trips bit exactly and echoes every knob") {
    ScanTable t;
    t.columns = {"v"};
    t.rows = {{1.0 / 3.0}, {1e-300}, {std::numeric_limits<double>::quiet_NaN()}};

    ScanConfig cfg = ferro_cfg(5, 0.6);
    cfg.format = "json";
    json j = json::parse(emit_str(t, {}, cfg));

    REQUIRE(j["columns"].size() == 1);
    CHECK(j["columns"][0] == "v");
    REQUIRE(j["rows"].size() == 3);
    CHECK(j["rows"][0][0].get<double>() == 1.0 / 3.0);
    CHECK(j["rows"][1][0].get<double>() == 1e-300);
    CHECK(j["rows"][2][0].is_null());

    const json& c = j["config"];
    CHECK(c["model"]["kind"] == "ferro");
    CHECK(c["model"]["n"] == 5);
    CHECK(c["model"]["hx"].get<double>() == 0.6);
    CHECK(c["model"]["hy"].get<double>() == 0.0);
    CHECK(c["model"]["hz"].get<double>() == 0.0);
    CHECK(c["model"]["gamma"].get<double>() == 1.0);
    CHECK(c["model"]["lambda"].get<double>() == 0.0);
    // defaults must be echoed, not just user-set values
    CHECK(c["delta0"].get<double>() == 1e-3);
    CHECK(c["ladder"] == 6);
    CHECK(c["tol"].get<double>() == 1e-10);
    CHECK(c["seed"] == 12345);
    CHECK(c.contains("threads"));
    CHECK(c["method"] == "fidelity_bargmann");
    CHECK(c["axes"] == "xy");
    CHECK(c.contains("sweep"));
    CHECK(c.contains("sizes"));
    CHECK(c.contains("loop_areas"));
    CHECK(c["format"] == "json");
    CHECK(c.contains("out"));
    CHECK(c.contains("quantities"));
}

TEST_CASE("identical configs emit byte identical output") {
    ScanConfig cfg = ferro_cfg(5, 1.2);
    cfg.sweep = {{"hz", 0.05, 0.15, 2}};
    cfg.sizes = {4, 5};
    cfg.threads = 2;

    ScanTable a = run_scan(cfg);
    ScanTable b = run_scan(cfg);
    CHECK(emit_str(a, {}, cfg) == emit_str(b, {}, cfg));

    cfg.format = "json";
    CHECK(emit_str(a, {}, cfg) == emit_str(b, {}, cfg));
}

TEST_CASE("config files parse with diagnostics") {
    const fs::path dir = scratch_dir();

    SUBCASE("well formed file lands every field") {
        const fs::path p = dir / "good.cfg";
        std::ofstream(p) << "# scan campaign\n"
                            "\n"
                            "model = antiferro\n"
                            "n = 8\n"
                            "hx = 0.5\n"
                            "sweep = hz:1.0:2.2:7\n"
                            "sizes = 6,8\n"
                            "axes = xy\n"
                            "method = exact_rotation\n"
                            "delta0 = 5e-4\n"
                            "ladder = 8\n"
                            "loop_areas = 1e-4,5e-5,2.5e-5\n"
                            "tol = 1e-9\n"
                            "seed = 99\n"
                            "format = json\n";
        ScanConfig cfg = parse_config_file(p.string());
        CHECK(cfg.model.kind == ModelKind::AntiferroIsing);
        CHECK(cfg.model.n == 8);
        CHECK(cfg.model.hx == 0.5);
        REQUIRE(cfg.sweep.size() == 1);
        CHECK(cfg.sweep[0].param == "hz");
        CHECK(cfg.sweep[0].start == 1.0);
        CHECK(cfg.sweep[0].stop == 2.2);
        CHECK(cfg.sweep[0].steps == 7);
        CHECK(cfg.sizes == std::vector<int>{6, 8});
        REQUIRE(cfg.axes.size() == 2);
        CHECK(cfg.axes[0] == SpinAxis::X);
        CHECK(cfg.axes[1] == SpinAxis::Y);
        CHECK(cfg.method == MetroMethod::ExactRotation);
        CHECK(cfg.delta0 == 5e-4);
        CHECK(cfg.ladder == 8);
        CHECK(cfg.loop_areas == std::vector<double>{1e-4, 5e-5, 2.5e-5});
        CHECK(cfg.tol == 1e-9);
        CHECK(cfg.seed == 99);
        CHECK(cfg.format == "json");
        cfg.validate();
    }
    SUBCASE("malformed line reports its number") {
        const fs::path p = dir / "bad.cfg";
        std::ofstream(p) << "model = ferro\nnonsense without equals\n";
        try {
            parse_config_file(p.string());
            FAIL("expected a parse error");
        } catch (const std::invalid_argument& e) {
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }
    SUBCASE("unknown keys name the offender") {
        ScanConfig cfg;
        try {
            apply_config_entry(cfg, "frobnicate", "1");
            FAIL("expected a parse error");
        } catch (const std::invalid_argument& e) {
            CHECK(std::string(e.what()).find("frobnicate") != std::string::npos);
        }
    }
    SUBCASE("validation rejects bad campaigns") {
        ScanConfig one = ferro_cfg(5, 0.6);
        one.sweep = {{"hz", 0.0, 1.0, 1}};
        CHECK_THROWS_AS(one.validate(), std::invalid_argument);

        ScanConfig two = ferro_cfg(5, 0.6);
        two.sweep = {{"lambda", 0.0, 1.0, 5}};  // not an Ising field
        CHECK_THROWS_AS(two.validate(), std::invalid_argument);

        ScanConfig three = ferro_cfg(5, 0.6);
        three.delta0 = -1e-3;
        CHECK_THROWS_AS(three.validate(), std::invalid_argument);

        ScanConfig four = ferro_cfg(5, 0.6);
        four.format = "yaml";
        CHECK_THROWS_AS(four.validate(), std::invalid_argument);

        ScanConfig five = ferro_cfg(5, 0.6);
        five.axes = {SpinAxis::X, SpinAxis::X};
        CHECK_THROWS_AS(five.validate(), std::invalid_argument);
    }
}

TEST_CASE("synthetic passthrough reproduces the direct fitter output") {
    const std::vector<double> x = {4, 6, 8, 12};
    const std::vector<double> y = {2.5, 9.1, 22.0, 61.0};

    ScanConfig cfg;
    cfg.synthetic_x = x;
    cfg.synthetic_y = y;
    cfg.quantities = {"synthetic"};
    ScalingRunResult rr = run_scaling(cfg);

    REQUIRE(rr.reports.size() == 1);
    const FitResult pw = fit_power_law(x, y);
    const FitResult ex = fit_exponential(x, y);
    const bool power_wins = pw.rss <= ex.rss;
    const FitResult& best = power_wins ? pw : ex;
    const FitResult& alt = power_wins ? ex : pw;

    // plumbing identity: the campaign path must hand back the very numbers
    // the fitters produce on the same input
    CHECK(rr.reports[0].best.m == best.m);
    CHECK(rr.reports[0].best.a == best.a);
    CHECK(rr.reports[0].best.A == best.A);
    CHECK(rr.reports[0].best.lambda_e == best.lambda_e);
    CHECK(rr.reports[0].best.rss == best.rss);
    CHECK(rr.reports[0].alt.rss == alt.rss);
    CHECK(rr.reports[0].values == y);

    REQUIRE(rr.table.rows.size() == 4);
    CHECK(rr.table.columns == std::vector<std::string>{"x", "y"});
}

TEST_CASE("scaling campaigns fit quantities across sizes") {
    SUBCASE("gap classification at the ordered point") {
        ScanConfig cfg = ferro_cfg(4, 0.5);
        cfg.axes = {SpinAxis::X};
        cfg.sizes = {4, 5, 6};
        cfg.quantities = {"gap"};
        ScalingRunResult rr = run_scaling(cfg);

        REQUIRE(rr.reports.size() == 1);
        CHECK(rr.reports[0].quantity == "gap");
        CHECK(rr.reports[0].preferred == ScalingReport::Preferred::Exponential);
        CHECK(rr.reports[0].best.lambda_e < 0.0);
        REQUIRE(rr.table.rows.size() == 3);
        CHECK(rr.table.columns == std::vector<std::string>{"n", "gap"});
        CHECK(rr.table.rows[0][1] > rr.table.rows[1][1]);
        CHECK(rr.table.rows[1][1] > rr.table.rows[2][1]);
    }
    SUBCASE("tensor quantities on the paramagnetic side") {
        ScanConfig cfg = ferro_cfg(4, 1.2);
        cfg.sizes = {4, 6, 8};
        cfg.quantities = {"F_xx", "det F"};
        ScalingRunResult rr = run_scaling(cfg);

        REQUIRE(rr.reports.size() == 2);
        CHECK(rr.reports[0].quantity == "F_xx");
        CHECK(rr.reports[1].quantity == "det F");
        for (const auto& rep : rr.reports) {
            CHECK(rep.sizes == std::vector<int>{4, 6, 8});
            for (double v : rep.values) CHECK(v > 0.0);
        }
        CHECK(rr.table.columns == std::vector<std::string>{"n", "F_xx", "det_F"});
    }
}

TEST_CASE("command line drives the full pipeline") {
    const fs::path dir = scratch_dir();

    SUBCASE("scan exits clean and writes a parsable table") {
        const fs::path out = dir / "a.csv";
        CHECK(run_cli("scan --model ferro --n 5 --hx 0.6 --axes xy --out " + out.string()) == 0);
        const std::string body = slurp(out);
        CHECK(body.rfind("n,hx,", 0) == 0);
        CHECK(std::count(body.begin(), body.end(), '\n') == 2);

        const fs::path out2 = dir / "b.csv";
        CHECK(run_cli("scan --model ferro --n 5 --hx 0.6 --axes xy --out " + out2.string()) == 0);
        CHECK(slurp(out2) == body);
    }
    SUBCASE("config errors exit one") {
        CHECK(run_cli("scan --model bogus --n 5 --hx 0.6") == 1);
        CHECK(run_cli("scan --model ferro --n 5 --hx 0.6 --format yaml") == 1);
    }
    SUBCASE("suppressed entries flag the row and exit two") {
        const fs::path out = dir / "d.csv";
        const int rc =
            run_cli("scan --model ferro --n 4 --hx 0 --axes xz --out " + out.string());
        CHECK(rc == 2);
        const std::string body = slurp(out);
        CHECK(body.find("nan") != std::string::npos);
    }
    SUBCASE("config file plus override, override wins") {
        const fs::path cfgp = dir / "h.cfg";
        std::ofstream(cfgp) << "model = ferro\nn = 5\nhx = 0.9\naxes = xy\n";
        const fs::path out = dir / "h.csv";
        CHECK(run_cli("scan --config " + cfgp.string() + " --hx 0.6 --out " + out.string()) ==
              0);
        std::istringstream body(slurp(out));
        std::string header, row, cell;
        std::getline(body, header);
        std::getline(body, row);
        std::istringstream fields(row);
        std::getline(fields, cell, ',');  // n
        std::getline(fields, cell, ',');  // hx
        CHECK(cell == "0.6");
    }
    SUBCASE("xy rotation summary") {
        const fs::path out = dir / "e.json";
        CHECK(run_cli("xy-rotation --n 32 --gamma 0.2 --lambda 1.5 --format json --out " +
                      out.string()) == 0);
        json j = json::parse(slurp(out));
        int rfull = -1;
        for (std::size_t i = 0; i < j["columns"].size(); ++i)
            if (j["columns"][i] == "R_full") rfull = int(i);
        REQUIRE(rfull >= 0);
        CHECK(j["rows"][0][rfull].get<double>() > 0.99);
    }
    SUBCASE("critical point search") {
        const fs::path out = dir / "f.json";
        CHECK(run_cli("critical-point --model ferro --n 6 --hx 0.8 --sweep hx:0.7:1.3:4 "
                      "--format json --out " +
                      out.string()) == 0);
        json j = json::parse(slurp(out));
        CHECK(j["boundary"].get<bool>() == false);
        CHECK(j["lambda_star"].get<double>() > 0.8);
        CHECK(j["lambda_star"].get<double>() < 1.2);
        CHECK(j["profile"].size() == 4);
    }
    SUBCASE("scaling campaign from the command line") {
        const fs::path out = dir / "g.json";
        CHECK(run_cli("scaling --model ferro --hx 0.5 --sizes 4,5,6 --quantities gap "
                      "--axes x --format json --out " +
                      out.string()) == 0);
        json j = json::parse(slurp(out));
        REQUIRE(j["reports"].size() == 1);
        CHECK(j["reports"][0]["preferred"] == "exponential");
        CHECK(j["reports"][0]["quantity"] == "gap");
    }
}
