// spinmetro: scans, scaling campaigns, and critical-point searches for the
// periodic spin chains. Subcommands share the key=value config language; any
// command line flag overrides the matching config file entry.

#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spinmetro/freefermion.hpp"
#include "spinmetro/scaling.hpp"
#include "spinmetro/scan.hpp"

using nlohmann::json;
using namespace spinmetro;

namespace {

std::string fmt12(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// Binds string options onto a subcommand and replays the ones actually given
// through apply_config_entry, in a fixed order, so command line flags layer
// on top of a parsed config file.
class KnobSet {
  public:
    explicit KnobSet(CLI::App* cmd) : cmd_(cmd) {}

    void add(const std::string& key, const std::string& flag, const std::string& help) {
        entries_.push_back({key, "", nullptr});
        entries_.back().opt = cmd_->add_option(flag, entries_.back().value, help);
    }

    void apply(ScanConfig& cfg) const {
        for (const auto& e : entries_)
            if (e.opt->count() > 0) apply_config_entry(cfg, e.key, e.value);
    }

  private:
    struct Entry {
        std::string key, value;
        CLI::Option* opt;
    };
    CLI::App* cmd_;
    std::deque<Entry> entries_;
};

struct CommandState {
    CLI::App* cmd = nullptr;
    KnobSet knobs;
    std::string config_path;
    std::vector<std::string> sweeps;

    explicit CommandState(CLI::App* c) : cmd(c), knobs(c) {
        cmd->add_option("--config", config_path, "key=value config file, flags override");
    }
};

void add_model_knobs(CommandState& st) {
    st.knobs.add("model", "--model", "ferro, antiferro, or xy");
    st.knobs.add("n", "--n", "chain length");
    st.knobs.add("hx", "--hx", "transverse field");
    st.knobs.add("hy", "--hy", "y field");
    st.knobs.add("hz", "--hz", "longitudinal field");
    st.knobs.add("gamma", "--gamma", "XY anisotropy");
    st.knobs.add("lambda", "--lambda", "XY transverse field");
}

void add_run_knobs(CommandState& st) {
    st.knobs.add("sizes", "--sizes", "comma separated chain lengths");
    st.knobs.add("axes", "--axes", "parameter axes, letters from xyz");
    st.knobs.add("method", "--method", "fidelity_bargmann or exact_rotation");
    st.knobs.add("delta0", "--delta0", "initial ladder step");
    st.knobs.add("ladder", "--ladder", "rungs per fidelity ladder");
    st.knobs.add("loop_areas", "--loop-areas", "comma separated loop areas");
    st.knobs.add("tol", "--tol", "eigensolver tolerance");
    st.knobs.add("seed", "--seed", "eigensolver seed");
    st.knobs.add("threads", "--threads", "worker threads, 0 = hardware");
    st.cmd->add_option("--sweep", st.sweeps, "param:start:stop:steps, repeatable");
}

void add_io_knobs(CommandState& st) {
    st.knobs.add("out", "--out", "output path, - = stdout");
    st.knobs.add("format", "--format", "csv or json");
}

ScanConfig build_config(const CommandState& st) {
    ScanConfig cfg;
    if (!st.config_path.empty()) cfg = parse_config_file(st.config_path);
    if (!st.sweeps.empty()) cfg.sweep.clear();  // flags replace, not extend
    st.knobs.apply(cfg);
    for (const auto& s : st.sweeps) apply_config_entry(cfg, "sweep", s);
    return cfg;
}

std::ofstream open_out(const ScanConfig& cfg) {
    std::ofstream f;
    if (cfg.out != "-") {
        f.open(cfg.out, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open " + cfg.out);
    }
    return f;
}

int cmd_scan(const CommandState& st) {
    ScanConfig cfg = build_config(st);
    ScanTable table = run_scan(cfg);
    emit(table, {}, cfg);
    return table.flagged_rows > 0 ? 2 : 0;
}

int cmd_scaling(const CommandState& st) {
    ScanConfig cfg = build_config(st);
    ScalingRunResult rr = run_scaling(cfg);
    emit(rr.table, rr.reports, cfg);
    return rr.table.flagged_rows > 0 ? 2 : 0;
}

int cmd_xy_rotation(const CommandState& st) {
    ScanConfig cfg = build_config(st);
    cfg.model.kind = ModelKind::XYChain;
    const int n = cfg.model.n;
    const double gamma = cfg.model.gamma, lambda = cfg.model.lambda;
    if (n < 3) throw std::invalid_argument("xy-rotation: n must be at least 3");
    if (gamma <= 0.0 || gamma > 1.0)
        throw std::invalid_argument("xy-rotation: gamma must lie in (0, 1]");
    if (lambda < 0.0) throw std::invalid_argument("xy-rotation: lambda must be >= 0");
    if (cfg.format != "csv" && cfg.format != "json")
        throw std::invalid_argument("xy-rotation: format must be csv or json");

    MetroTensors t = xy_rotation_metrology(n, gamma, lambda);
    ScanTable table;
    table.columns = {"n",    "gamma", "lambda", "F_xx", "F_xy", "F_xz",
                     "F_yy", "F_yz",  "F_zz",   "U_xy", "U_xz", "U_yz",
                     "R_xy", "R_xz",  "R_yz",   "R_full"};
    std::vector<double> row = {double(n), gamma, lambda};
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) row.push_back(t.F(i, j));
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) row.push_back(t.U(i, j));
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            row.push_back(t.pair_defined(i, j) ? t.R_pair(i, j)
                                               : std::numeric_limits<double>::quiet_NaN());
    row.push_back(t.R_full_defined ? t.R_full
                                   : std::numeric_limits<double>::quiet_NaN());
    bool any_nan = false;
    for (double v : row)
        if (std::isnan(v)) any_nan = true;
    table.rows.push_back(std::move(row));
    emit(table, {}, cfg);
    return any_nan ? 2 : 0;
}

int cmd_critical_point(const CommandState& st) {
    ScanConfig cfg = build_config(st);
    if (cfg.model.kind == ModelKind::XYChain)
        throw std::invalid_argument("critical-point: field sweeps need an Ising kind");
    if (cfg.sweep.size() != 1)
        throw std::invalid_argument("critical-point: exactly one --sweep");
    const SweepSpec& sw = cfg.sweep.front();
    if (sw.steps < 3)
        throw std::invalid_argument("critical-point: sweep needs at least 3 steps");
    SpinAxis axis;
    if (sw.param == "hx")
        axis = SpinAxis::X;
    else if (sw.param == "hy")
        axis = SpinAxis::Y;
    else if (sw.param == "hz")
        axis = SpinAxis::Z;
    else
        throw std::invalid_argument("critical-point: sweep parameter must be hx, hy, or hz");
    if (cfg.format != "csv" && cfg.format != "json")
        throw std::invalid_argument("critical-point: format must be csv or json");

    std::vector<double> grid;
    for (int k = 0; k < sw.steps; ++k)
        grid.push_back(sw.start + k * (sw.stop - sw.start) / double(sw.steps - 1));
    CriticalPointResult res = locate_critical_point(cfg.model, axis, grid, cfg.model.n);

    std::ofstream f = open_out(cfg);
    std::ostream& os = cfg.out == "-" ? std::cout : f;
    if (cfg.format == "json") {
        json j;
        j["lambda_star"] = res.lambda_star;
        j["boundary"] = res.boundary;
        json prof = json::array();
        for (const auto& p : res.profile) prof.push_back({p[0], p[1]});
        j["profile"] = prof;
        os << j.dump(2) << '\n';
    } else {
        os << sw.param << ",F_xx\n";
        for (const auto& p : res.profile) os << fmt12(p[0]) << ',' << fmt12(p[1]) << '\n';
        os << "# lambda_star = " << fmt12(res.lambda_star) << '\n';
        os << "# boundary = " << (res.boundary ? 1 : 0) << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"periodic spin chain metrology scans"};
    app.require_subcommand(1);

    CommandState scan_st(app.add_subcommand("scan", "tensor table over a field grid"));
    add_model_knobs(scan_st);
    add_run_knobs(scan_st);
    add_io_knobs(scan_st);
    scan_st.knobs.add("quantities", "--quantities", "columns for scaling campaigns");

    CommandState scaling_st(
        app.add_subcommand("scaling", "fit quantities against chain length"));
    add_model_knobs(scaling_st);
    add_run_knobs(scaling_st);
    add_io_knobs(scaling_st);
    scaling_st.knobs.add("quantities", "--quantities", "quantities to fit");
    scaling_st.knobs.add("synthetic_x", "--synthetic-x", "bypass scans: x data");
    scaling_st.knobs.add("synthetic_y", "--synthetic-y", "bypass scans: y data");

    CommandState xy_st(
        app.add_subcommand("xy-rotation", "rotation-protocol tensors for the XY chain"));
    xy_st.knobs.add("n", "--n", "chain length (free-fermion route, any size)");
    xy_st.knobs.add("gamma", "--gamma", "XY anisotropy");
    xy_st.knobs.add("lambda", "--lambda", "XY transverse field");
    add_io_knobs(xy_st);

    CommandState crit_st(
        app.add_subcommand("critical-point", "locate the susceptibility peak"));
    add_model_knobs(crit_st);
    crit_st.cmd->add_option("--sweep", crit_st.sweeps, "param:start:stop:steps");
    add_io_knobs(crit_st);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (scan_st.cmd->parsed()) return cmd_scan(scan_st);
        if (scaling_st.cmd->parsed()) return cmd_scaling(scaling_st);
        if (xy_st.cmd->parsed()) return cmd_xy_rotation(xy_st);
        if (crit_st.cmd->parsed()) return cmd_critical_point(crit_st);
    } catch (const std::exception& e) {
        std::cerr << "spinmetro: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
