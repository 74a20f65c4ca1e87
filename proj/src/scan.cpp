#include "spinmetro/scan.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "spinmetro/eigensolver.hpp"

namespace spinmetro {

namespace {

using json = nlohmann::json;

const char kAxisLetter[3] = {'x', 'y', 'z'};

bool is_ising(ModelKind k) { return k != ModelKind::XYChain; }

std::string kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::FerroIsing: return "ferro";
        case ModelKind::AntiferroIsing: return "antiferro";
        default: return "xy";
    }
}

std::string method_name(MetroMethod m) {
    return m == MetroMethod::FidelityBargmann ? "fidelity_bargmann" : "exact_rotation";
}

std::string axes_string(const std::vector<SpinAxis>& axes) {
    std::string s;
    for (SpinAxis a : axes) s += kAxisLetter[int(a)];
    return s;
}

double parse_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad number for '" + key + "': " + v);
    }
    if (used != v.size())
        throw std::invalid_argument("config: bad number for '" + key + "': " + v);
    return x;
}

long long parse_int(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    long long x = 0;
    try {
        x = std::stoll(v, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad integer for '" + key + "': " + v);
    }
    if (used != v.size())
        throw std::invalid_argument("config: bad integer for '" + key + "': " + v);
    return x;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

void apply_sweep_entry(ScanConfig& cfg, const std::string& value) {
    for (const std::string& piece : split(value, ';')) {
        const auto parts = split(trim(piece), ':');
        if (parts.size() != 4)
            throw std::invalid_argument("config: sweep wants param:start:stop:steps, got '" +
                                        piece + "'");
        SweepSpec sw;
        sw.param = trim(parts[0]);
        sw.start = parse_double("sweep", parts[1]);
        sw.stop = parse_double("sweep", parts[2]);
        sw.steps = int(parse_int("sweep", parts[3]));
        cfg.sweep.push_back(sw);
    }
}

std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const std::string& piece : split(v, ','))
        out.push_back(parse_double(key, trim(piece)));
    return out;
}

void check_sweep_param(ModelKind kind, const std::string& param) {
    const bool ising_field = param == "hx" || param == "hy" || param == "hz";
    const bool xy_field = param == "lambda" || param == "gamma";
    if (is_ising(kind) ? !ising_field : !xy_field)
        throw std::invalid_argument("scan: sweep parameter '" + param +
                                    "' does not belong to this model kind");
}

void set_model_field(ModelSpec& s, const std::string& param, double v) {
    if (param == "hx")
        s.hx = v;
    else if (param == "hy")
        s.hy = v;
    else if (param == "hz")
        s.hz = v;
    else if (param == "lambda")
        s.lambda = v;
    else
        s.gamma = v;
}

std::string fmt12(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// column layout shared by the scan table builders
struct Layout {
    std::vector<std::string> columns;
    int first_data = 0;  // index of the first non-parameter column
};

Layout make_layout(const std::vector<SpinAxis>& axes) {
    Layout lay;
    lay.columns = {"n", "hx", "hy", "hz", "gamma", "lambda", "E0", "E1", "gap"};
    lay.first_data = 6;
    const int p = int(axes.size());
    for (int i = 0; i < p; ++i)
        for (int j = i; j < p; ++j)
            lay.columns.push_back(std::string("F_") + kAxisLetter[int(axes[i])] +
                                  kAxisLetter[int(axes[j])]);
    for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j)
            lay.columns.push_back(std::string("U_") + kAxisLetter[int(axes[i])] +
                                  kAxisLetter[int(axes[j])]);
    for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j)
            lay.columns.push_back(std::string("R_") + kAxisLetter[int(axes[i])] +
                                  kAxisLetter[int(axes[j])]);
    if (p >= 2) lay.columns.push_back("R_full");
    lay.columns.push_back("degenerate");
    lay.columns.push_back("fit_warn");
    lay.columns.push_back("failed");
    return lay;
}

double sweep_value(const SweepSpec& sw, int k) {
    if (sw.steps == 1) return sw.start;
    return sw.start + k * (sw.stop - sw.start) / double(sw.steps - 1);
}

std::vector<double> nan_row(std::size_t width) {
    return std::vector<double>(width, std::numeric_limits<double>::quiet_NaN());
}

std::vector<double> scan_row(const ScanConfig& cfg, const ModelSpec& s,
                             std::optional<QuantumState>& prev, const Layout& lay) {
    std::vector<double> row = nan_row(lay.columns.size());
    row[0] = double(s.n);
    row[1] = s.hx;
    row[2] = s.hy;
    row[3] = s.hz;
    row[4] = s.gamma;
    row[5] = s.lambda;
    double degenerate = 0.0, fit_warn = 0.0, failed = 0.0;
    try {
        s.validate();
        TrackingOptions topt;
        topt.solver.tol = cfg.tol;
        topt.solver.seed = cfg.seed;
        EigenResult er = ground_state_tracked(s, prev, topt);
        prev = er.ground;
        row[6] = er.E0;
        row[7] = er.E1;
        row[8] = er.gap;
        if (er.degenerate) degenerate = 1.0;

        const Eigen::Vector3d point =
            is_ising(s.kind) ? Eigen::Vector3d(s.hx, s.hy, s.hz) : Eigen::Vector3d::Zero();
        MetroTensors t = metro_point(s, point, cfg.axes, cfg.method, prev, cfg.delta0,
                                     cfg.ladder, cfg.loop_areas);
        if (t.degenerate_base) degenerate = 1.0;
        for (const auto& d : t.ladder_diag)
            if (!d.ok) fit_warn = 1.0;
        for (const auto& d : t.loop_diag)
            if (!d.ok) fit_warn = 1.0;

        const int p = int(cfg.axes.size());
        int c = 9;
        for (int i = 0; i < p; ++i)
            for (int j = i; j < p; ++j) row[c++] = t.F(i, j);
        for (int i = 0; i < p; ++i)
            for (int j = i + 1; j < p; ++j) row[c++] = t.U(i, j);
        for (int i = 0; i < p; ++i)
            for (int j = i + 1; j < p; ++j)
                row[c++] = t.pair_defined(i, j) ? t.R_pair(i, j)
                                                : std::numeric_limits<double>::quiet_NaN();
        if (p >= 2)
            row[c++] = t.R_full_defined ? t.R_full : std::numeric_limits<double>::quiet_NaN();
    } catch (const std::exception&) {
        failed = 1.0;
    }
    const std::size_t w = lay.columns.size();
    row[w - 3] = degenerate;
    row[w - 2] = fit_warn;
    row[w - 1] = failed;
    return row;
}

bool row_flagged(const std::vector<double>& row, std::size_t width) {
    if (row[width - 1] != 0.0) return true;  // failed outright
    for (std::size_t c = 6; c + 3 < width; ++c)
        if (std::isnan(row[c])) return true;
    return false;
}

json config_echo(const ScanConfig& cfg) {
    json m;
    m["kind"] = kind_name(cfg.model.kind);
    m["n"] = cfg.model.n;
    m["hx"] = cfg.model.hx;
    m["hy"] = cfg.model.hy;
    m["hz"] = cfg.model.hz;
    m["gamma"] = cfg.model.gamma;
    m["lambda"] = cfg.model.lambda;
    m["max_sites"] = cfg.model.max_sites;

    json sweeps = json::array();
    for (const auto& sw : cfg.sweep)
        sweeps.push_back(
            {{"param", sw.param}, {"start", sw.start}, {"stop", sw.stop}, {"steps", sw.steps}});

    json c;
    c["model"] = m;
    c["sweep"] = sweeps;
    c["sizes"] = cfg.sizes;
    c["axes"] = axes_string(cfg.axes);
    c["method"] = method_name(cfg.method);
    c["delta0"] = cfg.delta0;
    c["ladder"] = cfg.ladder;
    c["loop_areas"] = cfg.loop_areas;
    c["tol"] = cfg.tol;
    c["seed"] = cfg.seed;
    c["threads"] = cfg.threads;
    c["out"] = cfg.out;
    c["format"] = cfg.format;
    c["quantities"] = cfg.quantities;
    c["synthetic_x"] = cfg.synthetic_x;
    c["synthetic_y"] = cfg.synthetic_y;
    return c;
}

std::string fit_model_name(FitResult::Model m) {
    switch (m) {
        case FitResult::Model::PowerLaw: return "power_law";
        case FitResult::Model::Exponential: return "exponential";
        case FitResult::Model::Linear: return "linear";
        default: return "parabola";
    }
}

json fit_json(const FitResult& f) {
    json j;
    j["model"] = fit_model_name(f.model);
    j["m"] = f.m;
    j["a"] = f.a;
    j["A"] = f.A;
    j["lambda_e"] = f.lambda_e;
    j["c0"] = f.c0;
    j["c1"] = f.c1;
    j["c2"] = f.c2;
    j["rss"] = f.rss;
    j["r2"] = f.r2;
    j["npoints"] = f.npoints;
    return j;
}

} // namespace

void ScanConfig::validate() const {
    model.validate();
    for (const auto& sw : sweep) {
        if (sw.steps < 2)
            throw std::invalid_argument("scan: sweep '" + sw.param + "' needs at least 2 steps");
        check_sweep_param(model.kind, sw.param);
        if (!std::isfinite(sw.start) || !std::isfinite(sw.stop))
            throw std::invalid_argument("scan: sweep '" + sw.param + "' has non-finite bounds");
    }
    for (std::size_t i = 0; i < sweep.size(); ++i)
        for (std::size_t j = i + 1; j < sweep.size(); ++j)
            if (sweep[i].param == sweep[j].param)
                throw std::invalid_argument("scan: duplicate sweep parameter '" + sweep[i].param +
                                            "'");
    for (int n : sizes)
        if (n < 3 || n > model.max_sites)
            throw std::invalid_argument("scan: size " + std::to_string(n) + " out of range");
    if (axes.empty() || axes.size() > 3)
        throw std::invalid_argument("scan: between one and three axes");
    for (std::size_t i = 0; i < axes.size(); ++i)
        for (std::size_t j = i + 1; j < axes.size(); ++j)
            if (axes[i] == axes[j]) throw std::invalid_argument("scan: duplicate axis");
    if (!(delta0 > 0.0) || !std::isfinite(delta0))
        throw std::invalid_argument("scan: delta0 must be positive");
    if (ladder < 2) throw std::invalid_argument("scan: ladder needs at least two rungs");
    for (double a : loop_areas)
        if (!(a > 0.0)) throw std::invalid_argument("scan: loop areas must be positive");
    if (!(tol > 0.0)) throw std::invalid_argument("scan: tol must be positive");
    if (threads < 0) throw std::invalid_argument("scan: threads must be non-negative");
    if (format != "csv" && format != "json")
        throw std::invalid_argument("scan: format must be csv or json");
    if (synthetic_x.size() != synthetic_y.size())
        throw std::invalid_argument("scan: synthetic x and y lengths differ");
}

void apply_config_entry(ScanConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "model") {
        if (value == "ferro")
            cfg.model.kind = ModelKind::FerroIsing;
        else if (value == "antiferro")
            cfg.model.kind = ModelKind::AntiferroIsing;
        else if (value == "xy")
            cfg.model.kind = ModelKind::XYChain;
        else
            throw std::invalid_argument("config: unknown model '" + value + "'");
    } else if (key == "n") {
        cfg.model.n = int(parse_int(key, value));
    } else if (key == "hx" || key == "hy" || key == "hz" || key == "gamma" ||
               key == "lambda") {
        set_model_field(cfg.model, key, parse_double(key, value));
    } else if (key == "sweep") {
        apply_sweep_entry(cfg, value);
    } else if (key == "sizes") {
        cfg.sizes.clear();
        for (const std::string& piece : split(value, ','))
            cfg.sizes.push_back(int(parse_int(key, trim(piece))));
    } else if (key == "axes") {
        cfg.axes.clear();
        for (char ch : value) {
            if (ch == 'x')
                cfg.axes.push_back(SpinAxis::X);
            else if (ch == 'y')
                cfg.axes.push_back(SpinAxis::Y);
            else if (ch == 'z')
                cfg.axes.push_back(SpinAxis::Z);
            else
                throw std::invalid_argument("config: axes wants letters from xyz, got '" +
                                            value + "'");
        }
    } else if (key == "method") {
        if (value == "fidelity_bargmann")
            cfg.method = MetroMethod::FidelityBargmann;
        else if (value == "exact_rotation")
            cfg.method = MetroMethod::ExactRotation;
        else
            throw std::invalid_argument("config: unknown method '" + value + "'");
    } else if (key == "delta0") {
        cfg.delta0 = parse_double(key, value);
    } else if (key == "ladder") {
        cfg.ladder = int(parse_int(key, value));
    } else if (key == "loop_areas") {
        cfg.loop_areas = parse_double_list(key, value);
    } else if (key == "tol") {
        cfg.tol = parse_double(key, value);
    } else if (key == "seed") {
        cfg.seed = std::uint64_t(parse_int(key, value));
    } else if (key == "threads") {
        cfg.threads = int(parse_int(key, value));
    } else if (key == "out") {
        cfg.out = value;
    } else if (key == "format") {
        cfg.format = value;
    } else if (key == "quantities") {
        cfg.quantities.clear();
        for (const std::string& piece : split(value, ','))
            cfg.quantities.push_back(trim(piece));
    } else if (key == "synthetic_x") {
        cfg.synthetic_x = parse_double_list(key, value);
    } else if (key == "synthetic_y") {
        cfg.synthetic_y = parse_double_list(key, value);
    } else {
        throw std::invalid_argument("config: unknown key '" + key + "'");
    }
}

ScanConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    ScanConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        ": expected key = value");
        try {
            apply_config_entry(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("config: line " + std::to_string(lineno) + ": " +
                                        e.what());
        }
    }
    return cfg;
}

ScanTable run_scan(const ScanConfig& cfg) {
    cfg.validate();

    // flattened sweep product, last axis fastest
    long points = 1;
    for (const auto& sw : cfg.sweep) points *= sw.steps;
    std::vector<int> sizes = cfg.sizes.empty() ? std::vector<int>{cfg.model.n} : cfg.sizes;

    const Layout lay = make_layout(cfg.axes);
    std::vector<std::vector<std::vector<double>>> lines(sizes.size());

    auto run_line = [&](std::size_t si) {
        std::optional<QuantumState> prev;
        auto& out = lines[si];
        out.reserve(points);
        for (long p = 0; p < points; ++p) {
            ModelSpec s = cfg.model;
            s.n = sizes[si];
            long rem = p;
            for (std::size_t a = cfg.sweep.size(); a-- > 0;) {
                const auto& sw = cfg.sweep[a];
                set_model_field(s, sw.param, sweep_value(sw, int(rem % sw.steps)));
                rem /= sw.steps;
            }
            out.push_back(scan_row(cfg, s, prev, lay));
        }
    };

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers =
        std::min<std::size_t>(cfg.threads > 0 ? unsigned(cfg.threads) : hw, sizes.size());
    if (workers <= 1) {
        for (std::size_t si = 0; si < sizes.size(); ++si) run_line(si);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t si = next.fetch_add(1); si < sizes.size();
                     si = next.fetch_add(1))
                    run_line(si);
            });
        for (auto& th : pool) th.join();
    }

    ScanTable table;
    table.columns = lay.columns;
    for (auto& line : lines)
        for (auto& row : line) {
            if (row_flagged(row, lay.columns.size())) ++table.flagged_rows;
            table.rows.push_back(std::move(row));
        }
    return table;
}

namespace {

// single-point campaign row per size, then one value per requested quantity
double quantity_value(const std::string& q, const ScanTable& t, const std::vector<double>& row,
                      const std::vector<SpinAxis>& axes) {
    auto col = [&](const std::string& name) {
        for (std::size_t i = 0; i < t.columns.size(); ++i)
            if (t.columns[i] == name) return int(i);
        throw std::invalid_argument("scaling: quantity '" + q + "' not in this campaign");
    };
    if (q == "det F" || q == "det_F" || q == "det 2U" || q == "det_2U") {
        const int p = int(axes.size());
        Eigen::MatrixXd F(p, p), U(p, p);
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j) {
                const std::string fa = std::string("F_") + kAxisLetter[int(axes[std::min(i, j)])] +
                                       kAxisLetter[int(axes[std::max(i, j)])];
                F(i, j) = row[col(fa)];
                if (i == j)
                    U(i, j) = 0.0;
                else {
                    const std::string ua = std::string("U_") +
                                           kAxisLetter[int(axes[std::min(i, j)])] +
                                           kAxisLetter[int(axes[std::max(i, j)])];
                    U(i, j) = (i < j ? 1.0 : -1.0) * row[col(ua)];
                }
            }
        return (q[4] == 'F' || q.back() == 'F') ? F.determinant() : (2.0 * U).determinant();
    }
    return row[col(q)];
}

std::string sanitize(const std::string& q) {
    std::string s = q;
    std::replace(s.begin(), s.end(), ' ', '_');
    return s;
}

} // namespace

ScalingRunResult run_scaling(const ScanConfig& cfg) {
    ScalingRunResult rr;

    if (!cfg.synthetic_x.empty() || !cfg.synthetic_y.empty()) {
        if (cfg.synthetic_x.size() != cfg.synthetic_y.size() || cfg.synthetic_x.size() < 3)
            throw std::invalid_argument("scaling: synthetic data wants >= 3 matched points");
        rr.table.columns = {"x", "y"};
        for (std::size_t i = 0; i < cfg.synthetic_x.size(); ++i)
            rr.table.rows.push_back({cfg.synthetic_x[i], cfg.synthetic_y[i]});

        ScalingReport rep;
        rep.quantity = cfg.quantities.empty() ? "synthetic" : cfg.quantities.front();
        for (double x : cfg.synthetic_x) rep.sizes.push_back(int(std::lround(x)));
        rep.values = cfg.synthetic_y;
        const FitResult pw = fit_power_law(cfg.synthetic_x, cfg.synthetic_y);
        const FitResult ex = fit_exponential(cfg.synthetic_x, cfg.synthetic_y);
        rep.score = pw.rss - ex.rss;
        if (pw.rss <= ex.rss) {
            rep.preferred = ScalingReport::Preferred::Power;
            rep.best = pw;
            rep.alt = ex;
        } else {
            rep.preferred = ScalingReport::Preferred::Exponential;
            rep.best = ex;
            rep.alt = pw;
        }
        rr.reports.push_back(std::move(rep));
        return rr;
    }

    cfg.validate();
    if (!cfg.sweep.empty())
        throw std::invalid_argument("scaling: campaigns run at the base point, drop the sweep");
    if (cfg.sizes.size() < 3)
        throw std::invalid_argument("scaling: needs at least three sizes");
    if (cfg.quantities.empty())
        throw std::invalid_argument("scaling: select at least one quantity");

    ScanConfig point = cfg;
    point.sweep.clear();
    const ScanTable scan = run_scan(point);
    rr.table.flagged_rows = scan.flagged_rows;

    rr.table.columns = {"n"};
    for (const auto& q : cfg.quantities) rr.table.columns.push_back(sanitize(q));

    std::vector<std::vector<double>> series(cfg.quantities.size());
    for (std::size_t r = 0; r < scan.rows.size(); ++r) {
        std::vector<double> row = {scan.rows[r][0]};
        for (std::size_t qi = 0; qi < cfg.quantities.size(); ++qi) {
            const double v = quantity_value(cfg.quantities[qi], scan, scan.rows[r], cfg.axes);
            series[qi].push_back(v);
            row.push_back(v);
        }
        rr.table.rows.push_back(std::move(row));
    }
    for (std::size_t qi = 0; qi < cfg.quantities.size(); ++qi)
        rr.reports.push_back(classify_scaling(cfg.quantities[qi], cfg.sizes, series[qi]));
    return rr;
}

void emit(const ScanTable& table, const std::vector<ScalingReport>& reports,
          const ScanConfig& cfg, std::ostream& os) {
    if (cfg.format == "json") {
        json j;
        j["config"] = config_echo(cfg);
        j["columns"] = table.columns;
        j["rows"] = table.rows;
        json reps = json::array();
        for (const auto& rep : reports) {
            json r;
            r["quantity"] = rep.quantity;
            r["sizes"] = rep.sizes;
            r["values"] = rep.values;
            r["preferred"] =
                rep.preferred == ScalingReport::Preferred::Power ? "power" : "exponential";
            r["score"] = rep.score;
            r["best"] = fit_json(rep.best);
            r["alt"] = fit_json(rep.alt);
            reps.push_back(std::move(r));
        }
        j["reports"] = reps;
        os << j.dump(2) << '\n';
        return;
    }

    for (std::size_t c = 0; c < table.columns.size(); ++c)
        os << table.columns[c] << (c + 1 < table.columns.size() ? "," : "\n");
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c)
            os << fmt12(row[c]) << (c + 1 < row.size() ? "," : "\n");
    }
    for (const auto& rep : reports) {
        os << "# scaling " << rep.quantity << " preferred="
           << (rep.preferred == ScalingReport::Preferred::Power ? "power" : "exponential")
           << " power: m=" << fmt12(rep.preferred == ScalingReport::Preferred::Power
                                        ? rep.best.m
                                        : rep.alt.m)
           << " rss=" << fmt12(rep.preferred == ScalingReport::Preferred::Power ? rep.best.rss
                                                                                : rep.alt.rss)
           << " | exponential: lambda=" << fmt12(rep.preferred == ScalingReport::Preferred::Power
                                                     ? rep.alt.lambda_e
                                                     : rep.best.lambda_e)
           << " rss=" << fmt12(rep.preferred == ScalingReport::Preferred::Power ? rep.alt.rss
                                                                                : rep.best.rss)
           << " | score=" << fmt12(rep.score) << '\n';
    }
}

void emit(const ScanTable& table, const std::vector<ScalingReport>& reports,
          const ScanConfig& cfg) {
    if (cfg.out == "-") {
        emit(table, reports, cfg, std::cout);
        return;
    }
    std::ofstream out(cfg.out, std::ios::binary);
    if (!out) throw std::runtime_error("emit: cannot open " + cfg.out);
    emit(table, reports, cfg, out);
}

} // namespace spinmetro
