#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "spinmetro/metrology.hpp"
#include "spinmetro/model.hpp"
#include "spinmetro/scaling.hpp"

namespace spinmetro {

struct SweepSpec {
    std::string param;  // "hx", "hy", "hz", "lambda"
    double start = 0.0, stop = 0.0;
    int steps = 1;
};

struct ScanConfig {
    ModelSpec model;
    std::vector<SweepSpec> sweep;  // empty = single point
    std::vector<int> sizes;        // empty = just model.n
    std::vector<SpinAxis> axes{SpinAxis::X, SpinAxis::Y, SpinAxis::Z};
    MetroMethod method = MetroMethod::FidelityBargmann;

    double delta0 = 1e-3;
    int ladder = 6;
    std::vector<double> loop_areas;  // empty = defaults chosen per point
    double tol = 1e-10;
    std::uint64_t seed = 12345;
    int threads = 0;  // 0 = hardware concurrency

    std::string out = "-";  // "-" = stdout
    std::string format = "csv";

    // scaling-campaign extras
    std::vector<std::string> quantities;  // e.g. F_xx, F_yy, det F, det 2U, R_xy, gap
    std::vector<double> synthetic_x, synthetic_y;  // passthrough fit mode

    void validate() const;
};

// Flat numeric table; NaN marks undefined cells, flag columns are 0/1.
struct ScanTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    int flagged_rows = 0;  // rows with any failure flag set
};

// Key=value config file (# comments, blank lines ignored). Throws
// std::invalid_argument with a line diagnostic on malformed input.
ScanConfig parse_config_file(const std::string& path);
void apply_config_entry(ScanConfig& cfg, const std::string& key, const std::string& value);

// metro_point on every (size, sweep point), rows in size-major sweep order.
// Points of a tracked sweep line run sequentially (state continuity); sizes
// are independent work items. Identical config + seed gives byte-identical
// emitted output.
ScanTable run_scan(const ScanConfig& cfg);

struct ScalingRunResult {
    ScanTable table;  // quantity values per size
    std::vector<ScalingReport> reports;
};

// Scan per size, then the scaling fits for each selected quantity. With
// synthetic_x/synthetic_y set, skips the scans and fits the supplied data
// directly (plumbing identity for the fitters).
ScalingRunResult run_scaling(const ScanConfig& cfg);

// CSV: 12-significant-digit records, "nan" for undefined, newline-terminated;
// fit reports ride along as '#'-prefixed trailer lines. JSON: config echo
// (defaults included), columns, rows, reports.
void emit(const ScanTable& table, const std::vector<ScalingReport>& reports,
          const ScanConfig& cfg, std::ostream& os);
void emit(const ScanTable& table, const std::vector<ScalingReport>& reports,
          const ScanConfig& cfg);  // writes to cfg.out ("-" = stdout)

} // namespace spinmetro
