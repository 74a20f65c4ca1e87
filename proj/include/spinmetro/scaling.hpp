#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "spinmetro/metrology.hpp"
#include "spinmetro/model.hpp"

namespace spinmetro {

struct FitResult {
    enum class Model { PowerLaw, Exponential, Linear, Parabola };
    Model model = Model::Linear;
    // PowerLaw: y = 10^a * x^m (least squares on log10 coordinates)
    double m = 0.0, a = 0.0;
    // Exponential: y = A * exp(lambda_e * x) (least squares on x, ln y)
    double A = 0.0, lambda_e = 0.0;
    // Linear / Parabola: y = c0 + c1 x (+ c2 x^2)
    double c0 = 0.0, c1 = 0.0, c2 = 0.0;
    double rss = 0.0;  // on the linearized coordinates for the log models
    double r2 = 1.0;
    int npoints = 0;
};

FitResult fit_power_law(const std::vector<double>& x, const std::vector<double>& y);
FitResult fit_exponential(const std::vector<double>& x, const std::vector<double>& y);
FitResult fit_linear(const std::vector<double>& x, const std::vector<double>& y);
FitResult fit_parabola(const std::vector<double>& x, const std::vector<double>& y);

struct ScalingReport {
    std::string quantity;  // "F_xx", "det F", "det 2U", "R_xy", "gap", ...
    std::vector<int> sizes;
    std::vector<double> values;
    FitResult best;
    FitResult alt;
    enum class Preferred { Power, Exponential } preferred = Preferred::Power;
    double score = 0.0;  // rss(power) - rss(exponential) on linearized coords
};

// Fits both candidate models to values vs sizes and ranks them by rss on the
// respective linearization.
ScalingReport classify_scaling(const std::string& quantity, const std::vector<int>& sizes,
                               const std::vector<double>& values);

struct CriticalPointResult {
    double lambda_star = 0.0;
    bool boundary = false;  // grid argmax on the boundary: reported unrefined
    std::vector<std::array<double, 2>> profile;  // (parameter, F_xx)
};

// Argmax of F_xx along sweep_axis over `grid`, refined by golden-section to
// 1e-3 in the parameter. `n` overrides base.n.
CriticalPointResult locate_critical_point(const ModelSpec& base, SpinAxis sweep_axis,
                                          const std::vector<double>& grid, int n);

struct DropRate {
    double rate = 0.0;   // 1 / width
    double width = 0.0;  // |h_z - center| where R_xy first falls below half max
    bool resolution_limited = false;
};

// Half-maximum width of the R_xy(h_z) drop around `center`. The sweep is a
// list of (h_z, R_xy) points bracketing the center; the crossing is
// interpolated linearly in log10 |h_z - center|.
DropRate drop_rate(const std::vector<std::array<double, 2>>& sweep, double center);

// Gap Delta0(L) at the family's fixed couplings over the given sizes,
// classified exponential vs power law.
ScalingReport gap_scaling(const ModelSpec& family, const std::vector<int>& sizes);

struct FirstOrderScalingReport {
    ScalingReport fq;                // measured F_mu,mu per size
    std::vector<double> gap;         // Delta0 per size
    std::vector<double> dE;          // |dE/dlambda_mu| per size (branch slope)
    std::vector<double> predicted;   // (dE)^2 / Delta0^2
    std::vector<double> ratio;       // measured / predicted
    std::vector<double> r_pair;      // R for the axis pair at the same points
};

// Measured F along axes.first vs the avoided-crossing prediction
// (dE)^2 / Delta0^2, plus the R bound data for the pair. The gap derivative
// is a central difference away from the crossing and the averaged one-sided
// slope on it (the gap is V-shaped in h_z at the first-order line, where the
// plain central difference cancels to zero).
FirstOrderScalingReport qfim_first_order_scaling(const ModelSpec& family,
                                                 const std::vector<int>& sizes,
                                                 std::pair<SpinAxis, SpinAxis> axes);

} // namespace spinmetro
