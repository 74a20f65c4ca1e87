#include "spinmetro/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "spinmetro/eigensolver.hpp"

namespace spinmetro {

namespace {

void check_xy(const std::vector<double>& x, const std::vector<double>& y,
              std::size_t min_points) {
    if (x.size() != y.size()) throw std::invalid_argument("fit: size mismatch");
    if (x.size() < min_points) throw std::invalid_argument("fit: too few points");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
            throw std::invalid_argument("fit: nonfinite input");
}

// least squares on a polynomial design matrix; fills rss/r2 on the given
// coordinates and returns the coefficients
Eigen::VectorXd poly_ls(const std::vector<double>& x, const std::vector<double>& y,
                        int degree, FitResult& out) {
    const int np = int(x.size());
    Eigen::MatrixXd design(np, degree + 1);
    Eigen::VectorXd rhs(np);
    for (int i = 0; i < np; ++i) {
        double p = 1.0;
        for (int d = 0; d <= degree; ++d) {
            design(i, d) = p;
            p *= x[i];
        }
        rhs(i) = y[i];
    }
    Eigen::VectorXd coef = design.colPivHouseholderQr().solve(rhs);
    const Eigen::VectorXd resid = rhs - design * coef;
    out.rss = resid.squaredNorm();
    const double mean = rhs.mean();
    const double tss = (rhs.array() - mean).matrix().squaredNorm();
    out.r2 = tss > 1e-300 ? 1.0 - out.rss / tss : (out.rss < 1e-300 ? 1.0 : 0.0);
    out.npoints = np;
    return coef;
}

} // namespace

FitResult fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
    check_xy(x, y, 2);
    std::vector<double> u, v;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] <= 0.0 || y[i] <= 0.0)
            throw std::invalid_argument("fit_power_law: positive data required");
        u.push_back(std::log10(x[i]));
        v.push_back(std::log10(y[i]));
    }
    FitResult f;
    f.model = FitResult::Model::PowerLaw;
    Eigen::VectorXd c = poly_ls(u, v, 1, f);
    f.a = c(0);
    f.m = c(1);
    return f;
}

FitResult fit_exponential(const std::vector<double>& x, const std::vector<double>& y) {
    check_xy(x, y, 2);
    std::vector<double> v;
    for (double yi : y) {
        if (yi <= 0.0) throw std::invalid_argument("fit_exponential: positive data required");
        v.push_back(std::log(yi));
    }
    FitResult f;
    f.model = FitResult::Model::Exponential;
    Eigen::VectorXd c = poly_ls(x, v, 1, f);
    f.A = std::exp(c(0));
    f.lambda_e = c(1);
    return f;
}

FitResult fit_linear(const std::vector<double>& x, const std::vector<double>& y) {
    check_xy(x, y, 2);
    FitResult f;
    f.model = FitResult::Model::Linear;
    Eigen::VectorXd c = poly_ls(x, y, 1, f);
    f.c0 = c(0);
    f.c1 = c(1);
    return f;
}

FitResult fit_parabola(const std::vector<double>& x, const std::vector<double>& y) {
    check_xy(x, y, 3);
    FitResult f;
    f.model = FitResult::Model::Parabola;
    Eigen::VectorXd c = poly_ls(x, y, 2, f);
    f.c0 = c(0);
    f.c1 = c(1);
    f.c2 = c(2);
    return f;
}

ScalingReport classify_scaling(const std::string& quantity, const std::vector<int>& sizes,
                               const std::vector<double>& values) {
    if (sizes.size() != values.size() || sizes.size() < 3)
        throw std::invalid_argument("classify_scaling: need >= 3 matched points");
    for (double v : values)
        if (!(v > 0.0))
            throw std::invalid_argument("classify_scaling: " + quantity +
                                        " must be positive to compare the log models");
    std::vector<double> x(sizes.begin(), sizes.end());
    ScalingReport rep;
    rep.quantity = quantity;
    rep.sizes = sizes;
    rep.values = values;
    FitResult pw = fit_power_law(x, values);
    FitResult ex = fit_exponential(x, values);
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
    return rep;
}

namespace {

Eigen::Vector3d base_point(const ModelSpec& s) { return {s.hx, s.hy, s.hz}; }

double qfi_along(const ModelSpec& spec, Eigen::Vector3d point, SpinAxis axis) {
    return qfim_fidelity(spec, point, {axis}).F(0, 0);
}

} // namespace

CriticalPointResult locate_critical_point(const ModelSpec& base, SpinAxis sweep_axis,
                                          const std::vector<double>& grid, int n) {
    if (grid.size() < 3) throw std::invalid_argument("locate_critical_point: grid too small");
    if (!std::is_sorted(grid.begin(), grid.end()))
        throw std::invalid_argument("locate_critical_point: grid must be ascending");
    ModelSpec spec = base;
    spec.n = n;
    spec.validate();

    auto eval = [&](double g) {
        Eigen::Vector3d p = base_point(spec);
        p(int(sweep_axis)) = g;
        return qfi_along(spec, p, SpinAxis::X);
    };

    CriticalPointResult out;
    std::size_t best = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double f = eval(grid[i]);
        out.profile.push_back({grid[i], f});
        if (f > out.profile[best][1]) best = i;
    }
    if (best == 0 || best + 1 == grid.size()) {
        out.boundary = true;
        out.lambda_star = grid[best];
        return out;
    }

    // golden-section refinement between the argmax neighbors
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = grid[best - 1], b = grid[best + 1];
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = eval(c), fd = eval(d);
    while (b - a > 1e-3) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = eval(d);
        }
    }
    out.lambda_star = 0.5 * (a + b);
    return out;
}

DropRate drop_rate(const std::vector<std::array<double, 2>>& sweep, double center) {
    if (sweep.size() < 2) throw std::invalid_argument("drop_rate: need at least two points");
    struct Pt {
        double d, r;
    };
    std::vector<Pt> pts;
    double rmax = 0.0;
    bool have_center = false;
    double center_val = 0.0;
    for (const auto& s : sweep) {
        const double d = std::abs(s[0] - center);
        if (d <= 0.0) {
            // the center sample carries no distance information but anchors
            // the peak height
            have_center = true;
            center_val = std::max(center_val, s[1]);
            continue;
        }
        pts.push_back({d, s[1]});
        rmax = std::max(rmax, s[1]);
    }
    if (pts.size() < 2) throw std::invalid_argument("drop_rate: sweep collapses onto center");
    std::sort(pts.begin(), pts.end(), [](const Pt& a, const Pt& b) { return a.d < b.d; });

    const double half = 0.5 * (have_center ? center_val : rmax);
    DropRate out;
    if (pts.front().r <= half) {
        // already below half maximum at the innermost sample: the drop is
        // sharper than the sweep resolution
        out.width = pts.front().d;
        out.rate = 1.0 / out.width;
        out.resolution_limited = true;
        return out;
    }
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (pts[i].r < half && pts[i - 1].r >= half) {
            if (i == 1 && !have_center) {
                // the crossing sits in the innermost interval with nothing
                // anchoring the peak, so the width is only an upper bound
                out.width = pts.front().d;
                out.rate = 1.0 / out.width;
                out.resolution_limited = true;
                return out;
            }
            const double u0 = std::log10(pts[i - 1].d), u1 = std::log10(pts[i].d);
            const double t = (half - pts[i - 1].r) / (pts[i].r - pts[i - 1].r);
            out.width = std::pow(10.0, u0 + t * (u1 - u0));
            out.rate = 1.0 / out.width;
            return out;
        }
    }
    out.width = pts.back().d;
    out.rate = 1.0 / out.width;
    out.resolution_limited = true;  // never fell below half maximum inside the sweep
    return out;
}

ScalingReport gap_scaling(const ModelSpec& family, const std::vector<int>& sizes) {
    std::vector<double> gaps;
    for (int n : sizes) {
        ModelSpec s = family;
        s.n = n;
        s.validate();
        auto r = ground_state_tracked(s, std::nullopt);
        if (!(r.gap > 0.0))
            throw std::runtime_error("gap_scaling: gap unresolved at n = " + std::to_string(n));
        gaps.push_back(r.gap);
    }
    return classify_scaling("gap", sizes, gaps);
}

FirstOrderScalingReport qfim_first_order_scaling(const ModelSpec& family,
                                                 const std::vector<int>& sizes,
                                                 std::pair<SpinAxis, SpinAxis> axes) {
    FirstOrderScalingReport rep;
    std::vector<double> fvals;
    const int mu = int(axes.first);
    for (int n : sizes) {
        ModelSpec s = family;
        s.n = n;
        s.validate();
        const Eigen::Vector3d p0 = base_point(s);

        auto gap_at = [&](double off) {
            ModelSpec sp = s;
            Eigen::Vector3d p = p0;
            p(mu) += off;
            sp.hx = p(0);
            sp.hy = p(1);
            sp.hz = p(2);
            return ground_state_tracked(sp, std::nullopt).gap;
        };

        const double g0 = gap_at(0.0);
        rep.gap.push_back(g0);

        // branch slope of the level splitting. On the crossing the gap is
        // V-shaped, so differentiate one-sidedly on each flank and average;
        // away from it fall back to the plain central difference.
        const double d1 = 5e-3, d2 = 1e-2;
        const double gp1 = gap_at(d1), gp2 = gap_at(d2);
        const double gm1 = gap_at(-d1), gm2 = gap_at(-d2);
        double slope;
        if (g0 < gp1 && g0 < gm1) {
            const double sp = std::abs(gp2 - gp1) / (d2 - d1);
            const double sm = std::abs(gm2 - gm1) / (d2 - d1);
            slope = 0.5 * (sp + sm);
        } else {
            slope = std::abs(gp1 - gm1) / (2.0 * d1);
        }
        rep.dE.push_back(slope);
        rep.predicted.push_back(g0 > 0.0 ? slope * slope / (g0 * g0) : 0.0);

        const double fmeas = qfi_along(s, p0, axes.first);
        fvals.push_back(fmeas);
        rep.ratio.push_back(rep.predicted.back() > 0.0 ? fmeas / rep.predicted.back() : 0.0);

        auto t = metro_point(s, p0, {axes.first, axes.second}, MetroMethod::FidelityBargmann);
        rep.r_pair.push_back(t.R_pair(0, 1));
    }
    rep.fq = classify_scaling(std::string("F_") + axis_name(axes.first) + axis_name(axes.first),
                              sizes, fvals);
    return rep;
}

} // namespace spinmetro
