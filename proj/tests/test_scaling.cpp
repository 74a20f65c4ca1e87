#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "spinmetro/scaling.hpp"

using namespace spinmetro;

namespace {

ModelSpec ferro(int n, double hx, double hz = 0.0) {
    ModelSpec s;
    s.kind = ModelKind::FerroIsing;
    s.n = n;
    s.hx = hx;
    s.hz = hz;
    return s;
}

} // namespace

TEST_CASE("fitters recover synthetic laws exactly") {
    SUBCASE("power law") {
        std::vector<double> x{1, 2, 4, 8, 16}, y;
        for (double v : x) y.push_back(5.0 * std::pow(v, 2.5));
        auto f = fit_power_law(x, y);
        CHECK(f.m == doctest::Approx(2.5).epsilon(1e-12));
        CHECK(std::pow(10.0, f.a) == doctest::Approx(5.0).epsilon(1e-12));
        CHECK(f.rss < 1e-22);
        CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(f.npoints == 5);
    }
    SUBCASE("exponential") {
        std::vector<double> x{0, 1, 2, 3, 4}, y;
        for (double v : x) y.push_back(5.0 * std::exp(0.5 * v));
        auto f = fit_exponential(x, y);
        CHECK(f.lambda_e == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(f.A == doctest::Approx(5.0).epsilon(1e-12));
        CHECK(f.rss < 1e-22);
    }
    SUBCASE("linear") {
        std::vector<double> x{-1, 0, 1, 2, 5}, y;
        for (double v : x) y.push_back(2.0 - 3.0 * v);
        auto f = fit_linear(x, y);
        CHECK(f.c0 == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(f.c1 == doctest::Approx(-3.0).epsilon(1e-12));
        CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("parabola") {
        std::vector<double> x{-2, -1, 0, 1, 2}, y;
        for (double v : x) y.push_back(1.0 + 2.0 * v - 0.5 * v * v);
        auto f = fit_parabola(x, y);
        CHECK(f.c0 == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(f.c1 == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(f.c2 == doctest::Approx(-0.5).epsilon(1e-12));
        CHECK(f.npoints == 5);
    }
    SUBCASE("model mismatch shows up in the diagnostics") {
        std::vector<double> x{0, 1, 2, 3, 4}, y;
        for (double v : x) y.push_back(1.0 + v * v);
        auto f = fit_linear(x, y);
        CHECK(f.rss > 1.0);
        CHECK(f.r2 < 1.0);
    }
    SUBCASE("bad input is rejected") {
        std::vector<double> two{1, 2}, three{1, 2, 3};
        CHECK_THROWS_AS(fit_linear(two, three), std::invalid_argument);
        CHECK_THROWS_AS(fit_linear({1.0}, {1.0}), std::invalid_argument);
        CHECK_THROWS_AS(fit_parabola(two, two), std::invalid_argument);
        CHECK_THROWS_AS(fit_power_law({1, -2}, {1, 2}), std::invalid_argument);
        CHECK_THROWS_AS(fit_power_law({1, 2}, {1, 0}), std::invalid_argument);
        CHECK_THROWS_AS(fit_exponential({1, 2}, {1, -1}), std::invalid_argument);
        CHECK_THROWS_AS(fit_linear({1, std::nan("")}, {1, 2}), std::invalid_argument);
    }
}

TEST_CASE("classification separates exponential from power decay") {
    std::vector<int> sizes{6, 8, 10, 12, 14, 16};
    SUBCASE("exponential input") {
        std::vector<double> v;
        for (int L : sizes) v.push_back(std::pow(2.0, -L));
        auto rep = classify_scaling("gap", sizes, v);
        CHECK(rep.preferred == ScalingReport::Preferred::Exponential);
        CHECK(rep.best.lambda_e == doctest::Approx(-std::log(2.0)).epsilon(1e-10));
        CHECK(rep.score > 0.0);
        CHECK(rep.quantity == "gap");
        CHECK(rep.values.size() == sizes.size());
    }
    SUBCASE("power input") {
        std::vector<double> v;
        for (int L : sizes) v.push_back(7.0 * std::pow(double(L), -2.0));
        auto rep = classify_scaling("gap", sizes, v);
        CHECK(rep.preferred == ScalingReport::Preferred::Power);
        CHECK(rep.best.m == doctest::Approx(-2.0).epsilon(1e-10));
        CHECK(rep.score < 0.0);
    }
    SUBCASE("nonpositive values are rejected") {
        CHECK_THROWS_AS(classify_scaling("gap", {4, 6, 8}, {1.0, 2.0, 0.0}),
                        std::invalid_argument);
    }
}

TEST_CASE("gap scaling on the chain families") {
    SUBCASE("ordered phase closes exponentially") {
        auto rep = gap_scaling(ferro(0, 0.5), {6, 8, 10, 12});
        CHECK(rep.preferred == ScalingReport::Preferred::Exponential);
        CHECK(rep.best.lambda_e < 0.0);
        // doublet splitting tracks hx^n, so the rate sits near ln(1/2)
        CHECK(rep.best.lambda_e == doctest::Approx(std::log(0.5)).epsilon(0.2));
    }
    SUBCASE("critical point closes algebraically") {
        auto rep = gap_scaling(ferro(0, 1.0), {6, 8, 10, 12});
        CHECK(rep.preferred == ScalingReport::Preferred::Power);
        CHECK(rep.best.m == doctest::Approx(-1.0).epsilon(0.2));
    }
}

TEST_CASE("critical point location by susceptibility peak") {
    SUBCASE("interior peak is refined") {
        auto r = locate_critical_point(ferro(0, 0.0), SpinAxis::X, {0.7, 0.9, 1.1, 1.3}, 10);
        CHECK(!r.boundary);
        CHECK(r.profile.size() == 4);
        CHECK(std::abs(r.lambda_star - 1.0) < 0.12);
        CHECK(r.lambda_star >= 0.7);
        CHECK(r.lambda_star <= 1.3);
    }
    SUBCASE("edge argmax is reported, not refined") {
        auto r = locate_critical_point(ferro(0, 0.0), SpinAxis::X, {1.5, 1.7, 1.9}, 8);
        CHECK(r.boundary);
        CHECK(r.lambda_star == 1.5);
    }
}

TEST_CASE("half maximum width of a synthetic drop") {
    auto lorentz = [](double d, double w) { return 1.0 / (1.0 + (d / w) * (d / w)); };
    SUBCASE("width recovered from log-spaced samples") {
        const double w = 1e-3;
        std::vector<std::array<double, 2>> sweep;
        for (double d = 1e-5; d < 0.2; d *= 1.9)
            sweep.push_back({0.3 + d, lorentz(d, w)});
        auto r = drop_rate(sweep, 0.3);
        CHECK(!r.resolution_limited);
        CHECK(r.width == doctest::Approx(w).epsilon(0.25));
        CHECK(r.rate == doctest::Approx(1.0 / r.width).epsilon(1e-12));
    }
    SUBCASE("plateau wider than the sweep is flagged") {
        std::vector<std::array<double, 2>> sweep;
        for (double d = 1e-5; d < 0.2; d *= 1.9)
            sweep.push_back({0.3 + d, lorentz(d, 10.0)});
        auto r = drop_rate(sweep, 0.3);
        CHECK(r.resolution_limited);
    }
    SUBCASE("drop inside the innermost sample is flagged") {
        std::vector<std::array<double, 2>> sweep;
        for (double d = 1e-3; d < 0.2; d *= 1.9)
            sweep.push_back({0.3 + d, lorentz(d, 1e-5)});
        auto r = drop_rate(sweep, 0.3);
        CHECK(r.resolution_limited);
    }
}

TEST_CASE("avoided crossing prediction for the first order response") {
    auto rep = qfim_first_order_scaling(ferro(0, 0.5), {7, 8, 9},
                                        {SpinAxis::Z, SpinAxis::X});
    REQUIRE(rep.fq.values.size() == 3);
    REQUIRE(rep.ratio.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CAPTURE(i);
        CHECK(rep.gap[i] > 0.0);
        CHECK(rep.dE[i] > 0.0);
        CHECK(rep.predicted[i] > 0.0);
        // measured response against (dE)^2 / gap^2, same order of magnitude
        CHECK(rep.ratio[i] > 0.1);
        CHECK(rep.ratio[i] < 10.0);
        CHECK(rep.r_pair[i] >= 0.0);
        CHECK(rep.r_pair[i] <= 1.0 + 1e-3);
        if (i) {
            CHECK(rep.gap[i] < rep.gap[i - 1]);
            CHECK(rep.fq.values[i] > rep.fq.values[i - 1]);
        }
    }
    CHECK(rep.fq.values[2] / rep.fq.values[0] > 10.0);
    CHECK(rep.fq.preferred == ScalingReport::Preferred::Exponential);
}
