#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace spinmetro {

using cplx = std::complex<double>;

enum class ModelKind { FerroIsing, AntiferroIsing, XYChain };

enum class SpinAxis : int { X = 0, Y = 1, Z = 2 };

inline char axis_name(SpinAxis a) { return "xyz"[static_cast<int>(a)]; }

// One spin chain, periodic boundary. The Ising kinds carry a three-component
// field (hx, hy, hz); the XY kind carries (gamma, lambda) and its metrology
// parameters are rotation angles, not fields.
struct ModelSpec {
    ModelKind kind = ModelKind::FerroIsing;
    int n = 3;
    double hx = 0.0, hy = 0.0, hz = 0.0;
    double gamma = 1.0, lambda = 0.0;

    // 2^n amplitudes at n = 20 is ~16 MiB per state; beyond that the
    // free-fermion path must be used instead.
    int max_sites = 20;

    void validate() const {
        if (n < 3) throw std::invalid_argument("ModelSpec: n >= 3 required (periodic wrap)");
        if (n > max_sites)
            throw std::invalid_argument("ModelSpec: n = " + std::to_string(n) +
                                        " exceeds the 2^n memory cap (max_sites = " +
                                        std::to_string(max_sites) + ")");
        if (kind == ModelKind::XYChain) {
            if (gamma <= 0.0 || gamma > 1.0)
                throw std::invalid_argument("ModelSpec: XY gamma must lie in (0, 1]");
            if (lambda < 0.0) throw std::invalid_argument("ModelSpec: XY lambda must be >= 0");
        }
    }

    std::size_t dim() const { return std::size_t{1} << n; }
};

} // namespace spinmetro
