#pragma once

// Independent reference constructions for the test suites. Everything here
// is built the slow, literal way (dense Kronecker products, full
// diagonalization, central finite differences) so that agreement with the
// library is a genuine cross-check, not a tautology.

#include <cassert>
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "spinmetro/eigensolver.hpp"
#include "spinmetro/model.hpp"
#include "spinmetro/sparse_operator.hpp"

namespace oracle {

using spinmetro::cplx;
using spinmetro::ModelKind;
using spinmetro::ModelSpec;
using spinmetro::SpinAxis;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline Mat pauli(char which) {
    Mat m = Mat::Zero(2, 2);
    const cplx I(0.0, 1.0);
    switch (which) {
        case 'i': m(0, 0) = 1; m(1, 1) = 1; break;
        case 'x': m(0, 1) = 1; m(1, 0) = 1; break;
        case 'y': m(0, 1) = -I; m(1, 0) = I; break;
        case 'z': m(0, 0) = 1; m(1, 1) = -1; break;
        default: assert(false);
    }
    return m;
}

inline Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// sigma^axis acting on bit `site` of an n-spin register. Bit 0 is the least
// significant bit, so the operator sits at factor position n-1-site counting
// from the left of the tensor product.
inline Mat site_op(int n, int site, char axis) {
    Mat left = Mat::Identity(1 << (n - 1 - site), 1 << (n - 1 - site));
    Mat right = Mat::Identity(1 << site, 1 << site);
    return kron(left, kron(pauli(axis), right));
}

inline Mat dense_hamiltonian(const ModelSpec& s) {
    const int n = s.n;
    const std::size_t d = std::size_t{1} << n;
    Mat H = Mat::Zero(d, d);
    auto bond = [&](char axis, int i, double coeff) {
        H += coeff * (site_op(n, i, axis) * site_op(n, (i + 1) % n, axis));
    };
    auto field = [&](char axis, double coeff) {
        if (coeff == 0.0) return;
        for (int i = 0; i < n; ++i) H += coeff * site_op(n, i, axis);
    };
    switch (s.kind) {
        case ModelKind::FerroIsing:
            for (int i = 0; i < n; ++i) bond('z', i, -1.0);
            field('x', s.hx); field('y', s.hy); field('z', s.hz);
            break;
        case ModelKind::AntiferroIsing:
            for (int i = 0; i < n; ++i) bond('z', i, +1.0);
            field('x', -s.hx); field('y', -s.hy); field('z', -s.hz);
            break;
        case ModelKind::XYChain:
            for (int i = 0; i < n; ++i) {
                bond('x', i, -(1.0 + s.gamma) / 2.0);
                bond('y', i, -(1.0 - s.gamma) / 2.0);
            }
            field('z', -s.lambda);
            break;
    }
    return H;
}

inline Mat dense_global_spin(int n, SpinAxis axis) {
    const std::size_t d = std::size_t{1} << n;
    Mat S = Mat::Zero(d, d);
    const char name = "xyz"[static_cast<int>(axis)];
    for (int i = 0; i < n; ++i) S += 0.5 * site_op(n, i, name);
    return S;
}

struct DensePair {
    double E0 = 0.0, E1 = 0.0;
    Vec v0, v1;
};

inline DensePair dense_two_lowest(const Mat& H) {
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    DensePair out;
    out.E0 = es.eigenvalues()(0);
    out.E1 = es.eigenvalues()(1);
    out.v0 = es.eigenvectors().col(0);
    out.v1 = es.eigenvectors().col(1);
    return out;
}

inline Eigen::VectorXd dense_spectrum(const Mat& H) {
    return Eigen::SelfAdjointEigenSolver<Mat>(H).eigenvalues();
}

// Continuity-tracked dense ground state: projection of `prev` onto the
// ground doublet when the gap closes, otherwise the plain ground vector
// phase-aligned with prev.
inline Vec dense_ground_tracked(const Mat& H, const Vec* prev, double degen_rel = 1e-8) {
    DensePair p = dense_two_lowest(H);
    Vec g = p.v0;
    const double thresh = degen_rel * std::max(std::abs(p.E0), 1.0);
    if (prev != nullptr && p.E1 - p.E0 < thresh) {
        cplx a0 = p.v0.dot(*prev), a1 = p.v1.dot(*prev);
        g = a0 * p.v0 + a1 * p.v1;
        if (g.norm() < 1e-8) g = p.v0; else g.normalize();
    }
    if (prev != nullptr) {
        cplx ov = prev->dot(g);
        if (std::abs(ov) > 1e-12) g *= std::conj(ov) / std::abs(ov);
    }
    return g;
}

// Ground state of n_hat(theta, phi) . sigma for one spin: the anti-aligned
// Bloch vector, the standard textbook family for Berry-curvature checks.
inline Vec bloch_ground(double theta, double phi) {
    Vec v(2);
    v(0) = -std::sin(theta / 2.0);
    v(1) = std::cos(theta / 2.0) * std::exp(cplx(0.0, phi));
    return v;
}

// Quantum geometric tensor by central finite differences with
// parallel-transport gauge fixing: each displaced state is phase-aligned to
// the center state before differencing. F = 4 Re chi, U = 2 Im chi.
struct QGT {
    Eigen::MatrixXd F, U;
};

inline QGT fd_qgt(const std::function<Vec(const Eigen::Vector3d&)>& family,
                  const Eigen::Vector3d& point, const std::vector<SpinAxis>& axes,
                  double step) {
    const int p = static_cast<int>(axes.size());
    Vec center = family(point);
    auto aligned = [&](const Eigen::Vector3d& at) {
        Vec v = family(at);
        cplx ov = center.dot(v);
        assert(std::abs(ov) > 1e-6);
        return Vec(v * (std::conj(ov) / std::abs(ov)));
    };
    std::vector<Vec> deriv(p);
    for (int k = 0; k < p; ++k) {
        Eigen::Vector3d e = Eigen::Vector3d::Zero();
        e(static_cast<int>(axes[k])) = step;
        deriv[k] = (aligned(point + e) - aligned(point - e)) / (2.0 * step);
    }
    QGT out;
    out.F.setZero(p, p);
    out.U.setZero(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
            cplx chi = deriv[i].dot(deriv[j]) - deriv[i].dot(center) * center.dot(deriv[j]);
            out.F(i, j) = 4.0 * chi.real();
            out.U(i, j) = 2.0 * chi.imag();
        }
    // symmetrize away the O(step^2) asymmetry so the tensors have the exact
    // algebraic structure downstream checks assume
    out.F = ((out.F + out.F.transpose()) / 2.0).eval();
    out.U = ((out.U - out.U.transpose()) / 2.0).eval();
    return out;
}

inline Vec basis_state(int n, std::uint64_t b) {
    Vec v = Vec::Zero(std::size_t{1} << n);
    v(b) = 1.0;
    return v;
}

inline Vec ghz(int n) {
    Vec v = Vec::Zero(std::size_t{1} << n);
    v(0) = v((std::size_t{1} << n) - 1) = 1.0 / std::sqrt(2.0);
    return v;
}

inline Vec random_state(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Vec v(std::size_t{1} << n);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = cplx(g(rng), g(rng));
    v.normalize();
    return v;
}

inline spinmetro::SparseOperator random_sparse_hermitian(std::size_t dim, int per_row,
                                                         std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint64_t> col(0, dim - 1);
    std::normal_distribution<double> g;
    std::vector<spinmetro::Triplet> trip;
    for (std::uint64_t r = 0; r < dim; ++r) {
        trip.push_back({r, r, cplx(g(rng), 0.0)});
        for (int k = 0; k < per_row; ++k) {
            std::uint64_t c = col(rng);
            if (c == r) continue;
            cplx v(g(rng), g(rng));
            trip.push_back({r, c, v});
            trip.push_back({c, r, std::conj(v)});
        }
    }
    return spinmetro::SparseOperator::from_triplets(dim, std::move(trip), true);
}

// Exact even-parity-sector ground state of the XY chain: the Hamiltonian
// preserves popcount parity, so restricting to even-popcount basis states
// diagonalizes the sector directly with no doublet ambiguity.
struct XYEvenGround {
    double E0 = 0.0;
    Vec state;  // embedded in the full 2^n space
};

inline XYEvenGround xy_even_ground(int n, double gamma, double lambda) {
    ModelSpec s;
    s.kind = ModelKind::XYChain;
    s.n = n;
    s.gamma = gamma;
    s.lambda = lambda;
    Mat H = dense_hamiltonian(s);
    const std::size_t d = std::size_t{1} << n;
    std::vector<std::size_t> even;
    for (std::size_t b = 0; b < d; ++b)
        if (__builtin_popcountll(b) % 2 == 0) even.push_back(b);
    Mat Hs(even.size(), even.size());
    for (std::size_t i = 0; i < even.size(); ++i)
        for (std::size_t j = 0; j < even.size(); ++j) Hs(i, j) = H(even[i], even[j]);
    Eigen::SelfAdjointEigenSolver<Mat> es(Hs);
    XYEvenGround out;
    out.E0 = es.eigenvalues()(0);
    out.state = Vec::Zero(d);
    for (std::size_t i = 0; i < even.size(); ++i) out.state(even[i]) = es.eigenvectors()(i, 0);
    return out;
}

inline cplx expval(const Mat& op, const Vec& psi) { return psi.dot(op * psi); }

} // namespace oracle
