#include "spinmetro/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "spinmetro/pauli.hpp"

namespace spinmetro {

namespace {

Eigen::VectorXcd random_unit(std::size_t dim, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXcd v(dim);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = cplx(g(rng), g(rng));
    v.normalize();
    return v;
}

void project_out(Eigen::VectorXcd& w, const std::vector<const Eigen::VectorXcd*>& dirs) {
    for (const auto* d : dirs) w -= (*d) * d->dot(w);
}

struct RitzRun {
    double theta = 0.0;
    Eigen::VectorXcd y;
    int iterations = 0;
    bool converged = false;
    double residual = std::numeric_limits<double>::infinity();
};

// Lowest Ritz pair of op restricted to the orthogonal complement of `deflate`.
// Full reorthogonalization; convergence is decided on the explicit residual
// of the assembled Ritz vector, never on the value-stagnation heuristic alone.
RitzRun lowest_ritz(const SparseOperator& op, const std::vector<const Eigen::VectorXcd*>& deflate,
                    const Eigen::VectorXcd* guess, double tol, int max_iter, std::mt19937_64& rng) {
    const std::size_t dim = op.dim();
    const int m_max = std::max(1, std::min<int>(max_iter, int(dim)));

    Eigen::VectorXcd v;
    if (guess != nullptr && std::size_t(guess->size()) == dim) {
        v = *guess;
        project_out(v, deflate);
        if (v.norm() > 1e-6)
            v.normalize();
        else
            guess = nullptr;
    }
    if (guess == nullptr || std::size_t(v.size()) != dim) {
        do {
            v = random_unit(dim, rng);
            project_out(v, deflate);
        } while (v.norm() < 1e-3);
        v.normalize();
    }

    std::vector<Eigen::VectorXcd> V;
    V.reserve(std::min<std::size_t>(m_max, 512));
    std::vector<double> alpha, beta;
    Eigen::VectorXcd w(dim);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;

    RitzRun best;
    double prev_theta = std::numeric_limits<double>::infinity();
    int stagnant = 0, next_check = 0;

    for (int j = 0; j < m_max; ++j) {
        V.push_back(v);
        op.apply(V[j], w);
        project_out(w, deflate);
        alpha.push_back(std::real(V[j].dot(w)));
        for (int pass = 0; pass < 2; ++pass)
            for (int i = 0; i <= j; ++i) w -= V[i] * V[i].dot(w);
        const double b = w.norm();

        const int m = j + 1;
        Eigen::VectorXd ad = Eigen::Map<const Eigen::VectorXd>(alpha.data(), m);
        Eigen::VectorXd bd = m > 1 ? Eigen::Map<const Eigen::VectorXd>(beta.data(), m - 1)
                                   : Eigen::VectorXd(0);
        tri.computeFromTridiagonal(ad, bd, Eigen::EigenvaluesOnly);
        const double theta = tri.eigenvalues()(0);
        const double scale = std::max(1.0, tri.eigenvalues().cwiseAbs().maxCoeff());

        if (j >= 4 && std::abs(theta - prev_theta) < 0.01 * tol * scale)
            ++stagnant;
        else
            stagnant = 0;
        prev_theta = theta;

        const bool breakdown = b < 1e-13 * scale;
        const bool last = (j == m_max - 1);
        if ((stagnant >= 2 && j >= next_check) || breakdown || last) {
            tri.computeFromTridiagonal(ad, bd, Eigen::ComputeEigenvectors);
            Eigen::VectorXd s = tri.eigenvectors().col(0);
            Eigen::VectorXcd y = Eigen::VectorXcd::Zero(dim);
            for (int i = 0; i < m; ++i) y += s(i) * V[i];
            project_out(y, deflate);
            y.normalize();
            Eigen::VectorXcd Hy = op.apply(y);
            project_out(Hy, deflate);
            const double ty = std::real(y.dot(Hy));
            const double res = (Hy - ty * y).norm();
            if (res < best.residual) {
                best.theta = ty;
                best.y = std::move(y);
                best.residual = res;
                best.iterations = m;
            }
            if (res < tol) {
                best.converged = true;
                break;
            }
            stagnant = 0;
            next_check = j + 5;
            if (last) break;
            if (breakdown) {
                // invariant subspace hit before convergence; open a new block
                Eigen::VectorXcd fresh;
                double norm = 0.0;
                for (int attempt = 0; attempt < 5 && norm < 1e-8; ++attempt) {
                    fresh = random_unit(dim, rng);
                    project_out(fresh, deflate);
                    for (int pass = 0; pass < 2; ++pass)
                        for (const auto& u : V) fresh -= u * u.dot(fresh);
                    norm = fresh.norm();
                }
                if (norm < 1e-8) break;  // nothing left to explore
                beta.push_back(0.0);
                v = fresh / norm;
                continue;
            }
        }
        if (last) break;
        beta.push_back(b);
        v = w / b;
    }
    if (best.y.size() == 0) {  // m_max == 1 corner
        best.y = V[0];
        best.theta = alpha[0];
        best.iterations = 1;
    }
    return best;
}

void canonical_phase(Eigen::VectorXcd& v) {
    Eigen::Index imax = 0;
    double amax = -1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        double a = std::abs(v(i));
        if (a > amax + 1e-15) {
            amax = a;
            imax = i;
        }
    }
    if (amax > 0) v *= std::conj(v(imax) / amax);
}

void finish_result(const SparseOperator& op, EigenResult& r, double degen_rel) {
    const double rawgap = r.E1 - r.E0;
    const double thr = degen_rel * std::abs(r.E0);
    r.degenerate = rawgap < thr;
    r.gap = r.degenerate ? 0.0 : std::max(rawgap, 0.0);
    r.residual = (op.apply(r.ground) - r.E0 * r.ground).norm();
}

} // namespace

EigenResult lanczos_lowest(const SparseOperator& op, const LanczosOptions& opt) {
    if (!op.hermitian()) throw std::invalid_argument("lanczos_lowest: Hermitian operator required");
    if (op.dim() < 2) throw std::invalid_argument("lanczos_lowest: dim >= 2 required");

    std::mt19937_64 rngA(opt.seed), rngB(opt.seed ^ 0x9e3779b97f4a7c15ull);
    const Eigen::VectorXcd* g = opt.guess ? &*opt.guess : nullptr;
    RitzRun A = lowest_ritz(op, {}, g, opt.tol, opt.max_iter, rngA);
    RitzRun B = lowest_ritz(op, {&A.y}, nullptr, opt.tol, opt.max_iter, rngB);

    // Rayleigh-Ritz across the pair; near-degenerate doublets come out of the
    // two runs mixed, and this 2x2 rotation is what separates them cleanly.
    Eigen::VectorXcd y0 = A.y, y1 = B.y;
    y1 -= y0 * y0.dot(y1);
    y1.normalize();
    Eigen::VectorXcd H0 = op.apply(y0), H1 = op.apply(y1);
    Eigen::Matrix2cd M;
    M << y0.dot(H0), y0.dot(H1), y1.dot(H0), y1.dot(H1);
    M = (0.5 * (M + M.adjoint())).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(M);

    EigenResult r;
    r.E0 = es.eigenvalues()(0);
    r.E1 = es.eigenvalues()(1);
    r.ground = es.eigenvectors()(0, 0) * y0 + es.eigenvectors()(1, 0) * y1;
    r.excited = es.eigenvectors()(0, 1) * y0 + es.eigenvectors()(1, 1) * y1;
    r.ground.normalize();
    r.excited.normalize();
    r.iterations = A.iterations + B.iterations;
    finish_result(op, r, opt.degeneracy_threshold_rel);
    r.converged = A.converged && B.converged && r.residual < opt.tol;
    return r;
}

EigenResult lanczos_lowest(const SparseOperator& op, int k, double tol, int max_iter,
                           std::uint64_t seed) {
    if (k != 2) throw std::invalid_argument("lanczos_lowest: k = 2 is the supported contract");
    LanczosOptions opt;
    opt.tol = tol;
    opt.max_iter = max_iter;
    opt.seed = seed;
    return lanczos_lowest(op, opt);
}

EigenResult dense_lowest(const SparseOperator& op, int k) {
    if (k < 1 || k > 2) throw std::invalid_argument("dense_lowest: k must be 1 or 2");
    if (op.dim() > 4096) throw std::invalid_argument("dense_lowest: dim capped at 4096");
    if (!op.hermitian()) throw std::invalid_argument("dense_lowest: Hermitian operator required");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(op.dense());

    EigenResult r;
    r.E0 = es.eigenvalues()(0);
    r.E1 = op.dim() > 1 ? es.eigenvalues()(1) : r.E0;
    r.ground = es.eigenvectors().col(0);
    r.excited = op.dim() > 1 ? es.eigenvectors().col(1) : r.ground;
    r.iterations = 1;
    finish_result(op, r, 1e-8);
    r.converged = true;
    return r;
}

EigenResult ground_state_tracked(const ModelSpec& spec,
                                 const std::optional<QuantumState>& previous,
                                 const TrackingOptions& topt) {
    spec.validate();
    const SparseOperator H = build_hamiltonian(spec);

    EigenResult r;
    if (H.dim() <= topt.dense_cutoff) {
        r = dense_lowest(H, 2);
        const double rawgap = r.E1 - r.E0;
        r.degenerate = rawgap < topt.solver.degeneracy_threshold_rel * std::abs(r.E0);
        r.gap = r.degenerate ? 0.0 : std::max(rawgap, 0.0);
    } else {
        LanczosOptions o = topt.solver;
        if (previous && std::size_t(previous->size()) == H.dim()) o.guess = *previous;
        r = lanczos_lowest(H, o);
    }

    if (r.degenerate) {
        bool resolved = false;
        if (previous && std::size_t(previous->size()) == H.dim()) {
            const cplx a = r.ground.dot(*previous);
            const cplx b = r.excited.dot(*previous);
            const double pn = std::sqrt(std::norm(a) + std::norm(b));
            if (pn > 1e-8) {
                const cplx ca = a / pn, cb = b / pn;
                Eigen::VectorXcd g = ca * r.ground + cb * r.excited;
                Eigen::VectorXcd e = -std::conj(cb) * r.ground + std::conj(ca) * r.excited;
                r.ground = g.normalized();
                r.excited = e.normalized();
                resolved = true;
            }
        }
        if (!resolved) {
            // no usable history: break the tie on the model's order parameter.
            // For the xy chain the degenerate pair is a spin-flip parity
            // doublet, so diagonalize the flip parity and keep the even state.
            SparseOperator P;
            if (spec.kind == ModelKind::XYChain) {
                const std::uint64_t dim = H.dim();
                std::vector<Triplet> pt;
                pt.reserve(dim);
                for (std::uint64_t b = 0; b < dim; ++b) {
                    const double v = (__builtin_popcountll(b) & 1) ? -1.0 : 1.0;
                    pt.push_back({b, b, cplx(v, 0.0)});
                }
                P = SparseOperator::from_triplets(dim, pt, true);
            } else if (spec.kind == ModelKind::AntiferroIsing) {
                P = build_staggered_spin_z(spec.n);
            } else {
                P = build_global_spin(spec.n, SpinAxis::Z);
            }
            Eigen::VectorXcd Pg = P.apply(r.ground), Pe = P.apply(r.excited);
            Eigen::Matrix2cd M;
            M << r.ground.dot(Pg), r.ground.dot(Pe), r.excited.dot(Pg), r.excited.dot(Pe);
            M = (0.5 * (M + M.adjoint())).eval();
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(M);
            Eigen::Vector2cd chi = es.eigenvectors().col(1);  // largest order parameter
            Eigen::Vector2cd lo = es.eigenvectors().col(0);
            Eigen::VectorXcd g = chi(0) * r.ground + chi(1) * r.excited;
            Eigen::VectorXcd e = lo(0) * r.ground + lo(1) * r.excited;
            r.ground = g.normalized();
            r.excited = e.normalized();
        }
    }

    if (previous && std::size_t(previous->size()) == H.dim()) {
        const cplx ov = previous->dot(r.ground);
        if (std::abs(ov) > 1e-12)
            r.ground *= std::conj(ov) / std::abs(ov);
        else
            canonical_phase(r.ground);
    } else {
        canonical_phase(r.ground);
    }
    return r;
}

} // namespace spinmetro
