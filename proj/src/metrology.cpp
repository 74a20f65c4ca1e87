#include "spinmetro/metrology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "spinmetro/pauli.hpp"

namespace spinmetro {

namespace {

constexpr double kDropLo = 1e-6;   // top-rung window: quadratic term must beat
constexpr double kDropHi = 1e-4;   // solver noise below, quartic bias above
constexpr double kStepMin = 1e-9;
constexpr double kStepMax = 0.1;
constexpr double kZGuard = 2e-3;  // loops stay this far from the ordered-phase crossing

double nan_d() { return std::numeric_limits<double>::quiet_NaN(); }

// Ground-state family around one base point. Ising kinds move the field;
// the XY kind rotates the base state, its parameters being angles.
struct Family {
    ModelSpec spec;
    Eigen::Vector3d point = Eigen::Vector3d::Zero();
    bool rotation = false;
    QuantumState base;
    bool degenerate = false;

    QuantumState at(const Eigen::Vector3d& offset,
                    const std::optional<QuantumState>& prev = std::nullopt) const {
        if (rotation) return apply_rotation(base, spec.n, offset);
        ModelSpec s = spec;
        s.hx = point(0) + offset(0);
        s.hy = point(1) + offset(1);
        s.hz = point(2) + offset(2);
        return ground_state_tracked(s, prev ? prev : std::optional<QuantumState>(base)).ground;
    }
};

Family make_family(const ModelSpec& spec, const Eigen::Vector3d& point,
                   const std::optional<QuantumState>& previous) {
    Family f;
    f.spec = spec;
    f.point = point;
    f.rotation = (spec.kind == ModelKind::XYChain);
    ModelSpec s = spec;
    if (!f.rotation) {
        s.hx = point(0);
        s.hy = point(1);
        s.hz = point(2);
    }
    auto r = ground_state_tracked(s, previous);
    f.base = r.ground;
    f.degenerate = r.degenerate;
    return f;
}

// outward z so that stencils never cross the hz = 0 surface
double axis_sign(const Family& fam, SpinAxis a) {
    if (fam.rotation || a != SpinAxis::Z) return 1.0;
    return fam.point(2) >= 0.0 ? 1.0 : -1.0;
}

struct LadderOutcome {
    double coeff = 0.0;  // c in 1 - f = c t^2 along the given direction
    LadderDiag diag;
};

LadderOutcome run_ladder(const Family& fam, const Eigen::Vector3d& dir, const std::string& label,
                         double delta0, int K) {
    LadderOutcome out;
    LadderDiag& d = out.diag;
    d.label = label;

    double delta = delta0;
    double top_drop = 0.0;
    QuantumState top;
    int probes = 0;
    for (;;) {
        top = fam.at(dir * (K * delta));
        top_drop = 1.0 - fidelity(fam.base, top);
        ++probes;
        if (top_drop >= kDropLo && top_drop <= kDropHi) break;
        if (probes >= 12) {
            d.ok = false;
            d.note = "step tuning exhausted";
            break;
        }
        double scale =
            (top_drop > 1e-18) ? std::clamp(std::sqrt(1e-5 / top_drop), 1e-3, 1e3) : 10.0;
        double next = std::clamp(delta * scale, kStepMin, kStepMax);
        if (next == delta) {
            d.ok = false;
            d.note = top_drop < kDropLo ? "flat direction, step capped" : "step at lower bound";
            break;
        }
        delta = next;
    }
    d.rebuilds = probes - 1;
    d.delta = delta;
    d.top_drop = top_drop;

    // drop model through the origin: c2 t^2 + c3 t^3. The cubic term absorbs
    // the drift of the tensor along the (one-sided) ladder, which otherwise
    // biases c2 at the few-per-mille level and wrecks the off-diagonal
    // reconstruction downstream.
    double saa = 0.0, sab = 0.0, sbb = 0.0, sda = 0.0, sdb = 0.0;
    std::vector<double> aa(K), bb(K), dd(K);
    std::optional<QuantumState> prev = fam.base;
    for (int k = 1; k <= K; ++k) {
        QuantumState s = (k == K) ? top : fam.at(dir * (k * delta), prev);
        double t = k * delta;
        double a = t * t, b = t * t * t;
        double drop = 1.0 - fidelity(fam.base, s);
        aa[k - 1] = a;
        bb[k - 1] = b;
        dd[k - 1] = drop;
        saa += a * a;
        sab += a * b;
        sbb += b * b;
        sda += drop * a;
        sdb += drop * b;
        prev = std::move(s);
    }
    const double det = saa * sbb - sab * sab;
    double c3 = 0.0;
    if (K >= 2 && det > 0.0) {
        out.coeff = (sda * sbb - sdb * sab) / det;
        c3 = (sdb * saa - sda * sab) / det;
    } else {
        out.coeff = sda / saa;
    }
    for (int k = 0; k < K; ++k) {
        double r = dd[k] - out.coeff * aa[k] - c3 * bb[k];
        d.rss += r * r;
    }
    d.coeff = out.coeff;
    return out;
}

struct QfimCore {
    Eigen::MatrixXd F;
    std::vector<LadderDiag> diag;
    std::vector<double> deltas;  // per requested axis, diagonal step after tuning
};

QfimCore qfim_core(const Family& fam, const std::vector<SpinAxis>& axes, double delta0,
                   int K) {
    const int p = static_cast<int>(axes.size());
    QfimCore out;
    out.F.setZero(p, p);
    out.deltas.assign(p, delta0);

    for (int i = 0; i < p; ++i) {
        Eigen::Vector3d dir = Eigen::Vector3d::Zero();
        dir(int(axes[i])) = axis_sign(fam, axes[i]);
        auto lad = run_ladder(fam, dir, std::string(1, axis_name(axes[i])) + axis_name(axes[i]),
                              delta0, K);
        out.F(i, i) = 8.0 * lad.coeff;
        out.deltas[i] = lad.diag.delta;
        out.diag.push_back(std::move(lad.diag));
    }

    const double fmax = std::max(1.0, out.F.diagonal().maxCoeff());
    for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j) {
            std::string label{axis_name(axes[i]), axis_name(axes[j])};
            if (out.F(i, i) < 1e-12 * fmax || out.F(j, j) < 1e-12 * fmax) {
                // Cauchy-Schwarz pins the off-diagonal to zero here
                LadderDiag d;
                d.label = label;
                d.note = "flat pair, off-diagonal pinned to zero";
                out.diag.push_back(std::move(d));
                continue;
            }
            const double si = axis_sign(fam, axes[i]), sj = axis_sign(fam, axes[j]);
            Eigen::Vector3d dir = Eigen::Vector3d::Zero();
            dir(int(axes[i])) = si / std::sqrt(out.F(i, i));
            dir(int(axes[j])) = sj / std::sqrt(out.F(j, j));
            auto lad = run_ladder(fam, dir, label, delta0, K);
            double fij = 0.5 * (8.0 * lad.coeff - 2.0) * std::sqrt(out.F(i, i) * out.F(j, j));
            out.F(i, j) = out.F(j, i) = fij * si * sj;
            out.diag.push_back(std::move(lad.diag));
        }
    return out;
}

MucResult muc_core(const Family& fam, std::pair<SpinAxis, SpinAxis> plane,
                   std::vector<double> areas, double overlap_floor) {
    if (areas.size() < 3) throw std::invalid_argument("muc: at least three loop areas required");
    std::sort(areas.begin(), areas.end(), std::greater<double>());
    if (areas.back() <= 0.0) throw std::invalid_argument("muc: areas must be positive");
    if (areas.front() < 4.0 * areas.back() * (1.0 - 1e-12))
        throw std::invalid_argument("muc: areas must span at least a factor of four");

    const int u = int(plane.first), v = int(plane.second);
    MucResult res;
    LoopDiag& d = res.diag;
    d.label = std::string{axis_name(plane.first), axis_name(plane.second)};

    // the ordered Ising phase has a first-order surface at hz = 0; loops with
    // a z extent there are kept strictly one-sided
    const bool guard_z = !fam.rotation && fam.spec.kind != ModelKind::XYChain &&
                         std::hypot(fam.point(0), fam.point(1)) < 1.0 && (u == 2 || v == 2);

    for (double a : areas) {
        double side = std::sqrt(a);
        for (int tries = 0;; ++tries) {
            Eigen::Vector3d shift = Eigen::Vector3d::Zero();
            if (guard_z) {
                const double zext = side / 2.0;
                const double lo = fam.point(2) - zext, hi = fam.point(2) + zext;
                if (lo < kZGuard && hi > -kZGuard) {
                    const double sgn = fam.point(2) >= 0.0 ? 1.0 : -1.0;
                    shift(2) = sgn * (kZGuard + zext) - fam.point(2);
                    if (d.note.empty()) d.note = "loop shifted off the hz = 0 surface";
                }
            }
            auto vertex = [&](double du, double dv) {
                Eigen::Vector3d off = shift;
                off(u) += du;
                off(v) += dv;
                return fam.at(off);
            };
            const double h = side / 2.0;
            std::vector<QuantumState> loop{vertex(-h, -h), vertex(h, -h), vertex(h, h),
                                           vertex(-h, h)};
            double minov = 1.0;
            for (int k = 0; k < 4; ++k) minov = std::min(minov, fidelity(loop[k], loop[(k + 1) % 4]));
            if (minov >= overlap_floor || tries >= 24) {
                if (minov < overlap_floor) {
                    d.ok = false;
                    d.note = "overlap floor unreachable";
                }
                d.phases.push_back(bargmann_phase(loop, true));
                d.areas.push_back(side * side);
                break;
            }
            side /= 2.0;
            ++d.shrinks;
        }
    }

    if (d.areas.front() < 4.0 * d.areas.back() * (1.0 - 1e-12)) {
        d.ok = false;
        d.note = "areas collapsed while enforcing the overlap floor";
    }
    double saa = 0.0, spa = 0.0;
    for (std::size_t k = 0; k < d.areas.size(); ++k) {
        saa += d.areas[k] * d.areas[k];
        spa += d.phases[k] * d.areas[k];
    }
    d.slope = spa / saa;
    for (std::size_t k = 0; k < d.areas.size(); ++k) {
        double r = d.phases[k] - d.slope * d.areas[k];
        d.rss += r * r;
    }
    res.value = d.slope;
    return res;
}

void check_axes(const std::vector<SpinAxis>& axes) {
    if (axes.empty() || axes.size() > 3)
        throw std::invalid_argument("axes: between one and three parameters");
    for (std::size_t i = 0; i < axes.size(); ++i)
        for (std::size_t j = i + 1; j < axes.size(); ++j)
            if (axes[i] == axes[j]) throw std::invalid_argument("axes: duplicates not allowed");
}

} // namespace

double fidelity(const QuantumState& a, const QuantumState& b) {
    if (a.size() != b.size()) throw std::invalid_argument("fidelity: size mismatch");
    return std::abs(a.dot(b));
}

double bargmann_phase(const std::vector<QuantumState>& states, bool closed) {
    if (states.size() < 2) throw std::invalid_argument("bargmann_phase: need at least two states");
    cplx prod = 1.0;
    const std::size_t links = closed ? states.size() : states.size() - 1;
    for (std::size_t i = 0; i < links; ++i) {
        cplx ov = states[i].dot(states[(i + 1) % states.size()]);
        double m = std::abs(ov);
        if (m < 1e-12)
            throw std::invalid_argument("bargmann_phase: consecutive states nearly orthogonal");
        prod *= ov / m;
    }
    return std::arg(prod);
}

QuantumState apply_rotation(const QuantumState& psi, int n, const Eigen::Vector3d& phi) {
    const std::size_t dim = std::size_t{1} << n;
    if (std::size_t(psi.size()) != dim) throw std::invalid_argument("apply_rotation: bad state size");
    if (phi.isZero(0.0)) return psi;

    std::vector<Triplet> tr;
    const bool flips = phi(0) != 0.0 || phi(1) != 0.0;
    for (std::uint64_t b = 0; b < dim; ++b) {
        if (phi(2) != 0.0) {
            double diag = 0.0;
            for (int i = 0; i < n; ++i) diag += 0.5 * phi(2) * (1 - 2 * int((b >> i) & 1));
            if (diag != 0.0) tr.push_back({b, b, diag});
        }
        if (flips)
            for (int i = 0; i < n; ++i) {
                int z = 1 - 2 * int((b >> i) & 1);
                tr.push_back({b ^ (std::uint64_t{1} << i), b, cplx(0.5 * phi(0), 0.5 * phi(1) * z)});
            }
    }
    const SparseOperator G = SparseOperator::from_triplets(dim, std::move(tr), true);

    double bound = 0.5 * n * (std::abs(phi(0)) + std::abs(phi(1)) + std::abs(phi(2)));
    int sq = 0;
    while (bound > 0.5) {
        bound /= 2.0;
        ++sq;
    }
    const double inv = 1.0 / double(std::uint64_t{1} << sq);

    QuantumState out = psi;
    Eigen::VectorXcd term(dim), tmp(dim);
    for (std::uint64_t rep = 0; rep < (std::uint64_t{1} << sq); ++rep) {
        term = out;
        QuantumState acc = out;
        for (int k = 1; k < 40; ++k) {
            G.apply(term, tmp);
            term = tmp * (cplx(0.0, -1.0) * inv / double(k));
            acc += term;
            if (term.norm() < 1e-17 * acc.norm()) break;
        }
        out = acc;
    }
    return out;
}

QfimFidelityResult qfim_fidelity(const ModelSpec& spec, const Eigen::Vector3d& point,
                                 const std::vector<SpinAxis>& axes, double delta0, int ladder) {
    spec.validate();
    check_axes(axes);
    if (ladder < 2) throw std::invalid_argument("qfim_fidelity: ladder needs at least two rungs");
    if (delta0 <= 0.0) throw std::invalid_argument("qfim_fidelity: delta0 must be positive");
    Family fam = make_family(spec, point, std::nullopt);
    auto core = qfim_core(fam, axes, delta0, ladder);
    return {axes, std::move(core.F), std::move(core.diag)};
}

MucResult muc_loop_fit(const PlaneFamily& family, std::vector<double> areas,
                       double overlap_floor) {
    if (areas.size() < 3) throw std::invalid_argument("muc: at least three loop areas required");
    std::sort(areas.begin(), areas.end(), std::greater<double>());
    if (areas.back() <= 0.0) throw std::invalid_argument("muc: areas must be positive");
    if (areas.front() < 4.0 * areas.back() * (1.0 - 1e-12))
        throw std::invalid_argument("muc: areas must span at least a factor of four");

    MucResult res;
    LoopDiag& d = res.diag;
    d.label = "uv";
    for (double a : areas) {
        double side = std::sqrt(a);
        for (int tries = 0;; ++tries) {
            const double h = side / 2.0;
            std::vector<QuantumState> loop{family(-h, -h), family(h, -h), family(h, h),
                                           family(-h, h)};
            double minov = 1.0;
            for (int k = 0; k < 4; ++k) minov = std::min(minov, fidelity(loop[k], loop[(k + 1) % 4]));
            if (minov >= overlap_floor || tries >= 24) {
                if (minov < overlap_floor) {
                    d.ok = false;
                    d.note = "overlap floor unreachable";
                }
                d.phases.push_back(bargmann_phase(loop, true));
                d.areas.push_back(side * side);
                break;
            }
            side /= 2.0;
            ++d.shrinks;
        }
    }
    if (d.areas.front() < 4.0 * d.areas.back() * (1.0 - 1e-12)) {
        d.ok = false;
        d.note = "areas collapsed while enforcing the overlap floor";
    }
    double saa = 0.0, spa = 0.0;
    for (std::size_t k = 0; k < d.areas.size(); ++k) {
        saa += d.areas[k] * d.areas[k];
        spa += d.phases[k] * d.areas[k];
    }
    d.slope = spa / saa;
    for (std::size_t k = 0; k < d.areas.size(); ++k) {
        double r = d.phases[k] - d.slope * d.areas[k];
        d.rss += r * r;
    }
    res.value = d.slope;
    return res;
}

MucResult muc_bargmann(const ModelSpec& spec, const Eigen::Vector3d& point,
                       std::pair<SpinAxis, SpinAxis> plane, std::vector<double> areas) {
    spec.validate();
    if (plane.first == plane.second)
        throw std::invalid_argument("muc_bargmann: plane axes must differ");
    Family fam = make_family(spec, point, std::nullopt);
    return muc_core(fam, plane, std::move(areas), 0.9999);
}

void spin_covariance_qfim(const QuantumState& ground, int n, Eigen::Matrix3d& F,
                          Eigen::Matrix3d& U) {
    if (std::size_t(ground.size()) != (std::size_t{1} << n))
        throw std::invalid_argument("spin_covariance_qfim: bad state size");
    Eigen::VectorXcd sv[3];
    double m[3];
    for (int a = 0; a < 3; ++a) {
        build_global_spin(n, SpinAxis(a)).apply(ground, sv[a]);
        m[a] = std::real(ground.dot(sv[a]));
    }
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            cplx c = sv[a].dot(sv[b]);  // <S_a S_b>
            F(a, b) = 4.0 * (c.real() - m[a] * m[b]);
            U(a, b) = 2.0 * c.imag();
        }
    F = (0.5 * (F + F.transpose())).eval();
    U = (0.5 * (U - U.transpose())).eval();
}

QuantumnessResult quantumness_full(const Eigen::MatrixXd& F, const Eigen::MatrixXd& U) {
    QuantumnessResult q;
    const int p = int(F.rows());
    if (F.cols() != p || U.rows() != p || U.cols() != p)
        throw std::invalid_argument("quantumness: F and U must be square and same size");
    q.via_det = nan_d();
    if (!F.allFinite() || !U.allFinite()) {
        q.defined = false;
        q.value = q.raw = nan_d();
        return q;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ef(F);
    const double lmax = ef.eigenvalues().maxCoeff();
    if (lmax <= 0.0 || ef.eigenvalues().minCoeff() < 1e-12 * lmax) {
        q.defined = false;
        q.value = q.raw = nan_d();
        return q;
    }
    Eigen::MatrixXd W = ef.eigenvectors() *
                        ef.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                        ef.eigenvectors().transpose();
    Eigen::MatrixXd M = W * U * W;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    q.raw = 2.0 * svd.singularValues()(0);
    if (p == 2) {
        const double detF = F.determinant();
        const double det2U = 4.0 * U.determinant();
        q.via_det = detF > 0.0 ? std::sqrt(std::max(det2U, 0.0) / detF) : nan_d();
    }
    q.value = std::clamp(q.raw, 0.0, 1.0 + 1e-6);
    return q;
}

double quantumness(const Eigen::MatrixXd& F, const Eigen::MatrixXd& U) {
    return quantumness_full(F, U).value;
}

MetroTensors metro_point(const ModelSpec& spec, const Eigen::Vector3d& point,
                         const std::vector<SpinAxis>& axes, MetroMethod method,
                         const std::optional<QuantumState>& previous, double delta0, int ladder,
                         const std::vector<double>& loop_areas) {
    spec.validate();
    check_axes(axes);
    const int p = int(axes.size());

    MetroTensors t;
    t.params = axes;
    t.point = point;
    t.F.setConstant(p, p, nan_d());
    t.U.setConstant(p, p, nan_d());
    t.R_pair.setConstant(p, p, nan_d());
    t.R_pair_raw.setConstant(p, p, nan_d());
    t.pair_defined.setConstant(p, p, false);

    Family fam = make_family(spec, point, previous);
    t.degenerate_base = fam.degenerate;

    if (method == MetroMethod::ExactRotation) {
        Eigen::Matrix3d F3, U3;
        spin_covariance_qfim(fam.base, spec.n, F3, U3);
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j) {
                t.F(i, j) = F3(int(axes[i]), int(axes[j]));
                t.U(i, j) = U3(int(axes[i]), int(axes[j]));
            }
    } else {
        // on the ordered first-order line the z response of one branch is not
        // the physical tensor; those entries stay NaN with their flags down
        const bool drop_z = t.degenerate_base && spec.kind != ModelKind::XYChain;
        std::vector<int> live;
        std::vector<SpinAxis> live_axes;
        for (int i = 0; i < p; ++i)
            if (!(drop_z && axes[i] == SpinAxis::Z)) {
                live.push_back(i);
                live_axes.push_back(axes[i]);
            }
        if (!live_axes.empty()) {
            auto core = qfim_core(fam, live_axes, delta0, ladder);
            t.ladder_diag = std::move(core.diag);
            for (std::size_t a = 0; a < live.size(); ++a)
                for (std::size_t b = 0; b < live.size(); ++b)
                    t.F(live[a], live[b]) = core.F(a, b);
            for (std::size_t a = 0; a < live.size(); ++a) {
                t.U(live[a], live[a]) = 0.0;
                for (std::size_t b = a + 1; b < live.size(); ++b) {
                    double a0 = (ladder * core.deltas[a] / 2.0) * (ladder * core.deltas[b] / 2.0);
                    auto loop = muc_core(fam, {live_axes[a], live_axes[b]},
                                         loop_areas.empty()
                                             ? std::vector<double>{a0, a0 / 2.0, a0 / 4.0}
                                             : loop_areas,
                                         0.9999);
                    t.U(live[a], live[b]) = loop.value;
                    t.U(live[b], live[a]) = -loop.value;
                    t.loop_diag.push_back(std::move(loop.diag));
                }
            }
        }
    }

    for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j) {
            Eigen::Matrix2d f2, u2;
            f2 << t.F(i, i), t.F(i, j), t.F(j, i), t.F(j, j);
            u2 << t.U(i, i), t.U(i, j), t.U(j, i), t.U(j, j);
            if (!f2.allFinite() || !u2.allFinite()) continue;
            auto q = quantumness_full(f2, u2);
            t.R_pair(i, j) = t.R_pair(j, i) = q.value;
            t.R_pair_raw(i, j) = t.R_pair_raw(j, i) = q.raw;
            t.pair_defined(i, j) = t.pair_defined(j, i) = q.defined;
        }

    if (p >= 2 && t.F.allFinite() && t.U.allFinite()) {
        auto q = quantumness_full(t.F, t.U);
        t.R_full = q.value;
        t.R_full_raw = q.raw;
        t.R_full_defined = q.defined;
    } else {
        t.R_full = t.R_full_raw = nan_d();
        t.R_full_defined = false;
    }
    return t;
}

} // namespace spinmetro
