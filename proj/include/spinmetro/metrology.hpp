#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinmetro/eigensolver.hpp"
#include "spinmetro/model.hpp"

namespace spinmetro {

enum class MetroMethod { FidelityBargmann, ExactRotation };

// Rectangular parameter-space circuit for the Bargmann-phase curvature
// estimate. Traversal order is fixed: starting corner, then +mu, then +nu,
// counterclockwise in the (mu, nu) plane; the rectangle is centered on the
// base point.
struct LoopSpec {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    SpinAxis mu = SpinAxis::X, nu = SpinAxis::Y;
    double side_mu = 0.0, side_nu = 0.0;
    double area() const { return side_mu * side_nu; }
};

struct LadderDiag {
    std::string label;      // "xx", "xy", ...
    double delta = 0.0;     // auto-selected step after shrink/grow
    double coeff = 0.0;     // fitted c in 1 - f = c * delta^2
    double top_drop = 0.0;  // 1 - f at the largest rung
    double rss = 0.0;
    int rebuilds = 0;
    bool ok = true;
    std::string note;
};

struct LoopDiag {
    std::string label;
    std::vector<double> areas, phases;
    double slope = 0.0;
    double rss = 0.0;
    int shrinks = 0;
    bool ok = true;
    std::string note;
};

struct QfimFidelityResult {
    std::vector<SpinAxis> axes;
    Eigen::MatrixXd F;  // restricted to the requested axes, in their order
    std::vector<LadderDiag> diag;
};

struct MucResult {
    double value = 0.0;
    LoopDiag diag;
};

struct QuantumnessResult {
    double value = 0.0;      // clamped to [0, 1 + 1e-6]
    double raw = 0.0;        // eigenvalue route, unclamped
    double via_det = 0.0;    // sqrt(det 2U / det F) for p = 2, NaN otherwise
    bool defined = true;     // false when F is singular on the requested subset
};

// Per-point bundle of estimator outputs. R matrices are indexed like F/U;
// undefined entries are NaN with the matching flag cleared.
struct MetroTensors {
    std::vector<SpinAxis> params;
    Eigen::Vector3d point = Eigen::Vector3d::Zero();
    Eigen::MatrixXd F, U;
    Eigen::MatrixXd R_pair;        // symmetric, diagonal NaN
    Eigen::MatrixXd R_pair_raw;    // unclamped eigenvalue-route values
    double R_full = 0.0, R_full_raw = 0.0;
    bool R_full_defined = true;
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> pair_defined;
    bool degenerate_base = false;
    std::vector<LadderDiag> ladder_diag;
    std::vector<LoopDiag> loop_diag;
};

// |<a|b>|, phase-invariant overlap magnitude.
double fidelity(const QuantumState& a, const QuantumState& b);

// arg prod_i <psi_i | psi_{i+1}>, in (-pi, pi]. With closed = true the last
// state connects back to the first. Throws when any consecutive overlap
// modulus is below 1e-12.
double bargmann_phase(const std::vector<QuantumState>& states, bool closed);

// e^{-i phi . S} |psi> for the n-site chain; exact to machine precision for
// the small angles used by the rotation-protocol ladders and loops.
QuantumState apply_rotation(const QuantumState& psi, int n, const Eigen::Vector3d& phi);

// QFIM from fidelity ladders: states at point + k*delta*dir for k = 0..K,
// parabola fit of 1 - f through the origin, F_mumu = 8c. Off-diagonals come
// from one extra ladder per pair along a scale-normalized diagonal
// direction. Steps auto-shrink (or grow) until the top-rung fidelity drop
// lands in a window where the quadratic term dominates both the solver noise
// and the quartic correction. For Ising kinds the parameters are the field
// components; for XYChain they are rotation angles about the ground state.
QfimFidelityResult qfim_fidelity(const ModelSpec& spec, const Eigen::Vector3d& point,
                                 const std::vector<SpinAxis>& axes, double delta0 = 1e-3,
                                 int ladder = 6);

// State family over a parameter plane: offsets (du, dv) are relative to the
// loop center. Lets the loop machinery run on analytic families in tests.
using PlaneFamily = std::function<QuantumState(double du, double dv)>;

// Bargmann phase per unit area, extrapolated over shrinking rectangles:
// linear fit of Phi against area through the origin. Loops shrink when any
// adjacent-vertex overlap falls below overlap_floor.
MucResult muc_loop_fit(const PlaneFamily& family, std::vector<double> areas,
                       double overlap_floor = 0.9999);

// Curvature entry U_mu,nu of the model's ground-state family at `point`.
MucResult muc_bargmann(const ModelSpec& spec, const Eigen::Vector3d& point,
                       std::pair<SpinAxis, SpinAxis> plane, std::vector<double> areas);

// Exact rotation-protocol tensors at phi = 0 for an arbitrary probe state:
// F = 4 (<(S_mu S_nu + S_nu S_mu)/2> - <S_mu><S_nu>), U_mu,nu = -i<[S_mu, S_nu]>.
void spin_covariance_qfim(const QuantumState& ground, int n, Eigen::Matrix3d& F,
                          Eigen::Matrix3d& U);

// R = max |eig(2i F^+ U)| clamped to [0, 1 + 1e-6]. For p = 2 the closed
// form sqrt(det 2U / det F) is evaluated alongside as a cross-check.
double quantumness(const Eigen::MatrixXd& F, const Eigen::MatrixXd& U);
QuantumnessResult quantumness_full(const Eigen::MatrixXd& F, const Eigen::MatrixXd& U);

// Full per-point evaluation: F, U, every pairwise R and R_full. A degenerate
// base point (first-order line) suppresses the z-axis stencils for ferro --
// those entries surface as NaN + flags rather than garbage. delta0 and
// ladder tune the fidelity ladders; loop_areas, when non-empty, replaces the
// per-pair default loop sequence.
MetroTensors metro_point(const ModelSpec& spec, const Eigen::Vector3d& point,
                         const std::vector<SpinAxis>& axes, MetroMethod method,
                         const std::optional<QuantumState>& previous = std::nullopt,
                         double delta0 = 1e-3, int ladder = 6,
                         const std::vector<double>& loop_areas = {});

} // namespace spinmetro
