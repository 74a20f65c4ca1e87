#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Dense>

#include "spinmetro/model.hpp"
#include "spinmetro/sparse_operator.hpp"

namespace spinmetro {

using QuantumState = Eigen::VectorXcd;

struct EigenResult {
    double E0 = 0.0;
    double E1 = 0.0;
    QuantumState ground;
    QuantumState excited;
    double gap = 0.0;       // E1 - E0, clamped to 0 when within tolerance
    double residual = 0.0;  // ||H ground - E0 ground||
    bool degenerate = false;
    bool converged = true;
    int iterations = 0;
};

struct LanczosOptions {
    double tol = 1e-10;
    int max_iter = 1000;
    std::uint64_t seed = 12345;
    // optional warm start; used as the initial Krylov vector
    std::optional<QuantumState> guess;
    double degeneracy_threshold_rel = 1e-8;  // gap < rel * |E0| flags degeneracy
};

// Two lowest eigenpairs by Lanczos with full reorthogonalization. The ground
// vector is found first; the excited one by a second, deflated run; a final
// 2x2 Rayleigh-Ritz across the pair cleans up near-degenerate doublets.
// k is fixed to 2 by contract.
EigenResult lanczos_lowest(const SparseOperator& op, int k, double tol, int max_iter,
                           std::uint64_t seed);
EigenResult lanczos_lowest(const SparseOperator& op, const LanczosOptions& opt);

// Dense LAPACK-style oracle, dim <= 4096.
EigenResult dense_lowest(const SparseOperator& op, int k);

struct TrackingOptions {
    LanczosOptions solver{};
    // below this dimension the dense path is cheaper and exact
    std::size_t dense_cutoff = 64;
};

// Ground state with branch continuity across (near-)degeneracies: when the
// gap is below threshold the previous state is projected onto the ground
// doublet; with no history the tie is broken by the model's order parameter
// (max <S_z> for ferro, max staggered magnetization for antiferro). The
// returned state is phase-aligned with `previous` when one is supplied.
EigenResult ground_state_tracked(const ModelSpec& spec,
                                 const std::optional<QuantumState>& previous,
                                 const TrackingOptions& opt = {});

} // namespace spinmetro
