#pragma once

#include "spinmetro/model.hpp"
#include "spinmetro/sparse_operator.hpp"

namespace spinmetro {

// Chain Hamiltonians on the 2^n computational basis, periodic boundary.
// Basis convention: bit i of the index is spin i, bit value 0 means
// sigma^z = +1. sigma^z_i is diagonal, sigma^x_i flips bit i, sigma^y_i
// flips bit i with a factor +-i.
//
//   FerroIsing:     H = -sum_i sz_i sz_{i+1} + hx sum sx + hy sum sy + hz sum sz
//   AntiferroIsing: H = +sum_i sz_i sz_{i+1} - hx sum sx - hy sum sy - hz sum sz
//   XYChain:        H = -sum_i [ (1+g)/2 sx_i sx_{i+1} + (1-g)/2 sy_i sy_{i+1}
//                                + lambda sz_i ]
SparseOperator build_hamiltonian(const ModelSpec& spec);

// S_axis = (1/2) sum_i sigma_i^axis
SparseOperator build_global_spin(int n, SpinAxis axis);

// (1/2) sum_i (-1)^i sigma_i^z, the antiferro order parameter (tie-break use).
SparseOperator build_staggered_spin_z(int n);

// Free function mirroring SparseOperator::apply for callers that prefer it.
Eigen::VectorXcd apply(const SparseOperator& op, const Eigen::VectorXcd& v);

} // namespace spinmetro
