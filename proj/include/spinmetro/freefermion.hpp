#pragma once

#include <vector>

#include <Eigen/Dense>

#include "spinmetro/metrology.hpp"

namespace spinmetro {

// Jordan-Wigner solution of the XY chain in the fixed-parity sector that
// holds the even basis states. majorana_corr is the real antisymmetric M with
// <w_a w_b> = delta_ab + i M_ab in the Majorana ordering
// w_{2i} = c_i + c_i^dag, w_{2i+1} = -i (c_i - c_i^dag).
struct FreeFermionSolution {
    int n = 0;
    double gamma = 1.0, lambda = 0.0;
    std::vector<double> modes;   // single-particle energies, ascending, >= 0
    Eigen::MatrixXd majorana_corr;
    double ground_energy = 0.0;  // -(1/2) sum_k eps_k
};

struct SpinMoments {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();  // <S_x>, <S_y>, <S_z>
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();   // symmetrized covariance
};

// n <= 4096; gamma in (0,1], lambda >= 0.
FreeFermionSolution solve_xy(int n, double gamma, double lambda);

// Spin means and covariances from Majorana contractions: <S_z> and
// C(S_z,S_z) by Wick pairs, C(S_x,S_x)/C(S_y,S_y) through string correlators
// evaluated as Pfaffians of sub-blocks of majorana_corr. Cross covariances
// vanish by parity/reality and are set to zero (the ED suite validates the
// assertion itself at small n).
SpinMoments spin_moments(const FreeFermionSolution& sol);

// Rotation-protocol tensors at phi = 0 for the XY ground state:
// F = 4 cov, U from the means via the su(2) commutators.
MetroTensors xy_rotation_metrology(int n, double gamma, double lambda);

// Pfaffian of a real antisymmetric matrix (Parlett-Reid with partial
// pivoting). Exposed for tests; even dimension required, odd gives 0.
double pfaffian(Eigen::MatrixXd a);

} // namespace spinmetro
