#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "spinmetro/model.hpp"

namespace spinmetro {

struct Triplet {
    std::uint64_t row, col;
    cplx value;
};

// Sparse Hermitian operator on the 2^n basis, stored row-sorted with
// deduplicated columns (CSR). Immutable once built; apply() is the only hot
// path and allocates nothing.
class SparseOperator {
  public:
    SparseOperator() = default;

    static SparseOperator from_triplets(std::size_t dim, std::vector<Triplet> entries,
                                        bool hermitian);

    std::size_t dim() const { return dim_; }
    std::size_t nnz() const { return values_.size(); }
    bool hermitian() const { return hermitian_; }
    std::size_t max_row_nnz() const;

    // y = A x. Both vectors have length dim(); y is overwritten.
    void apply(const cplx* x, cplx* y) const;
    void apply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const;
    Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const;

    Eigen::MatrixXcd dense() const;

    // Row-sorted triplet view, mostly for tests.
    std::vector<Triplet> entries() const;

    // max |A - A^dagger| entry; zero for anything built with hermitian = true.
    double hermiticity_defect() const;

  private:
    std::size_t dim_ = 0;
    bool hermitian_ = false;
    std::vector<std::uint64_t> row_ptr_;  // dim+1 offsets
    std::vector<std::uint64_t> col_;
    std::vector<cplx> values_;
};

} // namespace spinmetro
