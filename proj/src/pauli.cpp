#include "spinmetro/pauli.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace spinmetro {

SparseOperator SparseOperator::from_triplets(std::size_t dim, std::vector<Triplet> entries,
                                             bool hermitian) {
    if (dim == 0) throw std::invalid_argument("SparseOperator: dim must be positive");
    for (const auto& t : entries)
        if (t.row >= dim || t.col >= dim)
            throw std::invalid_argument("SparseOperator: triplet index out of range");

    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });

    SparseOperator op;
    op.dim_ = dim;
    op.hermitian_ = hermitian;
    op.row_ptr_.assign(dim + 1, 0);
    op.col_.reserve(entries.size());
    op.values_.reserve(entries.size());

    std::size_t i = 0;
    for (std::uint64_t r = 0; r < dim; ++r) {
        while (i < entries.size() && entries[i].row == r) {
            std::uint64_t c = entries[i].col;
            cplx v = 0.0;
            while (i < entries.size() && entries[i].row == r && entries[i].col == c)
                v += entries[i++].value;
            if (v != cplx(0.0)) {
                op.col_.push_back(c);
                op.values_.push_back(v);
            }
        }
        op.row_ptr_[r + 1] = op.col_.size();
    }

    if (hermitian) {
        double defect = op.hermiticity_defect();
        double scale = 0.0;
        for (const auto& v : op.values_) scale = std::max(scale, std::abs(v));
        if (defect > 1e-12 * std::max(scale, 1.0))
            throw std::invalid_argument("SparseOperator: entries are not Hermitian");
    }
    return op;
}

std::size_t SparseOperator::max_row_nnz() const {
    std::size_t m = 0;
    for (std::size_t r = 0; r < dim_; ++r) m = std::max(m, std::size_t(row_ptr_[r + 1] - row_ptr_[r]));
    return m;
}

void SparseOperator::apply(const cplx* x, cplx* y) const {
    for (std::size_t r = 0; r < dim_; ++r) {
        cplx acc = 0.0;
        for (std::uint64_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) acc += values_[k] * x[col_[k]];
        y[r] = acc;
    }
}

void SparseOperator::apply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const {
    if (std::size_t(x.size()) != dim_) throw std::invalid_argument("apply: size mismatch");
    y.resize(x.size());
    apply(x.data(), y.data());
}

Eigen::VectorXcd SparseOperator::apply(const Eigen::VectorXcd& x) const {
    Eigen::VectorXcd y;
    apply(x, y);
    return y;
}

Eigen::MatrixXcd SparseOperator::dense() const {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim_, dim_);
    for (std::size_t r = 0; r < dim_; ++r)
        for (std::uint64_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) m(r, col_[k]) += values_[k];
    return m;
}

std::vector<Triplet> SparseOperator::entries() const {
    std::vector<Triplet> out;
    out.reserve(values_.size());
    for (std::size_t r = 0; r < dim_; ++r)
        for (std::uint64_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
            out.push_back({r, col_[k], values_[k]});
    return out;
}

double SparseOperator::hermiticity_defect() const {
    std::unordered_map<std::uint64_t, cplx> at;
    at.reserve(values_.size() * 2);
    for (std::size_t r = 0; r < dim_; ++r)
        for (std::uint64_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) at[r * dim_ + col_[k]] = values_[k];
    double defect = 0.0;
    for (const auto& [key, v] : at) {
        std::uint64_t r = key / dim_, c = key % dim_;
        auto it = at.find(c * dim_ + r);
        cplx vt = (it == at.end()) ? cplx(0.0) : it->second;
        defect = std::max(defect, std::abs(v - std::conj(vt)));
    }
    return defect;
}

namespace {

inline int zbit(std::uint64_t b, int i) { return 1 - 2 * int((b >> i) & 1); }

} // namespace

SparseOperator build_hamiltonian(const ModelSpec& spec) {
    spec.validate();
    const int n = spec.n;
    const std::size_t dim = spec.dim();
    std::vector<Triplet> trips;
    trips.reserve(dim * std::size_t(n + 1));

    if (spec.kind == ModelKind::XYChain) {
        const double g = spec.gamma;
        for (std::uint64_t b = 0; b < dim; ++b) {
            double diag = 0.0;
            for (int i = 0; i < n; ++i) diag -= spec.lambda * zbit(b, i);
            if (diag != 0.0) trips.push_back({b, b, diag});
            for (int i = 0; i < n; ++i) {
                int j = (i + 1) % n;
                std::uint64_t m = (std::uint64_t{1} << i) | (std::uint64_t{1} << j);
                // sx sx maps |b> -> |b^m> with weight 1; sy sy with weight
                // -z_i z_j, so the bond element depends on the bit alignment
                double v = -0.5 * (1 + g) + 0.5 * (1 - g) * zbit(b, i) * zbit(b, j);
                trips.push_back({b ^ m, b, v});
            }
        }
    } else {
        const double J = (spec.kind == ModelKind::FerroIsing) ? -1.0 : 1.0;
        const double sgn = (spec.kind == ModelKind::FerroIsing) ? 1.0 : -1.0;
        const double fx = sgn * spec.hx, fy = sgn * spec.hy, fz = sgn * spec.hz;
        const bool flips = (fx != 0.0 || fy != 0.0);
        for (std::uint64_t b = 0; b < dim; ++b) {
            double diag = 0.0;
            for (int i = 0; i < n; ++i) {
                diag += J * zbit(b, i) * zbit(b, (i + 1) % n);
                diag += fz * zbit(b, i);
            }
            if (diag != 0.0) trips.push_back({b, b, diag});
            if (flips)
                for (int i = 0; i < n; ++i)
                    trips.push_back({b ^ (std::uint64_t{1} << i), b, cplx(fx, fy * zbit(b, i))});
        }
    }
    return SparseOperator::from_triplets(dim, std::move(trips), true);
}

SparseOperator build_global_spin(int n, SpinAxis axis) {
    if (n < 1 || n > 26) throw std::invalid_argument("build_global_spin: bad n");
    const std::size_t dim = std::size_t{1} << n;
    std::vector<Triplet> trips;
    trips.reserve(dim * (axis == SpinAxis::Z ? 1 : std::size_t(n)));
    for (std::uint64_t b = 0; b < dim; ++b) {
        if (axis == SpinAxis::Z) {
            double diag = 0.0;
            for (int i = 0; i < n; ++i) diag += 0.5 * zbit(b, i);
            if (diag != 0.0) trips.push_back({b, b, diag});
        } else {
            for (int i = 0; i < n; ++i) {
                std::uint64_t b2 = b ^ (std::uint64_t{1} << i);
                cplx v = (axis == SpinAxis::X) ? cplx(0.5, 0.0) : cplx(0.0, 0.5 * zbit(b, i));
                trips.push_back({b2, b, v});
            }
        }
    }
    return SparseOperator::from_triplets(dim, std::move(trips), true);
}

SparseOperator build_staggered_spin_z(int n) {
    if (n < 1 || n > 26) throw std::invalid_argument("build_staggered_spin_z: bad n");
    const std::size_t dim = std::size_t{1} << n;
    std::vector<Triplet> trips;
    for (std::uint64_t b = 0; b < dim; ++b) {
        double diag = 0.0;
        for (int i = 0; i < n; ++i) diag += (i % 2 == 0 ? 0.5 : -0.5) * zbit(b, i);
        if (diag != 0.0) trips.push_back({b, b, diag});
    }
    return SparseOperator::from_triplets(dim, std::move(trips), true);
}

Eigen::VectorXcd apply(const SparseOperator& op, const Eigen::VectorXcd& v) { return op.apply(v); }

} // namespace spinmetro
