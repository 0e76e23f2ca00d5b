#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

#include "qslant/core.hpp"

namespace qslant {

struct SvdResult {
    Matrix u;                    // m x m orthogonal
    std::vector<double> sigma;   // nonincreasing, length min(m, n)
    Matrix v;                    // n x n orthogonal
};

// Full SVD, m = u * diag(sigma) * v^T.
inline SvdResult svd(const Matrix& m) {
    if (!m.allFinite()) throw NumericError("svd: matrix has non-finite entries");
    Eigen::JacobiSVD<Matrix> dec(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (dec.info() != Eigen::Success) throw NumericError("svd: decomposition did not converge");
    SvdResult out;
    out.u = dec.matrixU();
    out.v = dec.matrixV();
    const auto& s = dec.singularValues();
    out.sigma.assign(s.data(), s.data() + s.size());
    return out;
}

// A subspace of R^n held as an orthonormal column basis (n x k, possibly k=0).
struct Subspace {
    Index ambient_dim = 0;
    Matrix basis;  // ambient_dim x dim, orthonormal columns

    Subspace() = default;
    Subspace(Index ambient, Matrix b) : ambient_dim(ambient), basis(std::move(b)) {
        if (basis.size() == 0) basis.resize(ambient_dim, 0);
        if (basis.rows() != ambient_dim)
            throw InputError("subspace: basis rows do not match ambient dimension");
        Matrix gram = basis.transpose() * basis - Matrix::Identity(dim(), dim());
        if (max_abs(gram) > 1e-10)
            throw InputError("subspace: basis is not orthonormal");
    }

    Index dim() const { return basis.cols(); }
    bool empty() const { return dim() == 0; }

    static Subspace full(Index ambient) { return Subspace(ambient, Matrix::Identity(ambient, ambient)); }
    static Subspace zero(Index ambient) { return Subspace(ambient, Matrix(ambient, 0)); }
};

// Orthonormal projector P = B B^T; P^2 = P, P^T = P.
inline Matrix projector(const Subspace& s) {
    if (s.empty()) return Matrix::Zero(s.ambient_dim, s.ambient_dim);
    return s.basis * s.basis.transpose();
}

// Orthonormal basis of span(columns), discarding directions with singular
// value at or below the rank threshold.
inline Subspace column_space(const Matrix& columns) {
    if (columns.cols() == 0) return Subspace::zero(columns.rows());
    SvdResult dec = svd(columns);
    double smax = dec.sigma.empty() ? 0.0 : dec.sigma.front();
    double thr = rank_threshold(smax);
    Index r = 0;
    for (double s : dec.sigma)
        if (s > thr) ++r;
    return Subspace(columns.rows(), dec.u.leftCols(r));
}

// Null space { v : |m v| <= rank_tol * sigma_max }.
inline Subspace kernel_basis(const Matrix& m, double rank_tol) {
    if (rank_tol <= 0.0) throw InputError("kernel_basis: rank tolerance must be positive");
    SvdResult dec = svd(m);
    double smax = dec.sigma.empty() ? 0.0 : dec.sigma.front();
    double thr = rank_tol * smax;
    Index r = 0;
    for (double s : dec.sigma)
        if (s > thr) ++r;
    return Subspace(m.cols(), dec.v.rightCols(m.cols() - r));
}

// Principal angles between two subspaces of the same ambient space, in
// [0, pi/2], nondecreasing. The list has min(dim a, dim b) entries.
inline std::vector<double> principal_angles(const Subspace& a, const Subspace& b) {
    if (a.ambient_dim != b.ambient_dim)
        throw InputError("principal_angles: ambient dimensions differ");
    const Subspace& lo = a.dim() <= b.dim() ? a : b;
    const Subspace& hi = a.dim() <= b.dim() ? b : a;
    if (lo.empty()) return {};
    Matrix overlap = lo.basis.transpose() * hi.basis;
    SvdResult dec = svd(overlap);
    std::vector<double> angles;
    angles.reserve(dec.sigma.size());
    for (double s : dec.sigma) angles.push_back(std::acos(std::clamp(s, 0.0, 1.0)));
    std::sort(angles.begin(), angles.end());
    return angles;
}

inline double max_principal_angle(const Subspace& a, const Subspace& b) {
    auto angles = principal_angles(a, b);
    return angles.empty() ? 0.0 : angles.back();
}

// Cosine of the angle between a single vector and a subspace.
inline double cos_angle_to(const Subspace& s, const Vector& x) {
    double n = x.norm();
    if (n == 0.0) throw InputError("cos_angle_to: zero vector has no angle");
    if (s.empty()) return 0.0;
    return std::clamp((s.basis.transpose() * x).norm() / n, 0.0, 1.0);
}

// Orthogonal complement of `inner` taken inside `outer` (inner must be a
// subset of outer for the result to mean anything).
inline Subspace complement_within(const Subspace& inner, const Subspace& outer) {
    if (inner.empty()) return outer;
    // Coordinates of inner in the outer basis; its null directions span the
    // complement.
    Matrix coords = inner.basis.transpose() * outer.basis;  // inner.dim x outer.dim
    Subspace null_in_outer = kernel_basis(coords, tol::rank_rel);
    return Subspace(outer.ambient_dim, outer.basis * null_in_outer.basis);
}

// Union of spans, orthonormalized.
inline Subspace direct_sum(const Subspace& a, const Subspace& b) {
    Matrix joined(a.ambient_dim, a.dim() + b.dim());
    joined << a.basis, b.basis;
    return column_space(joined);
}

}  // namespace qslant
