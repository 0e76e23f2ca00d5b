#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>

#include "qslant/errors.hpp"

namespace qslant {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace tol {

// Singular values at or below rel * sigma_max count as zero; when sigma_max
// drops below one, an absolute floor takes over so noise on tiny matrices
// does not masquerade as rank.
inline constexpr double rank_rel = 1e-10;
inline constexpr double rank_floor = 1e-12;

inline constexpr double orthonormal = 1e-12;       // Gram-matrix deviation of a basis
inline constexpr double isometry = 1e-9;           // |sigma - 1| for the restricted differential
inline constexpr double eikonal = 1e-9;            // |  |dF|^2 - rank |
inline constexpr double cluster = 1e-8;            // eigenvalue cluster width / membership
inline constexpr double right_angle = 1e-9;        // |cos theta| below this snaps to pi/2
inline constexpr double angle_match = 1e-8;        // slant angle agreement across points/structures
inline constexpr double subspace_match = 1e-8;     // principal-angle bound for "same subspace"
inline constexpr double identity_residual = 1e-9;  // algebraic tensor identities
inline constexpr double fd_residual = 1e-5;        // identities that go through finite differences
inline constexpr double vertical_check = 1e-9;     // field-value-must-be-vertical precondition

}  // namespace tol

inline double rank_threshold(double sigma_max) {
    double thr = tol::rank_rel * sigma_max;
    if (sigma_max < 1.0) thr = std::max(thr, tol::rank_floor);
    return thr;
}

// Deterministic sampling. The distributions in <random> are implementation
// defined, so uniform and normal draws are derived from raw mt19937_64 words
// to keep reports byte-identical across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // uniform on [0, 1)
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        // Box-Muller; discards the second variate to keep the stream simple.
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    Vector uniform_vector(const Vector& lo, const Vector& hi) {
        Vector v(lo.size());
        for (Index i = 0; i < lo.size(); ++i) v[i] = uniform(lo[i], hi[i]);
        return v;
    }

    Vector normal_vector(Index n) {
        Vector v(n);
        for (Index i = 0; i < n; ++i) v[i] = normal();
        return v;
    }

    // Haar-ish random orthogonal matrix: QR of a Gaussian matrix with the
    // sign of the R diagonal fixed so the result is a deterministic function
    // of the stream.
    Matrix orthogonal(Index n) {
        Matrix g(n, n);
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j) g(i, j) = normal();
        Eigen::HouseholderQR<Matrix> qr(g);
        Matrix q = qr.householderQ();
        Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
        for (Index j = 0; j < n; ++j)
            if (r(j, j) < 0.0) q.col(j) *= -1.0;
        return q;
    }

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

inline double max_abs(const Matrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double max_abs(const Vector& v) {
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

}  // namespace qslant
