#pragma once

// Shared helpers for the unit suites. The sphere oracle below is a
// hand-coded, closed-form description of the norm map on R^4 \ {0}; it is
// kept independent of the library's evaluation path on purpose so that every
// comparison against it is a genuine cross-check.

#include <cmath>
#include <string>
#include <vector>

#include "qslant/core.hpp"
#include "qslant/map.hpp"

namespace testsup {

using qslant::Index;
using qslant::Matrix;
using qslant::Vector;

inline std::string corpus_dir() { return QSLANT_CORPUS_DIR; }

inline std::string corpus_file(const std::string& stem) {
    return corpus_dir() + "/" + stem + ".json";
}

// ---- norm map oracle -------------------------------------------------------

// f(x) = |x|, so df = x^T/|x| (1 x 4).
inline Matrix sphere_jacobian(const Vector& x) {
    Matrix j(1, x.size());
    j.row(0) = x.transpose() / x.norm();
    return j;
}

// Hessian of |x|: (I - unit unit^T)/|x|.
inline Matrix sphere_hessian(const Vector& x) {
    double r = x.norm();
    Vector u = x / r;
    return (Matrix::Identity(x.size(), x.size()) - u * u.transpose()) / r;
}

// Kernel projector of df: tangent space of the sphere through x.
inline Matrix sphere_vertical_projector(const Vector& x) {
    Vector u = x / x.norm();
    return Matrix::Identity(x.size(), x.size()) - u * u.transpose();
}

// Directional derivative of the kernel projector along v.
inline Matrix sphere_projector_derivative(const Vector& x, const Vector& v) {
    double r2 = x.squaredNorm();
    Matrix sym = (v * x.transpose() + x * v.transpose()) / r2;
    return -sym + (2.0 * x.dot(v) / (r2 * r2)) * (x * x.transpose());
}

// Second fundamental form of the sphere fiber: T_X Y = -<X, Y> x / |x|^2 for
// vertical X, Y.
inline Vector sphere_fiber_second_form(const Vector& x, const Vector& vx, const Vector& vy) {
    return -(vx.dot(vy) / x.squaredNorm()) * x;
}

inline double sphere_tension_norm(const Vector& x) { return 3.0 / x.norm(); }

inline Vector sphere_mean_curvature(const Vector& x) { return -x / x.squaredNorm(); }

// ---- misc ------------------------------------------------------------------

inline qslant::SmoothMap parse_map(Index dom, Index cod, const std::vector<std::string>& comps,
                                   std::map<std::string, double> params = {}) {
    std::vector<qslant::Expr> exprs;
    for (const auto& c : comps) exprs.push_back(qslant::parse_expr(c));
    return qslant::SmoothMap(dom, cod, std::move(exprs), std::move(params));
}

inline Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Index>(xs.size()));
    Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

// Riemannian affine map with prescribed rank: a = P [I_r 0] Q^T.
inline qslant::SmoothMap random_isometric_affine(qslant::Rng& rng, Index dom, Index cod, Index rank) {
    Matrix p = rng.orthogonal(cod);
    Matrix q = rng.orthogonal(dom);
    Matrix a = p.leftCols(rank) * q.leftCols(rank).transpose();
    return qslant::SmoothMap::affine(a, rng.normal_vector(cod), "random_isometric");
}

}  // namespace testsup
