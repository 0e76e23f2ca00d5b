#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "qslant/core.hpp"
#include "qslant/dual.hpp"
#include "qslant/linalg.hpp"

namespace qslant {

// Second derivatives d2 F^c / dx_a dx_b, one symmetric in_dim x in_dim slice
// per output coordinate.
struct Hessian3Tensor {
    Index out_dim = 0;
    Index in_dim = 0;
    std::vector<Matrix> slices;

    const Matrix& slice(Index c) const { return slices[static_cast<size_t>(c)]; }

    // (X, Y) -> sum_ab X^a Y^b d2F/dx_a dx_b, a vector in the codomain.
    Vector contract(const Vector& x, const Vector& y) const {
        Vector out(out_dim);
        for (Index c = 0; c < out_dim; ++c) out[c] = x.dot(slices[static_cast<size_t>(c)] * y);
        return out;
    }

    Vector trace() const {
        Vector out(out_dim);
        for (Index c = 0; c < out_dim; ++c) out[c] = slices[static_cast<size_t>(c)].trace();
        return out;
    }

    double max_entry() const {
        double m = 0.0;
        for (const auto& s : slices) m = std::max(m, max_abs(s));
        return m;
    }
};

// Exact Jacobian of an evaluable map via one dual-number sweep per input
// coordinate.
template <typename MapT>
Matrix jacobian(const MapT& f, const Vector& p) {
    const Index d = f.domain_dim();
    const Index n = f.codomain_dim();
    Matrix jac(n, d);
    std::vector<Dual1> x(static_cast<size_t>(d));
    for (Index j = 0; j < d; ++j) {
        for (Index i = 0; i < d; ++i) x[static_cast<size_t>(i)] = Dual1(p[i], i == j ? 1.0 : 0.0);
        auto out = f.template evaluate<Dual1>(x);
        for (Index c = 0; c < n; ++c) jac(c, j) = out[static_cast<size_t>(c)].dot;
    }
    return jac;
}

// Exact Hessian via nested duals; each (a, b) pair is computed once and
// stored symmetrically.
template <typename MapT>
Hessian3Tensor hessian(const MapT& f, const Vector& p) {
    const Index d = f.domain_dim();
    const Index n = f.codomain_dim();
    Hessian3Tensor h;
    h.out_dim = n;
    h.in_dim = d;
    h.slices.assign(static_cast<size_t>(n), Matrix::Zero(d, d));
    std::vector<Dual2> x(static_cast<size_t>(d));
    for (Index a = 0; a < d; ++a) {
        for (Index b = a; b < d; ++b) {
            for (Index i = 0; i < d; ++i)
                x[static_cast<size_t>(i)] = second_order_seed(p[i], i == a, i == b);
            auto out = f.template evaluate<Dual2>(x);
            for (Index c = 0; c < n; ++c) {
                double v = out[static_cast<size_t>(c)].dot.dot;
                h.slices[static_cast<size_t>(c)](a, b) = v;
                h.slices[static_cast<size_t>(c)](b, a) = v;
            }
        }
    }
    return h;
}

template <typename MapT>
Vector value_at(const MapT& f, const Vector& p) {
    std::vector<double> x(p.data(), p.data() + p.size());
    auto out = f.template evaluate<double>(x);
    return Eigen::Map<const Vector>(out.data(), static_cast<Index>(out.size()));
}

inline double fd_step(const Vector& p) {
    return 1e-4 * (1.0 + max_abs(p));
}

template <typename ValueT>
struct FdDerivative {
    ValueT estimate;       // Richardson-extrapolated central difference
    double error = 0.0;    // |E(h) - E(h/2)|, a working accuracy indicator
};

// Directional derivative of a matrix- or vector-valued field by central
// differences at steps h and h/2, combined by Richardson extrapolation.
// Linear in `direction`; the step is taken along the unit direction.
template <typename FieldT>
auto fd_directional(const FieldT& field, const Vector& p, const Vector& direction,
                    double step = 0.0, bool richardson = true)
    -> FdDerivative<decltype(field(p))> {
    using ValueT = decltype(field(p));
    double scale = direction.norm();
    FdDerivative<ValueT> out;
    if (scale == 0.0) {
        out.estimate = ValueT(field(p));
        out.estimate.setZero();
        return out;
    }
    Vector d = direction / scale;
    double h = step > 0.0 ? step : fd_step(p);

    auto central = [&](double hh) -> ValueT {
        return (field(p + hh * d) - field(p - hh * d)) / (2.0 * hh);
    };
    ValueT coarse = central(h);
    ValueT fine = central(h / 2.0);
    out.error = scale * max_abs(Matrix(coarse - fine));
    out.estimate = richardson ? ValueT((4.0 * fine - coarse) / 3.0) : fine;
    out.estimate *= scale;
    return out;
}

namespace detail {

struct RankedProjector {
    Matrix p_vertical;
    Index rank = 0;
};

template <typename MapT>
RankedProjector vertical_projector_at(const MapT& f, const Vector& q) {
    Matrix jac = jacobian(f, q);
    SvdResult dec = svd(jac);
    double smax = dec.sigma.empty() ? 0.0 : dec.sigma.front();
    double thr = rank_threshold(smax);
    RankedProjector out;
    for (double s : dec.sigma)
        if (s > thr) ++out.rank;
    const Index d = jac.cols();
    Matrix row_space = dec.v.leftCols(out.rank);
    out.p_vertical = Matrix::Identity(d, d) - row_space * row_space.transpose();
    return out;
}

}  // namespace detail

// The field q -> orthogonal projector onto ker dF at q. Smooth wherever the
// rank is constant, which callers must ensure; every evaluation re-derives
// the rank and mismatches are reported.
template <typename MapT>
class VerticalProjectorField {
public:
    VerticalProjectorField(const MapT& f, Index expected_rank)
        : f_(&f), expected_rank_(expected_rank) {}

    Matrix operator()(const Vector& q) const {
        auto rp = detail::vertical_projector_at(*f_, q);
        if (rp.rank != expected_rank_)
            throw ConstantRankViolation("projector field: rank changed from " +
                                        std::to_string(expected_rank_) + " to " +
                                        std::to_string(rp.rank) + " near the base point");
        return rp.p_vertical;
    }

private:
    const MapT* f_;
    Index expected_rank_;
};

// Directional derivative of the kernel-projector field. Finite differences
// are used here on purpose: differentiating through the SVD is
// ill-conditioned near clustered singular values, while the projector itself
// is smooth under constant rank.
template <typename MapT>
FdDerivative<Matrix> projector_derivative(const MapT& f, const Vector& p, const Vector& direction,
                                          double step = 0.0, bool richardson = true) {
    Index rank_at_p = detail::vertical_projector_at(f, p).rank;
    VerticalProjectorField<MapT> field(f, rank_at_p);
    return fd_directional(field, p, direction, step, richardson);
}

}  // namespace qslant
