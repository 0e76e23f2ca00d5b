#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qslant/core.hpp"
#include "qslant/derivatives.hpp"
#include "qslant/hstructure.hpp"
#include "qslant/map.hpp"
#include "qslant/slant.hpp"

namespace qslant {

// Everything here realizes covariant derivatives as coordinate derivatives:
// domain and codomain are flat Euclidean spaces, so the second fundamental
// form is the plain Hessian contraction and the fundamental tensors reduce to
// derivatives of the kernel-projector field.

struct SecondFormValue {
    Vector value;                 // in the codomain
    Vector range_component;
    Vector range_perp_component;
};

template <typename MapT>
SecondFormValue second_fundamental_form(const MapT& f, const TangentSplit& split, const Vector& x,
                                        const Vector& y) {
    Hessian3Tensor h = hessian(f, split.point);
    SecondFormValue out;
    out.value = h.contract(x, y);
    out.range_component = projector(split.range) * out.value;
    out.range_perp_component = out.value - out.range_component;
    return out;
}

// Trace of the second fundamental form over an orthonormal frame of the
// domain; the coordinate frame gives the component Laplacians. A rotated
// frame must give the same vector, which is asserted on every call.
template <typename MapT>
Vector tension(const MapT& f, const Vector& p) {
    Hessian3Tensor h = hessian(f, p);
    Vector tau = h.trace();
    Rng rng(0x5eedu);
    Matrix q = rng.orthogonal(h.in_dim);
    Vector check = Vector::Zero(h.out_dim);
    for (Index a = 0; a < h.in_dim; ++a) check += h.contract(q.col(a), q.col(a));
    if ((tau - check).norm() > tol::identity_residual * (1.0 + tau.norm()))
        throw StructuralInconsistency("tension: trace is frame dependent");
    return tau;
}

namespace detail {

// Shared scaffolding for the tensor evaluators at one analysis point.
template <typename MapT>
class FlowPoint {
public:
    FlowPoint(const MapT& f, const TangentSplit& split)
        : split_(&split),
          p_v_(projector(split.vertical)),
          p_h_(projector(split.horizontal)),
          pv_field_(f, split.rank) {}

    const TangentSplit& split() const { return *split_; }
    const Vector& point() const { return split_->point; }
    const Matrix& p_v() const { return p_v_; }
    const Matrix& p_h() const { return p_h_; }

    Vector vertical_part(const Vector& u) const { return p_v_ * u; }
    Vector horizontal_part(const Vector& u) const { return p_h_ * u; }

    // Pointwise block actions of a structure matrix.
    Vector phi(const Matrix& r, const Vector& u) const { return p_v_ * (r * (p_v_ * u)); }
    Vector omega(const Matrix& r, const Vector& u) const { return p_h_ * (r * (p_v_ * u)); }
    Vector b(const Matrix& r, const Vector& u) const { return p_v_ * (r * (p_h_ * u)); }
    Vector c(const Matrix& r, const Vector& u) const { return p_h_ * (r * (p_h_ * u)); }

    // Derivative of the kernel projector along v, cached per direction-free
    // call pattern (directions vary, so no caching beyond the field).
    Matrix projector_slope(const Vector& v) const {
        return fd_directional(pv_field_, point(), v).estimate;
    }

    // O'Neill tensors from the projector slope. For any extension of w,
    // T_e w = H d(Vw) + V d(Hw) collapses to (P_H - P_V) (dP_V) w.
    Vector oneill_t(const Vector& e, const Vector& w) const {
        Vector v = p_v_ * e;
        return (p_h_ - p_v_) * (projector_slope(v) * w);
    }

    Vector oneill_a(const Vector& e, const Vector& w) const {
        Vector z = p_h_ * e;
        return (p_h_ - p_v_) * (projector_slope(z) * w);
    }

    // Derivative of a numeric vector field along v at the point.
    Vector field_slope(const std::function<Vector(const Vector&)>& field, const Vector& v) const {
        return fd_directional(field, point(), v).estimate;
    }

    // q -> P_V(q) R P_V(q) Yf(q) and friends, as differentiable fields.
    std::function<Vector(const Vector&)> phi_field(const Matrix& r, const VectorFieldExpr& yf) const {
        auto pv = pv_field_;
        return [pv, &r, &yf](const Vector& q) -> Vector {
            Matrix p = pv(q);
            return p * (r * (p * yf.value(q)));
        };
    }

    std::function<Vector(const Vector&)> omega_field(const Matrix& r, const VectorFieldExpr& yf) const {
        auto pv = pv_field_;
        return [pv, &r, &yf](const Vector& q) -> Vector {
            Matrix p = pv(q);
            Vector u = p * yf.value(q);
            return r * u - p * (r * u);
        };
    }

    std::function<Vector(const Vector&)> b_field(const Matrix& r, const VectorFieldExpr& zf) const {
        auto pv = pv_field_;
        return [pv, &r, &zf](const Vector& q) -> Vector {
            Matrix p = pv(q);
            Vector z = zf.value(q);
            return p * (r * (z - p * z));
        };
    }

    std::function<Vector(const Vector&)> c_field(const Matrix& r, const VectorFieldExpr& zf) const {
        auto pv = pv_field_;
        return [pv, &r, &zf](const Vector& q) -> Vector {
            Matrix p = pv(q);
            Vector z = zf.value(q);
            Vector rz = r * (z - p * z);
            return rz - p * rz;
        };
    }

    void ensure_vertical(const Vector& x, const std::string& who) const {
        if ((p_h_ * x).norm() > tol::vertical_check * std::max(1.0, x.norm()))
            throw InputError(who + ": field value is not vertical at the analysis point");
    }

    void ensure_horizontal(const Vector& z, const std::string& who) const {
        if ((p_v_ * z).norm() > tol::vertical_check * std::max(1.0, z.norm()))
            throw InputError(who + ": field value is not horizontal at the analysis point");
    }

private:
    const TangentSplit* split_;
    Matrix p_v_, p_h_;
    VerticalProjectorField<MapT> pv_field_;
};

}  // namespace detail

template <typename MapT>
Vector oneill_T(const MapT& f, const TangentSplit& split, const Vector& e, const Vector& w) {
    return detail::FlowPoint<MapT>(f, split).oneill_t(e, w);
}

template <typename MapT>
Vector oneill_T(const MapT& f, const Vector& p, const Vector& e, const Vector& w) {
    return oneill_T(f, split_tangent(f, p), e, w);
}

template <typename MapT>
Vector oneill_A(const MapT& f, const TangentSplit& split, const Vector& e, const Vector& w) {
    return detail::FlowPoint<MapT>(f, split).oneill_a(e, w);
}

template <typename MapT>
Vector oneill_A(const MapT& f, const Vector& p, const Vector& e, const Vector& w) {
    return oneill_A(f, split_tangent(f, p), e, w);
}

// V-projected flat derivative of Y along X(p); X must be vertical there.
template <typename MapT>
Vector vertical_connection(const MapT& f, const TangentSplit& split, const VectorFieldExpr& x_field,
                           const VectorFieldExpr& y_field) {
    detail::FlowPoint<MapT> fp(f, split);
    Vector x = x_field.value(split.point);
    fp.ensure_vertical(x, "vertical_connection");
    return fp.vertical_part(y_field.jac(split.point) * x);
}

struct ParallelDefects {
    double omega_defect = 0.0;  // | (nabla_X omega) Y |
    double phi_defect = 0.0;    // | (nabla_X phi) Y |
};

// Defect of omega (and phi) being parallel along vertical directions:
// (nabla_X omega)Y = H d(omega Y) - omega(vhat_X Y), and the phi companion.
template <typename MapT>
ParallelDefects omega_parallel_residual(const MapT& f, const TangentSplit& split, const Matrix& r,
                                        const VectorFieldExpr& x_field, const VectorFieldExpr& y_field) {
    detail::FlowPoint<MapT> fp(f, split);
    Vector x = x_field.value(split.point);
    fp.ensure_vertical(x, "omega_parallel_residual");
    Vector vhat_y = fp.vertical_part(y_field.jac(split.point) * x);

    ParallelDefects out;
    out.omega_defect =
        (fp.horizontal_part(fp.field_slope(fp.omega_field(r, y_field), x)) - fp.omega(r, vhat_y)).norm();
    out.phi_defect =
        (fp.vertical_part(fp.field_slope(fp.phi_field(r, y_field), x)) - fp.phi(r, vhat_y)).norm();
    return out;
}

struct ConditionResidual {
    std::string condition_id;
    double max_residual = 0.0;
    int frame_pairs_evaluated = 0;
    double tolerance = tol::fd_residual;
    bool passed = false;

    void absorb(double residual) {
        max_residual = std::max(max_residual, residual);
        ++frame_pairs_evaluated;
    }
    void finish() { passed = max_residual <= tolerance; }
};

// The eight commutation identities between the structure blocks, the
// fundamental tensors and the projected connections. These are theorems for
// any constant structure; residuals beyond finite-difference noise indicate a
// broken evaluator.
template <typename MapT>
std::vector<ConditionResidual> lemma_identities(const MapT& f, const TangentSplit& split,
                                                const Matrix& r, const std::string& tag,
                                                const std::vector<VectorFieldExpr>& vertical_fields,
                                                const std::vector<VectorFieldExpr>& horizontal_fields) {
    detail::FlowPoint<MapT> fp(f, split);
    const Vector& p = split.point;

    std::vector<ConditionResidual> out(8);
    const char* names[8] = {"vv_phi", "vv_omega", "hh_b", "hh_c",
                            "vh_b",  "vh_c",     "hv_phi", "hv_omega"};
    for (int i = 0; i < 8; ++i) {
        out[i].condition_id = "tensor_identity:" + tag + ":" + names[i];
        out[i].tolerance = tol::fd_residual;
    }

    for (const auto& xf : vertical_fields) {
        Vector x = xf.value(p);
        fp.ensure_vertical(x, "tensor identities");
        for (const auto& yf : vertical_fields) {
            Vector y = yf.value(p);
            Vector vhat_y = fp.vertical_part(yf.jac(p) * x);
            Vector txy = fp.oneill_t(x, y);

            Vector r1 = fp.vertical_part(fp.field_slope(fp.phi_field(r, yf), x)) +
                        fp.oneill_t(x, fp.omega(r, y)) - fp.phi(r, vhat_y) - fp.b(r, txy);
            out[0].absorb(r1.norm());

            Vector r2 = fp.oneill_t(x, fp.phi(r, y)) +
                        fp.horizontal_part(fp.field_slope(fp.omega_field(r, yf), x)) -
                        fp.omega(r, vhat_y) - fp.c(r, txy);
            out[1].absorb(r2.norm());
        }
        for (const auto& zf : horizontal_fields) {
            Vector z = zf.value(p);
            Vector hgrad_z = fp.horizontal_part(zf.jac(p) * x);
            Vector txz = fp.oneill_t(x, z);

            Vector r5 = fp.vertical_part(fp.field_slope(fp.b_field(r, zf), x)) +
                        fp.oneill_t(x, fp.c(r, z)) - fp.phi(r, txz) - fp.b(r, hgrad_z);
            out[4].absorb(r5.norm());

            Vector r6 = fp.oneill_t(x, fp.b(r, z)) +
                        fp.horizontal_part(fp.field_slope(fp.c_field(r, zf), x)) -
                        fp.omega(r, txz) - fp.c(r, hgrad_z);
            out[5].absorb(r6.norm());
        }
    }

    for (const auto& zf : horizontal_fields) {
        Vector z = zf.value(p);
        fp.ensure_horizontal(z, "tensor identities");
        for (const auto& wf : horizontal_fields) {
            Vector w = wf.value(p);
            Vector hgrad_w = fp.horizontal_part(wf.jac(p) * z);
            Vector azw = fp.oneill_a(z, w);

            Vector r3 = fp.vertical_part(fp.field_slope(fp.b_field(r, wf), z)) +
                        fp.oneill_a(z, fp.c(r, w)) - fp.phi(r, azw) - fp.b(r, hgrad_w);
            out[2].absorb(r3.norm());

            Vector r4 = fp.oneill_a(z, fp.b(r, w)) +
                        fp.horizontal_part(fp.field_slope(fp.c_field(r, wf), z)) -
                        fp.omega(r, azw) - fp.c(r, hgrad_w);
            out[3].absorb(r4.norm());
        }
        for (const auto& xf : vertical_fields) {
            Vector x = xf.value(p);
            Vector vgrad_x = fp.vertical_part(xf.jac(p) * z);
            Vector azx = fp.oneill_a(z, x);

            Vector r7 = fp.vertical_part(fp.field_slope(fp.phi_field(r, xf), z)) +
                        fp.oneill_a(z, fp.omega(r, x)) - fp.phi(r, vgrad_x) - fp.b(r, azx);
            out[6].absorb(r7.norm());

            Vector r8 = fp.oneill_a(z, fp.phi(r, x)) +
                        fp.horizontal_part(fp.field_slope(fp.omega_field(r, xf), z)) -
                        fp.omega(r, vgrad_x) - fp.c(r, azx);
            out[7].absorb(r8.norm());
        }
    }

    for (auto& c : out) c.finish();
    return out;
}

// ---------------------------------------------------------------------------
// Frame resolution

// Evaluators that differentiate along a distribution need smooth spanning
// fields. Affine maps have constant splits, so constant fields read off one
// analysis point are exact; anything else needs fields supplied with the map.
template <typename MapT>
FramePack resolve_frames(const MapT& f, const Classification& cls,
                         const std::optional<FramePack>& supplied) {
    if (supplied && supplied->has_vertical()) return *supplied;

    const TangentSplit& split0 = cls.splits.front();
    if (hessian(f, split0.point).max_entry() != 0.0)
        throw UnsupportedInputError(
            "no smooth frame fields available: supply frames with the map spec (pointwise "
            "singular-vector bases are not differentiable)");

    FramePack frames;
    for (Index c = 0; c < split0.vertical.dim(); ++c)
        frames.vertical.push_back(VectorFieldExpr::constant(split0.vertical.basis.col(c)));
    for (Index c = 0; c < split0.horizontal.dim(); ++c)
        frames.horizontal.push_back(VectorFieldExpr::constant(split0.horizontal.basis.col(c)));
    for (const auto& tag : structure_tags()) {
        const SemiSlantReport& rep = cls.reports.at(tag).front();
        for (Index c = 0; c < rep.d1.dim(); ++c)
            frames.d1[tag].push_back(VectorFieldExpr::constant(rep.d1.basis.col(c)));
        for (Index c = 0; c < rep.d2.dim(); ++c)
            frames.d2[tag].push_back(VectorFieldExpr::constant(rep.d2.basis.col(c)));
    }
    return frames;
}

namespace detail {

inline Subspace frame_span(const std::vector<VectorFieldExpr>& fields, const Vector& p, Index ambient) {
    Matrix m(ambient, static_cast<Index>(fields.size()));
    for (size_t i = 0; i < fields.size(); ++i) m.col(static_cast<Index>(i)) = fields[i].value(p);
    return column_space(m);
}

inline void ensure_spans(const std::vector<VectorFieldExpr>& fields, const Subspace& target,
                         const Vector& p, const std::string& what) {
    if (static_cast<Index>(fields.size()) < target.dim())
        throw UnsupportedInputError("frames: not enough fields to span " + what);
    Subspace s = frame_span(fields, p, target.ambient_dim);
    if (s.dim() != target.dim() || max_principal_angle(s, target) > 1e-6)
        throw UnsupportedInputError("frames: supplied fields do not span " + what +
                                    " at an analysis point");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Theorem-condition evaluators. Each returns the residual of the displayed
// condition per structure together with an independent oracle for the
// geometric property itself; the two must agree about vanishing.

inline ConditionResidual make_agreement(const std::string& id, double condition, double oracle,
                                        double tolerance) {
    ConditionResidual agree;
    agree.condition_id = id;
    agree.tolerance = 0.5;
    agree.max_residual = ((condition <= tolerance) == (oracle <= tolerance)) ? 0.0 : 1.0;
    agree.frame_pairs_evaluated = 1;
    agree.finish();
    return agree;
}

template <typename MapT>
std::vector<ConditionResidual> integrability_d1_residual(const MapT& f, const Classification& cls,
                                                         const HypercomplexStructure& h,
                                                         const FramePack& frames) {
    std::vector<ConditionResidual> out;
    for (const auto& tag : structure_tags()) {
        const Matrix& r = h.structure(tag);
        auto it = frames.d1.find(tag);
        ConditionResidual cond, oracle;
        cond.condition_id = "d1_integrability_condition:" + tag;
        oracle.condition_id = "d1_integrability_bracket_oracle:" + tag;

        for (size_t pi = 0; pi < cls.splits.size(); ++pi) {
            const TangentSplit& split = cls.splits[pi];
            const SemiSlantReport& rep = cls.reports.at(tag)[pi];
            if (rep.d1.empty()) continue;
            if (it == frames.d1.end())
                throw UnsupportedInputError("frames: no d1 fields for structure " + tag);
            const auto& fields = it->second;
            detail::ensure_spans(fields, rep.d1, split.point, "d1(" + tag + ")");
            detail::FlowPoint<MapT> fp(f, split);
            Matrix p_d2 = projector(rep.d2);
            Matrix p_d1 = projector(rep.d1);

            for (size_t a = 0; a < fields.size(); ++a) {
                for (size_t b = a + 1; b < fields.size(); ++b) {
                    const auto& xf = fields[a];
                    const auto& yf = fields[b];
                    Vector x = xf.value(split.point);
                    Vector y = yf.value(split.point);

                    Vector dphi = fp.vertical_part(fp.field_slope(fp.phi_field(r, yf), x)) -
                                  fp.vertical_part(fp.field_slope(fp.phi_field(r, xf), y));
                    Vector t_sym = fp.oneill_t(x, fp.phi(r, y)) - fp.oneill_t(y, fp.phi(r, x));
                    cond.absorb(std::max((p_d2 * dphi).norm(), t_sym.norm()));

                    Vector br = bracket(xf, yf, split.point);
                    oracle.absorb((br - p_d1 * br).norm());
                }
            }
        }
        cond.finish();
        oracle.finish();
        out.push_back(cond);
        out.push_back(oracle);
        out.push_back(make_agreement("d1_integrability_agreement:" + tag, cond.max_residual,
                                     oracle.max_residual, tol::fd_residual));
    }
    return out;
}

template <typename MapT>
std::vector<ConditionResidual> integrability_d2_residual(const MapT& f, const Classification& cls,
                                                         const HypercomplexStructure& h,
                                                         const FramePack& frames) {
    std::vector<ConditionResidual> out;
    for (const auto& tag : structure_tags()) {
        const Matrix& r = h.structure(tag);
        auto it = frames.d2.find(tag);
        ConditionResidual cond, oracle;
        cond.condition_id = "d2_integrability_condition:" + tag;
        oracle.condition_id = "d2_integrability_bracket_oracle:" + tag;

        for (size_t pi = 0; pi < cls.splits.size(); ++pi) {
            const TangentSplit& split = cls.splits[pi];
            const SemiSlantReport& rep = cls.reports.at(tag)[pi];
            if (rep.d2.empty()) continue;
            if (it == frames.d2.end())
                throw UnsupportedInputError("frames: no d2 fields for structure " + tag);
            const auto& fields = it->second;
            detail::ensure_spans(fields, rep.d2, split.point, "d2(" + tag + ")");
            detail::FlowPoint<MapT> fp(f, split);
            Matrix p_d1 = projector(rep.d1);

            for (size_t a = 0; a < fields.size(); ++a) {
                for (size_t b = a + 1; b < fields.size(); ++b) {
                    const auto& xf = fields[a];
                    const auto& yf = fields[b];
                    Vector x = xf.value(split.point);
                    Vector y = yf.value(split.point);

                    Vector expr = fp.vertical_part(fp.field_slope(fp.phi_field(r, yf), x)) -
                                  fp.vertical_part(fp.field_slope(fp.phi_field(r, xf), y)) +
                                  fp.oneill_t(x, fp.omega(r, y)) - fp.oneill_t(y, fp.omega(r, x));
                    cond.absorb((p_d1 * expr).norm());

                    Vector br = bracket(xf, yf, split.point);
                    oracle.absorb((p_d1 * br).norm());
                }
            }
        }
        cond.finish();
        oracle.finish();
        out.push_back(cond);
        out.push_back(oracle);
        out.push_back(make_agreement("d2_integrability_agreement:" + tag, cond.max_residual,
                                     oracle.max_residual, tol::fd_residual));
    }
    return out;
}

struct CurvatureSummary {
    Vector fiber_mean_curvature;       // H, horizontal, in the domain
    Vector range_mean_curvature;       // H-tilde, range-perp, in the codomain
    Vector tension;                    // in the codomain
    double umbilical_residual = 0.0;
};

struct HarmonicityReport {
    CurvatureSummary curvature;
    double tension_norm = 0.0;
    double h_tilde_norm = 0.0;
    std::map<std::string, double> d2_trace_norm;          // |trace of the second form over d2|
    std::map<std::string, std::optional<bool>> d1_integrable;  // absent when no frames usable
    bool harmonic = false;
    std::map<std::string, bool> hypothesis_holds;  // H-tilde = 0, d1 integrable, d2 trace zero
};

// Which of the harmonicity sufficient conditions hold numerically, plus the
// raw tension. The implication "hypotheses => harmonic" is what tests check.
template <typename MapT>
HarmonicityReport harmonicity_report(const MapT& f, const Classification& cls,
                                     const HypercomplexStructure& h,
                                     const std::optional<FramePack>& supplied_frames) {
    HarmonicityReport out;
    const TangentSplit& split0 = cls.splits.front();
    Hessian3Tensor hess0 = hessian(f, split0.point);

    out.curvature.tension = tension(f, split0.point);
    out.tension_norm = out.curvature.tension.norm();
    out.harmonic = out.tension_norm <= tol::fd_residual;

    // H-tilde: range-perp part of the horizontal trace, averaged over the
    // horizontal dimension.
    Index l = split0.horizontal.dim();
    Vector horiz_trace = Vector::Zero(f.codomain_dim());
    for (Index a = 0; a < l; ++a) {
        Vector z = split0.horizontal.basis.col(a);
        horiz_trace += hess0.contract(z, z);
    }
    Matrix q_perp = projector(split0.range_perp);
    out.curvature.range_mean_curvature =
        l > 0 ? Vector(q_perp * horiz_trace / static_cast<double>(l)) : Vector::Zero(f.codomain_dim());
    out.h_tilde_norm = out.curvature.range_mean_curvature.norm();

    // Fiber mean curvature via the T tensor.
    detail::FlowPoint<MapT> fp(f, split0);
    Index kv = split0.vertical.dim();
    Vector mean = Vector::Zero(f.domain_dim());
    for (Index i = 0; i < kv; ++i) {
        Vector v = split0.vertical.basis.col(i);
        mean += fp.oneill_t(v, v);
    }
    out.curvature.fiber_mean_curvature = kv > 0 ? Vector(mean / static_cast<double>(kv)) : mean;

    std::vector<ConditionResidual> d1_entries;
    try {
        FramePack frames = resolve_frames(f, cls, supplied_frames);
        d1_entries = integrability_d1_residual(f, cls, h, frames);
    } catch (const UnsupportedInputError&) {
        d1_entries.clear();
    }

    for (const auto& tag : structure_tags()) {
        const SemiSlantReport& rep = cls.reports.at(tag).front();
        Vector d2_trace = Vector::Zero(f.codomain_dim());
        for (Index i = 0; i < rep.d2.dim(); ++i) {
            Vector x = rep.d2.basis.col(i);
            d2_trace += hess0.contract(x, x);
        }
        out.d2_trace_norm[tag] = d2_trace.norm();

        out.d1_integrable[tag] = std::nullopt;
        for (const auto& e : d1_entries)
            if (e.condition_id == "d1_integrability_bracket_oracle:" + tag)
                out.d1_integrable[tag] = e.max_residual <= tol::fd_residual;

        bool hyp = out.h_tilde_norm <= tol::fd_residual &&
                   out.d1_integrable[tag].value_or(false) &&
                   out.d2_trace_norm[tag] <= tol::fd_residual;
        out.hypothesis_holds[tag] = hyp;
    }
    return out;
}

template <typename MapT>
std::vector<ConditionResidual> totally_geodesic_residual(const MapT& f, const Classification& cls,
                                                         const HypercomplexStructure& h,
                                                         const FramePack& frames) {
    std::vector<ConditionResidual> out;

    ConditionResidual hypothesis, full_oracle, mixed_oracle;
    hypothesis.condition_id = "geodesic_hypothesis_range_perp_horizontal";
    full_oracle.condition_id = "geodesic_second_form_full_oracle";
    mixed_oracle.condition_id = "geodesic_second_form_mixed_vertical_oracle";

    for (const auto& split : cls.splits) {
        Hessian3Tensor hess_p = hessian(f, split.point);
        Matrix q_perp = projector(split.range_perp);
        const Index d = f.domain_dim();
        for (Index a = 0; a < d; ++a)
            for (Index b = a; b < d; ++b) {
                Vector ea = Vector::Unit(d, a);
                Vector eb = Vector::Unit(d, b);
                full_oracle.absorb(hess_p.contract(ea, eb).norm());
            }
        for (Index a = 0; a < split.horizontal.dim(); ++a)
            for (Index b = a; b < split.horizontal.dim(); ++b)
                hypothesis.absorb((q_perp * hess_p.contract(split.horizontal.basis.col(a),
                                                            split.horizontal.basis.col(b)))
                                      .norm());
        for (Index a = 0; a < split.vertical.dim(); ++a) {
            Vector x = split.vertical.basis.col(a);
            for (Index b = a; b < split.vertical.dim(); ++b)
                mixed_oracle.absorb(hess_p.contract(x, split.vertical.basis.col(b)).norm());
            for (Index b = 0; b < split.horizontal.dim(); ++b)
                mixed_oracle.absorb(hess_p.contract(x, split.horizontal.basis.col(b)).norm());
        }
    }
    hypothesis.finish();
    full_oracle.finish();
    mixed_oracle.finish();

    for (const auto& tag : structure_tags()) {
        const Matrix& r = h.structure(tag);
        ConditionResidual cond;
        cond.condition_id = "geodesic_condition:" + tag;

        for (size_t pi = 0; pi < cls.splits.size(); ++pi) {
            const TangentSplit& split = cls.splits[pi];
            detail::FlowPoint<MapT> fp(f, split);
            detail::ensure_spans(frames.vertical, split.vertical, split.point, "the kernel");
            detail::ensure_spans(frames.horizontal, split.horizontal, split.point,
                                 "the horizontal space");
            const Vector& p = split.point;

            for (const auto& xf : frames.vertical) {
                Vector x = xf.value(p);
                fp.ensure_vertical(x, "geodesic condition");
                for (const auto& yf : frames.vertical) {
                    Vector y = yf.value(p);
                    Vector inner_v = fp.vertical_part(fp.field_slope(fp.phi_field(r, yf), x)) +
                                     fp.oneill_t(x, fp.omega(r, y));
                    Vector inner_h = fp.oneill_t(x, fp.phi(r, y)) +
                                     fp.horizontal_part(fp.field_slope(fp.omega_field(r, yf), x));
                    cond.absorb((fp.omega(r, inner_v) + fp.c(r, inner_h)).norm());
                }
                for (const auto& zf : frames.horizontal) {
                    Vector z = zf.value(p);
                    Vector inner_v = fp.vertical_part(fp.field_slope(fp.b_field(r, zf), x)) +
                                     fp.oneill_t(x, fp.c(r, z));
                    Vector inner_h = fp.oneill_t(x, fp.b(r, z)) +
                                     fp.horizontal_part(fp.field_slope(fp.c_field(r, zf), x));
                    cond.absorb((fp.omega(r, inner_v) + fp.c(r, inner_h)).norm());
                }
            }
        }
        cond.finish();
        out.push_back(cond);
        out.push_back(make_agreement("geodesic_agreement:" + tag, cond.max_residual,
                                     mixed_oracle.max_residual, tol::fd_residual));
    }
    out.push_back(hypothesis);
    out.push_back(mixed_oracle);
    out.push_back(full_oracle);
    return out;
}

template <typename MapT>
std::vector<ConditionResidual> product_decomposition_residual(const MapT& f, const Classification& cls,
                                                              const HypercomplexStructure& h,
                                                              const FramePack& frames) {
    std::vector<ConditionResidual> out;

    ConditionResidual v_defect, h_defect;
    v_defect.condition_id = "kernel_autoparallel_oracle";
    h_defect.condition_id = "horizontal_autoparallel_oracle";
    for (const auto& split : cls.splits) {
        detail::FlowPoint<MapT> fp(f, split);
        const Vector& p = split.point;
        for (const auto& xf : frames.vertical) {
            Vector x = xf.value(p);
            for (const auto& yf : frames.vertical)
                v_defect.absorb(fp.horizontal_part(yf.jac(p) * x).norm());
        }
        for (const auto& zf : frames.horizontal) {
            Vector z = zf.value(p);
            for (const auto& wf : frames.horizontal)
                h_defect.absorb(fp.vertical_part(wf.jac(p) * z).norm());
        }
    }
    v_defect.finish();
    h_defect.finish();

    for (const auto& tag : structure_tags()) {
        const Matrix& r = h.structure(tag);
        ConditionResidual cond_v, cond_h;
        cond_v.condition_id = "product_vertical_condition:" + tag;
        cond_h.condition_id = "product_horizontal_condition:" + tag;

        for (size_t pi = 0; pi < cls.splits.size(); ++pi) {
            const TangentSplit& split = cls.splits[pi];
            detail::FlowPoint<MapT> fp(f, split);
            const Vector& p = split.point;

            for (const auto& xf : frames.vertical) {
                Vector x = xf.value(p);
                for (const auto& yf : frames.vertical) {
                    Vector y = yf.value(p);
                    Vector inner_v = fp.vertical_part(fp.field_slope(fp.phi_field(r, yf), x)) +
                                     fp.oneill_t(x, fp.omega(r, y));
                    Vector inner_h = fp.oneill_t(x, fp.phi(r, y)) +
                                     fp.horizontal_part(fp.field_slope(fp.omega_field(r, yf), x));
                    cond_v.absorb((fp.omega(r, inner_v) + fp.c(r, inner_h)).norm());
                }
            }
            for (const auto& zf : frames.horizontal) {
                Vector z = zf.value(p);
                for (const auto& wf : frames.horizontal) {
                    Vector w = wf.value(p);
                    Vector inner_v = fp.vertical_part(fp.field_slope(fp.b_field(r, wf), z)) +
                                     fp.oneill_a(z, fp.c(r, w));
                    Vector inner_h = fp.oneill_a(z, fp.b(r, w)) +
                                     fp.horizontal_part(fp.field_slope(fp.c_field(r, wf), z));
                    cond_h.absorb((fp.phi(r, inner_v) + fp.b(r, inner_h)).norm());
                }
            }
        }
        cond_v.finish();
        cond_h.finish();
        out.push_back(cond_v);
        out.push_back(cond_h);
        out.push_back(make_agreement("product_agreement:" + tag,
                                     std::max(cond_v.max_residual, cond_h.max_residual),
                                     std::max(v_defect.max_residual, h_defect.max_residual),
                                     tol::fd_residual));
    }
    out.push_back(v_defect);
    out.push_back(h_defect);
    return out;
}

template <typename MapT>
std::vector<ConditionResidual> fiber_decomposition_residual(const MapT& f, const Classification& cls,
                                                            const HypercomplexStructure& h,
                                                            const FramePack& frames) {
    std::vector<ConditionResidual> out;
    for (const auto& tag : structure_tags()) {
        const Matrix& r = h.structure(tag);
        ConditionResidual cond_d1, cond_d2, oracle_d1, oracle_d2;
        cond_d1.condition_id = "fiber_product_d1_condition:" + tag;
        cond_d2.condition_id = "fiber_product_d2_condition:" + tag;
        oracle_d1.condition_id = "fiber_product_d1_connection_oracle:" + tag;
        oracle_d2.condition_id = "fiber_product_d2_connection_oracle:" + tag;

        auto d1_it = frames.d1.find(tag);
        auto d2_it = frames.d2.find(tag);

        for (size_t pi = 0; pi < cls.splits.size(); ++pi) {
            const TangentSplit& split = cls.splits[pi];
            const SemiSlantReport& rep = cls.reports.at(tag)[pi];
            detail::FlowPoint<MapT> fp(f, split);
            const Vector& p = split.point;
            Matrix p_d1 = projector(rep.d1);
            Matrix p_d2 = projector(rep.d2);

            if (!rep.d1.empty()) {
                if (d1_it == frames.d1.end())
                    throw UnsupportedInputError("frames: no d1 fields for structure " + tag);
                detail::ensure_spans(d1_it->second, rep.d1, p, "d1(" + tag + ")");
                for (const auto& uf : d1_it->second) {
                    Vector u = uf.value(p);
                    for (const auto& vf : d1_it->second) {
                        Vector vhat = fp.vertical_part(fp.field_slope(fp.phi_field(r, vf), u));
                        Vector t_phi = fp.oneill_t(u, fp.phi(r, vf.value(p)));
                        cond_d1.absorb(
                            std::max((p_d2 * (fp.phi(r, vhat) + fp.b(r, t_phi))).norm(),
                                     (fp.omega(r, vhat) + fp.c(r, t_phi)).norm()));
                        Vector conn = fp.vertical_part(vf.jac(p) * u);
                        oracle_d1.absorb((p_d2 * conn).norm());
                    }
                }
            }
            if (!rep.d2.empty()) {
                if (d2_it == frames.d2.end())
                    throw UnsupportedInputError("frames: no d2 fields for structure " + tag);
                detail::ensure_spans(d2_it->second, rep.d2, p, "d2(" + tag + ")");
                for (const auto& xf : d2_it->second) {
                    Vector x = xf.value(p);
                    for (const auto& yf : d2_it->second) {
                        Vector y = yf.value(p);
                        Vector inner_v = fp.vertical_part(fp.field_slope(fp.phi_field(r, yf), x)) +
                                         fp.oneill_t(x, fp.omega(r, y));
                        Vector inner_h = fp.oneill_t(x, fp.phi(r, y)) +
                                         fp.horizontal_part(fp.field_slope(fp.omega_field(r, yf), x));
                        cond_d2.absorb(
                            std::max((p_d1 * (fp.phi(r, inner_v) + fp.b(r, inner_h))).norm(),
                                     (fp.omega(r, inner_v) + fp.c(r, inner_h)).norm()));
                        Vector conn = fp.vertical_part(yf.jac(p) * x);
                        oracle_d2.absorb((p_d1 * conn).norm());
                    }
                }
            }
        }
        for (auto* c : {&cond_d1, &cond_d2, &oracle_d1, &oracle_d2}) c->finish();
        out.push_back(cond_d1);
        out.push_back(cond_d2);
        out.push_back(oracle_d1);
        out.push_back(oracle_d2);
        out.push_back(make_agreement("fiber_product_agreement:" + tag,
                                     std::max(cond_d1.max_residual, cond_d2.max_residual),
                                     std::max(oracle_d1.max_residual, oracle_d2.max_residual),
                                     tol::fd_residual));
    }
    return out;
}

struct UmbilicalReport {
    CurvatureSummary curvature;
    double mean_curvature_norm = 0.0;
    bool umbilical = false;
    std::map<std::string, double> h_in_omega_d2_defect;  // distance of H from omega(d2)
    std::map<std::string, double> minimal_defect;        // |H| where the complex case forces H = 0
};

// Totally-umbilical diagnosis of the fibers: T on vertical pairs against
// <X,Y> H, and when umbilical, H must lie in omega(d2) for every structure;
// an empty slant part forces minimal fibers.
template <typename MapT>
UmbilicalReport umbilical_report(const MapT& f, const Classification& cls, Rng& rng) {
    UmbilicalReport out;
    const TangentSplit& split0 = cls.splits.front();
    out.curvature.tension = tension(f, split0.point);

    double worst = 0.0;
    for (const auto& split : cls.splits) {
        detail::FlowPoint<MapT> fp(f, split);
        Index kv = split.vertical.dim();
        if (kv == 0) continue;

        Vector mean = Vector::Zero(f.domain_dim());
        for (Index i = 0; i < kv; ++i) {
            Vector v = split.vertical.basis.col(i);
            mean += fp.oneill_t(v, v);
        }
        mean /= static_cast<double>(kv);
        if (&split == &cls.splits.front()) {
            out.curvature.fiber_mean_curvature = mean;
            out.mean_curvature_norm = mean.norm();
        }

        auto check_pair = [&](const Vector& x, const Vector& y) {
            double res = (fp.oneill_t(x, y) - x.dot(y) * mean).norm();
            worst = std::max(worst, res);
        };
        for (Index i = 0; i < kv; ++i)
            for (Index j = i; j < kv; ++j)
                check_pair(split.vertical.basis.col(i), split.vertical.basis.col(j));
        for (int t = 0; t < 10; ++t) {
            Vector x = split.vertical.basis * rng.normal_vector(kv);
            Vector y = split.vertical.basis * rng.normal_vector(kv);
            if (x.norm() < 1e-8 || y.norm() < 1e-8) continue;
            check_pair(x.normalized(), y.normalized());
        }
    }
    out.curvature.umbilical_residual = worst;
    out.umbilical = worst <= tol::fd_residual;

    if (out.umbilical) {
        const Vector& hvec = out.curvature.fiber_mean_curvature;
        for (const auto& tag : structure_tags()) {
            const SemiSlantReport& rep = cls.reports.at(tag).front();
            if (hvec.size() == 0) break;
            if (rep.d2.empty()) {
                out.minimal_defect[tag] = hvec.norm();
            } else {
                out.h_in_omega_d2_defect[tag] = (hvec - projector(rep.omega_d2) * hvec).norm();
            }
        }
    }
    return out;
}

}  // namespace qslant
