#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qslant/core.hpp"
#include "qslant/derivatives.hpp"
#include "qslant/hstructure.hpp"
#include "qslant/linalg.hpp"
#include "qslant/map.hpp"

namespace qslant {

// Pointwise splitting induced by dF at p: domain into kernel and its
// complement, codomain into the image and its complement.
struct TangentSplit {
    Vector point;
    Matrix jacobian;
    Subspace vertical;     // ker dF
    Subspace horizontal;   // (ker dF)^perp
    Subspace range;        // im dF, in the codomain
    Subspace range_perp;
    std::vector<double> horizontal_singular_values;
    Index rank = 0;
    bool is_riemannian = false;  // dF restricted to horizontal is an isometry
    double eikonal_residual = 0.0;

    Index domain_dim() const { return vertical.ambient_dim; }
};

template <typename MapT>
TangentSplit split_tangent(const MapT& f, const Vector& p) {
    TangentSplit split;
    split.point = p;
    split.jacobian = jacobian(f, p);
    SvdResult dec = svd(split.jacobian);

    double smax = dec.sigma.empty() ? 0.0 : dec.sigma.front();
    double thr = rank_threshold(smax);
    auto rank_with = [&](double t) {
        Index r = 0;
        for (double s : dec.sigma)
            if (s > t) ++r;
        return r;
    };
    Index rank = rank_with(thr);
    // A decade of slack on either side of the threshold must not move the
    // rank, otherwise the split is not trustworthy at this point.
    if (rank_with(thr * 10.0) != rank || rank_with(thr / 10.0) != rank)
        throw AmbiguousRankError("split: singular values sit too close to the rank threshold");

    const Index d = split.jacobian.cols();
    const Index n = split.jacobian.rows();
    split.rank = rank;
    split.horizontal = Subspace(d, dec.v.leftCols(rank));
    split.vertical = Subspace(d, dec.v.rightCols(d - rank));
    split.range = Subspace(n, dec.u.leftCols(rank));
    split.range_perp = Subspace(n, dec.u.rightCols(n - rank));
    split.horizontal_singular_values.assign(dec.sigma.begin(), dec.sigma.begin() + rank);

    split.is_riemannian = true;
    for (double s : split.horizontal_singular_values)
        if (std::abs(s - 1.0) > tol::isometry) split.is_riemannian = false;

    // |dF|_F^2 = rank holds automatically for isometries on the horizontal
    // space; kept as a cross-check on the whole pipeline.
    split.eikonal_residual = std::abs(split.jacobian.squaredNorm() - static_cast<double>(rank));
    if (split.is_riemannian && split.eikonal_residual > tol::eikonal)
        throw StructuralInconsistency("split: energy identity violated by " +
                                      std::to_string(split.eikonal_residual));
    return split;
}

// Half the squared Frobenius norm of dF; equals rank/2 for maps whose
// restricted differential is an isometry.
template <typename MapT>
double energy_density(const MapT& f, const Vector& p) {
    return 0.5 * jacobian(f, p).squaredNorm();
}

// One structure's decomposition of the kernel at a point: the invariant part
// d1, the slant part d2 with its angle, the horizontal image omega(d2), the
// invariant horizontal complement mu, and the four block tensors of R in the
// split bases.
struct SemiSlantReport {
    std::string structure_tag;
    Vector point;

    Subspace d1;        // R-invariant part of the kernel
    Subspace d2;        // slant complement inside the kernel
    Subspace omega_d2;  // horizontal image of d2
    Subspace mu;        // horizontal complement of omega_d2, R-invariant

    std::optional<double> theta;  // slant angle; absent when d2 is empty

    // Blocks of R in the vertical/horizontal bases of the split:
    // phi: V->V, omega: V->H, b: H->V, c: H->H.
    Matrix phi, omega, b, c;
    Matrix vertical_basis, horizontal_basis;
    Matrix d1_coords, d2_coords;  // d1/d2 expressed in the vertical basis

    std::vector<double> kernel_spectrum;  // eigenvalues of phi^T phi, ascending
    std::map<std::string, double> identity_residuals;

    bool is_semi_slant = false;
    std::string failure;  // set when !is_semi_slant

    Index vertical_dim() const { return vertical_basis.cols(); }

    bool right_angle() const { return theta && std::cos(*theta) <= tol::right_angle; }

    // Display convention: an empty slant part is the complex case and is
    // labeled with angle 0.
    std::string theta_label() const {
        if (!theta) return "0 (complex case)";
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.15g", *theta);
        return buf;
    }

    double theta_or_zero() const { return theta.value_or(0.0); }

    // Projectors onto d1/d2 written in vertical-basis coordinates.
    Matrix p_d1() const { return d1_coords * d1_coords.transpose(); }
    Matrix p_d2() const { return d2_coords * d2_coords.transpose(); }
};

// Algebraic identities every report must satisfy: the four block identities
// of an anti-involution split across V + H, the slant-angle equation on d2,
// the range of b, and invariance of d1 and mu. Entrywise max residuals.
inline std::map<std::string, double> structural_identities(const SemiSlantReport& r) {
    std::map<std::string, double> out;
    const Index kv = r.phi.rows();
    const Index kh = r.c.rows();
    const Matrix idv = Matrix::Identity(kv, kv);
    const Matrix idh = Matrix::Identity(kh, kh);

    out["phi2_plus_b_omega"] = max_abs(Matrix(r.phi * r.phi + r.b * r.omega + idv));
    out["c2_plus_omega_b"] = max_abs(Matrix(r.c * r.c + r.omega * r.b + idh));
    out["omega_phi_plus_c_omega"] = max_abs(Matrix(r.omega * r.phi + r.c * r.omega));
    out["b_c_plus_phi_b"] = max_abs(Matrix(r.b * r.c + r.phi * r.b));

    if (r.is_semi_slant) {
        // phi^2 = -cos^2(theta) on d2
        double cos2 = r.theta ? std::cos(*r.theta) * std::cos(*r.theta) : 0.0;
        if (r.d2_coords.cols() > 0)
            out["phi2_slant_on_d2"] =
                max_abs(Matrix((r.phi * r.phi + cos2 * idv) * r.d2_coords));
        else
            out["phi2_slant_on_d2"] = 0.0;

        // b maps the horizontal space into d2
        out["b_into_d2"] = r.d1_coords.cols() > 0
                               ? max_abs(Matrix(r.d1_coords.transpose() * r.b))
                               : 0.0;

        // invariance of d1 and mu under R is expressed through the blocks:
        // columns of R restricted to d1 must stay in d1, and omega must kill d1
        if (r.d1_coords.cols() > 0) {
            Matrix rd1_vert = r.phi * r.d1_coords;  // vertical part of R(d1)
            out["d1_invariant"] =
                std::max(max_abs(Matrix(r.omega * r.d1_coords)),
                         max_abs(Matrix(rd1_vert - r.p_d1() * rd1_vert)));
        } else {
            out["d1_invariant"] = 0.0;
        }
        if (!r.mu.empty()) {
            Matrix r_ambient_mu =
                (r.vertical_basis * r.b + r.horizontal_basis * r.c) *
                (r.horizontal_basis.transpose() * r.mu.basis);
            out["mu_invariant"] = max_abs(Matrix(r_ambient_mu - projector(r.mu) * r_ambient_mu));
        } else {
            out["mu_invariant"] = 0.0;
        }
    }
    return out;
}

// Spectral slant detection on one structure. S = phi^T phi on the kernel has
// eigenvalue 1 exactly on the R-invariant part; the rest must form a single
// cluster, whose common value is cos^2 of the slant angle.
inline SemiSlantReport semi_slant_decompose(const TangentSplit& split, const Matrix& r,
                                            const std::string& tag, double cluster_tol = tol::cluster) {
    if (!split.is_riemannian)
        throw InputError("decompose: the restricted differential must be an isometry");
    const Index d = split.domain_dim();
    if (r.rows() != d || r.cols() != d)
        throw InputError("decompose: structure dimension does not match the map domain");

    SemiSlantReport rep;
    rep.structure_tag = tag;
    rep.point = split.point;
    rep.vertical_basis = split.vertical.basis;
    rep.horizontal_basis = split.horizontal.basis;

    const Matrix& v = split.vertical.basis;
    const Matrix& h = split.horizontal.basis;
    rep.phi = v.transpose() * r * v;
    rep.omega = h.transpose() * r * v;
    rep.b = v.transpose() * r * h;
    rep.c = h.transpose() * r * h;

    const Index kv = v.cols();
    if (kv == 0) {
        // Nothing to decompose; the map is (locally) injective.
        rep.d1 = Subspace::zero(d);
        rep.d2 = Subspace::zero(d);
        rep.omega_d2 = Subspace::zero(d);
        rep.mu = split.horizontal;
        rep.d1_coords = Matrix(0, 0);
        rep.d2_coords = Matrix(0, 0);
        rep.is_semi_slant = true;
        rep.identity_residuals = structural_identities(rep);
        return rep;
    }

    // -(P_V R P_V)^2 on the kernel; symmetrized to guard against float skew.
    Matrix s_raw = -(rep.phi * rep.phi);
    Matrix s = 0.5 * (s_raw + s_raw.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
    if (eig.info() != Eigen::Success)
        throw NumericError("decompose: eigenvalue iteration failed");
    Vector lambda = eig.eigenvalues();  // ascending
    rep.kernel_spectrum.assign(lambda.data(), lambda.data() + lambda.size());
    if (lambda[0] < -1e-8 || lambda[kv - 1] > 1.0 + 1e-8)
        throw StructuralInconsistency("decompose: kernel spectrum escapes [0, 1]");

    Index first_d1 = kv;
    while (first_d1 > 0 && lambda[first_d1 - 1] >= 1.0 - cluster_tol) --first_d1;
    Matrix e1 = eig.eigenvectors().rightCols(kv - first_d1);
    Matrix e2 = eig.eigenvectors().leftCols(first_d1);

    if (first_d1 > 0) {
        double width = lambda[first_d1 - 1] - lambda[0];
        if (width > cluster_tol) {
            rep.is_semi_slant = false;
            rep.failure = "kernel spectrum splits into several clusters below 1 (width " +
                          std::to_string(width) + ")";
            rep.d1 = Subspace::zero(d);
            rep.d2 = Subspace::zero(d);
            rep.omega_d2 = Subspace::zero(d);
            rep.mu = Subspace::zero(d);
            rep.d1_coords = Matrix(kv, 0);
            rep.d2_coords = Matrix(kv, 0);
            rep.identity_residuals = structural_identities(rep);
            return rep;
        }
        double cos2 = std::clamp(lambda.head(first_d1).mean(), 0.0, 1.0);
        // Squared cosines at the eigenvalue noise floor are right angles;
        // keeping them snapped makes the reported pi/2 bit-stable.
        double c = cos2 <= 1e-12 ? 0.0 : std::sqrt(cos2);
        rep.theta = c <= tol::right_angle ? M_PI / 2.0 : std::acos(c);
    }

    rep.d1_coords = e1;
    rep.d2_coords = e2;
    rep.d1 = Subspace(d, v * e1);
    rep.d2 = Subspace(d, v * e2);

    // d1 must actually be carried into itself by R.
    if (!rep.d1.empty()) {
        Matrix im = r * rep.d1.basis;
        double defect = max_abs(Matrix(im - projector(rep.d1) * im));
        if (defect > 1e-6)
            throw StructuralInconsistency(
                "decompose: eigenvalue-1 block is not R-invariant (defect " +
                std::to_string(defect) + ")");
    }

    // Horizontal image of d2 and its invariant complement.
    if (!rep.d2.empty()) {
        Matrix w = (Matrix::Identity(d, d) - projector(split.vertical)) * (r * rep.d2.basis);
        rep.omega_d2 = column_space(w);
        if (rep.omega_d2.dim() != rep.d2.dim())
            throw StructuralInconsistency("decompose: omega is not injective on d2");
    } else {
        rep.omega_d2 = Subspace::zero(d);
    }
    rep.mu = complement_within(rep.omega_d2, split.horizontal);

    rep.is_semi_slant = true;
    rep.identity_residuals = structural_identities(rep);
    return rep;
}

// Complex structure on the kernel assembled from R: identity action on d1,
// normalized phi on d2. Squares to -id; undefined at slant angle pi/2.
inline Matrix rhat(const SemiSlantReport& r) {
    if (!r.is_semi_slant) throw InputError("rhat: report carries no decomposition");
    if (r.right_angle())
        throw UndefinedOperationError("rhat: undefined at slant angle pi/2 (sec theta diverges)");
    const Index kv = r.phi.rows();
    if (kv == 0) return Matrix(0, 0);
    Matrix p = r.p_d1();
    Matrix q = r.p_d2();
    double sec = r.theta ? 1.0 / std::cos(*r.theta) : 1.0;
    return r.phi * (p + sec * q);
}

// Brute-force restatement of the slant angle: for random unit vectors X in
// d2, the angle between R X and the kernel must equal theta. Independent of
// the spectral detection path (projector application and norms only).
inline double slant_angle_oracle_defect(const TangentSplit& split, const SemiSlantReport& rep,
                                        const Matrix& r, Rng& rng, int samples = 200) {
    if (!rep.is_semi_slant || rep.d2.empty()) return 0.0;
    double theta = *rep.theta;
    Matrix p_v = projector(split.vertical);
    double worst = 0.0;
    for (int t = 0; t < samples; ++t) {
        Vector coeff = rng.normal_vector(rep.d2.dim());
        if (coeff.norm() < 1e-12) continue;
        Vector x = rep.d2.basis * coeff.normalized();
        double cosine = std::clamp((p_v * (r * x)).norm(), 0.0, 1.0);
        worst = std::max(worst, std::abs(std::acos(cosine) - theta));
    }
    return worst;
}

enum class Verdict { not_riemannian, generic, almost_h_semi_slant, h_semi_slant, strictly_h_semi_slant };

inline std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::not_riemannian: return "not_riemannian";
        case Verdict::generic: return "generic";
        case Verdict::almost_h_semi_slant: return "almost_h_semi_slant";
        case Verdict::h_semi_slant: return "h_semi_slant";
        case Verdict::strictly_h_semi_slant: return "strictly_h_semi_slant";
    }
    return "?";
}

struct Classification {
    Verdict verdict = Verdict::generic;
    Index rank = 0;
    Index vertical_dim = 0;
    bool degenerate_vertical = false;  // injective map, nothing to decompose

    // reports[tag] holds one report per analysis point.
    std::map<std::string, std::vector<SemiSlantReport>> reports;
    std::map<std::string, std::optional<double>> angles;  // per structure; absent = complex case
    std::map<std::string, Index> d1_dims, d2_dims;

    // Set when the three structures share one invariant distribution as an
    // actual subspace (stronger than the dimension agreement the verdict
    // ladder uses).
    std::optional<Subspace> shared_d1;
    std::vector<TangentSplit> splits;
    std::string detail;  // human-readable reason for generic/not_riemannian

    double angle_or_zero(const std::string& tag) const {
        auto it = angles.find(tag);
        return it == angles.end() || !it->second ? 0.0 : *it->second;
    }
};

// Classify a map against a structure over a set of analysis points. The
// slant data must be consistent across all points (the definitions demand
// constancy on a neighborhood; sampling can only refute it).
template <typename MapT>
Classification classify(const MapT& f, const HypercomplexStructure& h,
                        const std::vector<Vector>& points, double cluster_tol = tol::cluster) {
    if (points.empty()) throw InputError("classify: need at least one analysis point");
    if (f.domain_dim() != h.dim)
        throw InputError("classify: structure dimension does not match the map domain");

    Classification cls;
    for (const auto& p : points) cls.splits.push_back(split_tangent(f, p));

    for (const auto& split : cls.splits) {
        if (!split.is_riemannian) {
            cls.verdict = Verdict::not_riemannian;
            cls.detail = "restricted differential is not an isometry at a sampled point";
            return cls;
        }
        if (split.rank != cls.splits.front().rank)
            throw AmbiguousRankError("classify: rank differs between analysis points");
    }
    cls.rank = cls.splits.front().rank;
    cls.vertical_dim = cls.splits.front().domain_dim() - cls.rank;
    cls.degenerate_vertical = cls.vertical_dim == 0;

    bool all_structures_ok = true;
    for (const auto& tag : structure_tags()) {
        const Matrix& r = h.structure(tag);
        auto& reports = cls.reports[tag];
        for (const auto& split : cls.splits) reports.push_back(semi_slant_decompose(split, r, tag, cluster_tol));

        const SemiSlantReport& first = reports.front();
        bool ok = true;
        std::string why;
        for (size_t i = 0; i < reports.size() && ok; ++i) {
            const auto& rep = reports[i];
            if (!rep.is_semi_slant) {
                ok = false;
                why = "no single slant cluster at point " + std::to_string(i) + ": " + rep.failure;
            } else if (rep.d1.dim() != first.d1.dim()) {
                ok = false;
                why = "invariant-part dimension varies across points";
            } else if (rep.theta.has_value() != first.theta.has_value()) {
                ok = false;
                why = "slant part appears and disappears across points";
            } else if (rep.theta && std::abs(*rep.theta - *first.theta) > tol::angle_match) {
                ok = false;
                why = "slant angle varies across points (witness: point 0 vs point " +
                      std::to_string(i) + ")";
            }
        }
        if (!ok) {
            all_structures_ok = false;
            if (!cls.detail.empty()) cls.detail += "; ";
            cls.detail += tag + ": " + why;
            continue;
        }
        cls.angles[tag] = first.theta;
        cls.d1_dims[tag] = first.d1.dim();
        cls.d2_dims[tag] = first.d2.dim();
    }

    if (!all_structures_ok) {
        cls.verdict = Verdict::generic;
        return cls;
    }

    // Even-dimensional fibers whenever some slant angle is below pi/2 (the
    // complex case counts as angle 0). A violation would mean the detector
    // itself is broken.
    bool all_right_angles = true;
    for (const auto& tag : structure_tags()) {
        const auto& theta = cls.angles[tag];
        if (!theta || std::cos(*theta) > tol::right_angle) all_right_angles = false;
    }
    if (!cls.degenerate_vertical && !all_right_angles && cls.vertical_dim % 2 != 0)
        throw StructuralInconsistency("classify: odd-dimensional fibers with a slant angle below pi/2");

    cls.verdict = Verdict::almost_h_semi_slant;

    const Index d1_dim = cls.d1_dims["I"];
    bool equal_dims = cls.d1_dims["J"] == d1_dim && cls.d1_dims["K"] == d1_dim;
    if (!equal_dims) return cls;
    cls.verdict = Verdict::h_semi_slant;

    // Record the shared invariant distribution when the three subspaces
    // coincide pointwise, not just in dimension.
    bool share = true;
    for (size_t i = 0; i < cls.splits.size() && share; ++i) {
        const Subspace& di = cls.reports["I"][i].d1;
        if (max_principal_angle(di, cls.reports["J"][i].d1) > tol::subspace_match ||
            max_principal_angle(di, cls.reports["K"][i].d1) > tol::subspace_match)
            share = false;
    }
    if (share && d1_dim > 0) cls.shared_d1 = cls.reports["I"].front().d1;

    auto label = [&](const std::string& tag) {
        const auto& t = cls.angles[tag];
        return t ? *t : 0.0;  // complex case counts as angle 0
    };
    bool equal_angles =
        std::abs(label("I") - label("J")) <= tol::angle_match &&
        std::abs(label("I") - label("K")) <= tol::angle_match &&
        cls.angles["I"].has_value() == cls.angles["J"].has_value() &&
        cls.angles["I"].has_value() == cls.angles["K"].has_value();
    if (equal_angles) cls.verdict = Verdict::strictly_h_semi_slant;
    return cls;
}

}  // namespace qslant
