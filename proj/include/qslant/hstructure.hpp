#pragma once

#include <array>
#include <fstream>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "qslant/core.hpp"

namespace qslant {

// Triple (I, J, K) of orthogonal anticommuting complex structures on R^{4m}:
// R^2 = -id, IJ = K = -JI (and cyclically), R^T R = id. Constant matrices
// only, i.e. the flat hyperkaehler case.
struct HypercomplexStructure {
    Index dim = 0;
    Matrix i, j, k;

    const Matrix& structure(const std::string& tag) const {
        if (tag == "I") return i;
        if (tag == "J") return j;
        if (tag == "K") return k;
        throw InputError("structure tag must be one of I, J, K");
    }
};

inline const std::array<std::string, 3>& structure_tags() {
    static const std::array<std::string, 3> tags{"I", "J", "K"};
    return tags;
}

// The standard structure on R^{4m}, block diagonal with one 4x4 block per
// quaternionic coordinate group:
//   I: e1 -> e2, e2 -> -e1, e3 -> e4,  e4 -> -e3
//   J: e1 -> e3, e2 -> -e4, e3 -> -e1, e4 -> e2
//   K: e1 -> e4, e2 -> e3,  e3 -> -e2, e4 -> -e1
inline HypercomplexStructure canonical_hypercomplex(Index m) {
    if (m < 1) throw InputError("canonical structure: need at least one quaternionic block");
    const Index d = 4 * m;
    HypercomplexStructure h;
    h.dim = d;
    h.i = Matrix::Zero(d, d);
    h.j = Matrix::Zero(d, d);
    h.k = Matrix::Zero(d, d);
    for (Index b = 0; b < m; ++b) {
        const Index o = 4 * b;
        h.i(o + 1, o + 0) = 1;  h.i(o + 0, o + 1) = -1;
        h.i(o + 3, o + 2) = 1;  h.i(o + 2, o + 3) = -1;

        h.j(o + 2, o + 0) = 1;  h.j(o + 3, o + 1) = -1;
        h.j(o + 0, o + 2) = -1; h.j(o + 1, o + 3) = 1;

        h.k(o + 3, o + 0) = 1;  h.k(o + 2, o + 1) = 1;
        h.k(o + 1, o + 2) = -1; h.k(o + 0, o + 3) = -1;
    }
    return h;
}

struct StructureValidation {
    std::map<std::string, double> residuals;  // named axiom -> max-abs residual
    bool passed = false;

    double max_residual() const {
        double m = 0.0;
        for (const auto& [_, r] : residuals) m = std::max(m, r);
        return m;
    }
};

// Residuals of every structure axiom; passes iff all are at most 1e-12.
inline StructureValidation validate(const HypercomplexStructure& h) {
    const Index d = h.dim;
    if (d <= 0 || d % 4 != 0)
        throw InputError("structure: dimension must be a positive multiple of 4");
    for (const auto* m : {&h.i, &h.j, &h.k})
        if (m->rows() != d || m->cols() != d)
            throw InputError("structure: matrices must all be dim x dim");

    const Matrix id = Matrix::Identity(d, d);
    StructureValidation v;
    v.residuals["I_squared"] = max_abs(Matrix(h.i * h.i + id));
    v.residuals["J_squared"] = max_abs(Matrix(h.j * h.j + id));
    v.residuals["K_squared"] = max_abs(Matrix(h.k * h.k + id));
    v.residuals["IJ_equals_K"] = max_abs(Matrix(h.i * h.j - h.k));
    v.residuals["JK_equals_I"] = max_abs(Matrix(h.j * h.k - h.i));
    v.residuals["KI_equals_J"] = max_abs(Matrix(h.k * h.i - h.j));
    v.residuals["IJ_anticommute"] = max_abs(Matrix(h.i * h.j + h.j * h.i));
    v.residuals["I_orthogonal"] = max_abs(Matrix(h.i.transpose() * h.i - id));
    v.residuals["J_orthogonal"] = max_abs(Matrix(h.j.transpose() * h.j - id));
    v.residuals["K_orthogonal"] = max_abs(Matrix(h.k.transpose() * h.k - id));
    // Orthogonal with square -id forces skewness; asserted directly.
    v.residuals["I_skew"] = max_abs(Matrix(h.i.transpose() + h.i));
    v.residuals["J_skew"] = max_abs(Matrix(h.j.transpose() + h.j));
    v.residuals["K_skew"] = max_abs(Matrix(h.k.transpose() + h.k));

    v.passed = v.max_residual() <= tol::orthonormal;
    return v;
}

inline HypercomplexStructure conjugate(const HypercomplexStructure& h, const Matrix& q) {
    HypercomplexStructure out;
    out.dim = h.dim;
    out.i = q * h.i * q.transpose();
    out.j = q * h.j * q.transpose();
    out.k = q * h.k * q.transpose();
    return out;
}

// Structure file: {"dim": d, "I": [...], "J": [...], "K": [...]} with each
// matrix given row-major.
inline HypercomplexStructure load_structure_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("structure: cannot open '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("structure: invalid JSON in '" + path + "': " + e.what());
    }
    if (!doc.contains("dim")) throw InputError("structure: missing 'dim'");
    const Index d = doc["dim"].get<Index>();
    HypercomplexStructure h;
    h.dim = d;
    for (const auto& [key, target] : {std::pair<const char*, Matrix*>{"I", &h.i}, {"J", &h.j}, {"K", &h.k}}) {
        if (!doc.contains(key)) throw InputError(std::string("structure: missing matrix '") + key + "'");
        const auto& arr = doc[key];
        if (static_cast<Index>(arr.size()) != d * d)
            throw InputError(std::string("structure: matrix '") + key + "' needs dim*dim entries");
        Matrix m(d, d);
        for (Index r = 0; r < d; ++r)
            for (Index c = 0; c < d; ++c) m(r, c) = arr[static_cast<size_t>(r * d + c)].get<double>();
        *target = m;
    }
    auto check = validate(h);
    if (!check.passed)
        throw InputError("structure: axioms violated, max residual " +
                         std::to_string(check.max_residual()));
    return h;
}

}  // namespace qslant
