#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qslant/core.hpp"
#include "qslant/derivatives.hpp"
#include "qslant/expr.hpp"

namespace qslant {

// A smooth map R^D -> R^n given per coordinate by expression trees, with all
// parameters bound. Value/Jacobian/Hessian queries are exact (dual numbers).
class SmoothMap {
public:
    SmoothMap(Index domain_dim, Index codomain_dim, std::vector<Expr> components,
              std::map<std::string, double> params = {}, std::string name = {})
        : domain_dim_(domain_dim),
          codomain_dim_(codomain_dim),
          components_(std::move(components)),
          params_(std::move(params)),
          name_(std::move(name)) {
        if (static_cast<Index>(components_.size()) != codomain_dim_)
            throw InputError("map: component count does not match the codomain dimension");
        std::set<std::string> free;
        int max_var = 0;
        for (const auto& c : components_) c.collect_free(free, max_var);
        if (max_var > domain_dim_)
            throw InputError("map: component references x" + std::to_string(max_var) +
                             " beyond the declared domain dimension " + std::to_string(domain_dim_));
        for (const auto& p : free)
            if (!params_.count(p))
                throw InputError("map: unbound parameter '" + p + "'");
    }

    Index domain_dim() const { return domain_dim_; }
    Index codomain_dim() const { return codomain_dim_; }
    const std::string& name() const { return name_; }
    const std::map<std::string, double>& params() const { return params_; }
    const std::vector<Expr>& components() const { return components_; }

    SmoothMap with_params(std::map<std::string, double> params) const {
        return SmoothMap(domain_dim_, codomain_dim_, components_, std::move(params), name_);
    }

    template <typename S>
    std::vector<S> evaluate(const std::vector<S>& x) const {
        if (static_cast<Index>(x.size()) != domain_dim_)
            throw EvalError("map: point dimension does not match the domain");
        std::vector<S> out;
        out.reserve(components_.size());
        for (size_t c = 0; c < components_.size(); ++c) {
            try {
                out.push_back(components_[c].evaluate<S>(x, params_));
            } catch (const EvalError& e) {
                throw EvalError("component " + std::to_string(c + 1) + ": " + e.what());
            }
        }
        return out;
    }

    Vector value(const Vector& p) const { return value_at(*this, p); }
    Matrix jac(const Vector& p) const { return jacobian(*this, p); }
    Hessian3Tensor hess(const Vector& p) const { return hessian(*this, p); }

    // Linear-affine constructor: x -> a x + b, components built as literal
    // expression trees.
    static SmoothMap affine(const Matrix& a, const Vector& b, std::string name = {}) {
        std::vector<Expr> comps;
        comps.reserve(static_cast<size_t>(a.rows()));
        for (Index r = 0; r < a.rows(); ++r) {
            Expr e = Expr::constant(b[r]);
            for (Index c = 0; c < a.cols(); ++c) {
                if (a(r, c) == 0.0) continue;
                e = e + Expr::constant(a(r, c)) * Expr::variable(static_cast<int>(c + 1));
            }
            comps.push_back(e);
        }
        return SmoothMap(a.cols(), a.rows(), std::move(comps), {}, std::move(name));
    }

private:
    Index domain_dim_;
    Index codomain_dim_;
    std::vector<Expr> components_;
    std::map<std::string, double> params_;
    std::string name_;
};

// A smooth vector field on R^D, one expression per coordinate.
class VectorFieldExpr {
public:
    VectorFieldExpr(Index domain_dim, std::vector<Expr> components,
                    std::map<std::string, double> params = {})
        : domain_dim_(domain_dim), components_(std::move(components)), params_(std::move(params)) {
        if (static_cast<Index>(components_.size()) != domain_dim_)
            throw InputError("vector field: needs one component per coordinate");
    }

    Index domain_dim() const { return domain_dim_; }
    Index codomain_dim() const { return domain_dim_; }

    template <typename S>
    std::vector<S> evaluate(const std::vector<S>& x) const {
        std::vector<S> out;
        out.reserve(components_.size());
        for (const auto& c : components_) out.push_back(c.evaluate<S>(x, params_));
        return out;
    }

    Vector value(const Vector& p) const { return value_at(*this, p); }
    Matrix jac(const Vector& p) const { return jacobian(*this, p); }

    static VectorFieldExpr constant(const Vector& v) {
        std::vector<Expr> comps;
        comps.reserve(static_cast<size_t>(v.size()));
        for (Index i = 0; i < v.size(); ++i) comps.push_back(Expr::constant(v[i]));
        return VectorFieldExpr(v.size(), std::move(comps));
    }

    // x -> a x, e.g. rotation fields.
    static VectorFieldExpr linear(const Matrix& a) {
        if (a.rows() != a.cols()) throw InputError("vector field: linear part must be square");
        std::vector<Expr> comps;
        for (Index r = 0; r < a.rows(); ++r) {
            Expr e = Expr::constant(0.0);
            for (Index c = 0; c < a.cols(); ++c) {
                if (a(r, c) == 0.0) continue;
                e = e + Expr::constant(a(r, c)) * Expr::variable(static_cast<int>(c + 1));
            }
            comps.push_back(e);
        }
        return VectorFieldExpr(a.rows(), std::move(comps));
    }

private:
    Index domain_dim_;
    std::vector<Expr> components_;
    std::map<std::string, double> params_;
};

// Lie bracket of vector fields on flat space: [X, Y] = (DY) X - (DX) Y.
inline Vector bracket(const VectorFieldExpr& x, const VectorFieldExpr& y, const Vector& p) {
    return y.jac(p) * x.value(p) - x.jac(p) * y.value(p);
}

// Smooth frame fields for the distinguished distributions of a map, used by
// the evaluators that differentiate along them. Pointwise singular-vector
// bases are not smooth in the base point and are never differentiated; these
// fields are.
struct FramePack {
    std::vector<VectorFieldExpr> vertical;
    std::vector<VectorFieldExpr> horizontal;
    std::map<std::string, std::vector<VectorFieldExpr>> d1;  // keyed by structure tag I/J/K
    std::map<std::string, std::vector<VectorFieldExpr>> d2;

    bool has_vertical() const { return !vertical.empty(); }
};

struct MapSpec {
    SmoothMap map;
    std::vector<Vector> sample_points;          // explicit points, may be empty
    std::optional<std::pair<Vector, Vector>> sample_box;  // lo, hi
    std::optional<FramePack> frames;
};

namespace detail {

inline Vector json_to_vector(const nlohmann::json& j, Index expected, const std::string& what) {
    if (!j.is_array() || static_cast<Index>(j.size()) != expected)
        throw InputError("map spec: " + what + " must be an array of " + std::to_string(expected) +
                         " numbers");
    Vector v(expected);
    for (Index i = 0; i < expected; ++i) v[i] = j[static_cast<size_t>(i)].get<double>();
    return v;
}

inline std::vector<VectorFieldExpr> json_to_fields(const nlohmann::json& j, Index dim,
                                                   const std::map<std::string, double>& params,
                                                   const std::string& what) {
    std::vector<VectorFieldExpr> fields;
    if (!j.is_array()) throw InputError("map spec: " + what + " must be a list of fields");
    for (const auto& field : j) {
        if (!field.is_array() || static_cast<Index>(field.size()) != dim)
            throw InputError("map spec: each field in " + what + " needs " + std::to_string(dim) +
                             " component expressions");
        std::vector<Expr> comps;
        for (const auto& comp : field) comps.push_back(parse_expr(comp.get<std::string>()));
        fields.emplace_back(dim, std::move(comps), params);
    }
    return fields;
}

}  // namespace detail

// Map-spec document: JSON with domain_dim, codomain_dim, components
// (expression strings), params, and optional sample_points / sample_box /
// frames.
inline MapSpec load_map_spec(const nlohmann::json& doc, const std::string& name = {}) {
    if (!doc.is_object()) throw InputError("map spec: document must be a JSON object");
    for (const auto& key : {"domain_dim", "codomain_dim", "components"})
        if (!doc.contains(key))
            throw InputError(std::string("map spec: missing required key '") + key + "'");

    Index domain_dim = doc["domain_dim"].get<Index>();
    Index codomain_dim = doc["codomain_dim"].get<Index>();
    if (domain_dim < 1 || codomain_dim < 1)
        throw InputError("map spec: dimensions must be positive");

    std::map<std::string, double> params;
    if (doc.contains("params"))
        for (auto it = doc["params"].begin(); it != doc["params"].end(); ++it)
            params[it.key()] = it.value().get<double>();

    std::vector<Expr> comps;
    for (const auto& c : doc["components"]) comps.push_back(parse_expr(c.get<std::string>()));

    MapSpec spec{SmoothMap(domain_dim, codomain_dim, std::move(comps), params, name), {}, {}, {}};

    if (doc.contains("sample_points"))
        for (const auto& p : doc["sample_points"])
            spec.sample_points.push_back(detail::json_to_vector(p, domain_dim, "sample point"));

    if (doc.contains("sample_box")) {
        const auto& box = doc["sample_box"];
        if (!box.contains("min") || !box.contains("max"))
            throw InputError("map spec: sample_box needs 'min' and 'max'");
        Vector lo = detail::json_to_vector(box["min"], domain_dim, "sample_box.min");
        Vector hi = detail::json_to_vector(box["max"], domain_dim, "sample_box.max");
        for (Index i = 0; i < domain_dim; ++i)
            if (!(lo[i] < hi[i])) throw InputError("map spec: sample_box must have min < max");
        spec.sample_box = {lo, hi};
    }

    if (doc.contains("frames")) {
        const auto& fj = doc["frames"];
        FramePack frames;
        if (fj.contains("vertical"))
            frames.vertical = detail::json_to_fields(fj["vertical"], domain_dim, params, "frames.vertical");
        if (fj.contains("horizontal"))
            frames.horizontal =
                detail::json_to_fields(fj["horizontal"], domain_dim, params, "frames.horizontal");
        for (const char* block : {"d1", "d2"}) {
            if (!fj.contains(block)) continue;
            for (auto it = fj[block].begin(); it != fj[block].end(); ++it) {
                auto fields = detail::json_to_fields(it.value(), domain_dim, params,
                                                     std::string("frames.") + block);
                (std::string(block) == "d1" ? frames.d1 : frames.d2)[it.key()] = std::move(fields);
            }
        }
        spec.frames = std::move(frames);
    }
    return spec;
}

inline MapSpec load_map_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("map spec: cannot open '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("map spec: invalid JSON in '" + path + "': " + e.what());
    }
    std::string name = path;
    if (auto slash = name.find_last_of('/'); slash != std::string::npos) name = name.substr(slash + 1);
    if (auto dot = name.rfind(".json"); dot != std::string::npos) name = name.substr(0, dot);
    return load_map_spec(doc, name);
}

}  // namespace qslant
