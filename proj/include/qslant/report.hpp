#pragma once

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qslant/core.hpp"
#include "qslant/geoflow.hpp"
#include "qslant/hstructure.hpp"
#include "qslant/map.hpp"
#include "qslant/slant.hpp"
#include "qslant/version.hpp"

namespace qslant {

using json = nlohmann::ordered_json;

// Reports round every floating-point number through 15 significant digits so
// repeated runs serialize byte-identically.
inline double round_sig(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.15g", v);
    return std::strtod(buf, nullptr);
}

inline json json_number(double v) { return json(round_sig(v)); }

inline json json_vector(const Vector& v) {
    json arr = json::array();
    for (Index i = 0; i < v.size(); ++i) arr.push_back(round_sig(v[i]));
    return arr;
}

enum class Check { classify, identities, integrability, harmonicity, geodesic, decomposition, umbilical };

inline const std::map<std::string, Check>& check_names() {
    static const std::map<std::string, Check> names = {
        {"classify", Check::classify},       {"identities", Check::identities},
        {"integrability", Check::integrability}, {"harmonicity", Check::harmonicity},
        {"geodesic", Check::geodesic},       {"decomposition", Check::decomposition},
        {"umbilical", Check::umbilical},
    };
    return names;
}

struct AnalysisConfig {
    std::string map_spec_path;
    std::string structure_path;  // empty = canonical structure
    int points = 5;
    std::uint64_t seed = 42;
    double tol = tol::cluster;
    std::set<Check> checks = {Check::classify, Check::identities, Check::integrability,
                              Check::harmonicity, Check::geodesic, Check::decomposition,
                              Check::umbilical};
    std::map<std::string, double> param_overrides;
};

struct CheckRow {
    std::string id;
    double residual = 0.0;
    double tolerance = 0.0;
    int pairs = 0;
    bool passed = true;
    bool gating = true;  // informational rows never fail a run
    std::string detail;
};

struct AnalysisResult {
    Classification classification;
    std::vector<CheckRow> rows;
    json report;
    bool passed = true;
};

namespace detail {

inline CheckRow row_from(const ConditionResidual& c, bool gating) {
    CheckRow r;
    r.id = c.condition_id;
    r.residual = c.max_residual;
    r.tolerance = c.tolerance;
    r.pairs = c.frame_pairs_evaluated;
    r.passed = c.passed;
    r.gating = gating;
    return r;
}

inline std::vector<Vector> choose_points(const MapSpec& spec, int requested, std::uint64_t seed) {
    if (!spec.sample_points.empty()) return spec.sample_points;
    if (!spec.sample_box)
        throw InputError("map spec '" + spec.map.name() +
                         "' has neither sample_points nor sample_box");
    Rng rng(seed);
    std::vector<Vector> pts;
    for (int i = 0; i < requested; ++i)
        pts.push_back(rng.uniform_vector(spec.sample_box->first, spec.sample_box->second));
    return pts;
}

}  // namespace detail

// Full analysis of one map spec against a structure; deterministic given
// (spec, seed, tol).
inline AnalysisResult analyze_spec(const MapSpec& spec_in, const AnalysisConfig& cfg) {
    MapSpec spec = spec_in;
    if (!cfg.param_overrides.empty()) {
        auto params = spec.map.params();
        for (const auto& [k, v] : cfg.param_overrides) params[k] = v;
        spec.map = spec.map.with_params(params);
        if (spec.frames)
            throw InputError("param overrides with frame fields are not supported");
    }
    const SmoothMap& f = spec.map;
    if (f.domain_dim() % 4 != 0)
        throw InputError("map '" + f.name() + "': structure analysis needs a domain dimension divisible by 4");

    HypercomplexStructure h = cfg.structure_path.empty()
                                  ? canonical_hypercomplex(f.domain_dim() / 4)
                                  : load_structure_file(cfg.structure_path);
    if (h.dim != f.domain_dim())
        throw InputError("structure dimension does not match the map domain");

    AnalysisResult result;
    std::vector<CheckRow>& rows = result.rows;

    auto structure_check = validate(h);
    {
        CheckRow r{"structure_axioms", structure_check.max_residual(), tol::orthonormal, 0,
                   structure_check.passed, true, ""};
        rows.push_back(r);
        if (!structure_check.passed) throw InputError("structure axioms violated");
    }

    std::vector<Vector> points = detail::choose_points(spec, cfg.points, cfg.seed);
    Classification cls = classify(f, h, points, cfg.tol);
    result.classification = cls;

    bool decomposed = cls.verdict != Verdict::not_riemannian && cls.verdict != Verdict::generic;

    if (decomposed) {
        // Eikonal identity across all points.
        double eik = 0.0;
        for (const auto& s : cls.splits) eik = std::max(eik, s.eikonal_residual);
        rows.push_back({"eikonal_energy_identity", eik, tol::eikonal, static_cast<int>(cls.splits.size()),
                        eik <= tol::eikonal, true, ""});

        // Brute-force angle oracle per structure.
        if (cfg.checks.count(Check::classify)) {
            Rng rng(cfg.seed ^ 0xA06EULL);
            for (const auto& tag : structure_tags()) {
                double worst = 0.0;
                for (size_t i = 0; i < cls.splits.size(); ++i)
                    worst = std::max(worst, slant_angle_oracle_defect(cls.splits[i],
                                                                      cls.reports.at(tag)[i],
                                                                      h.structure(tag), rng));
                rows.push_back({"slant_angle_oracle:" + tag, worst, tol::angle_match, 200,
                                worst <= tol::angle_match, true, ""});
            }
        }
    }

    if (decomposed && cfg.checks.count(Check::identities)) {
        for (const auto& tag : structure_tags()) {
            double worst = 0.0;
            for (const auto& rep : cls.reports.at(tag))
                for (const auto& [name, res] : rep.identity_residuals) worst = std::max(worst, res);
            rows.push_back({"structure_block_identities:" + tag, worst, tol::identity_residual, 0,
                            worst <= tol::identity_residual, true, ""});

            double rh_worst = 0.0;
            bool rh_defined = false;
            for (const auto& rep : cls.reports.at(tag)) {
                if (rep.right_angle() || rep.vertical_dim() == 0) continue;
                rh_defined = true;
                Matrix rh = rhat(rep);
                rh_worst = std::max(rh_worst,
                                    max_abs(Matrix(rh * rh + Matrix::Identity(rh.rows(), rh.cols()))));
            }
            if (rh_defined)
                rows.push_back({"kernel_complex_structure_squares:" + tag, rh_worst,
                                tol::identity_residual, 0, rh_worst <= tol::identity_residual, true, ""});
        }
    }

    std::optional<FramePack> frames;
    bool need_frames = cfg.checks.count(Check::identities) || cfg.checks.count(Check::integrability) ||
                       cfg.checks.count(Check::geodesic) || cfg.checks.count(Check::decomposition);
    if (decomposed && need_frames) {
        try {
            frames = resolve_frames(f, cls, spec.frames);
        } catch (const UnsupportedInputError& e) {
            rows.push_back({"frames_available", 0.0, 0.0, 0, true, false, e.what()});
        }
    }

    if (decomposed && frames) {
        if (cfg.checks.count(Check::identities)) {
            for (const auto& tag : structure_tags()) {
                std::vector<ConditionResidual> merged;
                for (size_t i = 0; i < cls.splits.size(); ++i) {
                    auto rs = lemma_identities(f, cls.splits[i], h.structure(tag), tag,
                                               frames->vertical, frames->horizontal);
                    if (merged.empty()) {
                        merged = rs;
                    } else {
                        for (size_t k = 0; k < rs.size(); ++k) {
                            merged[k].max_residual =
                                std::max(merged[k].max_residual, rs[k].max_residual);
                            merged[k].frame_pairs_evaluated += rs[k].frame_pairs_evaluated;
                        }
                    }
                }
                for (auto& c : merged) {
                    c.finish();
                    rows.push_back(detail::row_from(c, true));
                }
            }
        }
        if (cfg.checks.count(Check::integrability)) {
            for (const auto& c : integrability_d1_residual(f, cls, h, *frames))
                rows.push_back(detail::row_from(c, c.condition_id.find("agreement") != std::string::npos));
            for (const auto& c : integrability_d2_residual(f, cls, h, *frames))
                rows.push_back(detail::row_from(c, c.condition_id.find("agreement") != std::string::npos));
        }
        if (cfg.checks.count(Check::geodesic)) {
            for (const auto& c : totally_geodesic_residual(f, cls, h, *frames))
                rows.push_back(detail::row_from(c, c.condition_id.find("agreement") != std::string::npos));
        }
        if (cfg.checks.count(Check::decomposition)) {
            for (const auto& c : product_decomposition_residual(f, cls, h, *frames))
                rows.push_back(detail::row_from(c, c.condition_id.find("agreement") != std::string::npos));
            for (const auto& c : fiber_decomposition_residual(f, cls, h, *frames))
                rows.push_back(detail::row_from(c, c.condition_id.find("agreement") != std::string::npos));
        }
    }

    std::optional<HarmonicityReport> harm;
    if (decomposed && cfg.checks.count(Check::harmonicity)) {
        harm = harmonicity_report(f, cls, h, spec.frames);
        rows.push_back({"tension_norm", harm->tension_norm, 0.0, 0, true, false, ""});
        rows.push_back({"range_mean_curvature_norm", harm->h_tilde_norm, 0.0, 0, true, false, ""});
        for (const auto& tag : structure_tags()) {
            bool hyp = harm->hypothesis_holds.at(tag);
            bool consistent = !hyp || harm->harmonic;
            rows.push_back({"harmonicity_implication:" + tag, consistent ? 0.0 : 1.0, 0.5, 0,
                            consistent, true, hyp ? "hypotheses hold" : "hypotheses do not hold"});
        }
    }

    std::optional<UmbilicalReport> umb;
    if (decomposed && cfg.checks.count(Check::umbilical)) {
        Rng rng(cfg.seed ^ 0x06B1ULL);
        umb = umbilical_report(f, cls, rng);
        rows.push_back({"umbilical_residual", umb->curvature.umbilical_residual, 0.0, 0, true, false,
                        umb->umbilical ? "fibers totally umbilical" : "fibers not umbilical"});
        if (umb->umbilical) {
            for (const auto& [tag, defect] : umb->h_in_omega_d2_defect)
                rows.push_back({"mean_curvature_in_omega_d2:" + tag, defect, tol::fd_residual, 0,
                                defect <= tol::fd_residual, true, ""});
            for (const auto& [tag, defect] : umb->minimal_defect)
                rows.push_back({"minimal_fibers_complex_case:" + tag, defect, tol::fd_residual, 0,
                                defect <= tol::fd_residual, true, ""});
        }
    }

    result.passed = true;
    for (const auto& r : rows)
        if (r.gating && !r.passed) result.passed = false;

    // ---- serialize ----
    json doc;
    doc["schema_version"] = report_schema_version;
    doc["tool"] = {{"name", tool_name}, {"version", tool_version}};
    doc["seed"] = cfg.seed;
    doc["tolerance"] = json_number(cfg.tol);
    json params = json::object();
    for (const auto& [k, v] : f.params()) params[k] = json_number(v);
    doc["map"] = {{"name", f.name()},
                  {"domain_dim", f.domain_dim()},
                  {"codomain_dim", f.codomain_dim()},
                  {"params", params}};
    json pts = json::array();
    for (const auto& p : points) pts.push_back(json_vector(p));
    doc["points"] = pts;

    json cj;
    cj["verdict"] = to_string(cls.verdict);
    cj["rank"] = cls.rank;
    cj["vertical_dim"] = cls.vertical_dim;
    cj["degenerate_vertical"] = cls.degenerate_vertical;
    if (!cls.detail.empty()) cj["detail"] = cls.detail;
    if (decomposed) {
        json angles = json::object();
        json d1 = json::object();
        json d2 = json::object();
        for (const auto& tag : structure_tags()) {
            const auto& th = cls.angles.at(tag);
            angles[tag] = {{"radians", json_number(th.value_or(0.0))},
                           {"label", cls.reports.at(tag).front().theta_label()}};
            d1[tag] = cls.d1_dims.at(tag);
            d2[tag] = cls.d2_dims.at(tag);
        }
        cj["angles"] = angles;
        cj["d1_dims"] = d1;
        cj["d2_dims"] = d2;
        cj["shared_d1"] = cls.shared_d1.has_value();
    }
    doc["classification"] = cj;

    if (decomposed) {
        json reps = json::array();
        for (const auto& tag : structure_tags()) {
            for (size_t i = 0; i < cls.reports.at(tag).size(); ++i) {
                const auto& rep = cls.reports.at(tag)[i];
                json rj;
                rj["structure"] = tag;
                rj["point_index"] = i;
                rj["is_semi_slant"] = rep.is_semi_slant;
                if (!rep.is_semi_slant) rj["failure"] = rep.failure;
                rj["theta_label"] = rep.theta_label();
                if (rep.theta) rj["theta"] = json_number(*rep.theta);
                rj["d1_dim"] = rep.d1.dim();
                rj["d2_dim"] = rep.d2.dim();
                rj["mu_dim"] = rep.mu.dim();
                json res = json::object();
                for (const auto& [k, v] : rep.identity_residuals) res[k] = json_number(v);
                rj["identity_residuals"] = res;
                json spectrum = json::array();
                for (double ev : rep.kernel_spectrum) spectrum.push_back(json_number(ev));
                rj["kernel_spectrum"] = spectrum;
                reps.push_back(rj);
            }
        }
        doc["structure_reports"] = reps;
    }

    if (harm || umb) {
        json cu;
        if (harm) {
            cu["tension"] = json_vector(harm->curvature.tension);
            cu["tension_norm"] = json_number(harm->tension_norm);
            cu["range_mean_curvature_norm"] = json_number(harm->h_tilde_norm);
            json traces = json::object();
            for (const auto& [tag, v] : harm->d2_trace_norm) traces[tag] = json_number(v);
            cu["d2_trace_norms"] = traces;
        }
        if (umb) {
            cu["fiber_mean_curvature"] = json_vector(umb->curvature.fiber_mean_curvature);
            cu["fiber_mean_curvature_norm"] = json_number(umb->mean_curvature_norm);
            cu["umbilical_residual"] = json_number(umb->curvature.umbilical_residual);
            cu["umbilical"] = umb->umbilical;
        }
        doc["curvature"] = cu;
    }

    json rowsj = json::array();
    for (const auto& r : rows) {
        json rj;
        rj["id"] = r.id;
        rj["residual"] = json_number(r.residual);
        rj["tolerance"] = json_number(r.tolerance);
        if (r.pairs > 0) rj["pairs"] = r.pairs;
        rj["passed"] = r.passed;
        rj["gating"] = r.gating;
        if (!r.detail.empty()) rj["detail"] = r.detail;
        rowsj.push_back(rj);
    }
    doc["checks"] = rowsj;
    doc["passed"] = result.passed;
    result.report = doc;
    return result;
}

inline AnalysisResult analyze(const AnalysisConfig& cfg) {
    MapSpec spec = load_map_spec_file(cfg.map_spec_path);
    return analyze_spec(spec, cfg);
}

}  // namespace qslant
