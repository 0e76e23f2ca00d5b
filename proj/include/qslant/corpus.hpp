#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qslant/report.hpp"

namespace qslant {

// Built-in fixtures: these file stems must exist in the corpus directory.
inline const std::vector<std::string>& corpus_member_names() {
    static const std::vector<std::string> names = {
        "example_5_5", "example_5_6", "example_5_7", "example_5_8",
        "example_5_9", "example_5_10", "sphere_norm",
    };
    return names;
}

struct AngleExpectation {
    bool complex_case = false;
    double theta = 0.0;
    double tolerance = 1e-9;
};

struct CorpusExpectation {
    std::string name;
    Index rank = 0;
    Verdict verdict = Verdict::generic;
    std::map<std::string, Index> d1_dims, d2_dims;
    std::map<std::string, AngleExpectation> angles;
};

using Corpus = std::map<std::string, MapSpec>;

inline Corpus load_corpus(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw InputError("corpus: '" + dir + "' is not a directory");
    bool any = false;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".json") any = true;
    if (!any) throw InputError("corpus: no map specs found in '" + dir + "'");

    Corpus corpus;
    for (const auto& name : corpus_member_names()) {
        fs::path file = fs::path(dir) / (name + ".json");
        if (!fs::exists(file)) throw InputError("corpus: missing fixture '" + name + ".json'");
        corpus.emplace(name, load_map_spec_file(file.string()));
    }
    return corpus;
}

namespace detail {

inline AngleExpectation right_angle_expect() { return {false, M_PI / 2.0, 1e-9}; }

inline std::map<std::string, AngleExpectation> all_right_angles() {
    return {{"I", right_angle_expect()}, {"J", right_angle_expect()}, {"K", right_angle_expect()}};
}

inline std::map<std::string, Index> same_dims(Index d) { return {{"I", d}, {"J", d}, {"K", d}}; }

}  // namespace detail

// The reference values each fixture must reproduce.
inline std::vector<CorpusExpectation> default_corpus_expectations(const Corpus& corpus) {
    std::vector<CorpusExpectation> out;

    out.push_back({"example_5_5", 3, Verdict::strictly_h_semi_slant, detail::same_dims(4),
                   detail::same_dims(1), detail::all_right_angles()});
    out.push_back({"example_5_6", 3, Verdict::strictly_h_semi_slant, detail::same_dims(0),
                   detail::same_dims(1), detail::all_right_angles()});
    out.push_back({"example_5_7", 4, Verdict::h_semi_slant, detail::same_dims(4), detail::same_dims(4),
                   {{"I", {false, M_PI / 4.0, 1e-9}},
                    {"J", detail::right_angle_expect()},
                    {"K", {false, M_PI / 4.0, 1e-9}}}});
    {
        const auto& params = corpus.at("example_5_8").map.params();
        double sum = params.at("alpha") + params.at("beta");
        out.push_back({"example_5_8", 6, Verdict::h_semi_slant, detail::same_dims(4),
                       detail::same_dims(2),
                       {{"I", {false, std::acos(std::abs(std::sin(sum))), 1e-8}},
                        {"J", detail::right_angle_expect()},
                        {"K", {false, std::acos(std::abs(std::cos(sum))), 1e-8}}}});
    }
    out.push_back({"example_5_9", 6, Verdict::almost_h_semi_slant,
                   {{"I", 6}, {"J", 4}, {"K", 4}},
                   {{"I", 0}, {"J", 2}, {"K", 2}},
                   {{"I", {true, 0.0, 1e-9}},
                    {"J", detail::right_angle_expect()},
                    {"K", detail::right_angle_expect()}}});
    out.push_back({"example_5_10", 4, Verdict::almost_h_semi_slant,
                   {{"I", 6}, {"J", 6}, {"K", 4}},
                   {{"I", 2}, {"J", 2}, {"K", 4}},
                   detail::all_right_angles()});
    out.push_back({"sphere_norm", 1, Verdict::strictly_h_semi_slant, detail::same_dims(2),
                   detail::same_dims(1), detail::all_right_angles()});
    return out;
}

struct CorpusRow {
    std::string id;
    bool passed = true;
    double millis = 0.0;
    std::string detail;
};

struct CorpusVerification {
    std::vector<CorpusRow> rows;
    std::map<std::string, json> member_reports;
    json report;
    bool passed = true;
};

namespace detail {

inline std::string describe_angle(const std::optional<double>& theta) {
    if (!theta) return "complex case";
    std::ostringstream os;
    os.precision(15);
    os << *theta;
    return os.str();
}

inline bool check_against_expectation(const Classification& cls, const CorpusExpectation& exp,
                                      std::string& why) {
    std::ostringstream os;
    os.precision(15);
    if (cls.verdict != exp.verdict) {
        os << exp.name << ": expected verdict " << to_string(exp.verdict) << ", computed "
           << to_string(cls.verdict);
        why = os.str();
        return false;
    }
    if (cls.rank != exp.rank) {
        os << exp.name << ": expected rank " << exp.rank << ", computed " << cls.rank;
        why = os.str();
        return false;
    }
    for (const auto& tag : structure_tags()) {
        if (cls.d1_dims.at(tag) != exp.d1_dims.at(tag) || cls.d2_dims.at(tag) != exp.d2_dims.at(tag)) {
            os << exp.name << ": expected dims(" << tag << ") = (" << exp.d1_dims.at(tag) << ", "
               << exp.d2_dims.at(tag) << "), computed (" << cls.d1_dims.at(tag) << ", "
               << cls.d2_dims.at(tag) << ")";
            why = os.str();
            return false;
        }
        const auto& angle = cls.angles.at(tag);
        const auto& want = exp.angles.at(tag);
        if (want.complex_case != !angle.has_value()) {
            os << exp.name << ": expected theta_" << tag << " "
               << (want.complex_case ? "complex case" : "a genuine angle") << ", computed "
               << describe_angle(angle);
            why = os.str();
            return false;
        }
        if (!want.complex_case && std::abs(*angle - want.theta) > want.tolerance) {
            os << exp.name << ": expected theta_" << tag << " = " << want.theta << ", computed "
               << *angle << " (tolerance " << want.tolerance << ")";
            why = os.str();
            return false;
        }
    }
    return true;
}

// Extract the constant A, b of an affine map; requires an exactly vanishing
// Hessian, which the dual-number evaluation detects without tolerance.
inline std::optional<std::pair<Matrix, Vector>> affine_parts(const SmoothMap& f, const Vector& probe) {
    if (hessian(f, probe).max_entry() != 0.0) return std::nullopt;
    Matrix a = f.jac(probe);
    Vector b = f.value(probe) - a * probe;
    return {{a, b}};
}

}  // namespace detail

// Runs every reference check against the corpus directory. All randomness is
// derived from the seed, so two runs produce identical reports.
inline CorpusVerification run_corpus_verification(
    const std::string& corpus_dir, std::uint64_t seed = 42,
    std::optional<std::vector<CorpusExpectation>> expectations_override = std::nullopt) {
    using clock = std::chrono::steady_clock;
    Corpus corpus = load_corpus(corpus_dir);
    std::vector<CorpusExpectation> expectations =
        expectations_override ? *expectations_override : default_corpus_expectations(corpus);

    CorpusVerification v;
    auto add_row = [&](const std::string& id, bool passed, double millis, const std::string& detail) {
        v.rows.push_back({id, passed, millis, detail});
        if (!passed) v.passed = false;
    };
    auto timed = [&](auto&& body) {
        auto t0 = clock::now();
        std::pair<bool, std::string> r;
        try {
            r = body();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        double ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
        return std::tuple<bool, double, std::string>(r.first, ms, r.second);
    };

    AnalysisConfig base_cfg;
    base_cfg.points = 3;
    base_cfg.seed = seed;

    // Per-member reference values plus full diagnostic reports.
    std::map<std::string, Classification> classifications;
    for (const auto& exp : expectations) {
        auto [ok, ms, why] = timed([&]() -> std::pair<bool, std::string> {
            const MapSpec& spec = corpus.at(exp.name);
            AnalysisResult res = analyze_spec(spec, base_cfg);
            v.member_reports[exp.name] = res.report;
            classifications.emplace(exp.name, res.classification);
            std::string detail;
            if (!detail::check_against_expectation(res.classification, exp, detail))
                return {false, detail};
            if (!res.passed) return {false, exp.name + ": a gating diagnostic check failed"};
            return {true, ""};
        });
        add_row("expectation:" + exp.name, ok, ms, why);
    }

    // Slant data of the first fixture across a parameter grid: the analysis
    // must be insensitive to the rotation parameter.
    {
        auto [ok, ms, why] = timed([&]() -> std::pair<bool, std::string> {
            const MapSpec& spec = corpus.at("example_5_5");
            AnalysisConfig cfg = base_cfg;
            cfg.checks = {Check::classify};
            for (int k = 0; k < 8; ++k) {
                cfg.param_overrides = {{"alpha", 0.15 + 0.35 * k}};
                AnalysisResult res = analyze_spec(spec, cfg);
                const Classification& cls = res.classification;
                if (cls.verdict != Verdict::strictly_h_semi_slant || cls.rank != 3)
                    return {false, "example_5_5: alpha grid point " + std::to_string(k) +
                                       " lost the reference verdict"};
                for (const auto& tag : structure_tags()) {
                    if (cls.d1_dims.at(tag) != 4 || cls.d2_dims.at(tag) != 1)
                        return {false, "example_5_5: wrong dims on the alpha grid"};
                    if (!cls.angles.at(tag) || std::abs(*cls.angles.at(tag) - M_PI / 2.0) > 1e-9)
                        return {false, "example_5_5: angle drifted from pi/2 on the alpha grid"};
                }
            }
            return {true, ""};
        });
        add_row("alpha_grid:example_5_5", ok, ms, why);
    }

    // Closed-form slant angles over random parameters, kept away from the
    // degenerate values where the slant part merges into the invariant part.
    {
        auto [ok, ms, why] = timed([&]() -> std::pair<bool, std::string> {
            const MapSpec& spec = corpus.at("example_5_8");
            AnalysisConfig cfg = base_cfg;
            cfg.checks = {Check::classify};
            Rng rng(seed ^ 0x58ULL);
            int done = 0;
            while (done < 20) {
                double alpha = rng.uniform(-1.5, 1.5);
                double beta = rng.uniform(-1.5, 1.5);
                double s = std::abs(std::sin(alpha + beta));
                if (s < 0.05 || s > 0.95) continue;
                ++done;
                cfg.param_overrides = {{"alpha", alpha}, {"beta", beta}};
                AnalysisResult res = analyze_spec(spec, cfg);
                const Classification& cls = res.classification;
                for (const auto& tag : structure_tags())
                    if (!cls.angles.at(tag)) return {false, "example_5_8: unexpected complex case"};
                double cos_i = std::cos(*cls.angles.at("I"));
                double cos_k = std::cos(*cls.angles.at("K"));
                if (std::abs(cos_i - s) > 1e-8)
                    return {false, "example_5_8: cos theta_I mismatch at alpha+beta = " +
                                       std::to_string(alpha + beta)};
                if (std::abs(cos_k - std::abs(std::cos(alpha + beta))) > 1e-8)
                    return {false, "example_5_8: cos theta_K mismatch at alpha+beta = " +
                                       std::to_string(alpha + beta)};
                if (std::abs(*cls.angles.at("J") - M_PI / 2.0) > 1e-9)
                    return {false, "example_5_8: theta_J left pi/2"};
            }
            return {true, ""};
        });
        add_row("angle_formula:example_5_8", ok, ms, why);
    }

    // Energy identity at every sampled point of every fixture.
    {
        auto [ok, ms, why] = timed([&]() -> std::pair<bool, std::string> {
            for (const auto& [name, cls] : classifications)
                for (const auto& split : cls.splits)
                    if (split.eikonal_residual > tol::eikonal)
                        return {false, name + ": energy identity residual " +
                                           std::to_string(split.eikonal_residual)};
            return {true, ""};
        });
        add_row("eikonal_identity", ok, ms, why);
    }

    // Block identities, slant equation, and the kernel complex structure on
    // every fixture, then on conjugated replays of the whole analysis.
    {
        auto [ok, ms, why] = timed([&]() -> std::pair<bool, std::string> {
            for (const auto& [name, cls] : classifications) {
                for (const auto& tag : structure_tags()) {
                    for (const auto& rep : cls.reports.at(tag)) {
                        for (const auto& [id, res] : rep.identity_residuals)
                            if (res > tol::identity_residual)
                                return {false, name + ": identity " + id + " residual " +
                                                   std::to_string(res)};
                        if (rep.is_semi_slant && !rep.right_angle() && rep.vertical_dim() > 0) {
                            Matrix rh = rhat(rep);
                            double res = max_abs(
                                Matrix(rh * rh + Matrix::Identity(rh.rows(), rh.cols())));
                            if (res > tol::identity_residual)
                                return {false, name + ": kernel complex structure defect " +
                                                   std::to_string(res)};
                        }
                    }
                }
            }

            Rng rng(seed ^ 0xC0117ULL);
            std::vector<std::string> names;
            for (const auto& [name, _] : classifications) names.push_back(name);
            for (int t = 0; t < 50; ++t) {
                const std::string& name = names[static_cast<size_t>(t) % names.size()];
                const MapSpec& spec = corpus.at(name);
                const Classification& original = classifications.at(name);
                const Index d = spec.map.domain_dim();
                Matrix q = rng.orthogonal(d);
                HypercomplexStructure hc = conjugate(canonical_hypercomplex(d / 4), q);
                if (!validate(hc).passed)
                    return {false, "conjugated structure failed its axioms (trial " +
                                       std::to_string(t) + ")"};

                std::vector<Vector> points;
                for (const auto& split : original.splits) points.push_back(q * split.point);

                auto parts = detail::affine_parts(spec.map, original.splits.front().point);
                Classification replay;
                if (parts) {
                    SmoothMap rotated =
                        SmoothMap::affine(parts->first * q.transpose(), parts->second, name);
                    replay = classify(rotated, hc, points);
                } else {
                    // Only the norm fixture is nonlinear; it is rotation
                    // invariant, so the same map replays against the
                    // conjugated structure.
                    replay = classify(spec.map, hc, points);
                }
                if (replay.verdict != original.verdict)
                    return {false, name + ": conjugated replay changed the verdict"};
                for (const auto& tag : structure_tags()) {
                    if (std::abs(replay.angle_or_zero(tag) - original.angle_or_zero(tag)) > 1e-9)
                        return {false, name + ": conjugated replay moved theta_" + tag};
                    for (const auto& rep : replay.reports.at(tag)) {
                        for (const auto& [id, res] : rep.identity_residuals)
                            if (res > tol::identity_residual)
                                return {false, name + " (conjugated): identity " + id +
                                                   " residual " + std::to_string(res)};
                        if (rep.is_semi_slant && !rep.right_angle() && rep.vertical_dim() > 0) {
                            Matrix rh = rhat(rep);
                            double res = max_abs(
                                Matrix(rh * rh + Matrix::Identity(rh.rows(), rh.cols())));
                            if (res > tol::identity_residual)
                                return {false, name + " (conjugated): kernel complex structure "
                                                   "defect " + std::to_string(res)};
                        }
                    }
                }
            }
            return {true, ""};
        });
        add_row("structural_identity_suite", ok, ms, why);
    }

    // The spectral angle against the brute-force definition.
    {
        auto [ok, ms, why] = timed([&]() -> std::pair<bool, std::string> {
            Rng rng(seed ^ 0x0A06ULL);
            for (const auto& [name, cls] : classifications) {
                const Index d = corpus.at(name).map.domain_dim();
                HypercomplexStructure h = canonical_hypercomplex(d / 4);
                for (const auto& tag : structure_tags())
                    for (size_t i = 0; i < cls.splits.size(); ++i) {
                        double defect = slant_angle_oracle_defect(
                            cls.splits[i], cls.reports.at(tag)[i], h.structure(tag), rng);
                        if (defect > tol::angle_match)
                            return {false, name + ": direct angle deviates from the spectral "
                                               "angle by " + std::to_string(defect)};
                    }
            }
            return {true, ""};
        });
        add_row("slant_angle_oracle", ok, ms, why);
    }

    // Analytic geometry of the norm fixture: fiber curvature, umbilical
    // fibers, and the tension field all have closed forms.
    {
        auto [ok, ms, why] = timed([&]() -> std::pair<bool, std::string> {
            const MapSpec& spec = corpus.at("sphere_norm");
            const Classification& cls = classifications.at("sphere_norm");
            Rng rng(seed ^ 0x5D43ULL);
            UmbilicalReport umb = umbilical_report(spec.map, cls, rng);
            if (umb.curvature.umbilical_residual > 1e-5)
                return {false, "sphere_norm: fibers not umbilical, residual " +
                                   std::to_string(umb.curvature.umbilical_residual)};
            const Vector& p0 = cls.splits.front().point;
            double radius = p0.norm();
            if (std::abs(umb.mean_curvature_norm - 1.0 / radius) > 1e-5)
                return {false, "sphere_norm: |H| != 1/|p|"};
            for (const auto& tag : structure_tags()) {
                auto it = umb.h_in_omega_d2_defect.find(tag);
                if (it == umb.h_in_omega_d2_defect.end() || it->second > 1e-5)
                    return {false, "sphere_norm: H escapes omega(d2) for " + tag};
            }
            for (const auto& split : cls.splits) {
                Vector tau = tension(spec.map, split.point);
                double want = 3.0 / split.point.norm();
                if (std::abs(tau.norm() - want) > 1e-6)
                    return {false, "sphere_norm: tension norm " + std::to_string(tau.norm()) +
                                       ", expected " + std::to_string(want)};
            }
            return {true, ""};
        });
        add_row("sphere_norm_geometry", ok, ms, why);
    }

    // Condition evaluators against their independent oracles, and the eight
    // tensor identities, on every fixture.
    {
        auto [ok, ms, why] = timed([&]() -> std::pair<bool, std::string> {
            for (const auto& [name, cls] : classifications) {
                const MapSpec& spec = corpus.at(name);
                const Index d = spec.map.domain_dim();
                HypercomplexStructure h = canonical_hypercomplex(d / 4);
                if (cls.vertical_dim == 0) continue;
                FramePack frames = resolve_frames(spec.map, cls, spec.frames);

                std::vector<ConditionResidual> all;
                auto run = [&](auto&& fn) {
                    auto rs = fn();
                    all.insert(all.end(), rs.begin(), rs.end());
                };
                run([&] { return integrability_d1_residual(spec.map, cls, h, frames); });
                run([&] { return integrability_d2_residual(spec.map, cls, h, frames); });
                run([&] { return totally_geodesic_residual(spec.map, cls, h, frames); });
                run([&] { return product_decomposition_residual(spec.map, cls, h, frames); });
                run([&] { return fiber_decomposition_residual(spec.map, cls, h, frames); });
                for (const auto& c : all)
                    if (c.condition_id.find("agreement") != std::string::npos && !c.passed)
                        return {false, name + ": evaluator disagrees with its oracle on " +
                                           c.condition_id};

                for (const auto& tag : structure_tags())
                    for (const auto& split : cls.splits)
                        for (const auto& c :
                             lemma_identities(spec.map, split, h.structure(tag), tag,
                                              frames.vertical, frames.horizontal))
                            if (!c.passed)
                                return {false, name + ": tensor identity " + c.condition_id +
                                                   " residual " + std::to_string(c.max_residual)};
            }
            return {true, ""};
        });
        add_row("theorem_condition_agreement", ok, ms, why);
    }

    // Parity of the fiber dimension whenever some slant angle is below pi/2,
    // over the fixtures and a population of random isometric affine maps.
    {
        auto [ok, ms, why] = timed([&]() -> std::pair<bool, std::string> {
            auto parity_ok = [](const Classification& cls) {
                bool all_right = true;
                for (const auto& tag : structure_tags()) {
                    std::optional<double> theta;
                    if (auto it = cls.angles.find(tag); it != cls.angles.end()) theta = it->second;
                    if (!theta || std::cos(*theta) > tol::right_angle) all_right = false;
                }
                return all_right || cls.vertical_dim % 2 == 0;
            };
            for (const auto& [name, cls] : classifications) {
                if (cls.verdict == Verdict::not_riemannian || cls.verdict == Verdict::generic)
                    continue;
                if (!parity_ok(cls)) return {false, name + ": odd fiber with angle below pi/2"};
            }

            Rng rng(seed ^ 0xEF1BE5ULL);
            for (int t = 0; t < 100; ++t) {
                Index d = 4 * (1 + static_cast<Index>(rng.raw() % 3));
                Index rank = static_cast<Index>(rng.raw() % static_cast<std::uint64_t>(d + 1));
                Index n = std::max<Index>(rank + static_cast<Index>(rng.raw() % 3), 1);
                Matrix p_orth = rng.orthogonal(n);
                Matrix q_orth = rng.orthogonal(d);
                Matrix a = p_orth.leftCols(rank) * q_orth.leftCols(rank).transpose();
                Vector b = rng.normal_vector(n);
                SmoothMap f = SmoothMap::affine(a, b, "random_affine");
                std::vector<Vector> pts = {rng.normal_vector(d), rng.normal_vector(d)};
                try {
                    Classification cls = classify(f, canonical_hypercomplex(d / 4), pts);
                    if (cls.verdict == Verdict::not_riemannian)
                        return {false, "random affine trial " + std::to_string(t) +
                                           " lost the isometry property"};
                    if (cls.verdict != Verdict::generic && !parity_ok(cls))
                        return {false, "random affine trial " + std::to_string(t) +
                                           ": odd fiber with angle below pi/2"};
                } catch (const StructuralInconsistency& e) {
                    return {false, std::string("random affine trial: ") + e.what()};
                }
            }
            return {true, ""};
        });
        add_row("even_dimensional_fibers", ok, ms, why);
    }

    // ---- serialize ----
    json doc;
    doc["schema_version"] = report_schema_version;
    doc["tool"] = {{"name", tool_name}, {"version", tool_version}};
    doc["seed"] = seed;
    json rows = json::array();
    for (const auto& row : v.rows) {
        json r;
        r["id"] = row.id;
        r["passed"] = row.passed;
        if (!row.detail.empty()) r["detail"] = row.detail;
        rows.push_back(r);
    }
    doc["checks"] = rows;
    json members = json::object();
    for (const auto& [name, rep] : v.member_reports) members[name] = rep;
    doc["members"] = members;
    doc["passed"] = v.passed;
    v.report = doc;
    return v;
}

}  // namespace qslant
