// Command line front end: analyze a map spec against a hypercomplex
// structure, verify the built-in reference corpus, or dump the identity
// residuals for one map.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qslant/qslant.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_check_failure = 1;
constexpr int exit_input_error = 2;
constexpr int exit_numeric_error = 3;

void write_json(const std::string& path, const qslant::json& doc) {
    std::ofstream out(path);
    if (!out) throw qslant::InputError("cannot write report to '" + path + "'");
    out << doc.dump(2) << "\n";
}

void print_rows(const std::vector<qslant::CheckRow>& rows) {
    for (const auto& r : rows) {
        if (!r.gating) {
            std::printf("  info  %-46s residual %.3e %s\n", r.id.c_str(), r.residual,
                        r.detail.c_str());
        } else {
            std::printf("  %s  %-46s residual %.3e (tol %.1e)%s%s\n", r.passed ? "pass" : "FAIL",
                        r.id.c_str(), r.residual, r.tolerance, r.detail.empty() ? "" : " ",
                        r.detail.c_str());
        }
    }
}

void print_classification(const qslant::Classification& cls) {
    std::printf("verdict: %s   rank %lld, fiber dimension %lld%s\n",
                qslant::to_string(cls.verdict).c_str(), static_cast<long long>(cls.rank),
                static_cast<long long>(cls.vertical_dim),
                cls.degenerate_vertical ? " (empty fiber, degenerate)" : "");
    if (!cls.detail.empty()) std::printf("  note: %s\n", cls.detail.c_str());
    if (cls.verdict == qslant::Verdict::not_riemannian || cls.verdict == qslant::Verdict::generic)
        return;
    for (const auto& tag : qslant::structure_tags()) {
        std::printf("  %s: theta = %s, dim d1 = %lld, dim d2 = %lld\n", tag.c_str(),
                    cls.reports.at(tag).front().theta_label().c_str(),
                    static_cast<long long>(cls.d1_dims.at(tag)),
                    static_cast<long long>(cls.d2_dims.at(tag)));
    }
    if (cls.shared_d1)
        std::printf("  the three structures share one invariant distribution (dim %lld)\n",
                    static_cast<long long>(cls.shared_d1->dim()));
}

std::map<std::string, double> parse_param_overrides(const std::vector<std::string>& raw) {
    std::map<std::string, double> out;
    for (const auto& kv : raw) {
        auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw qslant::InputError("--param expects name=value, got '" + kv + "'");
        out[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    }
    return out;
}

int exit_code_for(const qslant::Error& e) {
    switch (e.kind()) {
        case qslant::ErrorKind::numeric: return exit_numeric_error;
        case qslant::ErrorKind::input:
        case qslant::ErrorKind::unsupported: return exit_input_error;
        case qslant::ErrorKind::internal: return exit_numeric_error;
    }
    return exit_input_error;
}

const char* kind_name(qslant::ErrorKind k) {
    switch (k) {
        case qslant::ErrorKind::input: return "input";
        case qslant::ErrorKind::numeric: return "numeric";
        case qslant::ErrorKind::unsupported: return "unsupported";
        case qslant::ErrorKind::internal: return "internal";
    }
    return "unknown";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"semi-slant analysis of smooth maps from flat hyperkaehler space"};
    app.require_subcommand(1);

    // analyze
    auto* analyze_cmd = app.add_subcommand("analyze", "analyze one map spec");
    std::string map_path, structure_path, json_path;
    int points = 5;
    std::uint64_t seed = 42;
    double tolerance = qslant::tol::cluster;
    std::vector<std::string> checks_raw, params_raw;
    analyze_cmd->add_option("spec", map_path, "map spec JSON file")->required();
    analyze_cmd->add_option("--structure", structure_path, "structure file (default: canonical)");
    analyze_cmd->add_option("--points", points, "number of sampled analysis points");
    analyze_cmd->add_option("--seed", seed, "sampling seed");
    analyze_cmd->add_option("--tol", tolerance, "eigenvalue cluster tolerance");
    analyze_cmd->add_option("--json", json_path, "write the full report here");
    analyze_cmd->add_option("--checks", checks_raw, "subset of checks to run")->delimiter(',');
    analyze_cmd->add_option("--param", params_raw, "override a map parameter, name=value");

    // identities
    auto* ident_cmd = app.add_subcommand("identities", "report identity residuals for one map");
    ident_cmd->add_option("spec", map_path, "map spec JSON file")->required();
    ident_cmd->add_option("--structure", structure_path, "structure file (default: canonical)");
    ident_cmd->add_option("--points", points, "number of sampled analysis points");
    ident_cmd->add_option("--seed", seed, "sampling seed");
    ident_cmd->add_option("--tol", tolerance, "eigenvalue cluster tolerance");
    ident_cmd->add_option("--json", json_path, "write the full report here");

    // verify-corpus
    auto* verify_cmd = app.add_subcommand("verify-corpus", "run the reference corpus checks");
    std::string corpus_dir = "corpus";
    verify_cmd->add_option("--corpus", corpus_dir, "corpus directory (default: ./corpus)");
    verify_cmd->add_option("--seed", seed, "sampling seed");
    verify_cmd->add_option("--json", json_path, "write the full report here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (analyze_cmd->parsed() || ident_cmd->parsed()) {
            qslant::AnalysisConfig cfg;
            cfg.map_spec_path = map_path;
            cfg.structure_path = structure_path;
            cfg.points = points;
            cfg.seed = seed;
            cfg.tol = tolerance;
            cfg.param_overrides = parse_param_overrides(params_raw);
            if (ident_cmd->parsed()) {
                cfg.checks = {qslant::Check::classify, qslant::Check::identities};
            } else if (!checks_raw.empty()) {
                cfg.checks.clear();
                for (const auto& c : checks_raw) {
                    auto it = qslant::check_names().find(c);
                    if (it == qslant::check_names().end())
                        throw qslant::InputError("unknown check '" + c + "'");
                    cfg.checks.insert(it->second);
                }
            }

            qslant::AnalysisResult result = qslant::analyze(cfg);
            std::printf("map: %s\n", result.report["map"]["name"].get<std::string>().c_str());
            print_classification(result.classification);
            print_rows(result.rows);
            if (!json_path.empty()) write_json(json_path, result.report);
            std::printf("%s\n", result.passed ? "all checks passed" : "CHECKS FAILED");
            return result.passed ? exit_ok : exit_check_failure;
        }

        if (verify_cmd->parsed()) {
            qslant::CorpusVerification v = qslant::run_corpus_verification(corpus_dir, seed);
            for (const auto& row : v.rows)
                std::printf("  %s  %-40s %7.1f ms  %s\n", row.passed ? "pass" : "FAIL",
                            row.id.c_str(), row.millis, row.detail.c_str());
            if (!json_path.empty()) write_json(json_path, v.report);
            std::printf("%s\n", v.passed ? "corpus verified" : "CORPUS VERIFICATION FAILED");
            return v.passed ? exit_ok : exit_check_failure;
        }
    } catch (const qslant::Error& e) {
        std::fprintf(stderr, "error[%s]: %s\n", kind_name(e.kind()), e.what());
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error[input]: %s\n", e.what());
        return exit_input_error;
    }
    return exit_input_error;
}
