// Acceptance suite: replays every reference value and property bound the
// tool must reproduce, one pass/fail line per criterion. Exits nonzero on
// any failure.

#include <chrono>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "qslant/qslant.hpp"

namespace {

struct Criterion {
    std::string label;
    std::vector<std::string> row_ids;  // corpus rows that must pass
};

const qslant::CorpusRow* find_row(const qslant::CorpusVerification& v, const std::string& id) {
    for (const auto& row : v.rows)
        if (row.id == id) return &row;
    return nullptr;
}

}  // namespace

int main() {
    using clock = std::chrono::steady_clock;
    auto suite_start = clock::now();

    qslant::CorpusVerification verification;
    try {
        verification = qslant::run_corpus_verification(QSLANT_CORPUS_DIR, 42);
    } catch (const std::exception& e) {
        std::printf("FAIL  corpus verification aborted: %s\n", e.what());
        return 1;
    }

    std::vector<Criterion> criteria = {
        {"01 rotational fixture over the alpha grid: strict verdict, theta = pi/2, dims (4,1), rank 3",
         {"expectation:example_5_5", "alpha_grid:example_5_5"}},
        {"02 rank-4 fixture: theta = (pi/4, pi/2, pi/4), dims (4,4)", {"expectation:example_5_7"}},
        {"03 closed-form angles over 20 random parameter pairs", {"expectation:example_5_8", "angle_formula:example_5_8"}},
        {"04 complex-case fixture: empty slant part for I, pi/2 for J and K, listed dims",
         {"expectation:example_5_9"}},
        {"05 almost-h fixture: per-structure dims (6,6,4)/(2,2,4), all angles pi/2",
         {"expectation:example_5_10"}},
        {"06 energy identity 2e = |dF|^2 = rank at every sampled point", {"eikonal_identity"}},
        {"07 block identities, slant equation and kernel complex structure, plus 50 conjugated replays",
         {"structural_identity_suite"}},
        {"08 spectral slant angle agrees with 200-vector brute force", {"slant_angle_oracle"}},
        {"09 norm map: umbilical fibers, |H| = 1/|p|, H in omega(d2), tension 3/|p|",
         {"expectation:sphere_norm", "sphere_norm_geometry"}},
        {"10 condition evaluators agree with their oracles; tensor identities below 1e-5",
         {"theorem_condition_agreement"}},
        {"11 even fiber dimension whenever a slant angle is below pi/2 (corpus + 100 random maps)",
         {"even_dimensional_fibers"}},
    };

    bool all_ok = true;
    std::set<std::string> consumed;
    for (const auto& c : criteria) {
        bool ok = true;
        std::string detail;
        double ms = 0.0;
        for (const auto& id : c.row_ids) {
            consumed.insert(id);
            const auto* row = find_row(verification, id);
            if (!row) {
                ok = false;
                detail = "missing check row " + id;
                continue;
            }
            ms += row->millis;
            if (!row->passed) {
                ok = false;
                detail = row->detail;
            }
        }
        if (c.label.rfind("01", 0) == 0 && ms >= 1000.0) {
            ok = false;
            detail = "alpha grid took " + std::to_string(ms) + " ms (budget 1000 ms)";
        }
        std::printf("%s  criterion %s%s%s\n", ok ? "PASS" : "FAIL", c.label.c_str(),
                    detail.empty() ? "" : " -- ", detail.c_str());
        all_ok = all_ok && ok;
    }

    // determinism: a second full run must serialize byte-identically
    {
        bool ok = true;
        std::string detail;
        try {
            auto again = qslant::run_corpus_verification(QSLANT_CORPUS_DIR, 42);
            if (verification.report.dump(2) != again.report.dump(2)) {
                ok = false;
                detail = "reports differ between runs";
            }
        } catch (const std::exception& e) {
            ok = false;
            detail = e.what();
        }
        double total_s = std::chrono::duration<double>(clock::now() - suite_start).count();
        if (total_s >= 60.0) {
            ok = false;
            detail += (detail.empty() ? "" : "; ") + std::string("suite took ") +
                      std::to_string(total_s) + " s (budget 60 s)";
        }
        std::printf("%s  criterion 12 two verification runs byte-identical, wall time %.1f s < 60 s%s%s\n",
                    ok ? "PASS" : "FAIL", total_s, detail.empty() ? "" : " -- ", detail.c_str());
        all_ok = all_ok && ok;
    }

    // any corpus row not claimed by a criterion still has to pass
    {
        bool ok = true;
        std::string detail;
        for (const auto& row : verification.rows) {
            if (consumed.count(row.id)) continue;
            if (!row.passed) {
                ok = false;
                detail += row.id + ": " + row.detail + "; ";
            }
        }
        std::printf("%s  supporting corpus rows\n", ok ? "PASS" : "FAIL");
        if (!detail.empty()) std::printf("      %s\n", detail.c_str());
        all_ok = all_ok && ok;
    }

    std::printf("%s\n", all_ok ? "acceptance suite passed" : "ACCEPTANCE SUITE FAILED");
    return all_ok ? 0 : 1;
}
