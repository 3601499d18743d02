#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace flame {

struct CheckRecord {
    std::string check;
    nlohmann::json details;
    bool pass = false;
    bool skipped = false;
};

struct VerifyOptions {
    std::uint64_t seed = 20240001;
    // Numeric checks of limiting behavior run at finite sizes; these margins
    // are verification thresholds chosen for the harness, not quantities from
    // the asymptotic statements themselves.
    int fisher_draws = 50;
    int adaptive_datasets = 100;
    int adaptive_max_steps = 50;
    int intercept_seeds = 20;
    double slope_floor = 0.4;
    double support_band = 0.07;
    int hdlss_dim = 4000;
    double classification_floor = 0.95;
};

/// Named checks: fisher, adaptive, intercept-divergence, intercept-bounded,
/// support-fraction, hdlss. "all" runs every one.
std::vector<CheckRecord> run_verification(const std::string& selection,
                                          const VerifyOptions& options);

std::string records_to_jsonl(const std::vector<CheckRecord>& records);

}  // namespace flame
