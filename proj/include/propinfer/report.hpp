#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace propinfer {

struct PlanSummary {
    std::vector<double> ratios;
    int repeats = 0;
    std::size_t size = 0;
};

/// Result of one attack run. `mae` is present exactly when `ground_truth` is.
struct AttackReport {
    std::string attack_kind;
    std::string property;
    double prediction = 0.0;
    std::optional<double> ground_truth;
    std::optional<double> mae;
    std::optional<std::vector<std::string>> keywords;
    std::optional<PlanSummary> plan;
    std::map<std::string, std::uint64_t> seeds;
    std::map<std::string, double> timings_ms;
    std::vector<std::string> flags;        // e.g. ZeroSignal
    nlohmann::json details = nlohmann::json::object();

    void set_ground_truth(double truth);
    nlohmann::json to_json() const;
    static AttackReport from_json(const nlohmann::json& j);
};

}  // namespace propinfer
