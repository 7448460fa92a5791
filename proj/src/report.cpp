#include "propinfer/report.hpp"

#include <cmath>

namespace propinfer {

using nlohmann::json;

void AttackReport::set_ground_truth(double truth) {
    ground_truth = truth;
    mae = std::abs(prediction - truth);
}

json AttackReport::to_json() const {
    json j{{"attack_kind", attack_kind},
           {"property", property},
           {"prediction", prediction},
           {"seeds", seeds},
           {"timings_ms", timings_ms},
           {"flags", flags},
           {"details", details}};
    if (ground_truth) j["ground_truth"] = *ground_truth;
    if (mae) j["mae"] = *mae;
    if (keywords) j["keywords"] = *keywords;
    if (plan)
        j["plan"] = {{"ratios", plan->ratios}, {"repeats", plan->repeats}, {"size", plan->size}};
    return j;
}

AttackReport AttackReport::from_json(const json& j) {
    AttackReport r;
    r.attack_kind = j.at("attack_kind").get<std::string>();
    r.property = j.at("property").get<std::string>();
    r.prediction = j.at("prediction").get<double>();
    if (j.contains("ground_truth")) r.ground_truth = j.at("ground_truth").get<double>();
    if (j.contains("mae")) r.mae = j.at("mae").get<double>();
    if (j.contains("keywords")) r.keywords = j.at("keywords").get<std::vector<std::string>>();
    if (j.contains("plan")) {
        PlanSummary p;
        p.ratios = j.at("plan").at("ratios").get<std::vector<double>>();
        p.repeats = j.at("plan").at("repeats").get<int>();
        p.size = j.at("plan").at("size").get<std::size_t>();
        r.plan = p;
    }
    if (j.contains("seeds"))
        r.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
    if (j.contains("timings_ms"))
        r.timings_ms = j.at("timings_ms").get<std::map<std::string, double>>();
    if (j.contains("flags")) r.flags = j.at("flags").get<std::vector<std::string>>();
    if (j.contains("details")) r.details = j.at("details");
    return r;
}

}  // namespace propinfer
