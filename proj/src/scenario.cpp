#include "mpimux/scenario.hpp"

#include <fstream>

#include "json.hpp"

#include "mpimux/decomp.hpp"

namespace mpimux::scenario {

using nlohmann::json;

namespace {

json load_json(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in)
        throw InputError("cannot open scenario file " + file.string());
    try {
        return json::parse(in, nullptr, true, true); // allow comments
    } catch (const json::parse_error& e) {
        throw InputError("scenario " + file.string() + ": " + e.what());
    }
}

alloc::ClusterSpec parse_cluster(const json& j) {
    alloc::ClusterSpec cluster;
    cluster.nodes = j.at("nodes").get<int>();
    cluster.vcpus_per_node = j.at("vcpus_per_node").get<int>();
    cluster.price_per_hour = j.value("price_per_hour", 0.0);
    cluster.validate();
    return cluster;
}

template <typename T>
std::vector<T> expand_groups(const json& j, const char* what) {
    std::vector<T> values;
    if (!j.is_array())
        throw InputError(std::string(what) + " must be an array");
    for (const auto& item : j) {
        if (item.is_object()) {
            const int count = item.at("count").get<int>();
            if (count < 1)
                throw InputError(std::string(what) + ": group count must be positive");
            const T value = item.at("value").get<T>();
            values.insert(values.end(), static_cast<std::size_t>(count), value);
        } else {
            values.push_back(item.get<T>());
        }
    }
    return values;
}

std::vector<int> parse_allocation(const json& j, int ranks,
                                  const std::vector<double>& duties) {
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "equal") {
        const int m = j.at("millicpu").get<int>();
        if (m < 1)
            throw InputError("allocation: millicpu must be positive");
        return std::vector<int>(static_cast<std::size_t>(ranks), m);
    }
    if (mode == "proportional") {
        decomp::WeightVector wv{expand_groups<int>(j.at("weights"), "weights")};
        if (static_cast<int>(wv.weights.size()) != ranks)
            throw InputError("allocation: weights must match the rank count");
        auto plan = alloc::proportional_requests(wv, j.at("budget_millicpu").get<long long>());
        return plan.per_rank_millicpu;
    }
    if (mode == "duty") {
        if (duties.empty())
            throw InputError("allocation mode 'duty' needs calibrated duties");
        std::map<int, double> by_rank;
        for (int r = 0; r < ranks; ++r) by_rank[r] = duties[static_cast<std::size_t>(r)];
        auto plan =
            alloc::duty_proportional_requests(by_rank, j.at("budget_millicpu").get<long long>());
        return plan.per_rank_millicpu;
    }
    if (mode == "explicit") {
        auto values = expand_groups<int>(j.at("per_rank_millicpu"), "per_rank_millicpu");
        if (static_cast<int>(values.size()) != ranks)
            throw InputError("allocation: per_rank_millicpu must match the rank count");
        return values;
    }
    throw InputError("unknown allocation mode '" + mode + "'");
}

sim::SimJobSpec parse_job(const json& j) {
    sim::SimJobSpec spec;
    spec.job_id = j.at("id").get<std::string>();
    spec.ranks = j.at("ranks").get<int>();
    spec.iterations = j.at("iterations").get<long>();
    spec.start_offset_s = j.value("start_offset_s", 0.0);

    std::vector<double> duties;
    if (j.contains("duties")) {
        duties = expand_groups<double>(j.at("duties"), "duties");
        if (static_cast<int>(duties.size()) != spec.ranks)
            throw InputError("job " + spec.job_id + ": duties must match the rank count");
        const double t1 = j.at("t1_s").get<double>();
        const auto cal = sim::calibrate(duties, t1, spec.iterations);
        spec.per_rank_compute_s = cal.per_rank_compute_s;
        spec.collective_latency_s = cal.collective_latency_s;
    } else {
        spec.per_rank_compute_s =
            expand_groups<double>(j.at("compute_per_rank_s"), "compute_per_rank_s");
        if (static_cast<int>(spec.per_rank_compute_s.size()) != spec.ranks)
            throw InputError("job " + spec.job_id +
                             ": compute_per_rank_s must match the rank count");
        spec.collective_latency_s = j.at("collective_latency_s").get<double>();
    }

    spec.requests_millicpu = parse_allocation(j.at("allocation"), spec.ranks, duties);
    spec.validate();
    return spec;
}

} // namespace

SimScenario load_sim_scenario(const std::filesystem::path& file) {
    const json j = load_json(file);
    SimScenario sc;
    try {
        sc.seed = j.value("seed", std::uint64_t{42});
        sc.cluster = parse_cluster(j.at("cluster"));
        if (!j.contains("jobs") || !j.at("jobs").is_array() || j.at("jobs").empty())
            throw InputError("scenario needs a non-empty jobs array");
        for (const auto& job : j.at("jobs")) sc.jobs.push_back(parse_job(job));
    } catch (const json::exception& e) {
        throw InputError("scenario " + file.string() + ": " + e.what());
    }
    return sc;
}

ControllerScenario load_controller_scenario(const std::filesystem::path& file) {
    const json j = load_json(file);
    ControllerScenario sc;
    try {
        sc.seed = j.value("seed", std::uint64_t{42});
        sc.cluster = parse_cluster(j.at("cluster"));

        const json cfg = j.value("config", json::object());
        sc.config.profile_window = cfg.value("profile_window", 50);
        sc.config.fairness_threshold = cfg.value("fairness_threshold", 1.10);
        sc.config.per_sim_budget_millicpu = cfg.value("per_sim_budget_millicpu", 5900);
        sc.config.max_sims = cfg.value("max_sims", 4);
        sc.config.adjustment_cap = cfg.value("adjustment_cap", 0.20);
        sc.config.min_request_millicpu = cfg.value("min_request_millicpu", 10);

        const json& tmpl = j.at("simulation_template");
        sc.tmpl.ranks = tmpl.at("ranks").get<int>();
        sc.tmpl.iterations = tmpl.at("iterations").get<long>();
        sc.tmpl.t1_s = tmpl.at("t1_s").get<double>();
        sc.tmpl.duties = expand_groups<double>(tmpl.at("duties"), "duties");
        sc.tmpl.initial_millicpu = tmpl.value("initial_millicpu", 1000);
        sc.tmpl.validate();
        sc.config.validate(sc.tmpl.ranks);
    } catch (const json::exception& e) {
        throw InputError("scenario " + file.string() + ": " + e.what());
    }
    return sc;
}

namespace {

template <typename T>
T parse_number(const std::string& text);

template <>
double parse_number<double>(const std::string& text) {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size())
        throw InputError("trailing characters in number '" + text + "'");
    return v;
}

template <>
int parse_number<int>(const std::string& text) {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used != text.size())
        throw InputError("trailing characters in number '" + text + "'");
    return v;
}

template <typename T>
std::vector<T> parse_group_list(const std::string& text) {
    std::vector<T> values;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        std::string item = text.substr(pos, comma - pos);
        if (item.empty())
            throw InputError("empty entry in list '" + text + "'");
        const std::size_t x = item.find('x');
        try {
            if (x != std::string::npos) {
                const int count = parse_number<int>(item.substr(0, x));
                if (count < 1)
                    throw InputError("group count must be positive in '" + item + "'");
                const T value = parse_number<T>(item.substr(x + 1));
                values.insert(values.end(), static_cast<std::size_t>(count), value);
            } else {
                values.push_back(parse_number<T>(item));
            }
        } catch (const std::logic_error&) {
            throw InputError("cannot parse '" + item + "' in list '" + text + "'");
        }
        pos = comma + 1;
    }
    if (values.empty())
        throw InputError("empty list");
    return values;
}

} // namespace

std::vector<double> parse_group_values(const std::string& text) {
    return parse_group_list<double>(text);
}

std::vector<int> parse_group_weights(const std::string& text) {
    return parse_group_list<int>(text);
}

} // namespace mpimux::scenario
