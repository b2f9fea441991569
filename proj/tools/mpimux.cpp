// Command-line front end: trace analysis, allocation planning, throughput
// prediction, cluster simulation, the dynamic controller, and manifest
// emission. Every subcommand is deterministic for a fixed seed; exit code
// 2 flags bad input, 3 flags a violated resource constraint.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mpimux/alloc.hpp"
#include "mpimux/common.hpp"
#include "mpimux/controller.hpp"
#include "mpimux/decomp.hpp"
#include "mpimux/k8s.hpp"
#include "mpimux/model.hpp"
#include "mpimux/scenario.hpp"
#include "mpimux/sim.hpp"
#include "mpimux/trace.hpp"

namespace fs = std::filesystem;
using namespace mpimux;

namespace {

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw InputError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_file(const fs::path& file, const std::string& content) {
    std::ofstream out(file);
    if (!out)
        throw InputError("cannot write " + file.string());
    out << content;
}

alloc::ClusterSpec parse_cluster_arg(const std::string& text, double price) {
    const auto x = text.find('x');
    if (x == std::string::npos)
        throw InputError("cluster must look like <nodes>x<vcpus>, e.g. 12x8");
    alloc::ClusterSpec cluster;
    try {
        cluster.nodes = std::stoi(text.substr(0, x));
        cluster.vcpus_per_node = std::stoi(text.substr(x + 1));
    } catch (const std::logic_error&) {
        throw InputError("cannot parse cluster '" + text + "'");
    }
    cluster.price_per_hour = price;
    cluster.validate();
    return cluster;
}

// "sparse=0-7,medium=8-11,dense=12-15" -> label -> rank list
std::map<std::string, std::vector<int>> parse_groups_arg(const std::string& text) {
    std::map<std::string, std::vector<int>> groups;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        const std::string item = text.substr(pos, comma - pos);
        const auto eq = item.find('=');
        const auto dash = item.find('-', eq == std::string::npos ? 0 : eq);
        if (eq == std::string::npos || dash == std::string::npos)
            throw InputError("group '" + item + "' must look like label=lo-hi");
        try {
            const int lo = std::stoi(item.substr(eq + 1, dash - eq - 1));
            const int hi = std::stoi(item.substr(dash + 1));
            if (hi < lo)
                throw InputError("group '" + item + "' has an empty range");
            auto& ranks = groups[item.substr(0, eq)];
            for (int r = lo; r <= hi; ++r) ranks.push_back(r);
        } catch (const std::logic_error&) {
            throw InputError("cannot parse group '" + item + "'");
        }
        pos = comma + 1;
    }
    return groups;
}

std::vector<model::MeasuredPoint> read_points(const fs::path& file, int default_ranks) {
    std::ifstream in(file);
    if (!in)
        throw InputError("cannot open points file " + file.string());
    std::vector<model::MeasuredPoint> points;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (line_no == 1 && line.find("makespan") != std::string::npos) continue; // header
        std::istringstream row(line);
        std::string field;
        model::MeasuredPoint p;
        p.ranks_per_sim = default_ranks;
        try {
            if (!std::getline(row, field, ',')) throw InputError("empty row");
            p.n_sims = std::stoi(field);
            if (!std::getline(row, field, ',')) throw InputError("missing makespan");
            p.makespan_s = std::stod(field);
            if (std::getline(row, field, ',')) p.ranks_per_sim = std::stoi(field);
        } catch (const std::logic_error&) {
            throw InputError(file.string() + ":" + std::to_string(line_no) +
                             ": malformed measured point");
        }
        points.push_back(p);
    }
    if (points.empty())
        throw InputError("no measured points in " + file.string());
    return points;
}

std::map<int, double> read_duty_csv(const fs::path& file) {
    std::ifstream in(file);
    if (!in)
        throw InputError("cannot open duty file " + file.string());
    std::map<int, double> duties;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (line.find("duty") != std::string::npos && line.find("rank") != std::string::npos)
            continue; // header
        std::istringstream row(line);
        std::string field;
        try {
            if (!std::getline(row, field, ',')) continue;
            const int rank = std::stoi(field);
            std::string duty_field;
            while (std::getline(row, field, ',')) duty_field = field; // last column
            duties[rank] = std::stod(duty_field);
        } catch (const std::logic_error&) {
            throw InputError(file.string() + ":" + std::to_string(line_no) +
                             ": malformed duty row");
        }
    }
    if (duties.empty())
        throw InputError("no duties in " + file.string());
    return duties;
}

// ---------------------------------------------------------------- gen-trace

struct GenTraceArgs {
    std::string out;
    std::string duties;
    int iterations = 200;
    double wall_s = 6.245;
    double jitter = 0.0;
    std::uint64_t seed = 42;
};

void cmd_gen_trace(const GenTraceArgs& args) {
    trace::SyntheticTraceSpec spec;
    auto duties = scenario::parse_group_values(args.duties);
    for (std::size_t r = 0; r < duties.size(); ++r)
        spec.duty_per_rank[static_cast<int>(r)] = duties[r];
    spec.iterations = args.iterations;
    spec.iteration_wall_s = args.wall_s;
    spec.jitter_fraction = args.jitter;
    auto files = trace::write_synthetic_trace(spec, args.seed, args.out);
    std::cout << "wrote " << files.size() << " trace files to " << args.out << "\n";
}

// ------------------------------------------------------------------ analyze

struct AnalyzeArgs {
    std::string traces_dir;
    double skip = 0.10;
    std::string groups;
    int equal_millicpu = 1000;
    std::string weights;
    long long budget = 5900;
    std::string out;
};

void cmd_analyze(const AnalyzeArgs& args) {
    std::vector<trace::RankTrace> traces;
    std::size_t trailing = 0;
    std::vector<fs::path> files;
    if (!fs::is_directory(args.traces_dir))
        throw InputError("not a directory: " + args.traces_dir);
    for (const auto& entry : fs::directory_iterator(args.traces_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw InputError("no .csv trace files in " + args.traces_dir);
    for (const auto& file : files) {
        auto t = trace::parse_trace(file);
        trailing += trace::segment_iterations(t).trailing_events_discarded;
        traces.push_back(std::move(t));
    }
    if (trailing > 0)
        std::cerr << "warning: discarded " << trailing
                  << " trailing events after the last Barrier\n";

    std::map<std::string, std::vector<int>> groups;
    if (!args.groups.empty()) groups = parse_groups_arg(args.groups);
    auto report = trace::analyze_traces(traces, args.skip, groups);

    std::ostringstream text;
    text << trace::duty_report_text(report);

    std::map<int, int> equal_requests;
    for (const auto& [rank, duty] : report.per_rank) equal_requests[rank] = args.equal_millicpu;
    auto equal_cap = trace::reclaimable(report.per_rank, equal_requests);
    text << "\nreclaimable (equal " << args.equal_millicpu << "m/rank): total "
         << std::fixed << std::setprecision(0) << equal_cap.total_millicpu << " m, fraction "
         << std::setprecision(3) << equal_cap.fraction_of_budget << "\n";

    if (!args.weights.empty()) {
        decomp::WeightVector wv{scenario::parse_group_weights(args.weights)};
        auto plan = alloc::proportional_requests(wv, args.budget);
        if (plan.per_rank_millicpu.size() != report.per_rank.size())
            throw InputError("weights do not match the traced rank count");
        std::map<int, int> prop_requests;
        int i = 0;
        for (const auto& [rank, duty] : report.per_rank)
            prop_requests[rank] = plan.per_rank_millicpu[static_cast<std::size_t>(i++)];
        auto prop_cap = trace::reclaimable(report.per_rank, prop_requests);
        text << "reclaimable (proportional, budget " << args.budget << "m): total "
             << std::setprecision(0) << prop_cap.total_millicpu << " m, fraction "
             << std::setprecision(3) << prop_cap.fraction_of_budget << "\n";
    }

    std::cout << text.str();
    if (!args.out.empty()) {
        ensure_dir(args.out);
        write_file(fs::path(args.out) / "report.txt", text.str());
        std::ostringstream csv;
        trace::write_duty_report_csv(csv, report);
        write_file(fs::path(args.out) / "duty_ranks.csv", csv.str());
    }
}

// ---------------------------------------------------------------- decompose

struct DecomposeArgs {
    int cells = 0;
    std::uint64_t seed = 42;
    std::string weights;
    int equal_ranks = 0;
    std::string out;
};

void cmd_decompose(const DecomposeArgs& args) {
    if (args.weights.empty() == (args.equal_ranks == 0))
        throw InputError("choose exactly one of --weights or --equal");
    auto cloud = decomp::generate_cloud(args.cells, args.seed);
    decomp::Assignment assignment;
    if (!args.weights.empty()) {
        decomp::WeightVector wv{scenario::parse_group_weights(args.weights)};
        assignment = decomp::concentric_assign(cloud, wv);
    } else {
        assignment = decomp::equal_assign(cloud, args.equal_ranks);
    }
    auto counts = decomp::rank_cell_counts(assignment);
    auto fractions = decomp::counts_to_weights(assignment);
    std::cout << "rank  cells  fraction\n";
    for (std::size_t r = 0; r < counts.size(); ++r)
        std::cout << std::left << std::setw(6) << r << std::setw(7) << counts[r] << std::right
                  << std::fixed << std::setprecision(4) << fractions[r] << "\n";
    if (!args.out.empty()) {
        ensure_dir(args.out);
        std::ostringstream csv;
        decomp::write_assignment_csv(csv, cloud, assignment);
        write_file(fs::path(args.out) / "assignment.csv", csv.str());
    }
}

// --------------------------------------------------------------------- plan

struct PlanArgs {
    std::string weights;
    std::string duties;
    std::string duties_file;
    long long budget = 5900;
    std::string cluster = "12x8";
    double price = 0.0;
    long long quota = 0;
    int sims = 1;
    std::string emit_dir;
    std::string image = "openfoam-k8s:v10";
    std::string sim_label = "A";
};

void cmd_plan(const PlanArgs& args) {
    const int sources = (!args.weights.empty()) + (!args.duties.empty()) +
                        (!args.duties_file.empty());
    if (sources != 1)
        throw InputError("choose exactly one of --weights, --duties, --duties-file");

    alloc::AllocationPlan plan;
    if (!args.weights.empty()) {
        decomp::WeightVector wv{scenario::parse_group_weights(args.weights)};
        plan = alloc::proportional_requests(wv, args.budget);
    } else {
        std::map<int, double> duties;
        if (!args.duties.empty()) {
            auto values = scenario::parse_group_values(args.duties);
            for (std::size_t r = 0; r < values.size(); ++r)
                duties[static_cast<int>(r)] = values[r];
        } else {
            duties = read_duty_csv(args.duties_file);
        }
        plan = alloc::duty_proportional_requests(duties, args.budget);
    }

    auto cluster = parse_cluster_arg(args.cluster, args.price);
    std::optional<alloc::QuotaSpec> quota;
    if (args.quota > 0) quota = alloc::QuotaSpec{args.quota};
    std::vector<alloc::AllocationPlan> plans(static_cast<std::size_t>(args.sims), plan);
    auto report = alloc::aggregate_check(plans, cluster, quota);

    std::cout << "qos: " << alloc::AllocationPlan::kQosClass << "\n";
    std::cout << "rank  request_millicpu\n";
    for (std::size_t r = 0; r < plan.per_rank_millicpu.size(); ++r)
        std::cout << std::left << std::setw(6) << r << plan.per_rank_millicpu[r] << "\n";
    std::cout << "plan total: " << plan.total_millicpu() << " m (budget " << args.budget
              << " m)\n";
    std::cout << args.sims << " simulation(s): " << report.total_millicpu << " m = "
              << std::fixed << std::setprecision(1) << report.fraction_of_cluster * 100.0
              << "% of cluster, fits: " << (report.fits ? "yes" : "no") << "\n";
    if (!report.fits)
        throw ConstraintError("aggregate requests do not fit the cluster/quota");

    if (!args.emit_dir.empty()) {
        const fs::path dir = fs::path(args.emit_dir) / args.sim_label;
        ensure_dir(dir);
        for (std::size_t r = 0; r < plan.per_rank_millicpu.size(); ++r) {
            k8s::PodManifestSpec spec{args.sim_label, static_cast<int>(r), args.image,
                                      plan.per_rank_millicpu[r]};
            write_file(dir / (k8s::pod_name(args.sim_label, static_cast<int>(r)) + ".manifest"),
                       k8s::emit_pod_manifest(spec));
        }
        write_file(dir / "mpirun.txt",
                   k8s::emit_mpirun_command(args.sim_label,
                                            static_cast<int>(plan.per_rank_millicpu.size()),
                                            "/config/hostfile") +
                       "\n");
        std::cout << "manifests written to " << dir << "\n";
    }

    std::ostringstream csv;
    csv << "rank,millicpu\n";
    for (std::size_t r = 0; r < plan.per_rank_millicpu.size(); ++r)
        csv << r << ',' << plan.per_rank_millicpu[r] << "\n";
    if (!args.emit_dir.empty())
        write_file(fs::path(args.emit_dir) / "plan.csv", csv.str());
}

// ------------------------------------------------------------------ predict

struct PredictArgs {
    std::string points_file;
    double t1 = 0.0;
    int ranks = 16;
    std::string cluster = "12x8";
    double price = 4.12;
    std::string out;
};

void cmd_predict(const PredictArgs& args) {
    auto cluster = parse_cluster_arg(args.cluster, args.price);
    auto points = read_points(args.points_file, args.ranks);
    std::sort(points.begin(), points.end(),
              [](const model::MeasuredPoint& a, const model::MeasuredPoint& b) {
                  return a.n_sims < b.n_sims;
              });

    double t1 = args.t1;
    if (t1 <= 0.0) {
        for (const auto& p : points)
            if (p.n_sims == 1) t1 = p.makespan_s;
        if (t1 <= 0.0)
            throw InputError("no N=1 point and no --t1 given");
    }

    const auto fit_all = model::fit_beta(points, t1, cluster);
    std::optional<model::BetaFit> fit_n2;
    for (const auto& p : points)
        if (p.n_sims == 2)
            fit_n2 = model::fit_beta(std::vector<model::MeasuredPoint>{p}, t1, cluster);

    const double rho1 = model::cluster_load(1, points.front().ranks_per_sim, cluster);
    model::ContentionModel all_model{t1, rho1, fit_all.beta};

    std::ostringstream text;
    text << std::fixed;
    text << "contention coefficient beta (all points): " << std::setprecision(3)
         << fit_all.beta << " +/- " << fit_all.stderr_beta << " (" << fit_all.points_used
         << " informative points)\n";
    if (fit_n2)
        text << "contention coefficient beta (N=2 only): " << std::setprecision(3)
             << fit_n2->beta << "\n";

    const int max_n = points.back().n_sims;
    std::ostringstream model_csv;
    model_csv << "N,measured_s,predicted_s,error_pct,extrapolated\n";
    text << "\nN   measured_s  predicted_s  error\n";
    for (const auto& p : points) {
        const double pred = model::predict_makespan(all_model, p.n_sims);
        const double err = (pred - p.makespan_s) / p.makespan_s * 100.0;
        text << std::left << std::setw(4) << p.n_sims << std::setw(12) << std::setprecision(1)
             << p.makespan_s << std::setw(13) << pred << std::right << std::showpos
             << std::setprecision(2) << err << "%" << std::noshowpos << "\n";
        model_csv << p.n_sims << ',' << p.makespan_s << ',' << pred << ',' << err << ",0\n";
    }
    {
        const int n = max_n + 1; // beyond the data: illustrative only
        const double pred = model::predict_makespan(all_model, n);
        text << std::left << std::setw(4) << n << std::setw(12) << "-" << std::setw(13)
             << std::setprecision(1) << pred << std::right << "(illustrative extrapolation)\n";
        model_csv << n << ",," << pred << ",,1\n";
    }

    if (fit_n2) {
        model::ContentionModel n2_model{t1, rho1, fit_n2->beta};
        text << "\nblind predictions from the N=2 fit:\nN   predicted_s  error\n";
        for (const auto& p : points) {
            if (p.n_sims < 3) continue;
            const double pred = model::predict_makespan(n2_model, p.n_sims);
            const double err = (pred - p.makespan_s) / p.makespan_s * 100.0;
            text << std::left << std::setw(4) << p.n_sims << std::setw(13)
                 << std::setprecision(1) << pred << std::right << std::showpos
                 << std::setprecision(2) << err << "%" << std::noshowpos << "\n";
        }
    }

    auto pareto = model::pareto_table(points, t1);
    std::ostringstream pareto_csv;
    pareto_csv << "N,makespan_s,throughput,efficiency,degradation_pct\n";
    text << "\nN   throughput  efficiency  degradation\n";
    for (const auto& row : pareto.rows) {
        text << std::left << std::setw(4) << row.n_sims << std::setw(12)
             << std::setprecision(2) << row.throughput << std::setw(12)
             << std::setprecision(1) << row.efficiency * 100.0 << std::right
             << row.degradation * 100.0 << "%\n";
        pareto_csv << row.n_sims << ',' << row.makespan_s << ',' << row.throughput << ','
                   << row.efficiency << ',' << row.degradation * 100.0 << "\n";
    }
    text << "pareto knee: " << (pareto.knee ? std::to_string(*pareto.knee) : "none") << "\n";

    auto costs = model::cost_table(points, t1, cluster);
    std::ostringstream cost_csv;
    cost_csv << "N,total_time_s,total_cost,cost_per_sim,saving_pct\n";
    text << "\nN   total_s  cost     $/sim   saving\n";
    for (const auto& row : costs) {
        text << std::left << std::setw(4) << row.n_sims << std::setw(9)
             << std::setprecision(0) << row.total_time_s << std::setw(9)
             << std::setprecision(2) << row.total_cost << std::setw(8) << row.cost_per_sim
             << std::right << std::setprecision(0) << row.saving_vs_single * 100.0 << "%\n";
        cost_csv << row.n_sims << ',' << row.total_time_s << ',' << row.total_cost << ','
                 << row.cost_per_sim << ',' << row.saving_vs_single * 100.0 << "\n";
    }

    std::cout << text.str();
    if (!args.out.empty()) {
        ensure_dir(args.out);
        write_file(fs::path(args.out) / "summary.txt", text.str());
        write_file(fs::path(args.out) / "model.csv", model_csv.str());
        write_file(fs::path(args.out) / "pareto.csv", pareto_csv.str());
        write_file(fs::path(args.out) / "cost.csv", cost_csv.str());
    }
}

// ----------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string scenario_file;
    std::string out;
    double bucket_s = 5.0;
};

void cmd_simulate(const SimulateArgs& args) {
    auto sc = scenario::load_sim_scenario(args.scenario_file);
    auto placement = sim::place(sc.jobs, sc.cluster);
    sim::Engine engine(sc.cluster, sc.seed, args.bucket_s);
    for (std::size_t i = 0; i < sc.jobs.size(); ++i)
        engine.add_job(sc.jobs[i], placement.node_of[i]);
    engine.run_to_completion();
    auto result = engine.result();

    std::ostringstream text;
    text << std::fixed;
    text << "job   start_s    completion_s  duration_s\n";
    for (std::size_t i = 0; i < result.job_ids.size(); ++i)
        text << std::left << std::setw(6) << result.job_ids[i] << std::setw(11)
             << std::setprecision(3) << result.completion_s[i] - result.duration_s[i]
             << std::setw(14) << result.completion_s[i] << result.duration_s[i] << "\n";
    text << "makespan: " << std::setprecision(3) << result.makespan_s << " s\n";
    text << "fairness ratio (same-shape jobs): " << std::setprecision(4)
         << result.fairness_ratio << "\n";
    text << "events: " << result.event_count << "\n";
    text << "node  mean_cores\n";
    for (std::size_t n = 0; n < result.node_utilization.size(); ++n)
        text << std::left << std::setw(6) << n << std::setprecision(3)
             << result.node_utilization[n] << "\n";
    std::cout << text.str();

    if (!args.out.empty()) {
        ensure_dir(args.out);
        write_file(fs::path(args.out) / "result.txt", text.str());
        std::ostringstream comp;
        comp << "job,start_s,completion_s,duration_s\n";
        for (std::size_t i = 0; i < result.job_ids.size(); ++i)
            comp << result.job_ids[i] << ',' << result.completion_s[i] - result.duration_s[i]
                 << ',' << result.completion_s[i] << ',' << result.duration_s[i] << "\n";
        write_file(fs::path(args.out) / "completions.csv", comp.str());

        std::ostringstream util;
        util << "bucket_start_s,node,mean_cores\n";
        const auto& buckets = engine.utilization_buckets();
        for (std::size_t n = 0; n < buckets.size(); ++n)
            for (std::size_t b = 0; b < buckets[n].size(); ++b) {
                const double start = static_cast<double>(b) * engine.utilization_bucket_s();
                const double width = std::min(engine.utilization_bucket_s(),
                                              result.makespan_s - start);
                if (width <= 0.0) continue;
                util << start << ',' << n << ',' << buckets[n][b] / width << "\n";
            }
        write_file(fs::path(args.out) / "utilization.csv", util.str());
    }
}

// ------------------------------------------------------------------ control

struct ControlArgs {
    std::string scenario_file;
    std::string out;
};

void write_action_csv(const fs::path& file, const ctl::ActionLog& log) {
    std::ostringstream csv;
    csv << "t_s,kind,sim,pod,old_millicpu,new_millicpu,factor,window,total_millicpu_after\n";
    for (const auto& ev : log.events) {
        const char* kind = "";
        switch (ev.kind) {
        case ctl::ActionKind::ProfilingPass: kind = "profiling_pass"; break;
        case ctl::ActionKind::Resize: kind = "resize"; break;
        case ctl::ActionKind::Deploy: kind = "deploy"; break;
        case ctl::ActionKind::FairnessAdjustment: kind = "fairness_adjustment"; break;
        }
        csv << ev.t_s << ',' << kind << ',' << ev.sim << ',' << ev.pod << ','
            << ev.old_millicpu << ',' << ev.new_millicpu << ',' << ev.factor << ','
            << ev.window << ',' << ev.total_millicpu_after << "\n";
    }
    write_file(file, csv.str());
}

void cmd_control(const ControlArgs& args) {
    auto sc = scenario::load_controller_scenario(args.scenario_file);
    ctl::SimulatedActuator actuator(sc.cluster, sc.tmpl, sc.seed);
    ctl::PipelineResult result;
    try {
        result = ctl::run_pipeline(actuator, sc.config);
    } catch (const ctl::PipelineAbort& abort) {
        std::cerr << abort.what() << "\n";
        if (!args.out.empty()) {
            ensure_dir(args.out);
            write_file(fs::path(args.out) / "actions.log", abort.partial_log.to_text());
        }
        throw;
    }

    std::ostringstream text;
    text << std::fixed << std::setprecision(3);
    text << "simulations: " << result.metrics.n_sims << "\n";
    text << "profiling passes: " << result.log.count(ctl::ActionKind::ProfilingPass) << "\n";
    text << "resizes: " << result.log.count(ctl::ActionKind::Resize) << "\n";
    text << "deployments: " << result.log.count(ctl::ActionKind::Deploy) << "\n";
    text << "fairness adjustments: "
         << result.log.count(ctl::ActionKind::FairnessAdjustment) << "\n";
    text << "pod restarts: " << result.metrics.restarts << "\n";
    for (const auto& [sim, duration] : result.metrics.duration_s)
        text << "sim " << sim << " duration: " << duration << " s\n";
    text << "pipeline span: " << result.metrics.makespan_s << " s\n";
    text << "throughput vs single run: " << std::setprecision(2) << result.metrics.throughput
         << "x\n";
    std::cout << text.str();

    if (!args.out.empty()) {
        ensure_dir(args.out);
        write_file(fs::path(args.out) / "metrics.txt", text.str());
        write_file(fs::path(args.out) / "actions.log", result.log.to_text());
        write_action_csv(fs::path(args.out) / "actions.csv", result.log);
    }
}

// --------------------------------------------------------------------- emit

void print_or_write(const std::string& content, const std::string& out) {
    if (out.empty())
        std::cout << content;
    else
        write_file(out, content);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"planner, simulator, and controller for co-located MPI jobs on Kubernetes"};
    app.require_subcommand(1);

    GenTraceArgs gen_args;
    auto* gen = app.add_subcommand("gen-trace", "generate synthetic per-rank trace files");
    gen->add_option("--out", gen_args.out, "output directory")->required();
    gen->add_option("--duties", gen_args.duties,
                    "per-rank duty cycles, e.g. 8x0.05,4x0.115,4x0.194")->required();
    gen->add_option("--iterations", gen_args.iterations, "iterations per rank");
    gen->add_option("--wall", gen_args.wall_s, "iteration wall time (s)");
    gen->add_option("--jitter", gen_args.jitter, "per-iteration jitter fraction, <= 0.01");
    gen->add_option("--seed", gen_args.seed, "random seed");
    gen->callback([&] { cmd_gen_trace(gen_args); });

    AnalyzeArgs analyze_args;
    auto* analyze = app.add_subcommand("analyze", "duty cycles and reclaimable capacity");
    analyze->add_option("--traces", analyze_args.traces_dir, "directory of rank traces")
        ->required();
    analyze->add_option("--skip", analyze_args.skip, "startup fraction to skip");
    analyze->add_option("--groups", analyze_args.groups,
                        "rank groups, e.g. sparse=0-7,medium=8-11,dense=12-15");
    analyze->add_option("--equal-millicpu", analyze_args.equal_millicpu,
                        "per-rank request for the equal-allocation reclaimable figure");
    analyze->add_option("--weights", analyze_args.weights,
                        "weights for the proportional reclaimable figure");
    analyze->add_option("--budget", analyze_args.budget, "budget for --weights (millicpu)");
    analyze->add_option("--out", analyze_args.out, "report output directory");
    analyze->callback([&] { cmd_analyze(analyze_args); });

    DecomposeArgs decomp_args;
    auto* dec = app.add_subcommand("decompose", "concentric or equal cell partitioning");
    dec->add_option("--cells", decomp_args.cells, "cell count")->required();
    dec->add_option("--seed", decomp_args.seed, "cloud seed");
    dec->add_option("--weights", decomp_args.weights, "rank weights, e.g. 8x1,4x5,4x15");
    dec->add_option("--equal", decomp_args.equal_ranks, "equal split over this many ranks");
    dec->add_option("--out", decomp_args.out, "output directory for assignment.csv");
    dec->callback([&] { cmd_decompose(decomp_args); });

    PlanArgs plan_args;
    auto* plan = app.add_subcommand("plan", "per-rank CPU requests from weights or duties");
    plan->add_option("--weights", plan_args.weights, "rank weights, e.g. 8x1,4x5,4x15");
    plan->add_option("--duties", plan_args.duties, "per-rank duties, e.g. 8x0.05,...");
    plan->add_option("--duties-file", plan_args.duties_file, "duty CSV (rank,...,duty)");
    plan->add_option("--budget", plan_args.budget, "per-simulation budget (millicpu)");
    plan->add_option("--cluster", plan_args.cluster, "cluster geometry <nodes>x<vcpus>");
    plan->add_option("--price", plan_args.price, "cluster price per hour");
    plan->add_option("--quota", plan_args.quota, "namespace quota (millicpu)");
    plan->add_option("--sims", plan_args.sims, "number of identical plans to aggregate");
    plan->add_option("--emit", plan_args.emit_dir, "write pod manifests here");
    plan->add_option("--image", plan_args.image, "container image for manifests");
    plan->add_option("--sim-label", plan_args.sim_label, "simulation label for manifests");
    plan->callback([&] { cmd_plan(plan_args); });

    PredictArgs predict_args;
    auto* predict = app.add_subcommand("predict", "fit the contention model and report "
                                                  "throughput, Pareto, and cost tables");
    predict->add_option("--points", predict_args.points_file, "CSV of N,makespan_s[,ranks]")
        ->required();
    predict->add_option("--t1", predict_args.t1, "baseline makespan (defaults to the N=1 row)");
    predict->add_option("--ranks", predict_args.ranks, "ranks per simulation");
    predict->add_option("--cluster", predict_args.cluster, "cluster geometry <nodes>x<vcpus>");
    predict->add_option("--price", predict_args.price, "cluster price per hour");
    predict->add_option("--out", predict_args.out, "report output directory");
    predict->callback([&] { cmd_predict(predict_args); });

    SimulateArgs sim_args;
    auto* simulate = app.add_subcommand("simulate", "run a co-location scenario");
    simulate->add_option("--scenario", sim_args.scenario_file, "scenario JSON")->required();
    simulate->add_option("--out", sim_args.out, "report output directory");
    simulate->add_option("--bucket", sim_args.bucket_s, "utilization bucket width (s)");
    simulate->callback([&] { cmd_simulate(sim_args); });

    ControlArgs control_args;
    auto* control = app.add_subcommand("control", "run the dynamic pipeline against the "
                                                  "simulated cluster");
    control->add_option("--scenario", control_args.scenario_file, "controller scenario JSON")
        ->required();
    control->add_option("--out", control_args.out, "log/metrics output directory");
    control->callback([&] { cmd_control(control_args); });

    auto* emit = app.add_subcommand("emit", "emit Kubernetes artifacts");
    emit->require_subcommand(1);

    struct {
        std::string sim = "A";
        int rank = 0;
        int cpu = 0;
        std::string image = "openfoam-k8s:v10";
        std::string out;
    } pod_args;
    auto* pod = emit->add_subcommand("pod", "worker pod manifest");
    pod->add_option("--sim", pod_args.sim, "simulation label");
    pod->add_option("--rank", pod_args.rank, "rank index");
    pod->add_option("--cpu", pod_args.cpu, "CPU request (millicpu)")->required();
    pod->add_option("--image", pod_args.image, "container image");
    pod->add_option("--out", pod_args.out, "output file (stdout if omitted)");
    pod->callback([&] {
        print_or_write(k8s::emit_pod_manifest(
                           {pod_args.sim, pod_args.rank, pod_args.image, pod_args.cpu}),
                       pod_args.out);
    });

    struct {
        std::string sim = "A";
        std::vector<std::string> ips;
        std::string out;
    } host_args;
    auto* hostfile = emit->add_subcommand("hostfile", "hostfile ConfigMap");
    hostfile->add_option("--sim", host_args.sim, "simulation label");
    hostfile->add_option("--ip", host_args.ips, "pod IP (repeatable)")->required();
    hostfile->add_option("--out", host_args.out, "output file (stdout if omitted)");
    hostfile->callback([&] {
        print_or_write(k8s::emit_hostfile_configmap(host_args.sim, host_args.ips),
                       host_args.out);
    });

    struct {
        std::string pod;
        int cpu = 0;
        std::string out;
    } patch_args;
    auto* patch = emit->add_subcommand("patch", "in-place CPU resize patch body");
    patch->add_option("--pod", patch_args.pod, "pod name")->required();
    patch->add_option("--cpu", patch_args.cpu, "new CPU request (millicpu)")->required();
    patch->add_option("--out", patch_args.out, "output file (stdout if omitted)");
    patch->callback([&] {
        print_or_write(k8s::emit_resize_patch(patch_args.pod, patch_args.cpu) + "\n",
                       patch_args.out);
    });

    struct {
        std::string sim = "A";
        int ranks = 16;
        std::string hostfile = "/config/hostfile";
        std::string out;
    } mpirun_args;
    auto* mpirun = emit->add_subcommand("mpirun", "mpirun launch command");
    mpirun->add_option("--sim", mpirun_args.sim, "simulation label");
    mpirun->add_option("--ranks", mpirun_args.ranks, "rank count");
    mpirun->add_option("--hostfile", mpirun_args.hostfile, "hostfile path");
    mpirun->add_option("--out", mpirun_args.out, "output file (stdout if omitted)");
    mpirun->callback([&] {
        print_or_write(k8s::emit_mpirun_command(mpirun_args.sim, mpirun_args.ranks,
                                                mpirun_args.hostfile) +
                           "\n",
                       mpirun_args.out);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ConstraintError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
