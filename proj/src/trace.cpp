#include "mpimux/trace.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace mpimux::trace {

namespace {

constexpr std::array<std::string_view, 6> kCallNames = {
    "Barrier", "Allreduce", "Alltoall", "Sendrecv", "Wait", "Waitall"};

constexpr std::string_view kHeader = "rank,call,t_enter_us,t_exit_us";

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

} // namespace

std::string_view to_string(MpiCall call) {
    return kCallNames[static_cast<std::size_t>(call)];
}

std::optional<MpiCall> parse_call(std::string_view name) {
    for (std::size_t i = 0; i < kCallNames.size(); ++i)
        if (name == kCallNames[i]) return static_cast<MpiCall>(i);
    return std::nullopt;
}

namespace {

std::vector<std::string_view> csv_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        std::size_t comma = line.find(',', pos);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(pos)));
            break;
        }
        out.push_back(trim(line.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return out;
}

std::int64_t parse_int(std::string_view field, const std::string& name, int line_no,
                       const char* what) {
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw InputError(name + ":" + std::to_string(line_no) + ": unparsable " + what +
                         " '" + std::string(field) + "'");
    return value;
}

} // namespace

RankTrace parse_trace(std::istream& in, const std::string& name) {
    std::string line;
    if (!std::getline(in, line))
        throw InputError(name + ": empty trace file");
    if (trim(line) != kHeader)
        throw InputError(name + ":1: expected header '" + std::string(kHeader) + "'");

    RankTrace trace;
    bool have_rank = false;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = csv_fields(line);
        if (fields.size() != 4)
            throw InputError(name + ":" + std::to_string(line_no) + ": expected 4 columns, got " +
                             std::to_string(fields.size()));

        TraceEvent ev;
        ev.rank = static_cast<int>(parse_int(fields[0], name, line_no, "rank"));
        auto call = parse_call(fields[1]);
        if (!call)
            throw InputError(name + ":" + std::to_string(line_no) + ": unknown call '" +
                             std::string(fields[1]) + "'");
        ev.call = *call;
        ev.t_enter_us = parse_int(fields[2], name, line_no, "t_enter_us");
        ev.t_exit_us = parse_int(fields[3], name, line_no, "t_exit_us");

        if (ev.rank < 0)
            throw InputError(name + ":" + std::to_string(line_no) + ": negative rank");
        if (ev.t_exit_us < ev.t_enter_us)
            throw InputError(name + ":" + std::to_string(line_no) + ": event exits before it enters");
        if (!have_rank) {
            trace.rank = ev.rank;
            have_rank = true;
        } else if (ev.rank != trace.rank) {
            throw InputError(name + ":" + std::to_string(line_no) + ": rank " +
                             std::to_string(ev.rank) + " differs from file rank " +
                             std::to_string(trace.rank));
        }
        if (!trace.events.empty() && ev.t_enter_us < trace.events.back().t_exit_us)
            throw InputError(name + ":" + std::to_string(line_no) +
                             ": event overlaps or precedes the previous event");
        trace.events.push_back(ev);
    }
    if (!have_rank)
        throw InputError(name + ": no event rows");
    return trace;
}

RankTrace parse_trace(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in)
        throw InputError("cannot open trace file " + file.string());
    return parse_trace(in, file.string());
}

void write_trace_csv(std::ostream& out, const RankTrace& trace) {
    out << kHeader << "\n";
    for (const auto& ev : trace.events)
        out << ev.rank << ',' << to_string(ev.call) << ',' << ev.t_enter_us << ','
            << ev.t_exit_us << "\n";
}

SegmentResult segment_iterations(const RankTrace& trace) {
    SegmentResult result;
    std::int64_t iter_start_us = 0; // profiling origin
    double mpi_us = 0.0;
    std::size_t events_in_iter = 0;
    int k = 0;

    for (const auto& ev : trace.events) {
        mpi_us += static_cast<double>(ev.t_exit_us - ev.t_enter_us);
        ++events_in_iter;
        if (ev.call == MpiCall::Barrier) {
            const double span_us = static_cast<double>(ev.t_exit_us - iter_start_us);
            if (span_us <= 0.0)
                throw InputError("zero-length iteration " + std::to_string(k));
            IterationSlice slice;
            slice.k = k++;
            slice.t_mpi_s = mpi_us * 1e-6;
            slice.t_compute_s = (span_us - mpi_us) * 1e-6;
            result.slices.push_back(slice);
            iter_start_us = ev.t_exit_us;
            mpi_us = 0.0;
            events_in_iter = 0;
        }
    }
    if (result.slices.empty())
        throw InputError("no iteration boundaries: trace has no Barrier events");
    result.trailing_events_discarded = events_in_iter;
    return result;
}

double duty_cycle(const IterationSlice& slice) {
    const double total = slice.t_compute_s + slice.t_mpi_s;
    if (total <= 0.0)
        throw InputError("zero-length iteration slice");
    return slice.t_compute_s / total;
}

double steady_state_duty(std::span<const IterationSlice> slices, double skip_fraction) {
    if (skip_fraction < 0.0 || skip_fraction >= 1.0)
        throw InputError("skip_fraction must be in [0, 1)");
    const auto k = static_cast<std::size_t>(slices.size());
    const auto k0 = static_cast<std::size_t>(
        std::floor(skip_fraction * static_cast<double>(k) + 1e-9));
    if (k0 >= k)
        throw InputError("no iterations retained after skipping startup");

    double compute = 0.0, total = 0.0;
    for (std::size_t i = k0; i < k; ++i) {
        compute += slices[i].t_compute_s;
        total += slices[i].t_compute_s + slices[i].t_mpi_s;
    }
    if (total <= 0.0)
        throw InputError("retained iterations have zero duration");
    return compute / total;
}

ReclaimableCapacity reclaimable(const std::map<int, double>& duties,
                                const std::map<int, int>& requests_millicpu) {
    if (duties.size() != requests_millicpu.size())
        throw InputError("duty and request maps cover different rank sets");
    ReclaimableCapacity cap;
    double budget = 0.0;
    for (const auto& [rank, duty] : duties) {
        auto it = requests_millicpu.find(rank);
        if (it == requests_millicpu.end())
            throw InputError("no request for rank " + std::to_string(rank));
        if (duty < 0.0 || duty > 1.0)
            throw InputError("duty out of [0,1] for rank " + std::to_string(rank));
        const double c = static_cast<double>(it->second) * (1.0 - duty);
        cap.per_rank_millicpu[rank] = c;
        cap.total_millicpu += c;
        budget += static_cast<double>(it->second);
    }
    if (budget <= 0.0)
        throw InputError("total requests are zero");
    cap.fraction_of_budget = cap.total_millicpu / budget;
    return cap;
}

DutyCycleReport analyze_traces(const std::vector<RankTrace>& traces, double skip_fraction,
                               const std::map<std::string, std::vector<int>>& groups) {
    if (traces.empty())
        throw InputError("no traces to analyze");
    DutyCycleReport report;
    report.skip_fraction = skip_fraction;
    for (const auto& trace : traces) {
        if (report.per_rank.count(trace.rank))
            throw InputError("duplicate trace for rank " + std::to_string(trace.rank));
        auto seg = segment_iterations(trace);
        auto& series = report.per_iteration[trace.rank];
        series.reserve(seg.slices.size());
        for (const auto& slice : seg.slices) series.push_back(duty_cycle(slice));
        report.per_rank[trace.rank] = steady_state_duty(seg.slices, skip_fraction);
    }
    for (const auto& [label, ranks] : groups) {
        if (ranks.empty())
            throw InputError("group '" + label + "' has no ranks");
        double sum = 0.0;
        for (int r : ranks) {
            auto it = report.per_rank.find(r);
            if (it == report.per_rank.end())
                throw InputError("group '" + label + "' names missing rank " +
                                 std::to_string(r));
            sum += it->second;
        }
        report.groups[label] = sum / static_cast<double>(ranks.size());
    }
    return report;
}

std::string duty_report_text(const DutyCycleReport& report) {
    std::ostringstream out;
    out << "# duty-cycle report\n";
    out << "skip_fraction " << std::fixed << std::setprecision(3) << report.skip_fraction
        << "\n";
    out << "ranks " << report.per_rank.size() << "\n\n";
    out << "rank  iterations  duty\n";
    for (const auto& [rank, duty] : report.per_rank) {
        const auto it = report.per_iteration.find(rank);
        const std::size_t iters = it == report.per_iteration.end() ? 0 : it->second.size();
        out << std::left << std::setw(6) << rank << std::setw(12) << iters << std::right
            << std::fixed << std::setprecision(4) << duty << "\n";
    }
    if (!report.groups.empty()) {
        out << "\ngroup  mean_duty\n";
        for (const auto& [label, duty] : report.groups)
            out << std::left << std::setw(7) << label << std::right << std::fixed
                << std::setprecision(4) << duty << "\n";
    }
    return out.str();
}

void write_duty_report_csv(std::ostream& out, const DutyCycleReport& report) {
    out << "rank,iterations,duty\n";
    for (const auto& [rank, duty] : report.per_rank) {
        const auto it = report.per_iteration.find(rank);
        const std::size_t iters = it == report.per_iteration.end() ? 0 : it->second.size();
        out << rank << ',' << iters << ',' << std::setprecision(10) << duty << "\n";
    }
}

std::vector<RankTrace> gen_synthetic_trace(const SyntheticTraceSpec& spec,
                                           std::uint64_t seed) {
    if (spec.duty_per_rank.empty())
        throw InputError("no ranks in synthetic trace spec");
    if (spec.iterations < 2)
        throw InputError("synthetic trace needs at least 2 iterations");
    if (spec.iteration_wall_s <= 0.0)
        throw InputError("iteration wall time must be positive");
    if (spec.jitter_fraction < 0.0 || spec.jitter_fraction > 0.01)
        throw InputError("jitter_fraction must be in [0, 0.01]");
    for (const auto& [rank, duty] : spec.duty_per_rank)
        if (duty <= 0.0 || duty >= 1.0)
            throw InputError("duty for rank " + std::to_string(rank) +
                             " must be in (0, 1)");

    const auto wall_us = static_cast<std::int64_t>(std::llround(spec.iteration_wall_s * 1e6));
    std::vector<RankTrace> traces;
    traces.reserve(spec.duty_per_rank.size());

    for (const auto& [rank, duty] : spec.duty_per_rank) {
        std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(rank) + 1));
        std::uniform_real_distribution<double> jitter(-spec.jitter_fraction,
                                                      spec.jitter_fraction);
        RankTrace trace;
        trace.rank = rank;
        trace.events.reserve(static_cast<std::size_t>(spec.iterations) * 2);
        for (int k = 0; k < spec.iterations; ++k) {
            const std::int64_t start = wall_us * k;
            double compute_s = duty * spec.iteration_wall_s;
            if (spec.jitter_fraction > 0.0)
                compute_s += jitter(rng) * spec.iteration_wall_s;
            auto compute_us = static_cast<std::int64_t>(std::llround(compute_s * 1e6));
            compute_us = std::clamp<std::int64_t>(compute_us, 0, wall_us - 2);
            const std::int64_t mpi_us = wall_us - compute_us;
            // Allreduce takes the bulk of the wait, the closing Barrier the rest.
            const auto allreduce_us = static_cast<std::int64_t>(std::llround(
                static_cast<double>(mpi_us) * 0.75));
            TraceEvent allreduce{rank, MpiCall::Allreduce, start + compute_us,
                                 start + compute_us + allreduce_us};
            TraceEvent barrier{rank, MpiCall::Barrier, allreduce.t_exit_us, start + wall_us};
            trace.events.push_back(allreduce);
            trace.events.push_back(barrier);
        }
        traces.push_back(std::move(trace));
    }
    return traces;
}

std::vector<std::filesystem::path> write_synthetic_trace(const SyntheticTraceSpec& spec,
                                                         std::uint64_t seed,
                                                         const std::filesystem::path& dir) {
    auto traces = gen_synthetic_trace(spec, seed);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    std::vector<std::filesystem::path> files;
    for (const auto& trace : traces) {
        auto file = dir / ("rank_" + std::to_string(trace.rank) + ".csv");
        std::ofstream out(file);
        if (!out)
            throw InputError("cannot write trace file " + file.string());
        write_trace_csv(out, trace);
        files.push_back(std::move(file));
    }
    return files;
}

} // namespace mpimux::trace
