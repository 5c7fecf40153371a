#include "dmimo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "dmimo/protocol.hpp"
#include "dmimo/rng.hpp"
#include "json.hpp"

namespace dmimo {

std::string_view to_string(SweepKind kind)
{
    switch (kind) {
    case SweepKind::UeCount: return "ue_count";
    case SweepKind::PilotLength: return "pilot_length";
    case SweepKind::AssocThreshold: return "beta_th";
    case SweepKind::None: return "none";
    }
    return "?";
}

SweepKind parse_sweep(std::string_view name)
{
    for (SweepKind k : {SweepKind::UeCount, SweepKind::PilotLength, SweepKind::AssocThreshold,
                        SweepKind::None})
        if (name == to_string(k))
            return k;
    throw std::invalid_argument("unknown sweep '" + std::string(name) + "'");
}

std::string_view display_name(SchemeId id)
{
    switch (id) {
    case SchemeId::Eem: return "EEM-PA";
    case SchemeId::Dpb: return "DPB-PA";
    case SchemeId::Random: return "Random-PA";
    case SchemeId::Scalable: return "Scalable-PA";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// ExperimentSpec

std::vector<double> ExperimentSpec::points() const
{
    if (sweep == SweepKind::None)
        return {0.0};
    return sweep_values;
}

NetworkConfig ExperimentSpec::config_at(double value) const
{
    NetworkConfig c = base;
    auto as_count = [&](double v) {
        if (!(v >= 1.0) || v != std::floor(v))
            throw std::invalid_argument(fmt::format("sweep value {} is not a positive integer", v));
        return static_cast<std::size_t>(v);
    };
    switch (sweep) {
    case SweepKind::UeCount: c.num_ues = as_count(value); break;
    case SweepKind::PilotLength: c.pilot_length = as_count(value); break;
    case SweepKind::AssocThreshold: c.assoc_threshold = value; break;
    case SweepKind::None: break;
    }
    return c;
}

void ExperimentSpec::validate() const
{
    if (num_drops == 0)
        throw std::invalid_argument("ExperimentSpec: num_drops must be positive");
    if (schemes.empty())
        throw std::invalid_argument("ExperimentSpec: no schemes selected");
    if (sweep != SweepKind::None && sweep_values.empty())
        throw std::invalid_argument("ExperimentSpec: sweep has no values");
    scheme.validate();
    for (double v : points())
        config_at(v).validate();
}

// ---------------------------------------------------------------------------
// Running

std::uint64_t drop_seed(std::uint64_t master_seed, std::size_t sweep_index, std::size_t drop_index)
{
    return derive_seed(master_seed, {sweep_index, drop_index});
}

std::uint64_t scheme_seed_for_drop(std::uint64_t scheme_seed, std::uint64_t seed)
{
    return derive_seed(scheme_seed, {seed});
}

std::vector<ResultRow> run_drop(const ExperimentSpec& spec, double sweep_value, std::uint64_t seed)
{
    const NetworkConfig config = spec.config_at(sweep_value);
    const NetworkRealization real = generate_drop(config, seed);
    const AssociationMap assoc = build_association(real, config.assoc_threshold);
    const PowerProfile powers = normalize_powers(config);

    std::vector<ResultRow> rows;
    rows.reserve(spec.schemes.size());
    for (SchemeId id : spec.schemes) {
        SchemeConfig sc = spec.scheme;
        sc.id = id;
        sc.seed = scheme_seed_for_drop(spec.scheme.seed, seed);
        const AssignmentResult assigned = assign_all(sc, real, assoc, powers, config.pilot_length);
        const SeReport report =
            evaluate(real, assoc, assigned.assignment, powers, config, spec.lsfd);

        ResultRow row;
        row.scheme = id;
        row.sweep_value = sweep_value;
        row.drop_seed = seed;
        row.sum_se = report.sum_se;
        row.p5_se = report.percentile(0.05);
        row.p10_se = report.percentile(0.10);
        row.mean_se = report.mean_se();
        if (spec.sweep == SweepKind::None)
            row.per_user_se = report.se;
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

// Calls job(i) for i in [0, n) on up to `threads` workers. The first
// exception thrown by any job is rethrown on the caller.
template <typename Job>
void parallel_for(std::size_t n, unsigned threads, Job job)
{
    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            job(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> workers;
        for (unsigned w = 0; w < threads; ++w)
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        job(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure)
                            failure = std::current_exception();
                        next = n;
                    }
                }
            });
    }
    if (failure)
        std::rethrow_exception(failure);
}

bool row_order(const ResultRow& a, const ResultRow& b)
{
    if (a.sweep_value != b.sweep_value)
        return a.sweep_value < b.sweep_value;
    if (a.drop_seed != b.drop_seed)
        return a.drop_seed < b.drop_seed;
    return to_string(a.scheme) < to_string(b.scheme);
}

std::string fmt_real(double v)
{
    return fmt::format("{}", v);
}

} // namespace

std::vector<ResultRow> run_rows(const ExperimentSpec& spec)
{
    spec.validate();
    const std::vector<double> points = spec.points();
    const std::size_t jobs = points.size() * spec.num_drops;

    std::vector<std::vector<ResultRow>> slots(jobs);
    parallel_for(jobs, spec.threads, [&](std::size_t job) {
        const std::size_t sweep_index = job / spec.num_drops;
        const std::size_t drop_index = job % spec.num_drops;
        slots[job] = run_drop(spec, points[sweep_index],
                              drop_seed(spec.master_seed, sweep_index, drop_index));
    });

    std::vector<ResultRow> rows;
    rows.reserve(jobs * spec.schemes.size());
    for (auto& slot : slots)
        for (auto& row : slot)
            rows.push_back(std::move(row));
    std::sort(rows.begin(), rows.end(), row_order);
    return rows;
}

std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows)
{
    struct Acc {
        std::vector<double> sum_se, p5, p10, mean;
    };
    std::map<std::pair<std::string_view, double>, std::pair<SchemeId, Acc>> groups;
    for (const ResultRow& r : rows) {
        auto& [id, acc] = groups[{to_string(r.scheme), r.sweep_value}];
        id = r.scheme;
        acc.sum_se.push_back(r.sum_se);
        acc.p5.push_back(r.p5_se);
        acc.p10.push_back(r.p10_se);
        acc.mean.push_back(r.mean_se);
    }

    auto mean_of = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v)
            s += x;
        return s / static_cast<double>(v.size());
    };
    auto stderr_of = [&](const std::vector<double>& v) {
        if (v.size() < 2)
            return 0.0;
        const double mu = mean_of(v);
        double ss = 0.0;
        for (double x : v)
            ss += (x - mu) * (x - mu);
        return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    };

    std::vector<AggregateRow> out;
    for (const auto& [key, entry] : groups) {
        const auto& [id, acc] = entry;
        AggregateRow a;
        a.scheme = id;
        a.sweep_value = key.second;
        a.drops = acc.sum_se.size();
        a.mean_sum_se = mean_of(acc.sum_se);
        a.stderr_sum_se = stderr_of(acc.sum_se);
        a.mean_p5_se = mean_of(acc.p5);
        a.mean_p10_se = mean_of(acc.p10);
        a.stderr_p10_se = stderr_of(acc.p10);
        a.mean_mean_se = mean_of(acc.mean);
        out.push_back(a);
    }
    std::sort(out.begin(), out.end(), [](const AggregateRow& a, const AggregateRow& b) {
        if (a.sweep_value != b.sweep_value)
            return a.sweep_value < b.sweep_value;
        return to_string(a.scheme) < to_string(b.scheme);
    });
    return out;
}

std::vector<CdfPoint> emit_cdf(const std::vector<ResultRow>& rows, SchemeId scheme)
{
    std::vector<double> pooled;
    for (const ResultRow& r : rows)
        if (r.scheme == scheme)
            pooled.insert(pooled.end(), r.per_user_se.begin(), r.per_user_se.end());
    if (pooled.empty())
        throw std::invalid_argument("emit_cdf: no per-user SE for scheme " +
                                    std::string(to_string(scheme)));
    std::sort(pooled.begin(), pooled.end());
    const double n = static_cast<double>(pooled.size());
    std::vector<CdfPoint> points(pooled.size());
    for (std::size_t k = 0; k < pooled.size(); ++k)
        points[k] = {pooled[k], (static_cast<double>(k) + 0.5) / n};
    return points;
}

// ---------------------------------------------------------------------------
// CSV

namespace {
constexpr std::string_view kResultsHeader = "scheme,sweep_value,drop_seed,sum_se,p5_se,p10_se,mean_se";
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows)
{
    out << kResultsHeader << '\n';
    for (const ResultRow& r : rows)
        out << to_string(r.scheme) << ',' << fmt_real(r.sweep_value) << ',' << r.drop_seed << ','
            << fmt_real(r.sum_se) << ',' << fmt_real(r.p5_se) << ',' << fmt_real(r.p10_se) << ','
            << fmt_real(r.mean_se) << '\n';
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows)
{
    out << "scheme,sweep_value,drops,mean_sum_se,stderr_sum_se,mean_p5_se,mean_p10_se,"
           "stderr_p10_se,mean_mean_se\n";
    for (const AggregateRow& a : rows)
        out << to_string(a.scheme) << ',' << fmt_real(a.sweep_value) << ',' << a.drops << ','
            << fmt_real(a.mean_sum_se) << ',' << fmt_real(a.stderr_sum_se) << ','
            << fmt_real(a.mean_p5_se) << ',' << fmt_real(a.mean_p10_se) << ','
            << fmt_real(a.stderr_p10_se) << ',' << fmt_real(a.mean_mean_se) << '\n';
}

void write_cdf_csv(std::ostream& out, const std::vector<CdfPoint>& points)
{
    out << "se,cdf\n";
    for (const CdfPoint& p : points)
        out << fmt_real(p.se) << ',' << fmt_real(p.cdf) << '\n';
}

std::vector<ResultRow> read_results_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line != kResultsHeader)
        throw std::invalid_argument("results CSV: unexpected header");
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        for (std::string f; std::getline(ss, f, ',');)
            fields.push_back(f);
        if (fields.size() != 7)
            throw std::invalid_argument("results CSV: expected 7 fields in '" + line + "'");
        ResultRow r;
        r.scheme = parse_scheme(fields[0]);
        r.sweep_value = std::stod(fields[1]);
        r.drop_seed = std::stoull(fields[2]);
        r.sum_se = std::stod(fields[3]);
        r.p5_se = std::stod(fields[4]);
        r.p10_se = std::stod(fields[5]);
        r.mean_se = std::stod(fields[6]);
        rows.push_back(r);
    }
    return rows;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out)
            throw std::runtime_error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Plot script

std::filesystem::path emit_plot_script(const std::filesystem::path& dir, SweepKind sweep,
                                       const std::vector<SchemeId>& schemes)
{
    auto require = [&](const std::string& name) {
        if (!std::filesystem::exists(dir / name))
            throw std::runtime_error("plot script references missing file " + (dir / name).string());
        return name;
    };

    std::ostringstream gp;
    gp << "# gnuplot script; run from this directory: gnuplot plot.gp\n"
       << "set datafile separator \",\"\n"
       << "set terminal pngcairo size 800,600\n"
       << "set grid\n"
       << "set key bottom right\n";

    if (sweep == SweepKind::None) {
        gp << "set output \"cdf.png\"\n"
           << "set xlabel \"Per-user SE (bit/s/Hz)\"\n"
           << "set ylabel \"CDF\"\n"
           << "set yrange [0:1]\n"
           << "plot ";
        for (std::size_t i = 0; i < schemes.size(); ++i) {
            const std::string file = require("cdf_" + std::string(to_string(schemes[i])) + ".csv");
            gp << (i ? ", \\\n     " : "") << '"' << file << "\" every ::1 using 1:2 with steps title \""
               << display_name(schemes[i]) << '"';
        }
        gp << '\n';
    } else {
        const std::string file = require("aggregate.csv");
        const char* xlabel = sweep == SweepKind::UeCount        ? "Number of UEs (T)"
                             : sweep == SweepKind::PilotLength ? "Pilot length (Lp)"
                                                               : "Association threshold (beta_th)";
        gp << "set output \"sum_se.png\"\n"
           << "set xlabel \"" << xlabel << "\"\n"
           << "set ylabel \"Sum SE (bit/s/Hz)\"\n"
           << "plot ";
        for (std::size_t i = 0; i < schemes.size(); ++i)
            gp << (i ? ", \\\n     " : "") << '"' << file << "\" every ::1 using 2:(strcol(1) eq \""
               << to_string(schemes[i]) << "\" ? $4 : 1/0) with linespoints title \""
               << display_name(schemes[i]) << '"';
        gp << '\n';
    }

    const std::filesystem::path script = dir / "plot.gp";
    write_file_atomic(script, gp.str());
    return script;
}

// ---------------------------------------------------------------------------

namespace {

std::string to_text(auto writer, const auto& data)
{
    std::ostringstream out;
    writer(out, data);
    return out.str();
}

std::string metadata_json(const ExperimentSpec& spec, std::size_t row_count)
{
    nlohmann::json meta;
    meta["config"] = nlohmann::json::parse(config_to_json(spec));
    meta["version"] = std::string(build_version());
    meta["rows"] = row_count;
    meta["columns"] = {"scheme", "sweep_value", "drop_seed", "sum_se", "p5_se", "p10_se", "mean_se"};
    return meta.dump(2) + "\n";
}

} // namespace

ExperimentOutput run_experiment(const ExperimentSpec& spec)
{
    ExperimentOutput out;
    out.rows = run_rows(spec);
    out.aggregates = aggregate(out.rows);

    std::filesystem::create_directories(spec.output_dir);
    auto put = [&](const std::string& name, const std::string& content) {
        const auto path = spec.output_dir / name;
        write_file_atomic(path, content);
        out.files.push_back(path);
    };
    put("results.csv", to_text(write_results_csv, out.rows));
    put("aggregate.csv", to_text(write_aggregate_csv, out.aggregates));
    if (spec.sweep == SweepKind::None)
        for (SchemeId id : spec.schemes)
            put("cdf_" + std::string(to_string(id)) + ".csv",
                to_text(write_cdf_csv, emit_cdf(out.rows, id)));
    put("metadata.json", metadata_json(spec, out.rows.size()));
    out.files.push_back(emit_plot_script(spec.output_dir, spec.sweep, spec.schemes));
    return out;
}

std::vector<AuditRow> run_protocol_audit(const ExperimentSpec& spec, std::size_t traces)
{
    spec.validate();
    const NetworkConfig& config = spec.base;
    std::vector<AuditRow> rows(spec.num_drops);
    std::vector<std::string> trace_text(std::min(traces, spec.num_drops));

    parallel_for(spec.num_drops, spec.threads, [&](std::size_t d) {
        const std::uint64_t seed = drop_seed(spec.master_seed, 0, d);
        const NetworkRealization real = generate_drop(config, seed);
        const AssociationMap assoc = build_association(real, config.assoc_threshold);
        const PowerProfile powers = normalize_powers(config);

        SchemeConfig sc = spec.scheme;
        sc.id = SchemeId::Dpb;
        sc.seed = scheme_seed_for_drop(spec.scheme.seed, seed);
        const std::vector<UeIndex> order = random_arrival_order(real.num_ues(), seed);

        const ProtocolRun run = run_protocol(real, assoc, powers, config.pilot_length, sc, order);
        const OverheadReport report = audit_overhead(run.log, assoc, sc.dpb_S);
        const AssignmentResult direct =
            assign_all(sc, real, assoc, powers, config.pilot_length, order);

        AuditRow& row = rows[d];
        row.drop_seed = seed;
        row.ues = real.num_ues();
        row.probes = report.totals[static_cast<std::size_t>(MessageKind::PilotProbe)];
        row.offers = report.totals[static_cast<std::size_t>(MessageKind::CandidateOffer)];
        row.notifies = report.totals[static_cast<std::size_t>(MessageKind::PilotNotify)];
        row.ap_to_ap = report.ap_to_ap;
        row.payload = report.total_payload;
        row.matches_direct = run.assignment.pilots() == direct.assignment.pilots();
        if (d < trace_text.size()) {
            std::ostringstream t;
            run.log.write(t);
            trace_text[d] = t.str();
        }
    });

    std::filesystem::create_directories(spec.output_dir);
    std::ostringstream csv;
    csv << "drop_seed,ues,probes,offers,notifies,ap_to_ap,payload,matches_direct\n";
    for (const AuditRow& r : rows)
        csv << r.drop_seed << ',' << r.ues << ',' << r.probes << ',' << r.offers << ','
            << r.notifies << ',' << r.ap_to_ap << ',' << r.payload << ','
            << (r.matches_direct ? 1 : 0) << '\n';
    write_file_atomic(spec.output_dir / "protocol_audit.csv", csv.str());
    for (std::size_t d = 0; d < trace_text.size(); ++d)
        write_file_atomic(spec.output_dir / ("trace_drop" + std::to_string(d) + ".csv"),
                          trace_text[d]);
    write_file_atomic(spec.output_dir / "metadata.json", metadata_json(spec, rows.size()));
    return rows;
}

} // namespace dmimo
