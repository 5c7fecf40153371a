#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dmimo/assignment.hpp"
#include "dmimo/network_model.hpp"
#include "dmimo/performance.hpp"

namespace dmimo {

enum class SweepKind { UeCount, PilotLength, AssocThreshold, None };

std::string_view to_string(SweepKind kind);
SweepKind parse_sweep(std::string_view name);

/// Human-readable scheme label used in plots ("EEM-PA", ...).
std::string_view display_name(SchemeId id);

struct ExperimentSpec {
    NetworkConfig base;
    SchemeConfig scheme;  // DPB parameters, tie rule and seed shared by all schemes
    LsfdMode lsfd = LsfdMode::Optimal;
    SweepKind sweep = SweepKind::None;
    std::vector<double> sweep_values;
    std::vector<SchemeId> schemes{SchemeId::Eem, SchemeId::Dpb, SchemeId::Random,
                                  SchemeId::Scalable};
    std::size_t num_drops = 200;
    std::uint64_t master_seed = 1;
    std::filesystem::path output_dir = "results";
    unsigned threads = 0;  // 0 = hardware concurrency

    /// Validates the spec and every swept configuration.
    void validate() const;

    /// Sweep points; a non-sweep experiment has the single point 0.
    std::vector<double> points() const;

    /// Base config with the given sweep value applied.
    NetworkConfig config_at(double sweep_value) const;
};

struct ResultRow {
    SchemeId scheme = SchemeId::Eem;
    double sweep_value = 0.0;
    std::uint64_t drop_seed = 0;
    double sum_se = 0.0;
    double p5_se = 0.0;
    double p10_se = 0.0;
    double mean_se = 0.0;
    std::vector<double> per_user_se;  // kept only for SweepKind::None
};

struct AggregateRow {
    SchemeId scheme = SchemeId::Eem;
    double sweep_value = 0.0;
    std::size_t drops = 0;
    double mean_sum_se = 0.0;
    double stderr_sum_se = 0.0;
    double mean_p5_se = 0.0;
    double mean_p10_se = 0.0;
    double stderr_p10_se = 0.0;
    double mean_mean_se = 0.0;
};

struct CdfPoint {
    double se = 0.0;
    double cdf = 0.0;
};

/// Seed of drop `drop_index` at sweep point `sweep_index`.
std::uint64_t drop_seed(std::uint64_t master_seed, std::size_t sweep_index, std::size_t drop_index);

/// Seed handed to the randomized schemes for one drop.
std::uint64_t scheme_seed_for_drop(std::uint64_t scheme_seed, std::uint64_t drop_seed);

/// Runs one drop end to end for every scheme in `spec.schemes`.
std::vector<ResultRow> run_drop(const ExperimentSpec& spec, double sweep_value,
                                std::uint64_t seed);

/// All rows, sorted by (sweep_value, drop_seed, scheme name). Drops run on
/// spec.threads workers; the output does not depend on the worker count.
std::vector<ResultRow> run_rows(const ExperimentSpec& spec);

std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows);

/// Pooled per-user SE of one scheme, sorted, with ordinates (k - 0.5) / n.
/// Throws std::invalid_argument when there is nothing to pool.
std::vector<CdfPoint> emit_cdf(const std::vector<ResultRow>& rows, SchemeId scheme);

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows);
void write_cdf_csv(std::ostream& out, const std::vector<CdfPoint>& points);

/// Parses a results CSV back into rows (per_user_se left empty).
std::vector<ResultRow> read_results_csv(std::istream& in);

/// Writes `content` to `path` through a temporary file and a rename, so a
/// crash never leaves a truncated file under the final name.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Writes a gnuplot script that reads the CSVs in `dir`. Throws
/// std::runtime_error if a referenced CSV is missing.
std::filesystem::path emit_plot_script(const std::filesystem::path& dir, SweepKind sweep,
                                       const std::vector<SchemeId>& schemes);

struct ExperimentOutput {
    std::vector<ResultRow> rows;
    std::vector<AggregateRow> aggregates;
    std::vector<std::filesystem::path> files;
};

/// Runs the experiment and writes results.csv, aggregate.csv, metadata.json,
/// cdf_<scheme>.csv (non-sweep runs) and plot.gp into spec.output_dir.
ExperimentOutput run_experiment(const ExperimentSpec& spec);

// ---------------------------------------------------------------------------
// Protocol audit over many drops

struct AuditRow {
    std::uint64_t drop_seed = 0;
    std::size_t ues = 0;
    std::uint64_t probes = 0;
    std::uint64_t offers = 0;
    std::uint64_t notifies = 0;
    std::uint64_t ap_to_ap = 0;
    std::uint64_t payload = 0;
    bool matches_direct = false;
};

/// Runs the distributed protocol on spec.num_drops drops with random arrival
/// orders, audits each trace and compares against the direct implementation.
/// Writes protocol_audit.csv and trace_drop<k>.csv for the first `traces` drops.
std::vector<AuditRow> run_protocol_audit(const ExperimentSpec& spec, std::size_t traces = 1);

// ---------------------------------------------------------------------------
// Config documents

/// Applies a flat JSON object onto `spec`. Unknown keys and wrongly typed
/// values throw std::invalid_argument.
void apply_config_json(const std::string& json_text, ExperimentSpec& spec);
void apply_config_file(const std::filesystem::path& path, ExperimentSpec& spec);

/// The resolved spec as a flat JSON document accepted by apply_config_json.
std::string config_to_json(const ExperimentSpec& spec);

/// Reduced desk-scale preset: M = 30, 50 drops, smaller sweep grids.
void apply_desk_scale(ExperimentSpec& spec);

/// Default sweep grid for a study at full or desk scale.
std::vector<double> default_sweep_values(SweepKind sweep, bool desk_scale);

/// Version string baked in at configure time.
std::string_view build_version();

} // namespace dmimo
