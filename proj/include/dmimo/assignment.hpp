#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dmimo/estimation.hpp"
#include "dmimo/network_model.hpp"
#include "dmimo/pilot_assignment.hpp"

namespace dmimo {

enum class SchemeId { Eem, Dpb, Random, Scalable };

/// How DPB picks among several common pilots.
enum class TieRule {
    SeededRandom,   // uniform over the common set, per-UE seeded stream
    Deterministic,  // best-ranked member in the offer of the group's top AP
};

std::string_view to_string(SchemeId id);
std::string_view to_string(TieRule rule);
SchemeId parse_scheme(std::string_view name);
TieRule parse_tie_rule(std::string_view name);

struct SchemeConfig {
    SchemeId id = SchemeId::Eem;
    std::size_t dpb_S = 3;
    double dpb_delta = 0.1;
    TieRule tie_rule = TieRule::SeededRandom;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Per-UE operation counts recorded during assignment.
struct StepStats {
    std::uint64_t contamination_reads = 0;  // EEM cache reads
    std::uint64_t error_evaluations = 0;    // DPB local error evaluations
    std::uint64_t intersection_checks = 0;  // DPB group intersections tried
    std::size_t priority_aps = 0;           // DPB S' = min(S, |M_t|)
};

struct AssignmentResult {
    PilotAssignment assignment;
    std::vector<StepStats> stats;  // indexed by UE
};

/// What a single AP knows in the distributed scheme: its own LSFCs, the
/// pilot SNRs of UEs, and the pilots announced by the UEs it serves.
/// Nothing in here refers to another AP.
class ApLocalState {
public:
    ApLocalState(ApIndex m, Eigen::VectorXd beta_row, Eigen::VectorXd p_pilot,
                 std::size_t pilot_length);

    ApIndex id() const { return id_; }
    std::size_t num_pilots() const { return static_cast<std::size_t>(load_.size()); }
    std::size_t pilot_length() const { return pilot_length_; }

    double beta(UeIndex t) const { return beta_row_(static_cast<Eigen::Index>(t)); }
    double p_pilot(UeIndex t) const { return p_pilot_(static_cast<Eigen::Index>(t)); }

    /// sum over served UEs on pilot i of p_k Lp beta_mk.
    double load(PilotIndex i) const { return load_(static_cast<Eigen::Index>(i)); }
    std::span<const UeIndex> copilots(PilotIndex i) const { return copilots_.at(i); }

    /// Records that served UE t now holds pilot i.
    void learn(UeIndex t, PilotIndex i);

private:
    ApIndex id_;
    Eigen::VectorXd beta_row_;
    Eigen::VectorXd p_pilot_;
    std::size_t pilot_length_;
    Eigen::VectorXd load_;
    std::vector<std::vector<UeIndex>> copilots_;
};

/// Pilots an AP offers to a UE, ranked by ascending local error (ties by
/// pilot index). The first entry is always a minimum-error pilot.
struct CandidateSet {
    ApIndex ap = 0;
    std::vector<PilotIndex> pilots;
};

/// Local error of UE t on every pilot, as seen by one AP.
std::vector<double> local_pilot_errors(UeIndex t, const ApLocalState& ap);

/// C_m = { i : Er_i <= (1 + delta) Er_min }. Adds Lp to `evaluations`.
CandidateSet dpb_candidates(UeIndex t, double delta, const ApLocalState& ap,
                            std::uint64_t* evaluations = nullptr);

/// Priority intersection over candidate sets given in priority order.
/// Levels run from S' down to 2 with groups in lexicographic rank order; the
/// first nonempty intersection wins. Falls back to the best pilot of the top AP.
PilotIndex priority_select(std::span<const CandidateSet> sets, TieRule rule, std::uint64_t seed,
                           std::uint64_t* intersection_checks = nullptr);

/// The S' = min(S, |M_t|) strongest serving APs, strongest first.
std::span<const ApIndex> priority_aps(const AssociationMap& assoc, UeIndex t, std::size_t S);

std::uint64_t dpb_tie_seed(std::uint64_t scheme_seed, UeIndex t);

PilotIndex random_pa_pilot(UeIndex t, std::size_t pilot_length, std::uint64_t seed);

/// Least pilot contamination seen at the UE's strongest AP.
PilotIndex scalable_pa_pilot(UeIndex t, const ApUeMatrix& beta, const PowerProfile& powers,
                             const PilotAssignment& assignment);

struct AssignmentInputs {
    const ApUeMatrix& beta;
    const AssociationMap& assoc;
    const PowerProfile& powers;
    std::size_t pilot_length;
};

/// A sequential per-UE pilot assignment rule. select() must not modify
/// earlier decisions; commit() updates whatever bookkeeping the scheme keeps.
class PilotScheme {
public:
    virtual ~PilotScheme() = default;
    virtual PilotIndex select(UeIndex t, const PilotAssignment& current, StepStats& stats) = 0;
    virtual void commit(UeIndex t, PilotIndex pilot) = 0;
};

std::unique_ptr<PilotScheme> make_scheme(const SchemeConfig& config, const AssignmentInputs& in);

/// Runs a scheme over all UEs in `arrival_order` (UE index order when empty).
AssignmentResult assign_all(const SchemeConfig& config, const NetworkRealization& real,
                            const AssociationMap& assoc, const PowerProfile& powers,
                            std::size_t pilot_length,
                            std::span<const UeIndex> arrival_order = {});

} // namespace dmimo
