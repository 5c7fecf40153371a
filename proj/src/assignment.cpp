#include "dmimo/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "dmimo/rng.hpp"

namespace dmimo {

std::string_view to_string(SchemeId id)
{
    switch (id) {
    case SchemeId::Eem: return "eem";
    case SchemeId::Dpb: return "dpb";
    case SchemeId::Random: return "random";
    case SchemeId::Scalable: return "scalable";
    }
    return "?";
}

std::string_view to_string(TieRule rule)
{
    return rule == TieRule::SeededRandom ? "seeded_random" : "deterministic";
}

SchemeId parse_scheme(std::string_view name)
{
    for (SchemeId id : {SchemeId::Eem, SchemeId::Dpb, SchemeId::Random, SchemeId::Scalable})
        if (name == to_string(id))
            return id;
    throw std::invalid_argument("unknown scheme '" + std::string(name) + "'");
}

TieRule parse_tie_rule(std::string_view name)
{
    if (name == "seeded_random")
        return TieRule::SeededRandom;
    if (name == "deterministic")
        return TieRule::Deterministic;
    throw std::invalid_argument("unknown tie rule '" + std::string(name) + "'");
}

void SchemeConfig::validate() const
{
    if (dpb_S < 1)
        throw std::invalid_argument("SchemeConfig: dpb_S must be at least 1");
    if (!(dpb_delta >= 0.0) || !std::isfinite(dpb_delta))
        throw std::invalid_argument("SchemeConfig: dpb_delta must be finite and >= 0");
}

// ---------------------------------------------------------------------------
// Distributed building blocks

ApLocalState::ApLocalState(ApIndex m, Eigen::VectorXd beta_row, Eigen::VectorXd p_pilot,
                           std::size_t pilot_length)
    : id_(m),
      beta_row_(std::move(beta_row)),
      p_pilot_(std::move(p_pilot)),
      pilot_length_(pilot_length),
      load_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pilot_length))),
      copilots_(pilot_length)
{
}

void ApLocalState::learn(UeIndex t, PilotIndex i)
{
    load_(static_cast<Eigen::Index>(i)) += p_pilot(t) * static_cast<double>(pilot_length_) * beta(t);
    copilots_.at(i).push_back(t);
}

std::vector<double> local_pilot_errors(UeIndex t, const ApLocalState& ap)
{
    const double b = ap.beta(t);
    const double x = ap.p_pilot(t) * static_cast<double>(ap.pilot_length()) * b;
    std::vector<double> errors(ap.num_pilots());
    for (PilotIndex i = 0; i < errors.size(); ++i)
        errors[i] = pilot_error_term(x, b, ap.load(i));
    return errors;
}

CandidateSet dpb_candidates(UeIndex t, double delta, const ApLocalState& ap,
                            std::uint64_t* evaluations)
{
    const std::vector<double> errors = local_pilot_errors(t, ap);
    if (evaluations)
        *evaluations += errors.size();

    const double best = *std::min_element(errors.begin(), errors.end());
    const double bound = (1.0 + delta) * best;

    CandidateSet set;
    set.ap = ap.id();
    for (PilotIndex i = 0; i < errors.size(); ++i)
        if (errors[i] <= bound)
            set.pilots.push_back(i);
    std::stable_sort(set.pilots.begin(), set.pilots.end(),
                     [&](PilotIndex a, PilotIndex b) { return errors[a] < errors[b]; });
    return set;
}

namespace {

// Advances `group` (strictly increasing indices into [0, n)) to the next
// combination in lexicographic order. Returns false after the last one.
bool next_combination(std::vector<std::size_t>& group, std::size_t n)
{
    const std::size_t l = group.size();
    for (std::size_t pos = l; pos-- > 0;) {
        if (group[pos] < n - l + pos) {
            ++group[pos];
            for (std::size_t j = pos + 1; j < l; ++j)
                group[j] = group[j - 1] + 1;
            return true;
        }
    }
    return false;
}

bool offers(const CandidateSet& set, PilotIndex i)
{
    return std::find(set.pilots.begin(), set.pilots.end(), i) != set.pilots.end();
}

} // namespace

PilotIndex priority_select(std::span<const CandidateSet> sets, TieRule rule, std::uint64_t seed,
                           std::uint64_t* intersection_checks)
{
    if (sets.empty() || sets.front().pilots.empty())
        throw std::invalid_argument("priority_select: need at least one nonempty candidate set");

    const std::size_t n = sets.size();
    for (std::size_t level = n; level >= 2; --level) {
        std::vector<std::size_t> group(level);
        std::iota(group.begin(), group.end(), std::size_t{0});
        do {
            if (intersection_checks)
                ++*intersection_checks;

            // Collected in the ranking of the group's top AP.
            std::vector<PilotIndex> common;
            for (PilotIndex i : sets[group.front()].pilots) {
                const bool everywhere = std::all_of(group.begin() + 1, group.end(),
                                                    [&](std::size_t g) { return offers(sets[g], i); });
                if (everywhere)
                    common.push_back(i);
            }
            if (common.empty())
                continue;

            if (rule == TieRule::Deterministic)
                return common.front();  // already ranked by the group's top AP
            // Ascending pilot order keeps the random pick independent of offer ranking.
            std::sort(common.begin(), common.end());
            Engine engine = make_engine(seed);
            std::uniform_int_distribution<std::size_t> pick(0, common.size() - 1);
            return common[pick(engine)];
        } while (next_combination(group, n));
    }
    return sets.front().pilots.front();
}

std::span<const ApIndex> priority_aps(const AssociationMap& assoc, UeIndex t, std::size_t S)
{
    const auto& serving = assoc.serving_aps.at(t);
    return std::span<const ApIndex>(serving).first(std::min(S, serving.size()));
}

std::uint64_t dpb_tie_seed(std::uint64_t scheme_seed, UeIndex t)
{
    return derive_seed(scheme_seed, {tag(StreamTag::DpbTieBreak), t});
}

PilotIndex random_pa_pilot(UeIndex t, std::size_t pilot_length, std::uint64_t seed)
{
    Engine engine = make_engine(derive_seed(seed, {tag(StreamTag::RandomPilot), t}));
    std::uniform_int_distribution<PilotIndex> pick(0, pilot_length - 1);
    return pick(engine);
}

PilotIndex scalable_pa_pilot(UeIndex t, const ApUeMatrix& beta, const PowerProfile& powers,
                             const PilotAssignment& assignment)
{
    Eigen::Index master = 0;
    beta.col(static_cast<Eigen::Index>(t)).maxCoeff(&master);

    PilotIndex best = 0;
    double best_sum = 0.0;
    for (PilotIndex i = 0; i < assignment.num_pilots(); ++i) {
        double sum = 0.0;
        for (UeIndex k : assignment.copilots(i))
            sum += powers.p_pilot(static_cast<Eigen::Index>(k)) *
                   beta(master, static_cast<Eigen::Index>(k));
        if (i == 0 || sum < best_sum) {
            best = i;
            best_sum = sum;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Schemes

namespace {

class EemScheme final : public PilotScheme {
public:
    explicit EemScheme(const AssignmentInputs& in)
        : in_(in), cache_(in.pilot_length, static_cast<std::size_t>(in.beta.rows()))
    {
    }

    PilotIndex select(UeIndex t, const PilotAssignment&, StepStats& stats) override
    {
        if (arrivals_ < in_.pilot_length)
            return arrivals_;

        const auto& serving = in_.assoc.serving_aps.at(t);
        const std::uint64_t reads_before = cache_.reads();
        PilotIndex best = 0;
        double best_error = std::numeric_limits<double>::infinity();
        for (PilotIndex i = 0; i < in_.pilot_length; ++i) {
            const double err = estimation_error_cached(t, i, in_.beta, in_.powers,
                                                       in_.pilot_length, cache_, serving);
            if (err < best_error) {
                best_error = err;
                best = i;
            }
        }
        stats.contamination_reads = cache_.reads() - reads_before;
        return best;
    }

    void commit(UeIndex t, PilotIndex pilot) override
    {
        cache_.add(pilot, in_.beta, t, in_.powers.p_pilot(static_cast<Eigen::Index>(t)),
                   in_.pilot_length);
        ++arrivals_;
    }

private:
    AssignmentInputs in_;
    ContaminationCache cache_;
    std::size_t arrivals_ = 0;
};

class DpbScheme final : public PilotScheme {
public:
    DpbScheme(const SchemeConfig& config, const AssignmentInputs& in) : config_(config), in_(in)
    {
        const auto M = in.beta.rows();
        aps_.reserve(static_cast<std::size_t>(M));
        for (Eigen::Index m = 0; m < M; ++m)
            aps_.emplace_back(static_cast<ApIndex>(m), in.beta.row(m).transpose(),
                              in.powers.p_pilot, in.pilot_length);
    }

    PilotIndex select(UeIndex t, const PilotAssignment&, StepStats& stats) override
    {
        const auto top = priority_aps(in_.assoc, t, config_.dpb_S);
        std::vector<CandidateSet> sets;
        sets.reserve(top.size());
        for (ApIndex m : top)
            sets.push_back(dpb_candidates(t, config_.dpb_delta, aps_[m], &stats.error_evaluations));
        stats.priority_aps = top.size();
        return priority_select(sets, config_.tie_rule, dpb_tie_seed(config_.seed, t),
                               &stats.intersection_checks);
    }

    void commit(UeIndex t, PilotIndex pilot) override
    {
        for (ApIndex m : in_.assoc.serving_aps.at(t))
            aps_[m].learn(t, pilot);
    }

private:
    SchemeConfig config_;
    AssignmentInputs in_;
    std::vector<ApLocalState> aps_;
};

class RandomScheme final : public PilotScheme {
public:
    RandomScheme(std::uint64_t seed, std::size_t pilot_length) : seed_(seed), lp_(pilot_length) {}

    PilotIndex select(UeIndex t, const PilotAssignment&, StepStats&) override
    {
        return random_pa_pilot(t, lp_, seed_);
    }
    void commit(UeIndex, PilotIndex) override {}

private:
    std::uint64_t seed_;
    std::size_t lp_;
};

class ScalableScheme final : public PilotScheme {
public:
    explicit ScalableScheme(const AssignmentInputs& in) : in_(in) {}

    PilotIndex select(UeIndex t, const PilotAssignment& current, StepStats&) override
    {
        return scalable_pa_pilot(t, in_.beta, in_.powers, current);
    }
    void commit(UeIndex, PilotIndex) override {}

private:
    AssignmentInputs in_;
};

} // namespace

std::unique_ptr<PilotScheme> make_scheme(const SchemeConfig& config, const AssignmentInputs& in)
{
    config.validate();
    switch (config.id) {
    case SchemeId::Eem: return std::make_unique<EemScheme>(in);
    case SchemeId::Dpb: return std::make_unique<DpbScheme>(config, in);
    case SchemeId::Random: return std::make_unique<RandomScheme>(config.seed, in.pilot_length);
    case SchemeId::Scalable: return std::make_unique<ScalableScheme>(in);
    }
    throw std::invalid_argument("make_scheme: unknown scheme");
}

AssignmentResult assign_all(const SchemeConfig& config, const NetworkRealization& real,
                            const AssociationMap& assoc, const PowerProfile& powers,
                            std::size_t pilot_length, std::span<const UeIndex> arrival_order)
{
    const std::size_t T = real.num_ues();
    if (assoc.num_ues() != T)
        throw std::invalid_argument("assign_all: association does not match the realization");

    std::vector<UeIndex> order;
    if (arrival_order.empty()) {
        order.resize(T);
        std::iota(order.begin(), order.end(), UeIndex{0});
    } else {
        order.assign(arrival_order.begin(), arrival_order.end());
    }

    AssignmentInputs in{real.beta, assoc, powers, pilot_length};
    auto scheme = make_scheme(config, in);
    AssignmentResult result{PilotAssignment(T, pilot_length), std::vector<StepStats>(T)};
    for (UeIndex t : order) {
        const PilotIndex pilot = scheme->select(t, result.assignment, result.stats.at(t));
        result.assignment.assign(t, pilot);
        scheme->commit(t, pilot);
    }
    return result;
}

} // namespace dmimo
