#pragma once

#include <cstdint>
#include <span>

#include "dmimo/network_model.hpp"
#include "dmimo/pilot_assignment.hpp"
#include "dmimo/types.hpp"

namespace dmimo {

/// Mean-square of the MMSE channel estimates, gamma_mt, for every AP-UE pair.
struct EstimationQuality {
    ApUeMatrix gamma;
};

/// gamma_mt = p_t Lp beta_mt^2 / (sum_{k shares t's pilot} p_k Lp beta_mk + 1).
/// Requires a complete assignment.
EstimationQuality compute_gamma(const ApUeMatrix& beta, const PowerProfile& powers,
                                std::size_t pilot_length, const PilotAssignment& assignment);

/// gamma_mt with no co-pilot UEs: x beta / (x + 1), x = p Lp beta.
double uncontaminated_gamma(double beta, double p_pilot, std::size_t pilot_length);

/// Loss of estimate quality at one AP caused by co-pilot interference.
///
/// With x = p_t Lp beta_mt and I = sum over the other co-pilot UEs of
/// p_k Lp beta_mk, the quality loss
///     x beta/(x+1) - x beta/(x+I+1)
/// is evaluated as x beta I / ((x+1)(x+I+1)). The two forms are equal, but
/// the second has no cancellation, so a nonzero I always yields a strictly
/// positive error even at SNRs around 1e11.
double pilot_error_term(double x, double beta, double interference);

/// Global estimation error of UE t on `pilot`, summed over its serving APs.
/// Contamination comes from every UE already holding `pilot` in
/// `assignment` (t itself is skipped if present).
double estimation_error_global(UeIndex t, PilotIndex pilot, const ApUeMatrix& beta,
                               const PowerProfile& powers, std::size_t pilot_length,
                               const PilotAssignment& assignment,
                               std::span<const ApIndex> serving);

/// Local estimation error at AP m. `served_copilots` lists the UEs served by m
/// that hold `pilot`; t itself is skipped if present.
double estimation_error_local(UeIndex t, ApIndex m, const ApUeMatrix& beta,
                              const PowerProfile& powers, std::size_t pilot_length,
                              std::span<const UeIndex> served_copilots);

/// Running per-(pilot, AP) sums of p_k Lp beta_mk over assigned UEs, so
/// that the global error of a candidate pilot costs |M_t| reads instead of a
/// scan over co-pilot UEs. Single writer; reads are counted.
class ContaminationCache {
public:
    ContaminationCache(std::size_t num_pilots, std::size_t num_aps);

    double read(PilotIndex i, ApIndex m) const
    {
        ++reads_;
        return load_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m));
    }

    /// Adds UE t on pilot i to every AP's sum.
    void add(PilotIndex i, const ApUeMatrix& beta, UeIndex t, double p_pilot,
             std::size_t pilot_length);

    std::uint64_t reads() const { return reads_; }

private:
    Eigen::MatrixXd load_;
    mutable std::uint64_t reads_ = 0;
};

/// Global error computed from the cache (same value as estimation_error_global
/// for UE t not yet assigned).
double estimation_error_cached(UeIndex t, PilotIndex pilot, const ApUeMatrix& beta,
                               const PowerProfile& powers, std::size_t pilot_length,
                               const ContaminationCache& cache,
                               std::span<const ApIndex> serving);

} // namespace dmimo
