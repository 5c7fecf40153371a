#pragma once

#include <vector>

#include "dmimo/estimation.hpp"
#include "dmimo/network_model.hpp"
#include "dmimo/pilot_assignment.hpp"

namespace dmimo {

enum class LsfdMode { Optimal, Equal };

/// Large-scale fading decoding weights, M x T, zero where the AP does not serve the UE.
struct LsfdWeights {
    ApUeMatrix a;
};

/// The PFZF SINR of one UE as a quadratic form in its LSFD weights,
/// restricted to the UE's serving APs:
///
///   SINR(a) = p_t (a.b)^2 / ( sum_k p_k (a.c_k)^2 + sum_m a_m^2 D_m )
///
/// b_m   = sqrt((A - delta_mt L_Sm) gamma_mt)
/// c_k,m = sqrt((A - delta_mt L_Sm) gamma_mk)   for co-pilot UEs k != t
/// D_m   = sum_k p_k (beta_mk - delta_mt delta_mk gamma_mk) + 1
struct LinkTerms {
    std::vector<ApIndex> aps;          // M_t
    double power = 0.0;                // p^u_t
    Eigen::VectorXd signal;            // b
    Eigen::MatrixXd copilot;           // columns c_k
    Eigen::VectorXd copilot_power;     // p^u_k per column
    Eigen::VectorXd diagonal;          // D
};

/// Strong grouping must already be applied to `assoc`.
LinkTerms build_link_terms(UeIndex t, const ApUeMatrix& beta, const EstimationQuality& quality,
                           const PowerProfile& powers, const AssociationMap& assoc,
                           const PilotAssignment& assignment, std::size_t antennas);

/// Unit-norm weights over M_t. Optimal solves (sum_k p_k c_k c_k^T + diag(D)) a = b
/// by Cholesky; Equal gives 1/|M_t| before normalization.
/// Throws std::runtime_error if the system is not positive definite.
Eigen::VectorXd compute_lsfd(const LinkTerms& terms, LsfdMode mode = LsfdMode::Optimal);

/// Evaluates the SINR for weights `a` over terms.aps.
double sinr_pfzf(const LinkTerms& terms, const Eigen::VectorXd& a);

/// Weights for every UE, embedded in an M x T matrix.
LsfdWeights lsfd_weights(const ApUeMatrix& beta, const EstimationQuality& quality,
                         const PowerProfile& powers, const AssociationMap& assoc,
                         const PilotAssignment& assignment, std::size_t antennas,
                         LsfdMode mode = LsfdMode::Optimal);

/// SINR of UE t for full M x T weights (entries outside M_t are ignored).
double sinr_pfzf(UeIndex t, const LsfdWeights& weights, const ApUeMatrix& beta,
                 const EstimationQuality& quality, const PowerProfile& powers,
                 const AssociationMap& assoc, const PilotAssignment& assignment,
                 std::size_t antennas);

/// (1 - Lp/Lc) / 2.
double uplink_prelog(std::size_t coherence_block, std::size_t pilot_length);

double se_uplink(double sinr, std::size_t coherence_block, std::size_t pilot_length);

struct SeReport {
    std::vector<double> sinr;
    std::vector<double> se;
    double sum_se = 0.0;
    std::vector<double> sorted_se;

    double mean_se() const { return se.empty() ? 0.0 : sum_se / static_cast<double>(se.size()); }

    /// Empirical quantile q in [0, 1] of the per-user SE, linear
    /// interpolation between order statistics.
    double percentile(double q) const;
};

/// Quantile of an ascending-sorted sample, linear interpolation.
double sorted_quantile(const std::vector<double>& sorted, double q);

/// gamma -> strong grouping -> LSFD -> SINR -> SE for one drop.
SeReport evaluate(const NetworkRealization& real, const AssociationMap& assoc,
                  const PilotAssignment& assignment, const PowerProfile& powers,
                  const NetworkConfig& config, LsfdMode mode = LsfdMode::Optimal);

} // namespace dmimo
