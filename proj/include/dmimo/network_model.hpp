#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dmimo/pilot_assignment.hpp"
#include "dmimo/types.hpp"

namespace dmimo {

/// Three-slope path loss with distances in meters:
///   d >  d1        : PL = L + 10 n_far log10(d)
///   d0 < d <= d1   : PL = L + 10 (n_far - n_mid) log10(d1) + 10 n_mid log10(d)
///   d <= d0        : flat at the d0 value
/// where log10 takes distances in km. Continuous at both breakpoints.
struct PathLossParams {
    double reference_loss_db = 140.7;
    double d0_m = 10.0;
    double d1_m = 50.0;
    double exponent_mid = 2.0;
    double exponent_far = 3.5;
    double min_distance_m = 1.0;
};

struct NetworkConfig {
    double area_side_m = 1000.0;
    std::size_t num_aps = 100;
    std::size_t num_ues = 100;
    std::size_t antennas_per_ap = 8;
    double bandwidth_hz = 20e6;
    std::size_t coherence_block = 200;
    std::size_t pilot_length = 7;
    double shadow_sigma_db = 8.0;
    double assoc_threshold = 0.95;
    double strong_threshold = 0.95;
    double tx_power_mw = 100.0;
    double noise_figure_db = 9.0;
    bool wrap_around = false;
    PathLossParams pathloss;

    /// Throws std::invalid_argument naming the first violated constraint.
    void validate() const;
};

struct NetworkRealization {
    std::vector<Point2> ap_positions;
    std::vector<Point2> ue_positions;
    ApUeMatrix beta;
    std::uint64_t seed = 0;

    std::size_t num_aps() const { return ap_positions.size(); }
    std::size_t num_ues() const { return ue_positions.size(); }
};

/// Normalized SNRs (transmit power over noise power), one entry per UE.
struct PowerProfile {
    Eigen::VectorXd p_pilot;
    Eigen::VectorXd p_uplink;
};

struct AssociationMap {
    std::vector<std::vector<ApIndex>> serving_aps;   // M_t, descending beta
    std::vector<std::vector<UeIndex>> served_ues;    // T_m, ascending UE index
    std::vector<std::vector<UeIndex>> strong_ues;    // S_m, descending beta
    std::vector<std::size_t> strong_pilot_count;     // L_{S_m}
    std::vector<std::uint8_t> strong_flags;          // delta_mt, column-major (ap fastest)

    std::size_t num_aps() const { return served_ues.size(); }
    std::size_t num_ues() const { return serving_aps.size(); }
    bool is_strong(ApIndex m, UeIndex t) const
    {
        return strong_flags.empty() ? false : strong_flags[t * num_aps() + m] != 0;
    }
    bool serves(ApIndex m, UeIndex t) const;
};

double path_loss_db(double distance_m, const PathLossParams& params);

/// Linear LSFC: 10^((-PL_dB(d) + shadow_db) / 10), distance clamped to
/// params.min_distance_m.
double compute_lsfc(double distance_m, double shadow_db, const PathLossParams& params);

/// Euclidean distance, or the shortest torus distance when wrap_around is set.
double ap_ue_distance(const Point2& a, const Point2& b, double side_m, bool wrap_around);

/// One Monte-Carlo drop. AP positions come from one stream; each UE draws its
/// position and its shadowing column from its own stream, so the realization of
/// UE t does not depend on how many UEs follow it.
NetworkRealization generate_drop(const NetworkConfig& config, std::uint64_t seed);

PowerProfile normalize_powers(const NetworkConfig& config);

/// Noise power over the band in dBm.
double noise_power_dbm(double bandwidth_hz, double noise_figure_db);

/// Number of leading entries of `sorted_desc` whose running sum first
/// reaches fraction * total. fraction >= 1 returns the full length.
std::size_t smallest_prefix(std::span<const double> sorted_desc, double fraction);

/// M_t for every UE: smallest descending-beta prefix holding beta_th of the
/// UE's total LSFC.
std::vector<std::vector<ApIndex>> associate_aps(const NetworkRealization& real, double beta_th);

/// Association with M_t and T_m populated; strong sets empty.
AssociationMap build_association(const NetworkRealization& real, double beta_th);

/// Fills S_m, delta_mt and L_{S_m}. Throws std::logic_error if some
/// L_{S_m} >= antennas.
AssociationMap group_strong_ues(const NetworkRealization& real, const AssociationMap& assoc,
                                double nu_strong, const PilotAssignment& assignment,
                                std::size_t antennas);

} // namespace dmimo
