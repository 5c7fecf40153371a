#include "dmimo/network_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "dmimo/rng.hpp"

namespace dmimo {

namespace {

void require(bool ok, const char* what)
{
    if (!ok)
        throw std::invalid_argument(std::string("NetworkConfig: ") + what);
}

bool finite_all(std::initializer_list<double> values)
{
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

// Indices 0..n-1 ordered by descending key, ties broken by ascending index.
template <typename Key>
std::vector<std::size_t> order_descending(std::size_t n, Key key)
{
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return key(a) > key(b); });
    return idx;
}

} // namespace

void NetworkConfig::validate() const
{
    const PathLossParams& pl = pathloss;
    require(finite_all({area_side_m, bandwidth_hz, shadow_sigma_db, assoc_threshold,
                        strong_threshold, tx_power_mw, noise_figure_db, pl.reference_loss_db,
                        pl.d0_m, pl.d1_m, pl.exponent_mid, pl.exponent_far,
                        pl.min_distance_m}),
            "all values must be finite");
    require(area_side_m > 0.0, "area_side_m must be positive");
    require(num_aps >= 1, "num_aps must be at least 1");
    require(num_ues >= 1, "num_ues must be at least 1");
    require(pilot_length >= 1, "pilot_length must be at least 1");
    require(pilot_length <= coherence_block, "pilot_length must not exceed coherence_block");
    require(antennas_per_ap > pilot_length, "antennas_per_ap must exceed pilot_length");
    require(bandwidth_hz > 0.0, "bandwidth_hz must be positive");
    require(shadow_sigma_db >= 0.0, "shadow_sigma_db must be non-negative");
    require(assoc_threshold > 0.0 && assoc_threshold <= 1.0, "assoc_threshold must lie in (0, 1]");
    require(strong_threshold > 0.0 && strong_threshold <= 1.0,
            "strong_threshold must lie in (0, 1]");
    require(tx_power_mw > 0.0, "tx_power_mw must be positive");
    require(pl.min_distance_m > 0.0, "min_distance_m must be positive");
    require(pl.d0_m > 0.0 && pl.d0_m <= pl.d1_m, "path-loss breakpoints need 0 < d0 <= d1");
}

bool AssociationMap::serves(ApIndex m, UeIndex t) const
{
    const auto& aps = serving_aps.at(t);
    return std::find(aps.begin(), aps.end(), m) != aps.end();
}

double path_loss_db(double distance_m, const PathLossParams& p)
{
    const double d = std::max(distance_m, p.min_distance_m);
    const double log_d1 = std::log10(p.d1_m / 1000.0);
    if (d > p.d1_m)
        return p.reference_loss_db + 10.0 * p.exponent_far * std::log10(d / 1000.0);
    const double mid_offset = p.reference_loss_db + 10.0 * (p.exponent_far - p.exponent_mid) * log_d1;
    const double d_eff = std::max(d, p.d0_m);
    return mid_offset + 10.0 * p.exponent_mid * std::log10(d_eff / 1000.0);
}

double compute_lsfc(double distance_m, double shadow_db, const PathLossParams& params)
{
    return std::pow(10.0, (-path_loss_db(distance_m, params) + shadow_db) / 10.0);
}

double ap_ue_distance(const Point2& a, const Point2& b, double side_m, bool wrap_around)
{
    double dx = std::abs(a.x - b.x);
    double dy = std::abs(a.y - b.y);
    if (wrap_around) {
        dx = std::min(dx, side_m - dx);
        dy = std::min(dy, side_m - dy);
    }
    return std::hypot(dx, dy);
}

NetworkRealization generate_drop(const NetworkConfig& config, std::uint64_t seed)
{
    config.validate();

    NetworkRealization real;
    real.seed = seed;
    real.ap_positions.resize(config.num_aps);
    real.ue_positions.resize(config.num_ues);
    real.beta.resize(static_cast<Eigen::Index>(config.num_aps),
                     static_cast<Eigen::Index>(config.num_ues));

    std::uniform_real_distribution<double> coord(0.0, config.area_side_m);

    Engine ap_engine = make_engine(derive_seed(seed, {tag(StreamTag::ApPosition)}));
    for (auto& pos : real.ap_positions) {
        pos.x = coord(ap_engine);
        pos.y = coord(ap_engine);
    }

    std::normal_distribution<double> shadow(0.0, config.shadow_sigma_db);
    for (UeIndex t = 0; t < config.num_ues; ++t) {
        Engine ue_engine = make_engine(derive_seed(seed, {tag(StreamTag::UePosition), t}));
        Point2& pos = real.ue_positions[t];
        pos.x = coord(ue_engine);
        pos.y = coord(ue_engine);
        for (ApIndex m = 0; m < config.num_aps; ++m) {
            // Always consume the draw so the stream layout is distance-independent.
            const double z = config.shadow_sigma_db > 0.0 ? shadow(ue_engine) : 0.0;
            const double d = ap_ue_distance(real.ap_positions[m], pos, config.area_side_m,
                                            config.wrap_around);
            const double shadow_db = d > config.pathloss.d1_m ? z : 0.0;
            real.beta(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(t)) =
                compute_lsfc(d, shadow_db, config.pathloss);
        }
    }
    return real;
}

double noise_power_dbm(double bandwidth_hz, double noise_figure_db)
{
    return -174.0 + 10.0 * std::log10(bandwidth_hz) + noise_figure_db;
}

PowerProfile normalize_powers(const NetworkConfig& config)
{
    if (!(config.tx_power_mw > 0.0))
        throw std::invalid_argument("normalize_powers: tx_power_mw must be positive");
    const double tx_dbm = 10.0 * std::log10(config.tx_power_mw);
    const double snr_db = tx_dbm - noise_power_dbm(config.bandwidth_hz, config.noise_figure_db);
    const double snr = std::pow(10.0, snr_db / 10.0);
    const auto n = static_cast<Eigen::Index>(config.num_ues);
    return PowerProfile{Eigen::VectorXd::Constant(n, snr), Eigen::VectorXd::Constant(n, snr)};
}

std::size_t smallest_prefix(std::span<const double> sorted_desc, double fraction)
{
    if (fraction >= 1.0 || sorted_desc.empty())
        return sorted_desc.size();
    const double total = std::accumulate(sorted_desc.begin(), sorted_desc.end(), 0.0);
    const double target = fraction * total;
    double running = 0.0;
    for (std::size_t k = 0; k < sorted_desc.size(); ++k) {
        running += sorted_desc[k];
        if (running >= target)
            return k + 1;
    }
    return sorted_desc.size();
}

std::vector<std::vector<ApIndex>> associate_aps(const NetworkRealization& real, double beta_th)
{
    if (!(beta_th > 0.0 && beta_th <= 1.0))
        throw std::invalid_argument("associate_aps: beta_th must lie in (0, 1]");

    const std::size_t M = real.num_aps();
    std::vector<std::vector<ApIndex>> serving(real.num_ues());
    std::vector<double> sorted(M);
    for (UeIndex t = 0; t < real.num_ues(); ++t) {
        const auto col = real.beta.col(static_cast<Eigen::Index>(t));
        auto order = order_descending(M, [&](std::size_t m) { return col(static_cast<Eigen::Index>(m)); });
        for (std::size_t k = 0; k < M; ++k)
            sorted[k] = col(static_cast<Eigen::Index>(order[k]));
        order.resize(smallest_prefix(sorted, beta_th));
        serving[t] = std::move(order);
    }
    return serving;
}

AssociationMap build_association(const NetworkRealization& real, double beta_th)
{
    AssociationMap assoc;
    assoc.serving_aps = associate_aps(real, beta_th);
    assoc.served_ues.resize(real.num_aps());
    for (UeIndex t = 0; t < real.num_ues(); ++t)
        for (ApIndex m : assoc.serving_aps[t])
            assoc.served_ues[m].push_back(t);
    assoc.strong_ues.resize(real.num_aps());
    assoc.strong_pilot_count.assign(real.num_aps(), 0);
    assoc.strong_flags.assign(real.num_aps() * real.num_ues(), 0);
    return assoc;
}

AssociationMap group_strong_ues(const NetworkRealization& real, const AssociationMap& assoc,
                                double nu_strong, const PilotAssignment& assignment,
                                std::size_t antennas)
{
    if (!(nu_strong > 0.0 && nu_strong <= 1.0))
        throw std::invalid_argument("group_strong_ues: nu_strong must lie in (0, 1]");

    AssociationMap out = assoc;
    const std::size_t M = real.num_aps();
    out.strong_ues.assign(M, {});
    out.strong_pilot_count.assign(M, 0);
    out.strong_flags.assign(M * real.num_ues(), 0);

    std::vector<double> sorted;
    for (ApIndex m = 0; m < M; ++m) {
        const auto& served = assoc.served_ues[m];
        const auto row = real.beta.row(static_cast<Eigen::Index>(m));
        auto order = order_descending(served.size(), [&](std::size_t k) {
            return row(static_cast<Eigen::Index>(served[k]));
        });
        sorted.resize(served.size());
        for (std::size_t k = 0; k < served.size(); ++k)
            sorted[k] = row(static_cast<Eigen::Index>(served[order[k]]));
        const std::size_t n_strong = smallest_prefix(sorted, nu_strong);

        std::unordered_set<PilotIndex> pilots;
        auto& strong = out.strong_ues[m];
        for (std::size_t k = 0; k < n_strong; ++k) {
            const UeIndex t = served[order[k]];
            if (!assignment.is_assigned(t))
                throw std::invalid_argument("group_strong_ues: served UE has no pilot");
            strong.push_back(t);
            out.strong_flags[t * M + m] = 1;
            pilots.insert(assignment.pilot_of(t));
        }
        out.strong_pilot_count[m] = pilots.size();
        if (out.strong_pilot_count[m] >= antennas)
            throw std::logic_error("group_strong_ues: L_S >= antennas leaves no PFZF array gain");
    }
    return out;
}

} // namespace dmimo
