#include "dmimo/performance.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dmimo {

namespace {

inline Eigen::Index ix(std::size_t i) { return static_cast<Eigen::Index>(i); }

// Per-AP received-power sums used by every D_m:
//   strong_residual_m = sum_{k in S_m} p_k (beta_mk - gamma_mk)
//   strong_beta_m     = sum_{k in S_m} p_k beta_mk
//   weak_beta_m       = sum_{k not in S_m} p_k beta_mk
struct ApPowerSums {
    Eigen::VectorXd strong_residual;
    Eigen::VectorXd strong_beta;
    Eigen::VectorXd weak_beta;
};

ApPowerSums ap_power_sums(const ApUeMatrix& beta, const EstimationQuality& quality,
                          const PowerProfile& powers, const AssociationMap& assoc)
{
    const auto M = beta.rows();
    const auto T = beta.cols();
    ApPowerSums s{Eigen::VectorXd::Zero(M), Eigen::VectorXd::Zero(M), Eigen::VectorXd::Zero(M)};
    for (Eigen::Index m = 0; m < M; ++m) {
        for (Eigen::Index k = 0; k < T; ++k) {
            const double p = powers.p_uplink(k);
            if (assoc.is_strong(static_cast<ApIndex>(m), static_cast<UeIndex>(k))) {
                s.strong_residual(m) += p * (beta(m, k) - quality.gamma(m, k));
                s.strong_beta(m) += p * beta(m, k);
            } else {
                s.weak_beta(m) += p * beta(m, k);
            }
        }
    }
    return s;
}

LinkTerms link_terms_from_sums(UeIndex t, const EstimationQuality& quality,
                               const PowerProfile& powers, const AssociationMap& assoc,
                               const PilotAssignment& assignment, std::size_t antennas,
                               const ApPowerSums& sums)
{
    LinkTerms terms;
    terms.aps = assoc.serving_aps.at(t);
    terms.power = powers.p_uplink(ix(t));

    std::vector<UeIndex> others;
    for (UeIndex k : assignment.copilots(assignment.pilot_of(t)))
        if (k != t)
            others.push_back(k);

    const auto n = ix(terms.aps.size());
    terms.signal.resize(n);
    terms.diagonal.resize(n);
    terms.copilot.resize(n, ix(others.size()));
    terms.copilot_power.resize(ix(others.size()));
    for (std::size_t j = 0; j < others.size(); ++j)
        terms.copilot_power(ix(j)) = powers.p_uplink(ix(others[j]));

    for (Eigen::Index r = 0; r < n; ++r) {
        const ApIndex m = terms.aps[static_cast<std::size_t>(r)];
        const bool strong = assoc.is_strong(m, t);
        const double gain = static_cast<double>(antennas) -
                            (strong ? static_cast<double>(assoc.strong_pilot_count[m]) : 0.0);
        terms.signal(r) = std::sqrt(gain * quality.gamma(ix(m), ix(t)));
        for (std::size_t j = 0; j < others.size(); ++j)
            terms.copilot(r, ix(j)) = std::sqrt(gain * quality.gamma(ix(m), ix(others[j])));
        const double interference = strong ? sums.strong_residual(ix(m)) + sums.weak_beta(ix(m))
                                           : sums.strong_beta(ix(m)) + sums.weak_beta(ix(m));
        terms.diagonal(r) = interference + 1.0;
    }
    return terms;
}

} // namespace

LinkTerms build_link_terms(UeIndex t, const ApUeMatrix& beta, const EstimationQuality& quality,
                           const PowerProfile& powers, const AssociationMap& assoc,
                           const PilotAssignment& assignment, std::size_t antennas)
{
    return link_terms_from_sums(t, quality, powers, assoc, assignment, antennas,
                                ap_power_sums(beta, quality, powers, assoc));
}

Eigen::VectorXd compute_lsfd(const LinkTerms& terms, LsfdMode mode)
{
    const auto n = terms.signal.size();
    if (n == 0)
        throw std::invalid_argument("compute_lsfd: UE has no serving AP");

    Eigen::VectorXd a;
    if (mode == LsfdMode::Equal) {
        a = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    } else {
        if ((terms.diagonal.array() <= 0.0).any())
            throw std::runtime_error("compute_lsfd: nonpositive diagonal in LSFD system");
        Eigen::MatrixXd R = terms.copilot * terms.copilot_power.asDiagonal() *
                            terms.copilot.transpose();
        R.diagonal() += terms.diagonal;
        Eigen::LLT<Eigen::MatrixXd> llt(R);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("compute_lsfd: LSFD system is not positive definite");
        a = llt.solve(terms.signal);
    }
    return a / a.norm();
}

double sinr_pfzf(const LinkTerms& terms, const Eigen::VectorXd& a)
{
    const double coherent = a.dot(terms.signal);
    const double signal = terms.power * coherent * coherent;
    const Eigen::VectorXd leak = terms.copilot.transpose() * a;
    const double interference = (terms.copilot_power.array() * leak.array().square()).sum() +
                                (a.array().square() * terms.diagonal.array()).sum();
    if (!(interference > 0.0))
        return 0.0;
    return signal / interference;
}

LsfdWeights lsfd_weights(const ApUeMatrix& beta, const EstimationQuality& quality,
                         const PowerProfile& powers, const AssociationMap& assoc,
                         const PilotAssignment& assignment, std::size_t antennas, LsfdMode mode)
{
    const ApPowerSums sums = ap_power_sums(beta, quality, powers, assoc);
    LsfdWeights w{ApUeMatrix::Zero(beta.rows(), beta.cols())};
    for (UeIndex t = 0; t < static_cast<UeIndex>(beta.cols()); ++t) {
        const LinkTerms terms =
            link_terms_from_sums(t, quality, powers, assoc, assignment, antennas, sums);
        const Eigen::VectorXd a = compute_lsfd(terms, mode);
        for (std::size_t r = 0; r < terms.aps.size(); ++r)
            w.a(ix(terms.aps[r]), ix(t)) = a(ix(r));
    }
    return w;
}

double sinr_pfzf(UeIndex t, const LsfdWeights& weights, const ApUeMatrix& beta,
                 const EstimationQuality& quality, const PowerProfile& powers,
                 const AssociationMap& assoc, const PilotAssignment& assignment,
                 std::size_t antennas)
{
    const LinkTerms terms = build_link_terms(t, beta, quality, powers, assoc, assignment, antennas);
    Eigen::VectorXd a(ix(terms.aps.size()));
    for (std::size_t r = 0; r < terms.aps.size(); ++r)
        a(ix(r)) = weights.a(ix(terms.aps[r]), ix(t));
    return sinr_pfzf(terms, a);
}

double uplink_prelog(std::size_t coherence_block, std::size_t pilot_length)
{
    // (Lc - Lp) / (2 Lc) in one rounding step.
    return static_cast<double>(coherence_block - pilot_length) /
           static_cast<double>(2 * coherence_block);
}

double se_uplink(double sinr, std::size_t coherence_block, std::size_t pilot_length)
{
    return uplink_prelog(coherence_block, pilot_length) * std::log2(1.0 + sinr);
}

double sorted_quantile(const std::vector<double>& sorted, double q)
{
    if (sorted.empty())
        throw std::invalid_argument("sorted_quantile: empty sample");
    q = std::clamp(q, 0.0, 1.0);
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double SeReport::percentile(double q) const
{
    return sorted_quantile(sorted_se, q);
}

SeReport evaluate(const NetworkRealization& real, const AssociationMap& assoc,
                  const PilotAssignment& assignment, const PowerProfile& powers,
                  const NetworkConfig& config, LsfdMode mode)
{
    const EstimationQuality quality =
        compute_gamma(real.beta, powers, config.pilot_length, assignment);
    const AssociationMap grouped = group_strong_ues(real, assoc, config.strong_threshold,
                                                    assignment, config.antennas_per_ap);
    const ApPowerSums sums = ap_power_sums(real.beta, quality, powers, grouped);

    SeReport report;
    const std::size_t T = real.num_ues();
    report.sinr.resize(T);
    report.se.resize(T);
    for (UeIndex t = 0; t < T; ++t) {
        const LinkTerms terms = link_terms_from_sums(t, quality, powers, grouped,
                                                     assignment, config.antennas_per_ap, sums);
        const double sinr = sinr_pfzf(terms, compute_lsfd(terms, mode));
        report.sinr[t] = sinr;
        report.se[t] = se_uplink(sinr, config.coherence_block, config.pilot_length);
        report.sum_se += report.se[t];
    }
    report.sorted_se = report.se;
    std::sort(report.sorted_se.begin(), report.sorted_se.end());
    return report;
}

} // namespace dmimo
