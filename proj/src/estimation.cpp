#include "dmimo/estimation.hpp"

#include <stdexcept>

namespace dmimo {

namespace {

inline double at(const ApUeMatrix& beta, ApIndex m, UeIndex t)
{
    return beta(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(t));
}

inline double p_of(const Eigen::VectorXd& p, UeIndex t)
{
    return p(static_cast<Eigen::Index>(t));
}

} // namespace

EstimationQuality compute_gamma(const ApUeMatrix& beta, const PowerProfile& powers,
                                std::size_t pilot_length, const PilotAssignment& assignment)
{
    if (!assignment.complete())
        throw std::invalid_argument("compute_gamma: assignment is incomplete");

    const auto Lp = static_cast<double>(pilot_length);
    const std::size_t M = static_cast<std::size_t>(beta.rows());
    const std::size_t T = static_cast<std::size_t>(beta.cols());

    // Received pilot power per (AP, pilot), including every co-pilot UE.
    Eigen::MatrixXd load = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(M),
                                                 static_cast<Eigen::Index>(assignment.num_pilots()));
    for (PilotIndex i = 0; i < assignment.num_pilots(); ++i)
        for (UeIndex k : assignment.copilots(i))
            for (ApIndex m = 0; m < M; ++m)
                load(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i)) +=
                    p_of(powers.p_pilot, k) * Lp * at(beta, m, k);

    EstimationQuality q;
    q.gamma.resize(beta.rows(), beta.cols());
    for (UeIndex t = 0; t < T; ++t) {
        const auto i = static_cast<Eigen::Index>(assignment.pilot_of(t));
        const double pt = p_of(powers.p_pilot, t);
        for (ApIndex m = 0; m < M; ++m) {
            const double b = at(beta, m, t);
            q.gamma(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(t)) =
                pt * Lp * b * b / (load(static_cast<Eigen::Index>(m), i) + 1.0);
        }
    }
    return q;
}

double uncontaminated_gamma(double beta, double p_pilot, std::size_t pilot_length)
{
    const double x = p_pilot * static_cast<double>(pilot_length) * beta;
    return x * beta / (x + 1.0);
}

double pilot_error_term(double x, double beta, double interference)
{
    return x * beta * interference / ((x + 1.0) * (x + interference + 1.0));
}

double estimation_error_global(UeIndex t, PilotIndex pilot, const ApUeMatrix& beta,
                               const PowerProfile& powers, std::size_t pilot_length,
                               const PilotAssignment& assignment,
                               std::span<const ApIndex> serving)
{
    const auto Lp = static_cast<double>(pilot_length);
    const double pt = p_of(powers.p_pilot, t);
    double total = 0.0;
    for (ApIndex m : serving) {
        double interference = 0.0;
        for (UeIndex k : assignment.copilots(pilot))
            if (k != t)
                interference += p_of(powers.p_pilot, k) * Lp * at(beta, m, k);
        const double b = at(beta, m, t);
        total += pilot_error_term(pt * Lp * b, b, interference);
    }
    return total;
}

double estimation_error_local(UeIndex t, ApIndex m, const ApUeMatrix& beta,
                              const PowerProfile& powers, std::size_t pilot_length,
                              std::span<const UeIndex> served_copilots)
{
    const auto Lp = static_cast<double>(pilot_length);
    double interference = 0.0;
    for (UeIndex k : served_copilots)
        if (k != t)
            interference += p_of(powers.p_pilot, k) * Lp * at(beta, m, k);
    const double b = at(beta, m, t);
    return pilot_error_term(p_of(powers.p_pilot, t) * Lp * b, b, interference);
}

ContaminationCache::ContaminationCache(std::size_t num_pilots, std::size_t num_aps)
    : load_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(num_pilots),
                                  static_cast<Eigen::Index>(num_aps)))
{
}

void ContaminationCache::add(PilotIndex i, const ApUeMatrix& beta, UeIndex t, double p_pilot,
                             std::size_t pilot_length)
{
    const double scale = p_pilot * static_cast<double>(pilot_length);
    load_.row(static_cast<Eigen::Index>(i)) +=
        scale * beta.col(static_cast<Eigen::Index>(t)).transpose();
}

double estimation_error_cached(UeIndex t, PilotIndex pilot, const ApUeMatrix& beta,
                               const PowerProfile& powers, std::size_t pilot_length,
                               const ContaminationCache& cache,
                               std::span<const ApIndex> serving)
{
    const auto Lp = static_cast<double>(pilot_length);
    const double pt = p_of(powers.p_pilot, t);
    double total = 0.0;
    for (ApIndex m : serving) {
        const double b = at(beta, m, t);
        total += pilot_error_term(pt * Lp * b, b, cache.read(pilot, m));
    }
    return total;
}

} // namespace dmimo
