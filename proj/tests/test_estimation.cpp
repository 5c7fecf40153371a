#include <random>
#include <vector>

#include "doctest.h"
#include "dmimo/estimation.hpp"
#include "oracles.hpp"

using namespace dmimo;

namespace {

PowerProfile flat_powers(std::size_t T, double p)
{
    PowerProfile pw;
    pw.p_pilot = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(T), p);
    pw.p_uplink = pw.p_pilot;
    return pw;
}

PilotAssignment make_assignment(const std::vector<PilotIndex>& pilots, std::size_t Lp)
{
    PilotAssignment pa(pilots.size(), Lp);
    for (UeIndex t = 0; t < pilots.size(); ++t)
        if (pilots[t] != kUnassigned)
            pa.assign(t, pilots[t]);
    return pa;
}

} // namespace

TEST_CASE("PilotAssignment bookkeeping")
{
    PilotAssignment pa(4, 2);
    CHECK_FALSE(pa.complete());
    pa.assign(2, 1);
    pa.assign(0, 1);
    pa.assign(1, 0);
    CHECK(std::vector<UeIndex>(pa.copilots(1).begin(), pa.copilots(1).end()) == std::vector<UeIndex>{2, 0});
    CHECK_THROWS(pa.assign(2, 0));
    CHECK_THROWS(pa.assign(3, 2));
    pa.assign(3, 0);
    CHECK(pa.complete());
}

TEST_CASE("compute_gamma: hand examples")
{
    Eigen::MatrixXd beta(1, 1);
    beta << 1.0;
    CHECK(compute_gamma(beta, flat_powers(1, 1.0), 1, make_assignment({0}, 1)).gamma(0, 0) ==
          doctest::Approx(0.5));

    Eigen::MatrixXd two(1, 2);
    two << 1.0, 1.0;
    const auto g = compute_gamma(two, flat_powers(2, 1.0), 1, make_assignment({0, 0}, 1)).gamma;
    CHECK(g(0, 0) == doctest::Approx(1.0 / 3.0));
    CHECK(g(0, 1) == doctest::Approx(1.0 / 3.0));

    CHECK_THROWS_AS(compute_gamma(two, flat_powers(2, 1.0), 1, make_assignment({0, kUnassigned}, 1)),
                    std::invalid_argument);
}

TEST_CASE("compute_gamma: random 3x4 instances match the literal oracle")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.05, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
        Eigen::MatrixXd beta(3, 4);
        for (Eigen::Index i = 0; i < beta.size(); ++i)
            beta.data()[i] = u(rng);
        std::vector<double> p{u(rng), u(rng), u(rng), u(rng)};
        std::vector<PilotIndex> pilots{rng() % 2, rng() % 2, rng() % 2, rng() % 2};
        PowerProfile pw;
        pw.p_pilot = Eigen::Map<Eigen::VectorXd>(p.data(), 4);
        pw.p_uplink = pw.p_pilot;
        const auto g = compute_gamma(beta, pw, 2, make_assignment(pilots, 2)).gamma;
        const auto ref = oracle::gamma(beta, p, 2, pilots);
        CHECK((g - ref).cwiseAbs().maxCoeff() <= 1e-14 * ref.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("compute_gamma: bounds and power scaling")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-13.0, -9.0);
    Eigen::MatrixXd beta(5, 12);
    for (Eigen::Index i = 0; i < beta.size(); ++i)
        beta.data()[i] = std::pow(10.0, u(rng));
    std::vector<PilotIndex> pilots;
    for (int t = 0; t < 12; ++t)
        pilots.push_back(static_cast<PilotIndex>(t % 5));
    const PilotAssignment pa = make_assignment(pilots, 5);
    const PowerProfile pw = flat_powers(12, 1.58e11);
    const auto g = compute_gamma(beta, pw, 5, pa).gamma;
    const auto g10 = compute_gamma(beta, flat_powers(12, 1.58e12), 5, pa).gamma;
    for (Eigen::Index m = 0; m < 5; ++m)
        for (Eigen::Index t = 0; t < 12; ++t) {
            CHECK(g(m, t) > 0.0);
            CHECK(g(m, t) < beta(m, t));
            const double bound = uncontaminated_gamma(beta(m, t), 1.58e11, 5);
            CHECK(g(m, t) < bound);  // every pilot is shared here
            CHECK(g10(m, t) > g(m, t));
            CHECK(g10(m, t) < beta(m, t));
        }
}

TEST_CASE("estimation_error_global: hand examples")
{
    Eigen::MatrixXd beta(1, 3);
    beta << 1.0, 1.0, 1.0;
    const PowerProfile pw = flat_powers(3, 1.0);
    const std::vector<ApIndex> serving{0};

    // Unused pilot: zero error.
    CHECK(estimation_error_global(1, 1, beta, pw, 1, make_assignment({0, kUnassigned, kUnassigned}, 2), serving) == 0.0);

    // One co-pilot, all ones: 1/2 - 1/3.
    const PilotAssignment one = make_assignment({0, kUnassigned, kUnassigned}, 2);
    CHECK(estimation_error_global(1, 0, beta, pw, 1, one, serving) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));

    // A third co-pilot strictly increases the error.
    const PilotAssignment two = make_assignment({0, kUnassigned, 0}, 2);
    CHECK(estimation_error_global(1, 0, beta, pw, 1, two, serving) >
          estimation_error_global(1, 0, beta, pw, 1, one, serving));
    CHECK(estimation_error_global(1, 0, beta, pw, 1, two, serving) == doctest::Approx(0.5 - 0.25));

    // t already holding the pilot does not count against itself.
    const PilotAssignment self = make_assignment({0, 0, kUnassigned}, 2);
    CHECK(estimation_error_global(1, 0, beta, pw, 1, self, serving) == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("estimation errors: local cases and consistency with the global sum")
{
    Eigen::MatrixXd beta(3, 4);
    beta << 0.9, 0.2, 0.4, 0.3,
            0.1, 0.5, 0.6, 0.2,
            0.3, 0.3, 0.2, 0.8;
    const PowerProfile pw = flat_powers(4, 2.0);
    const std::vector<ApIndex> serving{0, 1, 2};
    const PilotAssignment pa = make_assignment({0, 1, 0, kUnassigned}, 2);

    CHECK(estimation_error_local(3, 1, beta, pw, 2, std::span<const UeIndex>{}) == 0.0);

    for (PilotIndex i = 0; i < 2; ++i) {
        const auto cop = pa.copilots(i);
        double local_sum = 0.0;
        for (ApIndex m : serving)
            local_sum += estimation_error_local(3, m, beta, pw, 2, cop);
        const double global = estimation_error_global(3, i, beta, pw, 2, pa, serving);
        CHECK(global == doctest::Approx(local_sum).epsilon(1e-15));
        const std::vector<double> p{2.0, 2.0, 2.0, 2.0};
        CHECK(global == doctest::Approx(oracle::error_two_term(3, {cop.begin(), cop.end()}, beta, p, 2, serving))
                            .epsilon(1e-12));
    }

    // Co-pilot with vanishing beta at the AP.
    Eigen::MatrixXd faint(1, 2);
    faint << 1.0, 1e-12;
    const std::vector<UeIndex> cop{1};
    const double e = estimation_error_local(0, 0, faint, flat_powers(2, 1.0), 1, cop);
    CHECK(e > 0.0);
    CHECK(e < 1e-12);
}

TEST_CASE("estimation errors: nonnegative, monotone, and positive at realistic SNR")
{
    // At p ~ 1.6e11 and beta ~ 1e-10 the two-term difference cancels badly;
    // the error must still be strictly positive for any co-pilot.
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-14.0, -8.0);
    const PowerProfile pw = flat_powers(8, 158113883008.41895);
    int positive = 0;
    int total = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        Eigen::MatrixXd beta(4, 8);
        for (Eigen::Index i = 0; i < beta.size(); ++i)
            beta.data()[i] = std::pow(10.0, u(rng));
        const std::vector<ApIndex> serving{0, 1, 2, 3};
        std::vector<PilotIndex> pilots(8, kUnassigned);
        double previous = 0.0;
        for (UeIndex k = 1; k < 8; ++k) {
            pilots[k] = 0;
            const double e = estimation_error_global(0, 0, beta, pw, 7, make_assignment(pilots, 7), serving);
            CHECK(e >= previous);
            previous = e;
            ++total;
            positive += e > 0.0 ? 1 : 0;
        }
    }
    CHECK(positive == total);
}

TEST_CASE("ContaminationCache agrees with the cache-free error and counts reads")
{
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-13.0, -9.0);
    Eigen::MatrixXd beta(6, 10);
    for (Eigen::Index i = 0; i < beta.size(); ++i)
        beta.data()[i] = std::pow(10.0, u(rng));
    const PowerProfile pw = flat_powers(10, 1e11);
    ContaminationCache cache(3, 6);
    PilotAssignment pa(10, 3);
    for (UeIndex t = 0; t < 9; ++t) {
        const PilotIndex i = rng() % 3;
        pa.assign(t, i);
        cache.add(i, beta, t, 1e11, 3);
    }
    const std::vector<ApIndex> serving{5, 1, 3};
    const std::uint64_t before = cache.reads();
    for (PilotIndex i = 0; i < 3; ++i)
        CHECK(estimation_error_cached(9, i, beta, pw, 3, cache, serving) ==
              doctest::Approx(estimation_error_global(9, i, beta, pw, 3, pa, serving)).epsilon(1e-13));
    CHECK(cache.reads() - before == 9);
}
