#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "dmimo/network_model.hpp"
#include "oracles.hpp"

using namespace dmimo;

namespace {

NetworkConfig small_config(std::size_t M, std::size_t T)
{
    NetworkConfig c;
    c.num_aps = M;
    c.num_ues = T;
    return c;
}

// Realization with a hand-written beta matrix; positions unused.
NetworkRealization with_beta(const Eigen::MatrixXd& beta)
{
    NetworkRealization r;
    r.ap_positions.resize(static_cast<std::size_t>(beta.rows()));
    r.ue_positions.resize(static_cast<std::size_t>(beta.cols()));
    r.beta = beta;
    return r;
}

} // namespace

TEST_CASE("path loss: frozen value at 500 m")
{
    // 140.7 + 35 log10(0.5), evaluated independently.
    CHECK(path_loss_db(500.0, PathLossParams{}) == doctest::Approx(130.16395015176064).epsilon(1e-14));
    CHECK(compute_lsfc(500.0, 0.0, PathLossParams{}) ==
          doctest::Approx(9.62952765661948e-14).epsilon(1e-12));
}

TEST_CASE("path loss: matches the independent three-slope oracle")
{
    for (double d : {0.0, 0.5, 1.0, 5.0, 10.0, 10.5, 30.0, 49.99, 50.0, 50.01, 120.0, 500.0, 1414.0})
        CHECK(-path_loss_db(d, PathLossParams{}) ==
              doctest::Approx(oracle::path_gain_db_default(d)).epsilon(1e-13));
}

TEST_CASE("path loss: continuity at breakpoints and slope beyond d1")
{
    const PathLossParams p;
    const double eps = 1e-9;
    CHECK(path_loss_db(p.d1_m - eps, p) == doctest::Approx(path_loss_db(p.d1_m + eps, p)).epsilon(1e-9));
    CHECK(path_loss_db(p.d0_m - eps, p) == doctest::Approx(path_loss_db(p.d0_m + eps, p)).epsilon(1e-9));

    // 10 * 3.5 * log10(2)
    CHECK(path_loss_db(200.0, p) - path_loss_db(100.0, p) == doctest::Approx(10.536049848239342));
    CHECK(path_loss_db(1.0, p) == path_loss_db(7.0, p));  // flat inside d0
    CHECK(path_loss_db(0.0, p) == path_loss_db(1.0, p));  // clamp at 1 m
}

TEST_CASE("compute_lsfc: dB shadow offset")
{
    const PathLossParams p;
    CHECK(compute_lsfc(300.0, 8.0, p) / compute_lsfc(300.0, 0.0, p) ==
          doctest::Approx(std::pow(10.0, 0.8)).epsilon(1e-13));
}

TEST_CASE("generate_drop: minimal instance and determinism")
{
    const NetworkRealization one = generate_drop(small_config(1, 1), 5);
    REQUIRE(one.beta.rows() == 1);
    REQUIRE(one.beta.cols() == 1);
    CHECK(one.beta(0, 0) > 0.0);

    const NetworkConfig c = small_config(20, 15);
    const NetworkRealization a = generate_drop(c, 42);
    const NetworkRealization b = generate_drop(c, 42);
    CHECK(a.ap_positions == b.ap_positions);
    CHECK(a.ue_positions == b.ue_positions);
    CHECK(a.beta == b.beta);  // bit-identical

    const NetworkRealization other = generate_drop(c, 43);
    CHECK_FALSE(a.beta == other.beta);
}

TEST_CASE("generate_drop: adding UEs keeps earlier UEs unchanged")
{
    NetworkConfig c = small_config(12, 10);
    const NetworkRealization base = generate_drop(c, 99);
    c.num_ues = 15;
    const NetworkRealization more = generate_drop(c, 99);
    CHECK(base.ap_positions == more.ap_positions);
    for (std::size_t t = 0; t < 10; ++t) {
        CHECK(base.ue_positions[t] == more.ue_positions[t]);
        CHECK(base.beta.col(static_cast<Eigen::Index>(t)) == more.beta.col(static_cast<Eigen::Index>(t)));
    }
}

TEST_CASE("generate_drop: without shadowing every beta equals the path-loss formula")
{
    NetworkConfig c = small_config(100, 100);
    c.shadow_sigma_db = 0.0;
    const NetworkRealization r = generate_drop(c, 7);
    double worst = 0.0;
    for (std::size_t m = 0; m < 100; ++m)
        for (std::size_t t = 0; t < 100; ++t) {
            const double d = std::hypot(r.ap_positions[m].x - r.ue_positions[t].x,
                                        r.ap_positions[m].y - r.ue_positions[t].y);
            const double expected = std::pow(10.0, oracle::path_gain_db_default(d) / 10.0);
            worst = std::max(worst, std::abs(r.beta(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(t)) / expected - 1.0));
        }
    CHECK(worst < 1e-12);
}

TEST_CASE("generate_drop: shadowing statistics at fixed distance")
{
    // Median of beta over shadow draws at the same distance equals the
    // path-loss-only value; the log-spread equals sigma.
    NetworkConfig c = small_config(1, 4000);
    c.area_side_m = 1000.0;
    const NetworkRealization r = generate_drop(c, 7);
    std::vector<double> shadow_db;
    for (std::size_t t = 0; t < 4000; ++t) {
        const double d = std::hypot(r.ap_positions[0].x - r.ue_positions[t].x,
                                    r.ap_positions[0].y - r.ue_positions[t].y);
        if (d <= c.pathloss.d1_m)
            continue;
        shadow_db.push_back(10.0 * std::log10(r.beta(0, static_cast<Eigen::Index>(t))) -
                            oracle::path_gain_db_default(d));
    }
    std::sort(shadow_db.begin(), shadow_db.end());
    const double median = shadow_db[shadow_db.size() / 2];
    double var = 0.0;
    for (double s : shadow_db)
        var += s * s;
    const double sigma = std::sqrt(var / static_cast<double>(shadow_db.size()));
    CHECK(std::abs(median) < 0.5);
    CHECK(sigma == doctest::Approx(8.0).epsilon(0.05));
}

TEST_CASE("generate_drop: beta positive and finite over many drops")
{
    const NetworkConfig c = small_config(10, 10);
    bool ok = true;
    for (std::uint64_t seed = 0; seed < 10000 && ok; ++seed) {
        const NetworkRealization r = generate_drop(c, seed);
        ok = (r.beta.array() > 0.0).all() && r.beta.allFinite();
    }
    CHECK(ok);
}

TEST_CASE("generate_drop: rejects invalid configs")
{
    NetworkConfig c = small_config(4, 4);
    c.antennas_per_ap = c.pilot_length;
    CHECK_THROWS_AS(generate_drop(c, 1), std::invalid_argument);

    c = small_config(4, 4);
    c.area_side_m = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(generate_drop(c, 1), std::invalid_argument);

    c = small_config(4, 4);
    c.tx_power_mw = std::nan("");
    CHECK_THROWS_AS(generate_drop(c, 1), std::invalid_argument);

    c = small_config(4, 4);
    c.assoc_threshold = 0.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("wrap-around distance takes the shorter way around")
{
    CHECK(ap_ue_distance({10, 10}, {990, 10}, 1000, false) == doctest::Approx(980));
    CHECK(ap_ue_distance({10, 10}, {990, 10}, 1000, true) == doctest::Approx(20));
    CHECK(ap_ue_distance({10, 990}, {990, 10}, 1000, true) == doctest::Approx(std::hypot(20, 20)));
}

TEST_CASE("normalize_powers")
{
    NetworkConfig c;
    CHECK(noise_power_dbm(20e6, 9.0) == doctest::Approx(-91.98970004336019).epsilon(1e-14));
    const PowerProfile p = normalize_powers(c);
    CHECK(p.p_pilot.size() == static_cast<Eigen::Index>(c.num_ues));
    CHECK(p.p_pilot(0) == doctest::Approx(158113883008.41895).epsilon(1e-12));
    CHECK(p.p_uplink(3) == p.p_pilot(3));

    NetworkConfig doubled = c;
    doubled.tx_power_mw *= 2.0;
    CHECK(normalize_powers(doubled).p_pilot(0) == doctest::Approx(2.0 * p.p_pilot(0)).epsilon(1e-13));

    NetworkConfig wide = c;
    wide.bandwidth_hz *= 4.0;
    CHECK(normalize_powers(wide).p_uplink(0) == doctest::Approx(p.p_uplink(0) / 4.0).epsilon(1e-13));
}

TEST_CASE("associate_aps: rule examples")
{
    Eigen::MatrixXd beta(3, 1);
    beta << 0.3, 0.5, 0.2;
    const NetworkRealization r = with_beta(beta);
    CHECK(associate_aps(r, 0.7)[0] == std::vector<ApIndex>{1, 0});
    CHECK(associate_aps(r, 1.0)[0] == std::vector<ApIndex>{1, 0, 2});
    CHECK(associate_aps(r, 0.5)[0] == std::vector<ApIndex>{1});
}

TEST_CASE("associate_aps: full threshold keeps APs with negligible beta")
{
    Eigen::MatrixXd beta(2, 1);
    beta << 1e-5, 1e-25;
    CHECK(associate_aps(with_beta(beta), 1.0)[0].size() == 2);
}

TEST_CASE("associate_aps: agrees with brute-force prefix search; prefix and monotone properties")
{
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> exp10(-14.0, -8.0);
    for (int trial = 0; trial < 300; ++trial) {
        Eigen::MatrixXd beta(10, 3);
        for (Eigen::Index i = 0; i < beta.size(); ++i)
            beta.data()[i] = std::pow(10.0, exp10(rng));
        const NetworkRealization r = with_beta(beta);
        const auto m95 = associate_aps(r, 0.95);
        const auto m80 = associate_aps(r, 0.80);
        for (std::size_t t = 0; t < 3; ++t) {
            std::vector<double> col(10);
            for (int m = 0; m < 10; ++m)
                col[static_cast<std::size_t>(m)] = beta(m, static_cast<Eigen::Index>(t));
            CHECK(m95[t].size() == oracle::brute_force_prefix(col, 0.95));

            // Prefix: every serving AP is at least as strong as every non-serving AP.
            double weakest_in = std::numeric_limits<double>::infinity();
            for (ApIndex m : m95[t])
                weakest_in = std::min(weakest_in, beta(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(t)));
            for (ApIndex m = 0; m < 10; ++m)
                if (std::find(m95[t].begin(), m95[t].end(), m) == m95[t].end())
                    CHECK(beta(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(t)) <= weakest_in);

            // Monotone in the threshold.
            for (ApIndex m : m80[t])
                CHECK(std::find(m95[t].begin(), m95[t].end(), m) != m95[t].end());
        }
    }
}

TEST_CASE("build_association: T_m and M_t mirror each other")
{
    const NetworkRealization r = generate_drop(small_config(15, 20), 3);
    const AssociationMap a = build_association(r, 0.9);
    for (UeIndex t = 0; t < 20; ++t)
        for (ApIndex m = 0; m < 15; ++m) {
            const bool in_served = std::find(a.served_ues[m].begin(), a.served_ues[m].end(), t) !=
                                   a.served_ues[m].end();
            CHECK(in_served == a.serves(m, t));
        }
}

TEST_CASE("group_strong_ues: boundaries and distinct-pilot count")
{
    // One AP, five served UEs on pilots {0, 1, 0, 2, 1}.
    Eigen::MatrixXd beta(1, 5);
    beta << 0.9, 0.8, 0.7, 0.6, 0.5;
    const NetworkRealization r = with_beta(beta);
    const AssociationMap assoc = build_association(r, 1.0);
    PilotAssignment pa(5, 3);
    const PilotIndex pilots[] = {0, 1, 0, 2, 1};
    for (UeIndex t = 0; t < 5; ++t)
        pa.assign(t, pilots[t]);

    const AssociationMap all = group_strong_ues(r, assoc, 1.0, pa, 8);
    CHECK(all.strong_ues[0].size() == 5);
    CHECK(all.strong_pilot_count[0] == 3);
    for (UeIndex t = 0; t < 5; ++t)
        CHECK(all.is_strong(0, t));

    // 0.9 + 0.8 = 1.7 >= 0.4 * 3.5 = 1.4, while 0.9 alone is not.
    const AssociationMap some = group_strong_ues(r, assoc, 0.4, pa, 8);
    CHECK(some.strong_ues[0] == std::vector<UeIndex>{0, 1});
    CHECK(some.strong_pilot_count[0] == 2);
    CHECK_FALSE(some.is_strong(0, 2));

    CHECK_THROWS_AS(group_strong_ues(r, assoc, 1.0, pa, 3), std::logic_error);
}

TEST_CASE("group_strong_ues: singleton and L_S bound on random drops")
{
    Eigen::MatrixXd beta(1, 1);
    beta << 1e-9;
    const NetworkRealization one = with_beta(beta);
    PilotAssignment pa1(1, 2);
    pa1.assign(0, 1);
    const AssociationMap g1 = group_strong_ues(one, build_association(one, 0.95), 0.5, pa1, 4);
    CHECK(g1.strong_ues[0] == std::vector<UeIndex>{0});
    CHECK(g1.strong_pilot_count[0] == 1);

    std::mt19937_64 rng(5);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const NetworkRealization r = generate_drop(small_config(12, 25), seed);
        const AssociationMap a = build_association(r, 0.95);
        PilotAssignment pa(25, 7);
        for (UeIndex t = 0; t < 25; ++t)
            pa.assign(t, rng() % 7);
        const AssociationMap g = group_strong_ues(r, a, 0.95, pa, 8);
        for (ApIndex m = 0; m < 12; ++m) {
            CHECK(g.strong_pilot_count[m] <= std::min<std::size_t>(g.strong_ues[m].size(), 7));
            for (UeIndex t : g.strong_ues[m])
                CHECK(a.serves(m, t));
        }
    }
}
