#include <cmath>
#include <vector>

#include "cwhyst/chain.hpp"
#include "cwhyst/model.hpp"
#include "doctest.h"

using namespace cwhyst;

namespace {

// Stationary weights of the magnetization chain at frozen field by direct
// enumeration: mu(k) proportional to C(N,k) exp(beta N (m^2/2 + h m)).
std::vector<double> stationary_weights(double beta, double h, long long N) {
    std::vector<double> w(static_cast<std::size_t>(N) + 1);
    double norm = 0.0;
    for (long long k = 0; k <= N; ++k) {
        double log_binom = std::lgamma(N + 1.0) - std::lgamma(k + 1.0) - std::lgamma(N - k + 1.0);
        const double m = (2.0 * k - N) / static_cast<double>(N);
        w[static_cast<std::size_t>(k)] = std::exp(log_binom + beta * N * (0.5 * m * m + h * m));
        norm += w[static_cast<std::size_t>(k)];
    }
    for (auto& x : w) x /= norm;
    return w;
}

}  // namespace

TEST_SUITE("chain") {

TEST_CASE("rates vanish at the lattice boundary") {
    const ModelParams p = make_params(2.0);
    CHECK(rates(p, 50, 1.0, 0.3).c_plus == 0.0);
    CHECK(rates(p, 50, -1.0, 0.3).c_minus == 0.0);
    CHECK(rates(p, 50, 1.0, 0.3).c_minus > 0.0);
}

TEST_CASE("rates at the symmetric point") {
    const ModelParams p = make_params(2.0);
    const Rates r = rates(p, 100, 0.0, 0.0);
    const double x = p.beta * 0.01;
    const double chat = std::exp(x) / (std::exp(-x) + std::exp(x));
    CHECK(r.c_plus == doctest::Approx(50.0 * chat).epsilon(1e-14));
    CHECK(r.c_plus == doctest::Approx(r.c_minus).epsilon(1e-14));
}

TEST_CASE("off-lattice magnetization is rejected") {
    const ModelParams p = make_params(2.0);
    CHECK_THROWS_AS(rates(p, 100, 0.013, 0.0), DomainError);
    CHECK_NOTHROW(rates(p, 100, 0.02, 0.0));
}

TEST_CASE("exact detailed balance against the enumerated measure") {
    const ModelParams p = make_params(2.0);
    for (long long N : {2LL, 3LL}) {
        for (double h : {0.0, 0.1, -0.23}) {
            const std::vector<double> mu = stationary_weights(p.beta, h, N);
            for (long long k = 0; k < N; ++k) {
                const double m = (2.0 * k - N) / static_cast<double>(N);
                const double m1 = (2.0 * (k + 1) - N) / static_cast<double>(N);
                const double up = rates(p, N, m, h).c_plus * mu[static_cast<std::size_t>(k)];
                const double dn = rates(p, N, m1, h).c_minus * mu[static_cast<std::size_t>(k) + 1];
                CHECK(std::abs(up - dn) <= 1e-12 * std::max(up, dn));
            }
        }
    }
}

TEST_CASE("drift and variance finite-size scaling") {
    const ModelParams p = make_params(2.0);
    double worst_f_prev = -1.0, worst_g_prev = -1.0;
    for (long long N : {100LL, 1000LL, 10000LL}) {
        double worst_f = 0.0, worst_g = 0.0;
        for (int i = -9; i <= 9; ++i) {
            const double m = 2.0 * std::llround(0.1 * i * N / 2.0) / static_cast<double>(N);
            for (double h : {-p.h_c, -0.1, 0.0, 0.1, p.h_c}) {
                const double f_err = std::abs(drift_FN(p, N, m, h) - drift_F(p, m, h));
                const double g_err =
                    std::abs(N * var_GN(p, N, m, h) - 2.0 * lambda_factor(p, m, h));
                worst_f = std::max(worst_f, N * f_err);
                worst_g = std::max(worst_g, N * g_err);
            }
        }
        // N * error stays bounded uniformly in N
        CHECK(worst_f < 10.0);
        CHECK(worst_g < 10.0);
        if (worst_f_prev > 0.0) {
            CHECK(worst_f < 1.5 * worst_f_prev + 0.1);
            CHECK(worst_g < 1.5 * worst_g_prev + 0.1);
        }
        worst_f_prev = worst_f;
        worst_g_prev = worst_g;
    }
}

TEST_CASE("F_N at the symmetric point") {
    const ModelParams p = make_params(2.0);
    // the +-1/N shifts in the rates cancel exactly at m = h = 0 (the same
    // structure that makes detailed balance exact), so F_N vanishes there
    const double f = drift_FN(p, 100, 0.0, 0.0);
    CHECK(f == 0.0);
    const Rates r = rates(p, 100, 0.0, 0.0);
    CHECK(f == 2.0 / 100.0 * (r.c_plus - r.c_minus));
    // off the symmetric point the drift is small but nonzero
    CHECK(drift_FN(p, 100, 0.0, 0.01) > 0.0);
    CHECK(std::abs(drift_FN(p, 100, 0.02, 0.0) - drift_F(p, 0.02, 0.0)) < 2.0 * p.beta / 100.0);
}

TEST_CASE("zero-duration simulation has no events") {
    const ModelParams p = make_params(2.0);
    rng::Stream s(1, 0);
    const ChainTrajectory traj = simulate(p, 100, [](double) { return 0.0; }, 2.0, 2.0, 0.0, s);
    CHECK(traj.events.empty());
    CHECK(traj.value_at(2.0) == 0.0);
}

TEST_CASE("determinism: identical seed gives identical trajectories") {
    const ModelParams p = make_params(2.0);
    rng::Stream s1(123, 9), s2(123, 9);
    auto field = [&](double t) { return 0.05 * std::cos(0.01 * t); };
    const ChainTrajectory a = simulate(p, 200, field, 0.0, 50.0, 0.0, s1);
    const ChainTrajectory b = simulate(p, 200, field, 0.0, 50.0, 0.0, s2);
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        CHECK(a.events[i].t == b.events[i].t);
        CHECK(a.events[i].k == b.events[i].k);
    }
}

TEST_CASE("lattice closure: occupation never leaves {0..N}") {
    const ModelParams p = make_params(2.0);
    rng::Stream s(5, 0);
    const ChainTrajectory traj =
        simulate(p, 2, [](double) { return 0.4; }, 0.0, 500.0, 0.0, s);
    for (const JumpEvent& e : traj.events) {
        CHECK(e.k >= 0);
        CHECK(e.k <= 2);
    }
    CHECK(traj.total_events > 50);
}

TEST_CASE("proposal budget raises ResourceError") {
    const ModelParams p = make_params(2.0);
    rng::Stream s(5, 0);
    CHECK_THROWS_AS(simulate(p, 500, [](double) { return 0.0; }, 0.0, 100.0, 0.0, s, 50),
                    ResourceError);
}

TEST_CASE("thinning is exact: empirical generator matches F_N and G_N + 2mF_N") {
    const ModelParams p = make_params(2.0);
    const long long N = 60;
    const double h = 0.08;
    const double m0 = 2.0 * std::llround(0.3 * N / 2.0) / static_cast<double>(N);
    const long long k0 = lattice_index(N, m0);
    const double dt = 0.02;
    const long long R = 300000;
    double sum1 = 0.0, sum2 = 0.0;
    for (long long r = 0; r < R; ++r) {
        rng::Stream s(2024, static_cast<std::uint64_t>(r));
        const ChainEndState end = run_chain(p, N, [&](double) { return h; }, 0.0, dt, k0, s,
                                            kDefaultProposalBudget, [](double, long long) {});
        const double m = (2.0 * end.k - N) / static_cast<double>(N);
        sum1 += (m - m0) / dt;
        sum2 += (m * m - m0 * m0) / dt;
    }
    const double drift_emp = sum1 / static_cast<double>(R);
    const double second_emp = sum2 / static_cast<double>(R);
    const double f = drift_FN(p, N, m0, h);
    const double g2 = var_GN(p, N, m0, h) + 2.0 * m0 * f;
    // per-replica variance of the estimators
    const double var1 = var_GN(p, N, m0, h) / dt;
    const double se1 = std::sqrt(var1 / static_cast<double>(R));
    CHECK(std::abs(drift_emp - f) <= 3.0 * se1 + 1e-3 * std::abs(f));
    const double se2 = 2.2 * std::abs(m0) * se1 + 2e-4;
    CHECK(std::abs(second_emp - g2) <= 3.0 * se2);
}

TEST_CASE("N=2 occupation matches the enumerated stationary law") {
    const ModelParams p = make_params(2.0);
    const long long N = 2;
    const double h = 0.15;
    const std::vector<double> mu = stationary_weights(p.beta, h, N);
    rng::Stream s(31337, 0);
    double occ[3] = {0.0, 0.0, 0.0};
    long long k_now = 0;
    double t_prev = 0.0;
    const double T = 200000.0;
    run_chain(p, N, [&](double) { return h; }, 0.0, T, k_now, s, 1ull << 33,
              [&](double t, long long k) {
                  occ[k_now] += t - t_prev;
                  k_now = k;
                  t_prev = t;
              });
    occ[k_now] += T - t_prev;
    for (int k = 0; k <= 2; ++k) {
        CHECK(occ[k] / T == doctest::Approx(mu[static_cast<std::size_t>(k)]).epsilon(0.05));
    }
}

TEST_CASE("rescaled view is a pure affine reindexing") {
    const ModelParams p = make_params(2.0);
    const long long N = 1000;
    ChainTrajectory traj;
    traj.params = p;
    traj.N = N;
    const double scale_t = p.mu * std::cbrt(static_cast<double>(N));
    traj.t_start = -scale_t * 2.0;
    traj.t_end = scale_t * 2.0;
    traj.k_start = lattice_index(N, 2.0 * std::llround(p.m_c * N / 2.0) / N);
    traj.events.push_back({0.5 * scale_t, traj.k_start + 1});

    const RescaledView v = rescaled_path(traj, 2.0);
    const double m0 = traj.m_start();
    const double y0 = p.nu * std::cbrt(static_cast<double>(N)) * (m0 - p.m_c);
    CHECK(v.value(-1.0) == doctest::Approx(y0).epsilon(1e-12));
    // a +2/N jump maps to +2 nu N^{-2/3} in Y
    const double jump = v.value(1.0) - v.value(0.0);
    CHECK(jump ==
          doctest::Approx(2.0 * p.nu * std::pow(static_cast<double>(N), -2.0 / 3.0)).epsilon(1e-12));
    CHECK_THROWS_AS(rescaled_path(traj, 3.0), RangeError);
}

TEST_CASE("classify_exit on constructed paths") {
    const ModelParams p = make_params(2.0);
    const long long N = 1000;
    const double T = 2.0;
    const double scale_t = p.mu * std::cbrt(static_cast<double>(N));
    const long long k_c = std::llround((p.m_c + 1.0) * N / 2.0);

    ChainTrajectory flat;
    flat.params = p;
    flat.N = N;
    flat.t_start = -scale_t * T;
    flat.t_end = scale_t * T;
    flat.k_start = k_c;
    // Y stays near 0: horizon reached, off the band -> Undecided
    Outcome o = classify_exit(rescaled_path(flat, T), T, 0.5);
    CHECK(o.is_undecided());
    CHECK(std::abs(o.terminal) < 0.1);

    // path dropping below -2T -> EMinus at that event time
    ChainTrajectory drop = flat;
    const double m_lo = p.m_c - 2.0 * T / (p.nu * std::cbrt(static_cast<double>(N)));
    const long long k_lo = static_cast<long long>(std::floor((m_lo + 1.0) * N / 2.0)) - 1;
    for (long long k = k_c; k >= k_lo; --k)
        drop.events.push_back({-0.5 * scale_t + 1e-3 * (k_c - k), k});
    o = classify_exit(rescaled_path(drop, T), T, 0.5);
    CHECK(o.is_minus());
    REQUIRE(o.exit_time.has_value());
    // first occupation at or below the threshold is k_lo + 1 (the floor index)
    CHECK(*o.exit_time ==
          doctest::Approx(-0.5 + 1e-3 * (k_c - (k_lo + 1)) / scale_t).epsilon(1e-6));
}

TEST_CASE("branch tracking on constructed paths") {
    const ModelParams p = make_params(2.0);
    const long long N = 10000;
    const double n23 = std::pow(static_cast<double>(N), 2.0 / 3.0);

    // pinned at the upper branch value of the phase midpoint: true for a
    // point interval, false when tested against the lower branch
    const double theta0 = -0.8;
    const BranchSet b = branches(p, -p.h_c * std::cos(theta0));
    ChainTrajectory traj;
    traj.params = p;
    traj.N = N;
    traj.t_start = (theta0 - 0.01) * n23;
    traj.t_end = (theta0 + 0.01) * n23;
    traj.k_start = std::llround((*b.m_plus + 1.0) * N / 2.0);
    CHECK(branch_tracking(traj, +1, theta0 - 0.005, theta0 + 0.005, 0.1));
    CHECK_FALSE(branch_tracking(traj, -1, theta0 - 0.005, theta0 + 0.005, 0.1));
    CHECK_THROWS_AS(branch_tracking(traj, +1, -1.5, theta0, 0.1), RangeError);
}

TEST_CASE("decimated trajectories keep boundary crossings and classify identically") {
    const ModelParams p = make_params(2.0);
    const long long N = 400;
    const double T = 2.5;
    const RescaledRectangle rect(p, N, T);
    auto field = [&](double t) { return oscillating_field(p, N, t); };
    const BranchSet b0 = branches(p, field(-rect.t_end_micro));
    const double m0 = (2.0 * std::llround((*b0.m_plus + 1.0) * N / 2.0) - N) / static_cast<double>(N);
    int agree = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        rng::Stream s1(616, seed), s2(616, seed);
        const ChainTrajectory full =
            simulate(p, N, field, -rect.t_end_micro, rect.t_end_micro, m0, s1);
        const ChainTrajectory thin = simulate(p, N, field, -rect.t_end_micro, rect.t_end_micro,
                                              m0, s2, kDefaultProposalBudget, 50, &rect);
        CHECK(thin.events.size() < full.events.size() / 10);
        const Outcome a = classify_exit(rescaled_path(full, T), T, 1.2);
        const Outcome c = classify_exit(rescaled_path(thin, T), T, 1.2);
        agree += a.tag == c.tag;
        if (a.exit_time && c.exit_time) CHECK(*a.exit_time == *c.exit_time);
    }
    CHECK(agree == 10);

    // decimation without crossing preservation cannot be classified
    rng::Stream s3(616, 0);
    const ChainTrajectory bare = simulate(p, N, field, -rect.t_end_micro, rect.t_end_micro, m0,
                                          s3, kDefaultProposalBudget, 50);
    CHECK_THROWS_AS(classify_exit(rescaled_path(bare, T), T, 1.2), DomainError);
}

TEST_CASE("rescaled increments have variance xi per unit rescaled time") {
    const ModelParams p = make_params(2.0);
    const long long N = 4000;
    const double n13 = std::cbrt(static_cast<double>(N));
    const double ds = 0.05;                     // rescaled duration
    const double dt_micro = p.mu * n13 * ds;    // microscopic duration
    const long long k0 = std::llround((p.m_c + 1.0) * N / 2.0);
    const long long R = 4000;
    double sum = 0.0, sum2 = 0.0;
    for (long long r = 0; r < R; ++r) {
        rng::Stream s(777, static_cast<std::uint64_t>(r));
        const ChainEndState end = run_chain(p, N, [&](double) { return -p.h_c; }, 0.0, dt_micro,
                                            k0, s, kDefaultProposalBudget,
                                            [](double, long long) {});
        const double dy = p.nu * n13 *
                          ((2.0 * end.k - N) / static_cast<double>(N) -
                           (2.0 * k0 - N) / static_cast<double>(N));
        sum += dy;
        sum2 += dy * dy;
    }
    const double mean = sum / static_cast<double>(R);
    const double var = sum2 / static_cast<double>(R) - mean * mean;
    const double xi_emp = var / ds;
    // variance-of-variance: se ~ xi * sqrt(2/R)
    const double se = p.xi * std::sqrt(2.0 / static_cast<double>(R));
    CHECK(std::abs(xi_emp - p.xi) <= 3.0 * se + 0.05 * p.xi);
}

}  // TEST_SUITE
