#include <cmath>

#include "cwhyst/gauss.hpp"
#include "cwhyst/ode.hpp"
#include "doctest.h"

using namespace cwhyst;
using namespace cwhyst::gauss;

namespace {

double phi_bar(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

LinearSdeSpec ou_spec(double theta, double xi, double t0, double t1) {
    LinearSdeSpec s;
    s.a = [theta](double) { return -theta; };
    s.b = [](double) { return 0.0; };
    s.xi = xi;
    s.t0 = t0;
    s.t1 = t1;
    return s;
}

}  // namespace

TEST_SUITE("gauss") {

TEST_CASE("propagator variance matches the closed form for an OU process") {
    const LinearSdeSpec spec = ou_spec(1.0, 0.7, 0.0, 2.0);
    const LinearPropagator pr = LinearPropagator::build(spec, 800);
    const double closed = 0.7 * 0.7 * (1.0 - std::exp(-4.0)) / 2.0;
    CHECK(pr.sigma.back() * pr.sigma.back() == doctest::Approx(closed).epsilon(1e-9));

    // empirical variance at t1 within 3 standard errors
    const long long R = 40000;
    double sum = 0.0, sum2 = 0.0;
    simulate_linear_paths(pr, 0.0, R, 5551, [&](long long, std::size_t k, double x) {
        if (k == pr.sigma.size() - 1) {
            sum += x;
            sum2 += x * x;
        }
    });
    const double var = sum2 / R - (sum / R) * (sum / R);
    const double se = closed * std::sqrt(2.0 / static_cast<double>(R));
    CHECK(std::abs(var - closed) <= 3.0 * se);
}

TEST_CASE("brownian sup tail against the reflection oracle") {
    LinearSdeSpec bm = ou_spec(0.0, 1.0, 0.0, 1.0);
    const LinearPropagator pr = LinearPropagator::build(bm, 1000);
    const long long R = 200000;
    long long exceed = 0;
    bool over = false;
    simulate_linear_paths(pr, 0.0, R, 8181, [&](long long, std::size_t k, double x) {
        if (k == 0) over = false;
        if (x >= 3.0) over = true;
        if (k == pr.sigma.size() - 1 && over) ++exceed;
    });
    const double emp = static_cast<double>(exceed) / R;
    const double oracle = 2.0 * phi_bar(3.0);  // one-sided sup of BM over [0,1]
    // discrete monitoring biases the sup slightly down
    CHECK(emp <= oracle + 3e-4);
    CHECK(emp >= 0.7 * oracle);
}

TEST_CASE("marcus-shepp bound on brownian motion") {
    // the normalized sup is taken away from t = 0, where |W(t)|/sqrt(t)
    // renews itself on a log clock and lambda = 3 is not yet in the bound's
    // validity regime
    LinearSdeSpec bm = ou_spec(0.0, 1.0, 0.0, 1.0);
    const SupTailReport rep = gaussian_sup_tail(bm, 3.0, 0.1, 100000, 2929, 1000, 0.25);
    CHECK(rep.bound == doctest::Approx(2.0 * std::exp(-4.05)).epsilon(1e-12));
    CHECK(rep.pass);
    CHECK(rep.empirical < rep.bound);

    // over the full window including t -> 0 the same lambda is too small for
    // the bound; the case is reported, not asserted
    const SupTailReport full = gaussian_sup_tail(bm, 3.0, 0.1, 50000, 2929);
    CHECK(full.empirical > 0.0);
}

TEST_CASE("lambda = 0 bound is vacuous") {
    LinearSdeSpec bm = ou_spec(0.0, 1.0, 0.0, 1.0);
    const SupTailReport rep = gaussian_sup_tail(bm, 0.0, 0.1, 2000, 3);
    CHECK(rep.bound == 2.0);
    CHECK(rep.empirical <= 1.0);
    CHECK(rep.pass);
}

TEST_CASE("normalized OU sup tail is reported") {
    // long-horizon OU mixes enough that lambda = 3.5 is below the regime of
    // the bound; exercised at reporting level only
    const SupTailReport rep = gaussian_sup_tail(ou_spec(1.0, 1.0, 0.0, 5.0), 3.5, 0.1, 40000, 11);
    CHECK(rep.replicas == 40000);
    CHECK(rep.empirical >= 0.0);
    CHECK(rep.empirical < 0.1);
}

TEST_CASE("small deviation rate for a = 1 on [0,1]") {
    auto a = [](double) { return 1.0; };
    const SmallDeviationReport rep =
        small_deviation_rate(a, 0.0, 1.0, {0.5, 0.45, 0.4}, 120000, 6006, 1500);
    CHECK(rep.analytic_constant == doctest::Approx(-0.7798474811791747).epsilon(1e-12));
    CHECK(rep.markov_clock_constant == doctest::Approx(-1.2337005501361697).epsilon(1e-12));
    // the drift inside a shrinking ball is negligible, so the measured rate
    // follows the quadratic-variation clock, not the printed closed form
    CHECK(rep.markov_relative_deviation < 0.2);
    CHECK(rep.fitted_constant < -1.0);
}

TEST_CASE("small deviation rate rejects a degenerate drift") {
    auto a0 = [](double) { return 0.0; };
    CHECK_THROWS_AS(small_deviation_rate(a0, 0.0, 1.0, {0.5, 0.4, 0.3}, 1000, 1, 200),
                    DomainError);
}

TEST_CASE("doubling the drift: printed formula is monotone, measured clock is not") {
    auto a1 = [](double) { return 1.0; };
    auto a2 = [](double) { return 2.0; };
    const SmallDeviationReport r1 =
        small_deviation_rate(a1, 0.0, 1.0, {0.5, 0.45, 0.4}, 60000, 42, 1200);
    const SmallDeviationReport r2 =
        small_deviation_rate(a2, 0.0, 1.0, {0.5, 0.45, 0.4}, 60000, 42, 1200);
    CHECK(r2.analytic_constant < r1.analytic_constant);
    // both processes carry the same unit quadratic-variation clock
    CHECK(r1.markov_clock_constant == r2.markov_clock_constant);
    CHECK(r1.markov_relative_deviation < 0.25);
    CHECK(r2.markov_relative_deviation < 0.25);
}

TEST_CASE("comparison lemma: identical drifts give identical paths") {
    LinearSdeSpec lin = ou_spec(0.5, 0.8, 0.0, 2.0);
    auto c = [&](double x, double t) { return lin.a(t) * x + lin.b(t); };
    const ComparisonReport rep = compare_paths(lin, c, 17, 1.0, 1.0, 2000);
    CHECK(rep.sign_agreement);
    for (std::size_t i = 0; i < rep.t.size(); ++i)
        CHECK(std::abs(rep.x_nonlinear[i] - rep.x_linear[i]) <= 1e-12);
}

TEST_CASE("comparison lemma: cubic damping stays below the driftless path") {
    LinearSdeSpec lin;
    lin.a = [](double) { return 0.0; };
    lin.b = [](double) { return 0.0; };
    lin.xi = 0.5;
    lin.t0 = 0.0;
    lin.t1 = 1.5;
    auto c = [](double x, double) { return -x * x * x; };
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const ComparisonReport rep = compare_paths(lin, c, seed, 1.0, 1.0, 3000);
        CHECK(rep.sign_agreement);  // delta < 0 while X > 0: nonlinear below linear
    }
}

TEST_CASE("comparison lemma on the separatrix-shift dynamics") {
    // z' = -z(z + 2 y*(t)) dominates (t/2) z for 0 <= z <= -3 y*(t)/2; with
    // shared noise the nonlinear path stays above the linear one on that window
    const CriticalCurve curve = critical_curve(6.0, 1e-10);
    LinearSdeSpec lin;
    lin.a = [](double t) { return 0.5 * t; };
    lin.b = [](double) { return 0.0; };
    lin.xi = 0.3;
    lin.t0 = 1.0;
    lin.t1 = 3.0;
    auto c = [&](double z, double t) { return -z * (z + 2.0 * curve.eval(t)); };
    int agreements = 0;
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const ComparisonReport rep = compare_paths(lin, c, seed, 0.4, 0.4, 3000);
        if (rep.sign_agreement) ++agreements;
    }
    CHECK(agreements == 25);
}

TEST_CASE("shared-noise determinism of the comparison") {
    LinearSdeSpec lin = ou_spec(1.0, 1.0, 0.0, 1.0);
    auto c = [](double x, double) { return -x - 0.3 * x * x; };
    const ComparisonReport a = compare_paths(lin, c, 99, 0.5, 0.5, 500);
    const ComparisonReport b = compare_paths(lin, c, 99, 0.5, 0.5, 500);
    REQUIRE(a.x_nonlinear.size() == b.x_nonlinear.size());
    for (std::size_t i = 0; i < a.x_nonlinear.size(); ++i) {
        CHECK(a.x_nonlinear[i] == b.x_nonlinear[i]);
        CHECK(a.x_linear[i] == b.x_linear[i]);
    }
}

}  // TEST_SUITE
