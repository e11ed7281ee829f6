#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "hlock/lockloop.hpp"
#include "hlock/spectra.hpp"
#include "hlock/steadystate.hpp"
#include "oracles.hpp"

using namespace hlock;

namespace
{
OPOParams params(double chi = 0.5)
{
    return {.kappa_s = 0.9, .kappa_l = 0.1, .chi = chi, .tau = 1e-3, .detuning = 0.0};
}

LockConfig config(double chi = 0.5, double amplitude = 1.0)
{
    const OPOParams p = params(chi);
    return default_lock_config(p, error_slope(p, amplitude));
}

double rms_tail(const std::vector<double> &v, const std::vector<double> &t, double from)
{
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (t[i] >= from) {
            s += v[i] * v[i];
            ++n;
        }
    }
    return std::sqrt(s / static_cast<double>(n));
}
}  // namespace

TEST_CASE("noiseless discriminator is the steady-state error curve")
{
    const OPOParams p = params();
    const double slope = error_slope(p, 0.7);
    std::mt19937_64 rng(1);
    for (double d : {-2.0, -0.1, 0.0, 0.05, 1.5}) {
        CHECK(discriminator(p, slope, d, NoiseMode::noiseless, 0.1, rng) ==
              doctest::Approx(error_signal(p.with_detuning(d), 0.7)).epsilon(1e-13));
    }
}

TEST_CASE("discriminator noise follows the phase-quadrature variance")
{
    const OPOParams p = params();
    const double dt = 0.25;
    CHECK(discriminator_noise_variance(p, NoiseMode::noiseless, dt) == 0.0);
    CHECK(discriminator_noise_variance(p, NoiseMode::qnl, dt) == doctest::Approx(2.0));
    const double vm = variance(p, 0.0, Quadrature::minus);
    CHECK(discriminator_noise_variance(p, NoiseMode::squeezed, dt) == doctest::Approx(vm / (2.0 * dt)));

    const double slope = error_slope(p, 1.0);
    std::mt19937_64 rng(2);
    std::vector<double> q(200000), s(200000);
    for (auto &x : q) x = discriminator(p, slope, 0.0, NoiseMode::qnl, dt, rng);
    for (auto &x : s) x = discriminator(p, slope, 0.0, NoiseMode::squeezed, dt, rng);
    CHECK(oracle::sample_variance(q) == doctest::Approx(2.0).epsilon(0.01));
    CHECK(oracle::sample_variance(s) / oracle::sample_variance(q) == doctest::Approx(vm).epsilon(0.015));
}

TEST_CASE("default tuning")
{
    const LockConfig c = config();
    const double k = c.params.kappa();
    const double wc = crossover_frequency(c);
    CHECK(std::abs(loop_gain(c, wc)) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(wc == doctest::Approx(0.02 * k).epsilon(0.05));
    // the integral corner is placed relative to the proportional-only crossover
    LockConfig p_only = c;
    p_only.controller.ki = 0.0;
    CHECK(c.controller.ki == doctest::Approx(c.controller.kp * crossover_frequency(p_only) / 10.0));
    CHECK(c.actuator_bandwidth == doctest::Approx(0.002 * k));
    CHECK(c.dt == doctest::Approx(0.5 / k));
    CHECK(c.metrics_start == doctest::Approx(0.2 * c.duration));
}

TEST_CASE("crossover is zero when the loop gain never reaches one")
{
    LockConfig c = config();
    c.controller = {1e-3 / c.slope, 0.0};
    CHECK(crossover_frequency(c) == 0.0);
}

TEST_CASE("open loop leaves the detuning untouched")
{
    LockConfig c = config();
    c.controller = {0.0, 0.0};
    c.disturbance.sine_amplitude = 0.3;
    c.disturbance.sine_frequency = 1e-3;
    c.duration = 2000.0;
    const LockResult r = simulate_lock(c);
    REQUIRE(!r.t.empty());
    for (std::size_t i = 0; i < r.t.size(); ++i) {
        CHECK(r.delta[i] == r.delta_open_loop[i]);
    }
    CHECK(r.metrics.rms_detuning_locked == r.metrics.rms_detuning_open_loop);
}

TEST_CASE("noiseless lock acquires from an offset and settles")
{
    LockConfig c = config();
    c.disturbance.initial_offset = 0.5 * c.params.kappa();
    const LockResult r = simulate_lock(c);
    CHECK_FALSE(r.unstable);
    REQUIRE(r.metrics.acquisition_time.has_value());
    CHECK(*r.metrics.acquisition_time < 0.5 * c.duration);
    CHECK(std::abs(r.delta.back()) < 1e-6 * c.params.kappa());
    CHECK(r.metrics.in_lock_fraction > 0.5);

    // the squared detuning never grows from one quarter of the record to the
    // next (late quarters sit at the rounding floor)
    const std::size_t n = r.t.size() / 4;
    std::vector<double> energy;
    for (std::size_t q = 0; q < 4; ++q) {
        double s = 0.0;
        for (std::size_t i = q * n; i < (q + 1) * n; ++i) s += r.delta[i] * r.delta[i];
        energy.push_back(s);
    }
    CHECK(energy[1] < 1e-6 * energy[0]);
    CHECK(energy[2] <= energy[1]);
    CHECK(energy[3] <= energy[2]);
}

TEST_CASE("sinusoidal disturbance is suppressed as the loop gain predicts")
{
    LockConfig c = config();
    const double wc = crossover_frequency(c);
    const double wd = wc / 20.0;
    c.disturbance.sine_amplitude = 0.01 * c.params.kappa();
    c.disturbance.sine_frequency = wd / (2.0 * M_PI);
    c.duration = 40.0 * 2.0 * M_PI / wd;
    c.metrics_start = 0.25 * c.duration;
    const LockResult r = simulate_lock(c);
    const double measured = r.metrics.rms_detuning_locked / r.metrics.rms_detuning_open_loop;
    CHECK(measured == doctest::Approx(predicted_suppression(c, wd)).epsilon(0.05));
    CHECK(measured < 0.1);
}

TEST_CASE("random-walk drift is held near resonance")
{
    LockConfig c = config();
    const double k = c.params.kappa();
    c.disturbance.random_walk_diffusion = 1e-7 * k * k * k;
    const LockResult r = simulate_lock(c, 1);
    CHECK(r.metrics.rms_detuning_locked < 0.2 * r.metrics.rms_detuning_open_loop);
    CHECK(rms_tail(r.delta, r.t, c.metrics_start) == doctest::Approx(r.metrics.rms_detuning_locked));
}

TEST_CASE("squeezed readout lowers the residual detuning")
{
    LockConfig c = config(0.5, 30.0);
    c.duration *= 0.25;
    c.metrics_start = 0.25 * c.duration;
    const NoiseComparison cmp = residual_noise_comparison(c, 8);
    const double expected = std::sqrt(variance(c.params, 0.0, Quadrature::minus));
    CHECK(cmp.trials == 8);
    CHECK(cmp.ratio == doctest::Approx(expected).epsilon(0.1));
    CHECK(cmp.ratio < 1.0);
}

TEST_CASE("lock runs are reproducible")
{
    LockConfig c = config();
    c.noise_mode = NoiseMode::qnl;
    c.disturbance.random_walk_diffusion = 1e-8;
    c.duration *= 0.05;
    const LockResult a = simulate_lock(c, 5);
    const LockResult b = simulate_lock(c, 5);
    CHECK(a.delta == b.delta);
    CHECK(simulate_lock(c, 6).delta != a.delta);
}

TEST_CASE("configuration guards")
{
    LockConfig c = config();
    c.controller.kp *= 100.0;
    CHECK_THROWS_AS(simulate_lock(c), QuasiStaticViolation);

    c = config();
    c.dt = 100.0;
    CHECK_THROWS_AS(simulate_lock(c), std::invalid_argument);

    c = config();
    c.slope = -1.0;
    CHECK_THROWS_AS(simulate_lock(c), std::invalid_argument);
}

TEST_CASE("runaway detuning is flagged")
{
    LockConfig c = config();
    c.disturbance.initial_offset = 20.0 * 2.0 * M_PI * c.params.fsr();
    const LockResult r = simulate_lock(c);
    CHECK(r.unstable);
    CHECK(r.t.empty());
}

TEST_CASE("metrics on a hand-built record")
{
    LockResult r;
    for (int i = 0; i < 300; ++i) {
        r.t.push_back(i);
        r.delta.push_back(i < 50 ? 1.0 : 0.01);
        r.delta_open_loop.push_back(2.0);
    }
    const LockMetrics m = compute_metrics(r, 1.0, 100.0);
    REQUIRE(m.acquisition_time.has_value());
    CHECK(*m.acquisition_time == 50.0);
    CHECK(m.rms_detuning_locked == doctest::Approx(0.01));
    CHECK(m.rms_detuning_open_loop == doctest::Approx(2.0));
    CHECK(m.in_lock_fraction == doctest::Approx(250.0 / 300.0));
}
