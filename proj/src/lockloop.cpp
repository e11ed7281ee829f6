#include "hlock/lockloop.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "hlock/parallel.hpp"
#include "hlock/spectra.hpp"
#include "hlock/steadystate.hpp"

namespace hlock
{
namespace
{
constexpr std::uint64_t kDisturbanceStream = 0x6469737475726221ULL;
constexpr std::uint64_t kNoiseStream = 0x6e6f697365000000ULL;

void check_config(const LockConfig &c)
{
    validate(c.params);
    auto fail = [](const char *what) { throw std::invalid_argument(what); };
    if (!(c.slope > 0.0)) fail("discriminator slope must be positive");
    if (c.controller.kp < 0.0 || c.controller.ki < 0.0) fail("PI gains must be non-negative");
    if (!(c.actuator_bandwidth > 0.0)) fail("actuator bandwidth must be positive");
    if (!(c.actuator_range > 0.0)) fail("actuator range must be positive");
    if (!(c.dt > 0.0) || !(c.duration > 0.0)) fail("dt and duration must be positive");
    if (c.dt * c.actuator_bandwidth > 0.1) fail("dt * actuator_bandwidth must not exceed 0.1");
    const auto &d = c.disturbance;
    if (d.sine_amplitude < 0.0 || d.sine_frequency < 0.0 || d.random_walk_diffusion < 0.0) {
        fail("disturbance amplitudes must be non-negative");
    }
}

double seed_amplitude_from_slope(const OPOParams &p, double slope)
{
    const double k = p.kappa();
    return slope * (k * k - p.chi * p.chi) / (4.0 * p.kappa_s);
}

double mode_variance(const OPOParams &params, NoiseMode mode)
{
    switch (mode) {
    case NoiseMode::noiseless:
        return 0.0;
    case NoiseMode::qnl:
        return 1.0;
    case NoiseMode::squeezed:
        return variance(params.with_detuning(0.0), 0.0, Quadrature::minus, 1.0);
    }
    return 0.0;
}

std::uint64_t noise_stream(NoiseMode mode)
{
    return kNoiseStream + static_cast<std::uint64_t>(mode);
}
}  // namespace

std::string_view to_string(NoiseMode mode)
{
    switch (mode) {
    case NoiseMode::noiseless:
        return "noiseless";
    case NoiseMode::qnl:
        return "qnl";
    case NoiseMode::squeezed:
        return "squeezed";
    }
    return "?";
}

LockConfig default_lock_config(const OPOParams &params, double slope)
{
    const double k = params.kappa();
    LockConfig c;
    c.params = params;
    c.slope = slope;
    c.actuator_bandwidth = 0.002 * k;
    c.actuator_range = 5.0 * k;
    c.controller.kp = 10.0 / slope;
    c.controller.ki = 0.0;
    const double crossover = crossover_frequency(c);
    c.controller.ki = c.controller.kp * crossover / 10.0;
    c.dt = 0.5 / k;
    c.duration = 2000.0 / crossover;
    c.metrics_start = 0.2 * c.duration;
    return c;
}

double discriminator_noise_variance(const OPOParams &params, NoiseMode mode, double dt)
{
    return mode_variance(params, mode) / (2.0 * dt);
}

double discriminator(const OPOParams &params, double slope, double delta, NoiseMode mode,
                     double dt, std::mt19937_64 &rng)
{
    const double e = error_signal(params.with_detuning(delta), seed_amplitude_from_slope(params, slope));
    if (mode == NoiseMode::noiseless) {
        return e;
    }
    std::normal_distribution<double> normal(0.0, std::sqrt(discriminator_noise_variance(params, mode, dt)));
    return e + normal(rng);
}

std::complex<double> loop_gain(const LockConfig &config, double omega)
{
    const std::complex<double> s(0.0, omega);
    const double wa = config.actuator_bandwidth;
    return config.slope * (config.controller.kp + config.controller.ki / s) * wa / (s + wa);
}

double crossover_frequency(const LockConfig &config)
{
    const double k = config.params.kappa();
    auto excess = [&](double w) { return std::abs(loop_gain(config, w)) - 1.0; };
    // log scan, then bisection on the first bracket
    double lo = 1e-9 * k;
    if (excess(lo) < 0.0) {
        return 0.0;
    }
    const double factor = std::pow(10.0, 0.05);
    double hi = lo;
    while (excess(hi) >= 0.0) {
        lo = hi;
        hi *= factor;
        if (hi > 1e6 * k) {
            throw QuasiStaticViolation("loop gain exceeds unity at all frequencies");
        }
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = std::sqrt(lo * hi);
        (excess(mid) >= 0.0 ? lo : hi) = mid;
    }
    return std::sqrt(lo * hi);
}

double predicted_suppression(const LockConfig &config, double omega)
{
    return 1.0 / std::abs(1.0 + loop_gain(config, omega));
}

LockMetrics compute_metrics(const LockResult &result, double kappa, double metrics_start)
{
    LockMetrics m;
    const double threshold = 0.1 * kappa;
    constexpr std::size_t kHold = 100;

    double sum_locked = 0.0;
    double sum_open = 0.0;
    std::size_t counted = 0;
    std::size_t in_lock = 0;
    std::size_t run = 0;
    for (std::size_t i = 0; i < result.t.size(); ++i) {
        const bool locked = std::abs(result.delta[i]) < threshold;
        if (locked) {
            ++in_lock;
            ++run;
            if (run == kHold && !m.acquisition_time) {
                m.acquisition_time = result.t[i + 1 - kHold];
            }
        } else {
            run = 0;
        }
        if (result.t[i] >= metrics_start) {
            sum_locked += result.delta[i] * result.delta[i];
            sum_open += result.delta_open_loop[i] * result.delta_open_loop[i];
            ++counted;
        }
    }
    if (counted > 0) {
        m.rms_detuning_locked = std::sqrt(sum_locked / static_cast<double>(counted));
        m.rms_detuning_open_loop = std::sqrt(sum_open / static_cast<double>(counted));
    }
    if (!result.t.empty()) {
        m.in_lock_fraction = static_cast<double>(in_lock) / static_cast<double>(result.t.size());
    }
    return m;
}

LockResult simulate_lock(const LockConfig &config, std::uint64_t trial_index)
{
    check_config(config);
    const OPOParams &p = config.params;
    const double crossover = crossover_frequency(config);
    if (crossover >= 0.1 * p.kappa()) {
        std::ostringstream os;
        os << "loop crossover " << crossover << " rad/s is not below 0.1 kappa = " << 0.1 * p.kappa();
        throw QuasiStaticViolation(os.str());
    }

    const auto steps = static_cast<std::size_t>(std::llround(config.duration / config.dt));
    std::mt19937_64 disturbance_rng(derive_stream_seed(config.rng_seed, kDisturbanceStream, trial_index));
    std::mt19937_64 noise_rng(derive_stream_seed(config.rng_seed, noise_stream(config.noise_mode), trial_index));
    std::normal_distribution<double> normal(0.0, 1.0);

    const double seed_amplitude = seed_amplitude_from_slope(p, config.slope);
    const double noise_std = std::sqrt(discriminator_noise_variance(p, config.noise_mode, config.dt));
    const double walk_std = std::sqrt(config.disturbance.random_walk_diffusion * config.dt);
    const double sine_w = kTwoPi * config.disturbance.sine_frequency;
    const double lag = std::exp(-config.actuator_bandwidth * config.dt);
    const double range = config.actuator_range;
    const double unstable_limit = 10.0 * kTwoPi * p.fsr();
    const auto &gains = config.controller;

    LockResult r;
    r.t.reserve(steps);
    r.delta.reserve(steps);
    r.delta_open_loop.reserve(steps);
    r.error.reserve(steps);
    r.control.reserve(steps);

    double walk = 0.0;
    double u = 0.0;
    double integral = 0.0;
    for (std::size_t n = 0; n < steps; ++n) {
        const double t = static_cast<double>(n) * config.dt;
        const double free = config.disturbance.initial_offset +
                            config.disturbance.sine_amplitude * std::sin(sine_w * t) + walk;
        if (walk_std > 0.0) {
            walk += walk_std * normal(disturbance_rng);
        }
        const double delta = free - u;
        if (!std::isfinite(delta) || std::abs(delta) > unstable_limit) {
            r.unstable = true;
            break;
        }
        double e = error_signal(p.with_detuning(delta), seed_amplitude);
        if (noise_std > 0.0) {
            e += noise_std * normal(noise_rng);
        }

        // PI with clamping anti-windup: hold the integrator while saturated
        // in the direction the error is pushing.
        const double trial_integral = integral + e * config.dt;
        double command = gains.kp * e + gains.ki * trial_integral;
        if (std::abs(command) > range && std::signbit(command) == std::signbit(e)) {
            command = gains.kp * e + gains.ki * integral;
        } else {
            integral = trial_integral;
        }
        command = std::clamp(command, -range, range);

        r.t.push_back(t);
        r.delta.push_back(delta);
        r.delta_open_loop.push_back(free);
        r.error.push_back(e);
        r.control.push_back(u);

        u = command + (u - command) * lag;
    }
    r.metrics = compute_metrics(r, p.kappa(), config.metrics_start);
    return r;
}

NoiseComparison residual_noise_comparison(const LockConfig &config, std::size_t trials)
{
    if (trials < 2) {
        throw std::invalid_argument("noise comparison needs at least two trials");
    }
    std::vector<double> squeezed(trials);
    std::vector<double> qnl(trials);
    parallel_for(trials, [&](std::size_t i) {
        LockConfig c = config;
        c.noise_mode = NoiseMode::squeezed;
        squeezed[i] = simulate_lock(c, i).metrics.rms_detuning_locked;
        c.noise_mode = NoiseMode::qnl;
        qnl[i] = simulate_lock(c, i).metrics.rms_detuning_locked;
    });

    auto mean_se = [](const std::vector<double> &v) {
        double sum = 0.0;
        for (double x : v) sum += x;
        const double mean = sum / static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
        return std::pair{mean, sd / std::sqrt(static_cast<double>(v.size()))};
    };
    NoiseComparison out;
    out.trials = trials;
    std::tie(out.mean_squeezed, out.stderr_squeezed) = mean_se(squeezed);
    std::tie(out.mean_qnl, out.stderr_qnl) = mean_se(qnl);
    out.ratio = out.mean_squeezed / out.mean_qnl;
    return out;
}

}  // namespace hlock
