#pragma once

// Closed-loop frequency lock driven by the homodyne error signal.
//
// Quasi-static model: the discriminator is the steady-state error curve
// evaluated at the instantaneous detuning, plus white measurement noise whose
// level follows the phase-quadrature variance of the OPO output. A PI
// controller (clamping anti-windup) drives a first-order actuator whose
// output u is subtracted from the free-running detuning:
//
//   Delta(t) = Delta_free(t) - u(t)
//
// The model is only meaningful while the loop crossover stays well below
// kappa; simulate_lock enforces crossover < 0.1 kappa.

#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "hlock/core.hpp"

namespace hlock
{

class QuasiStaticViolation : public PhysicsError
{
public:
    using PhysicsError::PhysicsError;
};

enum class NoiseMode
{
    noiseless,
    qnl,       // vacuum-level phase-quadrature noise, V- = 1
    squeezed,  // V- of the OPO output at omega = 0
};

std::string_view to_string(NoiseMode mode);

struct DisturbanceSpec
{
    double sine_amplitude = 0.0;         // rad/s
    double sine_frequency = 0.0;         // Hz
    double random_walk_diffusion = 0.0;  // rad^2/s^3; Delta increment variance D dt
    double initial_offset = 0.0;         // rad/s
};

struct PiGains
{
    double kp = 0.0;  // rad/s per unit error
    double ki = 0.0;  // rad/s^2 per unit error
};

struct LockConfig
{
    OPOParams params;
    double slope = 0.0;  // discriminator slope at Delta = 0, per rad/s
    PiGains controller;
    double actuator_bandwidth = 0.0;  // rad/s
    double actuator_range = 0.0;      // max |u|, rad/s
    DisturbanceSpec disturbance;
    NoiseMode noise_mode = NoiseMode::noiseless;
    double dt = 0.0;
    double duration = 0.0;
    std::uint64_t rng_seed = 0;
    double metrics_start = 0.0;  // rms metrics use samples with t >= metrics_start
};

// Default tuning for a cavity with the given parameters and discriminator
// slope:
//   actuator_bandwidth = 0.002 kappa, kp = 10 / slope (loop crossover ~ 0.02 kappa),
//   ki = kp * crossover / 10 (PI corner a decade below crossover),
//   dt = 0.5 / kappa, duration = 2000 / crossover, metrics_start = duration / 5,
//   actuator_range = 5 kappa.
LockConfig default_lock_config(const OPOParams &params, double slope);

// Per-sample variance of the discriminator noise: V- / (2 dt).
double discriminator_noise_variance(const OPOParams &params, NoiseMode mode, double dt);

// Stateless form: full steady-state error curve at delta (seed amplitude
// recovered from the slope) plus one noise draw.
double discriminator(const OPOParams &params, double slope, double delta, NoiseMode mode,
                     double dt, std::mt19937_64 &rng);

// L(i omega) = slope (kp + ki / (i omega)) wa / (i omega + wa)
std::complex<double> loop_gain(const LockConfig &config, double omega);

// Lowest omega with |L(i omega)| = 1; 0 if the loop gain never reaches 1.
double crossover_frequency(const LockConfig &config);

// |1 / (1 + L(i omega))|
double predicted_suppression(const LockConfig &config, double omega);

struct LockMetrics
{
    double rms_detuning_locked = 0.0;
    double rms_detuning_open_loop = 0.0;
    std::optional<double> acquisition_time;  // first |Delta| < 0.1 kappa held 100 samples
    double in_lock_fraction = 0.0;
};

struct LockResult
{
    std::vector<double> t;
    std::vector<double> delta;
    std::vector<double> delta_open_loop;
    std::vector<double> error;
    std::vector<double> control;
    LockMetrics metrics;
    bool unstable = false;  // |Delta| exceeded 10 FSR; series truncated there
};

LockMetrics compute_metrics(const LockResult &result, double kappa, double metrics_start);

LockResult simulate_lock(const LockConfig &config, std::uint64_t trial_index = 0);

struct NoiseComparison
{
    double ratio = 0.0;  // mean locked rms, squeezed / qnl
    double mean_squeezed = 0.0;
    double stderr_squeezed = 0.0;
    double mean_qnl = 0.0;
    double stderr_qnl = 0.0;
    std::size_t trials = 0;
};

// Runs `trials` pairs of locks differing only in noise mode. Each pair shares
// its disturbance realisation; measurement noise streams are independent.
NoiseComparison residual_noise_comparison(const LockConfig &config, std::size_t trials);

}  // namespace hlock
