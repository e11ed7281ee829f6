#pragma once

// Time-domain integration of the linearised OPO Langevin equations and
// spectral estimation of the simulated homodyne output. This is the
// brute-force counterpart of the closed forms in steadystate.hpp and
// spectra.hpp.
//
// Fluctuation model (quadratures of the intracavity field x = (dx+, dx-)):
//
//   dx = M x dt + sqrt(2 kappa_s) dW_s + sqrt(2 kappa_l) dW_l
//   M  = [[-(kappa - chi), -Delta], [Delta, -(kappa + chi)]]
//   dY = sqrt(2 kappa_s) x dt - dW_s        (integrated output record)
//
// W_s and W_l are independent 2-d standard Wiener processes, one component
// per quadrature. An output sample is (Y(t + dt) - Y(t)) / sqrt(dt), so a
// vacuum-level output has unit variance per sample and unit PSD.

#include <cstdint>
#include <vector>

#include "hlock/core.hpp"
#include "hlock/spectra.hpp"

namespace hlock
{

class NotConverged : public PhysicsError
{
public:
    using PhysicsError::PhysicsError;
};

class StepTooLarge : public PhysicsError
{
public:
    using PhysicsError::PhysicsError;
};

class TooFewSegments : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

enum class Integrator
{
    exact,           // matrix exponential + exact step covariance (reference)
    euler_maruyama,
};

struct SimConfig
{
    double dt = 0.0;
    double duration = 0.0;
    std::uint64_t seed_value = 0;
    OPOParams params;
    // Output is recorded every k steps. The integrated output record is what
    // gets decimated, so each kept sample is the average photocurrent over k
    // steps and the vacuum normalisation is preserved.
    std::size_t record_decimation = 1;
    Integrator integrator = Integrator::exact;
};

struct TimeSeries
{
    std::vector<double> t;
    std::vector<double> x_plus_out;
    std::vector<double> x_minus_out;

    std::size_t size() const { return t.size(); }
    // Sample spacing; requires at least two samples.
    double dt() const;
};

// Integrates the mean-field equation from an empty cavity for t_end and
// returns the output quadratures. Throws NotConverged if the output still
// changes by more than 1e-10 (relative) over the final 1/(kappa - chi).
QuadPair integrate_mean(const OPOParams &params, const QuadPair &seed_in, double t_end);

// One stochastic trajectory. `trial_index` selects an independent RNG stream
// derived from config.seed_value; identical inputs give bit-identical output.
// Throws StepTooLarge if dt * kappa > 0.05.
TimeSeries integrate_fluctuations(const SimConfig &config, std::uint64_t trial_index = 0);

// Hann-windowed Welch estimate of both quadratures, normalised so that
// unit-variance white noise has PSD 1. Frequencies run from 0 to Nyquist
// in rad/s. Throws TooFewSegments if fewer than 16 segments fit.
SpectrumTrace estimate_psd(const TimeSeries &series, std::size_t segment_length,
                           double overlap = 0.5);

// Single-channel variant of estimate_psd. Returns {omega, psd}.
struct Psd
{
    std::vector<double> omega;
    std::vector<double> value;
    std::size_t segments = 0;
};
Psd welch_psd(const std::vector<double> &samples, double dt, std::size_t segment_length,
              double overlap = 0.5);

}  // namespace hlock
