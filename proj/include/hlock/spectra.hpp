#pragma once

// Analytic fluctuation spectra of the OPO output at Delta = 0.
//
// For a frequency omega measured from one longitudinal resonance,
//
//   dX_sqz^(+/-) = c_s dX_s^(+/-) + c_l dX_l^(+/-)
//   c_s = [2 kappa_s - (kappa + i omega) +/- chi] / [(kappa + i omega) -/+ chi]
//   c_l = 2 sqrt(kappa_s kappa_l)               / [(kappa + i omega) -/+ chi]
//
// Seed and loss ports carry independent vacuum noise of unit variance, so the
// ideal variance is |c_s|^2 + |c_l|^2. Detection/escape efficiency eta acts as
// a beamsplitter loss: V = 1 - eta (1 - V_ideal).

#include <complex>
#include <vector>

#include "hlock/core.hpp"
#include "hlock/steadystate.hpp"

namespace hlock
{

class Inconsistent : public PhysicsError
{
public:
    using PhysicsError::PhysicsError;
};

class GridOutOfRange : public PhysicsError
{
public:
    using PhysicsError::PhysicsError;
};

struct TransferCoefficients
{
    std::complex<double> seed;
    std::complex<double> loss;
};

TransferCoefficients transfer_coefficients(const OPOParams &params, double omega,
                                           Quadrature quadrature);

double variance(const OPOParams &params, double omega, Quadrature quadrature, double eta = 1.0);

double variance_db(double v);
double db_to_variance(double db);

// Efficiency implied by a detected squeezing level given the attainable one.
// Both arguments are squeezing magnitudes in dB (positive = below QNL).
//   power:     eta = (1 - V_det) / (1 - V_ideal)
//   amplitude: eta = (1 - sqrt(V_det)) / (1 - sqrt(V_ideal))
enum class EfficiencyConvention
{
    power,
    amplitude,
};

double infer_efficiency(double detected_db, double ideal_db,
                        EfficiencyConvention convention = EfficiencyConvention::power);

struct SpectrumTrace
{
    std::vector<double> frequencies;   // omega relative to the resonance (rad/s)
    std::vector<double> absolute_hz;   // FSR + omega / 2 pi
    std::vector<double> variance_plus;
    std::vector<double> variance_minus;
    double efficiency = 1.0;
};

// Samples both quadrature variances over `grid` (omega in rad/s). The grid
// must stay within 10 kappa of the resonance (GridOutOfRange otherwise);
// frequencies beyond 0.1 FSR raise a single warning.
SpectrumTrace spectrum_trace(const OPOParams &params, const LinearGrid &grid, double eta = 1.0);

}  // namespace hlock
