#pragma once

// Closed-form steady state of the sub-threshold OPO driven by a coherent seed.
//
// Sign convention (used throughout the library): the intracavity mean obeys
//
//     da/dt = -(kappa + i Delta) a + chi a^dagger + sqrt(2 kappa_s) A_s
//     A_sqz = sqrt(2 kappa_s) a - A_s
//
// which makes the amplitude quadrature X+ the amplified one and the phase
// quadrature X- the de-amplified (squeezed) one:
//
//     X_sqz^(+/-) = 2 kappa_s / (kappa^2 - chi^2 + Delta^2)
//                   * [(kappa +/- chi) X_s^(+/-) -/+ Delta X_s^(-/+)] - X_s^(+/-)

#include <cstddef>
#include <optional>
#include <vector>

#include "hlock/core.hpp"

namespace hlock
{

class NoFeasibleSolution : public PhysicsError
{
public:
    using PhysicsError::PhysicsError;
};

QuadPair output_quadratures(const OPOParams &params, const QuadPair &seed_in);

// Intracavity mean amplitude <a> for the same drive.
std::complex<double> intracavity_amplitude(const OPOParams &params, const QuadPair &seed_in);

// Homodyne error signal for a real seed of amplitude `seed_amplitude`
// (X_s+ = 2 seed_amplitude, X_s- = 0): the steady-state output X-.
double error_signal(const OPOParams &params, double seed_amplitude);

// d(error_signal)/dDelta at Delta = 0.
double error_slope(const OPOParams &params, double seed_amplitude);

enum class GainModel
{
    input_referenced,     // power gain relative to the input seed
    unpumped_referenced,  // relative to the chi = 0 reflection factor
};

// 10 log10(g^2) with g = 2 kappa_s/(kappa -/+ chi) - 1 (input referenced) or
// g / (2 kappa_s/kappa - 1) (unpumped referenced). Evaluated at Delta = 0
// regardless of params.detuning. Positive for the amplified X+ quadrature.
double classical_gain_db(const OPOParams &params, Quadrature quadrature,
                         GainModel model = GainModel::unpumped_referenced);

struct GainFit
{
    double chi_over_kappa = 0.0;
    double kappa_s_over_kappa = 0.0;
};

// Inverts classical_gain_db: finds (chi/kappa, kappa_s/kappa) with
// gain(+) = amp_db and gain(-) = -deamp_db. Both inputs are positive
// magnitudes. When several branches are feasible the least lossy one
// (largest kappa_s/kappa) is returned. Throws NoFeasibleSolution when no
// sub-threshold parameter pair with kappa_s <= kappa exists.
GainFit fit_gains(double amp_db, double deamp_db,
                  GainModel model = GainModel::unpumped_referenced);

// Uniform grid over a closed interval; a single point yields {start}.
struct LinearGrid
{
    double start = 0.0;
    double stop = 0.0;
    std::size_t points = 1;

    std::vector<double> values() const;
};

struct SweepTrace
{
    std::vector<double> detunings;
    std::vector<double> error_signal;
    std::vector<double> transmission;  // seed intracavity power, peak = 1
};

// Two-mode cavity sweep. The seed mode sees chi at detuning Delta; the LO
// mode sees chi = 0 at Delta + field.lo_resonance_offset. The DC homodyne
// signal is Im(<A_sqz,x> <A_out,y>^*). With power_split = 1 there is no
// co-propagating LO and the trace is the seed's own output X-.
SweepTrace sweep(const OPOParams &params, const TwoModeField &field, const LinearGrid &grid);

// Indices i of the last non-zero sample before each sign flip; exact zeros
// are skipped, so the flip completes at the next non-zero sample.
std::vector<std::size_t> sign_changes(const std::vector<double> &samples);

}  // namespace hlock
