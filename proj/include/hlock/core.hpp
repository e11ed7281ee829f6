#pragma once

// Shared domain types for the OPO / homodyne-locking model.
//
// Units: every rate is an angular frequency in rad/s, times are in seconds.
// Quadratures are normalised so that vacuum has unit variance, hence the
// quantum noise limit (QNL) is exactly 1.
//
// The optical frame rotates at the nominal laser frequency omega_0; omega_0
// itself never enters a computation.

#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hlock
{

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

// Base for every error that reflects an invalid physical situation (as
// opposed to a malformed request). The CLI maps these to exit code 2.
class PhysicsError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class ThresholdViolation : public PhysicsError
{
public:
    using PhysicsError::PhysicsError;
};

class NonPositiveRate : public PhysicsError
{
public:
    using PhysicsError::PhysicsError;
};

class NonPhysicalReflectivity : public PhysicsError
{
public:
    using PhysicsError::PhysicsError;
};

class NonFiniteParameter : public PhysicsError
{
public:
    using PhysicsError::PhysicsError;
};

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

using WarningHandler = std::function<void(std::string_view)>;

// Installs a process-wide warning sink and returns the previous one. The
// default sink writes "warning: <msg>" to stderr.
WarningHandler set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

enum class Quadrature
{
    plus,   // amplitude quadrature X+ = A + A^dagger
    minus,  // phase quadrature X- = iA - iA^dagger
};

std::string_view to_string(Quadrature q);

// Cavity and nonlinearity parameters of a singly-resonant sub-threshold OPO.
//
// The total decay rate kappa() = kappa_s + kappa_l is derived and never
// stored. Values are not validated on construction; call validate() before
// handing parameters to the physics routines.
struct OPOParams
{
    double kappa_s = 0.0;   // output-coupler decay rate
    double kappa_l = 0.0;   // loss decay rate (other mirrors, absorption)
    double chi = 0.0;       // parametric coupling
    double tau = 0.0;       // round-trip time (s)
    double detuning = 0.0;  // cavity resonance minus laser frequency

    double kappa() const { return kappa_s + kappa_l; }
    double fsr() const { return 1.0 / tau; }  // Hz

    // R_i = 1 - 2 tau kappa_i
    double reflectivity_s() const { return 1.0 - 2.0 * tau * kappa_s; }
    double reflectivity_l() const { return 1.0 - 2.0 * tau * kappa_l; }

    // kappa_i = (1 - R_i) / (2 tau); throws NonPhysicalReflectivity unless
    // R_i lies in (0, 1].
    static OPOParams from_reflectivities(double r_s, double r_l, double chi, double tau,
                                         double detuning = 0.0);

    // Builds parameters from dimensionless ratios chi/kappa and kappa_s/kappa.
    static OPOParams from_ratios(double kappa, double chi_over_kappa, double kappa_s_over_kappa,
                                 double tau, double detuning = 0.0);

    OPOParams with_detuning(double delta) const
    {
        OPOParams p = *this;
        p.detuning = delta;
        return p;
    }
    OPOParams with_chi(double c) const
    {
        OPOParams p = *this;
        p.chi = c;
        return p;
    }

    bool operator==(const OPOParams &) const = default;
};

// Returns params unchanged iff all invariants hold:
// finite fields, kappa_s, kappa_l >= 0, kappa > 0, tau > 0, 0 <= chi < kappa.
const OPOParams &validate(const OPOParams &params);

// Free spectral range in Hz. Requires tau > 0.
double fsr_of(const OPOParams &params);

// A pair of quadrature values (means or fluctuation amplitudes).
struct QuadPair
{
    double x_plus = 0.0;
    double x_minus = 0.0;

    // X+ = A + A*, X- = iA - iA*  <=>  A = (X+ - i X-) / 2
    static QuadPair from_amplitude(std::complex<double> a)
    {
        return {2.0 * a.real(), -2.0 * a.imag()};
    }
    std::complex<double> amplitude() const { return {0.5 * x_plus, -0.5 * x_minus}; }

    double operator[](Quadrature q) const { return q == Quadrature::plus ? x_plus : x_minus; }

    bool operator==(const QuadPair &) const = default;
};

// Seed mode (x, resonant, sees chi) plus a co-propagating local oscillator
// mode (y, chi = 0) whose resonance is offset from the seed's.
struct TwoModeField
{
    QuadPair seed;
    QuadPair lo;
    double lo_resonance_offset = 0.0;
    double power_split = 0.01;  // fraction of the input power in the seed mode

    // Real input of total amplitude `amplitude` (so |A|^2 = amplitude^2) split
    // between the modes. power_split must lie in (0, 1]; a split of 1 means
    // no co-propagating LO.
    static TwoModeField real_input(double amplitude, double power_split, double lo_offset);
};

// Deterministic RNG seeding shared by every stochastic routine: each
// (seed, stream, index) triple owns an independent generator.
std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

}  // namespace hlock
