#include "hlock/core.hpp"

#include <cmath>
#include <iostream>
#include <mutex>
#include <sstream>
#include <utility>

namespace hlock
{
namespace
{
std::mutex g_warning_mutex;
WarningHandler g_warning_handler;

void require_finite(double v, const char *name)
{
    if (!std::isfinite(v)) {
        throw NonFiniteParameter(std::string(name) + " must be finite");
    }
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace

WarningHandler set_warning_handler(WarningHandler handler)
{
    std::lock_guard lock(g_warning_mutex);
    return std::exchange(g_warning_handler, std::move(handler));
}

void warn(std::string_view message)
{
    std::lock_guard lock(g_warning_mutex);
    if (g_warning_handler) {
        g_warning_handler(message);
    } else {
        std::cerr << "warning: " << message << '\n';
    }
}

std::string_view to_string(Quadrature q)
{
    return q == Quadrature::plus ? "plus" : "minus";
}

OPOParams OPOParams::from_reflectivities(double r_s, double r_l, double chi, double tau,
                                         double detuning)
{
    require_finite(r_s, "R_s");
    require_finite(r_l, "R_l");
    require_finite(tau, "tau");
    if (!(r_s > 0.0 && r_s <= 1.0) || !(r_l > 0.0 && r_l <= 1.0)) {
        throw NonPhysicalReflectivity("mirror reflectivities must lie in (0, 1]");
    }
    if (!(tau > 0.0)) {
        throw NonPositiveRate("round-trip time must be positive");
    }
    OPOParams p;
    p.kappa_s = (1.0 - r_s) / (2.0 * tau);
    p.kappa_l = (1.0 - r_l) / (2.0 * tau);
    p.chi = chi;
    p.tau = tau;
    p.detuning = detuning;
    return p;
}

OPOParams OPOParams::from_ratios(double kappa, double chi_over_kappa, double kappa_s_over_kappa,
                                 double tau, double detuning)
{
    OPOParams p;
    p.kappa_s = kappa * kappa_s_over_kappa;
    p.kappa_l = kappa * (1.0 - kappa_s_over_kappa);
    p.chi = kappa * chi_over_kappa;
    p.tau = tau;
    p.detuning = detuning;
    return p;
}

const OPOParams &validate(const OPOParams &params)
{
    require_finite(params.kappa_s, "kappa_s");
    require_finite(params.kappa_l, "kappa_l");
    require_finite(params.chi, "chi");
    require_finite(params.tau, "tau");
    require_finite(params.detuning, "detuning");

    if (params.kappa_s < 0.0 || params.kappa_l < 0.0 || !(params.kappa() > 0.0)) {
        throw NonPositiveRate("decay rates must satisfy kappa_s >= 0, kappa_l >= 0, kappa > 0");
    }
    if (!(params.tau > 0.0)) {
        throw NonPositiveRate("round-trip time must be positive");
    }
    if (params.chi < 0.0) {
        throw NonPositiveRate("chi must be non-negative");
    }
    if (params.chi >= params.kappa()) {
        std::ostringstream os;
        os << "chi = " << params.chi << " is not below threshold kappa = " << params.kappa();
        throw ThresholdViolation(os.str());
    }
    // kappa_i = (1 - R_i)/(2 tau) with R_i in (0, 1] bounds each rate.
    if (params.reflectivity_s() <= 0.0 || params.reflectivity_l() <= 0.0) {
        throw NonPhysicalReflectivity("decay rate exceeds 1/(2 tau); implied reflectivity <= 0");
    }
    return params;
}

double fsr_of(const OPOParams &params)
{
    if (!(params.tau > 0.0)) {
        throw NonPositiveRate("round-trip time must be positive");
    }
    return 1.0 / params.tau;
}

TwoModeField TwoModeField::real_input(double amplitude, double power_split, double lo_offset)
{
    if (!(power_split > 0.0 && power_split <= 1.0)) {
        throw std::invalid_argument("power_split must lie in (0, 1]");
    }
    TwoModeField f;
    f.seed = {2.0 * amplitude * std::sqrt(power_split), 0.0};
    f.lo = {2.0 * amplitude * std::sqrt(1.0 - power_split), 0.0};
    f.lo_resonance_offset = lo_offset;
    f.power_split = power_split;
    return f;
}

std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index)
{
    return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
}

}  // namespace hlock
