#include "hlock/spectra.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hlock
{
namespace
{
void check_eta(double eta)
{
    if (!(eta > 0.0 && eta <= 1.0)) {
        throw std::invalid_argument("efficiency must lie in (0, 1]");
    }
}

bool beyond_fsr_guard(const OPOParams &params, double omega)
{
    return params.tau > 0.0 && std::abs(omega) > 0.1 * kTwoPi * params.fsr();
}
}  // namespace

TransferCoefficients transfer_coefficients(const OPOParams &params, double omega,
                                           Quadrature quadrature)
{
    const double s = quadrature == Quadrature::plus ? 1.0 : -1.0;
    const std::complex<double> k_omega(params.kappa(), omega);
    const std::complex<double> denom = k_omega - s * params.chi;
    return {
        (2.0 * params.kappa_s - k_omega + s * params.chi) / denom,
        2.0 * std::sqrt(params.kappa_s * params.kappa_l) / denom,
    };
}

double variance(const OPOParams &params, double omega, Quadrature quadrature, double eta)
{
    check_eta(eta);
    const auto c = transfer_coefficients(params, omega, quadrature);
    const double ideal = std::norm(c.seed) + std::norm(c.loss);
    return 1.0 - eta * (1.0 - ideal);
}

double variance_db(double v)
{
    return 10.0 * std::log10(v);
}

double db_to_variance(double db)
{
    return std::pow(10.0, db / 10.0);
}

double infer_efficiency(double detected_db, double ideal_db, EfficiencyConvention convention)
{
    if (!(detected_db >= 0.0) || !(ideal_db > 0.0)) {
        throw std::invalid_argument("squeezing levels must be non-negative dB magnitudes");
    }
    if (detected_db > ideal_db) {
        std::ostringstream os;
        os << "detected squeezing " << detected_db << " dB exceeds attainable " << ideal_db << " dB";
        throw Inconsistent(os.str());
    }
    double v_det = db_to_variance(-detected_db);
    double v_ideal = db_to_variance(-ideal_db);
    if (convention == EfficiencyConvention::amplitude) {
        v_det = std::sqrt(v_det);
        v_ideal = std::sqrt(v_ideal);
    }
    return (1.0 - v_det) / (1.0 - v_ideal);
}

SpectrumTrace spectrum_trace(const OPOParams &params, const LinearGrid &grid, double eta)
{
    validate(params);
    check_eta(eta);
    SpectrumTrace trace;
    trace.frequencies = grid.values();
    trace.efficiency = eta;

    const double limit = 10.0 * params.kappa();
    bool warned = false;
    for (double omega : trace.frequencies) {
        if (std::abs(omega) > limit) {
            throw GridOutOfRange("spectrum grid extends beyond 10 kappa from the resonance");
        }
        if (!warned && beyond_fsr_guard(params, omega)) {
            warn("|omega| exceeds 0.1 FSR; single-resonance spectrum is approximate there");
            warned = true;
        }
    }

    trace.absolute_hz.reserve(trace.frequencies.size());
    trace.variance_plus.reserve(trace.frequencies.size());
    trace.variance_minus.reserve(trace.frequencies.size());
    const double fsr = params.fsr();
    for (double omega : trace.frequencies) {
        trace.absolute_hz.push_back(fsr + omega / kTwoPi);
        trace.variance_plus.push_back(variance(params, omega, Quadrature::plus, eta));
        trace.variance_minus.push_back(variance(params, omega, Quadrature::minus, eta));
    }
    return trace;
}

}  // namespace hlock
