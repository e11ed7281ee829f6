#include "hlock/steadystate.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace hlock
{
namespace
{
double determinant(const OPOParams &p)
{
    const double k = p.kappa();
    return k * k - p.chi * p.chi + p.detuning * p.detuning;
}

double db_of_power(double g_squared)
{
    return 10.0 * std::log10(g_squared);
}

bool feasible(const GainFit &fit)
{
    constexpr double kSlack = 1e-12;
    return std::isfinite(fit.chi_over_kappa) && std::isfinite(fit.kappa_s_over_kappa) &&
           fit.chi_over_kappa >= -kSlack && fit.chi_over_kappa < 1.0 &&
           fit.kappa_s_over_kappa > 0.0 && fit.kappa_s_over_kappa <= 1.0 + kSlack;
}

GainFit clamp_ratios(GainFit fit)
{
    fit.chi_over_kappa = std::max(fit.chi_over_kappa, 0.0);
    fit.kappa_s_over_kappa = std::min(fit.kappa_s_over_kappa, 1.0);
    return fit;
}

// g+ = 2r/(1-c) - 1, g- = 2r/(1+c) - 1  =>  closed form in (1+g+, 1+g-).
std::vector<GainFit> input_referenced_candidates(double amp, double deamp)
{
    std::vector<GainFit> out;
    const double p = 1.0 + amp;
    for (double sign : {1.0, -1.0}) {
        const double q = 1.0 + sign * deamp;
        if (!(q > 0.0)) {
            continue;
        }
        out.push_back({(p - q) / (p + q), p * q / (p + q)});
    }
    return out;
}

// a = g+/g0, b = g-/g0 with g0 = u - 1, u = 2 kappa_s/kappa. Eliminating chi
// leaves w (u - 1) = 0 or w = (a + b - 2) / (a + b - 2ab).
std::vector<GainFit> unpumped_referenced_candidates(double amp, double deamp)
{
    std::vector<GainFit> out;
    for (double sa : {1.0, -1.0}) {
        for (double sb : {1.0, -1.0}) {
            const double a = sa * amp;
            const double b = sb * deamp;
            const double denom = a + b - 2.0 * a * b;
            if (std::abs(denom) < 1e-300) {
                continue;
            }
            const double w = (a + b - 2.0) / denom;
            if (std::abs(w) < 1e-12) {
                continue;  // unpumped reflection vanishes; ratios undefined
            }
            const double u = 1.0 + w;
            const double one_minus_c = u / (1.0 + a * w);
            const double one_plus_c = u / (1.0 + b * w);
            if (!(one_minus_c > 0.0) || !(one_plus_c > 0.0)) {
                continue;
            }
            const double c = 1.0 - one_minus_c;
            if (std::abs((1.0 + c) - one_plus_c) > 1e-9) {
                continue;
            }
            out.push_back({c, 0.5 * u});
        }
    }
    return out;
}
}  // namespace

QuadPair output_quadratures(const OPOParams &params, const QuadPair &seed_in)
{
    const double k = params.kappa();
    const double chi = params.chi;
    const double delta = params.detuning;
    const double scale = 2.0 * params.kappa_s / determinant(params);
    return {
        scale * ((k + chi) * seed_in.x_plus - delta * seed_in.x_minus) - seed_in.x_plus,
        scale * ((k - chi) * seed_in.x_minus + delta * seed_in.x_plus) - seed_in.x_minus,
    };
}

std::complex<double> intracavity_amplitude(const OPOParams &params, const QuadPair &seed_in)
{
    const double k = params.kappa();
    const double chi = params.chi;
    const double delta = params.detuning;
    const double scale = std::sqrt(2.0 * params.kappa_s) / determinant(params);
    const QuadPair inside{
        scale * ((k + chi) * seed_in.x_plus - delta * seed_in.x_minus),
        scale * ((k - chi) * seed_in.x_minus + delta * seed_in.x_plus),
    };
    return inside.amplitude();
}

double error_signal(const OPOParams &params, double seed_amplitude)
{
    return output_quadratures(params, {2.0 * seed_amplitude, 0.0}).x_minus;
}

double error_slope(const OPOParams &params, double seed_amplitude)
{
    const double k = params.kappa();
    return 2.0 * params.kappa_s * (2.0 * seed_amplitude) / (k * k - params.chi * params.chi);
}

double classical_gain_db(const OPOParams &params, Quadrature quadrature, GainModel model)
{
    const double k = params.kappa();
    const double sign = quadrature == Quadrature::plus ? -1.0 : 1.0;
    double g = 2.0 * params.kappa_s / (k + sign * params.chi) - 1.0;
    if (model == GainModel::unpumped_referenced) {
        g /= 2.0 * params.kappa_s / k - 1.0;
    }
    return db_of_power(g * g);
}

GainFit fit_gains(double amp_db, double deamp_db, GainModel model)
{
    if (!(amp_db > 0.0) || !(deamp_db > 0.0) || !std::isfinite(amp_db) ||
        !std::isfinite(deamp_db)) {
        throw std::invalid_argument("fit_gains expects positive, finite dB magnitudes");
    }
    const double amp = std::pow(10.0, amp_db / 20.0);
    const double deamp = std::pow(10.0, -deamp_db / 20.0);
    const auto candidates = model == GainModel::input_referenced
                                ? input_referenced_candidates(amp, deamp)
                                : unpumped_referenced_candidates(amp, deamp);

    std::optional<GainFit> best;
    for (const auto &raw : candidates) {
        if (!feasible(raw)) {
            continue;
        }
        const GainFit fit = clamp_ratios(raw);
        // Regenerate with the forward model; reject branches that only solve
        // the eliminated system.
        const auto p = OPOParams::from_ratios(1.0, fit.chi_over_kappa, fit.kappa_s_over_kappa, 1e-3);
        if (std::abs(classical_gain_db(p, Quadrature::plus, model) - amp_db) > 1e-6 ||
            std::abs(classical_gain_db(p, Quadrature::minus, model) + deamp_db) > 1e-6) {
            continue;
        }
        if (!best || fit.kappa_s_over_kappa > best->kappa_s_over_kappa) {
            best = fit;
        }
    }
    if (!best) {
        std::ostringstream os;
        os << "no sub-threshold (chi/kappa, kappa_s/kappa) reproduces +" << amp_db << " dB / -"
           << deamp_db << " dB under the "
           << (model == GainModel::input_referenced ? "input-referenced" : "unpumped-referenced")
           << " gain model";
        throw NoFeasibleSolution(os.str());
    }
    return *best;
}

std::vector<double> LinearGrid::values() const
{
    if (points == 0) {
        throw std::invalid_argument("grid needs at least one point");
    }
    if (!std::isfinite(start) || !std::isfinite(stop)) {
        throw std::invalid_argument("grid bounds must be finite");
    }
    if (points == 1) {
        return {start};
    }
    if (!(stop > start)) {
        throw std::invalid_argument("grid must be strictly increasing");
    }
    std::vector<double> v(points);
    const double step = (stop - start) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) {
        v[i] = start + step * static_cast<double>(i);
    }
    v.back() = stop;
    return v;
}

SweepTrace sweep(const OPOParams &params, const TwoModeField &field, const LinearGrid &grid)
{
    validate(params);
    SweepTrace trace;
    trace.detunings = grid.values();
    trace.error_signal.reserve(trace.detunings.size());
    trace.transmission.reserve(trace.detunings.size());

    const bool has_lo = field.power_split < 1.0;
    const OPOParams lo_params = params.with_chi(0.0);

    double peak = 0.0;
    for (double delta : trace.detunings) {
        const OPOParams seed_params = params.with_detuning(delta);
        const QuadPair seed_out = output_quadratures(seed_params, field.seed);
        double e = seed_out.x_minus;
        if (has_lo) {
            const QuadPair lo_out =
                output_quadratures(lo_params.with_detuning(delta + field.lo_resonance_offset), field.lo);
            e = std::imag(seed_out.amplitude() * std::conj(lo_out.amplitude()));
        }
        trace.error_signal.push_back(e);

        const double power = std::norm(intracavity_amplitude(seed_params, field.seed));
        trace.transmission.push_back(power);
        peak = std::max(peak, power);
    }
    if (peak > 0.0) {
        for (double &t : trace.transmission) {
            t /= peak;
        }
    }
    return trace;
}

std::vector<std::size_t> sign_changes(const std::vector<double> &samples)
{
    std::vector<std::size_t> out;
    std::optional<std::size_t> last;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i] == 0.0) {
            continue;
        }
        if (last && std::signbit(samples[*last]) != std::signbit(samples[i])) {
            out.push_back(*last);
        }
        last = i;
    }
    return out;
}

}  // namespace hlock
