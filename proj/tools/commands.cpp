#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <ostream>
#include <random>

#include "cli.hpp"
#include "hlock/ffsqueezer.hpp"
#include "hlock/lockloop.hpp"
#include "hlock/spectra.hpp"
#include "hlock/steadystate.hpp"
#include "output.hpp"

namespace hlock::cli
{
namespace
{
constexpr std::uint64_t kDefaultSeed = 1;
constexpr std::uint64_t kShotStream = 0x73686f7473ULL;  // "shots"

std::string printf_string(const char *fmt, ...)
{
    char buf[512];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, args);
    va_end(args);
    return buf;
}

std::uint64_t seed_of(const RunConfig &cfg, const Options &opt)
{
    return opt.seed.value_or(cfg.integer_or("run.seed", kDefaultSeed));
}

Provenance provenance(const char *command, const RunConfig &cfg, const Options &opt)
{
    return {command, cfg.hash(), seed_of(cfg, opt), {}};
}

void emit(const Options &opt, const std::string &name, const Provenance &prov,
          const std::vector<Column> &columns)
{
    std::filesystem::create_directories(opt.out_dir);
    write_text(opt.out_dir / (name + ".csv"), render_csv(prov, columns));
}

void emit_svg(const Options &opt, const std::string &name, const std::string &title,
              const std::string &x_label, const std::vector<double> &x,
              const std::vector<Series> &series)
{
    if (opt.svg) {
        write_text(opt.out_dir / (name + ".svg"), render_svg(title, x_label, x, series));
    }
}

void forbid_together(const RunConfig &cfg, std::string_view a, std::string_view b)
{
    if (cfg.has(a) && cfg.has(b)) {
        throw ConfigError("'" + std::string(a) + "' and '" + std::string(b) + "' are mutually exclusive");
    }
}

GainModel gain_model(const RunConfig &cfg)
{
    return cfg.text_or("gains.model", "unpumped_referenced") == "input_referenced"
               ? GainModel::input_referenced
               : GainModel::unpumped_referenced;
}

const char *sign_char(double x)
{
    return x > 0.0 ? "+" : "-";
}
}  // namespace

OPOParams cavity_from(const RunConfig &cfg)
{
    forbid_together(cfg, "cavity.tau", "cavity.fsr");
    double tau = 0.0;
    if (cfg.has("cavity.tau")) {
        tau = cfg.number("cavity.tau");
    } else if (cfg.has("cavity.fsr")) {
        const double fsr = cfg.number("cavity.fsr");
        if (!(fsr > 0.0)) throw ConfigError("cavity.fsr must be positive");
        tau = 1.0 / fsr;
    } else {
        throw ConfigError("the cavity needs either cavity.fsr or cavity.tau");
    }
    const double detuning = cfg.number_or("cavity.detuning", 0.0);

    const bool from_gains = cfg.has("gains.amplification") || cfg.has("gains.deamplification");
    if (from_gains) {
        for (auto k : {"cavity.kappa_s", "cavity.kappa_l", "cavity.chi"}) {
            if (cfg.has(k)) {
                throw ConfigError(std::string(k) + " cannot be combined with [gains]; the gains fix it");
            }
        }
        const double kappa = cfg.number("cavity.kappa");
        const GainFit fit = fit_gains(cfg.number("gains.amplification"),
                                      cfg.number("gains.deamplification"), gain_model(cfg));
        return validate(OPOParams::from_ratios(kappa, fit.chi_over_kappa, fit.kappa_s_over_kappa, tau,
                                               detuning));
    }
    if (cfg.has("cavity.kappa")) {
        throw ConfigError("cavity.kappa is only used together with [gains]; give kappa_s and kappa_l");
    }
    OPOParams p;
    p.kappa_s = cfg.number("cavity.kappa_s");
    p.kappa_l = cfg.number_or("cavity.kappa_l", 0.0);
    p.chi = cfg.number_or("cavity.chi", 0.0);
    p.tau = tau;
    p.detuning = detuning;
    return validate(p);
}

Efficiency efficiency_from(const RunConfig &cfg, const OPOParams &params)
{
    forbid_together(cfg, "detection.efficiency", "detection.detected_squeezing");
    Efficiency e;
    if (cfg.has("detection.efficiency")) {
        e.eta = cfg.number("detection.efficiency");
        if (!(e.eta > 0.0 && e.eta <= 1.0)) {
            throw ConfigError("detection.efficiency must lie in (0, 1]");
        }
        return e;
    }
    if (!cfg.has("detection.detected_squeezing")) {
        if (cfg.has("detection.ideal_squeezing") || cfg.has("detection.convention")) {
            throw ConfigError("detection.ideal_squeezing/convention need detection.detected_squeezing");
        }
        return e;
    }
    e.inferred = true;
    e.detected_db = cfg.number("detection.detected_squeezing");
    e.ideal_db = cfg.has("detection.ideal_squeezing")
                     ? cfg.number("detection.ideal_squeezing")
                     : -variance_db(variance(params.with_detuning(0.0), 0.0, Quadrature::minus));
    e.convention = cfg.text_or("detection.convention", "power");
    e.eta = infer_efficiency(e.detected_db, e.ideal_db,
                             e.convention == "amplitude" ? EfficiencyConvention::amplitude
                                                         : EfficiencyConvention::power);
    return e;
}

void cmd_sweep(const RunConfig &cfg, const Options &opt, std::ostream &out)
{
    const OPOParams p = cavity_from(cfg);
    const double k = p.kappa();
    const double offset = cfg.number_or("sweep.lo_offset", 6.0 * k);
    const double start = cfg.number_or("sweep.start", std::min(0.0, -offset) - 4.0 * k);
    const double stop = cfg.number_or("sweep.stop", std::max(0.0, -offset) + 4.0 * k);
    const auto points = static_cast<std::size_t>(cfg.integer_or("sweep.points", 2001));
    const TwoModeField field = TwoModeField::real_input(cfg.number_or("sweep.seed_amplitude", 1.0) * std::sqrt(k),
                                                        cfg.number_or("sweep.power_split", 0.01), offset);
    const SweepTrace t = sweep(p, field, {start, stop, points});

    std::vector<double> scaled(t.detunings.size());
    std::transform(t.detunings.begin(), t.detunings.end(), scaled.begin(), [k](double d) { return d / k; });

    Provenance prov = provenance("sweep", cfg, opt);
    prov.notes.push_back("kappa_rad_s: " + format_number(k));
    emit(opt, "sweep", prov,
         {{"detuning_rad_s", t.detunings},
          {"detuning_over_kappa", scaled},
          {"error_signal", t.error_signal},
          {"transmission", t.transmission}});
    emit_svg(opt, "sweep", "Homodyne error signal and transmission", "detuning / kappa", scaled,
             {{"error signal", &t.error_signal}, {"transmission", &t.transmission}});

    const auto zc = sign_changes(t.error_signal);
    std::string crossings;
    for (std::size_t i : zc) {
        const double slope = t.error_signal[i + 1] - t.error_signal[i];
        crossings += printf_string(" %.3f(%s)", 0.5 * (scaled[i] + scaled[i + 1]), sign_char(slope));
    }
    const auto peak = std::max_element(t.transmission.begin(), t.transmission.end());
    out << printf_string("sweep: %zu zero crossings at Delta/kappa =", zc.size()) << crossings
        << printf_string("; transmission peak at Delta/kappa = %.3f; wrote %zu points\n",
                         scaled[static_cast<std::size_t>(peak - t.transmission.begin())], points);
}

void cmd_spectrum(const RunConfig &cfg, const Options &opt, std::ostream &out)
{
    const OPOParams p = cavity_from(cfg);
    const Efficiency eff = efficiency_from(cfg, p);
    const double k = p.kappa();
    const double start = cfg.number_or("spectrum.start", -3.0 * k);
    const double stop = cfg.number_or("spectrum.stop", 3.0 * k);
    const auto points = static_cast<std::size_t>(cfg.integer_or("spectrum.points", 601));
    const SpectrumTrace t = spectrum_trace(p, {start, stop, points}, eff.eta);

    std::vector<double> vp_db, vm_db;
    for (double v : t.variance_plus) vp_db.push_back(variance_db(v));
    for (double v : t.variance_minus) vm_db.push_back(variance_db(v));

    Provenance prov = provenance("spectrum", cfg, opt);
    prov.notes.push_back("kappa_rad_s: " + format_number(k));
    prov.notes.push_back("efficiency: " + format_number(eff.eta));
    if (eff.inferred) {
        prov.notes.push_back("efficiency inferred from " + format_number(eff.detected_db) + " dB detected / " +
                             format_number(eff.ideal_db) + " dB ideal (" + eff.convention + " convention)");
        prov.notes.push_back("open question: the experiment quotes an efficiency greater than 87%, which "
                             "this formula does not reproduce");
    }
    emit(opt, "spectrum", prov,
         {{"omega_rad_s", t.frequencies},
          {"absolute_hz", t.absolute_hz},
          {"variance_plus", t.variance_plus},
          {"variance_minus", t.variance_minus},
          {"variance_plus_db", vp_db},
          {"variance_minus_db", vm_db}});
    std::vector<double> mhz(t.frequencies.size());
    std::transform(t.frequencies.begin(), t.frequencies.end(), mhz.begin(),
                   [](double w) { return w / kTwoPi / 1e6; });
    emit_svg(opt, "spectrum", "Quadrature noise relative to vacuum (dB)", "offset from resonance (MHz)",
             mhz, {{"X+ (dB)", &vp_db}, {"X- (dB)", &vm_db}});

    const auto best = std::min_element(vm_db.begin(), vm_db.end());
    const auto at = static_cast<std::size_t>(best - vm_db.begin());
    out << printf_string("spectrum: min V- = %.3f dB at omega/kappa = %.3f (resonance %.6g MHz); "
                         "V+ there = %.3f dB; eta = %.4f",
                         *best, t.frequencies[at] / k, p.fsr() / 1e6,
                         vp_db[at], eff.eta);
    if (eff.inferred) {
        out << printf_string(" inferred (%s convention) from %.2f dB of %.2f dB; note: the >87%% "
                             "efficiency quoted for the experiment is not reproduced",
                             eff.convention.c_str(), eff.detected_db, eff.ideal_db);
    }
    out << "\n";
}

void cmd_lock(const RunConfig &cfg, const Options &opt, std::ostream &out)
{
    const OPOParams p = cavity_from(cfg);
    const double k = p.kappa();
    // seed amplitudes are in units of sqrt(kappa), so the loop behaves the same at any linewidth
    const double slope = error_slope(p, cfg.number_or("lock.seed_amplitude", 10.0) * std::sqrt(k));
    LockConfig lc = default_lock_config(p, slope);
    lc.rng_seed = seed_of(cfg, opt);
    lc.dt = cfg.number_or("lock.dt", lc.dt);
    if (cfg.has("lock.duration")) {
        lc.duration = cfg.number("lock.duration");
        lc.metrics_start = 0.2 * lc.duration;
    }
    lc.controller.kp = cfg.number_or("lock.kp", lc.controller.kp);
    lc.controller.ki = cfg.number_or("lock.ki", lc.controller.ki);
    lc.actuator_bandwidth = cfg.number_or("lock.actuator_bandwidth", lc.actuator_bandwidth);
    lc.actuator_range = cfg.number_or("lock.actuator_range", lc.actuator_range);
    lc.disturbance.initial_offset = cfg.number_or("lock.initial_offset", 0.0);
    lc.disturbance.sine_amplitude = cfg.number_or("lock.sine_amplitude", 0.0);
    lc.disturbance.sine_frequency = cfg.number_or("lock.sine_frequency", 0.0);
    lc.disturbance.random_walk_diffusion = cfg.number_or("lock.random_walk_diffusion", 0.0);
    const std::string noise = cfg.text_or("lock.noise", "noiseless");
    lc.noise_mode = noise == "qnl" ? NoiseMode::qnl : noise == "squeezed" ? NoiseMode::squeezed : NoiseMode::noiseless;

    const LockResult r = simulate_lock(lc);
    const std::size_t every =
        std::max<std::size_t>(1, cfg.integer_or("lock.record_every", std::max<std::size_t>(1, r.t.size() / 5000)));
    std::vector<Column> cols{{"t_s", {}}, {"delta_rad_s", {}}, {"delta_open_loop_rad_s", {}},
                             {"error", {}}, {"control_rad_s", {}}};
    for (std::size_t i = 0; i < r.t.size(); i += every) {
        cols[0].values.push_back(r.t[i]);
        cols[1].values.push_back(r.delta[i]);
        cols[2].values.push_back(r.delta_open_loop[i]);
        cols[3].values.push_back(r.error[i]);
        cols[4].values.push_back(r.control[i]);
    }
    Provenance prov = provenance("lock", cfg, opt);
    prov.notes.push_back("kappa_rad_s: " + format_number(k));
    prov.notes.push_back("noise: " + noise + ", crossover_rad_s: " + format_number(crossover_frequency(lc)));
    if (r.unstable) prov.notes.push_back("unstable: detuning ran away; record truncated");
    emit(opt, "lock", prov, cols);
    emit_svg(opt, "lock", "Detuning under lock", "time (s)", cols[0].values,
             {{"open loop (rad/s)", &cols[2].values}, {"locked (rad/s)", &cols[1].values}});

    const LockMetrics &m = r.metrics;
    out << printf_string("lock: %s; rms detuning %.4g kappa locked vs %.4g kappa open loop; ",
                         r.unstable ? "UNSTABLE" : "stable", m.rms_detuning_locked / k,
                         m.rms_detuning_open_loop / k);
    if (m.acquisition_time) {
        out << printf_string("acquired at t = %.4g s; ", *m.acquisition_time);
    } else {
        out << "not acquired; ";
    }
    out << printf_string("in lock %.1f%% of the time", 100.0 * m.in_lock_fraction);

    const auto trials = static_cast<std::size_t>(cfg.integer_or("lock.trials", 0));
    if (trials > 0) {
        const NoiseComparison c = residual_noise_comparison(lc, trials);
        out << printf_string("; squeezed/qnl residual ratio %.4f +- %.4f over %zu trials (sqrt V- = %.4f)",
                             c.ratio,
                             c.ratio * std::hypot(c.stderr_squeezed / c.mean_squeezed, c.stderr_qnl / c.mean_qnl),
                             c.trials, std::sqrt(variance(p.with_detuning(0.0), 0.0, Quadrature::minus)));
    }
    out << "\n";
}

void cmd_squeezer(const RunConfig &cfg, const Options &opt, std::ostream &out)
{
    const double t = cfg.number_or("squeezer.transmittivity", 0.5);
    if (!(t > 0.0 && t < 1.0)) throw ConfigError("squeezer.transmittivity must lie in (0, 1)");
    const double v = db_to_variance(-cfg.number_or("squeezer.ancilla_squeezing", 6.0));
    FeedforwardConfig ff;
    ff.transmittivity = t;
    ff.measured_quadrature = cfg.text_or("squeezer.measured", "minus") == "plus" ? Quadrature::plus : Quadrature::minus;
    ff.gain = cfg.number_or("squeezer.gain", default_feedforward_gain(t));

    GaussianState input = coherent({cfg.number_or("squeezer.input_x_plus", 0.0),
                                    cfg.number_or("squeezer.input_x_minus", 0.0)});
    input.cov(0, 0) = cfg.number_or("squeezer.input_v_plus", 1.0);
    input.cov(1, 1) = cfg.number_or("squeezer.input_v_minus", 1.0);
    if (!is_physical(input)) {
        throw NonPhysicalState("input variances violate the uncertainty relation");
    }

    const GaussianState s = universal_squeezer(input, v, ff);
    const auto m = universal_squeezer_transfer(ff);
    const int fed = ff.measured_quadrature == Quadrature::plus ? 0 : 1;

    Provenance prov = provenance("squeezer", cfg, opt);
    prov.notes.push_back("measured quadrature: " + std::string(to_string(ff.measured_quadrature)));
    for (int row = 0; row < 2; ++row) {
        prov.notes.push_back(std::string("transfer out") + (row == 0 ? "+" : "-") + " <- (in+, in-, anc+, anc-): " +
                             format_number(m(row, 0)) + ", " + format_number(m(row, 1)) + ", " +
                             format_number(m(row, 2)) + ", " + format_number(m(row, 3)));
    }
    emit(opt, "squeezer", prov,
         {{"transmittivity", {t}},
          {"gain", {ff.gain}},
          {"ancilla_v_minus", {v}},
          {"mean_plus", {s.mean(0)}},
          {"mean_minus", {s.mean(1)}},
          {"var_plus", {s.cov(0, 0)}},
          {"var_minus", {s.cov(1, 1)}},
          {"cov_plus_minus", {s.cov(0, 1)}},
          {"purity_det", {purity_determinant(s)}}});

    const auto shots = static_cast<std::size_t>(cfg.integer_or("squeezer.shots", 0));
    if (shots > 0) {
        std::mt19937_64 rng(derive_stream_seed(seed_of(cfg, opt), kShotStream, 0));
        Column outcome{"outcome", {}}, mp{"mean_plus", {}}, mm{"mean_minus", {}};
        for (std::size_t i = 0; i < shots; ++i) {
            const SqueezerShot shot = universal_squeezer_shot(input, v, ff, rng);
            outcome.values.push_back(shot.outcome);
            mp.values.push_back(shot.output.mean(0));
            mm.values.push_back(shot.output.mean(1));
        }
        emit(opt, "squeezer_shots", provenance("squeezer", cfg, opt), {outcome, mp, mm});
        emit_svg(opt, "squeezer_shots", "Conditional output mean per shot", "homodyne outcome",
                 outcome.values, {{"mean X+", &mp.values}, {"mean X-", &mm.values}});
    }

    out << printf_string("squeezer: T = %.4g, g = %.6g, measured %s; output V+ = %.4g, V- = %.4g, det = %.6g; "
                         "ancilla coefficient in fed quadrature = %.3g; input gain there = %.6g\n",
                         t, ff.gain, std::string(to_string(ff.measured_quadrature)).c_str(), s.cov(0, 0),
                         s.cov(1, 1), purity_determinant(s), m(fed, 2 + fed), m(fed, fed));
}

}  // namespace hlock::cli
