#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>

#include "cli.hpp"
#include "hlock/dynamics.hpp"
#include "hlock/ffsqueezer.hpp"
#include "hlock/lockloop.hpp"
#include "hlock/spectra.hpp"
#include "hlock/steadystate.hpp"

namespace hlock::cli
{
namespace
{
struct Check
{
    const char *name;
    std::function<bool()> pass;
};

OPOParams unit_cavity(double ks, double kl, double chi)
{
    return {.kappa_s = ks, .kappa_l = kl, .chi = chi, .tau = 0.01, .detuning = 0.0};
}

std::vector<Check> invariant_suite()
{
    return {
        {"vacuum level without pump",
         [] {
             for (double ks : {0.2, 0.5, 1.0}) {
                 for (int i = -50; i <= 50; ++i) {
                     const OPOParams p = unit_cavity(ks, 1.0 - ks, 0.0);
                     for (auto q : {Quadrature::plus, Quadrature::minus}) {
                         if (std::abs(variance(p, 0.1 * i, q) - 1.0) > 1e-12) return false;
                     }
                 }
             }
             return true;
         }},
        {"lossless cavity is minimum uncertainty",
         [] {
             for (double c : {0.1, 0.5, 0.9}) {
                 for (int i = -50; i <= 50; ++i) {
                     const OPOParams p = unit_cavity(1.0, 0.0, c);
                     const double prod = variance(p, 0.1 * i, Quadrature::plus) *
                                         variance(p, 0.1 * i, Quadrature::minus);
                     if (std::abs(prod - 1.0) > 1e-12) return false;
                 }
             }
             return true;
         }},
        {"mean-field integration reaches the closed form",
         [] {
             const OPOParams p{.kappa_s = 0.8, .kappa_l = 0.2, .chi = 0.4, .tau = 0.01, .detuning = 0.3};
             const QuadPair seed{1.0, 0.5};
             const QuadPair a = integrate_mean(p, seed, 80.0);
             const QuadPair b = output_quadratures(p, seed);
             return std::hypot(a.x_plus - b.x_plus, a.x_minus - b.x_minus) <
                    1e-8 * std::hypot(b.x_plus, b.x_minus);
         }},
        {"gain fit regenerates 3.9 / 2.6 dB (input referenced)",
         [] {
             const GainFit f = fit_gains(3.9, 2.6, GainModel::input_referenced);
             const OPOParams p = OPOParams::from_ratios(1.0, f.chi_over_kappa, f.kappa_s_over_kappa, 0.01);
             return std::abs(classical_gain_db(p, Quadrature::plus, GainModel::input_referenced) - 3.9) < 1e-6 &&
                    std::abs(classical_gain_db(p, Quadrature::minus, GainModel::input_referenced) + 2.6) < 1e-6;
         }},
        {"efficiency from 2.0 of 2.6 dB",
         [] { return std::abs(infer_efficiency(2.0, 2.6) - 0.82) <= 0.01; }},
        {"two-mode sweep has two opposite-slope features",
         [] {
             const TwoModeField field = TwoModeField::real_input(1.0, 0.01, 6.0);
             const SweepTrace t = sweep(unit_cavity(0.9, 0.1, 0.5), field, {-10.0, 4.0, 1401});
             const auto zc = sign_changes(t.error_signal);
             if (zc.size() != 2) return false;
             const double s0 = t.error_signal[zc[0] + 1] - t.error_signal[zc[0]];
             const double s1 = t.error_signal[zc[1] + 1] - t.error_signal[zc[1]];
             return (s0 > 0.0) != (s1 > 0.0);
         }},
        {"feed-forward cancels the ancilla",
         [] {
             for (double t : {0.1, 0.5, 0.9}) {
                 const auto m = universal_squeezer_transfer(FeedforwardConfig::with_default_gain(t));
                 if (std::abs(m(1, 3)) > 1e-12 || std::abs(m(1, 1) - 1.0 / std::sqrt(t)) > 1e-12) {
                     return false;
                 }
             }
             return true;
         }},
        {"noiseless lock acquires",
         [] {
             const OPOParams p = unit_cavity(0.9, 0.1, 0.5);
             LockConfig c = default_lock_config(p, error_slope(p, 1.0));
             c.disturbance.initial_offset = 0.5;
             c.duration *= 0.5;
             const LockResult r = simulate_lock(c);
             return !r.unstable && r.metrics.acquisition_time.has_value();
         }},
    };
}

int exit_code_for(const std::exception_ptr &ep, std::ostream &err)
{
    try {
        std::rethrow_exception(ep);
    } catch (const ConfigError &e) {
        err << "config error: " << e.what() << "\n";
        return 1;
    } catch (const PhysicsError &e) {
        err << "physics error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument &e) {
        err << "invalid input: " << e.what() << "\n";
        return 1;
    } catch (const std::out_of_range &e) {
        err << "invalid input: " << e.what() << "\n";
        return 1;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}
}  // namespace

int cmd_selftest(std::ostream &out, bool color)
{
    const char *green = color ? "\033[32m" : "";
    const char *red = color ? "\033[31m" : "";
    const char *reset = color ? "\033[0m" : "";
    int failed = 0;
    for (const auto &c : invariant_suite()) {
        bool ok = false;
        try {
            ok = c.pass();
        } catch (const std::exception &) {
            ok = false;
        }
        failed += ok ? 0 : 1;
        out << (ok ? green : red) << (ok ? "PASS" : "FAIL") << reset << "  " << c.name << "\n";
    }
    out << "selftest: " << failed << " failed\n";
    return failed;
}

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err, bool color)
{
    CLI::App app{"Homodyne-locked OPO modelling tool", "hlock"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    bool svg = false;
    std::uint64_t seed = 0;
    std::vector<std::string> overrides;

    auto add_common = [&](CLI::App *sub) {
        sub->add_option("--config", config_path, "configuration file")->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory");
        sub->add_flag("--svg", svg, "also write SVG plots");
        sub->add_option("--seed", seed, "RNG seed (overrides run.seed)");
        sub->add_option("--set", overrides, "section.key=value override (repeatable)")->take_all();
    };
    CLI::App *sweep_cmd = app.add_subcommand("sweep", "cavity sweep with the two-mode homodyne error signal");
    CLI::App *spectrum_cmd = app.add_subcommand("spectrum", "analytic quadrature noise spectra");
    CLI::App *lock_cmd = app.add_subcommand("lock", "closed-loop lock simulation");
    CLI::App *squeezer_cmd = app.add_subcommand("squeezer", "measurement and feed-forward squeezer");
    CLI::App *selftest_cmd = app.add_subcommand("selftest", "run the built-in invariant checks");
    for (auto *s : {sweep_cmd, spectrum_cmd, lock_cmd, squeezer_cmd}) add_common(s);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    if (selftest_cmd->parsed()) {
        return cmd_selftest(out, color) == 0 ? 0 : 3;
    }

    auto previous = set_warning_handler([&err](std::string_view m) { err << "warning: " << m << "\n"; });
    int code = 0;
    try {
        RunConfig cfg = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
        for (const auto &o : overrides) cfg.set(o);
        Options opt;
        opt.out_dir = out_dir;
        opt.svg = svg;
        opt.color = color;
        CLI::App *sub = app.get_subcommands().front();
        if (sub->count("--seed") > 0) opt.seed = seed;

        if (sub == sweep_cmd) {
            cmd_sweep(cfg, opt, out);
        } else if (sub == spectrum_cmd) {
            cmd_spectrum(cfg, opt, out);
        } else if (sub == lock_cmd) {
            cmd_lock(cfg, opt, out);
        } else {
            cmd_squeezer(cfg, opt, out);
        }
    } catch (...) {
        code = exit_code_for(std::current_exception(), err);
    }
    set_warning_handler(previous);
    return code;
}

}  // namespace hlock::cli
