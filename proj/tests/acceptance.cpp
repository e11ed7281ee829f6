// Acceptance checks. Prints one PASS/FAIL line per criterion; with
// `--only N` runs a single criterion (used by ctest so each shows up on its
// own). Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "config.hpp"
#include "hlock/dynamics.hpp"
#include "hlock/ffsqueezer.hpp"
#include "hlock/lockloop.hpp"
#include "hlock/parallel.hpp"
#include "hlock/spectra.hpp"
#include "hlock/steadystate.hpp"
#include "oracles.hpp"

using namespace hlock;
namespace fs = std::filesystem;

namespace
{
// Pinned tolerances.
constexpr double kAnalyticTol = 1e-12;
constexpr double kMeanFieldTol = 1e-8;
constexpr double kSpectrumTol = 0.05;
constexpr double kGainTol = 1e-6;
constexpr double kEfficiencyTarget = 0.82, kEfficiencyTol = 0.01;
constexpr double kSqueezingTarget = -2.0, kSqueezingTol = 0.3;
constexpr double kRatioSqueezedTol = 0.10, kRatioVacuumTol = 0.03;
constexpr double kSuppressionMax = 0.10, kPredictionTol = 0.20;
constexpr double kSqueezerTol = 1e-12, kMonteCarloTol = 0.02;

const fs::path kConfigs = HLOCK_CONFIG_DIR;

struct Verdict
{
    bool pass = false;
    std::string detail;
};

struct Criterion
{
    int id;
    const char *name;
    double budget_s;
    std::function<Verdict()> run;
};

std::string fmt(const char *f, ...)
{
    char buf[512];
    va_list a;
    va_start(a, f);
    std::vsnprintf(buf, sizeof buf, f, a);
    va_end(a);
    return buf;
}

double rel(double a, double b)
{
    return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

OPOParams unit(double ks, double kl, double chi, double delta = 0.0)
{
    return {.kappa_s = ks, .kappa_l = kl, .chi = chi, .tau = 1e-3, .detuning = delta};
}

std::vector<double> omega_grid(double kappa)
{
    return LinearGrid{-10.0 * kappa, 10.0 * kappa, 1000}.values();
}

// Parameters fitted to the bundled gains, with the bundled linewidth and FSR.
OPOParams bundled_cavity()
{
    return cli::cavity_from(cli::RunConfig::load(kConfigs / "spectrum_199mhz.cfg"));
}

Verdict qnl()
{
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int d = 0; d < 100; ++d) {
        const OPOParams p = unit(0.01 + 2.0 * u(rng), 2.0 * u(rng), 0.0);
        for (double w : omega_grid(p.kappa())) {
            for (auto q : {Quadrature::plus, Quadrature::minus}) {
                worst = std::max(worst, std::abs(variance(p, w, q) - 1.0));
            }
        }
    }
    return {worst <= kAnalyticTol, fmt("max |V - 1| = %.2e over 100 draws x 1000 frequencies", worst)};
}

Verdict purity()
{
    std::mt19937_64 rng(102);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int d = 0; d < 100; ++d) {
        const double ks = 0.01 + 2.0 * u(rng);
        const OPOParams p = unit(ks, 0.0, 0.999 * ks * u(rng));
        for (double w : omega_grid(p.kappa())) {
            worst = std::max(worst, std::abs(variance(p, w, Quadrature::plus) *
                                                 variance(p, w, Quadrature::minus) -
                                             1.0));
        }
    }
    return {worst <= kAnalyticTol, fmt("max |V+ V- - 1| = %.2e with no loss port", worst)};
}

Verdict mean_field()
{
    std::mt19937_64 rng(103);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int d = 0; d < 1000; ++d) {
        const double kappa = 0.1 + 10.0 * u(rng);
        const double ks = kappa * (0.05 + 0.95 * u(rng));
        const OPOParams p = unit(ks, kappa - ks, 0.95 * kappa * u(rng), kappa * (6.0 * u(rng) - 3.0));
        const QuadPair seed{4.0 * u(rng) - 2.0, 4.0 * u(rng) - 2.0};
        const QuadPair got = integrate_mean(p, seed, 50.0 / (p.kappa() - p.chi));
        const QuadPair want = output_quadratures(p, seed);
        worst = std::max(worst, std::hypot(got.x_plus - want.x_plus, got.x_minus - want.x_minus) /
                                    std::hypot(want.x_plus, want.x_minus));
    }
    return {worst <= kMeanFieldTol, fmt("max relative deviation %.2e over 1000 draws", worst)};
}

Verdict spectrum_oracle()
{
    // kappa = 1; dt kappa = 0.05; 4096-sample Hann segments (bin 0.031 kappa),
    // 16 trials x 1024 segments averaged; bins 1 .. 3 kappa compared.
    const std::vector<OPOParams> sets = {
        unit(1.0, 0.0, 0.0),   unit(0.8, 0.2, 0.1), unit(1.0, 0.0, 0.3), unit(0.6, 0.4, 0.5),
        unit(0.9, 0.1, 0.5),   unit(0.5, 0.5, 0.6), unit(1.0, 0.0, 0.7), unit(0.7, 0.3, 0.7),
        unit(1.0, 0.0, 0.8),   unit(0.85, 0.15, 0.8),
    };
    constexpr std::size_t kSegment = 4096, kTrials = 16, kSegmentsPerTrial = 1024;
    constexpr double kDt = 0.05;
    double worst = 0.0;
    std::string where;
    std::size_t total_segments = 0;
    for (std::size_t s = 0; s < sets.size(); ++s) {
        SimConfig c;
        c.params = sets[s];
        c.dt = kDt;
        c.duration = kDt * static_cast<double>((kSegmentsPerTrial + 1) * kSegment / 2);
        c.seed_value = 400 + s;
        std::vector<double> plus, minus, omega;
        total_segments = 0;
        for (std::size_t t = 0; t < kTrials; ++t) {
            const TimeSeries ts = integrate_fluctuations(c, t);
            const Psd pp = welch_psd(ts.x_plus_out, kDt, kSegment, 0.5);
            const Psd pm = welch_psd(ts.x_minus_out, kDt, kSegment, 0.5);
            if (plus.empty()) {
                plus.assign(pp.value.size(), 0.0);
                minus.assign(pm.value.size(), 0.0);
                omega = pp.omega;
            }
            for (std::size_t k = 0; k < plus.size(); ++k) {
                plus[k] += pp.value[k] / kTrials;
                minus[k] += pm.value[k] / kTrials;
            }
            total_segments += pp.segments;
        }
        for (std::size_t k = 1; k < omega.size() && omega[k] <= 3.0; ++k) {
            for (auto [q, est] : {std::pair{Quadrature::plus, &plus}, std::pair{Quadrature::minus, &minus}}) {
                const double dev = rel((*est)[k], variance(c.params, omega[k], q));
                if (dev > worst) {
                    worst = dev;
                    where = fmt("set %zu (chi %.2f), omega %.3f, %s", s, c.params.chi, omega[k],
                                std::string(to_string(q)).c_str());
                }
            }
        }
    }
    return {worst <= kSpectrumTol,
            fmt("max pointwise deviation %.2f%% at %s; %zu segments per set", 100.0 * worst, where.c_str(),
                total_segments)};
}

Verdict gains()
{
    const GainFit f = fit_gains(3.9, 2.6, GainModel::input_referenced);
    const OPOParams p = OPOParams::from_ratios(1.0, f.chi_over_kappa, f.kappa_s_over_kappa, 1e-3);
    const double amp = classical_gain_db(p, Quadrature::plus, GainModel::input_referenced);
    const double deamp = -classical_gain_db(p, Quadrature::minus, GainModel::input_referenced);
    const bool fits = std::abs(amp - 3.9) <= kGainTol && std::abs(deamp - 2.6) <= kGainTol;
    std::string alternate;
    bool alternate_ok = false;
    try {
        const GainFit g = fit_gains(3.9, 2.6, GainModel::unpumped_referenced);
        const OPOParams q = OPOParams::from_ratios(1.0, g.chi_over_kappa, g.kappa_s_over_kappa, 1e-3);
        alternate_ok =
            std::abs(classical_gain_db(q, Quadrature::plus, GainModel::unpumped_referenced) - 3.9) <= kGainTol &&
            std::abs(classical_gain_db(q, Quadrature::minus, GainModel::unpumped_referenced) + 2.6) <= kGainTol;
        alternate = fmt("unpumped-referenced chi/kappa %.5f", g.chi_over_kappa);
    } catch (const NoFeasibleSolution &) {
        alternate_ok = true;
        alternate = "unpumped-referenced: NoFeasibleSolution";
    }
    return {fits && alternate_ok,
            fmt("input-referenced chi/kappa = %.5f, kappa_s/kappa = %.5f -> %.9f / %.9f dB; %s",
                f.chi_over_kappa, f.kappa_s_over_kappa, amp, deamp, alternate.c_str())};
}

Verdict efficiency()
{
    const double eta = infer_efficiency(2.0, 2.6);
    std::ostringstream out, err;
    const fs::path dir = fs::temp_directory_path() / "hlock_acceptance_6";
    const int code = cli::run({"spectrum", "--config", (kConfigs / "spectrum_199mhz.cfg").string(), "--out", dir.string()},
                              out, err);
    const bool surfaced = code == 0 && out.str().find("87%") != std::string::npos;
    return {std::abs(eta - kEfficiencyTarget) <= kEfficiencyTol && surfaced,
            fmt("eta = %.4f (power convention; amplitude convention gives %.4f); caveat in CLI output: %s", eta,
                infer_efficiency(2.0, 2.6, EfficiencyConvention::amplitude), surfaced ? "yes" : "no")};
}

std::vector<std::vector<double>> csv_rows(const fs::path &p)
{
    std::ifstream in(p);
    std::vector<std::vector<double>> out;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (header) {
            header = false;
            continue;
        }
        std::vector<double> r;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) r.push_back(std::stod(cell));
        out.push_back(std::move(r));
    }
    return out;
}

Verdict sweep_features()
{
    const fs::path dir = fs::temp_directory_path() / "hlock_acceptance_7";
    std::ostringstream out, err;
    if (cli::run({"sweep", "--config", (kConfigs / "sweep_199mhz.cfg").string(), "--out", dir.string()}, out, err) != 0) {
        return {false, "sweep command failed: " + err.str()};
    }
    const auto rows = csv_rows(dir / "sweep.csv");
    std::vector<double> e, tr, d;
    for (const auto &r : rows) {
        d.push_back(r[1]);
        e.push_back(r[2]);
        tr.push_back(r[3]);
    }
    const auto zc = sign_changes(e);
    std::vector<int> slopes;
    for (std::size_t i : zc) slopes.push_back(e[i + 1] > e[i] ? 1 : -1);
    // interior local maxima of the transmission
    std::vector<double> peaks;
    for (std::size_t i = 1; i + 1 < tr.size(); ++i) {
        if (tr[i] > tr[i - 1] && tr[i] >= tr[i + 1]) peaks.push_back(d[i]);
    }
    const double step = d[1] - d[0];
    const bool two = zc.size() == 2 && slopes[0] != slopes[1];
    const bool peaks_ok = !peaks.empty() && std::all_of(peaks.begin(), peaks.end(),
                                                        [&](double x) { return std::abs(x) <= step; });
    std::string where;
    for (std::size_t i : zc) where += fmt(" %.3f", d[i]);
    return {two && peaks_ok, fmt("%zu crossings at Delta/kappa =%s with slopes %s; transmission maxima at %zu "
                                 "point(s), all at the seed resonance: %s",
                                 zc.size(), where.c_str(),
                                 slopes.size() == 2 ? (slopes[0] != slopes[1] ? "opposite" : "equal") : "n/a",
                                 peaks.size(), peaks_ok ? "yes" : "no")};
}

Verdict squeezing_level()
{
    const OPOParams p = bundled_cavity();
    const double eta = infer_efficiency(2.0, 2.6);
    const double k = p.kappa();
    const SpectrumTrace t = spectrum_trace(p, {-3.0 * k, 3.0 * k, 601}, eta);
    const auto best = std::min_element(t.variance_minus.begin(), t.variance_minus.end());
    const auto at = static_cast<std::size_t>(best - t.variance_minus.begin());
    const double db = variance_db(*best);
    const bool at_zero = std::abs(t.frequencies[at]) < 1e-9 * k;
    const bool near_fsr = std::abs(t.absolute_hz[at] - 199e6) < 1e6;
    return {std::abs(db - kSqueezingTarget) <= kSqueezingTol && at_zero && near_fsr,
            fmt("min V- = %.3f dB (ideal %.3f dB) at omega = %.3g rad/s, %.6g MHz, eta = %.4f", db,
                variance_db(variance(p, 0.0, Quadrature::minus)), t.frequencies[at], t.absolute_hz[at] / 1e6,
                eta)};
}

Verdict discriminator()
{
    auto ratio_for = [](double chi) {
        const OPOParams p = unit(1.0, 0.0, chi);
        LockConfig c = default_lock_config(p, error_slope(p, 10.0));
        return residual_noise_comparison(c, 50);
    };
    const NoiseComparison sq = ratio_for(0.5);
    const NoiseComparison vac = ratio_for(0.0);
    const bool ok = std::abs(sq.ratio / (1.0 / 3.0) - 1.0) <= kRatioSqueezedTol &&
                    std::abs(vac.ratio - 1.0) <= kRatioVacuumTol;
    return {ok, fmt("chi = 0.5 kappa: ratio %.4f (target 1/3); chi = 0: ratio %.4f; %zu trials each", sq.ratio,
                    vac.ratio, sq.trials)};
}

Verdict acquisition()
{
    const OPOParams p = unit(0.9, 0.1, 0.5);
    LockConfig c = default_lock_config(p, error_slope(p, 1.0));
    LockConfig acq = c;
    acq.disturbance.initial_offset = 0.5 * p.kappa();
    const LockResult a = simulate_lock(acq);

    const double wc = crossover_frequency(c);
    const double wd = wc / 20.0;
    LockConfig dist = c;
    dist.disturbance.sine_amplitude = 0.01 * p.kappa();
    dist.disturbance.sine_frequency = wd / kTwoPi;
    dist.duration = 40.0 * kTwoPi / wd;
    dist.metrics_start = 0.25 * dist.duration;
    const LockResult r = simulate_lock(dist);
    const double measured = r.metrics.rms_detuning_locked / r.metrics.rms_detuning_open_loop;
    const double predicted = predicted_suppression(dist, wd);
    const bool ok = !a.unstable && a.metrics.acquisition_time.has_value() && measured <= kSuppressionMax &&
                    std::abs(measured / predicted - 1.0) <= kPredictionTol;
    return {ok, fmt("acquired at t kappa = %.1f; suppression %.4f vs predicted %.4f at omega = crossover/20",
                    a.metrics.acquisition_time ? *a.metrics.acquisition_time * p.kappa() : -1.0, measured,
                    predicted)};
}

Verdict squeezer()
{
    double coeff = 0.0, gain_err = 0.0;
    for (double t : {0.1, 0.5, 0.9}) {
        const FeedforwardConfig cfg = FeedforwardConfig::with_default_gain(t);
        coeff = std::max(coeff, std::abs(universal_squeezer_transfer(cfg)(1, 3)));
        const GaussianState out = universal_squeezer(coherent({0.0, 1.7}), 0.05, cfg);
        gain_err = std::max(gain_err, std::abs(out.quadrature_mean(0, Quadrature::minus) / 1.7 - 1.0 / std::sqrt(t)));
    }

    // sampled quadratures pushed through the hand-derived circuit, and shots
    // of the conditional simulation, both against the covariance algebra
    const double t = 0.5, v = 0.2;
    const FeedforwardConfig cfg = FeedforwardConfig::with_default_gain(t);
    GaussianState input = coherent({0.4, -0.2});
    input.cov(0, 0) = 1.5;
    input.cov(1, 1) = 0.8;
    const GaussianState algebra = universal_squeezer(input, v, cfg);

    std::mt19937_64 rng(1111);
    const GaussianState joint = product(input, squeezed_vacuum(v));
    const Eigen::MatrixXd x = oracle::sample_gaussian(joint.mean, joint.cov, 400000, rng);
    const Eigen::MatrixXd y = oracle::squeezer_coefficients(t, cfg.gain, true) * x;
    const double dev_sampled =
        (oracle::sample_covariance(y) - algebra.cov).cwiseAbs().maxCoeff() / algebra.cov.cwiseAbs().maxCoeff();

    const std::size_t shots = 200000;
    Eigen::MatrixXd means(2, static_cast<Eigen::Index>(shots));
    Eigen::MatrixXd cond;
    for (std::size_t i = 0; i < shots; ++i) {
        const SqueezerShot s = universal_squeezer_shot(input, v, cfg, rng);
        means.col(static_cast<Eigen::Index>(i)) = s.output.mean;
        cond = s.output.cov;
    }
    const Eigen::MatrixXd total = cond + oracle::sample_covariance(means);
    const double dev_shots = (total - algebra.cov).cwiseAbs().maxCoeff() / algebra.cov.cwiseAbs().maxCoeff();

    const bool ok = coeff <= kSqueezerTol && gain_err <= kSqueezerTol && dev_sampled <= kMonteCarloTol &&
                    dev_shots <= kMonteCarloTol;
    return {ok, fmt("ancilla coefficient %.1e, gain error %.1e, Monte Carlo deviation %.2f%% (sampled) / %.2f%% "
                    "(shots)",
                    coeff, gain_err, 100.0 * dev_sampled, 100.0 * dev_shots)};
}

Verdict reproducibility()
{
    const fs::path root = fs::temp_directory_path() / "hlock_acceptance_12";
    fs::remove_all(root);
    fs::create_directories(root);
    const fs::path extra = root / "extra.cfg";
    std::ofstream(extra) << "[run]\nseed = 5\n[cavity]\nfsr = 199 MHz\nkappa_s = 4 MHz\nkappa_l = 1 MHz\nchi = 2 MHz\n"
                            "[lock]\nnoise = squeezed\nrandom_walk_diffusion = 1e12\ntrials = 4\n"
                            "[squeezer]\nshots = 2000\n";
    const std::vector<std::pair<std::string, fs::path>> jobs = {
        {"sweep", kConfigs / "sweep_199mhz.cfg"}, {"spectrum", kConfigs / "spectrum_199mhz.cfg"},
        {"lock", extra},                        {"squeezer", extra},
        {"selftest", {}},
    };
    int compared = 0;
    for (const auto &[cmd, cfg] : jobs) {
        std::string stdout_text[2];
        for (int rep = 0; rep < 2; ++rep) {
            std::vector<std::string> args{cmd};
            if (!cfg.empty()) {
                args.insert(args.end(), {"--config", cfg.string(), "--out", (root / cmd / std::to_string(rep)).string(),
                                         "--svg"});
            }
            std::ostringstream out, err;
            if (cli::run(args, out, err) != 0) return {false, cmd + " failed: " + err.str()};
            stdout_text[rep] = out.str();
        }
        if (stdout_text[0] != stdout_text[1]) return {false, cmd + ": summary differs between runs"};
        ++compared;
        if (cfg.empty()) continue;
        for (const auto &f : fs::directory_iterator(root / cmd / "0")) {
            std::ifstream a(f.path(), std::ios::binary), b(root / cmd / "1" / f.path().filename(), std::ios::binary);
            std::stringstream sa, sb;
            sa << a.rdbuf();
            sb << b.rdbuf();
            if (sa.str() != sb.str()) return {false, cmd + ": " + f.path().filename().string() + " differs"};
            ++compared;
        }
    }
    return {true, fmt("%d outputs byte-identical across two runs", compared)};
}

const std::vector<Criterion> &criteria()
{
    static const std::vector<Criterion> all = {
        {1, "QNL normalization", 1.0, qnl},
        {2, "purity product", 1.0, purity},
        {3, "steady-state oracle", 10.0, mean_field},
        {4, "spectrum oracle", 120.0, spectrum_oracle},
        {5, "measured gains", 1.0, gains},
        {6, "efficiency inference", 1.0, efficiency},
        {7, "sweep features", 1.0, sweep_features},
        {8, "squeezing level", 1.0, squeezing_level},
        {9, "sub-QNL discriminator", 300.0, discriminator},
        {10, "lock acquisition", 60.0, acquisition},
        {11, "universal squeezer", 120.0, squeezer},
        {12, "reproducibility", 60.0, reproducibility},
    };
    return all;
}
}  // namespace

int main(int argc, char **argv)
{
    int only = 0;
    if (argc == 3 && std::strcmp(argv[1], "--only") == 0) {
        only = std::atoi(argv[2]);
    }
    set_warning_handler([](std::string_view) {});
    int failed = 0;
    for (const auto &c : criteria()) {
        if (only != 0 && c.id != only) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception &e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = elapsed <= c.budget_s;
        const bool pass = v.pass && in_time;
        failed += pass ? 0 : 1;
        std::printf("criterion %2d %s  %s: %s [%.2f s of %.0f s]\n", c.id, pass ? "PASS" : "FAIL", c.name,
                    v.detail.c_str(), elapsed, c.budget_s);
        std::fflush(stdout);
    }
    return failed;
}
