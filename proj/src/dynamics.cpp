#include "hlock/dynamics.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <array>
#include <cmath>
#include <complex>
#include <random>
#include <sstream>

namespace hlock
{
namespace
{
constexpr std::uint64_t kFluctuationStream = 0x64796e616d696373ULL;  // "dynamics"

using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;

Mat2 drift_matrix(const OPOParams &p)
{
    const double k = p.kappa();
    Mat2 m;
    m << -(k - p.chi), -p.detuning,
         p.detuning, -(k + p.chi);
    return m;
}

// Square root of a symmetric PSD matrix, tolerant of rank deficiency.
Mat4 psd_sqrt(const Mat4 &q)
{
    Eigen::SelfAdjointEigenSolver<Mat4> es(0.5 * (q + q.transpose()));
    const Eigen::Vector4d d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal();
}

// Stationary intracavity covariance: M P + P M^T + N = 0.
Mat2 stationary_covariance(const Mat2 &m, double noise)
{
    // unknowns (p00, p01, p11) of the symmetric solution
    Eigen::Matrix3d a;
    a << 2.0 * m(0, 0), 2.0 * m(0, 1), 0.0,
         m(1, 0), m(0, 0) + m(1, 1), m(0, 1),
         0.0, 2.0 * m(1, 0), 2.0 * m(1, 1);
    const Eigen::Vector3d v = a.fullPivLu().solve(Eigen::Vector3d(-noise, 0.0, -noise));
    Mat2 p;
    p << v(0), v(1), v(1), v(2);
    return p;
}

// One step of the augmented system z = (x+, x-, Y+, Y-) starting from
// Y = 0: z' = transition * x + noise_sqrt * xi, xi ~ N(0, I4).
struct StepMap
{
    Eigen::Matrix<double, 4, 2> transition;
    Mat4 noise_sqrt;
};

StepMap exact_step(const OPOParams &p, double dt)
{
    const double cs = std::sqrt(2.0 * p.kappa_s);
    const double cl = std::sqrt(2.0 * p.kappa_l);

    Mat4 f = Mat4::Zero();
    f.topLeftCorner<2, 2>() = drift_matrix(p);
    f.bottomLeftCorner<2, 2>() = cs * Mat2::Identity();

    Mat4 g = Mat4::Zero();  // columns: W_s+, W_s-, W_l+, W_l-
    g.topLeftCorner<2, 2>() = cs * Mat2::Identity();
    g.topRightCorner<2, 2>() = cl * Mat2::Identity();
    g.bottomLeftCorner<2, 2>() = -Mat2::Identity();

    // Van Loan: exp([[-F, G G^T], [0, F^T]] dt)
    Eigen::Matrix<double, 8, 8> h = Eigen::Matrix<double, 8, 8>::Zero();
    h.topLeftCorner<4, 4>() = -f * dt;
    h.topRightCorner<4, 4>() = g * g.transpose() * dt;
    h.bottomRightCorner<4, 4>() = f.transpose() * dt;
    const Eigen::Matrix<double, 8, 8> e = h.exp();
    const Mat4 phi = e.bottomRightCorner<4, 4>().transpose();
    const Mat4 q = phi * e.topRightCorner<4, 4>();

    return {phi.leftCols<2>(), psd_sqrt(q)};
}

StepMap euler_step(const OPOParams &p, double dt)
{
    const double cs = std::sqrt(2.0 * p.kappa_s);
    const double cl = std::sqrt(2.0 * p.kappa_l);
    const double sdt = std::sqrt(dt);

    StepMap s;
    s.transition.topRows<2>() = Mat2::Identity() + drift_matrix(p) * dt;
    s.transition.bottomRows<2>() = cs * dt * Mat2::Identity();
    s.noise_sqrt = Mat4::Zero();
    s.noise_sqrt.topLeftCorner<2, 2>() = cs * sdt * Mat2::Identity();
    s.noise_sqrt.topRightCorner<2, 2>() = cl * sdt * Mat2::Identity();
    s.noise_sqrt.bottomLeftCorner<2, 2>() = -sdt * Mat2::Identity();
    return s;
}

std::complex<double> mean_rhs(const OPOParams &p, std::complex<double> a, std::complex<double> drive)
{
    const std::complex<double> rate(p.kappa(), p.detuning);
    return -rate * a + p.chi * std::conj(a) + drive;
}

QuadPair mean_output(const OPOParams &p, std::complex<double> a, std::complex<double> seed)
{
    return QuadPair::from_amplitude(std::sqrt(2.0 * p.kappa_s) * a - seed);
}

double relative_change(const QuadPair &a, const QuadPair &b)
{
    const double diff = std::hypot(a.x_plus - b.x_plus, a.x_minus - b.x_minus);
    const double scale = std::max(std::hypot(b.x_plus, b.x_minus), 1e-300);
    return diff == 0.0 ? 0.0 : diff / scale;
}
}  // namespace

double TimeSeries::dt() const
{
    if (t.size() < 2) {
        throw std::invalid_argument("time series needs at least two samples");
    }
    return t[1] - t[0];
}

QuadPair integrate_mean(const OPOParams &params, const QuadPair &seed_in, double t_end)
{
    validate(params);
    if (!(t_end > 0.0) || !std::isfinite(t_end)) {
        throw std::invalid_argument("t_end must be positive");
    }
    const std::complex<double> seed = seed_in.amplitude();
    const std::complex<double> drive = std::sqrt(2.0 * params.kappa_s) * seed;
    const double fastest = params.kappa() + std::abs(params.detuning) + params.chi;
    const double h_max = 0.05 / fastest;
    const double check_window = 1.0 / (params.kappa() - params.chi);
    const double t_check = t_end - check_window;

    std::complex<double> a = 0.0;
    double t = 0.0;
    QuadPair at_check = mean_output(params, a, seed);
    bool check_taken = t_check <= 0.0;
    while (t < t_end) {
        double h = std::min(h_max, t_end - t);
        if (!check_taken && t + h >= t_check) {
            h = t_check - t;
        }
        const auto k1 = mean_rhs(params, a, drive);
        const auto k2 = mean_rhs(params, a + 0.5 * h * k1, drive);
        const auto k3 = mean_rhs(params, a + 0.5 * h * k2, drive);
        const auto k4 = mean_rhs(params, a + h * k3, drive);
        a += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
        if (!check_taken && t >= t_check) {
            at_check = mean_output(params, a, seed);
            check_taken = true;
        }
    }
    const QuadPair out = mean_output(params, a, seed);
    const double change = relative_change(out, at_check);
    if (change > 1e-10) {
        std::ostringstream os;
        os << "mean field still changing (relative " << change << ") at t_end = " << t_end;
        throw NotConverged(os.str());
    }
    return out;
}

TimeSeries integrate_fluctuations(const SimConfig &config, std::uint64_t trial_index)
{
    const OPOParams &p = validate(config.params);
    if (!(config.dt > 0.0) || !(config.duration > 0.0)) {
        throw std::invalid_argument("dt and duration must be positive");
    }
    if (config.dt * p.kappa() > 0.05) {
        std::ostringstream os;
        os << "dt * kappa = " << config.dt * p.kappa() << " exceeds 0.05";
        throw StepTooLarge(os.str());
    }
    if (config.record_decimation == 0) {
        throw std::invalid_argument("record_decimation must be at least 1");
    }

    const StepMap step =
        config.integrator == Integrator::exact ? exact_step(p, config.dt) : euler_step(p, config.dt);
    const auto total_steps = static_cast<std::size_t>(std::llround(config.duration / config.dt));
    const std::size_t k = config.record_decimation;
    const std::size_t samples = total_steps / k;

    std::mt19937_64 rng(derive_stream_seed(config.seed_value, kFluctuationStream, trial_index));
    std::normal_distribution<double> normal(0.0, 1.0);

    // Start from the stationary state so that no transient leaks into the record.
    const Mat2 p0 = stationary_covariance(drift_matrix(p), 2.0 * p.kappa());
    const Eigen::LLT<Mat2> llt(p0);
    const Eigen::Vector2d x0 = llt.matrixL() * Eigen::Vector2d(normal(rng), normal(rng));

    // Plain arrays keep the inner loop free of temporaries.
    std::array<double, 8> tr{};
    std::array<double, 16> ns{};
    for (int r = 0; r < 4; ++r) {
        tr[2 * r] = step.transition(r, 0);
        tr[2 * r + 1] = step.transition(r, 1);
        for (int c = 0; c < 4; ++c) {
            ns[4 * r + c] = step.noise_sqrt(r, c);
        }
    }

    TimeSeries out;
    out.t.resize(samples);
    out.x_plus_out.resize(samples);
    out.x_minus_out.resize(samples);

    const double norm = 1.0 / std::sqrt(static_cast<double>(k) * config.dt);
    double xp = x0(0);
    double xm = x0(1);
    for (std::size_t s = 0; s < samples; ++s) {
        double yp = 0.0;
        double ym = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            const double n0 = normal(rng);
            const double n1 = normal(rng);
            const double n2 = normal(rng);
            const double n3 = normal(rng);
            const double z0 = tr[0] * xp + tr[1] * xm + ns[0] * n0 + ns[1] * n1 + ns[2] * n2 + ns[3] * n3;
            const double z1 = tr[2] * xp + tr[3] * xm + ns[4] * n0 + ns[5] * n1 + ns[6] * n2 + ns[7] * n3;
            const double z2 = tr[4] * xp + tr[5] * xm + ns[8] * n0 + ns[9] * n1 + ns[10] * n2 + ns[11] * n3;
            const double z3 = tr[6] * xp + tr[7] * xm + ns[12] * n0 + ns[13] * n1 + ns[14] * n2 + ns[15] * n3;
            xp = z0;
            xm = z1;
            yp += z2;
            ym += z3;
        }
        out.t[s] = static_cast<double>(s * k) * config.dt;
        out.x_plus_out[s] = yp * norm;
        out.x_minus_out[s] = ym * norm;
    }
    return out;
}

SpectrumTrace estimate_psd(const TimeSeries &series, std::size_t segment_length, double overlap)
{
    const double dt = series.dt();
    const Psd plus = welch_psd(series.x_plus_out, dt, segment_length, overlap);
    const Psd minus = welch_psd(series.x_minus_out, dt, segment_length, overlap);

    SpectrumTrace trace;
    trace.frequencies = plus.omega;
    trace.absolute_hz.reserve(plus.omega.size());
    for (double w : plus.omega) {
        trace.absolute_hz.push_back(w / kTwoPi);
    }
    trace.variance_plus = plus.value;
    trace.variance_minus = minus.value;
    trace.efficiency = 1.0;
    return trace;
}

}  // namespace hlock
