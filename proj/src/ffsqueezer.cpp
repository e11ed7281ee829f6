#include "hlock/ffsqueezer.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace hlock
{
namespace
{
std::vector<Eigen::Index> indices_without_mode(std::size_t modes, std::size_t removed)
{
    std::vector<Eigen::Index> keep;
    keep.reserve(2 * modes - 2);
    for (std::size_t m = 0; m < modes; ++m) {
        if (m != removed) {
            keep.push_back(phase_index(m, Quadrature::plus));
            keep.push_back(phase_index(m, Quadrature::minus));
        }
    }
    return keep;
}

GaussianState drop_mode(const Eigen::VectorXd &mean, const Eigen::MatrixXd &cov, std::size_t modes,
                        std::size_t removed)
{
    const auto keep = indices_without_mode(modes, removed);
    GaussianState out;
    out.mean = mean(keep);
    out.cov = cov(keep, keep);
    return out;
}

void check_mode(const GaussianState &s, std::size_t mode)
{
    if (mode >= s.modes()) {
        throw std::out_of_range("mode index out of range");
    }
}

void check_transmittivity(double t)
{
    if (!(t > 0.0 && t <= 1.0)) {
        throw std::invalid_argument("transmittivity must lie in (0, 1]");
    }
}

void debug_check(const GaussianState &s)
{
#ifndef NDEBUG
    if (!is_physical(s)) {
        throw NonPhysicalState("state violates cov + i Omega >= 0");
    }
#else
    (void)s;
#endif
}
}  // namespace

double GaussianState::quadrature_variance(std::size_t mode, Quadrature q) const
{
    const auto i = phase_index(mode, q);
    return cov(i, i);
}

double GaussianState::quadrature_mean(std::size_t mode, Quadrature q) const
{
    return mean(phase_index(mode, q));
}

GaussianState vacuum(std::size_t modes)
{
    const auto n = static_cast<Eigen::Index>(2 * modes);
    return {Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Identity(n, n)};
}

GaussianState squeezed_vacuum(double v_minus)
{
    if (!(v_minus > 0.0 && v_minus <= 1.0)) {
        throw std::invalid_argument("squeezed variance must lie in (0, 1]");
    }
    GaussianState s = vacuum(1);
    s.cov(0, 0) = 1.0 / v_minus;
    s.cov(1, 1) = v_minus;
    return s;
}

GaussianState coherent(const QuadPair &mean)
{
    GaussianState s = vacuum(1);
    s.mean << mean.x_plus, mean.x_minus;
    return s;
}

GaussianState product(const GaussianState &a, const GaussianState &b)
{
    const auto na = a.mean.size();
    const auto nb = b.mean.size();
    GaussianState s;
    s.mean.resize(na + nb);
    s.mean << a.mean, b.mean;
    s.cov = Eigen::MatrixXd::Zero(na + nb, na + nb);
    s.cov.topLeftCorner(na, na) = a.cov;
    s.cov.bottomRightCorner(nb, nb) = b.cov;
    return s;
}

bool is_physical(const GaussianState &state, double tol)
{
    const auto n = state.cov.rows();
    if (state.cov.cols() != n || state.mean.size() != n || n % 2 != 0) {
        return false;
    }
    if ((state.cov - state.cov.transpose()).cwiseAbs().maxCoeff() > tol) {
        return false;
    }
    Eigen::MatrixXcd h = state.cov.cast<std::complex<double>>();
    for (Eigen::Index m = 0; m < n; m += 2) {
        h(m, m + 1) += std::complex<double>(0.0, 1.0);
        h(m + 1, m) -= std::complex<double>(0.0, 1.0);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -tol;
}

double purity_determinant(const GaussianState &single_mode)
{
    if (single_mode.modes() != 1) {
        throw std::invalid_argument("purity_determinant expects a single-mode state");
    }
    return single_mode.cov.determinant();
}

Eigen::MatrixXd beamsplitter_matrix(std::size_t modes, std::size_t i, std::size_t j, double t)
{
    check_transmittivity(t);
    if (i >= modes || j >= modes || i == j) {
        throw std::out_of_range("beamsplitter needs two distinct existing modes");
    }
    const double st = std::sqrt(t);
    const double sr = std::sqrt(1.0 - t);
    const auto n = static_cast<Eigen::Index>(2 * modes);
    Eigen::MatrixXd s = Eigen::MatrixXd::Identity(n, n);
    for (auto q : {Quadrature::plus, Quadrature::minus}) {
        const auto a = phase_index(i, q);
        const auto b = phase_index(j, q);
        s(a, a) = st;
        s(a, b) = sr;
        s(b, a) = -sr;
        s(b, b) = st;
    }
    return s;
}

GaussianState beamsplitter(const GaussianState &state, std::size_t i, std::size_t j, double t)
{
    const Eigen::MatrixXd s = beamsplitter_matrix(state.modes(), i, j, t);
    GaussianState out{s * state.mean, s * state.cov * s.transpose()};
    debug_check(out);
    return out;
}

GaussianState HomodyneCondition::given(double outcome) const
{
    return {conditioned_mean + regression * (outcome - outcome_mean), conditioned_cov};
}

HomodyneCondition homodyne_condition(const GaussianState &state, std::size_t mode,
                                     Quadrature quadrature)
{
    check_mode(state, mode);
    const auto k = phase_index(mode, quadrature);
    const double var = state.cov(k, k);
    if (!(var > 0.0)) {
        throw SingularVariance("measured quadrature has non-positive variance");
    }
    const auto keep = indices_without_mode(state.modes(), mode);
    const Eigen::VectorXd cross = state.cov(keep, k);

    HomodyneCondition h;
    h.outcome_mean = state.mean(k);
    h.outcome_variance = var;
    h.regression = cross / var;
    h.conditioned_mean = state.mean(keep);
    h.conditioned_cov = state.cov(keep, keep) - cross * cross.transpose() / var;
    if (h.conditioned_cov.size() > 0) {
        debug_check({h.conditioned_mean, h.conditioned_cov});
    }
    return h;
}

GaussianState feedforward_displace(const GaussianState &state, std::size_t mode, Quadrature q,
                                   double g, double outcome)
{
    check_mode(state, mode);
    GaussianState out = state;
    out.mean(phase_index(mode, q)) += g * outcome;
    return out;
}

GaussianState feedforward_ensemble(const GaussianState &state, std::size_t measured_mode,
                                   std::size_t target_mode, Quadrature q, double g)
{
    check_mode(state, measured_mode);
    check_mode(state, target_mode);
    if (measured_mode == target_mode) {
        throw std::invalid_argument("feed-forward target must differ from the measured mode");
    }
    const auto n = state.mean.size();
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
    m(phase_index(target_mode, q), phase_index(measured_mode, q)) += g;
    GaussianState out = drop_mode(m * state.mean, m * state.cov * m.transpose(), state.modes(),
                                  measured_mode);
    debug_check(out);
    return out;
}

double default_feedforward_gain(double t)
{
    if (!(t > 0.0 && t <= 1.0)) {
        throw std::invalid_argument("transmittivity must lie in (0, 1]");
    }
    return -std::sqrt((1.0 - t) / t);
}

FeedforwardConfig FeedforwardConfig::with_default_gain(double t, Quadrature measured)
{
    return {t, default_feedforward_gain(t), measured};
}

Eigen::Matrix<double, 2, 4> universal_squeezer_transfer(const FeedforwardConfig &config)
{
    const Eigen::MatrixXd bs = beamsplitter_matrix(2, 0, 1, config.transmittivity);
    Eigen::Matrix4d ff = Eigen::Matrix4d::Identity();
    const auto q = config.measured_quadrature;
    ff(phase_index(0, q), phase_index(1, q)) += config.gain;
    const Eigen::Matrix4d full = ff * bs;
    return full.topRows<2>();
}

GaussianState universal_squeezer(const GaussianState &input, double ancilla_v_minus,
                                 const FeedforwardConfig &config)
{
    if (input.modes() != 1) {
        throw std::invalid_argument("universal squeezer takes a single-mode input");
    }
    if (!(config.transmittivity > 0.0 && config.transmittivity < 1.0)) {
        throw std::invalid_argument("transmittivity must lie in (0, 1)");
    }
    const GaussianState mixed =
        beamsplitter(product(input, squeezed_vacuum(ancilla_v_minus)), 0, 1, config.transmittivity);
    return feedforward_ensemble(mixed, 1, 0, config.measured_quadrature, config.gain);
}

GaussianState universal_squeezer(const GaussianState &input, double ancilla_v_minus, double t)
{
    return universal_squeezer(input, ancilla_v_minus, FeedforwardConfig::with_default_gain(t));
}

SqueezerShot universal_squeezer_shot(const GaussianState &input, double ancilla_v_minus,
                                     const FeedforwardConfig &config, std::mt19937_64 &rng)
{
    if (input.modes() != 1) {
        throw std::invalid_argument("universal squeezer takes a single-mode input");
    }
    const GaussianState mixed =
        beamsplitter(product(input, squeezed_vacuum(ancilla_v_minus)), 0, 1, config.transmittivity);
    const HomodyneCondition h = homodyne_condition(mixed, 1, config.measured_quadrature);
    std::normal_distribution<double> normal(h.outcome_mean, std::sqrt(h.outcome_variance));
    SqueezerShot shot;
    shot.outcome = normal(rng);
    shot.output = feedforward_displace(h.given(shot.outcome), 0, config.measured_quadrature,
                                       config.gain, shot.outcome);
    return shot;
}

PhotocurrentSplit split_photocurrent(std::span<const double> current, double dt, double crossover)
{
    if (!(dt > 0.0) || !(crossover > 0.0)) {
        throw std::invalid_argument("dt and crossover must be positive");
    }
    PhotocurrentSplit out;
    out.dc.resize(current.size());
    out.fluctuation.resize(current.size());
    if (current.empty()) {
        return out;
    }
    const double alpha = 1.0 - std::exp(-crossover * dt);
    double slow = current[0];
    for (std::size_t i = 0; i < current.size(); ++i) {
        slow += alpha * (current[i] - slow);
        out.dc[i] = slow;
        out.fluctuation[i] = current[i] - slow;
    }
    return out;
}

}  // namespace hlock
