#pragma once

// Gaussian covariance engine for the measurement-and-feed-forward universal
// squeezer.
//
// Phase-space ordering is (X1+, X1-, X2+, X2-, ...); vacuum has identity
// covariance. With this normalisation the canonical commutator is
// [X+, X-] = -2i, and a state is physical iff cov + i Omega >= 0 with
// Omega = diag([[0, 1], [-1, 0]], ...).
//
// Beamsplitter convention on modes (i, j) with transmittivity T:
//   b_i =  sqrt(T) a_i + sqrt(1 - T) a_j
//   b_j = -sqrt(1 - T) a_i + sqrt(T) a_j
// Feeding the measured quadrature of b_j forward onto the same quadrature of
// b_i with g = -sqrt((1 - T) / T) cancels a_j from that quadrature and scales
// a_i's by 1/sqrt(T).

#include <Eigen/Dense>

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "hlock/core.hpp"

namespace hlock
{

class SingularVariance : public PhysicsError
{
public:
    using PhysicsError::PhysicsError;
};

class NonPhysicalState : public PhysicsError
{
public:
    using PhysicsError::PhysicsError;
};

struct GaussianState
{
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;

    std::size_t modes() const { return static_cast<std::size_t>(mean.size() / 2); }
    // Variance of one quadrature of one mode.
    double quadrature_variance(std::size_t mode, Quadrature q) const;
    double quadrature_mean(std::size_t mode, Quadrature q) const;
};

// Index of (mode, quadrature) in phase space.
inline Eigen::Index phase_index(std::size_t mode, Quadrature q)
{
    return static_cast<Eigen::Index>(2 * mode + (q == Quadrature::plus ? 0 : 1));
}

GaussianState vacuum(std::size_t modes);
// Phase-squeezed vacuum: diag(1 / v_minus, v_minus). v_minus in (0, 1].
GaussianState squeezed_vacuum(double v_minus);
GaussianState coherent(const QuadPair &mean);
// Tensor product; modes of `b` follow those of `a`.
GaussianState product(const GaussianState &a, const GaussianState &b);

// Minimum eigenvalue of cov + i Omega is >= -tol, and cov is symmetric.
bool is_physical(const GaussianState &state, double tol = 1e-9);
double purity_determinant(const GaussianState &single_mode);

// Symplectic matrix of the beamsplitter acting on modes (i, j).
Eigen::MatrixXd beamsplitter_matrix(std::size_t modes, std::size_t i, std::size_t j, double t);
GaussianState beamsplitter(const GaussianState &state, std::size_t i, std::size_t j, double t);

// Result of a homodyne measurement of one quadrature. The conditional
// covariance does not depend on the outcome; the conditional mean does.
struct HomodyneCondition
{
    double outcome_mean = 0.0;
    double outcome_variance = 0.0;
    Eigen::MatrixXd conditioned_cov;    // measured mode removed
    Eigen::VectorXd conditioned_mean;   // for outcome == outcome_mean
    Eigen::VectorXd regression;         // d(mean)/d(outcome) of the rest

    GaussianState given(double outcome) const;
};

HomodyneCondition homodyne_condition(const GaussianState &state, std::size_t mode,
                                     Quadrature quadrature);

// Trajectory mode: shift quadrature `q` of `mode` by g * outcome.
GaussianState feedforward_displace(const GaussianState &state, std::size_t mode, Quadrature q,
                                   double g, double outcome);

// Ensemble mode: deterministic map obtained by averaging condition-then-
// displace over all outcomes. Equivalent to X_target[q] += g * X_measured[q]
// followed by discarding the measured mode.
GaussianState feedforward_ensemble(const GaussianState &state, std::size_t measured_mode,
                                   std::size_t target_mode, Quadrature q, double g);

struct FeedforwardConfig
{
    double transmittivity = 0.5;
    double gain = 0.0;
    Quadrature measured_quadrature = Quadrature::minus;

    // Default configuration: gain = -sqrt((1 - T) / T).
    static FeedforwardConfig with_default_gain(double t, Quadrature measured = Quadrature::minus);
};

double default_feedforward_gain(double t);

// Linear map from (in+, in-, anc+, anc-) to the output (out+, out-) of the
// beamsplitter + homodyne + feed-forward circuit (ensemble picture).
Eigen::Matrix<double, 2, 4> universal_squeezer_transfer(const FeedforwardConfig &config);

// Single-mode input combined with a phase-squeezed vacuum ancilla
// (X- variance ancilla_v_minus). The output is a single-mode state.
GaussianState universal_squeezer(const GaussianState &input, double ancilla_v_minus,
                                 const FeedforwardConfig &config);
GaussianState universal_squeezer(const GaussianState &input, double ancilla_v_minus, double t);

// One shot of the circuit with an explicitly sampled homodyne outcome.
struct SqueezerShot
{
    double outcome = 0.0;
    GaussianState output;
};
SqueezerShot universal_squeezer_shot(const GaussianState &input, double ancilla_v_minus,
                                     const FeedforwardConfig &config, std::mt19937_64 &rng);

// Splits a homodyne photocurrent into its slow part (locking error signal)
// and the remainder (fed forward), using a one-pole low-pass at `crossover`
// rad/s.
struct PhotocurrentSplit
{
    std::vector<double> dc;
    std::vector<double> fluctuation;
};
PhotocurrentSplit split_photocurrent(std::span<const double> current, double dt, double crossover);

}  // namespace hlock
