#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "pedintent/common.hpp"
#include "pedintent/geometry.hpp"

namespace pedintent {

// Kinematic state per tracked box: (u, v, s, r, u_dot, v_dot, s_dot).
// The aspect ratio carries no velocity and stays constant across predictions.
inline constexpr int kStateDim = 7;
inline constexpr int kObsDim = 4;

using StateVector = Eigen::Matrix<double, kStateDim, 1>;
using StateMatrix = Eigen::Matrix<double, kStateDim, kStateDim>;
using ObsVector = Eigen::Matrix<double, kObsDim, 1>;
using ObsMatrix = Eigen::Matrix<double, kObsDim, kObsDim>;

inline constexpr int kNumSigmaPoints = 2 * kStateDim + 1;

// Merwe-style spread parameters. The defaults are the usual Gaussian-optimal
// choices; the tracking pipeline never needs to tune them.
struct SigmaPointParams {
  double alpha = 1e-3;
  double beta = 2.0;
  double kappa = 0.0;

  double lambda() const { return alpha * alpha * (kStateDim + kappa) - kStateDim; }

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
      throw ValidationError("SigmaPointParams: alpha must be in (0, 1]");
    }
    if (!(std::isfinite(beta) && std::isfinite(kappa))) {
      throw ValidationError("SigmaPointParams: beta and kappa must be finite");
    }
    if (kStateDim + lambda() <= 0.0) {
      throw ValidationError("SigmaPointParams: n + lambda must be positive");
    }
  }
};

namespace detail {

template <typename Matrix>
inline void check_symmetric_psd(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw ValidationError(std::string(what) + ": matrix must be finite");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
    throw ValidationError(std::string(what) + ": matrix must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9) {
    throw ValidationError(std::string(what) + ": matrix must be positive semi-definite");
  }
}

}  // namespace detail

// Process / measurement noise. The defaults make position noise dominate
// aspect-ratio noise and are configurable.
struct NoiseConfig {
  StateMatrix process;      // Q
  ObsMatrix measurement;    // R

  static NoiseConfig defaults() {
    NoiseConfig n;
    StateVector q;
    q << 1.0, 1.0, 1.0, 1e-4, 0.01, 0.01, 1e-4;
    n.process = q.asDiagonal();
    ObsVector r;
    r << 1.0, 1.0, 10.0, 1e-2;
    n.measurement = r.asDiagonal();
    return n;
  }

  void validate() const {
    detail::check_symmetric_psd(process, "NoiseConfig process");
    detail::check_symmetric_psd(measurement, "NoiseConfig measurement");
  }
};

struct GaussianBelief {
  StateVector mean;
  StateMatrix covariance;

  GaussianBelief(const StateVector& m, const StateMatrix& p) : mean(m), covariance(p) {
    if (!mean.allFinite()) throw ValidationError("GaussianBelief: mean must be finite");
    detail::check_symmetric_psd(covariance, "GaussianBelief covariance");
  }
};

struct SigmaPoints {
  Eigen::Matrix<double, kStateDim, kNumSigmaPoints> points;
  Eigen::Matrix<double, kNumSigmaPoints, 1> mean_weights;
  Eigen::Matrix<double, kNumSigmaPoints, 1> cov_weights;
};

namespace detail {

// Lower-triangular square root of scale * P via Cholesky. Near-singular
// covariances are routine after tight updates, so failures retry on a jitter
// ladder (P + 1e-9 I, escalating x10 up to 1e-3 I) before reporting a numeric
// error. An exactly zero matrix has the zero square root.
inline StateMatrix scaled_cholesky(const StateMatrix& p, double scale) {
  if (p.cwiseAbs().maxCoeff() == 0.0) return StateMatrix::Zero();
  for (double jitter : {0.0, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3}) {
    StateMatrix candidate = scale * (p + jitter * StateMatrix::Identity());
    Eigen::LLT<StateMatrix> llt(candidate);
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw NumericError("sigma points: covariance square root failed (matrix not PSD)");
}

inline StateVector constant_velocity(const StateVector& x, double dt) {
  StateVector out = x;
  out(0) += x(4) * dt;
  out(1) += x(5) * dt;
  out(2) += x(6) * dt;
  return out;
}

inline ObsVector observe(const StateVector& x) { return x.head<kObsDim>(); }

}  // namespace detail

// 2n+1 deterministic samples encoding the belief: point 0 is the mean, points
// i and i+n sit at mean +/- column i of sqrt((n+lambda) P).
inline SigmaPoints generate_sigma_points(const GaussianBelief& belief,
                                         const SigmaPointParams& params) {
  params.validate();
  const double lambda = params.lambda();
  const double n_plus_lambda = kStateDim + lambda;

  StateMatrix sqrt_cov = detail::scaled_cholesky(belief.covariance, n_plus_lambda);

  SigmaPoints sp;
  sp.points.col(0) = belief.mean;
  for (int i = 0; i < kStateDim; ++i) {
    sp.points.col(1 + i) = belief.mean + sqrt_cov.col(i);
    sp.points.col(1 + kStateDim + i) = belief.mean - sqrt_cov.col(i);
  }
  sp.mean_weights.setConstant(1.0 / (2.0 * n_plus_lambda));
  sp.cov_weights.setConstant(1.0 / (2.0 * n_plus_lambda));
  sp.mean_weights(0) = lambda / n_plus_lambda;
  sp.cov_weights(0) = lambda / n_plus_lambda + (1.0 - params.alpha * params.alpha + params.beta);
  return sp;
}

// Constant-velocity time update. The motion map is kept as a pluggable local
// function; only constant velocity ships. A non-positive predicted scale is
// clamped to 1e-4 so the box reconstruction stays defined for a live track.
inline GaussianBelief ukf_predict(const GaussianBelief& belief, double dt,
                                  const NoiseConfig& noise, const SigmaPointParams& params) {
  SigmaPoints sp = generate_sigma_points(belief, params);

  Eigen::Matrix<double, kStateDim, kNumSigmaPoints> propagated;
  for (int i = 0; i < kNumSigmaPoints; ++i) {
    propagated.col(i) = detail::constant_velocity(sp.points.col(i), dt);
  }

  // Anchor the weighted mean at point 0; the +/- pairs then cancel exactly
  // instead of through O(|lambda|/(n+lambda)) magnified intermediates.
  StateVector mean = propagated.col(0);
  StateVector correction = StateVector::Zero();
  for (int i = 1; i < kNumSigmaPoints; ++i) {
    correction += sp.mean_weights(i) * (propagated.col(i) - propagated.col(0));
  }
  mean += correction;

  StateMatrix cov = noise.process;
  for (int i = 0; i < kNumSigmaPoints; ++i) {
    StateVector d = propagated.col(i) - mean;
    cov += sp.cov_weights(i) * (d * d.transpose());
  }
  cov = 0.5 * (cov + cov.transpose());

  if (mean(2) <= 0.0) mean(2) = 1e-4;
  return GaussianBelief(mean, cov);
}

// Measurement update with the direct observation map h(x) = (u, v, s, r).
inline GaussianBelief ukf_update(const GaussianBelief& belief, const Observation& obs,
                                 const NoiseConfig& noise, const SigmaPointParams& params) {
  SigmaPoints sp = generate_sigma_points(belief, params);

  Eigen::Matrix<double, kObsDim, kNumSigmaPoints> projected;
  for (int i = 0; i < kNumSigmaPoints; ++i) {
    projected.col(i) = detail::observe(sp.points.col(i));
  }

  ObsVector z_pred = projected.col(0);
  ObsVector z_correction = ObsVector::Zero();
  for (int i = 1; i < kNumSigmaPoints; ++i) {
    z_correction += sp.mean_weights(i) * (projected.col(i) - projected.col(0));
  }
  z_pred += z_correction;

  ObsMatrix innovation_cov = noise.measurement;
  Eigen::Matrix<double, kStateDim, kObsDim> cross_cov =
      Eigen::Matrix<double, kStateDim, kObsDim>::Zero();
  for (int i = 0; i < kNumSigmaPoints; ++i) {
    ObsVector dz = projected.col(i) - z_pred;
    StateVector dx = sp.points.col(i) - belief.mean;
    innovation_cov += sp.cov_weights(i) * (dz * dz.transpose());
    cross_cov += sp.cov_weights(i) * (dx * dz.transpose());
  }
  innovation_cov = 0.5 * (innovation_cov + innovation_cov.transpose());

  Eigen::LLT<ObsMatrix> llt(innovation_cov);
  if (llt.info() != Eigen::Success) {
    throw NumericError("ukf_update: singular innovation covariance");
  }
  // K = C S^-1  <=>  K S = C  <=>  S K^T = C^T (S symmetric).
  Eigen::Matrix<double, kStateDim, kObsDim> gain =
      llt.solve(cross_cov.transpose()).transpose();

  ObsVector innovation;
  innovation << obs.u - z_pred(0), obs.v - z_pred(1), obs.s - z_pred(2), obs.r - z_pred(3);

  StateVector mean = belief.mean + gain * innovation;
  StateMatrix cov = belief.covariance - gain * innovation_cov * gain.transpose();
  cov = 0.5 * (cov + cov.transpose());
  return GaussianBelief(mean, cov);
}

}  // namespace pedintent
