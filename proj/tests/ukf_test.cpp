#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "pedintent/rng.hpp"
#include "pedintent/ukf.hpp"

using namespace pedintent;

namespace {

// Dense linear Kalman filter used as the equivalence oracle. Both the motion
// and observation maps of the tracker are linear, so the UKF must agree with
// this to rounding error. Kept deliberately independent of the UKF code path.
struct LinearKf {
  static StateMatrix transition(double dt) {
    StateMatrix f = StateMatrix::Identity();
    f(0, 4) = dt;
    f(1, 5) = dt;
    f(2, 6) = dt;
    return f;
  }

  static Eigen::Matrix<double, kObsDim, kStateDim> observation() {
    Eigen::Matrix<double, kObsDim, kStateDim> h;
    h.setZero();
    h.block<4, 4>(0, 0).setIdentity();
    return h;
  }

  static void predict(StateVector& x, StateMatrix& p, double dt, const StateMatrix& q) {
    StateMatrix f = transition(dt);
    x = f * x;
    p = f * p * f.transpose() + q;
  }

  static void update(StateVector& x, StateMatrix& p, const ObsVector& z, const ObsMatrix& r) {
    auto h = observation();
    ObsMatrix s = h * p * h.transpose() + r;
    Eigen::Matrix<double, kStateDim, kObsDim> k = p * h.transpose() * s.inverse();
    x = x + k * (z - h * x);
    p = (StateMatrix::Identity() - k * h) * p;
  }
};

StateMatrix random_psd(Rng& rng, double scale) {
  StateMatrix a;
  for (int i = 0; i < kStateDim; ++i) {
    for (int j = 0; j < kStateDim; ++j) a(i, j) = rng.normal(0.0, scale);
  }
  StateMatrix p = a * a.transpose() / kStateDim + 1e-3 * StateMatrix::Identity();
  return 0.5 * (p + p.transpose());
}

StateVector random_state(Rng& rng) {
  StateVector x;
  x << rng.uniform(50, 500), rng.uniform(50, 500), rng.uniform(500, 5000),
      rng.uniform(0.3, 1.5), rng.normal(0, 3), rng.normal(0, 3), rng.normal(0, 10);
  return x;
}

double rel_err(const StateVector& a, const StateVector& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

double rel_err(const StateMatrix& a, const StateMatrix& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

void expect_symmetric_psd(const StateMatrix& p) {
  EXPECT_LE((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-9);
  Eigen::SelfAdjointEigenSolver<StateMatrix> es(p, Eigen::EigenvaluesOnly);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9);
}

}  // namespace

TEST(SigmaPointsTest, ZeroCovarianceCollapsesToMean) {
  StateVector mean;
  mean << 1, 2, 3, 4, 5, 6, 7;
  GaussianBelief belief(mean, StateMatrix::Zero());
  SigmaPoints sp = generate_sigma_points(belief, SigmaPointParams{});
  for (int i = 0; i < kNumSigmaPoints; ++i) {
    EXPECT_EQ(sp.points.col(i), mean) << "point " << i;
  }
}

TEST(SigmaPointsTest, MeanWeightsSumToOne) {
  Rng rng(21);
  StateVector mean = random_state(rng);
  for (int trial = 0; trial < 100; ++trial) {
    SigmaPointParams params;
    params.alpha = rng.uniform(0.05, 1.0);
    params.beta = rng.uniform(0.0, 4.0);
    params.kappa = rng.uniform(0.0, 3.0);
    GaussianBelief belief(mean, random_psd(rng, 2.0));
    SigmaPoints sp = generate_sigma_points(belief, params);
    EXPECT_NEAR(sp.mean_weights.sum(), 1.0, 1e-12);
  }
  // The default alpha = 1e-3 puts |w0| near 1e6; summing those terms back to
  // 1 necessarily loses ~10 digits, so the identity is checked more loosely.
  SigmaPoints sp = generate_sigma_points(GaussianBelief(mean, StateMatrix::Identity()),
                                         SigmaPointParams{});
  EXPECT_NEAR(sp.mean_weights.sum(), 1.0, 1e-9);
}

TEST(SigmaPointsTest, EmbeddedScalarClosedForm) {
  // Covariance diag(p, 0, ..., 0): the only real spread is +/- sqrt((n+lambda) p)
  // along the first axis. The jitter ladder perturbs the closed form by
  // O(sqrt(jitter)), far below the asserted tolerance.
  const double p = 4.0;
  SigmaPointParams params;
  params.alpha = 0.5;
  params.kappa = 3.0;
  const double n_plus_lambda = kStateDim + params.lambda();

  StateVector mean = StateVector::Zero();
  StateMatrix cov = StateMatrix::Zero();
  cov(0, 0) = p;
  SigmaPoints sp = generate_sigma_points(GaussianBelief(mean, cov), params);

  const double expected = std::sqrt(n_plus_lambda * p);
  EXPECT_NEAR(sp.points(0, 1), expected, 1e-6);
  EXPECT_NEAR(sp.points(0, 1 + kStateDim), -expected, 1e-6);
  for (int i = 2; i <= kStateDim; ++i) {
    EXPECT_NEAR(sp.points.col(i).norm(), 0.0, 1e-3);
  }
}

TEST(SigmaPointsTest, NonPsdSquareRootIsDistinctError) {
  StateMatrix indefinite = StateMatrix::Identity();
  indefinite(0, 0) = -5.0;  // far beyond what the jitter ladder can repair
  EXPECT_THROW(detail::scaled_cholesky(indefinite, 1.0), NumericError);
}

TEST(SigmaPointsTest, ParamValidation) {
  SigmaPointParams bad;
  bad.alpha = 0.0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad.alpha = 1.5;
  EXPECT_THROW(bad.validate(), ValidationError);
  EXPECT_NO_THROW(SigmaPointParams{}.validate());
}

TEST(GaussianBeliefTest, RejectsInvalidCovariance) {
  StateVector mean = StateVector::Zero();
  StateMatrix asym = StateMatrix::Identity();
  asym(0, 1) = 0.5;
  EXPECT_THROW(GaussianBelief(mean, asym), ValidationError);

  StateMatrix negative = StateMatrix::Identity();
  negative(3, 3) = -1.0;
  EXPECT_THROW(GaussianBelief(mean, negative), ValidationError);
}

TEST(UkfPredictTest, FixedPointOfMotionMap) {
  StateVector mean;
  mean << 10, 20, 400, 0.5, 0, 0, 0;
  NoiseConfig noise;
  noise.process = StateMatrix::Zero();
  noise.measurement = ObsMatrix::Identity();
  GaussianBelief out =
      ukf_predict(GaussianBelief(mean, StateMatrix::Identity()), 1.0, noise, {});
  EXPECT_LE((out.mean - mean).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(UkfPredictTest, DirectArithmeticOnMean) {
  StateVector mean;
  mean << 5, 10, 200, 0.5, 1, 2, 3;
  NoiseConfig noise;
  noise.process = StateMatrix::Zero();
  noise.measurement = ObsMatrix::Identity();
  GaussianBelief out =
      ukf_predict(GaussianBelief(mean, StateMatrix::Identity()), 1.0, noise, {});
  StateVector expected;
  expected << 6, 12, 203, 0.5, 1, 2, 3;
  EXPECT_LE((out.mean - expected).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(UkfPredictTest, MatchesLinearKalmanFilter) {
  Rng rng(22);
  SigmaPointParams params;
  for (int trial = 0; trial < 1000; ++trial) {
    StateVector mean = random_state(rng);
    StateMatrix cov = random_psd(rng, 3.0);
    NoiseConfig noise;
    noise.process = random_psd(rng, 0.5);
    noise.measurement = ObsMatrix::Identity();

    GaussianBelief ukf_out = ukf_predict(GaussianBelief(mean, cov), 1.0, noise, params);

    StateVector kf_mean = mean;
    StateMatrix kf_cov = cov;
    LinearKf::predict(kf_mean, kf_cov, 1.0, noise.process);

    EXPECT_LE(rel_err(ukf_out.mean, kf_mean), 1e-8) << "trial " << trial;
    EXPECT_LE(rel_err(ukf_out.covariance, kf_cov), 1e-8) << "trial " << trial;
    expect_symmetric_psd(ukf_out.covariance);
  }
}

TEST(UkfUpdateTest, MatchesLinearKalmanFilter) {
  Rng rng(23);
  SigmaPointParams params;
  for (int trial = 0; trial < 1000; ++trial) {
    StateVector mean = random_state(rng);
    StateMatrix cov = random_psd(rng, 3.0);
    NoiseConfig noise;
    noise.process = StateMatrix::Zero();
    ObsMatrix rm;
    for (int i = 0; i < kObsDim; ++i) {
      for (int j = 0; j < kObsDim; ++j) rm(i, j) = rng.normal(0.0, 0.5);
    }
    noise.measurement =
        (rm * rm.transpose() / kObsDim + 0.1 * ObsMatrix::Identity()).eval();

    Observation obs(mean(0) + rng.normal(0, 2), mean(1) + rng.normal(0, 2),
                    std::max(1.0, mean(2) + rng.normal(0, 10)),
                    std::max(0.05, mean(3) + rng.normal(0, 0.05)));

    GaussianBelief ukf_out = ukf_update(GaussianBelief(mean, cov), obs, noise, params);

    StateVector kf_mean = mean;
    StateMatrix kf_cov = cov;
    ObsVector z;
    z << obs.u, obs.v, obs.s, obs.r;
    LinearKf::update(kf_mean, kf_cov, z, noise.measurement);

    EXPECT_LE(rel_err(ukf_out.mean, kf_mean), 1e-8) << "trial " << trial;
    EXPECT_LE(rel_err(ukf_out.covariance, kf_cov), 1e-8) << "trial " << trial;
    expect_symmetric_psd(ukf_out.covariance);
  }
}

TEST(UkfUpdateTest, TightMeasurementPinsMeanToObservation) {
  Rng rng(24);
  SigmaPointParams params;
  for (int trial = 0; trial < 20; ++trial) {
    StateVector mean = random_state(rng);
    StateMatrix cov = random_psd(rng, 2.0);
    NoiseConfig noise;
    noise.process = StateMatrix::Zero();
    noise.measurement = 1e-12 * ObsMatrix::Identity();

    Observation obs(mean(0) + 5.0, mean(1) - 3.0, mean(2) + 50.0, mean(3) + 0.1);
    GaussianBelief out = ukf_update(GaussianBelief(mean, cov), obs, noise, params);

    EXPECT_NEAR(out.mean(0), obs.u, 1e-4);
    EXPECT_NEAR(out.mean(1), obs.v, 1e-4);
    EXPECT_NEAR(out.mean(2), obs.s, 1e-4 * std::abs(obs.s));
    EXPECT_NEAR(out.mean(3), obs.r, 1e-4);
  }
}

TEST(UkfUpdateTest, ZeroInnovationKeepsMean) {
  Rng rng(25);
  StateVector mean = random_state(rng);
  StateMatrix cov = random_psd(rng, 2.0);
  Observation obs(mean(0), mean(1), mean(2), mean(3));
  GaussianBelief out = ukf_update(GaussianBelief(mean, cov), obs, NoiseConfig::defaults(), {});
  EXPECT_LE((out.mean - mean).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(UkfUpdateTest, SmallMeasurementNoiseShrinksTrace) {
  Rng rng(26);
  for (int trial = 0; trial < 50; ++trial) {
    StateVector mean = random_state(rng);
    StateMatrix cov = random_psd(rng, 3.0) + 5.0 * StateMatrix::Identity();
    NoiseConfig noise;
    noise.process = StateMatrix::Zero();
    noise.measurement = 1e-6 * ObsMatrix::Identity();
    Observation obs(mean(0), mean(1), mean(2), mean(3));
    GaussianBelief out = ukf_update(GaussianBelief(mean, cov), obs, noise, {});
    EXPECT_LE(out.covariance.trace(), cov.trace());
  }
}
