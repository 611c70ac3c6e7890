#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "geolqr/dynamics.hpp"
#include "geolqr/regulators.hpp"
#include "geolqr/riccati.hpp"

using namespace geolqr;
using geolqr::testing::Gen;

namespace {

const InertiaTensor kJ123 = InertiaTensor::diagonal(1, 2, 3);

TrackingReference linear_reference(const Rotation& r0 = Rotation::identity(), double t_max = 60.0) {
  return TrackingReference::polynomial({{{0.0, 0.5}, {0.0, 0.3}, {0.0, 0.4}}}, r0, 1e-3, t_max);
}

TrackingReference constant_reference(const BodyVector& w, const Rotation& r0, double t_max = 10.0) {
  return TrackingReference([w](double) { return w; }, [](double) { return BodyVector::Zero(); }, r0, 1e-3, t_max);
}

}  // namespace

TEST(RegulationTorque, VanishesAtGoal) {
  const RegulationGoal goal{exp_so3(BodyVector(0.3, -0.1, 0.2))};
  EXPECT_LE(regulation_torque({goal.r_d, BodyVector::Zero()}, goal, {1.4142, 2.7671}).norm(), 1e-15);
  EXPECT_EQ(regulation_torque({}, {}, {1.4142, 2.7671}), BodyVector::Zero());
}

TEST(RegulationTorque, PureDerivativeAction) {
  const BodyVector tau = regulation_torque({Rotation::identity(), BodyVector(1, 0, 0)}, {}, {1.4142, 2.7671});
  EXPECT_LE((tau - BodyVector(-2.7671, 0, 0)).norm(), 1e-15);
}

TEST(RegulationTorque, SingleAxisProportionalAction) {
  const BodyVector tau = regulation_torque({exp_so3(BodyVector(0.3, 0, 0)), BodyVector::Zero()}, {}, {1.4142, 0.0});
  EXPECT_LE((tau - BodyVector(-0.42426, 0, 0)).norm(), 1e-12);
}

TEST(RegulationTorque, GaugeInvariance) {
  Gen g(51);
  const GainPair gains{1.4142, 2.7671};
  for (int i = 0; i < 100; ++i) {
    const Rotation c = g.rotation();
    const Rotation rd = g.rotation(1.0);
    const RigidBodyState s{rd * g.rotation(2.0), g.box(1.0)};
    const BodyVector tau = regulation_torque(s, {rd}, gains);
    // Left translation leaves the error rotation unchanged.
    EXPECT_LE((regulation_torque({c * s.r, s.w}, {c * rd}, gains) - tau).norm(), 1e-12);
    // Conjugation rotates the error axis and, with w rotated too, the torque.
    const RigidBodyState sc{c * s.r * c.transpose(), c * s.w};
    const BodyVector tc = regulation_torque(sc, {c * rd * c.transpose()}, gains);
    EXPECT_NEAR(tc.norm(), tau.norm(), 1e-12);
  }
}

TEST(RegulationTorque, CutLocusPropagates) {
  const RigidBodyState s{exp_so3(BodyVector(std::acos(-1.0), 0, 0)), BodyVector::Zero()};
  EXPECT_THROW(regulation_torque(s, {}, {1, 1}), Error);
}

TEST(TrackingReference, PolynomialCoefficients) {
  const TrackingReference ref = linear_reference();
  EXPECT_LE((ref.omega(2.0) - BodyVector(1.0, 0.6, 0.8)).norm(), 1e-15);
  EXPECT_LE((ref.omega_dot(7.0) - BodyVector(0.5, 0.3, 0.4)).norm(), 1e-15);
}

TEST(TrackingReference, GridFollowsLieEuler) {
  const TrackingReference ref = linear_reference(exp_so3(BodyVector(0.1, 0.2, 0.3)), 1.0);
  Rotation r = ref.rotation(0.0);
  for (int i = 0; i < 1000; ++i) r = r * exp_so3(1e-3 * ref.omega(i * 1e-3));
  EXPECT_LE((r.matrix() - ref.rotation(1.0).matrix()).norm(), 1e-12);
  EXPECT_LE(ref.rotation(0.7345).orthogonality_defect(), 1e-12);
  EXPECT_THROW(ref.rotation(1.5), Error);
}

TEST(TrackingPdTorque, VanishesOnReference) {
  const TrackingReference ref = linear_reference();
  for (double t : {0.0, 1.0, 3.3}) {
    const RigidBodyState s{ref.rotation(t), ref.omega(t)};
    EXPECT_LE(tracking_pd_torque(s, ref, t, {8.7852, 8.3357}).norm(), 1e-13 * (1.0 + 8.3357 * s.w.norm()));
  }
}

TEST(TrackingPdTorque, DerivativeActionOnVelocityError) {
  const TrackingReference ref = linear_reference();
  const double t = 2.0;
  const RigidBodyState s{ref.rotation(t), ref.omega(t) + BodyVector(0, 1, 0)};
  EXPECT_LE((tracking_pd_torque(s, ref, t, {8.7852, 8.3357}) - BodyVector(0, -8.3357, 0)).norm(), 1e-12);
}

TEST(TrackingPdTorque, StaticReferenceReducesToRegulation) {
  Gen g(52);
  const Rotation rd = g.rotation(1.0);
  const TrackingReference ref = constant_reference(BodyVector::Zero(), rd);
  for (int i = 0; i < 20; ++i) {
    const RigidBodyState s{rd * g.rotation(2.0), g.box(1.0)};
    EXPECT_LE((tracking_pd_torque(s, ref, 3.0, {2, 3}) - regulation_torque(s, {rd}, {2, 3})).norm(), 1e-14);
  }
}

TEST(FeedforwardTorque, VanishesForStaticReference) {
  const TrackingReference ref = constant_reference(BodyVector::Zero(), Rotation::identity());
  const RigidBodyState s{exp_so3(BodyVector(0.2, 0.1, 0)), BodyVector(0.4, -1, 2)};
  EXPECT_EQ(feedforward_torque(s, ref, 1.0, kJ123, false), BodyVector::Zero());
}

TEST(FeedforwardTorque, SphericalBodyCrossTerms) {
  // w x w_ref = [0,0,1]; the bracketed sum cancels for J = I.
  const TrackingReference ref = constant_reference(BodyVector(0, 1, 0), Rotation::identity());
  const RigidBodyState s{ref.rotation(0.0), BodyVector(1, 0, 0)};
  const BodyVector tau = feedforward_torque(s, ref, 0.0, InertiaTensor(), false);
  const BodyVector w = s.w;
  const BodyVector wt(0, 1, 0);
  const BodyVector oracle = 0.5 * (w.cross(wt) - (wt.cross(w) + w.cross(wt)));
  EXPECT_LE((tau - oracle).norm(), 1e-15);
  EXPECT_LE((tau - BodyVector(0, 0, 0.5)).norm(), 1e-15);
}

TEST(FeedforwardTorque, AccelerationTermIsTransportedReferenceAcceleration) {
  const TrackingReference ref = linear_reference();
  const RigidBodyState s{exp_so3(BodyVector(0.2, -0.3, 0.1)), BodyVector(0.1, 0.5, -0.2)};
  const double t = 1.5;
  const BodyVector diff = feedforward_torque(s, ref, t, kJ123, true) - feedforward_torque(s, ref, t, kJ123, false);
  EXPECT_LE((diff - s.r.transpose() * (ref.rotation(t) * ref.omega_dot(t))).norm(), 1e-14);
}

TEST(TrackingTorque, ExactInitializationStaysOnReferenceWithAccelerationTerm) {
  const TrackingReference ref = linear_reference();
  const ControllerConfig cfg{GainPair{8.7852, 8.3357}, true};
  const SimParams p{1e-3, 5.0, kJ123};
  const TrajectoryLog log = simulate(
      [&](double t, const RigidBodyState& s) { return tracking_torque(s, ref, t, kJ123, cfg); },
      {ref.rotation(0.0), ref.omega(0.0)}, p);
  double worst = 0.0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    worst = std::max(worst, geodesic_distance(ref.rotation(log.times[i]), log.states[i].r));
  }
  EXPECT_LE(worst, 1e-3);
}

TEST(TrackingTorque, ScheduledGainsReadFromSchedule) {
  const Eigen::Matrix2d a = a_matrix(AMatrixMode::PaperTracking, -2.0);
  const GainSchedule sched = dre_integrate(a, default_b(), Eigen::Matrix2d::Identity(), 1.0, 2.0, 1e-3);
  const ControllerConfig cfg{ScheduledGains{sched}, false};
  EXPECT_EQ(cfg.gains_at(2.0).kP, 0.0);
  EXPECT_NEAR(cfg.gains_at(0.0).kP, sched.solutions.front().k3, 1e-15);
}

TEST(LyapunovValue, PlugIn) {
  EXPECT_EQ(lyapunov_value({}, {}, {2, 1}), 0.0);
  EXPECT_NEAR(lyapunov_value({exp_so3(BodyVector(0.3, 0, 0)), BodyVector::Zero()}, {}, {2, 1}), 0.09, 1e-15);
}

TEST(ValueCandidate, ReducesToPotentialAtRest) {
  const RiccatiSolution k{1.5, 2.0, 0.7};
  EXPECT_EQ(value_candidate({}, {}, k), 0.0);
  const RigidBodyState s{exp_so3(BodyVector(0.2, -0.4, 0.1)), BodyVector::Zero()};
  const double d = geodesic_distance(Rotation::identity(), s.r);
  EXPECT_NEAR(value_candidate(s, {}, k), 0.5 * k.k1 * d * d, 1e-15);
}

TEST(ValueCandidate, PositiveNearGoalForPositiveDefiniteK) {
  Gen g(53);
  const RiccatiSolution k = are_solve(a_matrix(AMatrixMode::Reconciled, 0.0), default_b(),
                                      Eigen::Matrix2d::Identity(), 0.5);
  for (int i = 0; i < 200; ++i) {
    const RigidBodyState s{g.rotation(1.0), g.box(1.0)};
    EXPECT_GT(value_candidate(s, {}, k), 0.0);
  }
}

TEST(RegulationClosedLoop, LyapunovIncreasesOnlyInStartupAtSecondOrder) {
  // The explicit step adds (h^2/2)|w'|^2 to the kinetic part; while w is
  // still near zero this beats the O(h|w|^2) dissipation for a few steps.
  const GainPair g{1.4142135623730951, 2.7671021400536253};
  const RegulationGoal goal{};
  const RigidBodyState s0{exp_so3(BodyVector(0.9, -0.4, 0.2)), BodyVector::Zero()};
  auto run = [&](double h, std::size_t& last_increase) {
    const TrajectoryLog log = simulate([&](double, const RigidBodyState& s) { return regulation_torque(s, goal, g); },
                                       s0, SimParams{h, 20.0, kJ123});
    double worst = 0.0;
    last_increase = 0;
    for (std::size_t i = 2; i < log.size(); ++i) {
      const double inc = lyapunov_value(log.states[i], goal, g) - lyapunov_value(log.states[i - 1], goal, g);
      if (inc > 0.0) {
        worst = std::max(worst, inc);
        last_increase = i;
      }
    }
    EXPECT_LE(geodesic_distance(goal.r_d, log.states.back().r), 1e-2);
    return worst;
  };
  std::size_t last1 = 0;
  std::size_t last2 = 0;
  const double w1 = run(1e-3, last1);
  const double w2 = run(5e-4, last2);
  EXPECT_LE(last1 * 1e-3, 0.05);
  EXPECT_LE(last2 * 5e-4, 0.05);
  if (w2 > 0.0) EXPECT_NEAR(w1 / w2, 4.0, 1.5);
}

TEST(RegulationClosedLoop, ValueCandidateSatisfiesHjbIdentity) {
  // Undiscounted reconciled gains; V and L from the same K.
  const double alpha = 0.5;
  const RiccatiSolution k = are_solve(a_matrix(AMatrixMode::Reconciled, 0.0), default_b(),
                                      Eigen::Matrix2d::Identity(), alpha);
  const GainPair g = gains_from_K(k, {alpha, 0.0});
  const RegulationGoal goal{};
  const double h = 1e-4;
  const TrajectoryLog log = simulate([&](double, const RigidBodyState& s) { return regulation_torque(s, goal, g); },
                                     {exp_so3(BodyVector(0.9, -0.4, 0.2)), BodyVector::Zero()},
                                     SimParams{h, 20.0, kJ123});
  double sup_r = 0.0;
  double sup_l = 0.0;
  for (std::size_t i = 1; i + 1 < log.size(); ++i) {
    const double dv = (value_candidate(log.states[i + 1], goal, k) - value_candidate(log.states[i - 1], goal, k)) /
                      (2.0 * h);
    const double l = regulation_running_cost(log.states[i], goal, log.torques[i], alpha);
    sup_r = std::max(sup_r, std::abs(dv + l));
    sup_l = std::max(sup_l, l);
    EXPECT_LE(value_candidate(log.states[i + 1], goal, k), value_candidate(log.states[i], goal, k));
  }
  EXPECT_LE(sup_r / sup_l, 2e-2);
}

TEST(RegulationHamiltonian, VanishesAlongOptimalFeedback) {
  Gen g(54);
  const double alpha = 0.5;
  const RiccatiSolution k = are_solve(a_matrix(AMatrixMode::Reconciled, 0.0), default_b(),
                                      Eigen::Matrix2d::Identity(), alpha);
  const GainPair gains = gains_from_K(k, {alpha, 0.0});
  for (int i = 0; i < 50; ++i) {
    const RigidBodyState s{g.rotation(1.5), g.box(1.0)};
    const BodyVector tau = regulation_torque(s, {}, gains);
    EXPECT_NEAR(regulation_hamiltonian(s, {}, k, tau, alpha), 0.0, 1e-12);
  }
}

TEST(Compatibility, DistanceRateAlongReferenceFlow) {
  // d/dt (1/2) d^2(R_ref(t), R) = -<log(R_ref^T R), R^T R_ref w_ref> for fixed R.
  Gen g(55);
  const double eps = 1e-5;
  for (int i = 0; i < 50; ++i) {
    const Rotation r = g.rotation();
    const Rotation rref = r * g.rotation(2.0);
    const BodyVector w = g.box(1.0);
    auto half_sq = [&](double t) {
      const double d = geodesic_distance(rref * exp_so3(t * w), r);
      return 0.5 * d * d;
    };
    const double fd = (half_sq(eps) - half_sq(-eps)) / (2.0 * eps);
    const double analytic = -log_so3(rref.transpose() * r).dot(transport_velocity(r, rref, w));
    EXPECT_NEAR(fd, analytic, 1e-5);
  }
}

TEST(TrackingValue, ZeroOnReference) {
  const TrackingReference ref = linear_reference();
  const RigidBodyState s{ref.rotation(1.0), ref.omega(1.0)};
  EXPECT_NEAR(tracking_lyapunov_value(s, ref, 1.0, {8.8, 8.3}), 0.0, 1e-28);
  EXPECT_NEAR(tracking_value_candidate(s, ref, 1.0, {1, 2, 0.5}), 0.0, 1e-28);
}
