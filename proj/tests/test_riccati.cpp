#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "geolqr/riccati.hpp"

using namespace geolqr;
using geolqr::testing::Gen;

namespace {

const Eigen::Matrix2d kI2 = Eigen::Matrix2d::Identity();

Eigen::Matrix2d mat(double a, double b, double c, double d) {
  Eigen::Matrix2d m;
  m << a, b, c, d;
  return m;
}

/// Newton's method on the three scalar equations, started from `x`.
Eigen::Vector3d scalar_root(const CostParams& p, Eigen::Vector3d x) {
  for (int it = 0; it < 100; ++it) {
    const Eigen::Vector3d r = scalar_residual({x(0), x(1), x(2)}, p);
    if (r.norm() < 1e-15) break;
    Eigen::Matrix3d jac;
    for (int j = 0; j < 3; ++j) {
      Eigen::Vector3d xp = x;
      const double d = 1e-7 * std::max(1.0, std::abs(x(j)));
      xp(j) += d;
      jac.col(j) = (scalar_residual({xp(0), xp(1), xp(2)}, p) - r) / d;
    }
    x -= jac.fullPivLu().solve(r);
  }
  return x;
}

}  // namespace

TEST(ScalarResidual, ZeroSolution) {
  const Eigen::Vector3d r = scalar_residual({0, 0, 0}, CostParams{});
  EXPECT_EQ(r, Eigen::Vector3d(1, 1, 0));
}

TEST(ScalarResidual, UndiscountedUnitWeightRoot) {
  const double s3 = std::sqrt(3.0);
  EXPECT_LE(scalar_residual({s3, s3, 1.0}, CostParams{}).cwiseAbs().maxCoeff(), 1e-15);
  const Eigen::Vector3d root = scalar_root(CostParams{}, Eigen::Vector3d(1.5, 1.5, 0.8));
  EXPECT_NEAR(root(0), s3, 1e-12);
  EXPECT_NEAR(root(1), s3, 1e-12);
  EXPECT_NEAR(root(2), 1.0, 1e-12);
}

TEST(AreSolve, RegulationGains) {
  const RiccatiSolution k = are_solve(a_matrix(AMatrixMode::PaperRegulation, 0.0), default_b(), kI2, 0.5);
  const GainPair g = gains_from_K(k, CostParams{0.5, 0.0});
  EXPECT_NEAR(g.kP, 1.4142, 1e-3);
  EXPECT_NEAR(g.kD, 2.7671, 1e-3);
}

TEST(AreSolve, TrackingGains) {
  const RiccatiSolution k = are_solve(a_matrix(AMatrixMode::PaperTracking, -2.0), default_b(), kI2, 1.0);
  const GainPair g = gains_from_K(k, CostParams{1.0, -2.0});
  EXPECT_NEAR(g.kP, 8.7852, 1e-3);
  EXPECT_NEAR(g.kD, 8.3357, 1e-3);
}

TEST(AreSolve, DoubleIntegratorClosedForm) {
  const RiccatiSolution k = are_solve(mat(0, 1, 0, 0), default_b(), kI2, 1.0);
  const GainPair g = gains_from_K(k, CostParams{});
  EXPECT_NEAR(g.kP, 1.0, 1e-12);
  EXPECT_NEAR(g.kD, std::sqrt(3.0), 1e-12);
  // kD = sqrt(q2/r + 2 kP) with q1 = q2 = r = 1.
  EXPECT_NEAR(g.kD, std::sqrt(1.0 + 2.0 * g.kP), 1e-12);
}

TEST(AreSolve, RejectsUncontrollablePair) {
  try {
    are_solve(mat(1, 0, 0, 1), default_b(), kI2, 1.0);
    FAIL() << "expected NotControllable";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotControllable);
  }
}

TEST(AreSolve, RejectsImaginaryAxisHamiltonianSpectrum) {
  // Q = 0 with a marginally stable A: Hamiltonian eigenvalues +-i.
  try {
    are_solve(mat(0, 1, -1, 0), default_b(), Eigen::Matrix2d::Zero(), 1.0);
    FAIL() << "expected NoStabilizingSolution";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoStabilizingSolution);
  }
}

TEST(AreSolve, RandomProblemsSatisfyInvariants) {
  Gen g(31);
  int solved = 0;
  for (int i = 0; i < 300; ++i) {
    const Eigen::Matrix2d a = mat(g.uniform(-3, 3), g.uniform(-3, 3), g.uniform(-3, 3), g.uniform(-3, 3));
    const Eigen::Vector2d b(g.uniform(-2, 2), g.uniform(0.5, 2));
    Eigen::Matrix2d l = mat(g.uniform(-1, 1), 0, g.uniform(-1, 1), g.uniform(-1, 1));
    const Eigen::Matrix2d q = l * l.transpose() + 0.1 * kI2;
    const double rw = g.uniform(0.1, 10);
    RiccatiSolution k;
    try {
      k = are_solve(a, b, q, rw);
    } catch (const Error& e) {
      EXPECT_TRUE(e.kind() == ErrorKind::NotControllable || e.kind() == ErrorKind::NoStabilizingSolution);
      continue;
    }
    ++solved;
    const Eigen::Matrix2d km = k.matrix();
    EXPECT_LE(are_residual(a, b, q, rw, km).norm(), 1e-9 * std::max(1.0, km.norm()));
    EXPECT_TRUE(k.positive_definite());
    const Eigen::Matrix2d cl = a - b * b.transpose() * km / rw;
    EXPECT_LT(cl.eigenvalues().real().maxCoeff(), 0.0);
  }
  EXPECT_GT(solved, 250);
}

TEST(AreSolve, ReconciledMatrixZeroesScalarSystem) {
  Gen g(32);
  for (int i = 0; i < 100; ++i) {
    const CostParams p{g.uniform(0.1, 10.0), g.uniform(-2.0, 2.0)};
    const RiccatiSolution k = are_solve(a_matrix(AMatrixMode::Reconciled, p.gamma), default_b(), kI2, p.alpha);
    EXPECT_LE(scalar_residual(k, p).cwiseAbs().maxCoeff(), 1e-9) << p.alpha << " " << p.gamma;
  }
}

TEST(AreSolve, ScalarRootFinderAgreesWithEigenvectorMethod) {
  Gen g(33);
  for (int i = 0; i < 20; ++i) {
    const CostParams p{g.uniform(0.2, 5.0), g.uniform(-1.5, 1.5)};
    const RiccatiSolution k = are_solve(a_matrix(AMatrixMode::Reconciled, p.gamma), default_b(), kI2, p.alpha);
    const Eigen::Vector3d root = scalar_root(p, Eigen::Vector3d(k.k1, k.k2, k.k3) * 1.05);
    EXPECT_NEAR(root(0), k.k1, 1e-9);
    EXPECT_NEAR(root(1), k.k2, 1e-9);
    EXPECT_NEAR(root(2), k.k3, 1e-9);
  }
}

TEST(GainsFromK, ZeroMatrix) {
  const GainPair g = gains_from_K({0, 0, 0}, CostParams{});
  EXPECT_EQ(g.kP, 0.0);
  EXPECT_EQ(g.kD, 0.0);
}

TEST(GainsFromK, BackSolvedRegulationMatrix) {
  const GainPair g = gains_from_K({0.0, 1.38357, 0.70711}, CostParams{0.5, 0.0});
  EXPECT_NEAR(g.kP, 1.41421, 2e-5);
  EXPECT_NEAR(g.kD, 2.76714, 2e-5);
  // The back-solved entries are consistent with the ARE solution.
  const RiccatiSolution k = are_solve(a_matrix(AMatrixMode::PaperRegulation, 0.0), default_b(), kI2, 0.5);
  EXPECT_NEAR(k.k3, 0.70711, 1e-4);
  EXPECT_NEAR(k.k2, 1.38357, 1e-4);
}

TEST(GainsFromK, UnitWeightPassesThrough) {
  const GainPair g = gains_from_K({1.0, 8.3357, 8.7852}, CostParams{1.0, -2.0});
  EXPECT_DOUBLE_EQ(g.kP, 8.7852);
  EXPECT_DOUBLE_EQ(g.kD, 8.3357);
}

TEST(DreIntegrate, TerminalConditionAndSymmetry) {
  const GainSchedule s = dre_integrate(a_matrix(AMatrixMode::PaperRegulation, 0.0), default_b(), kI2, 0.5, 5.0, 1e-3);
  EXPECT_EQ(s.times.back(), 5.0);
  EXPECT_EQ(s.times.front(), 0.0);
  const GainPair end = s.gains_at(5.0);
  EXPECT_EQ(end.kP, 0.0);
  EXPECT_EQ(end.kD, 0.0);
  for (const auto& k : s.solutions) {
    const Eigen::Matrix2d m = k.matrix();
    EXPECT_EQ((m - m.transpose()).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(DreIntegrate, ConvergesToStabilizingSolution) {
  const Eigen::Matrix2d a = a_matrix(AMatrixMode::PaperTracking, -2.0);
  const GainSchedule s = dre_integrate(a, default_b(), kI2, 1.0, 50.0, 1e-3);
  const RiccatiSolution fixed = are_solve(a, default_b(), kI2, 1.0);
  EXPECT_LE((s.solutions.front().matrix() - fixed.matrix()).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(DreIntegrate, PositiveSemidefiniteAlongGrid) {
  const GainSchedule s = dre_integrate(a_matrix(AMatrixMode::PaperTracking, -2.0), default_b(), kI2, 1.0, 10.0, 1e-3);
  for (const auto& k : s.solutions) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(k.matrix());
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
  }
}

namespace {

/// Max over interior grid points of the DRE residual, with K' by central differences.
double dre_residual(const GainSchedule& s, const Eigen::Matrix2d& a, const Eigen::Matrix2d& q, double rw) {
  const Eigen::Vector2d b = s.b;
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < s.times.size(); ++i) {
    const double h2 = s.times[i + 1] - s.times[i - 1];
    const Eigen::Matrix2d kdot = (s.solutions[i + 1].matrix() - s.solutions[i - 1].matrix()) / h2;
    const Eigen::Matrix2d k = s.solutions[i].matrix();
    worst = std::max(worst, (kdot + are_residual(a, b, q, rw, k)).norm());
  }
  return worst;
}

}  // namespace

TEST(DreIntegrate, CentralDifferenceResidualWithinTenHSquared) {
  struct Case {
    Eigen::Matrix2d a;
    double rw;
  };
  for (const Case& c : {Case{a_matrix(AMatrixMode::PaperRegulation, 0.0), 0.5}, Case{mat(0, 1, 0, 0), 1.0}}) {
    for (double h : {1e-2, 1e-3}) {
      const GainSchedule s = dre_integrate(c.a, default_b(), kI2, c.rw, 5.0, h);
      EXPECT_LE(dre_residual(s, c.a, kI2, c.rw), 10.0 * h * h) << h;
    }
  }
}

TEST(DreIntegrate, CentralDifferenceResidualIsSecondOrderForTrackingParameters) {
  // The central difference itself carries an h^2 K'''/6 error; for the stiff
  // tracking parameters that constant is large, so check the order instead.
  const Eigen::Matrix2d a = a_matrix(AMatrixMode::PaperTracking, -2.0);
  const double r1 = dre_residual(dre_integrate(a, default_b(), kI2, 1.0, 5.0, 2e-3), a, kI2, 1.0);
  const double r2 = dre_residual(dre_integrate(a, default_b(), kI2, 1.0, 5.0, 1e-3), a, kI2, 1.0);
  EXPECT_NEAR(r1 / r2, 4.0, 0.4);
}

TEST(DreIntegrate, FiniteEscapeIsReported) {
  // Negative state weight drives K to -infinity in finite time.
  try {
    dre_integrate(mat(0, 1, 0, 0), default_b(), -10.0 * kI2, 1.0, 50.0, 1e-2);
    FAIL() << "expected StepTooLarge";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::StepTooLarge);
  }
}

TEST(DreIntegrate, RejectsBadHorizon) {
  EXPECT_THROW(dre_integrate(mat(0, 1, 0, 0), default_b(), kI2, 1.0, 0.0, 1e-3), Error);
  EXPECT_THROW(dre_integrate(mat(0, 1, 0, 0), default_b(), kI2, 1.0, 1.0, 2.0), Error);
}

TEST(GainSchedule, InterpolatesBetweenGridPoints) {
  const GainSchedule s = dre_integrate(mat(0, 1, 0, 0), default_b(), kI2, 1.0, 1.0, 0.1);
  const RiccatiSolution mid = s.at(0.05);
  EXPECT_NEAR(mid.k2, 0.5 * (s.solutions[0].k2 + s.solutions[1].k2), 1e-15);
}
