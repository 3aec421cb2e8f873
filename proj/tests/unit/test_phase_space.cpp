#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "hkwave/phase_space.hpp"

using namespace hkwave;

namespace {

// <g_z | g_w> by direct summation on a fine grid.
Complex quadrature_overlap(const GaussianWavepacket& bra, const GaussianWavepacket& ket) {
  const SpatialGrid grid(-20.0, 20.0, 1 << 14);
  const auto a = evaluate_gaussian(bra, grid);
  const auto b = evaluate_gaussian(ket, grid);
  Complex s{};
  for (std::size_t k = 0; k < grid.n_points; ++k) s += std::conj(a.values[k]) * b.values[k];
  return s * grid.dx();
}

std::vector<double> zv(double q, double p) { return {q, p}; }

}  // namespace

TEST(GaussianOverlap, IdentityIsOne) {
  const auto g = GaussianWavepacket::one_dim(0.3, -0.7, 2.0);
  const Complex v = gaussian_overlap(g, g);
  EXPECT_NEAR(v.real(), 1.0, 1e-14);
  EXPECT_NEAR(v.imag(), 0.0, 1e-14);
}

TEST(GaussianOverlap, DisplacedInPosition) {
  const auto ket = GaussianWavepacket::one_dim(0.0, 0.0, 2.0);
  const auto bra = GaussianWavepacket::one_dim(1.0, 0.0, 2.0);
  const Complex v = gaussian_overlap(bra, ket);
  const Complex quad = quadrature_overlap(bra, ket);
  EXPECT_NEAR(std::abs(v - quad), 0.0, 1e-10);
  EXPECT_NEAR(v.real(), 0.60653065971263342, 1e-12);
  EXPECT_NEAR(v.imag(), 0.0, 1e-14);
}

TEST(GaussianOverlap, DisplacedInMomentum) {
  const auto ket = GaussianWavepacket::one_dim(0.0, 1.0, 2.0);
  const auto bra = GaussianWavepacket::one_dim(0.0, 2.0, 2.0);
  const Complex v = gaussian_overlap(bra, ket);
  EXPECT_NEAR(std::abs(v - quadrature_overlap(bra, ket)), 0.0, 1e-10);
  EXPECT_NEAR(std::abs(v), 0.88249690258459546, 1e-12);
  EXPECT_NEAR(std::arg(v), 0.0, 1e-14);
}

TEST(GaussianOverlap, GeneralPointMatchesQuadrature) {
  const auto ket = GaussianWavepacket::one_dim(-1.0, 0.5, 2.0);
  const auto bra = GaussianWavepacket::one_dim(0.4, -1.3, 2.0);
  EXPECT_NEAR(std::abs(gaussian_overlap(bra, ket) - quadrature_overlap(bra, ket)), 0.0, 1e-10);
}

TEST(GaussianOverlap, ConjugateSymmetry) {
  const auto a = GaussianWavepacket::one_dim(0.2, 1.1, 0.7);
  const auto b = GaussianWavepacket::one_dim(-0.5, 0.3, 0.7);
  EXPECT_NEAR(std::abs(gaussian_overlap(a, b) - std::conj(gaussian_overlap(b, a))), 0.0, 1e-15);
}

TEST(GaussianOverlap, MagnitudeDependsOnWeightedDistanceOnly) {
  const auto g0 = GaussianWavepacket::one_dim(0.0, 0.0, 2.0);
  // Two points at the same Sigma0 distance: gamma dq^2 = dp^2 / gamma.
  const auto a = GaussianWavepacket::one_dim(1.0, 0.0, 2.0);
  const auto b = GaussianWavepacket::one_dim(0.0, 2.0, 2.0);
  EXPECT_NEAR(std::abs(gaussian_overlap(a, g0)), std::abs(gaussian_overlap(b, g0)), 1e-15);
}

TEST(GaussianOverlap, RejectsMismatchedFamilies) {
  const auto a = GaussianWavepacket::one_dim(0.0, 0.0, 2.0);
  const auto b = GaussianWavepacket::one_dim(0.0, 0.0, 1.0);
  EXPECT_THROW(gaussian_overlap(a, b), std::invalid_argument);
  const auto c = GaussianWavepacket::isotropic(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2), 2.0);
  EXPECT_THROW(gaussian_overlap(a, c), std::invalid_argument);
}

TEST(GaussianWavepacket, RejectsNonPositiveWidth) {
  Eigen::MatrixXd g(2, 2);
  g << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(GaussianWavepacket(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2), g), std::invalid_argument);
  g << 1.0, 0.5, 0.4, 1.0;
  EXPECT_THROW(GaussianWavepacket(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2), g), std::invalid_argument);
}

TEST(EvaluateGaussian, PeakValue) {
  const SpatialGrid grid(-8.0, 8.0, 1024);
  const auto psi = evaluate_gaussian(GaussianWavepacket::one_dim(0.0, 0.0, 1.0), grid);
  EXPECT_NEAR(psi.values[512].real(), 0.75112554446494248, 1e-14);
  const auto moving = evaluate_gaussian(GaussianWavepacket::one_dim(0.0, 1.0, 1.0), grid);
  EXPECT_NEAR(std::abs(moving.values[512]), 0.75112554446494248, 1e-14);
}

TEST(EvaluateGaussian, DiscreteNorm) {
  const SpatialGrid grid(-8.0, 8.0, 1024);
  const auto psi = evaluate_gaussian(GaussianWavepacket::one_dim(-1.0, 0.0, 2.0), grid);
  EXPECT_NEAR(psi.norm(), 1.0, 1e-8);
  EXPECT_FALSE(psi.truncation_warning);
}

TEST(EvaluateGaussian, FlagsNarrowGrid) {
  const SpatialGrid grid(-2.0, 2.0, 256);
  EXPECT_TRUE(evaluate_gaussian(GaussianWavepacket::one_dim(-1.0, 0.0, 2.0), grid).truncation_warning);
}

TEST(SamplingDensity, CentreValues) {
  const auto psi0 = GaussianWavepacket::one_dim(-1.0, 0.0, 2.0);
  const auto z0 = zv(-1.0, 0.0);
  EXPECT_DOUBLE_EQ(SamplingScheme::husimi(psi0).density(z0), 1.0);
  EXPECT_DOUBLE_EQ(SamplingScheme::sqrt_husimi(psi0).density(z0), 0.5);
  EXPECT_DOUBLE_EQ(SamplingScheme::general(psi0, 4.0).density(z0), 0.5);
}

TEST(SamplingDensity, GeneralAReproducesNamedSchemes) {
  const auto psi0 = GaussianWavepacket::one_dim(0.3, -0.2, 1.5);
  for (const auto& z : {zv(0.0, 0.0), zv(1.2, -0.4), zv(-2.0, 3.0)}) {
    EXPECT_NEAR(SamplingScheme::general(psi0, 2.0).density(z), SamplingScheme::husimi(psi0).density(z), 1e-15);
    EXPECT_NEAR(SamplingScheme::general(psi0, 4.0).density(z), SamplingScheme::sqrt_husimi(psi0).density(z), 1e-15);
  }
}

TEST(SamplingDensity, HusimiIsSquaredOverlap) {
  const auto psi0 = GaussianWavepacket::one_dim(0.0, 0.0, 2.0);
  const auto z = zv(0.7, -1.1);
  const double ov = std::abs(gaussian_overlap(psi0.moved_to(z), psi0));
  EXPECT_NEAR(SamplingScheme::husimi(psi0).density(z), ov * ov, 1e-15);
}

TEST(SamplingDensity, NormalisedAgainstScaledMeasure) {
  const auto psi0 = GaussianWavepacket::one_dim(-1.0, 0.5, 2.0);
  for (double a : {2.0, 3.0, 4.0, 6.0}) {
    const auto sch = SamplingScheme::general(psi0, a);
    const double sq = std::sqrt(a / (2.0 * 2.0)), sp = std::sqrt(a * 2.0 / 2.0);
    const int n = 800;
    const double hq = 16.0 * sq / n, hp = 16.0 * sp / n;
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double z[2] = {-1.0 - 8.0 * sq + (i + 0.5) * hq, 0.5 - 8.0 * sp + (j + 0.5) * hp};
        sum += sch.density(z);
      }
    EXPECT_NEAR(sum * hq * hp / (2.0 * std::numbers::pi), 1.0, 1e-6) << "a=" << a;
  }
}

TEST(Prefactor, ReconstructsOverlap) {
  const auto psi0 = GaussianWavepacket::one_dim(-1.0, 0.3, 2.0);
  for (const auto& sch : {SamplingScheme::husimi(psi0), SamplingScheme::sqrt_husimi(psi0),
                          SamplingScheme::general(psi0, 3.0), SamplingScheme::general(psi0, 6.0)}) {
    for (const auto& z : {zv(-1.0, 0.3), zv(0.5, -0.9), zv(-3.0, 2.2)}) {
      const Complex ov = gaussian_overlap(psi0.moved_to(z), psi0);
      const Complex rec = sch.prefactor(z) * sch.density(z);
      EXPECT_LE(std::abs(rec - ov), 1e-12 * std::abs(ov)) << sch.name();
    }
  }
}

TEST(Prefactor, Examples) {
  const auto psi0 = GaussianWavepacket::one_dim(0.0, 0.0, 2.0);
  const Complex r_sqrt = SamplingScheme::sqrt_husimi(psi0).prefactor(zv(0.0, 1.7));
  EXPECT_NEAR(r_sqrt.real(), 2.0, 1e-15);
  EXPECT_NEAR(r_sqrt.imag(), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(SamplingScheme::sqrt_husimi(psi0).prefactor(zv(1.3, 0.4))), 2.0, 1e-14);
  const Complex r_h0 = SamplingScheme::husimi(psi0).prefactor(zv(0.0, 0.0));
  EXPECT_NEAR(std::abs(r_h0 - Complex(1.0, 0.0)), 0.0, 1e-15);
  const Complex r_h = SamplingScheme::husimi(psi0).prefactor(zv(1.0, 0.0));
  EXPECT_NEAR(r_h.real(), 1.6487212707001282, 1e-13);
  EXPECT_NEAR(r_h.imag(), 0.0, 1e-14);
}

TEST(Prefactor, HusimiOverflowIsReported) {
  const auto psi0 = GaussianWavepacket::one_dim(0.0, 0.0, 2.0);
  EXPECT_THROW(SamplingScheme::husimi(psi0).prefactor(zv(40.0, 0.0)), NumericalError);
  EXPECT_NO_THROW(SamplingScheme::sqrt_husimi(psi0).prefactor(zv(40.0, 0.0)));
}

TEST(Sampling, HusimiMoments) {
  const auto psi0 = GaussianWavepacket::one_dim(-1.0, 0.0, 2.0);
  const std::size_t n = 100000;
  for (auto [sch, vq, vp] : {std::tuple{SamplingScheme::husimi(psi0), 0.5, 2.0},
                             std::tuple{SamplingScheme::sqrt_husimi(psi0), 1.0, 4.0}}) {
    const auto s = sch.sample(n, 7);
    double mq = 0, mp = 0;
    for (std::size_t i = 0; i < n; ++i) mq += s[i][0], mp += s[i][1];
    mq /= n, mp /= n;
    double cqq = 0, cpp = 0, cqp = 0;
    for (std::size_t i = 0; i < n; ++i) {
      cqq += (s[i][0] - mq) * (s[i][0] - mq);
      cpp += (s[i][1] - mp) * (s[i][1] - mp);
      cqp += (s[i][0] - mq) * (s[i][1] - mp);
    }
    cqq /= n - 1, cpp /= n - 1, cqp /= n - 1;
    EXPECT_LT(std::abs(mq + 1.0), 4.0 * std::sqrt(vq / n));
    EXPECT_LT(std::abs(mp), 4.0 * std::sqrt(vp / n));
    EXPECT_NEAR(cqq / vq, 1.0, 0.05);
    EXPECT_NEAR(cpp / vp, 1.0, 0.05);
    EXPECT_LT(std::abs(cqp), 0.05 * std::sqrt(vq * vp));
  }
}

TEST(Sampling, IndexAddressable) {
  const auto psi0 = GaussianWavepacket::isotropic(Eigen::VectorXd::Constant(3, -1.0), Eigen::VectorXd::Zero(3), 2.0);
  const auto sch = SamplingScheme::sqrt_husimi(psi0);
  const auto a = sch.sample(100, 12345);
  const auto b = sch.sample(100, 12345);
  const auto big = sch.sample(1000, 12345);
  for (std::size_t i = 0; i < 100; ++i)
    for (int k = 0; k < 6; ++k) {
      EXPECT_EQ(a[i][k], b[i][k]);
      EXPECT_EQ(a[i][k], big[i][k]);
    }
  std::vector<double> one(6);
  sch.sample_into(one, 12345, 0, 57);
  for (int k = 0; k < 6; ++k) EXPECT_EQ(one[k], a[57][k]);
  const auto other = sch.sample(100, 12346);
  EXPECT_NE(a[0][0], other[0][0]);
  const auto stream1 = sch.sample(100, 12345, 1);
  EXPECT_NE(a[0][0], stream1[0][0]);
}

TEST(Sampling, SchemeNamesRoundTrip) {
  EXPECT_EQ(parse_sampling_kind("husimi"), SamplingKind::Husimi);
  EXPECT_EQ(parse_sampling_kind("sqrt_husimi"), SamplingKind::SqrtHusimi);
  EXPECT_THROW(parse_sampling_kind("uniform"), std::invalid_argument);
}
