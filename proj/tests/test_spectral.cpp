#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sepgan/rng.hpp"
#include "sepgan/spectral.hpp"

using namespace sepgan;

namespace {

DiscreteDistribution random_dist(int n, RngStream& rng, double floor = 0.0) {
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w(i) = floor + rng.uniform();
  return DiscreteDistribution::from_weights(w);
}

// brute-force oracle: independent double loop, no modular tricks shared with
// the implementation
DiscreteDistribution convolve_oracle(const DiscreteDistribution& a,
                                     const DiscreteDistribution& b) {
  const int n = a.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out((i + j) % n) += a(i) * b(j);
  return DiscreteDistribution(out);
}

}  // namespace

TEST_CASE("convolve: delta identity and Bernoulli enumeration") {
  RngStream rng(1);
  const auto dx = random_dist(8, rng);
  CHECK(total_variation(convolve(dx, DiscreteDistribution::delta(8, 0)), dx) <
        1e-15);

  // Bernoulli(1/2) on {0,1} inside Z_4 convolved with itself
  Eigen::VectorXd bern = Eigen::VectorXd::Zero(4);
  bern(0) = 0.5;
  bern(1) = 0.5;
  const DiscreteDistribution dxb(bern);
  const auto sum = convolve(dxb, dxb);
  CHECK(sum(0) == doctest::Approx(0.25));
  CHECK(sum(1) == doctest::Approx(0.5));
  CHECK(sum(2) == doctest::Approx(0.25));
  CHECK(sum(3) == doctest::Approx(0.0));
}

TEST_CASE("convolve: brute-force oracle, commutativity, associativity") {
  RngStream rng(2);
  for (int t = 0; t < 50; ++t) {
    const auto a = random_dist(12, rng);
    const auto b = random_dist(12, rng);
    const auto c = random_dist(12, rng);
    CHECK(total_variation(convolve(a, b), convolve_oracle(a, b)) < 1e-12);
    CHECK(total_variation(convolve(a, b), convolve(b, a)) < 1e-12);
    CHECK(total_variation(convolve(convolve(a, b), c),
                          convolve(a, convolve(b, c))) < 1e-12);
  }
  CHECK_THROWS_AS(convolve(random_dist(4, rng), random_dist(8, rng)),
                  SupportMismatch);
}

TEST_CASE("char_fn: delta, uniform, convolution theorem") {
  const auto phi_delta = char_fn(DiscreteDistribution::delta(6, 0));
  for (int k = 0; k < 6; ++k)
    CHECK(std::abs(phi_delta(k) - std::complex<double>(1, 0)) < 1e-14);

  const auto phi_unif = char_fn(DiscreteDistribution::uniform(5));
  CHECK(std::abs(phi_unif(0) - std::complex<double>(1, 0)) < 1e-14);
  for (int k = 1; k < 5; ++k) CHECK(std::abs(phi_unif(k)) < 1e-14);

  RngStream rng(3);
  for (int t = 0; t < 30; ++t) {
    const auto a = random_dist(10, rng);
    const auto b = random_dist(10, rng);
    const auto lhs = char_fn(convolve(a, b));
    const auto phi_a = char_fn(a);
    const auto phi_b = char_fn(b);
    for (int k = 0; k < 10; ++k)
      CHECK(std::abs(lhs(k) - phi_a(k) * phi_b(k)) < 1e-10);
  }
  // conjugate symmetry for real masses
  const auto phi = char_fn(random_dist(9, rng));
  for (int k = 1; k < 9; ++k)
    CHECK(std::abs(phi(k) - std::conj(phi(9 - k))) < 1e-12);
}

TEST_CASE("deconvolve: biased Bernoulli round trip on Z_8") {
  RngStream rng(4);
  Eigen::VectorXd noise = Eigen::VectorXd::Zero(8);
  noise(0) = 0.7;
  noise(1) = 0.3;  // biased Bernoulli(0.3)
  const DiscreteDistribution dn(noise);
  for (int t = 0; t < 50; ++t) {
    const auto dx = random_dist(8, rng);
    const auto dy = convolve(dx, dn);
    CHECK(total_variation(deconvolve(dy, dn), dx) < 1e-9);
  }
}

TEST_CASE("deconvolve: uniform noise is IllPosed, delta noise is identity") {
  RngStream rng(5);
  const auto dy = random_dist(8, rng);
  try {
    deconvolve(dy, DiscreteDistribution::uniform(8));
    FAIL("expected IllPosed");
  } catch (const IllPosed& e) {
    CHECK(e.frequencies.size() == 7);  // all nonzero frequencies vanish
  }
  CHECK(total_variation(deconvolve(dy, DiscreteDistribution::delta(8, 0)), dy) <
        1e-12);
}

TEST_CASE("optimal_discriminator: equilibrium, perfect-real, complement") {
  RngStream rng(6);
  const auto dy = random_dist(16, rng);
  const auto same = optimal_discriminator(dy, dy);
  for (double v : same) CHECK(v == doctest::Approx(0.5));

  // dg zero where dy positive
  Eigen::VectorXd gmass = Eigen::VectorXd::Zero(4);
  gmass(3) = 1.0;
  Eigen::VectorXd ymass = Eigen::VectorXd::Zero(4);
  ymass(0) = 1.0;
  const auto d = optimal_discriminator(DiscreteDistribution(ymass),
                                       DiscreteDistribution(gmass));
  CHECK(d[0] == 1.0);
  CHECK(d[3] == 0.0);
  CHECK(d[1] == 0.5);  // both zero -> 0.5 by convention

  for (int t = 0; t < 50; ++t) {
    const auto a = random_dist(16, rng);
    const auto b = random_dist(16, rng);
    const auto d1 = optimal_discriminator(a, b);
    const auto d2 = optimal_discriminator(b, a);
    for (int u = 0; u < 16; ++u) {
      CHECK(d1[u] >= 0.0);
      CHECK(d1[u] <= 1.0);
      CHECK(d1[u] + d2[u] == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("demix_ambiguity_witness: swap and shift pairs match the mixture") {
  RngStream rng(7);
  for (int t = 0; t < 50; ++t) {
    const auto dx = random_dist(8, rng);
    const auto dn = random_dist(8, rng);
    const auto target = convolve(dx, dn);
    const auto witnesses = demix_ambiguity_witness(dx, dn);
    REQUIRE(witnesses.size() >= 2);  // swap plus at least one shift
    for (const auto& [g1, g2] : witnesses) {
      CHECK(total_variation(convolve(g1, g2), target) < 1e-12);
      const bool differs =
          total_variation(g1, dx) > 1e-12 || total_variation(g2, dn) > 1e-12;
      CHECK(differs);
    }
  }
}

TEST_CASE("demix_ambiguity_witness: delta shift algebra on Z_8") {
  const auto d1 = DiscreteDistribution::delta(8, 1);
  const auto d2 = DiscreteDistribution::delta(8, 2);
  const auto target = convolve(d1, d2);  // delta_3
  CHECK(target(3) == doctest::Approx(1.0));
  const auto witnesses = demix_ambiguity_witness(d1, d2);
  bool has_swap = false, has_shift = false;
  for (const auto& [g1, g2] : witnesses) {
    if (total_variation(g1, d2) < 1e-15 && total_variation(g2, d1) < 1e-15)
      has_swap = true;
    if (total_variation(g1, DiscreteDistribution::delta(8, 2)) < 1e-15 &&
        total_variation(g2, DiscreteDistribution::delta(8, 1)) < 1e-15)
      has_shift = true;
    CHECK(total_variation(convolve(g1, g2), target) < 1e-15);
  }
  CHECK(has_swap);
  CHECK(has_shift);  // shift by +1: (delta_2, delta_1)
  // (delta_3, delta_0) is another valid witness by the shift algebra
  CHECK(total_variation(convolve(DiscreteDistribution::delta(8, 3),
                                 DiscreteDistribution::delta(8, 0)),
                        target) < 1e-15);
}
