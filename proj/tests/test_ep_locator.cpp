// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <cmath>

#include "epchiral/ep_locator.hpp"
#include "epchiral/errors.hpp"
#include "epchiral/random.hpp"
#include "epchiral/two_level.hpp"

using namespace epchiral;

namespace {

const cplx I(0.0, 1.0);
const double kPi = std::acos(-1.0);

MatrixPencil standard_pencil() {
  return assemble({1.0, -1.0, 1.0, -1.0, kPi / 4.0});
}

// Random parameters with O(1) splittings and a coupling well away from the
// diabolic limit.
TwoLevelParams random_params(Rng& rng) {
  TwoLevelParams p;
  const double de = rng.uniform(0.5, 2.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
  const double dw = rng.uniform(0.5, 2.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
  p.eps2 = rng.normal();
  p.eps1 = p.eps2 + de;
  p.omega2 = rng.normal();
  p.omega1 = p.omega2 + dw;
  do {
    p.phi = rng.uniform(-kPi, kPi);
  } while (std::abs(std::sin(2.0 * p.phi)) <= 0.1);
  return p;
}

const ExceptionalPoint& nearest(const std::array<ExceptionalPoint, 2>& eps, cplx target) {
  return std::abs(eps[0].lambda_c - target) <= std::abs(eps[1].lambda_c - target) ? eps[0] : eps[1];
}

} // namespace

TEST_CASE("characteristic polynomial") {
  const CharPoly d = char_poly_eval(std::vector<cplx>{1.0, 2.0}, 1.0);
  CHECK(std::abs(d.p) == 0.0);
  CHECK(std::abs(d.dp_de + 1.0) < 1e-15);

  // e^2 - (1 + lambda^2) at lambda = -i, e = 0: a double root.
  const CharPoly s = char_poly_eval(standard_pencil(), -I, 0.0);
  CHECK(std::abs(s.p) < 1e-14);
  CHECK(std::abs(s.dp_de) < 1e-7);

  const CharPoly far = char_poly_eval(standard_pencil(), 0.3, 100.0);
  CHECK(std::abs(far.p) > 1.0);
}

TEST_CASE("property: characteristic polynomial equals the determinant") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 5;
    const MatrixPencil p(random_symmetric(n, rng), random_symmetric(n, rng));
    const cplx lambda(rng.normal(), rng.normal());
    const cplx e(rng.normal(), rng.normal());
    CMatrix shifted = evaluate(p, lambda);
    shifted.diagonal().array() -= e;
    const cplx det = shifted.determinant();
    const CharPoly cp = char_poly_eval(p, lambda, e);
    CHECK(std::abs(cp.p - det) < 1e-10 * (1.0 + std::abs(det)));
    // Jacobi's formula: dp/de = -det * tr((H - e)^-1).
    const cplx dde = -det * shifted.inverse().trace();
    CHECK(std::abs(cp.dp_de - dde) < 1e-9 * (1.0 + std::abs(dde)));
  }
}

TEST_CASE("seeds from a real sweep") {
  const auto seeds = seed_from_sweep(standard_pencil(), {-2.0, 2.0}, 200);
  REQUIRE(seeds.size() == 1);
  CHECK(std::abs(seeds[0].lambda_seed) < 1e-6);
  CHECK(seeds[0].pair == LevelPair{0, 1});
  CHECK(seeds[0].gap_at_seed == doctest::Approx(2.0).epsilon(1e-12));

  // phi = 0: a true crossing at -(eps1 - eps2)/(omega1 - omega2) = -0.5.
  const auto diabolic = seed_from_sweep(assemble({1.0, 0.0, 2.0, 0.0, 0.0}), {-2.0, 2.0}, 200);
  REQUIRE(diabolic.size() == 1);
  CHECK(std::abs(diabolic[0].lambda_seed + 0.5) < 1e-8);
  CHECK(diabolic[0].gap_at_seed < 1e-8);

  // Uncoupled levels that never approach inside the window.
  CHECK(seed_from_sweep(assemble({1.0, -1.0, 0.1, -0.1, 0.0}), {-2.0, 2.0}, 200).empty());

  CHECK_THROWS_AS(seed_from_sweep(standard_pencil(), {1.0, 1.0}, 100), EmptyInterval);
  CHECK_THROWS_AS(seed_from_sweep(standard_pencil(), {-1.0, 1.0}, 8), InvalidArgument);
}

TEST_CASE("Newton on the standard pencil") {
  const auto seeds = seed_from_sweep(standard_pencil(), {-2.0, 2.0}, 200);
  const auto eps = newton_ep(standard_pencil(), seeds.at(0));
  CHECK(std::abs(nearest(eps, I).lambda_c - I) < 1e-10);
  CHECK(std::abs(nearest(eps, -I).lambda_c + I) < 1e-10);
  for (const auto& ep : eps) {
    CHECK(std::abs(ep.e_c) < 1e-10);
    CHECK(ep.residual <= 1e-10);
    CHECK(ep.pair == LevelPair{0, 1});
  }
  CHECK(eps[1].lambda_c == std::conj(eps[0].lambda_c));
}

TEST_CASE("Newton reproduces a closed-form exceptional point") {
  const TwoLevelParams p{0.0, 1.0, 1.0, -1.0, kPi / 3.0};
  const cplx expected = 0.5 * std::polar(1.0, 2.0 * kPi / 3.0);
  const MatrixPencil pencil = assemble(p);
  const auto seeds = seed_from_sweep(pencil, {-3.0, 3.0}, 300);
  REQUIRE(seeds.size() == 1);
  const auto eps = newton_ep(pencil, seeds[0]);
  CHECK(std::abs(nearest(eps, expected).lambda_c - expected) < 1e-9 * std::abs(expected));
}

TEST_CASE("Newton on a diabolic crossing") {
  const MatrixPencil pencil = assemble({1.0, 0.0, 2.0, 0.0, 0.0});
  const auto seeds = seed_from_sweep(pencil, {-2.0, 2.0}, 200);
  REQUIRE(seeds.size() == 1);
  CHECK_THROWS_AS(newton_ep(pencil, seeds[0]), ConvergedToDiabolic);
}

TEST_CASE("Puiseux fit") {
  const auto eps = newton_ep(standard_pencil(), seed_from_sweep(standard_pencil(), {-2.0, 2.0}, 200).at(0));
  const PuiseuxFit fit = verify_ep(standard_pencil(), nearest(eps, I));
  CHECK(std::abs(fit.exponent - 0.5) < 0.005);
  // Direct sampling oracle: gap = 2 |sqrt(1 + lambda^2)| = 2 |e1| sqrt(r) + O(r).
  const double r = 1e-8;
  const double sampled = 2.0 * std::abs(std::sqrt(1.0 + (I + r) * (I + r))) / (2.0 * std::sqrt(r));
  CHECK(sampled == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
  CHECK(fit.leading_coeff_magnitude == doctest::Approx(sampled).epsilon(2e-3));
  CHECK(fit.fit_window.first == doctest::Approx(2e-6));
  CHECK(fit.fit_window.second == doctest::Approx(2e-2));

  ExceptionalPoint crossing;
  crossing.lambda_c = -0.5;
  crossing.e_c = 0.0;
  const MatrixPencil diabolic = assemble({1.0, 0.0, 2.0, 0.0, 0.0});
  CHECK(fit_puiseux(diabolic, crossing).exponent == doctest::Approx(1.0).epsilon(1e-3));
  CHECK_THROWS_AS(verify_ep(diabolic, crossing), NotABranchPoint);
}

TEST_CASE("property: closed-form agreement over random two-level models") {
  Rng rng(101);
  for (int trial = 0; trial < 25; ++trial) {
    const TwoLevelParams p = random_params(rng);
    const ClosedFormEps expected = exceptional_points_closed_form(p);
    const MatrixPencil pencil = assemble(p);
    const double reach = 2.0 * std::abs(expected.plus) + 2.0;
    const auto seeds = seed_from_sweep(pencil, {-reach, reach}, 400);
    REQUIRE(seeds.size() == 1);
    const auto eps = newton_ep(pencil, seeds[0]);
    const cplx got_plus = nearest(eps, expected.plus).lambda_c;
    const cplx got_minus = nearest(eps, expected.minus).lambda_c;
    CHECK(std::abs(got_plus - expected.plus) <= 1e-9 * std::abs(expected.plus));
    CHECK(std::abs(got_minus - expected.minus) <= 1e-9 * std::abs(expected.minus));
  }
}

TEST_CASE("property: located EPs come in conjugate pairs and verify with exponent 1/2") {
  const MatrixPencil demo = demo_pencil(10, 42);
  const auto eps = locate_eps(demo, {-5.0, 5.0}, 2000);
  REQUIRE(eps.size() >= 10);
  REQUIRE(eps.size() % 2 == 0);
  for (std::size_t i = 0; i < eps.size(); i += 2) {
    CHECK(eps[i + 1].lambda_c == std::conj(eps[i].lambda_c));
    CHECK(eps[i + 1].e_c == std::conj(eps[i].e_c));
    CHECK(eps[i].residual <= 1e-9);
    const auto values = eigensystem_at(demo, eps[i].lambda_c).values;
    const LevelPair pr = closest_pair(values, eps[i].e_c);
    double scale = 0.0;
    for (const auto& v : values) {
      scale = std::max(scale, std::abs(v));
    }
    CHECK(std::abs(values[static_cast<std::size_t>(pr.first)] - values[static_cast<std::size_t>(pr.second)]) <=
          1e-6 * scale);
    CHECK(std::abs(verify_ep(demo, eps[i]).exponent - 0.5) < 0.02);
  }
}

TEST_CASE("property: at most N(N-1) exceptional points for N = 3") {
  Rng rng(33);
  for (int trial = 0; trial < 5; ++trial) {
    const MatrixPencil p(random_symmetric(3, rng), random_symmetric(3, rng));
    const auto eps = locate_eps(p, {-20.0, 20.0}, 8000);
    CHECK(eps.size() <= 6);
    for (const auto& ep : eps) {
      CHECK(std::abs(verify_ep(p, ep).exponent - 0.5) < 0.02);
    }
  }
}

TEST_CASE("property: the coalesced energy does not depend on the starting guess") {
  const MatrixPencil demo = demo_pencil(10, 42);
  const auto seeds = seed_from_sweep(demo, {-5.0, 5.0}, 2000);
  int compared = 0;
  for (const auto& seed : seeds) {
    const auto a = newton_ep(demo, seed);
    const cplx target = a[0].lambda_c;
    const auto b = newton_ep_from_guess(demo, target + 0.02 * std::abs(target.imag()) * cplx(1.0, 1.0));
    const ExceptionalPoint& nb = nearest(b, target);
    if (std::abs(nb.lambda_c - target) < 1e-8) {
      ++compared;
      CHECK(std::abs(nb.e_c - a[0].e_c) < 1e-8);
      CHECK(nb.pair == a[0].pair);
    }
  }
  CHECK(compared >= 10);
}

TEST_CASE("closest pair") {
  const std::vector<cplx> v{-1.0, 0.1, 0.2, 3.0};
  CHECK(closest_pair(v, 0.14) == LevelPair{1, 2});
  CHECK(closest_pair(v, -0.9) == LevelPair{0, 1});
  CHECK_THROWS_AS(closest_pair(std::vector<cplx>{1.0}, 0.0), InvalidArgument);
}
