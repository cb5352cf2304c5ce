// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "epchiral/ep_locator.hpp"
#include "epchiral/errors.hpp"
#include "epchiral/random.hpp"
#include "epchiral/reduction.hpp"
#include "epchiral/two_level.hpp"

using namespace epchiral;

namespace {

const cplx I(0.0, 1.0);
const double kPi = std::acos(-1.0);

MatrixPencil standard_pencil() {
  return assemble({1.0, -1.0, 1.0, -1.0, kPi / 4.0});
}

const ExceptionalPoint& nearest(const std::array<ExceptionalPoint, 2>& eps, cplx target) {
  return std::abs(eps[0].lambda_c - target) <= std::abs(eps[1].lambda_c - target) ? eps[0] : eps[1];
}

// Descending eps and omega with a coupling away from the diabolic limit.
TwoLevelParams random_params(Rng& rng) {
  TwoLevelParams p;
  p.eps2 = rng.normal();
  p.eps1 = p.eps2 + rng.uniform(0.5, 2.0);
  p.omega2 = rng.normal();
  p.omega1 = p.omega2 + rng.uniform(0.5, 2.0);
  do {
    p.phi = rng.uniform(-kPi, kPi);
  } while (std::abs(std::sin(2.0 * p.phi)) <= 0.1);
  return p;
}

double max_diff(const RMatrix& a, const RMatrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

// Both EPs of a model, matched against the other model's pair.
double ep_distance(const ClosedFormEps& a, const ClosedFormEps& b) {
  const double direct = std::max(std::abs(a.plus - b.plus), std::abs(a.minus - b.minus));
  const double swapped = std::max(std::abs(a.plus - b.minus), std::abs(a.minus - b.plus));
  return std::min(direct, swapped);
}

RMatrix block_diag(const RMatrix& a, const RMatrix& b) {
  RMatrix out = RMatrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

struct SharpEp {
  ExceptionalPoint ep;
  EffectiveTwoLevel eff;
};

// The avoided crossing with the smallest gap on the seed-42 demo pencil.
SharpEp sharpest_demo_ep(const MatrixPencil& demo) {
  auto seeds = seed_from_sweep(demo, {-5.0, 5.0}, 2000);
  REQUIRE_FALSE(seeds.empty());
  const auto best = std::min_element(seeds.begin(), seeds.end(), [](const auto& a, const auto& b) {
    return a.gap_at_seed < b.gap_at_seed;
  });
  SharpEp out;
  out.ep = newton_ep(demo, *best)[0];
  out.eff = extract_effective_params(effective_pencil(demo, best->lambda_seed, best->pair));
  return out;
}

} // namespace

TEST_CASE("extraction from an exact two-level input") {
  Eigen::Matrix2cd h0, h1;
  h0 << 1.0, 0.0, 0.0, -1.0;
  h1 << 0.0, 1.0, 1.0, 0.0;
  const EffectiveTwoLevel eff = extract_effective_params(h0, h1);
  CHECK(eff.params.eps1 == doctest::Approx(1.0));
  CHECK(eff.params.eps2 == doctest::Approx(-1.0));
  CHECK(eff.params.omega1 == doctest::Approx(1.0));
  CHECK(eff.params.omega2 == doctest::Approx(-1.0));
  CHECK(std::abs(std::abs(std::sin(2.0 * eff.params.phi)) - 1.0) < 1e-12);
  CHECK(eff.imaginary_contamination == 0.0);
  const ClosedFormEps eps = predict_ep(eff);
  CHECK(ep_distance(eps, {-I, I, false}) < 1e-12);

  Eigen::Matrix2cd complex_h1 = h1;
  complex_h1(0, 1) = complex_h1(1, 0) = cplx(1.0, 0.1);
  CHECK_THROWS_AS(extract_effective_params(h0, complex_h1), NonRealEffective);
}

TEST_CASE("property: extraction inverts assembly up to a rotation of the basis") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const TwoLevelParams p = random_params(rng);
    const MatrixPencil rotated = assemble(p).conjugated(rotation(rng.uniform(-kPi, kPi)));
    const EffectiveTwoLevel eff =
        extract_effective_params(rotated.h0().cast<cplx>(), rotated.h1().cast<cplx>());
    CHECK(eff.params.eps1 == doctest::Approx(p.eps1).epsilon(1e-12));
    CHECK(eff.params.eps2 == doctest::Approx(p.eps2).epsilon(1e-12));
    CHECK(eff.params.omega1 == doctest::Approx(p.omega1).epsilon(1e-12));
    CHECK(eff.params.omega2 == doctest::Approx(p.omega2).epsilon(1e-12));
    // Reassembly reproduces the spectrum of h1 in the h0 eigenbasis; the EPs
    // of the pencil are basis independent.
    const MatrixPencil back = assemble(eff.params);
    CHECK(max_diff(back.h0(), assemble(p).h0()) < 1e-12);
    CHECK(ep_distance(predict_ep(eff), exceptional_points_closed_form(p)) <
          1e-9 * (1.0 + std::abs(exceptional_points_closed_form(p).plus)));
  }
}

TEST_CASE("effective pencil of an embedded block") {
  const TwoLevelParams p{1.0, -1.0, 1.0, -1.0, kPi / 4.0};
  const MatrixPencil small = assemble(p);
  RMatrix far0(2, 2), far1(2, 2);
  far0 << 10.0, 0.0, 0.0, -10.0;
  far1 << 0.5, 0.0, 0.0, 0.3;
  const MatrixPencil embedded(block_diag(small.h0(), far0), block_diag(small.h1(), far1));
  // Levels at lambda = 0: -10, -1, 1, 10.
  const EffectivePencil pencil = effective_pencil(embedded, 0.0, {1, 2});
  CHECK((pencil.h0 - Eigen::Matrix2cd(Eigen::Vector2cd(-1.0, 1.0).asDiagonal())).cwiseAbs().maxCoeff() < 1e-12);
  const EffectiveTwoLevel eff = extract_effective_params(pencil);
  CHECK(eff.params.omega1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(eff.params.omega2 == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(ep_distance(predict_ep(eff), {-I, I, false}) < 1e-9);

  // Mixing the blocks with a random orthogonal matrix changes nothing.
  Rng rng(12);
  const MatrixPencil mixed = embedded.conjugated(random_orthogonal(4, rng));
  const EffectiveTwoLevel eff_mixed = extract_effective_params(effective_pencil(mixed, 0.0, {1, 2}));
  CHECK(ep_distance(predict_ep(eff_mixed), {-I, I, false}) < 1e-9);
}

TEST_CASE("property: the effective model reproduces the pair at the reference point") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + trial % 6;
    const MatrixPencil p(random_symmetric(n, rng), random_symmetric(n, rng));
    const double lambda_ref = rng.uniform(-1.0, 1.0);
    const int nu = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n - 1));
    const EffectivePencil eff = effective_pencil(p, lambda_ref, {nu, nu + 1});
    CHECK((eff.h0 - eff.h0.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((eff.h1 - eff.h1.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    // Independent oracle: the full eigenvalues at lambda_ref.
    const auto full = eigensystem_at(p, lambda_ref).values;
    const Eigen::Matrix2cd h = eff.h0 + lambda_ref * eff.h1;
    CHECK(std::abs(h(0, 1)) < 1e-10);
    CHECK(std::abs(h(0, 0) - full[static_cast<std::size_t>(nu)]) < 1e-10);
    CHECK(std::abs(h(1, 1) - full[static_cast<std::size_t>(nu + 1)]) < 1e-10);
    // The gauge: Re(chi_nu^T H1 chi_{nu+1}) <= 0.
    CHECK(eff.h1(0, 1).real() <= 0.0);
    // Biorthonormal basis.
    const Eigen::Matrix2cd gram = eff.basis.transpose() * eff.basis;
    CHECK((gram - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("reduction of the demo pencil near its sharpest avoided crossing") {
  const MatrixPencil demo = demo_pencil(10, 42);
  const SharpEp sharp = sharpest_demo_ep(demo);
  const ClosedFormEps predicted = predict_ep(sharp.eff);
  const cplx pred = std::abs(predicted.plus - sharp.ep.lambda_c) < std::abs(predicted.minus - sharp.ep.lambda_c)
                        ? predicted.plus
                        : predicted.minus;
  CHECK(std::abs(pred - sharp.ep.lambda_c) <= 1e-2 * std::abs(sharp.ep.lambda_c));
  CHECK(sharp.eff.imaginary_contamination < 1e-10);

  const double lambda_ref = sharp.eff.lambda_ref.real();
  const double half = 3.0 * std::abs(pred.imag());
  const ReductionComparison cmp = compare_reduction(demo, sharp.eff, {lambda_ref - half, lambda_ref + half}, 400);
  const double scale = spectral_scale(eigensystem_at(demo, lambda_ref));
  CHECK(cmp.max_distance <= 1e-3 * scale);
  REQUIRE(cmp.lambdas.size() == 401);
  // The straight lines are the diagonal of the effective pencil.
  for (std::size_t i = 0; i < cmp.lambdas.size(); i += 50) {
    const double l = cmp.lambdas[i];
    const auto [e1, e2] = eigenvalues_closed_form(sharp.eff.params, l);
    CHECK(std::abs(cmp.effective[i][0] - e1) + std::abs(cmp.effective[i][1] - e2) < 1e-12);
    CHECK(cmp.lines[i][0] == doctest::Approx(sharp.eff.params.eps1 + l * sharp.eff.params.omega1));
  }
}

TEST_CASE("EP state and expansion coefficients") {
  const MatrixPencil p = standard_pencil();
  const auto eps = newton_ep(p, seed_from_sweep(p, {-2.0, 2.0}, 200).at(0));
  const ExceptionalPoint& ep = nearest(eps, -I);
  const CVector psi = ep_state(p, ep);
  CHECK(std::abs(psi.norm() - 1.0) < 1e-14);
  CMatrix shifted = evaluate(p, ep.lambda_c);
  shifted.diagonal().array() -= ep.e_c;
  CHECK((shifted * psi).norm() < 1e-9);
  // Self-orthogonal: psi^T psi = 0 at the EP.
  CHECK(std::abs(bilinear(psi, psi)) < 1e-8);

  // Off the EP the coefficients resynthesize the vector.
  Rng rng(3);
  const MatrixPencil demo = demo_pencil(6, 3);
  CVector v(6);
  for (int k = 0; k < 6; ++k) {
    v(k) = cplx(rng.normal(), rng.normal());
  }
  const cplx lambda(0.3, 0.2);
  const auto c = expansion_coefficients(demo, lambda, v);
  const EigenSystem sys = biorthogonal_normalize(eigensystem_at(demo, lambda));
  CVector sum = CVector::Zero(6);
  for (int k = 0; k < 6; ++k) {
    sum += c[static_cast<std::size_t>(k)] * sys.vector(k);
  }
  CHECK((sum - v).norm() < 1e-10 * v.norm());

  CHECK_THROWS_AS(expansion_coefficients(p, ep.lambda_c, psi), NearDefectiveBasis);
  CHECK_THROWS_AS(effective_pencil(p, ep.lambda_c, {0, 1}), NearDefectiveBasis);
}

TEST_CASE("chirality of the standard pencil") {
  const MatrixPencil p = standard_pencil();
  const auto eps = newton_ep(p, seed_from_sweep(p, {-2.0, 2.0}, 200).at(0));
  const ChiralityResult minus_i = chirality(p, nearest(eps, -I));
  CHECK(minus_i.sign == 1);
  CHECK(minus_i.max_deviation <= 1e-3);
  CHECK(minus_i.ratio_stddev <= 0.05);
  CHECK(minus_i.ratio_samples.size() == 8);
  const ChiralityResult plus_i = chirality(p, nearest(eps, I));
  CHECK(plus_i.sign == -1);
  CHECK(plus_i.max_deviation <= 1e-3);
  for (const auto& [lambda, ratio] : minus_i.ratio_samples) {
    CHECK(std::abs(std::abs(lambda - nearest(eps, -I).lambda_c) - minus_i.sample_radius) < 1e-12);
    CHECK(std::abs(ratio - I) <= 1e-3);
  }
}

TEST_CASE("property: deviation from +-i shrinks with the sampling radius") {
  // Two levels only: the ratio is exactly +-i on any circle.
  const MatrixPencil p = standard_pencil();
  const auto eps = newton_ep(p, seed_from_sweep(p, {-2.0, 2.0}, 200).at(0));
  for (double radius : {1e-2, 1e-3, 1e-4}) {
    ChiralityOptions options;
    options.relative_radius = radius;
    CHECK(chirality(p, nearest(eps, -I), options).max_deviation < 1e-12);
  }

  // More levels: admixture of the others vanishes as the circle shrinks.
  const MatrixPencil demo = demo_pencil(10, 42);
  const SharpEp sharp = sharpest_demo_ep(demo);
  double previous = std::numeric_limits<double>::infinity();
  for (double radius : {1e-2, 1e-3, 1e-4}) {
    ChiralityOptions options;
    options.relative_radius = radius;
    const ChiralityResult r = chirality(demo, sharp.ep, options);
    CHECK(r.sign == (sharp.ep.lambda_c.imag() < 0.0 ? 1 : -1));
    CHECK(r.max_deviation < previous);
    previous = r.max_deviation;
  }
}

TEST_CASE("property: the coalescing pair dominates the EP state near the EP") {
  const MatrixPencil demo = demo_pencil(10, 42);
  const SharpEp sharp = sharpest_demo_ep(demo);
  const CVector psi = ep_state(demo, sharp.ep);
  const double unit = 1.0 + std::abs(sharp.ep.lambda_c);
  double previous = std::numeric_limits<double>::infinity();
  for (double radius : {1e-2, 1e-3, 1e-4}) {
    const cplx lambda = sharp.ep.lambda_c + radius * unit * std::polar(1.0, kPi / 4.0);
    const auto c = expansion_coefficients(demo, lambda, psi);
    const LevelPair pr = closest_pair(eigensystem_at(demo, lambda).values, sharp.ep.e_c);
    double rest = 0.0, total = 0.0;
    for (int k = 0; k < static_cast<int>(c.size()); ++k) {
      const double w = std::norm(c[static_cast<std::size_t>(k)]);
      total += w;
      rest += (k == pr.first || k == pr.second) ? 0.0 : w;
    }
    CHECK(rest / total < previous);
    previous = rest / total;
  }
  CHECK(previous < 1e-6);
}

TEST_CASE("property: conjugate EPs carry opposite chirality, invariant under O(n)") {
  const MatrixPencil demo = demo_pencil(10, 42);
  const auto eps = locate_eps(demo, {-5.0, 5.0}, 2000);
  REQUIRE(eps.size() >= 10);
  Rng rng(77);
  const RMatrix q = random_orthogonal(10, rng);
  RMatrix reflect = RMatrix::Identity(10, 10);
  reflect(0, 0) = -1.0;
  const MatrixPencil rotated = demo.conjugated(q);
  const MatrixPencil reflected = demo.conjugated(reflect * q);
  for (std::size_t i = 0; i < 10; i += 2) {
    const ChiralityResult upper = chirality(demo, eps[i]);
    const ChiralityResult lower = chirality(demo, eps[i + 1]);
    CHECK(upper.sign == -lower.sign);
    CHECK(upper.ratio_stddev <= 0.05);
    CHECK(upper.sign == (eps[i].lambda_c.imag() < 0.0 ? 1 : -1));
    CHECK(chirality(rotated, eps[i]).sign == upper.sign);
    CHECK(chirality(reflected, eps[i]).sign == upper.sign);
  }
}
