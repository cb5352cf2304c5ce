// SPDX-License-Identifier: Apache-2.0
#include "epchiral/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/SVD>

#include "epchiral/errors.hpp"
#include "epchiral/monodromy.hpp"

namespace epchiral {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;
constexpr double kContaminationTol = 1e-6;

double relative_imaginary(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
  const double size = std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(),
                                std::numeric_limits<double>::min()});
  const double imag = std::max(a.imag().cwiseAbs().maxCoeff(), b.imag().cwiseAbs().maxCoeff());
  return imag / size;
}

// Coupling sign convention shared by effective_pencil and chirality.
bool needs_flip(const MatrixPencil& pencil, const CVector& lower, const CVector& upper) {
  const CVector coupled = pencil.h1().cast<cplx>() * upper;
  return bilinear(lower, coupled).real() > 0.0;
}

} // namespace

EffectivePencil effective_pencil(const MatrixPencil& pencil, cplx lambda_ref, LevelPair pair,
                                 const Tolerances& tol) {
  const int n = pencil.n();
  if (pair.first < 0 || pair.second >= n || pair.first == pair.second) {
    throw InvalidArgument("level pair out of range");
  }
  const EigenSystem sys = biorthogonal_normalize(eigensystem_at(pencil, lambda_ref, tol), tol);
  if (sys.near_defective[static_cast<std::size_t>(pair.first)] ||
      sys.near_defective[static_cast<std::size_t>(pair.second)]) {
    throw NearDefectiveBasis("relevant states are self-orthogonal at lambda_ref");
  }
  EffectivePencil eff;
  eff.lambda_ref = lambda_ref;
  eff.pair = pair;
  eff.basis.resize(n, 2);
  eff.basis.col(0) = sys.vector(pair.first);
  eff.basis.col(1) = sys.vector(pair.second);
  if (needs_flip(pencil, eff.basis.col(0), eff.basis.col(1))) {
    eff.basis.col(1) = -eff.basis.col(1);
  }
  eff.h0 = eff.basis.transpose() * pencil.h0().cast<cplx>() * eff.basis;
  eff.h1 = eff.basis.transpose() * pencil.h1().cast<cplx>() * eff.basis;
  return eff;
}

EffectiveTwoLevel extract_effective_params(const Eigen::Matrix2cd& h0, const Eigen::Matrix2cd& h1) {
  EffectiveTwoLevel out;
  out.imaginary_contamination = relative_imaginary(h0, h1);
  if (out.imaginary_contamination > kContaminationTol) {
    throw NonRealEffective("imaginary part " + std::to_string(out.imaginary_contamination) +
                           " of the effective matrices exceeds tolerance");
  }
  const Eigen::Matrix2d a = h0.real();
  const Eigen::Matrix2d b = h1.real();
  const double a01 = 0.5 * (a(0, 1) + a(1, 0));
  const double b01 = 0.5 * (b(0, 1) + b(1, 0));

  // Proper rotation onto the h0 eigenbasis, larger eigenvalue first.
  const double alpha = 0.5 * std::atan2(2.0 * a01, a(0, 0) - a(1, 1));
  const double half_split_eps = std::hypot(0.5 * (a(0, 0) - a(1, 1)), a01);
  const double mean_eps = 0.5 * (a(0, 0) + a(1, 1));
  out.params.eps1 = mean_eps + half_split_eps;
  out.params.eps2 = mean_eps - half_split_eps;

  Eigen::Matrix2d bs;
  bs << b(0, 0), b01, b01, b(1, 1);
  const Eigen::Matrix2d v = rotation(alpha);
  const Eigen::Matrix2d rotated = v.transpose() * bs * v;
  const double r01 = 0.5 * (rotated(0, 1) + rotated(1, 0));
  const double split_omega = std::hypot(rotated(0, 0) - rotated(1, 1), 2.0 * r01);
  const double mean_omega = 0.5 * (rotated(0, 0) + rotated(1, 1));
  out.params.omega1 = mean_omega + 0.5 * split_omega;
  out.params.omega2 = mean_omega - 0.5 * split_omega;
  out.params.phi = split_omega > 0.0 ? 0.5 * std::atan2(2.0 * r01, rotated(0, 0) - rotated(1, 1)) : 0.0;
  return out;
}

EffectiveTwoLevel extract_effective_params(const EffectivePencil& eff) {
  EffectiveTwoLevel out = extract_effective_params(eff.h0, eff.h1);
  out.basis = eff.basis;
  out.lambda_ref = eff.lambda_ref;
  out.pair = eff.pair;
  return out;
}

ClosedFormEps predict_ep(const EffectiveTwoLevel& eff) {
  return exceptional_points_closed_form(eff.params);
}

CVector ep_state(const MatrixPencil& pencil, const ExceptionalPoint& ep) {
  CMatrix shifted = evaluate(pencil, ep.lambda_c);
  shifted.diagonal().array() -= ep.e_c;
  Eigen::JacobiSVD<CMatrix> svd(shifted, Eigen::ComputeFullV);
  CVector psi = svd.matrixV().col(pencil.n() - 1);
  psi.normalize();
  // Fix the free phase: dominant component real and positive.
  Eigen::Index imax = 0;
  psi.cwiseAbs().maxCoeff(&imax);
  psi *= std::polar(1.0, -std::arg(psi(imax)));
  return psi;
}

std::vector<cplx> expansion_coefficients(const MatrixPencil& pencil, cplx lambda, const CVector& psi,
                                         const Tolerances& tol) {
  const EigenSystem sys = biorthogonal_normalize(eigensystem_at(pencil, lambda, tol), tol);
  if (any_near_defective(sys)) {
    throw NearDefectiveBasis("self-orthogonal level at the expansion point");
  }
  std::vector<cplx> c(static_cast<std::size_t>(sys.size()));
  for (int k = 0; k < sys.size(); ++k) {
    c[static_cast<std::size_t>(k)] = bilinear(sys.vector(k), psi);
  }
  return c;
}

ChiralityResult chirality(const MatrixPencil& pencil, const ExceptionalPoint& ep, const ChiralityOptions& options,
                          const Tolerances& tol) {
  if (options.samples < 5 || options.steps_per_sample < 1 || !(options.relative_radius > 0.0)) {
    throw InvalidArgument("chirality needs >= 5 samples on a circle of positive radius");
  }
  ChiralityResult result;
  result.psi_ep = ep_state(pencil, ep);
  result.sample_radius = options.relative_radius * (1.0 + std::abs(ep.lambda_c));

  const cplx lambda_ref(ep.lambda_seed, 0.0);
  const double start_angle = std::arg(lambda_ref - ep.lambda_c);
  const cplx entry = ep.lambda_c + std::polar(result.sample_radius, start_angle);

  // Straight approach from the reference point, then once around the circle.
  const double approach = std::abs(entry - lambda_ref);
  const int approach_steps = std::max(32, static_cast<int>(std::ceil(4.0 * approach / result.sample_radius)));
  std::vector<cplx> path = segment(lambda_ref, entry, std::min(approach_steps, 4096));
  const std::size_t first_circle = path.size() - 1;
  const int circle_steps = options.samples * options.steps_per_sample;
  for (int i = 1; i < circle_steps; ++i) {
    path.push_back(ep.lambda_c +
                   std::polar(result.sample_radius, start_angle + kTwoPi * static_cast<double>(i) / circle_steps));
  }

  ContinuationOptions copts;
  copts.keep_sample_vectors = true;
  ContinuationState state;
  try {
    state = continue_along(pencil, path, {}, copts, tol);
  } catch (const SampleThroughEP& e) {
    throw NearDefectiveBasis(e.what());
  }

  // The coalescing tracks are the two closest to e_c on the circle; they are
  // ordered by their labels at the reference point.
  const std::size_t circle_step = state.sample_index[first_circle];
  std::vector<int> order(state.tracks.size());
  for (std::size_t j = 0; j < order.size(); ++j) {
    order[j] = static_cast<int>(j);
  }
  std::partial_sort(order.begin(), order.begin() + 2, order.end(), [&](int a, int b) {
    return std::abs(state.tracks[static_cast<std::size_t>(a)][circle_step] - ep.e_c) <
           std::abs(state.tracks[static_cast<std::size_t>(b)][circle_step] - ep.e_c);
  });
  const auto nu = static_cast<Eigen::Index>(std::min(order[0], order[1]));
  const auto nu1 = static_cast<Eigen::Index>(std::max(order[0], order[1]));
  const double gauge = needs_flip(pencil, state.start_vectors.col(nu), state.start_vectors.col(nu1)) ? -1.0 : 1.0;

  for (int s = 0; s < options.samples; ++s) {
    const std::size_t idx = first_circle + static_cast<std::size_t>(s * options.steps_per_sample);
    const CMatrix& chi = state.sample_vectors[idx];
    const cplx c_nu = bilinear(chi.col(nu), result.psi_ep);
    const cplx c_nu1 = gauge * bilinear(chi.col(nu1), result.psi_ep);
    result.ratio_samples.emplace_back(path[idx], c_nu / c_nu1);
  }

  int plus = 0;
  int minus = 0;
  for (const auto& [lambda, ratio] : result.ratio_samples) {
    (ratio.imag() > 0.0 ? plus : minus) += 1;
  }
  if (plus > 0 && minus > 0) {
    throw InconsistentChirality(std::to_string(plus) + " samples give +i, " + std::to_string(minus) + " give -i");
  }
  result.sign = plus > 0 ? 1 : -1;

  cplx mean = 0.0;
  for (const auto& [lambda, ratio] : result.ratio_samples) {
    result.max_deviation = std::max(result.max_deviation, std::abs(ratio - cplx(0.0, result.sign)));
    mean += ratio;
  }
  mean /= static_cast<double>(result.ratio_samples.size());
  double var = 0.0;
  for (const auto& [lambda, ratio] : result.ratio_samples) {
    var += std::norm(ratio - mean);
  }
  result.ratio_stddev = std::sqrt(var / static_cast<double>(result.ratio_samples.size()));
  return result;
}

ReductionComparison compare_reduction(const MatrixPencil& pencil, const EffectiveTwoLevel& eff,
                                      std::pair<double, double> window, int steps, const Tolerances& tol) {
  if (!(window.second > window.first) || steps < 2) {
    throw InvalidArgument("comparison window needs lo < hi and at least two steps");
  }
  const std::vector<cplx> samples = segment(window.first, window.second, steps);
  const ContinuationState state = continue_along(pencil, samples, {}, {}, tol);

  // Tracks holding the pair at the sample closest to lambda_ref.
  std::size_t nearest = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (std::abs(samples[i] - eff.lambda_ref) < std::abs(samples[nearest] - eff.lambda_ref)) {
      nearest = i;
    }
  }
  const EigenSystem at_nearest = eigensystem_at(pencil, samples[nearest], tol);
  std::array<int, 2> track{};
  const std::array<int, 2> levels{eff.pair.first, eff.pair.second};
  for (int t = 0; t < 2; ++t) {
    const cplx target = at_nearest.values[static_cast<std::size_t>(levels[static_cast<std::size_t>(t)])];
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < state.tracks.size(); ++j) {
      const double d = std::abs(state.tracks[j][state.sample_index[nearest]] - target);
      if (d < best && (t == 0 || static_cast<int>(j) != track[0])) {
        best = d;
        track[static_cast<std::size_t>(t)] = static_cast<int>(j);
      }
    }
  }

  ReductionComparison out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double lambda = samples[i].real();
    const std::size_t step = state.sample_index[i];
    const std::array<cplx, 2> full{state.tracks[static_cast<std::size_t>(track[0])][step],
                                   state.tracks[static_cast<std::size_t>(track[1])][step]};
    const auto [e1, e2] = eigenvalues_closed_form(eff.params, lambda);
    const double direct = std::max(std::abs(full[0] - e1), std::abs(full[1] - e2));
    const double swapped = std::max(std::abs(full[0] - e2), std::abs(full[1] - e1));
    out.max_distance = std::max(out.max_distance, std::min(direct, swapped));
    out.lambdas.push_back(lambda);
    out.full.push_back(full);
    out.effective.push_back({e1, e2});
    out.lines.push_back({eff.params.eps1 + lambda * eff.params.omega1, eff.params.eps2 + lambda * eff.params.omega2});
  }
  return out;
}

} // namespace epchiral
