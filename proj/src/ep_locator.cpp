// SPDX-License-Identifier: Apache-2.0
#include "epchiral/ep_locator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <boost/math/tools/minima.hpp>

#include "epchiral/errors.hpp"
#include "epchiral/monodromy.hpp"

namespace epchiral {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> real_levels(const MatrixPencil& pencil, double lambda) {
  const RMatrix h = pencil.h0() + lambda * pencil.h1();
  Eigen::SelfAdjointEigenSolver<RMatrix> solver(h, Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

double adjacent_gap(const MatrixPencil& pencil, double lambda, int k) {
  const auto levels = real_levels(pencil, lambda);
  return levels[static_cast<std::size_t>(k) + 1] - levels[static_cast<std::size_t>(k)];
}

// Half-width of the repulsion: for a hyperbolic gap g = c sqrt(x^2 + y^2)
// this returns y = sqrt(g / g'') at the minimum.
double repulsion_width(const MatrixPencil& pencil, const SeedRegion& seed, double step) {
  const int k = seed.pair.first;
  double h = step;
  double width = step;
  for (int i = 0; i < 8; ++i) {
    const double g0 = adjacent_gap(pencil, seed.lambda_seed, k);
    const double gp = adjacent_gap(pencil, seed.lambda_seed + h, k);
    const double gm = adjacent_gap(pencil, seed.lambda_seed - h, k);
    const double curvature = (gp + gm - 2.0 * g0) / (h * h);
    if (!(curvature > 0.0) || !(g0 > 0.0)) {
      width = h;
      break;
    }
    width = std::sqrt(g0 / curvature);
    if (h <= 0.25 * width) {
      break;
    }
    h = 0.25 * width;
  }
  return width;
}

struct Residual {
  cplx f1;     // p / Q, scaled by 1/s^2
  cplx f2;     // (dp/de) / Q, scaled by 1/s
  double norm;
};

// The characteristic polynomial divided by the product Q of the spectator
// factors. Q does not vanish near the EP, so the zero set is unchanged and
// the residual is free of the spectator magnitudes.
class CoalescenceSystem {
public:
  CoalescenceSystem(const MatrixPencil& pencil, double scale, const Tolerances& tol)
      : pencil_(pencil), scale_(scale), tol_(tol) {}

  std::vector<cplx> levels(cplx lambda) const {
    return eigensystem_at(pencil_, lambda, tol_).values;
  }

  Residual evaluate(const std::vector<cplx>& values, cplx e) const {
    const LevelPair pr = closest_pair(values, e);
    cplx q = 1.0;
    for (int k = 0; k < static_cast<int>(values.size()); ++k) {
      if (k != pr.first && k != pr.second) {
        q *= values[static_cast<std::size_t>(k)] - e;
      }
    }
    const CharPoly cp = char_poly_eval(values, e);
    Residual r;
    r.f1 = cp.p / q / (scale_ * scale_);
    r.f2 = cp.dp_de / q / scale_;
    r.norm = std::max(std::abs(r.f1), std::abs(r.f2));
    return r;
  }

  Residual evaluate(cplx lambda, cplx e) const { return evaluate(levels(lambda), e); }

private:
  const MatrixPencil& pencil_;
  double scale_;
  Tolerances tol_;
};

struct NewtonOutcome {
  cplx lambda;
  cplx e;
  double residual;
  int iterations;
};

NewtonOutcome run_newton(const MatrixPencil& pencil, cplx lambda, cplx e, double scale,
                         const NewtonOptions& opt, const Tolerances& tol) {
  const CoalescenceSystem system(pencil, scale, tol);
  auto values = system.levels(lambda);
  Residual res = system.evaluate(values, e);
  double prev_update = std::numeric_limits<double>::infinity();
  double best_residual = res.norm;

  for (int it = 1; it <= opt.max_iterations; ++it) {
    const double hl = opt.fd_step * (1.0 + std::abs(lambda));
    const double he = opt.fd_step * (1.0 + std::abs(e));
    const Residual lp = system.evaluate(lambda + hl, e);
    const Residual lm = system.evaluate(lambda - hl, e);
    const Residual ep = system.evaluate(values, e + he);
    const Residual em = system.evaluate(values, e - he);

    Eigen::Matrix2cd jac;
    jac << (lp.f1 - lm.f1) / (2.0 * hl), (ep.f1 - em.f1) / (2.0 * he),
           (lp.f2 - lm.f2) / (2.0 * hl), (ep.f2 - em.f2) / (2.0 * he);
    const Eigen::Vector2cd rhs(-res.f1, -res.f2);
    const Eigen::Vector2cd delta = jac.fullPivLu().solve(rhs);
    if (!delta.allFinite()) {
      break;
    }

    double t = 1.0;
    cplx next_lambda = lambda + delta(0);
    cplx next_e = e + delta(1);
    auto next_values = system.levels(next_lambda);
    Residual next = system.evaluate(next_values, next_e);
    for (int halving = 0; halving < opt.max_halvings && !(next.norm < res.norm); ++halving) {
      t *= 0.5;
      next_lambda = lambda + t * delta(0);
      next_e = e + t * delta(1);
      next_values = system.levels(next_lambda);
      next = system.evaluate(next_values, next_e);
    }

    const double update = t * std::max(std::abs(delta(0)), std::abs(delta(1)));
    lambda = next_lambda;
    e = next_e;
    values = std::move(next_values);
    res = next;
    best_residual = std::min(best_residual, res.norm);

    const double size = 1.0 + std::abs(lambda) + std::abs(e);
    if (res.norm < opt.residual_tol) {
      // Quadratic convergence stops at the rounding floor; treat a stalled
      // update as converged once the residual is below tolerance.
      if (update < opt.update_tol * size || update > 0.9 * prev_update) {
        return {lambda, e, res.norm, it};
      }
    }
    prev_update = update;
  }
  if (res.norm < opt.residual_tol) {
    return {lambda, e, res.norm, opt.max_iterations};
  }
  throw NoConvergence("Newton did not reach residual " + std::to_string(opt.residual_tol) +
                      " (best " + std::to_string(best_residual) + ")");
}

void check_not_diabolic(const MatrixPencil& pencil, const NewtonOutcome& sol, const NewtonOptions& opt,
                        const Tolerances& tol) {
  const EigenSystem sys = eigensystem_at(pencil, sol.lambda, tol);
  const LevelPair pr = closest_pair(sys.values, sol.e);
  if (self_orthogonality(sys, pr.first).value > opt.diabolic_self_orthogonality &&
      self_orthogonality(sys, pr.second).value > opt.diabolic_self_orthogonality) {
    throw ConvergedToDiabolic("two-dimensional eigenspace at lambda = " +
                              std::to_string(sol.lambda.real()) + std::to_string(sol.lambda.imag()) +
                              "i");
  }
}

std::array<ExceptionalPoint, 2> make_pair(const NewtonOutcome& sol, LevelPair pair, double lambda_seed) {
  ExceptionalPoint ep;
  ep.lambda_c = sol.lambda;
  ep.e_c = sol.e;
  ep.pair = pair;
  ep.residual = sol.residual;
  ep.lambda_seed = lambda_seed;
  ep.iterations = sol.iterations;
  ExceptionalPoint partner = ep;
  partner.lambda_c = std::conj(ep.lambda_c);
  partner.e_c = std::conj(ep.e_c);
  return {ep, partner};
}

// Sorted real-axis indices of the coalescing levels, found by continuing them
// from just beside the EP straight down to Re(lambda_c).
LevelPair real_axis_pair(const MatrixPencil& pencil, cplx lambda_c, cplx e_c, const Tolerances& tol) {
  const double size = 1.0 + std::abs(lambda_c);
  const cplx start = lambda_c + cplx(1e-3 * size, 0.0);
  const cplx foot(lambda_c.real() + 1e-3 * size, 0.0);
  try {
    const ContinuationState state =
        continue_along(pencil, segment(start, foot, 64 + static_cast<int>(64 * std::abs(lambda_c.imag()) / size)),
                       {}, {}, tol);
    const EigenSystem first = eigensystem_at(pencil, start, tol);
    const LevelPair at_start = closest_pair(first.values, e_c);
    int a = state.permutation[static_cast<std::size_t>(at_start.first)];
    int b = state.permutation[static_cast<std::size_t>(at_start.second)];
    if (a > b) {
      std::swap(a, b);
    }
    return {a, b};
  } catch (const Error&) {
    const auto levels = real_levels(pencil, lambda_c.real());
    int best = 0;
    double dist = std::numeric_limits<double>::infinity();
    for (int k = 0; k + 1 < static_cast<int>(levels.size()); ++k) {
      const double mid = 0.5 * (levels[static_cast<std::size_t>(k)] + levels[static_cast<std::size_t>(k) + 1]);
      if (std::abs(mid - e_c.real()) < dist) {
        dist = std::abs(mid - e_c.real());
        best = k;
      }
    }
    return {best, best + 1};
  }
}

} // namespace

LevelPair closest_pair(const std::vector<cplx>& values, cplx e) {
  if (values.size() < 2) {
    throw InvalidArgument("need at least two levels");
  }
  std::vector<int> idx(values.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    idx[i] = static_cast<int>(i);
  }
  std::partial_sort(idx.begin(), idx.begin() + 2, idx.end(), [&](int a, int b) {
    const double da = std::abs(values[static_cast<std::size_t>(a)] - e);
    const double db = std::abs(values[static_cast<std::size_t>(b)] - e);
    return da != db ? da < db : a < b;
  });
  return {std::min(idx[0], idx[1]), std::max(idx[0], idx[1])};
}

CharPoly char_poly_eval(const std::vector<cplx>& eigenvalues, cplx e) {
  CharPoly out{1.0, 0.0};
  // Product rule: (prod f_k)' = sum_j f_j' prod_{k != j} f_k with f_k' = -1.
  for (const auto& ek : eigenvalues) {
    const cplx factor = ek - e;
    out.dp_de = out.dp_de * factor - out.p;
    out.p *= factor;
  }
  return out;
}

CharPoly char_poly_eval(const MatrixPencil& pencil, cplx lambda, cplx e, const Tolerances& tol) {
  return char_poly_eval(eigensystem_at(pencil, lambda, tol).values, e);
}

std::vector<SeedRegion> seed_from_sweep(const MatrixPencil& pencil, std::pair<double, double> interval,
                                        int steps, const Tolerances&) {
  const auto [lo, hi] = interval;
  if (!(std::isfinite(lo) && std::isfinite(hi)) || !(hi > lo)) {
    throw EmptyInterval("sweep interval must satisfy lo < hi");
  }
  if (steps < 16) {
    throw InvalidArgument("sweep needs at least 16 steps");
  }
  const int n = pencil.n();
  const double step = (hi - lo) / steps;
  std::vector<double> lambdas(static_cast<std::size_t>(steps) + 1);
  std::vector<std::vector<double>> levels(lambdas.size());
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    lambdas[i] = i + 1 == lambdas.size() ? hi : lo + step * static_cast<double>(i);
    levels[i] = real_levels(pencil, lambdas[i]);
  }

  std::vector<SeedRegion> seeds;
  for (int k = 0; k + 1 < n; ++k) {
    const auto gap = [&](std::size_t i) {
      return levels[i][static_cast<std::size_t>(k) + 1] - levels[i][static_cast<std::size_t>(k)];
    };
    for (std::size_t i = 1; i + 1 < lambdas.size(); ++i) {
      if (!(gap(i) < gap(i - 1) && gap(i) <= gap(i + 1))) {
        continue;
      }
      const auto refined = boost::math::tools::brent_find_minima(
          [&](double x) { return adjacent_gap(pencil, x, k); }, lambdas[i - 1], lambdas[i + 1],
          std::numeric_limits<double>::digits);
      SeedRegion seed;
      seed.pair = {k, k + 1};
      seed.lambda_seed = refined.first;
      seed.gap_at_seed = refined.second;
      if (seed.gap_at_seed > gap(i)) {
        seed.lambda_seed = lambdas[i];
        seed.gap_at_seed = gap(i);
      }
      seeds.push_back(seed);
    }
  }
  std::sort(seeds.begin(), seeds.end(), [](const SeedRegion& a, const SeedRegion& b) {
    return a.lambda_seed != b.lambda_seed ? a.lambda_seed < b.lambda_seed : a.pair < b.pair;
  });
  return seeds;
}

std::array<ExceptionalPoint, 2> newton_ep(const MatrixPencil& pencil, const SeedRegion& seed,
                                          const NewtonOptions& options, const Tolerances& tol) {
  NewtonOptions opt = options;
  opt.residual_tol = std::min(opt.residual_tol, tol.newton_residual);
  const EigenSystem at_seed = eigensystem_at(pencil, seed.lambda_seed, tol);
  const cplx e0 = 0.5 * (at_seed.values[static_cast<std::size_t>(seed.pair.first)] +
                         at_seed.values[static_cast<std::size_t>(seed.pair.second)]);
  const double width = repulsion_width(pencil, seed, 1e-3 * (1.0 + std::abs(seed.lambda_seed)));
  const cplx lambda0(seed.lambda_seed, width);

  const NewtonOutcome sol = run_newton(pencil, lambda0, e0, spectral_scale(at_seed), opt, tol);
  check_not_diabolic(pencil, sol, opt, tol);
  // A distant seed can land on the branch point of another pair; relabel it
  // from the real axis directly below.
  const LevelPair pair = real_axis_pair(pencil, sol.lambda, sol.e, tol);
  if (pair != seed.pair) {
    return make_pair(sol, pair, sol.lambda.real() + 1e-3 * (1.0 + std::abs(sol.lambda)));
  }
  return make_pair(sol, seed.pair, seed.lambda_seed);
}

std::array<ExceptionalPoint, 2> newton_ep_from_guess(const MatrixPencil& pencil, cplx lambda_guess,
                                                     const NewtonOptions& options, const Tolerances& tol) {
  NewtonOptions opt = options;
  opt.residual_tol = std::min(opt.residual_tol, tol.newton_residual);
  const EigenSystem at_guess = eigensystem_at(pencil, lambda_guess, tol);
  LevelPair closest{0, 1};
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < at_guess.size(); ++j) {
    for (int k = j + 1; k < at_guess.size(); ++k) {
      const double d = std::abs(at_guess.values[static_cast<std::size_t>(j)] -
                                at_guess.values[static_cast<std::size_t>(k)]);
      if (d < best) {
        best = d;
        closest = {j, k};
      }
    }
  }
  const cplx e0 = 0.5 * (at_guess.values[static_cast<std::size_t>(closest.first)] +
                         at_guess.values[static_cast<std::size_t>(closest.second)]);
  const NewtonOutcome sol = run_newton(pencil, lambda_guess, e0, spectral_scale(at_guess), opt, tol);
  check_not_diabolic(pencil, sol, opt, tol);
  const LevelPair pair = real_axis_pair(pencil, sol.lambda, sol.e, tol);
  return make_pair(sol, pair, sol.lambda.real() + 1e-3 * (1.0 + std::abs(sol.lambda)));
}

PuiseuxFit fit_puiseux(const MatrixPencil& pencil, const ExceptionalPoint& ep, const Tolerances& tol) {
  const double size = 1.0 + std::abs(ep.lambda_c);
  const double r_min = 1e-6 * size;
  const double r_max = 1e-2 * size;
  constexpr int kRadii = 25;
  // Rays parallel to the real axis: the conjugate partner then enters the
  // gap only at second order in r.
  const double angles[] = {0.0, kPi};

  std::vector<double> xs;
  std::vector<double> ys;
  for (double alpha : angles) {
    for (int i = 0; i < kRadii; ++i) {
      const double r = r_min * std::pow(r_max / r_min, static_cast<double>(i) / (kRadii - 1));
      const cplx lambda = ep.lambda_c + std::polar(r, alpha);
      const auto values = eigensystem_at(pencil, lambda, tol).values;
      const LevelPair pr = closest_pair(values, ep.e_c);
      const double gap = std::abs(values[static_cast<std::size_t>(pr.first)] -
                                  values[static_cast<std::size_t>(pr.second)]);
      xs.push_back(std::log(r));
      ys.push_back(std::log(std::max(gap, std::numeric_limits<double>::min())));
    }
  }
  const double count = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= count;
  my /= count;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  PuiseuxFit fit;
  fit.exponent = sxy / sxx;
  const double intercept = my - fit.exponent * mx;
  fit.leading_coeff_magnitude = 0.5 * std::exp(intercept);
  fit.fit_window = {r_min, r_max};
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = ys[i] - (intercept + fit.exponent * xs[i]);
    ss += d * d;
  }
  fit.fit_residual = std::sqrt(ss / count);
  return fit;
}

PuiseuxFit verify_ep(const MatrixPencil& pencil, const ExceptionalPoint& ep, const Tolerances& tol) {
  PuiseuxFit fit = fit_puiseux(pencil, ep, tol);
  if (!(fit.exponent > 0.4 && fit.exponent < 0.6)) {
    throw NotABranchPoint("gap exponent " + std::to_string(fit.exponent) + " is not 1/2");
  }
  return fit;
}

std::vector<ExceptionalPoint> locate_eps(const MatrixPencil& pencil, std::pair<double, double> interval,
                                         int steps, const NewtonOptions& options, const Tolerances& tol) {
  std::vector<ExceptionalPoint> found;
  for (const SeedRegion& seed : seed_from_sweep(pencil, interval, steps, tol)) {
    try {
      const auto pair = newton_ep(pencil, seed, options, tol);
      const bool duplicate = std::any_of(found.begin(), found.end(), [&](const ExceptionalPoint& other) {
        return std::abs(other.lambda_c - pair[0].lambda_c) < 1e-8 * (1.0 + std::abs(pair[0].lambda_c));
      });
      if (!duplicate) {
        found.push_back(pair[0]);
        found.push_back(pair[1]);
      }
    } catch (const Error&) {
      // Diabolic crossings and seeds that wander off are not EPs.
    }
  }
  return found;
}

} // namespace epchiral
