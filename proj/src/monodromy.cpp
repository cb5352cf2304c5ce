// SPDX-License-Identifier: Apache-2.0
#include "epchiral/monodromy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "epchiral/errors.hpp"

namespace epchiral {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

std::string to_text(cplx z) {
  return std::to_string(z.real()) + (z.imag() < 0.0 ? "-" : "+") + std::to_string(std::abs(z.imag())) + "i";
}

class Continuation {
public:
  Continuation(const MatrixPencil& pencil, const ContinuationOptions& options, const Tolerances& tol)
      : pencil_(pencil), options_(options), tol_(tol) {}

  EigenSystem normalized(cplx lambda) const {
    EigenSystem sys = biorthogonal_normalize(eigensystem_at(pencil_, lambda, tol_), tol_);
    if (any_near_defective(sys)) {
      throw SampleThroughEP("self-orthogonal level at lambda = " + to_text(lambda));
    }
    return sys;
  }

  void start(cplx lambda, ContinuationState& state) const {
    const EigenSystem sys = normalized(lambda);
    const int n = sys.size();
    state.lambdas = {lambda};
    state.tracks.assign(static_cast<std::size_t>(n), {});
    for (int j = 0; j < n; ++j) {
      state.tracks[static_cast<std::size_t>(j)].push_back(sys.values[static_cast<std::size_t>(j)]);
    }
    state.start_vectors = sys.right_vectors;
    state.vectors = sys.right_vectors;
    state.permutation.resize(static_cast<std::size_t>(n));
    std::iota(state.permutation.begin(), state.permutation.end(), 0);
    state.signs.assign(static_cast<std::size_t>(n), 1);
    state.min_overlap_seen = 1.0;
    state.sample_index = {0};
  }

  void advance(ContinuationState& state, cplx from, cplx to, int depth) const {
    const EigenSystem sys = normalized(to);
    const int n = sys.size();
    const CMatrix overlap = state.vectors.transpose() * sys.right_vectors;

    // Greedy best-first assignment on |overlap|.
    std::vector<int> match(static_cast<std::size_t>(n), -1);
    std::vector<bool> row_used(static_cast<std::size_t>(n), false);
    std::vector<bool> col_used(static_cast<std::size_t>(n), false);
    for (int assigned = 0; assigned < n; ++assigned) {
      double best = -1.0;
      int bj = 0;
      int bk = 0;
      for (int j = 0; j < n; ++j) {
        if (row_used[static_cast<std::size_t>(j)]) continue;
        for (int k = 0; k < n; ++k) {
          if (col_used[static_cast<std::size_t>(k)]) continue;
          const double m = std::abs(overlap(j, k));
          if (m > best) {
            best = m;
            bj = j;
            bk = k;
          }
        }
      }
      match[static_cast<std::size_t>(bj)] = bk;
      row_used[static_cast<std::size_t>(bj)] = true;
      col_used[static_cast<std::size_t>(bk)] = true;
    }

    const double thr = options_.overlap_threshold;
    double worst = std::numeric_limits<double>::infinity();
    bool accepted = true;
    for (int j = 0; j < n; ++j) {
      const cplx m = overlap(j, match[static_cast<std::size_t>(j)]);
      worst = std::min(worst, std::abs(m));
      if (std::abs(m.real()) < thr || std::abs(m) > 1.0 / thr) {
        accepted = false;
      }
    }

    if (!accepted) {
      if (depth >= options_.max_bisections) {
        throw MatchingAmbiguous("overlap " + std::to_string(worst) + " near lambda = " + to_text(to) +
                                " after " + std::to_string(depth) + " bisections");
      }
      const cplx mid = 0.5 * (from + to);
      advance(state, from, mid, depth + 1);
      advance(state, mid, to, depth + 1);
      return;
    }

    for (int j = 0; j < n; ++j) {
      const int k = match[static_cast<std::size_t>(j)];
      const int sign = overlap(j, k).real() >= 0.0 ? 1 : -1;
      state.vectors.col(j) = static_cast<double>(sign) * sys.right_vectors.col(k);
      state.permutation[static_cast<std::size_t>(j)] = k;
      state.signs[static_cast<std::size_t>(j)] = sign;
      state.tracks[static_cast<std::size_t>(j)].push_back(sys.values[static_cast<std::size_t>(k)]);
    }
    state.min_overlap_seen = std::min(state.min_overlap_seen, worst);
    state.lambdas.push_back(to);
  }

private:
  const MatrixPencil& pencil_;
  ContinuationOptions options_;
  Tolerances tol_;
};

void normalize_transposition_gauge(const MatrixPencil& pencil, const CMatrix& start_vectors,
                                   std::vector<int>& permutation, std::vector<int>& signs) {
  const CMatrix h1 = pencil.h1().cast<cplx>();
  const int n = static_cast<int>(permutation.size());
  for (int a = 0; a < n; ++a) {
    const int b = permutation[static_cast<std::size_t>(a)];
    if (b <= a || permutation[static_cast<std::size_t>(b)] != a) {
      continue;
    }
    const cplx coupling = bilinear(start_vectors.col(a), h1 * start_vectors.col(b));
    if (coupling.real() > 0.0) {
      signs[static_cast<std::size_t>(a)] = -signs[static_cast<std::size_t>(a)];
      signs[static_cast<std::size_t>(b)] = -signs[static_cast<std::size_t>(b)];
    }
  }
}

} // namespace

std::vector<cplx> LoopPath::samples() const {
  if (!(radius > 0.0) || n_steps < 1 || turns < 1 || (orientation != 1 && orientation != -1)) {
    throw InvalidArgument("loop needs radius > 0, steps >= 1, turns >= 1, orientation +-1");
  }
  const int total = n_steps * turns;
  std::vector<cplx> out(static_cast<std::size_t>(total) + 1);
  for (int i = 0; i <= total; ++i) {
    const int wrapped = i % n_steps;
    const double angle = orientation * kTwoPi * static_cast<double>(wrapped) / n_steps;
    out[static_cast<std::size_t>(i)] = center + std::polar(radius, angle);
  }
  return out;
}

SignedPermutation SignedPermutation::identity(int n) {
  SignedPermutation p;
  p.permutation.resize(static_cast<std::size_t>(n));
  std::iota(p.permutation.begin(), p.permutation.end(), 0);
  p.signs.assign(static_cast<std::size_t>(n), 1);
  return p;
}

bool SignedPermutation::is_identity() const {
  for (std::size_t j = 0; j < permutation.size(); ++j) {
    if (permutation[j] != static_cast<int>(j) || signs[j] != 1) {
      return false;
    }
  }
  return true;
}

SignedPermutation SignedPermutation::then(const SignedPermutation& other) const {
  SignedPermutation out = identity(static_cast<int>(permutation.size()));
  for (std::size_t j = 0; j < permutation.size(); ++j) {
    const auto mid = static_cast<std::size_t>(permutation[j]);
    out.permutation[j] = other.permutation[mid];
    out.signs[j] = signs[j] * other.signs[mid];
  }
  return out;
}

SignedPermutation SignedPermutation::power(int k) const {
  SignedPermutation out = identity(static_cast<int>(permutation.size()));
  for (int i = 0; i < k; ++i) {
    out = out.then(*this);
  }
  return out;
}

SignedPermutation SignedPermutation::inverse() const {
  SignedPermutation out = identity(static_cast<int>(permutation.size()));
  for (std::size_t j = 0; j < permutation.size(); ++j) {
    const auto target = static_cast<std::size_t>(permutation[j]);
    out.permutation[target] = static_cast<int>(j);
    out.signs[target] = signs[j];
  }
  return out;
}

int order_of(const SignedPermutation& element, int max_order) {
  SignedPermutation acc = element;
  for (int k = 1; k <= max_order; ++k) {
    if (acc.is_identity()) {
      return k;
    }
    acc = acc.then(element);
  }
  return 0;
}

std::vector<cplx> segment(cplx from, cplx to, int steps) {
  if (steps < 1) {
    throw InvalidArgument("segment needs at least one step");
  }
  std::vector<cplx> out(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) {
    out[static_cast<std::size_t>(i)] = from + (to - from) * (static_cast<double>(i) / steps);
  }
  out.back() = to;
  return out;
}

ContinuationState continue_along(const MatrixPencil& pencil, const std::vector<cplx>& samples,
                                 const std::vector<cplx>& known_eps, const ContinuationOptions& options,
                                 const Tolerances& tol) {
  if (samples.size() < 2) {
    throw InvalidArgument("continuation needs at least two samples");
  }
  for (const cplx& s : samples) {
    for (const cplx& ep : known_eps) {
      if (std::abs(s - ep) < options.ep_exclusion) {
        throw SampleThroughEP("sample " + to_text(s) + " lies on a known EP");
      }
    }
  }
  const Continuation engine(pencil, options, tol);
  ContinuationState state;
  engine.start(samples.front(), state);
  if (options.keep_sample_vectors) {
    state.sample_vectors.push_back(state.vectors);
  }
  for (std::size_t i = 1; i < samples.size(); ++i) {
    engine.advance(state, samples[i - 1], samples[i], 0);
    state.sample_index.push_back(state.lambdas.size() - 1);
    if (options.keep_sample_vectors) {
      state.sample_vectors.push_back(state.vectors);
    }
  }
  return state;
}

MonodromyResult monodromy_of_samples(const MatrixPencil& pencil, const std::vector<cplx>& samples,
                                     const ContinuationOptions& options, const Tolerances& tol) {
  if (samples.size() < 3) {
    throw InvalidArgument("a loop needs at least three samples");
  }
  if (std::abs(samples.front() - samples.back()) > 1e-12 * (1.0 + std::abs(samples.front()))) {
    throw NotClosed("first and last loop samples differ");
  }
  std::vector<cplx> closed = samples;
  closed.back() = closed.front();
  const ContinuationState state = continue_along(pencil, closed, {}, options, tol);

  MonodromyResult result;
  result.permutation = state.permutation;
  result.signs = state.signs;
  normalize_transposition_gauge(pencil, state.start_vectors, result.permutation, result.signs);
  result.loops_to_identity = order_of(result.as_signed_permutation());
  result.min_overlap = state.min_overlap_seen;
  return result;
}

MonodromyResult monodromy(const MatrixPencil& pencil, const LoopPath& loop, const std::vector<cplx>& known_eps,
                          const ContinuationOptions& options, const Tolerances& tol) {
  if (!known_eps.empty()) {
    for (const cplx& ep : known_eps) {
      if (std::abs(std::abs(ep - loop.center) - loop.radius) < options.ep_exclusion) {
        throw SampleThroughEP("loop passes through a known EP");
      }
    }
    const auto inside = std::count_if(known_eps.begin(), known_eps.end(),
                                      [&](cplx ep) { return std::abs(ep - loop.center) < loop.radius; });
    if (inside != 1) {
      throw LoopEnclosure("loop encloses " + std::to_string(inside) + " known EPs, expected 1");
    }
  }
  return monodromy_of_samples(pencil, loop.samples(), options, tol);
}

CrossingReport classify_crossing(const MatrixPencil& pencil, const ExceptionalPoint& ep, double offset,
                                 std::pair<double, double> t_range, int steps, ContinuationState* state_out,
                                 const ContinuationOptions& options, const Tolerances& tol) {
  const double above = std::abs(offset - ep.lambda_c.imag());
  const double below = std::abs(offset + ep.lambda_c.imag());
  if (above < 1e-6 || below < 1e-6) {
    throw PathThroughEP("horizontal path at offset " + std::to_string(offset) + " meets the EP");
  }
  if (!(t_range.second > t_range.first) || steps < 2) {
    throw InvalidArgument("crossing path needs t_lo < t_hi and at least two steps");
  }
  const std::vector<cplx> samples =
      segment(cplx(t_range.first, offset), cplx(t_range.second, offset), steps);
  ContinuationState state = continue_along(pencil, samples, {ep.lambda_c, std::conj(ep.lambda_c)}, options, tol);

  // Isolate the pair at the sample right below or above the EP.
  std::size_t nearest = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (std::abs(samples[i].real() - ep.lambda_c.real()) <
        std::abs(samples[nearest].real() - ep.lambda_c.real())) {
      nearest = i;
    }
  }
  std::vector<cplx> at_nearest;
  for (const auto& track : state.tracks) {
    at_nearest.push_back(track[state.sample_index[nearest]]);
  }
  const LevelPair pr = closest_pair(at_nearest, ep.e_c);

  CrossingReport report;
  report.tracks = pr;
  std::vector<cplx> diff(samples.size());
  double scale = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::size_t step = state.sample_index[i];
    diff[i] = state.tracks[static_cast<std::size_t>(pr.first)][step] -
              state.tracks[static_cast<std::size_t>(pr.second)][step];
    scale = std::max(scale, std::abs(diff[i]));
  }
  const double zero = 1e-12 * std::max(scale, 1.0);

  const auto first_change = [&](auto part, double& where) {
    int last_sign = 0;
    std::size_t last_index = 0;
    for (std::size_t i = 0; i < diff.size(); ++i) {
      const double v = part(diff[i]);
      if (std::abs(v) <= zero) continue;
      const int sign = v > 0.0 ? 1 : -1;
      if (last_sign != 0 && sign != last_sign) {
        const double a = part(diff[last_index]);
        const double ta = samples[last_index].real();
        const double tb = samples[i].real();
        where = ta + (tb - ta) * a / (a - v);
        return true;
      }
      last_sign = sign;
      last_index = i;
    }
    return false;
  };

  double t_energy = 0.0;
  double t_width = 0.0;
  report.energies_cross = first_change([](cplx z) { return z.real(); }, t_energy);
  report.widths_cross = first_change([](cplx z) { return z.imag(); }, t_width);
  report.crossing_parameter = report.energies_cross ? t_energy : t_width;
  if (state_out != nullptr) {
    *state_out = std::move(state);
  }
  return report;
}

} // namespace epchiral
