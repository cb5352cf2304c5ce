// SPDX-License-Identifier: Apache-2.0
#include "epchiral/random.hpp"

#include <cmath>

#include <Eigen/QR>

#include "epchiral/errors.hpp"

namespace epchiral {

std::uint64_t Rng::next_u64() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) {
    u1 = uniform();
  }
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 6.28318530717958647692 * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

RMatrix random_symmetric(int n, Rng& rng) {
  if (n < 1) {
    throw InvalidArgument("matrix dimension must be positive");
  }
  RMatrix a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      a(i, j) = rng.normal();
    }
  }
  return 0.5 * (a + a.transpose());
}

MatrixPencil demo_pencil(int n, std::uint64_t seed) {
  if (n < 2) {
    throw InvalidArgument("demo pencil needs n >= 2");
  }
  Rng rng(seed);
  RMatrix h0 = random_symmetric(n, rng);
  RMatrix h1 = random_symmetric(n, rng);
  return MatrixPencil(std::move(h0), std::move(h1));
}

RMatrix random_orthogonal(int n, Rng& rng) {
  RMatrix g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      g(i, j) = rng.normal();
    }
  }
  Eigen::HouseholderQR<RMatrix> qr(g);
  RMatrix q = qr.householderQ() * RMatrix::Identity(n, n);
  const RMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) {
      q.col(j) = -q.col(j);
    }
  }
  return q;
}

} // namespace epchiral
