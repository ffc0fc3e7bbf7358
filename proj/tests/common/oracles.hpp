// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Slow reference implementations used to check the closed forms.

#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "rtbeam/fastmnmf.hpp"
#include "rtbeam/types.hpp"

namespace rtbeam::testing {

// argmin_w w^H K w subject to w^H a = 1, by projected gradient descent.
inline Eigen::VectorXcd ConstrainedMinPowerOracle(const Eigen::MatrixXcd& K, const Eigen::VectorXcd& a,
                                                  int max_iters = 2000000) {
  const double a2 = a.squaredNorm();
  auto project = [&](const Eigen::VectorXcd& v) {
    // Closest point with a^H v = 1.
    return Eigen::VectorXcd(v + a * ((1.0 - a.dot(v)) / a2));
  };
  const double lmax = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(K).eigenvalues().maxCoeff();
  const double step = 1.0 / lmax;
  Eigen::VectorXcd w = project(Eigen::VectorXcd::Zero(a.size()));
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::VectorXcd next = project(w - step * (K * w));
    const double change = (next - w).norm();
    w = next;
    if (change < 1e-15 * w.norm()) break;
  }
  return w;
}

// Mixture log-likelihood from the dense per-bin covariance
// Y_ft = sum_n lambda_nft Q_f^-1 diag(g_n) Q_f^-H.
inline double DenseLogLikelihood(const ComplexSpectrogram& x, const FastMnmfModel& m) {
  double ll = 0.0;
  const int M = x.num_channels();
  for (int f = 0; f < x.num_bins(); ++f) {
    const Eigen::MatrixXcd qinv = m.Q[static_cast<std::size_t>(f)].inverse();
    for (int t = 0; t < x.num_frames(); ++t) {
      Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(M, M);
      for (int n = 0; n < m.num_sources; ++n) {
        const double lam = m.Lambda(n)(f, t);
        Eigen::VectorXcd g = m.G.row(n).transpose().cast<cdouble>();
        y += lam * qinv * g.asDiagonal() * qinv.adjoint();
      }
      const Eigen::VectorXcd xv = x.frame(f, t);
      const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(y);
      const double logdet = std::log(std::abs(lu.determinant()));
      const double quad = xv.dot(lu.solve(xv)).real();
      ll += -M * std::log(std::numbers::pi) - logdet - quad;
    }
  }
  return ll;
}

}  // namespace rtbeam::testing
