// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "rtbeam/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/LU>

#include "rtbeam/error.hpp"

namespace rtbeam {

HermitianMatrix::HermitianMatrix(const Eigen::MatrixXcd& a) {
  if (a.rows() != a.cols() || a.rows() < 1) {
    Fail(Errc::kShape, "Hermitian matrix must be square and non-empty");
  }
  a_ = 0.5 * (a + a.adjoint());
  for (Eigen::Index i = 0; i < a_.rows(); ++i) a_(i, i).imag(0.0);
}

HermitianCholesky::HermitianCholesky(const HermitianMatrix& a,
                                     double relative_loading) {
  const Eigen::MatrixXcd& m = a.matrix();
  if (!m.allFinite()) Fail(Errc::kValue, "non-finite matrix entry");
  const Eigen::Index d = m.rows();
  loading_ = relative_loading * a.trace() / static_cast<double>(d);

  l_ = Eigen::MatrixXcd::Zero(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    double pivot = m(j, j).real() + loading_;
    for (Eigen::Index k = 0; k < j; ++k) pivot -= std::norm(l_(j, k));
    if (!(pivot > 0.0)) {
      Fail(Errc::kSingular, "matrix is not positive definite after loading (pivot " +
                                std::to_string(j) + ")");
    }
    const double ljj = std::sqrt(pivot);
    l_(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < d; ++i) {
      cdouble s = m(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l_(i, k) * std::conj(l_(j, k));
      l_(i, j) = s / ljj;
    }
  }
}

Eigen::MatrixXcd HermitianCholesky::Solve(const Eigen::MatrixXcd& b) const {
  if (b.rows() != l_.rows()) Fail(Errc::kShape, "right-hand side row mismatch");
  const Eigen::Index d = l_.rows();
  Eigen::MatrixXcd x = b;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    // L y = b
    for (Eigen::Index i = 0; i < d; ++i) {
      cdouble s = x(i, c);
      for (Eigen::Index k = 0; k < i; ++k) s -= l_(i, k) * x(k, c);
      x(i, c) = s / l_(i, i).real();
    }
    // L^H x = y
    for (Eigen::Index i = d - 1; i >= 0; --i) {
      cdouble s = x(i, c);
      for (Eigen::Index k = i + 1; k < d; ++k) s -= std::conj(l_(k, i)) * x(k, c);
      x(i, c) = s / l_(i, i).real();
    }
  }
  return x;
}

Eigen::VectorXcd HermitianCholesky::Solve(const Eigen::VectorXcd& b) const {
  return Solve(Eigen::MatrixXcd(b)).col(0);
}

double HermitianCholesky::LogDet() const {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < l_.rows(); ++i) acc += std::log(l_(i, i).real());
  return 2.0 * acc;
}

Eigen::MatrixXcd SolveHermitian(const HermitianMatrix& a, const Eigen::MatrixXcd& b,
                                double relative_loading) {
  if (!b.allFinite()) Fail(Errc::kValue, "non-finite right-hand side");
  return HermitianCholesky(a, relative_loading).Solve(b);
}

double LogDetHermitian(const HermitianMatrix& a, double relative_loading) {
  return HermitianCholesky(a, relative_loading).LogDet();
}

HermitianEigen EigHermitian(const HermitianMatrix& a, int max_sweeps) {
  Eigen::MatrixXcd m = a.matrix();
  if (!m.allFinite()) Fail(Errc::kValue, "non-finite matrix entry");
  const Eigen::Index d = m.rows();
  Eigen::MatrixXcd v = Eigen::MatrixXcd::Identity(d, d);

  const double scale = std::max(m.norm(), 1e-300);
  auto off_norm = [&] {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j)
        if (i != j) acc += std::norm(m(i, j));
    return std::sqrt(acc);
  };

  bool converged = off_norm() <= 1e-15 * scale;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    for (Eigen::Index p = 0; p < d - 1; ++p) {
      for (Eigen::Index q = p + 1; q < d; ++q) {
        const double apq_abs = std::abs(m(p, q));
        if (apq_abs <= 1e-300) continue;
        const cdouble e = m(p, q) / apq_abs;
        const double app = m(p, p).real();
        const double aqq = m(q, q).real();
        const double tau = (aqq - app) / (2.0 * apq_abs);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // G = diag(1, conj(e)) * [[c, s], [-s, c]] acting on columns p, q.
        const cdouble gpp = c, gpq = s;
        const cdouble gqp = -s * std::conj(e), gqq = c * std::conj(e);
        for (Eigen::Index k = 0; k < d; ++k) {
          const cdouble akp = m(k, p), akq = m(k, q);
          m(k, p) = akp * gpp + akq * gqp;
          m(k, q) = akp * gpq + akq * gqq;
        }
        for (Eigen::Index k = 0; k < d; ++k) {
          const cdouble apk = m(p, k), aqk = m(q, k);
          m(p, k) = std::conj(gpp) * apk + std::conj(gqp) * aqk;
          m(q, k) = std::conj(gpq) * apk + std::conj(gqq) * aqk;
        }
        m(p, q) = 0.0;
        m(q, p) = 0.0;
        m(p, p).imag(0.0);
        m(q, q).imag(0.0);
        for (Eigen::Index k = 0; k < d; ++k) {
          const cdouble vkp = v(k, p), vkq = v(k, q);
          v(k, p) = vkp * gpp + vkq * gqp;
          v(k, q) = vkp * gpq + vkq * gqq;
        }
      }
    }
    converged = off_norm() <= 1e-15 * scale;
  }
  if (!converged) Fail(Errc::kConvergence, "Jacobi eigensolver did not converge");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return m(i, i).real() > m(j, j).real();
  });
  HermitianEigen out;
  out.values.resize(d);
  out.vectors.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    out.values(i) = m(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]).real();
    out.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

Eigen::MatrixXcd SolveGeneral(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  if (a.rows() != a.cols() || b.rows() != a.rows()) Fail(Errc::kShape, "solve shape mismatch");
  if (!a.allFinite() || !b.allFinite()) Fail(Errc::kValue, "non-finite entry");
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
  const Eigen::MatrixXcd& f = lu.matrixLU();
  double max_pivot = 0.0, min_pivot = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    max_pivot = std::max(max_pivot, std::abs(f(i, i)));
    min_pivot = std::min(min_pivot, std::abs(f(i, i)));
  }
  if (!(min_pivot > 1e-14 * max_pivot)) Fail(Errc::kSingular, "matrix is numerically singular");
  return lu.solve(b);
}

double LogAbsDet(const Eigen::MatrixXcd& a) {
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) acc += std::log(std::abs(lu.matrixLU()(i, i)));
  return acc;
}

}  // namespace rtbeam
