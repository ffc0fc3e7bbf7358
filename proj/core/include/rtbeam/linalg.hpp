// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include "rtbeam/types.hpp"

namespace rtbeam {

// Relative diagonal loading used by the beamformers and WPE:
// A + kDefaultLoading * tr(A) / D * I.
inline constexpr double kDefaultLoading = 1e-6;

// Square complex matrix with exact Hermitian symmetry, enforced on
// construction by A <- (A + A^H) / 2.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(const Eigen::MatrixXcd& a);

  const Eigen::MatrixXcd& matrix() const { return a_; }
  Eigen::Index dim() const { return a_.rows(); }
  double trace() const { return a_.diagonal().real().sum(); }

 private:
  Eigen::MatrixXcd a_;
};

// Cholesky factor of A + loading * tr(A)/D * I. Throws Errc::kValue on
// non-finite input and Errc::kSingular if a pivot is not positive.
class HermitianCholesky {
 public:
  HermitianCholesky() = default;
  explicit HermitianCholesky(const HermitianMatrix& a,
                             double relative_loading = 0.0);

  Eigen::MatrixXcd Solve(const Eigen::MatrixXcd& b) const;
  Eigen::VectorXcd Solve(const Eigen::VectorXcd& b) const;
  // 2 * sum log diag(L)
  double LogDet() const;
  // Absolute value actually added to the diagonal.
  double loading() const { return loading_; }
  const Eigen::MatrixXcd& lower() const { return l_; }

 private:
  Eigen::MatrixXcd l_;
  double loading_ = 0.0;
};

Eigen::MatrixXcd SolveHermitian(const HermitianMatrix& a,
                                const Eigen::MatrixXcd& b,
                                double relative_loading = 0.0);

double LogDetHermitian(const HermitianMatrix& a, double relative_loading = 0.0);

struct HermitianEigen {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXcd vectors; // column i pairs with values(i)
};

// Cyclic Jacobi eigendecomposition. Throws Errc::kConvergence if the
// off-diagonal mass does not vanish within the sweep cap.
HermitianEigen EigHermitian(const HermitianMatrix& a, int max_sweeps = 100);

// General square solve and log|det| via partial-pivot LU.
Eigen::MatrixXcd SolveGeneral(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);
double LogAbsDet(const Eigen::MatrixXcd& a);

}  // namespace rtbeam
