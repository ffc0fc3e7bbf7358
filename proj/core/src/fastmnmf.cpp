// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "rtbeam/fastmnmf.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "binary_io.hpp"
#include "rtbeam/error.hpp"
#include "rtbeam/linalg.hpp"
#include "rtbeam/parallel.hpp"

namespace rtbeam {
namespace {

using Planes = std::vector<Eigen::MatrixXd>;  // M planes of F x T

// x_tilde_{ftm} = |(Q_f x_ft)_m|^2
Planes ProjectedPower(const ComplexSpectrogram& x, const FastMnmfModel& model) {
  const int F = x.num_bins(), T = x.num_frames(), M = x.num_channels();
  Planes out(static_cast<std::size_t>(M), Eigen::MatrixXd(F, T));
  for (int f = 0; f < F; ++f) {
    const Eigen::MatrixXcd y = model.Q[static_cast<std::size_t>(f)] * x.bin(f);
    for (int m = 0; m < M; ++m)
      for (int t = 0; t < T; ++t) out[static_cast<std::size_t>(m)](f, t) = std::norm(y(m, t));
  }
  return out;
}

// y_tilde_{ftm} = sum_n lambda_{nft} g_{nm}
Planes ModelPower(const std::vector<Eigen::MatrixXd>& lambda, const Eigen::MatrixXd& G) {
  const auto N = lambda.size();
  const auto M = static_cast<std::size_t>(G.cols());
  Planes out(M, Eigen::MatrixXd::Zero(lambda[0].rows(), lambda[0].cols()));
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t n = 0; n < N; ++n)
      out[m] += G(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) * lambda[n];
  return out;
}

std::vector<Eigen::MatrixXd> AllLambda(const FastMnmfModel& model) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(model.num_sources));
  for (int n = 0; n < model.num_sources; ++n) out.push_back(model.Lambda(n));
  return out;
}

void FloorInPlace(Eigen::MatrixXd& a) { a = a.cwiseMax(kMnmfFloor); }

void CheckShapes(const ComplexSpectrogram& x, const FastMnmfModel& model) {
  if (model.num_bins != x.num_bins() || model.num_frames != x.num_frames() ||
      model.num_channels != x.num_channels()) {
    Fail(Errc::kShape, "FastMNMF model does not match the spectrogram shape");
  }
}

double LogLikelihood(const Planes& xt, const Planes& yt, const FastMnmfModel& model) {
  const int F = model.num_bins, T = model.num_frames, M = model.num_channels;
  double acc = 0.0;
  for (int f = 0; f < F; ++f) {
    double row = 2.0 * T * LogAbsDet(model.Q[static_cast<std::size_t>(f)]);
    for (int m = 0; m < M; ++m) {
      const auto& x = xt[static_cast<std::size_t>(m)];
      const auto& y = yt[static_cast<std::size_t>(m)];
      for (int t = 0; t < T; ++t) row -= x(f, t) / y(f, t) + std::log(y(f, t));
    }
    acc += row;
  }
  return acc - static_cast<double>(F) * T * M * std::log(std::numbers::pi);
}

}  // namespace

FastMnmfModel FastMnmfInit(const ComplexSpectrogram& x, int num_sources, int num_bases,
                           std::uint64_t seed) {
  if (num_sources < 1 || num_bases < 1) Fail(Errc::kValue, "FastMNMF needs N >= 1 and K >= 1");
  FastMnmfModel model;
  model.num_sources = num_sources;
  model.num_bases = num_bases;
  model.num_bins = x.num_bins();
  model.num_frames = x.num_frames();
  model.num_channels = x.num_channels();
  const int M = model.num_channels;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.1, 1.0);
  for (int n = 0; n < num_sources; ++n) {
    Eigen::MatrixXd u(num_bases, model.num_bins);
    for (Eigen::Index i = 0; i < u.size(); ++i) u.data()[i] = uni(rng);
    model.U.push_back(std::move(u));
  }
  for (int n = 0; n < num_sources; ++n) {
    Eigen::MatrixXd v(num_bases, model.num_frames);
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = uni(rng);
    model.V.push_back(std::move(v));
  }
  model.Q.assign(static_cast<std::size_t>(model.num_bins), Eigen::MatrixXcd::Identity(M, M));
  model.G.resize(num_sources, M);
  for (int n = 0; n < num_sources; ++n) {
    for (int m = 0; m < M; ++m) model.G(n, m) = (m == n % M) ? 1.0 : 0.01;
    model.G.row(n) /= model.G.row(n).sum();
  }
  return model;
}

double FastMnmfLogLikelihood(const ComplexSpectrogram& x, const FastMnmfModel& model) {
  CheckShapes(x, model);
  return LogLikelihood(ProjectedPower(x, model), ModelPower(AllLambda(model), model.G), model);
}

FastMnmfModel FastMnmfFit(const ComplexSpectrogram& x, FastMnmfModel model, int sweeps,
                          std::vector<double>* trace) {
  CheckShapes(x, model);
  const int F = model.num_bins, T = model.num_frames, M = model.num_channels;
  const int N = model.num_sources, K = model.num_bases;
  if (sweeps > 0 && T < M) Fail(Errc::kSize, "FastMNMF needs T >= M");

  Planes xt = ProjectedPower(x, model);
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    auto lambda = AllLambda(model);
    Planes yt = ModelPower(lambda, model.G);

    // Auxiliary planes for the multiplicative updates of source n:
    // A = sum_m g_nm x~ / y~^2, B = sum_m g_nm / y~.
    auto aux = [&](int n, Eigen::MatrixXd& a, Eigen::MatrixXd& b) {
      a.setZero(F, T);
      b.setZero(F, T);
      for (int m = 0; m < M; ++m) {
        const auto& xm = xt[static_cast<std::size_t>(m)];
        const auto& ym = yt[static_cast<std::size_t>(m)];
        const double g = model.G(n, m);
        a.array() += g * xm.array() / ym.array().square();
        b.array() += g / ym.array();
      }
    };

    Eigen::MatrixXd a, b;
    for (int n = 0; n < N; ++n) {
      aux(n, a, b);
      auto& u = model.U[static_cast<std::size_t>(n)];
      const auto& v = model.V[static_cast<std::size_t>(n)];
      const Eigen::MatrixXd num = v * a.transpose();  // K x F
      const Eigen::MatrixXd den = v * b.transpose();
      u.array() *= (num.array() / den.array()).sqrt();
      FloorInPlace(u);
    }
    lambda = AllLambda(model);
    yt = ModelPower(lambda, model.G);

    for (int n = 0; n < N; ++n) {
      aux(n, a, b);
      const auto& u = model.U[static_cast<std::size_t>(n)];
      auto& v = model.V[static_cast<std::size_t>(n)];
      const Eigen::MatrixXd num = u * a;  // K x T
      const Eigen::MatrixXd den = u * b;
      v.array() *= (num.array() / den.array()).sqrt();
      FloorInPlace(v);
    }
    lambda = AllLambda(model);
    yt = ModelPower(lambda, model.G);

    Eigen::MatrixXd g_new = model.G;
    for (int n = 0; n < N; ++n) {
      for (int m = 0; m < M; ++m) {
        const auto& xm = xt[static_cast<std::size_t>(m)];
        const auto& ym = yt[static_cast<std::size_t>(m)];
        const double num = (lambda[static_cast<std::size_t>(n)].array() * xm.array() / ym.array().square()).sum();
        const double den = (lambda[static_cast<std::size_t>(n)].array() / ym.array()).sum();
        g_new(n, m) = std::max(model.G(n, m) * std::sqrt(num / den), kMnmfFloor);
      }
    }
    model.G = g_new;
    yt = ModelPower(lambda, model.G);

    // Iterative projection, one row of Q_f at a time.
    ParallelFor(static_cast<std::size_t>(F), [&](std::size_t fi) {
      const int f = static_cast<int>(fi);
      const auto bin = x.bin(f);
      Eigen::MatrixXcd& q = model.Q[fi];
      for (int m = 0; m < M; ++m) {
        Eigen::MatrixXcd weighted = bin;
        for (int t = 0; t < T; ++t) weighted.col(t) /= yt[static_cast<std::size_t>(m)](f, t);
        const Eigen::MatrixXcd phi = (weighted * bin.adjoint()) / static_cast<double>(T);
        const Eigen::MatrixXcd qp = q * phi;
        Eigen::VectorXcd e = Eigen::VectorXcd::Zero(M);
        e(m) = 1.0;
        Eigen::VectorXcd row = SolveGeneral(qp, e);
        const double norm = std::sqrt(std::max(row.dot(phi * row).real(), 1e-300));
        row /= norm;
        q.row(m) = row.adjoint();
      }
    });

    // Scale normalization; every step leaves the likelihood unchanged.
    for (int f = 0; f < F; ++f) {
      auto& q = model.Q[static_cast<std::size_t>(f)];
      const double phi = (q * q.adjoint()).trace().real() / M;
      q /= std::sqrt(phi);
      for (int n = 0; n < N; ++n) model.U[static_cast<std::size_t>(n)].col(f) /= phi;
    }
    for (int n = 0; n < N; ++n) {
      const double mu = model.G.row(n).sum();
      model.G.row(n) /= mu;
      model.U[static_cast<std::size_t>(n)] *= mu;
    }
    for (int n = 0; n < N; ++n) {
      auto& u = model.U[static_cast<std::size_t>(n)];
      auto& v = model.V[static_cast<std::size_t>(n)];
      for (int k = 0; k < K; ++k) {
        const double nu = u.row(k).sum();
        u.row(k) /= nu;
        v.row(k) *= nu;
      }
      FloorInPlace(u);
      FloorInPlace(v);
    }
    model.G = model.G.cwiseMax(kMnmfFloor);

    xt = ProjectedPower(x, model);
    if (trace != nullptr || sweep + 1 == sweeps) {
      const double ll = LogLikelihood(xt, ModelPower(AllLambda(model), model.G), model);
      if (!std::isfinite(ll)) Fail(Errc::kDivergence, "FastMNMF likelihood is not finite");
      if (trace != nullptr) trace->push_back(ll);
    }
  }
  return model;
}

std::vector<ComplexSpectrogram> FastMnmfSourceImages(const ComplexSpectrogram& x,
                                                     const FastMnmfModel& model) {
  CheckShapes(x, model);
  const int F = model.num_bins, T = model.num_frames, M = model.num_channels;
  const int N = model.num_sources;
  const auto lambda = AllLambda(model);
  std::vector<ComplexSpectrogram> out(static_cast<std::size_t>(N),
                                      ComplexSpectrogram(F, T, M, x.n_fft(), x.hop()));
  for (int f = 0; f < F; ++f) {
    const Eigen::MatrixXcd& q = model.Q[static_cast<std::size_t>(f)];
    const Eigen::MatrixXcd q_inv = SolveGeneral(q, Eigen::MatrixXcd::Identity(M, M));
    const Eigen::MatrixXcd y = q * x.bin(f);
    for (int t = 0; t < T; ++t) {
      Eigen::VectorXd total = Eigen::VectorXd::Zero(M);
      for (int n = 0; n < N; ++n)
        total += lambda[static_cast<std::size_t>(n)](f, t) * model.G.row(n).transpose();
      for (int n = 0; n < N; ++n) {
        const Eigen::VectorXd ratio =
            (lambda[static_cast<std::size_t>(n)](f, t) * model.G.row(n).transpose()).cwiseQuotient(total);
        out[static_cast<std::size_t>(n)].frame(f, t) = q_inv * ratio.cast<cdouble>().cwiseProduct(y.col(t));
      }
    }
  }
  return out;
}

std::vector<ComplexSpectrogram> FastMnmfSeparate(const ComplexSpectrogram& x,
                                                 const FastMnmfModel& model, int ref) {
  if (ref < 0 || ref >= x.num_channels()) Fail(Errc::kValue, "reference channel out of range");
  const auto images = FastMnmfSourceImages(x, model);
  std::vector<ComplexSpectrogram> out;
  out.reserve(images.size());
  for (const auto& img : images) out.push_back(img.Channel(ref));
  return out;
}

// Layout (little-endian): "RTBMNMF1", u32 version, u32 N, K, F, T, M,
// U (N*K*F f64, n-major then k then f), V (N*K*T f64), G (N*M f64),
// Q (F*M*M pairs of f64 re/im, row-major per frequency).
void SaveFastMnmfModel(const FastMnmfModel& model, const std::filesystem::path& path) {
  detail::BinaryWriter w;
  w.Bytes("RTBMNMF1", 8);
  w.U32(1);
  for (int v : {model.num_sources, model.num_bases, model.num_bins, model.num_frames,
                model.num_channels}) {
    w.U32(static_cast<std::uint32_t>(v));
  }
  for (const auto& u : model.U)
    for (int k = 0; k < model.num_bases; ++k)
      for (int f = 0; f < model.num_bins; ++f) w.F64(u(k, f));
  for (const auto& v : model.V)
    for (int k = 0; k < model.num_bases; ++k)
      for (int t = 0; t < model.num_frames; ++t) w.F64(v(k, t));
  for (int n = 0; n < model.num_sources; ++n)
    for (int m = 0; m < model.num_channels; ++m) w.F64(model.G(n, m));
  for (const auto& q : model.Q)
    for (int i = 0; i < model.num_channels; ++i)
      for (int j = 0; j < model.num_channels; ++j) {
        w.F64(q(i, j).real());
        w.F64(q(i, j).imag());
      }
  w.Save(path);
}

FastMnmfModel LoadFastMnmfModel(const std::filesystem::path& path) {
  detail::BinaryReader r(path);
  r.Expect("RTBMNMF1", 8);
  if (r.U32() != 1) Fail(Errc::kFormat, path.string() + ": unsupported model version");
  FastMnmfModel model;
  model.num_sources = static_cast<int>(r.U32());
  model.num_bases = static_cast<int>(r.U32());
  model.num_bins = static_cast<int>(r.U32());
  model.num_frames = static_cast<int>(r.U32());
  model.num_channels = static_cast<int>(r.U32());
  const int N = model.num_sources, K = model.num_bases, F = model.num_bins;
  const int T = model.num_frames, M = model.num_channels;
  if (N < 1 || K < 1 || F < 1 || T < 1 || M < 1 || N > 4096 || K > 4096 || M > 64) {
    Fail(Errc::kFormat, path.string() + ": implausible model dimensions");
  }
  for (int n = 0; n < N; ++n) {
    Eigen::MatrixXd u(K, F);
    for (int k = 0; k < K; ++k)
      for (int f = 0; f < F; ++f) u(k, f) = r.F64();
    model.U.push_back(std::move(u));
  }
  for (int n = 0; n < N; ++n) {
    Eigen::MatrixXd v(K, T);
    for (int k = 0; k < K; ++k)
      for (int t = 0; t < T; ++t) v(k, t) = r.F64();
    model.V.push_back(std::move(v));
  }
  model.G.resize(N, M);
  for (int n = 0; n < N; ++n)
    for (int m = 0; m < M; ++m) model.G(n, m) = r.F64();
  for (int f = 0; f < F; ++f) {
    Eigen::MatrixXcd q(M, M);
    for (int i = 0; i < M; ++i)
      for (int j = 0; j < M; ++j) {
        const double re = r.F64();
        q(i, j) = {re, r.F64()};
      }
    model.Q.push_back(std::move(q));
  }
  r.ExpectEnd();
  return model;
}

}  // namespace rtbeam
