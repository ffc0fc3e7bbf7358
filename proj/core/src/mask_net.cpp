// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "rtbeam/mask_net.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "binary_io.hpp"
#include "rtbeam/beamform.hpp"
#include "rtbeam/error.hpp"

namespace rtbeam {
namespace {

constexpr double kLogFloor = 1e-8;
// Keeps the mask strictly inside (0, 1) even for saturated logits.
constexpr double kMaskEdge = 1e-12;

// Wraps to [0, 2 pi) and snaps to a 2^-36 rad grid so that doa and
// doa + 2 pi k condition the network identically.
double CanonicalAngle(double doa) {
  constexpr double kGrid = 68719476736.0;  // 2^36
  const double q = std::round(WrapAngle(doa) * kGrid) / kGrid;
  return q >= 2.0 * std::numbers::pi ? 0.0 : q;
}

using MapM = Eigen::Map<const Eigen::MatrixXd>;
using MapV = Eigen::Map<const Eigen::VectorXd>;

}  // namespace

int FeatureDim(int num_channels) { return num_channels + 2 * (num_channels - 1) + 1; }

Features ExtractFeatures(const ComplexSpectrogram& x, double doa, const ArrayGeometry& geometry) {
  const int F = x.num_bins(), T = x.num_frames(), M = x.num_channels();
  if (M < 2) Fail(Errc::kShape, "features need at least two channels");
  if (geometry.num_mics() != M) Fail(Errc::kShape, "geometry does not match channel count");
  const SteeringVector sv = SteeringFromDoa(doa, geometry, x.n_fft(), 0);
  Features out;
  out.num_bins = F;
  out.num_frames = T;
  out.data.resize(FeatureDim(M), static_cast<Eigen::Index>(F) * T);
  for (int f = 0; f < F; ++f) {
    for (int t = 0; t < T; ++t) {
      const auto xf = x.frame(f, t);
      const Eigen::Index col = static_cast<Eigen::Index>(f) * T + t;
      int p = 0;
      for (int m = 0; m < M; ++m) out.data(p++, col) = std::log(std::abs(xf(m)) + kLogFloor);
      const double ph0 = std::arg(xf(0));
      for (int m = 1; m < M; ++m) {
        const double d = std::arg(xf(m)) - ph0;
        out.data(p++, col) = std::cos(d);
        out.data(p++, col) = std::sin(d);
      }
      cdouble dsb = 0.0;
      for (int m = 0; m < M; ++m) {
        const cdouble a = sv.a(f, m);
        dsb += xf(m) * std::conj(a) / std::abs(a);
      }
      dsb /= static_cast<double>(M);
      out.data(p, col) = std::log(std::abs(dsb) + kLogFloor);
    }
  }
  return out;
}

MaskNetParams::MaskNetParams(int num_channels, int hidden, int context)
    : num_channels_(num_channels), hidden_(hidden), context_(context) {
  if (num_channels < 2 || hidden < 1 || context < 0) Fail(Errc::kValue, "invalid mask network shape");
  theta = Eigen::VectorXd::Zero(layout().total);
}

MaskNetParams::Layout MaskNetParams::layout() const {
  const Eigen::Index H = hidden_, In = input_dim();
  Layout l{};
  Eigen::Index o = 0;
  l.w1 = o; o += H * In;
  l.b1 = o; o += H;
  l.w2 = o; o += H * H;
  l.b2 = o; o += H;
  l.w3 = o; o += H;
  l.b3 = o; o += 1;
  l.wa = o; o += H * 2;
  l.ba = o; o += H;
  l.wg = o; o += H * H;
  l.bg = o; o += H;
  l.wb = o; o += H * H;
  l.bb = o; o += H;
  l.total = o;
  return l;
}

MaskNetParams InitMaskNet(int num_channels, int hidden, int context, std::uint64_t seed) {
  MaskNetParams p(num_channels, hidden, context);
  const auto l = p.layout();
  std::mt19937_64 rng(seed);
  auto fill = [&](Eigen::Index begin, Eigen::Index count, double fan_in) {
    const double bound = 1.0 / std::sqrt(fan_in);
    std::uniform_real_distribution<double> uni(-bound, bound);
    for (Eigen::Index i = 0; i < count; ++i) p.theta(begin + i) = uni(rng);
  };
  const double H = hidden, In = p.input_dim();
  fill(l.w1, l.b1 - l.w1, In);
  fill(l.b1, l.w2 - l.b1, In);
  fill(l.w2, l.b2 - l.w2, H);
  fill(l.b2, l.w3 - l.b2, H);
  fill(l.w3, l.b3 - l.w3, H);
  fill(l.b3, l.wa - l.b3, H);
  fill(l.wa, l.ba - l.wa, 2.0);
  fill(l.ba, l.wg - l.ba, 2.0);
  fill(l.wg, l.bg - l.wg, H);
  fill(l.bg, l.wb - l.bg, H);
  fill(l.wb, l.bb - l.wb, H);
  fill(l.bb, l.total - l.bb, H);
  return p;
}

Mask MaskNetForward(const MaskNetParams& params, const Features& features, double doa,
                    MaskNetCache* cache) {
  const int F = features.num_bins, T = features.num_frames;
  const int P = features.dim();
  const int C = params.context();
  const int H = params.hidden();
  if (P != FeatureDim(params.num_channels())) Fail(Errc::kShape, "feature size does not match the network");
  const auto l = params.layout();
  const double* th = params.theta.data();
  const MapM w1(th + l.w1, H, params.input_dim());
  const MapV b1(th + l.b1, H);
  const MapM w2(th + l.w2, H, H);
  const MapV b2(th + l.b2, H);
  const Eigen::Map<const Eigen::RowVectorXd> w3(th + l.w3, H);
  const double b3 = th[l.b3];
  const MapM wa(th + l.wa, H, 2);
  const MapV ba(th + l.ba, H);
  const MapM wg(th + l.wg, H, H);
  const MapV bg(th + l.bg, H);
  const MapM wb(th + l.wb, H, H);
  const MapV bb(th + l.bb, H);

  MaskNetCache local;
  MaskNetCache& c = cache ? *cache : local;
  const Eigen::Index n = static_cast<Eigen::Index>(F) * T;

  c.z.setZero(static_cast<Eigen::Index>(P) * (2 * C + 1), n);
  for (int f = 0; f < F; ++f) {
    for (int t = 0; t < T; ++t) {
      const Eigen::Index col = static_cast<Eigen::Index>(f) * T + t;
      for (int k = -C; k <= C; ++k) {
        const int src = t + k;
        if (src < 0 || src >= T) continue;
        c.z.block(static_cast<Eigen::Index>(k + C) * P, col, P, 1) =
            features.data.col(static_cast<Eigen::Index>(f) * T + src);
      }
    }
  }

  const double angle = CanonicalAngle(doa);
  c.direction = {std::cos(angle), std::sin(angle)};
  c.e = (wa * c.direction + ba).array().tanh();
  c.gamma = Eigen::VectorXd::Ones(H) + wg * c.e + bg;
  c.beta = wb * c.e + bb;

  c.h1.noalias() = w1 * c.z;
  c.h1.colwise() += b1;
  c.h1 = c.h1.array().tanh();
  c.h1c = (c.h1.array().colwise() * c.gamma.array()).colwise() + c.beta.array();
  c.h2.noalias() = w2 * c.h1c;
  c.h2.colwise() += b2;
  c.h2 = c.h2.array().tanh();
  c.out = ((w3 * c.h2).array() + b3).matrix();
  c.out = (1.0 / (1.0 + (-c.out.array()).exp())).cwiseMax(kMaskEdge).cwiseMin(1.0 - kMaskEdge).matrix();

  Mask mask;
  mask.values.resize(F, T);
  for (int f = 0; f < F; ++f)
    for (int t = 0; t < T; ++t) mask.values(f, t) = c.out(static_cast<Eigen::Index>(f) * T + t);
  return mask;
}

void MaskNetBackward(const MaskNetParams& params, const MaskNetCache& c,
                     const Eigen::MatrixXd& grad_mask, Eigen::VectorXd& grad) {
  const int F = static_cast<int>(grad_mask.rows());
  const int T = static_cast<int>(grad_mask.cols());
  const int H = params.hidden();
  const auto l = params.layout();
  if (grad.size() != params.size()) grad = Eigen::VectorXd::Zero(params.size());
  const double* th = params.theta.data();
  const MapM w2(th + l.w2, H, H);
  const Eigen::Map<const Eigen::RowVectorXd> w3(th + l.w3, H);
  const MapM wg(th + l.wg, H, H);
  const MapM wb(th + l.wb, H, H);
  double* g = grad.data();

  const Eigen::Index n = static_cast<Eigen::Index>(F) * T;
  Eigen::RowVectorXd g_out(n);
  for (int f = 0; f < F; ++f)
    for (int t = 0; t < T; ++t) {
      const Eigen::Index col = static_cast<Eigen::Index>(f) * T + t;
      const double s = c.out(col);
      g_out(col) = grad_mask(f, t) * s * (1.0 - s);
    }

  Eigen::Map<Eigen::RowVectorXd>(g + l.w3, H) += g_out * c.h2.transpose();
  g[l.b3] += g_out.sum();

  Eigen::MatrixXd g_a2 = w3.transpose() * g_out;
  g_a2.array() *= 1.0 - c.h2.array().square();
  Eigen::Map<Eigen::MatrixXd>(g + l.w2, H, H).noalias() += g_a2 * c.h1c.transpose();
  Eigen::Map<Eigen::VectorXd>(g + l.b2, H) += g_a2.rowwise().sum();

  Eigen::MatrixXd g_h1c = w2.transpose() * g_a2;
  const Eigen::VectorXd g_gamma = (g_h1c.array() * c.h1.array()).rowwise().sum();
  const Eigen::VectorXd g_beta = g_h1c.rowwise().sum();

  Eigen::MatrixXd g_a1 = g_h1c.array().colwise() * c.gamma.array();
  g_a1.array() *= 1.0 - c.h1.array().square();
  Eigen::Map<Eigen::MatrixXd>(g + l.w1, H, params.input_dim()).noalias() += g_a1 * c.z.transpose();
  Eigen::Map<Eigen::VectorXd>(g + l.b1, H) += g_a1.rowwise().sum();

  Eigen::Map<Eigen::MatrixXd>(g + l.wg, H, H) += g_gamma * c.e.transpose();
  Eigen::Map<Eigen::VectorXd>(g + l.bg, H) += g_gamma;
  Eigen::Map<Eigen::MatrixXd>(g + l.wb, H, H) += g_beta * c.e.transpose();
  Eigen::Map<Eigen::VectorXd>(g + l.bb, H) += g_beta;
  Eigen::VectorXd g_e = wg.transpose() * g_gamma + wb.transpose() * g_beta;
  g_e.array() *= 1.0 - c.e.array().square();
  Eigen::Map<Eigen::MatrixXd>(g + l.wa, H, 2) += g_e * c.direction.transpose();
  Eigen::Map<Eigen::VectorXd>(g + l.ba, H) += g_e;
}

void SaveMaskNet(const MaskNetParams& params, const std::filesystem::path& path) {
  detail::BinaryWriter w;
  w.Bytes("RTBMASK1", 8);
  w.U32(1);
  w.U32(static_cast<std::uint32_t>(params.num_channels()));
  w.U32(static_cast<std::uint32_t>(params.hidden()));
  w.U32(static_cast<std::uint32_t>(params.context()));
  w.U32(static_cast<std::uint32_t>(params.size()));
  for (Eigen::Index i = 0; i < params.size(); ++i) w.F64(params.theta(i));
  w.Save(path);
}

MaskNetParams LoadMaskNet(const std::filesystem::path& path) {
  detail::BinaryReader r(path);
  r.Expect("RTBMASK1", 8);
  if (r.U32() != 1) Fail(Errc::kFormat, path.string() + ": unsupported mask network version");
  const int M = static_cast<int>(r.U32());
  const int H = static_cast<int>(r.U32());
  const int C = static_cast<int>(r.U32());
  const auto count = static_cast<Eigen::Index>(r.U32());
  if (M < 2 || M > 64 || H < 1 || H > 4096 || C < 0 || C > 64) {
    Fail(Errc::kFormat, path.string() + ": implausible network shape");
  }
  MaskNetParams p(M, H, C);
  if (count != p.size()) Fail(Errc::kFormat, path.string() + ": parameter count mismatch");
  for (Eigen::Index i = 0; i < count; ++i) p.theta(i) = r.F64();
  r.ExpectEnd();
  return p;
}

}  // namespace rtbeam
