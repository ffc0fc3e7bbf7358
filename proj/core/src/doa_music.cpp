// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "rtbeam/doa_music.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rtbeam/beamform.hpp"
#include "rtbeam/error.hpp"
#include "rtbeam/linalg.hpp"

namespace rtbeam {

Eigen::VectorXd MusicSpectrum(const ComplexSpectrogram& x, const ArrayGeometry& geometry,
                              const MusicOptions& options) {
  const int M = x.num_channels();
  if (geometry.num_mics() != M) Fail(Errc::kShape, "geometry does not match channel count");
  if (options.num_sources < 1 || options.num_sources >= M) {
    Fail(Errc::kSubspace, "MUSIC needs 1 <= sources < M");
  }
  if (x.num_frames() < M) Fail(Errc::kSize, "MUSIC needs T >= M");
  if (!(options.grid_deg > 0.0)) Fail(Errc::kValue, "grid step must be positive");
  const int n_fft = x.n_fft();
  const int grid = std::max(1, static_cast<int>(std::lround(360.0 / options.grid_deg)));

  std::vector<int> band;
  for (int f = 1; f < x.num_bins(); ++f) {
    const double hz = static_cast<double>(f) * kSampleRate / n_fft;
    if (hz >= options.band_low_hz && hz <= options.band_high_hz) band.push_back(f);
  }
  if (band.empty()) Fail(Errc::kValue, "no frequency bins inside the MUSIC band");

  std::vector<Eigen::MatrixXcd> noise_subspace;
  noise_subspace.reserve(band.size());
  const auto scm = MixtureScm(x);
  for (int f : band) {
    const HermitianEigen eig = EigHermitian(scm[static_cast<std::size_t>(f)]);
    noise_subspace.push_back(eig.vectors.rightCols(M - options.num_sources));
  }

  Eigen::VectorXd spectrum = Eigen::VectorXd::Zero(grid);
  for (int i = 0; i < grid; ++i) {
    const double phi = 2.0 * std::numbers::pi * i / grid;
    const SteeringVector sv = SteeringFromDoa(phi, geometry, n_fft, 0);
    double acc = 0.0;
    for (std::size_t b = 0; b < band.size(); ++b) {
      const Eigen::VectorXcd a = sv.a.row(band[b]).transpose();
      const double proj = (noise_subspace[b].adjoint() * a).squaredNorm();
      acc += 1.0 / std::max(proj, 1e-12);
    }
    spectrum(i) = acc / static_cast<double>(band.size());
  }
  return spectrum;
}

std::vector<double> DoaMusic(const ComplexSpectrogram& x, const ArrayGeometry& geometry,
                             const MusicOptions& options) {
  const Eigen::VectorXd p = MusicSpectrum(x, geometry, options);
  const int grid = static_cast<int>(p.size());
  auto at = [&](int i) { return p(((i % grid) + grid) % grid); };

  std::vector<int> peaks;
  for (int i = 0; i < grid; ++i) {
    if (at(i) > at(i - 1) && at(i) >= at(i + 1)) peaks.push_back(i);
  }
  std::stable_sort(peaks.begin(), peaks.end(), [&](int a, int b) { return at(a) > at(b); });
  // A flat spectrum has no strict maxima; fall back to the global maximum.
  if (peaks.empty()) {
    Eigen::Index best = 0;
    p.maxCoeff(&best);
    peaks.push_back(static_cast<int>(best));
  }

  const double step = 2.0 * std::numbers::pi / grid;
  std::vector<double> out;
  for (int i : peaks) {
    if (static_cast<int>(out.size()) == options.num_sources) break;
    const double ym = at(i - 1), y0 = at(i), yp = at(i + 1);
    const double denom = ym - 2.0 * y0 + yp;
    double offset = 0.0;
    if (std::abs(denom) > 0.0) offset = std::clamp(0.5 * (ym - yp) / denom, -0.5, 0.5);
    out.push_back(WrapAngle((i + offset) * step));
  }
  return out;
}

}  // namespace rtbeam
