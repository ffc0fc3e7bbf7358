// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <vector>

#include "rtbeam/geometry.hpp"
#include "rtbeam/types.hpp"

namespace rtbeam {

struct MusicOptions {
  int num_sources = 1;
  double grid_deg = 1.0;
  double band_low_hz = 300.0;
  double band_high_hz = 3400.0;
};

// Band-averaged MUSIC pseudo-spectrum on the azimuth grid
// phi_i = i * grid_deg, i = 0 .. 360/grid_deg - 1.
Eigen::VectorXd MusicSpectrum(const ComplexSpectrogram& x, const ArrayGeometry& geometry,
                              const MusicOptions& options);

// Azimuths in [0, 2 pi) of the num_sources strongest peaks, strongest
// first, each refined by parabolic interpolation. Throws Errc::kSubspace if
// num_sources >= M.
std::vector<double> DoaMusic(const ComplexSpectrogram& x, const ArrayGeometry& geometry,
                             const MusicOptions& options);

}  // namespace rtbeam
