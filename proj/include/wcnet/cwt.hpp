/*
 * Copyright 2026 wcnet authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "wcnet/common.hpp"
#include "wcnet/fft.hpp"
#include "wcnet/matrix.hpp"

namespace wcnet {

/// Complex Morlet wavelet pi^{-1/4} e^{i w0 t} e^{-t^2/2}. The center
/// frequency w0 = 6 balances time and frequency localization; its Fourier
/// period is scale * 4 pi / (w0 + sqrt(2 + w0^2)) ~ 1.033 * scale.
struct MorletParams {
    double omega0 = 6.0;

    double fourier_factor() const {
        return 4.0 * std::numbers::pi / (omega0 + std::sqrt(2.0 + omega0 * omega0));
    }
};

/// Dyadic scale grid s_j = s0 * 2^(j / voices), j = 0 .. num_scales-1.
/// Log-scales k_j = log2(s_j) are equally spaced with step 1/voices, which is
/// the natural integration variable for band averages.
struct ScaleGrid {
    double s0 = 0.0;
    int voices_per_octave = 0;
    double dt = 1.0;
    std::vector<double> scales;
    std::vector<double> log_scales;

    std::size_t num_scales() const { return scales.size(); }
    double log_step() const { return 1.0 / static_cast<double>(voices_per_octave); }
};

inline ScaleGrid make_scale_grid(std::size_t n, double dt, int voices, double s0, double s_max) {
    if (n < 2) throw ConfigError("scale grid needs a series of length >= 2");
    if (dt <= 0.0) throw ConfigError("sampling interval must be positive");
    if (voices < 1) throw ConfigError("voices_per_octave must be >= 1");
    if (s0 < 2.0 * dt) throw ConfigError("smallest scale must be >= 2*dt (Nyquist)");
    if (s_max > static_cast<double>(n) * dt / 2.0)
        throw ConfigError("largest scale exceeds n*dt/2");
    if (s_max < s0) throw ConfigError("empty scale grid: s_max < s0");

    ScaleGrid grid;
    grid.s0 = s0;
    grid.voices_per_octave = voices;
    grid.dt = dt;
    const std::size_t count =
        static_cast<std::size_t>(std::floor(voices * std::log2(s_max / s0) + 1e-9)) + 1;
    grid.scales.reserve(count);
    grid.log_scales.reserve(count);
    for (std::size_t j = 0; j < count; ++j) {
        const double k = std::log2(s0) + static_cast<double>(j) / voices;
        grid.log_scales.push_back(k);
        grid.scales.push_back(std::exp2(k));
    }
    return grid;
}

/// Default grid for a series of length n: s0 = 2dt, s_max = n*dt/5,
/// 12 voices per octave. Covers the 2-5 / 5-22 / >22 day bands with smooth
/// log-scale resolution for any panel longer than a few months. The n/5 cap
/// keeps at least a handful of e-folding-independent samples at the largest
/// scale; beyond it the coherence of pure noise rises steeply and the long
/// band loses its meaning.
inline ScaleGrid default_scale_grid(std::size_t n, double dt, int voices = 12) {
    return make_scale_grid(n, dt, voices, 2.0 * dt, static_cast<double>(n) * dt / 5.0);
}

/// Fourier transform of the L2-normalized Morlet daughter at scale s:
/// sqrt(2 pi s / dt) * pi^{-1/4} * exp(-(s w - w0)^2 / 2) for w > 0, else 0
/// (the Morlet is analytic). The sqrt(2 pi s / dt) factor realizes the
/// 1/sqrt(s) time-domain normalization on a grid with spacing dt and makes
/// white-noise power flat across scales.
inline double morlet_fourier(double angular_frequency, double scale,
                             const MorletParams& params = {}, double dt = 1.0) {
    if (angular_frequency <= 0.0) return 0.0;
    const double arg = scale * angular_frequency - params.omega0;
    constexpr double pi_quarter = 0.7511255444649425;  // pi^{-1/4}
    return pi_quarter * std::sqrt(2.0 * std::numbers::pi * scale / dt) *
           std::exp(-0.5 * arg * arg);
}

/// CWT coefficients over a scale grid: rows = scales, cols = times.
/// coi[t] is the largest trustworthy scale at time index t given the series
/// borders (zero at both ends, peaked at the midpoint).
struct CwtField {
    ComplexMatrix coefficients;
    ScaleGrid grid;
    std::size_t n_times = 0;
    std::vector<double> coi;
};

/// Border rule from the Morlet e-folding time sqrt(2)*s: at time index u the
/// transform is trusted up to scale min(u, n-1-u) * dt / sqrt(2).
inline std::vector<double> cone_of_influence(std::size_t n, double dt) {
    if (n < 2) throw ConfigError("cone_of_influence needs n >= 2");
    std::vector<double> coi(n);
    for (std::size_t u = 0; u < n; ++u) {
        const double from_start = static_cast<double>(u) * dt;
        const double from_end = static_cast<double>(n - 1 - u) * dt;
        coi[u] = std::min(from_start, from_end) / std::numbers::sqrt2;
    }
    return coi;
}

/// Continuous wavelet transform by frequency-domain multiplication.
/// The series is de-meaned (a wavelet has zero average, so the mean is
/// unrepresentable and would only leak), zero-padded to the next power of
/// two, transformed once, and multiplied per scale by the analytic Morlet
/// spectrum; padding is discarded after the inverse transform.
inline CwtField cwt(std::span<const double> series, const ScaleGrid& grid,
                    const MorletParams& params = {}, unsigned threads = 1) {
    const std::size_t n = series.size();
    if (n < 8) throw DataError("cwt needs a series of length >= 8");
    for (double v : series)
        if (!std::isfinite(v)) throw DataError("cwt input contains a non-finite value");

    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(n);

    const std::size_t pad = next_pow2(n);
    std::vector<std::complex<double>> spectrum(pad, {0.0, 0.0});
    for (std::size_t t = 0; t < n; ++t) spectrum[t] = series[t] - mean;
    fft_inplace(spectrum, false);

    CwtField field;
    field.grid = grid;
    field.n_times = n;
    field.coi = cone_of_influence(n, grid.dt);
    field.coefficients = ComplexMatrix(grid.num_scales(), n);

    // Angular frequencies of the padded DFT bins; only w > 0 contributes.
    const double dw = 2.0 * std::numbers::pi / (static_cast<double>(pad) * grid.dt);

    parallel_for(grid.num_scales(), threads, [&](std::size_t j) {
        const double s = grid.scales[j];
        std::vector<std::complex<double>> buf(pad);
        buf[0] = {0.0, 0.0};
        for (std::size_t k = 1; k <= pad / 2; ++k)
            buf[k] = spectrum[k] * morlet_fourier(static_cast<double>(k) * dw, s, params, grid.dt);
        for (std::size_t k = pad / 2 + 1; k < pad; ++k) buf[k] = {0.0, 0.0};
        fft_inplace(buf, true);
        auto* row = field.coefficients.row(j);
        for (std::size_t t = 0; t < n; ++t) row[t] = buf[t];
    });

    return field;
}

}  // namespace wcnet
