#pragma once

#include <ostream>
#include <string>

#include "dcsi/core.hpp"

namespace dcsi {

inline constexpr double kPsnrCapDb = 99.0;
inline constexpr double kSamEpsilon = 1e-12;

struct MetricReport {
    double psnr_db = 0.0;
    double ssim = 0.0;
    double sam_deg = 0.0;
};

/// Mean over bands of 10*log10(1 / MSE_b), each band capped at kPsnrCapDb. Peak is 1.
double psnr(const HsiCube& ref, const HsiCube& test);

/// Mean over bands of the mean local SSIM: 11x11 Gaussian window (sigma 1.5),
/// valid positions only, C1 = 0.01^2, C2 = 0.03^2.
double ssim(const HsiCube& ref, const HsiCube& test);

/// Mean per-pixel spectral angle in degrees over pixels whose spectra both have
/// norm above kSamEpsilon.
double sam(const HsiCube& ref, const HsiCube& test);

MetricReport evaluate(const HsiCube& ref, const HsiCube& test);

/// "scene_id,method,psnr_db,ssim,sam_deg"
inline constexpr const char* kMetricCsvHeader = "scene_id,method,psnr_db,ssim,sam_deg";
void write_metric_row(std::ostream& out, const std::string& scene_id, const std::string& method, const MetricReport& r);

/// Ranking helper: true when `a` beats `b` on the given metric name
/// ("psnr", "ssim" higher is better; "sam" lower is better).
bool metric_better(const std::string& metric, double a, double b);

}  // namespace dcsi
