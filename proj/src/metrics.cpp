#include "dcsi/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>

namespace dcsi {
namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void check_same(const HsiCube& a, const HsiCube& b, const char* what) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(what) + ": cube shapes differ (" + std::to_string(a.width()) + "x" +
                             std::to_string(a.height()) + "x" + std::to_string(a.bands()) + " vs " +
                             std::to_string(b.width()) + "x" + std::to_string(b.height()) + "x" +
                             std::to_string(b.bands()) + ")");
    }
}

std::array<double, kWindow> gaussian_taps() {
    std::array<double, kWindow> taps{};
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double d = i - kWindow / 2;
        taps[i] = std::exp(-(d * d) / (2.0 * kSigma * kSigma));
        sum += taps[i];
    }
    for (double& t : taps) t /= sum;
    return taps;
}

// Separable 'valid' Gaussian filter of a single band.
std::vector<double> filter_valid(const std::vector<double>& img, std::size_t X, std::size_t Y,
                                 const std::array<double, kWindow>& taps) {
    const std::size_t ox = X - kWindow + 1;
    const std::size_t oy = Y - kWindow + 1;
    std::vector<double> rows(ox * Y);
    for (std::size_t y = 0; y < Y; ++y)
        for (std::size_t x = 0; x < ox; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWindow; ++k) acc += taps[k] * img[y * X + x + k];
            rows[y * ox + x] = acc;
        }
    std::vector<double> out(ox * oy);
    for (std::size_t y = 0; y < oy; ++y)
        for (std::size_t x = 0; x < ox; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWindow; ++k) acc += taps[k] * rows[(y + k) * ox + x];
            out[y * ox + x] = acc;
        }
    return out;
}

}  // namespace

double psnr(const HsiCube& ref, const HsiCube& test) {
    check_same(ref, test, "psnr");
    const std::size_t n = ref.band_size();
    double total = 0.0;
    for (std::size_t b = 0; b < ref.bands(); ++b) {
        double mse = 0.0;
        for (std::size_t i = b * n; i < (b + 1) * n; ++i) {
            const double d = ref.data()[i] - test.data()[i];
            mse += d * d;
        }
        mse /= static_cast<double>(n);
        if (std::isnan(mse)) return std::numeric_limits<double>::quiet_NaN();
        total += mse == 0.0 ? kPsnrCapDb : std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
    }
    return total / static_cast<double>(ref.bands());
}

double ssim(const HsiCube& ref, const HsiCube& test) {
    check_same(ref, test, "ssim");
    const std::size_t X = ref.width();
    const std::size_t Y = ref.height();
    if (X < static_cast<std::size_t>(kWindow) || Y < static_cast<std::size_t>(kWindow)) {
        throw DimensionError("ssim: spatial size smaller than the 11x11 window");
    }
    const auto taps = gaussian_taps();
    const std::size_t n = X * Y;
    double total = 0.0;
    std::vector<double> a(n), b(n), aa(n), bb(n), ab(n);
    for (std::size_t band = 0; band < ref.bands(); ++band) {
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = ref.data()[band * n + i];
            b[i] = test.data()[band * n + i];
            aa[i] = a[i] * a[i];
            bb[i] = b[i] * b[i];
            ab[i] = a[i] * b[i];
        }
        const auto mu_a = filter_valid(a, X, Y, taps);
        const auto mu_b = filter_valid(b, X, Y, taps);
        const auto e_aa = filter_valid(aa, X, Y, taps);
        const auto e_bb = filter_valid(bb, X, Y, taps);
        const auto e_ab = filter_valid(ab, X, Y, taps);
        double acc = 0.0;
        for (std::size_t i = 0; i < mu_a.size(); ++i) {
            const double ma = mu_a[i];
            const double mb = mu_b[i];
            const double va = e_aa[i] - ma * ma;
            const double vb = e_bb[i] - mb * mb;
            const double cov = e_ab[i] - ma * mb;
            acc += ((2.0 * ma * mb + kC1) * (2.0 * cov + kC2)) / ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
        }
        total += acc / static_cast<double>(mu_a.size());
    }
    return total / static_cast<double>(ref.bands());
}

double sam(const HsiCube& ref, const HsiCube& test) {
    check_same(ref, test, "sam");
    const std::size_t n = ref.band_size();
    double total = 0.0;
    std::size_t counted = 0;
    for (std::size_t p = 0; p < n; ++p) {
        double d = 0.0, na = 0.0, nb = 0.0;
        for (std::size_t b = 0; b < ref.bands(); ++b) {
            const double u = ref.data()[b * n + p];
            const double v = test.data()[b * n + p];
            d += u * v;
            na += u * u;
            nb += v * v;
        }
        if (std::sqrt(na) <= kSamEpsilon || std::sqrt(nb) <= kSamEpsilon) continue;
        const double cosine = std::clamp(d / std::sqrt(na * nb), -1.0, 1.0);
        total += std::acos(cosine) * 180.0 / std::numbers::pi;
        ++counted;
    }
    if (counted == 0) throw std::invalid_argument("sam: every pixel has a zero spectrum");
    return total / static_cast<double>(counted);
}

MetricReport evaluate(const HsiCube& ref, const HsiCube& test) { return {psnr(ref, test), ssim(ref, test), sam(ref, test)}; }

void write_metric_row(std::ostream& out, const std::string& scene_id, const std::string& method, const MetricReport& r) {
    const auto old = out.precision(std::numeric_limits<double>::max_digits10);
    out << scene_id << ',' << method << ',' << r.psnr_db << ',' << r.ssim << ',' << r.sam_deg << '\n';
    out.precision(old);
}

bool metric_better(const std::string& metric, double a, double b) {
    if (metric == "sam") return a < b;
    if (metric == "psnr" || metric == "ssim") return a > b;
    throw std::invalid_argument("unknown metric '" + metric + "'");
}

}  // namespace dcsi
