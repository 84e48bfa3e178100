#include "dcsi/scene.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <vector>

namespace dcsi {
namespace {

double gaussian(double d, double sigma) { return std::exp(-0.5 * (d * d) / (sigma * sigma)); }

HsiCube smooth_blobs(const SceneSpec& spec, std::mt19937_64& rng) {
    const auto grid = spec.grid();
    const int count = spec.components < 0 ? 6 : spec.components;
    const double X = static_cast<double>(spec.width);
    const double Y = static_cast<double>(spec.height);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    HsiCube cube(spec.width, spec.height, grid);
    std::vector<double> spectrum(grid.bands);
    for (int k = 0; k < count; ++k) {
        const double cx = uni(rng) * X;
        const double cy = uni(rng) * Y;
        const double sx = (0.12 + 0.18 * uni(rng)) * X;
        const double sy = (0.12 + 0.18 * uni(rng)) * Y;
        const double amp = 0.4 + 0.6 * uni(rng);
        const double centre = 450.0 + 200.0 * uni(rng);
        const double width = 25.0 + 45.0 * uni(rng);
        for (std::size_t b = 0; b < grid.bands; ++b) spectrum[b] = gaussian(grid.wavelength(b) - centre, width);
        for (std::size_t y = 0; y < spec.height; ++y) {
            const double gy = gaussian(static_cast<double>(y) + 0.5 - cy, sy);
            for (std::size_t x = 0; x < spec.width; ++x) {
                const double g = amp * gy * gaussian(static_cast<double>(x) + 0.5 - cx, sx);
                for (std::size_t b = 0; b < grid.bands; ++b) cube.at(x, y, b) += g * spectrum[b];
            }
        }
    }
    const double peak = cube.data().empty() ? 0.0 : *std::max_element(cube.data().begin(), cube.data().end());
    if (peak > 1.0) {
        for (double& v : cube.data()) v /= peak;
    }
    return cube;
}

HsiCube step_targets(const SceneSpec& spec, std::mt19937_64& rng) {
    const auto grid = spec.grid();
    const std::size_t cells = spec.components < 0 ? 4 : static_cast<std::size_t>(std::max(spec.components, 1));
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    std::vector<std::vector<double>> spectra(cells * cells, std::vector<double>(grid.bands));
    for (auto& s : spectra) {
        const double amp = 0.3 + 0.5 * uni(rng);
        const double floor = 0.2 * uni(rng);
        const double centre = 450.0 + 200.0 * uni(rng);
        const double width = 30.0 + 70.0 * uni(rng);
        for (std::size_t b = 0; b < grid.bands; ++b) {
            s[b] = std::clamp(floor + amp * gaussian(grid.wavelength(b) - centre, width), 0.0, 1.0);
        }
    }

    HsiCube cube(spec.width, spec.height, grid);
    for (std::size_t y = 0; y < spec.height; ++y) {
        const std::size_t cy = std::min(cells - 1, y * cells / spec.height);
        for (std::size_t x = 0; x < spec.width; ++x) {
            const std::size_t cx = std::min(cells - 1, x * cells / spec.width);
            const auto& s = spectra[cy * cells + cx];
            for (std::size_t b = 0; b < grid.bands; ++b) cube.at(x, y, b) = s[b];
        }
    }
    return cube;
}

HsiCube spectral_ramps(const SceneSpec& spec, std::mt19937_64& rng) {
    const auto grid = spec.grid();
    std::uniform_real_distribution<double> sym(-1.0, 1.0);
    const double gx = sym(rng), gy = sym(rng), sx = sym(rng), sy = sym(rng);

    HsiCube cube(spec.width, spec.height, grid);
    auto unit = [](std::size_t i, std::size_t n) { return n > 1 ? 2.0 * static_cast<double>(i) / static_cast<double>(n - 1) - 1.0 : 0.0; };
    for (std::size_t y = 0; y < spec.height; ++y) {
        const double v = unit(y, spec.height);
        for (std::size_t x = 0; x < spec.width; ++x) {
            const double u = unit(x, spec.width);
            // base in [0.25, 0.75], |slope| <= 0.5, so base + slope * (t - 0.5) stays in [0, 1].
            const double base = 0.5 + 0.125 * (gx * u + gy * v);
            const double slope = 0.25 * (sx * u + sy * v);
            for (std::size_t b = 0; b < grid.bands; ++b) {
                const double t = grid.bands > 1 ? static_cast<double>(b) / static_cast<double>(grid.bands - 1) : 0.5;
                cube.at(x, y, b) = std::clamp(base + slope * (t - 0.5), 0.0, 1.0);
            }
        }
    }
    return cube;
}

}  // namespace

SceneFamily parse_scene_family(std::string_view tag) {
    if (tag == "smooth-blobs") return SceneFamily::SmoothBlobs;
    if (tag == "step-targets") return SceneFamily::StepTargets;
    if (tag == "spectral-ramps") return SceneFamily::SpectralRamps;
    throw std::invalid_argument("unknown scene family '" + std::string(tag) + "'");
}

std::string to_string(SceneFamily family) {
    switch (family) {
        case SceneFamily::SmoothBlobs: return "smooth-blobs";
        case SceneFamily::StepTargets: return "step-targets";
        case SceneFamily::SpectralRamps: return "spectral-ramps";
    }
    return "unknown";
}

HsiCube generate_scene(const SceneSpec& spec) {
    if (spec.width == 0 || spec.height == 0 || spec.bands == 0) throw DimensionError("scene: empty dimensions");
    if (!(spec.noise_sigma >= 0.0)) throw std::invalid_argument("scene: noise_sigma must be >= 0");
    std::mt19937_64 rng(spec.seed);
    switch (spec.family) {
        case SceneFamily::SmoothBlobs: return smooth_blobs(spec, rng);
        case SceneFamily::StepTargets: return step_targets(spec, rng);
        case SceneFamily::SpectralRamps: return spectral_ramps(spec, rng);
    }
    throw std::invalid_argument("unknown scene family");
}

MaskKind parse_mask_kind(std::string_view tag) {
    if (tag == "bernoulli") return MaskKind::Bernoulli;
    if (tag == "hadamard" || tag == "hadamard-derived") return MaskKind::Hadamard;
    throw std::invalid_argument("unknown mask kind '" + std::string(tag) + "'");
}

std::string to_string(MaskKind kind) { return kind == MaskKind::Bernoulli ? "bernoulli" : "hadamard-derived"; }

CodedAperture generate_mask(const MaskSpec& spec, std::size_t width, std::size_t height) {
    if (width == 0 || height == 0) throw DimensionError("mask: empty dimensions");
    CodedAperture mask(width, height);
    if (spec.kind == MaskKind::Bernoulli) {
        if (!(spec.density > 0.0 && spec.density <= 1.0)) throw std::invalid_argument("mask: density must be in (0, 1]");
        std::mt19937_64 rng(spec.seed);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (double& v : mask.values()) v = uni(rng) < spec.density ? 1.0 : 0.0;
        return mask;
    }
    if (spec.order == 0 || !std::has_single_bit(spec.order)) {
        throw std::invalid_argument("mask: hadamard order must be a power of two, got " + std::to_string(spec.order));
    }
    // Sylvester entry H[r][c] = (-1)^popcount(r & c).
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            const std::size_t r = y % spec.order;
            const std::size_t c = x % spec.order;
            mask.at(x, y) = std::popcount(r & c) % 2 == 0 ? 1.0 : 0.0;
        }
    }
    return mask;
}

}  // namespace dcsi
