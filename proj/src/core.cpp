#include "dcsi/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dcsi {

WavelengthGrid::WavelengthGrid(double start, double step, std::size_t n) : start_nm(start), step_nm(step), bands(n) {
    if (n < 1) throw DimensionError("wavelength grid needs at least one band");
    if (!(step > 0.0)) throw std::invalid_argument("wavelength grid step must be positive");
}

WavelengthGrid WavelengthGrid::spanning(double lo_nm, double hi_nm, std::size_t n) {
    if (n < 1) throw DimensionError("wavelength grid needs at least one band");
    const double step = n > 1 ? (hi_nm - lo_nm) / static_cast<double>(n - 1) : (hi_nm - lo_nm > 0 ? hi_nm - lo_nm : 1.0);
    return {lo_nm, step, n};
}

HsiCube::HsiCube(std::size_t width, std::size_t height, WavelengthGrid grid)
    : width_(width), height_(height), grid_(grid), data_(width * height * grid.bands, 0.0) {}

HsiCube::HsiCube(std::size_t width, std::size_t height, WavelengthGrid grid, std::vector<double> data)
    : width_(width), height_(height), grid_(grid), data_(std::move(data)) {
    if (data_.size() != width_ * height_ * grid_.bands) {
        throw DimensionError("cube: " + std::to_string(data_.size()) + " samples for " + std::to_string(width_) +
                             "x" + std::to_string(height_) + "x" + std::to_string(grid_.bands));
    }
}

const std::vector<double>& SpectralResponse::curve(Channel c) const {
    switch (c) {
        case Channel::R: return red;
        case Channel::G: return green;
        case Channel::B: return blue;
    }
    return green;
}

void SpectralResponse::validate(std::size_t bands) const {
    for (const auto* c : {&red, &green, &blue}) {
        if (c->size() != bands) {
            throw DimensionError("spectral response curve has " + std::to_string(c->size()) + " samples, expected " +
                                 std::to_string(bands));
        }
        for (double v : *c) {
            if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("spectral response value outside [0,1]");
        }
    }
}

SpectralResponse SpectralResponse::gaussian_default(const WavelengthGrid& grid) {
    const double fwhm = 50.0;
    const double sigma = fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
    auto make = [&](double centre) {
        std::vector<double> c(grid.bands);
        for (std::size_t i = 0; i < grid.bands; ++i) {
            const double d = (grid.wavelength(i) - centre) / sigma;
            c[i] = std::clamp(std::exp(-0.5 * d * d), 0.0, 1.0);
        }
        return c;
    };
    return {make(600.0), make(530.0), make(470.0), BayerPattern::RGGB};
}

void Illuminant::validate(std::size_t bands) const {
    if (spectrum.size() != bands) {
        throw DimensionError("illuminant has " + std::to_string(spectrum.size()) + " samples, expected " +
                             std::to_string(bands));
    }
    for (double v : spectrum) {
        if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("illuminant must be strictly positive");
    }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace dcsi
