#pragma once

// Core domain types for dual-camera compressive spectral imaging.
//
// Memory layout of HsiCube is band-major: data[b * height * width + y * width + x].
// All scalars are 64-bit; files may store 32-bit samples.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dcsi {

/// Thrown when array shapes or operator dimensions disagree.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown for malformed files, headers and payloads.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct WavelengthGrid {
    double start_nm = 450.0;
    double step_nm = 10.0;
    std::size_t bands = 1;

    WavelengthGrid() = default;
    WavelengthGrid(double start, double step, std::size_t n);

    double wavelength(std::size_t i) const { return start_nm + static_cast<double>(i) * step_nm; }
    double end_nm() const { return wavelength(bands - 1); }

    /// Evenly spaced grid spanning [lo, hi] inclusive. A single band sits at lo.
    static WavelengthGrid spanning(double lo_nm, double hi_nm, std::size_t n);

    /// 450-650 nm, the filtered range of the dual-camera rig.
    static WavelengthGrid visible(std::size_t n) { return spanning(450.0, 650.0, n); }

    bool operator==(const WavelengthGrid&) const = default;
};

class HsiCube {
public:
    HsiCube() = default;
    HsiCube(std::size_t width, std::size_t height, WavelengthGrid grid);
    HsiCube(std::size_t width, std::size_t height, WavelengthGrid grid, std::vector<double> data);

    std::size_t width() const { return width_; }
    std::size_t height() const { return height_; }
    std::size_t bands() const { return grid_.bands; }
    const WavelengthGrid& grid() const { return grid_; }
    std::size_t band_size() const { return width_ * height_; }
    std::size_t size() const { return data_.size(); }

    double& at(std::size_t x, std::size_t y, std::size_t b) {
        return data_[(b * height_ + y) * width_ + x];
    }
    double at(std::size_t x, std::size_t y, std::size_t b) const {
        return data_[(b * height_ + y) * width_ + x];
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const HsiCube& other) const {
        return width_ == other.width_ && height_ == other.height_ && bands() == other.bands();
    }

    bool operator==(const HsiCube&) const = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    WavelengthGrid grid_;
    std::vector<double> data_;
};

/// Row-major 2-D scalar field. The tag keeps masks and the two kinds of
/// measurement from being mixed up at call sites.
template <class Tag>
class Plane {
public:
    Plane() = default;
    Plane(std::size_t width, std::size_t height) : width_(width), height_(height), values_(width * height, 0.0) {}
    Plane(std::size_t width, std::size_t height, std::vector<double> values)
        : width_(width), height_(height), values_(std::move(values)) {
        if (values_.size() != width_ * height_) {
            throw DimensionError("plane: " + std::to_string(values_.size()) + " values for " +
                                 std::to_string(width_) + "x" + std::to_string(height_));
        }
    }

    std::size_t width() const { return width_; }
    std::size_t height() const { return height_; }
    std::size_t size() const { return values_.size(); }

    double& at(std::size_t x, std::size_t y) { return values_[y * width_ + x]; }
    double at(std::size_t x, std::size_t y) const { return values_[y * width_ + x]; }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    bool operator==(const Plane&) const = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<double> values_;
};

struct MaskTag;
struct CassiTag;
struct ColorTag;

using CodedAperture = Plane<MaskTag>;
/// Dispersed, coded measurement of width X + (N-1)*s.
using CompressedFrame = Plane<CassiTag>;

enum class BayerPattern { RGGB };

enum class Channel { R = 0, G = 1, B = 2 };

inline Channel channel_at(BayerPattern, std::size_t x, std::size_t y) {
    const bool odd_x = (x & 1U) != 0;
    const bool odd_y = (y & 1U) != 0;
    if (!odd_y) return odd_x ? Channel::G : Channel::R;
    return odd_x ? Channel::B : Channel::G;
}

/// Raw single-sensor mosaic from the color camera.
class RawColorFrame : public Plane<ColorTag> {
public:
    using Plane<ColorTag>::Plane;
    BayerPattern pattern = BayerPattern::RGGB;
};

struct SpectralResponse {
    std::vector<double> red;
    std::vector<double> green;
    std::vector<double> blue;
    BayerPattern pattern = BayerPattern::RGGB;

    const std::vector<double>& curve(Channel c) const;
    std::size_t bands() const { return red.size(); }

    /// Validates curve lengths against `bands` and the [0,1] range.
    void validate(std::size_t bands) const;

    /// Gaussian curves at 470/530/600 nm, 50 nm FWHM, peak 1.
    static SpectralResponse gaussian_default(const WavelengthGrid& grid);
};

struct Illuminant {
    std::vector<double> spectrum;

    void validate(std::size_t bands) const;

    static Illuminant flat(std::size_t bands) { return {std::vector<double>(bands, 1.0)}; }
};

/// Euclidean inner product over all samples.
double dot(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace dcsi
