#pragma once

// Two-stage reconstruction network mapping a CASSI frame to a cube.
//
// Stage 1 lifts the frame to N channels with N filters of size 1 x taps
// (taps = (N-1)*s + 1) sliding along the dispersion axis; the filters consume
// the frame's overhang exactly, so the result is X x Y x N.
//
// Stage 2 refines that volume with a small two-scale stack:
//
//   u ──conv3x3─relu──conv3x3─relu──────────────(+)──conv3x3──(+)── out
//   │                                            │             │
//   └─pool2─conv3x3─relu──conv3x3─relu──upsample─┘             │
//   └──────────────────────────────────────────────────────────┘
//
// Convolutions use zero padding and stride 1; pooling is 2x2 mean over the
// pixels present, upsampling is nearest-neighbour. Gradients are written out
// by hand in backward().

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dcsi/core.hpp"

namespace dcsi {

struct NetShape {
    std::size_t width = 0;
    std::size_t height = 0;
    WavelengthGrid grid;
    std::size_t hidden = 16;
    std::size_t shift_step = 1;

    std::size_t bands() const { return grid.bands; }
    std::size_t frame_width() const { return width + (bands() - 1) * shift_step; }
    std::size_t taps() const { return (bands() - 1) * shift_step + 1; }
    std::size_t half_width() const { return (width + 1) / 2; }
    std::size_t half_height() const { return (height + 1) / 2; }

    bool operator==(const NetShape&) const = default;
};

struct Param {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> values;
};

/// Gradient arrays, one per Param, in the same order.
using Gradients = std::vector<std::vector<double>>;

class ReconNet {
public:
    enum Index : std::size_t {
        kLiftWeight,
        kLiftBias,
        kFull1Weight,
        kFull1Bias,
        kFull2Weight,
        kFull2Bias,
        kHalf1Weight,
        kHalf1Bias,
        kHalf2Weight,
        kHalf2Bias,
        kOutWeight,
        kOutBias,
        kParamCount
    };

    /// Intermediate values kept for the backward pass.
    struct Activations {
        std::vector<double> frame;
        std::vector<double> lifted;   // N x Y x X
        std::vector<double> full1;    // C x Y x X, post-ReLU
        std::vector<double> full2;    // C x Y x X, post-ReLU
        std::vector<double> pooled;   // N x Y2 x X2
        std::vector<double> half1;    // C x Y2 x X2, post-ReLU
        std::vector<double> half2;    // C x Y2 x X2, post-ReLU
        std::vector<double> fused;    // C x Y x X
        std::vector<double> output;   // N x Y x X
    };

    /// Weights drawn uniformly from [-a, a], a = sqrt(1 / fan_in).
    ReconNet(NetShape shape, unsigned long long seed);
    /// All weights zero.
    static ReconNet zeros(NetShape shape);

    const NetShape& shape() const { return shape_; }
    unsigned long long seed() const { return seed_; }

    std::vector<Param>& params() { return params_; }
    const std::vector<Param>& params() const { return params_; }
    Param& param(Index i) { return params_[i]; }
    const Param& param(Index i) const { return params_[i]; }

    std::size_t parameter_count() const;
    static std::size_t parameter_count(std::size_t bands, std::size_t hidden, std::size_t shift_step = 1);

    HsiCube forward(const CompressedFrame& frame) const;
    Activations forward_cached(const CompressedFrame& frame) const;

    /// Gradients of a scalar loss with respect to every weight, given dL/d(output cube).
    Gradients backward(const Activations& acts, const std::vector<double>& d_output) const;

    Gradients zero_gradients() const;

    bool operator==(const ReconNet&) const;

private:
    explicit ReconNet(NetShape shape);
    void check_frame(const CompressedFrame& frame) const;

    NetShape shape_;
    unsigned long long seed_ = 0;
    std::vector<Param> params_;
};

/// JSON manifest `<base>.json` (layer names, shapes, seed, shape, optional
/// config) plus little-endian f64 payload `<base>.bin` in manifest order.
void save_checkpoint(const ReconNet& net, const std::filesystem::path& path,
                     const std::optional<std::string>& config_json = std::nullopt);
ReconNet load_checkpoint(const std::filesystem::path& path);

}  // namespace dcsi
