#pragma once

// The two acquisition branches of the dual-camera system and their exact adjoints.
//
// CASSI branch: band i of the masked scene is displaced by i*shift_step pixels
// along x and all bands are summed onto one sensor:
//   f[x, y] = sum_i h[x - i*s, y, i] * T[x - i*s, y]
// Color branch: each pixel of the RGGB mosaic integrates the scene spectrum
// against its channel's efficiency curve and the illuminant:
//   f[x, y] = sum_i h[x, y, i] * K_{c(x,y)}[i] * L[i]

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dcsi/core.hpp"

namespace dcsi {

struct CassiOperator {
    CodedAperture mask;
    std::size_t bands = 1;
    std::size_t shift_step = 1;

    CassiOperator() = default;
    CassiOperator(CodedAperture m, std::size_t n, std::size_t s = 1);

    std::size_t width() const { return mask.width(); }
    std::size_t height() const { return mask.height(); }
    std::size_t frame_width() const { return mask.width() + (bands - 1) * shift_step; }
};

struct ColorOperator {
    SpectralResponse response;
    Illuminant illuminant;

    ColorOperator() = default;
    ColorOperator(SpectralResponse r, Illuminant l);

    std::size_t bands() const { return response.bands(); }

    /// K_c[i] * L[i] for the channel sampled at (x, y).
    const std::vector<double>& weights_at(std::size_t x, std::size_t y) const {
        return weights_[static_cast<int>(channel_at(response.pattern, x, y))];
    }

private:
    std::vector<double> weights_[3];
};

CompressedFrame cassi_forward(const HsiCube& cube, const CassiOperator& op);
/// cube[x, y, i] = T[x, y] * f[x + i*s, y]. The result carries `grid` when given.
HsiCube cassi_adjoint(const CompressedFrame& frame, const CassiOperator& op, const WavelengthGrid* grid = nullptr);

RawColorFrame color_forward(const HsiCube& cube, const ColorOperator& op);
HsiCube color_adjoint(const RawColorFrame& frame, const ColorOperator& op, const WavelengthGrid* grid = nullptr);

/// Diagonal of Phi * Phi^T: for each measurement pixel, the sum of the squared
/// mask values that reach it. Phi * Phi^T is exactly diagonal for single-disperser CASSI.
std::vector<double> phi_phit_diagonal(const CassiOperator& op);

struct SparseEntry {
    std::size_t row;
    std::size_t col;
    double value;
};

/// Explicit sensing matrix Phi. Rows index the vectorized frame (y * frame_width + x),
/// columns index the vectorized band-major cube ((i * Y + y) * X + x).
struct SparseSensingMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<SparseEntry> entries;

    std::vector<double> multiply(const std::vector<double>& v) const;
    std::vector<double> multiply_transpose(const std::vector<double>& v) const;

    /// "rows cols nnz" header line, then one "row col value" line per entry.
    void write_coo(const std::filesystem::path& path) const;
};

inline constexpr std::size_t kDefaultSensingMatrixColumnCap = 65536;

/// Builds Phi entry by entry. Intended as a small-scale verification oracle.
SparseSensingMatrix build_sensing_matrix(const CassiOperator& op, std::size_t width, std::size_t height,
                                         std::size_t column_cap = kDefaultSensingMatrixColumnCap);

}  // namespace dcsi
