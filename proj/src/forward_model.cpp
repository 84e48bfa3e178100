#include "dcsi/forward_model.hpp"

#include <fstream>
#include <iomanip>
#include <limits>

namespace dcsi {
namespace {

void check_cube(const HsiCube& cube, const CassiOperator& op) {
    if (cube.width() != op.width() || cube.height() != op.height() || cube.bands() != op.bands) {
        throw DimensionError("cassi: cube " + std::to_string(cube.width()) + "x" + std::to_string(cube.height()) +
                             "x" + std::to_string(cube.bands()) + " does not match operator " +
                             std::to_string(op.width()) + "x" + std::to_string(op.height()) + "x" +
                             std::to_string(op.bands));
    }
}

void check_frame(const CompressedFrame& frame, const CassiOperator& op) {
    if (frame.width() != op.frame_width() || frame.height() != op.height()) {
        throw DimensionError("cassi: frame " + std::to_string(frame.width()) + "x" + std::to_string(frame.height()) +
                             " does not match expected " + std::to_string(op.frame_width()) + "x" +
                             std::to_string(op.height()));
    }
}

}  // namespace

CassiOperator::CassiOperator(CodedAperture m, std::size_t n, std::size_t s)
    : mask(std::move(m)), bands(n), shift_step(s) {
    if (n < 1) throw DimensionError("cassi: bands must be >= 1");
    if (s < 1) throw std::invalid_argument("cassi: shift_step must be >= 1");
    if (mask.width() == 0 || mask.height() == 0) throw DimensionError("cassi: empty mask");
}

ColorOperator::ColorOperator(SpectralResponse r, Illuminant l) : response(std::move(r)), illuminant(std::move(l)) {
    const std::size_t n = response.bands();
    response.validate(n);
    illuminant.validate(n);
    for (Channel c : {Channel::R, Channel::G, Channel::B}) {
        auto& w = weights_[static_cast<int>(c)];
        const auto& k = response.curve(c);
        w.resize(n);
        for (std::size_t i = 0; i < n; ++i) w[i] = k[i] * illuminant.spectrum[i];
    }
}

CompressedFrame cassi_forward(const HsiCube& cube, const CassiOperator& op) {
    check_cube(cube, op);
    const std::size_t X = op.width();
    const std::size_t Y = op.height();
    CompressedFrame out(op.frame_width(), Y);
    for (std::size_t i = 0; i < op.bands; ++i) {
        const std::size_t shift = i * op.shift_step;
        for (std::size_t y = 0; y < Y; ++y) {
            for (std::size_t x = 0; x < X; ++x) {
                out.at(x + shift, y) += cube.at(x, y, i) * op.mask.at(x, y);
            }
        }
    }
    return out;
}

HsiCube cassi_adjoint(const CompressedFrame& frame, const CassiOperator& op, const WavelengthGrid* grid) {
    check_frame(frame, op);
    const std::size_t X = op.width();
    const std::size_t Y = op.height();
    const WavelengthGrid g = grid ? *grid : WavelengthGrid::visible(op.bands);
    if (g.bands != op.bands) throw DimensionError("cassi_adjoint: grid band count mismatch");
    HsiCube out(X, Y, g);
    for (std::size_t i = 0; i < op.bands; ++i) {
        const std::size_t shift = i * op.shift_step;
        for (std::size_t y = 0; y < Y; ++y) {
            for (std::size_t x = 0; x < X; ++x) {
                out.at(x, y, i) = op.mask.at(x, y) * frame.at(x + shift, y);
            }
        }
    }
    return out;
}

RawColorFrame color_forward(const HsiCube& cube, const ColorOperator& op) {
    if (cube.bands() != op.bands()) {
        throw DimensionError("color: cube has " + std::to_string(cube.bands()) + " bands, response has " +
                             std::to_string(op.bands()));
    }
    RawColorFrame out(cube.width(), cube.height());
    out.pattern = op.response.pattern;
    for (std::size_t y = 0; y < cube.height(); ++y) {
        for (std::size_t x = 0; x < cube.width(); ++x) {
            const auto& w = op.weights_at(x, y);
            double acc = 0.0;
            for (std::size_t i = 0; i < cube.bands(); ++i) acc += cube.at(x, y, i) * w[i];
            out.at(x, y) = acc;
        }
    }
    return out;
}

HsiCube color_adjoint(const RawColorFrame& frame, const ColorOperator& op, const WavelengthGrid* grid) {
    const WavelengthGrid g = grid ? *grid : WavelengthGrid::visible(op.bands());
    if (g.bands != op.bands()) throw DimensionError("color_adjoint: grid band count mismatch");
    HsiCube out(frame.width(), frame.height(), g);
    for (std::size_t y = 0; y < frame.height(); ++y) {
        for (std::size_t x = 0; x < frame.width(); ++x) {
            const auto& w = op.weights_at(x, y);
            const double f = frame.at(x, y);
            for (std::size_t i = 0; i < op.bands(); ++i) out.at(x, y, i) = f * w[i];
        }
    }
    return out;
}

std::vector<double> phi_phit_diagonal(const CassiOperator& op) {
    const std::size_t W = op.frame_width();
    std::vector<double> diag(W * op.height(), 0.0);
    for (std::size_t i = 0; i < op.bands; ++i) {
        const std::size_t shift = i * op.shift_step;
        for (std::size_t y = 0; y < op.height(); ++y) {
            for (std::size_t x = 0; x < op.width(); ++x) {
                const double t = op.mask.at(x, y);
                diag[y * W + x + shift] += t * t;
            }
        }
    }
    return diag;
}

SparseSensingMatrix build_sensing_matrix(const CassiOperator& op, std::size_t width, std::size_t height,
                                         std::size_t column_cap) {
    if (width != op.width() || height != op.height()) throw DimensionError("sensing matrix: size differs from mask");
    const std::size_t cols = width * height * op.bands;
    if (cols > column_cap) {
        throw std::length_error("sensing matrix: " + std::to_string(cols) + " columns exceeds cap " +
                                std::to_string(column_cap));
    }
    SparseSensingMatrix m;
    m.rows = op.frame_width() * height;
    m.cols = cols;
    // Row-major traversal so entries come out sorted by (row, col).
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t u = 0; u < op.frame_width(); ++u) {
            const std::size_t row = y * op.frame_width() + u;
            for (std::size_t i = 0; i < op.bands; ++i) {
                const std::size_t shift = i * op.shift_step;
                if (u < shift || u - shift >= width) continue;
                const std::size_t x = u - shift;
                const double t = op.mask.at(x, y);
                if (t == 0.0) continue;
                m.entries.push_back({row, (i * height + y) * width + x, t});
            }
        }
    }
    return m;
}

std::vector<double> SparseSensingMatrix::multiply(const std::vector<double>& v) const {
    if (v.size() != cols) throw DimensionError("sensing matrix multiply: vector length mismatch");
    std::vector<double> out(rows, 0.0);
    for (const auto& e : entries) out[e.row] += e.value * v[e.col];
    return out;
}

std::vector<double> SparseSensingMatrix::multiply_transpose(const std::vector<double>& v) const {
    if (v.size() != rows) throw DimensionError("sensing matrix transpose multiply: vector length mismatch");
    std::vector<double> out(cols, 0.0);
    for (const auto& e : entries) out[e.col] += e.value * v[e.row];
    return out;
}

void SparseSensingMatrix::write_coo(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << rows << ' ' << cols << ' ' << entries.size() << '\n';
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& e : entries) out << e.row << ' ' << e.col << ' ' << e.value << '\n';
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace dcsi
