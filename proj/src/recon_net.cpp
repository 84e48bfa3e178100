#include "dcsi/recon_net.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>

#include <Eigen/Core>

#include "dcsi/cube_io.hpp"
#include "json.hpp"

namespace dcsi {
namespace {

struct Dims {
    std::size_t channels;
    std::size_t height;
    std::size_t width;
    std::size_t plane() const { return height * width; }
    std::size_t size() const { return channels * height * width; }
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

// Patch matrix of a zero-padded 3x3 neighbourhood: row (i*9 + ky*3 + kx), column y*W + x.
RowMatrix im2col(const std::vector<double>& in, Dims d) {
    const std::size_t H = d.height;
    const std::size_t W = d.width;
    RowMatrix cols = RowMatrix::Zero(static_cast<Eigen::Index>(d.channels * 9), static_cast<Eigen::Index>(d.plane()));
    for (std::size_t i = 0; i < d.channels; ++i) {
        const double* src = in.data() + i * d.plane();
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                double* row = cols.row(static_cast<Eigen::Index>(i * 9 + ky * 3 + kx)).data();
                const int dy = ky - 1;
                const int dx = kx - 1;
                const std::size_t y0 = dy < 0 ? 1 : 0;
                const std::size_t y1 = dy > 0 ? H - 1 : H;
                const std::size_t x0 = dx < 0 ? 1 : 0;
                const std::size_t x1 = dx > 0 ? W - 1 : W;
                for (std::size_t y = y0; y < y1; ++y) {
                    const double* srow = src + (y + dy) * W;
                    for (std::size_t x = x0; x < x1; ++x) row[y * W + x] = srow[x + dx];
                }
            }
        }
    }
    return cols;
}

// Adjoint of im2col: scatter-adds patch gradients back onto the input grid.
void col2im_add(const RowMatrix& cols, Dims d, std::vector<double>& out) {
    const std::size_t H = d.height;
    const std::size_t W = d.width;
    for (std::size_t i = 0; i < d.channels; ++i) {
        double* dst = out.data() + i * d.plane();
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                const double* row = cols.row(static_cast<Eigen::Index>(i * 9 + ky * 3 + kx)).data();
                const int dy = ky - 1;
                const int dx = kx - 1;
                const std::size_t y0 = dy < 0 ? 1 : 0;
                const std::size_t y1 = dy > 0 ? H - 1 : H;
                const std::size_t x0 = dx < 0 ? 1 : 0;
                const std::size_t x1 = dx > 0 ? W - 1 : W;
                for (std::size_t y = y0; y < y1; ++y) {
                    double* drow = dst + (y + dy) * W;
                    for (std::size_t x = x0; x < x1; ++x) drow[x + dx] += row[y * W + x];
                }
            }
        }
    }
}

// out[o] = b[o] + sum_i w[o][i] (*) in[i], 3x3 kernel, zero padding.
std::vector<double> conv3x3(const std::vector<double>& in, Dims d, const std::vector<double>& w,
                            const std::vector<double>& b, std::size_t out_channels) {
    const auto P = static_cast<Eigen::Index>(d.plane());
    const auto O = static_cast<Eigen::Index>(out_channels);
    const auto K = static_cast<Eigen::Index>(d.channels * 9);
    std::vector<double> out(out_channels * d.plane());
    MatrixMap result(out.data(), O, P);
    result.noalias() = ConstMatrixMap(w.data(), O, K) * im2col(in, d);
    for (Eigen::Index o = 0; o < O; ++o) result.row(o).array() += b[static_cast<std::size_t>(o)];
    return out;
}

// Accumulates dw, db and (optionally) returns d_in for conv3x3.
std::vector<double> conv3x3_backward(const std::vector<double>& in, Dims d, const std::vector<double>& w,
                                     std::size_t out_channels, const std::vector<double>& d_out,
                                     std::vector<double>& dw, std::vector<double>& db, bool want_input_grad) {
    const auto P = static_cast<Eigen::Index>(d.plane());
    const auto O = static_cast<Eigen::Index>(out_channels);
    const auto K = static_cast<Eigen::Index>(d.channels * 9);
    const ConstMatrixMap g(d_out.data(), O, P);
    // Scalar loop: a vectorized reduction would sum in an alignment-dependent order.
    for (std::size_t o = 0; o < out_channels; ++o) {
        double acc = 0.0;
        for (std::size_t p = 0; p < d.plane(); ++p) acc += d_out[o * d.plane() + p];
        db[o] += acc;
    }
    MatrixMap(dw.data(), O, K).noalias() += g * im2col(in, d).transpose();
    std::vector<double> d_in;
    if (want_input_grad) {
        d_in.assign(d.size(), 0.0);
        const RowMatrix d_cols = ConstMatrixMap(w.data(), O, K).transpose() * g;
        col2im_add(d_cols, d, d_in);
    }
    return d_in;
}

void relu_inplace(std::vector<double>& v) {
    for (double& x : v) x = x > 0.0 ? x : 0.0;
}

// ReLU' at 0 is 0, so the post-activation value decides the mask.
void relu_backward_inplace(std::vector<double>& grad, const std::vector<double>& activated) {
    for (std::size_t i = 0; i < grad.size(); ++i) {
        if (!(activated[i] > 0.0)) grad[i] = 0.0;
    }
}

std::vector<double> pool2(const std::vector<double>& in, Dims d, std::size_t h2, std::size_t w2) {
    std::vector<double> out(d.channels * h2 * w2, 0.0);
    for (std::size_t c = 0; c < d.channels; ++c) {
        for (std::size_t y = 0; y < h2; ++y) {
            for (std::size_t x = 0; x < w2; ++x) {
                double acc = 0.0;
                int n = 0;
                for (std::size_t yy = 2 * y; yy < std::min(2 * y + 2, d.height); ++yy)
                    for (std::size_t xx = 2 * x; xx < std::min(2 * x + 2, d.width); ++xx, ++n)
                        acc += in[(c * d.height + yy) * d.width + xx];
                out[(c * h2 + y) * w2 + x] = acc / n;
            }
        }
    }
    return out;
}

void pool2_backward(const std::vector<double>& d_out, Dims d, std::size_t h2, std::size_t w2, std::vector<double>& d_in) {
    for (std::size_t c = 0; c < d.channels; ++c) {
        for (std::size_t y = 0; y < d.height; ++y) {
            const std::size_t ny = std::min(2 * (y / 2) + 2, d.height) - 2 * (y / 2);
            for (std::size_t x = 0; x < d.width; ++x) {
                const std::size_t nx = std::min(2 * (x / 2) + 2, d.width) - 2 * (x / 2);
                d_in[(c * d.height + y) * d.width + x] +=
                    d_out[(c * h2 + y / 2) * w2 + x / 2] / static_cast<double>(nx * ny);
            }
        }
    }
}

// Nearest-neighbour upsampling of a (channels, h2, w2) volume to d.
std::vector<double> upsample2(const std::vector<double>& in, Dims d, std::size_t h2, std::size_t w2) {
    std::vector<double> out(d.size());
    for (std::size_t c = 0; c < d.channels; ++c)
        for (std::size_t y = 0; y < d.height; ++y)
            for (std::size_t x = 0; x < d.width; ++x)
                out[(c * d.height + y) * d.width + x] = in[(c * h2 + y / 2) * w2 + x / 2];
    return out;
}

std::vector<double> upsample2_backward(const std::vector<double>& d_out, Dims d, std::size_t h2, std::size_t w2) {
    std::vector<double> d_in(d.channels * h2 * w2, 0.0);
    for (std::size_t c = 0; c < d.channels; ++c)
        for (std::size_t y = 0; y < d.height; ++y)
            for (std::size_t x = 0; x < d.width; ++x)
                d_in[(c * h2 + y / 2) * w2 + x / 2] += d_out[(c * d.height + y) * d.width + x];
    return d_in;
}

template <class T>
T to_little_endian(T v) {
    if constexpr (std::endian::native != std::endian::little) {
        unsigned char bytes[sizeof(T)];
        std::memcpy(bytes, &v, sizeof(T));
        std::reverse(std::begin(bytes), std::end(bytes));
        std::memcpy(&v, bytes, sizeof(T));
    }
    return v;
}

}  // namespace

ReconNet::ReconNet(NetShape shape) : shape_(std::move(shape)) {
    if (shape_.width == 0 || shape_.height == 0) throw DimensionError("recon net: empty spatial size");
    if (shape_.hidden == 0) throw std::invalid_argument("recon net: hidden channels must be >= 1");
    if (shape_.shift_step == 0) throw std::invalid_argument("recon net: shift_step must be >= 1");
    const std::size_t N = shape_.bands();
    const std::size_t C = shape_.hidden;
    const std::size_t T = shape_.taps();
    auto add = [&](std::string name, std::vector<std::size_t> dims) {
        std::size_t n = 1;
        for (auto v : dims) n *= v;
        params_.push_back({std::move(name), std::move(dims), std::vector<double>(n, 0.0)});
    };
    add("lift.weight", {N, T});
    add("lift.bias", {N});
    add("full1.weight", {C, N, 3, 3});
    add("full1.bias", {C});
    add("full2.weight", {C, C, 3, 3});
    add("full2.bias", {C});
    add("half1.weight", {C, N, 3, 3});
    add("half1.bias", {C});
    add("half2.weight", {C, C, 3, 3});
    add("half2.bias", {C});
    add("out.weight", {N, C, 3, 3});
    add("out.bias", {N});
}

ReconNet::ReconNet(NetShape shape, unsigned long long seed) : ReconNet(std::move(shape)) {
    seed_ = seed;
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < params_.size(); i += 2) {
        auto& w = params_[i];
        const std::size_t fan_in = w.values.size() / w.shape[0];
        const double a = std::sqrt(1.0 / static_cast<double>(fan_in));
        std::uniform_real_distribution<double> uni(-a, a);
        for (double& v : w.values) v = uni(rng);
        for (double& v : params_[i + 1].values) v = uni(rng);
    }
}

ReconNet ReconNet::zeros(NetShape shape) { return ReconNet(std::move(shape)); }

std::size_t ReconNet::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.values.size();
    return n;
}

std::size_t ReconNet::parameter_count(std::size_t N, std::size_t C, std::size_t s) {
    const std::size_t T = (N - 1) * s + 1;
    return N * T + N                 // lift
           + 2 * (C * N * 9 + C)     // full1, half1
           + 2 * (C * C * 9 + C)     // full2, half2
           + N * C * 9 + N;          // out
}

Gradients ReconNet::zero_gradients() const {
    Gradients g;
    g.reserve(params_.size());
    for (const auto& p : params_) g.emplace_back(p.values.size(), 0.0);
    return g;
}

bool ReconNet::operator==(const ReconNet& other) const {
    if (!(shape_ == other.shape_) || params_.size() != other.params_.size()) return false;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].name != other.params_[i].name || params_[i].shape != other.params_[i].shape ||
            params_[i].values != other.params_[i].values)
            return false;
    }
    return true;
}

void ReconNet::check_frame(const CompressedFrame& frame) const {
    if (frame.width() != shape_.frame_width() || frame.height() != shape_.height) {
        throw DimensionError("recon net: frame " + std::to_string(frame.width()) + "x" +
                             std::to_string(frame.height()) + " does not match configured " +
                             std::to_string(shape_.frame_width()) + "x" + std::to_string(shape_.height));
    }
}

ReconNet::Activations ReconNet::forward_cached(const CompressedFrame& frame) const {
    check_frame(frame);
    const std::size_t X = shape_.width;
    const std::size_t Y = shape_.height;
    const std::size_t N = shape_.bands();
    const std::size_t C = shape_.hidden;
    const std::size_t T = shape_.taps();
    const std::size_t FW = shape_.frame_width();
    const std::size_t X2 = shape_.half_width();
    const std::size_t Y2 = shape_.half_height();
    const Dims full_n{N, Y, X};
    const Dims full_c{C, Y, X};
    const Dims half_n{N, Y2, X2};
    const Dims half_c{C, Y2, X2};

    Activations a;
    a.frame = frame.values();

    const auto& lw = params_[kLiftWeight].values;
    const auto& lb = params_[kLiftBias].values;
    a.lifted.assign(full_n.size(), 0.0);
    for (std::size_t c = 0; c < N; ++c)
        for (std::size_t y = 0; y < Y; ++y)
            for (std::size_t x = 0; x < X; ++x) {
                double acc = lb[c];
                const double* row = a.frame.data() + y * FW + x;
                for (std::size_t k = 0; k < T; ++k) acc += lw[c * T + k] * row[k];
                a.lifted[(c * Y + y) * X + x] = acc;
            }

    a.full1 = conv3x3(a.lifted, full_n, params_[kFull1Weight].values, params_[kFull1Bias].values, C);
    relu_inplace(a.full1);
    a.full2 = conv3x3(a.full1, full_c, params_[kFull2Weight].values, params_[kFull2Bias].values, C);
    relu_inplace(a.full2);

    a.pooled = pool2(a.lifted, full_n, Y2, X2);
    a.half1 = conv3x3(a.pooled, half_n, params_[kHalf1Weight].values, params_[kHalf1Bias].values, C);
    relu_inplace(a.half1);
    a.half2 = conv3x3(a.half1, half_c, params_[kHalf2Weight].values, params_[kHalf2Bias].values, C);
    relu_inplace(a.half2);

    a.fused = upsample2(a.half2, full_c, Y2, X2);
    for (std::size_t i = 0; i < a.fused.size(); ++i) a.fused[i] += a.full2[i];

    a.output = conv3x3(a.fused, full_c, params_[kOutWeight].values, params_[kOutBias].values, N);
    for (std::size_t i = 0; i < a.output.size(); ++i) a.output[i] += a.lifted[i];
    return a;
}

HsiCube ReconNet::forward(const CompressedFrame& frame) const {
    auto a = forward_cached(frame);
    return {shape_.width, shape_.height, shape_.grid, std::move(a.output)};
}

Gradients ReconNet::backward(const Activations& a, const std::vector<double>& d_output) const {
    const std::size_t X = shape_.width;
    const std::size_t Y = shape_.height;
    const std::size_t N = shape_.bands();
    const std::size_t C = shape_.hidden;
    const std::size_t T = shape_.taps();
    const std::size_t FW = shape_.frame_width();
    const std::size_t X2 = shape_.half_width();
    const std::size_t Y2 = shape_.half_height();
    const Dims full_n{N, Y, X};
    const Dims full_c{C, Y, X};
    const Dims half_n{N, Y2, X2};
    const Dims half_c{C, Y2, X2};
    if (d_output.size() != full_n.size()) throw DimensionError("recon net backward: gradient size mismatch");

    Gradients g = zero_gradients();

    // Residual connection: output = lifted + out_conv(fused).
    std::vector<double> d_lifted = d_output;
    const auto d_fused = conv3x3_backward(a.fused, full_c, params_[kOutWeight].values, N, d_output, g[kOutWeight],
                                          g[kOutBias], true);

    // fused = full2 + upsample(half2)
    auto d_full2 = d_fused;
    auto d_half2 = upsample2_backward(d_fused, full_c, Y2, X2);

    relu_backward_inplace(d_half2, a.half2);
    auto d_half1 = conv3x3_backward(a.half1, half_c, params_[kHalf2Weight].values, C, d_half2, g[kHalf2Weight],
                                    g[kHalf2Bias], true);
    relu_backward_inplace(d_half1, a.half1);
    const auto d_pooled = conv3x3_backward(a.pooled, half_n, params_[kHalf1Weight].values, C, d_half1,
                                           g[kHalf1Weight], g[kHalf1Bias], true);
    pool2_backward(d_pooled, full_n, Y2, X2, d_lifted);

    relu_backward_inplace(d_full2, a.full2);
    auto d_full1 = conv3x3_backward(a.full1, full_c, params_[kFull2Weight].values, C, d_full2, g[kFull2Weight],
                                    g[kFull2Bias], true);
    relu_backward_inplace(d_full1, a.full1);
    const auto d_from_full = conv3x3_backward(a.lifted, full_n, params_[kFull1Weight].values, C, d_full1,
                                              g[kFull1Weight], g[kFull1Bias], true);
    for (std::size_t i = 0; i < d_lifted.size(); ++i) d_lifted[i] += d_from_full[i];

    auto& dlw = g[kLiftWeight];
    auto& dlb = g[kLiftBias];
    for (std::size_t c = 0; c < N; ++c)
        for (std::size_t y = 0; y < Y; ++y)
            for (std::size_t x = 0; x < X; ++x) {
                const double gv = d_lifted[(c * Y + y) * X + x];
                dlb[c] += gv;
                const double* row = a.frame.data() + y * FW + x;
                for (std::size_t k = 0; k < T; ++k) dlw[c * T + k] += gv * row[k];
            }
    return g;
}

void save_checkpoint(const ReconNet& net, const std::filesystem::path& path, const std::optional<std::string>& config_json) {
    using nlohmann::json;
    if (path.empty()) throw std::runtime_error("save_checkpoint: empty path");
    const auto paths = container_paths(path);
    const auto& s = net.shape();
    json layers = json::array();
    for (const auto& p : net.params()) layers.push_back({{"name", p.name}, {"shape", p.shape}});
    json manifest = {
        {"format", "dcsi-reconnet"},
        {"width", s.width},
        {"height", s.height},
        {"bands", s.bands()},
        {"start_nm", s.grid.start_nm},
        {"step_nm", s.grid.step_nm},
        {"hidden", s.hidden},
        {"shift_step", s.shift_step},
        {"seed", net.seed()},
        {"dtype", "f64"},
        {"layers", layers},
    };
    if (config_json) manifest["config"] = json::parse(*config_json);

    std::ofstream header(paths.header);
    if (!header) throw std::runtime_error("cannot open " + paths.header.string() + " for writing");
    header << manifest.dump(2) << '\n';
    std::ofstream payload(paths.payload, std::ios::binary);
    if (!payload) throw std::runtime_error("cannot open " + paths.payload.string() + " for writing");
    for (const auto& p : net.params()) {
        for (double v : p.values) {
            const double le = to_little_endian(v);
            payload.write(reinterpret_cast<const char*>(&le), sizeof le);
        }
    }
    if (!header || !payload) throw std::runtime_error("checkpoint write failed: " + paths.header.string());
}

ReconNet load_checkpoint(const std::filesystem::path& path) {
    using nlohmann::json;
    const auto paths = container_paths(path);
    std::ifstream header(paths.header);
    if (!header) throw std::runtime_error("cannot open " + paths.header.string());
    json m;
    try {
        m = json::parse(header);
        if (m.at("format").get<std::string>() != "dcsi-reconnet") throw FormatError("not a reconnet checkpoint");
        NetShape s;
        s.width = m.at("width").get<std::size_t>();
        s.height = m.at("height").get<std::size_t>();
        s.grid = WavelengthGrid(m.at("start_nm").get<double>(), m.at("step_nm").get<double>(),
                                m.at("bands").get<std::size_t>());
        s.hidden = m.at("hidden").get<std::size_t>();
        s.shift_step = m.at("shift_step").get<std::size_t>();
        ReconNet net(s, m.at("seed").get<unsigned long long>());

        const auto& layers = m.at("layers");
        if (layers.size() != net.params().size()) throw FormatError("checkpoint layer count mismatch");
        std::ifstream payload(paths.payload, std::ios::binary);
        if (!payload) throw std::runtime_error("cannot open " + paths.payload.string());
        const std::vector<char> bytes((std::istreambuf_iterator<char>(payload)), std::istreambuf_iterator<char>());
        if (bytes.size() != net.parameter_count() * sizeof(double)) throw FormatError("checkpoint payload length mismatch");

        std::size_t offset = 0;
        for (std::size_t i = 0; i < layers.size(); ++i) {
            auto& p = net.params()[i];
            if (layers[i].at("name").get<std::string>() != p.name ||
                layers[i].at("shape").get<std::vector<std::size_t>>() != p.shape) {
                throw FormatError("checkpoint layer '" + layers[i].at("name").get<std::string>() +
                                  "' does not match architecture");
            }
            for (double& v : p.values) {
                double raw;
                std::memcpy(&raw, bytes.data() + offset, sizeof raw);
                v = to_little_endian(raw);
                offset += sizeof raw;
            }
        }
        return net;
    } catch (const json::exception& e) {
        throw FormatError("malformed checkpoint manifest: " + std::string(e.what()));
    }
}

}  // namespace dcsi
