#include "dcsi/selfsup.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace dcsi {
namespace {

void check_measurements(const Physics& physics, const CompressedFrame& f_gray, const RawColorFrame& f_color) {
    const auto& op = physics.cassi;
    if (f_gray.width() != op.frame_width() || f_gray.height() != op.height()) {
        throw DimensionError("dual loss: gray frame does not match the CASSI operator");
    }
    if (f_color.width() != op.width() || f_color.height() != op.height()) {
        throw DimensionError("dual loss: color frame does not match the scene size");
    }
    if (physics.color.bands() != op.bands) throw DimensionError("dual loss: branch band counts differ");
}

// Residuals of both branches for a cube.
struct Residuals {
    CompressedFrame gray;
    RawColorFrame color;
};

Residuals residuals(const HsiCube& cube, const Physics& physics, const CompressedFrame& f_gray,
                    const RawColorFrame& f_color) {
    Residuals r{cassi_forward(cube, physics.cassi), color_forward(cube, physics.color)};
    for (std::size_t i = 0; i < r.gray.size(); ++i) r.gray.values()[i] -= f_gray.values()[i];
    for (std::size_t i = 0; i < r.color.size(); ++i) r.color.values()[i] -= f_color.values()[i];
    return r;
}

double mean_square(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return acc / static_cast<double>(v.size());
}

DualLoss combine(double gray, double color, LossWeights w) { return {color, gray, w.gray * gray + w.color * color}; }

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
    if (batch < 0) throw std::invalid_argument("train: batch must be >= 0");
    if (!(lr0 >= 0.0)) throw std::invalid_argument("train: lr0 must be >= 0");
    if (!(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0)) throw std::invalid_argument("train: lr_decay_factor must be in (0, 1]");
    if (lr_decay_every < 1) throw std::invalid_argument("train: lr_decay_every must be >= 1");
    if (!(loss_weights.gray >= 0.0 && loss_weights.color >= 0.0)) throw std::invalid_argument("train: loss weights must be >= 0");
}

double TrainConfig::learning_rate(int epoch) const {
    return lr0 * std::pow(lr_decay_factor, static_cast<double>(epoch / lr_decay_every));
}

DualLoss dual_loss(const HsiCube& cube, const Physics& physics, const CompressedFrame& f_gray,
                   const RawColorFrame& f_color, LossWeights weights) {
    check_measurements(physics, f_gray, f_color);
    const auto r = residuals(cube, physics, f_gray, f_color);
    return combine(mean_square(r.gray.values()), mean_square(r.color.values()), weights);
}

std::pair<DualLoss, Gradients> backprop(const ReconNet& net, const CompressedFrame& frame, const Physics& physics,
                                        const CompressedFrame& f_gray, const RawColorFrame& f_color,
                                        LossWeights weights) {
    check_measurements(physics, f_gray, f_color);
    const auto acts = net.forward_cached(frame);
    const auto& s = net.shape();
    const HsiCube cube(s.width, s.height, s.grid, acts.output);

    auto r = residuals(cube, physics, f_gray, f_color);
    const DualLoss loss = combine(mean_square(r.gray.values()), mean_square(r.color.values()), weights);

    // d(mean r^2)/d(cube) = (2 / M) A^T r for each branch.
    const double g_scale = 2.0 * weights.gray / static_cast<double>(r.gray.size());
    const double c_scale = 2.0 * weights.color / static_cast<double>(r.color.size());
    for (double& v : r.gray.values()) v *= g_scale;
    for (double& v : r.color.values()) v *= c_scale;
    auto d_cube = cassi_adjoint(r.gray, physics.cassi, &s.grid);
    const auto d_color = color_adjoint(r.color, physics.color, &s.grid);
    for (std::size_t i = 0; i < d_cube.size(); ++i) d_cube.data()[i] += d_color.data()[i];

    return {loss, net.backward(acts, d_cube.data())};
}

std::pair<ReconNet, LossTrace> train_selfsup(ReconNet net, const std::vector<MeasurementPair>& pairs,
                                             const Physics& physics, const TrainConfig& cfg) {
    cfg.validate();
    if (pairs.empty()) throw std::invalid_argument("train_selfsup: no measurement pairs");
    for (const auto& p : pairs) {
        if (p.gray.width() != pairs.front().gray.width() || p.gray.height() != pairs.front().gray.height() ||
            p.color.width() != pairs.front().color.width() || p.color.height() != pairs.front().color.height()) {
            throw DimensionError("train_selfsup: measurement pairs differ in size");
        }
        check_measurements(physics, p.gray, p.color);
    }

    const std::size_t batch = cfg.batch > 0 ? static_cast<std::size_t>(cfg.batch) : pairs.size();
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);

    // Adam moments; unused for SGD.
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;
    Gradients m1, m2;
    if (cfg.optimizer == Optimizer::Adam) {
        m1 = net.zero_gradients();
        m2 = net.zero_gradients();
    }
    long long step = 0;

    LossTrace trace;
    trace.reserve(static_cast<std::size_t>(cfg.epochs));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (pairs.size() > 1) std::shuffle(order.begin(), order.end(), rng);
        const double lr = cfg.learning_rate(epoch);
        DualLoss sum;

        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t stop = std::min(order.size(), start + batch);
            Gradients grad = net.zero_gradients();
            for (std::size_t k = start; k < stop; ++k) {
                const auto& p = pairs[order[k]];
                auto [loss, g] = backprop(net, p.gray, physics, p.gray, p.color, cfg.loss_weights);
                sum.loss_gray += loss.loss_gray;
                sum.loss_color += loss.loss_color;
                sum.total += loss.total;
                for (std::size_t a = 0; a < grad.size(); ++a)
                    for (std::size_t i = 0; i < grad[a].size(); ++i) grad[a][i] += g[a][i];
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            ++step;
            auto& params = net.params();
            if (cfg.optimizer == Optimizer::Sgd) {
                for (std::size_t a = 0; a < params.size(); ++a)
                    for (std::size_t i = 0; i < params[a].values.size(); ++i) params[a].values[i] -= lr * inv * grad[a][i];
            } else {
                const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
                const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
                for (std::size_t a = 0; a < params.size(); ++a) {
                    for (std::size_t i = 0; i < params[a].values.size(); ++i) {
                        const double g = grad[a][i] * inv;
                        m1[a][i] = kBeta1 * m1[a][i] + (1.0 - kBeta1) * g;
                        m2[a][i] = kBeta2 * m2[a][i] + (1.0 - kBeta2) * g * g;
                        params[a].values[i] -= lr * (m1[a][i] / c1) / (std::sqrt(m2[a][i] / c2) + kEps);
                    }
                }
            }
        }

        const double n = static_cast<double>(pairs.size());
        if (!std::isfinite(sum.total)) {
            throw std::runtime_error("train: loss became non-finite at epoch " + std::to_string(epoch + 1) +
                                     "; lower lr0");
        }
        trace.push_back({epoch + 1, {sum.loss_color / n, sum.loss_gray / n, sum.total / n}});
    }
    return {std::move(net), std::move(trace)};
}

HsiCube reconstruct_selfsup(const ReconNet& trained, const CompressedFrame& frame) { return trained.forward(frame); }

void write_loss_trace_csv(const LossTrace& trace, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "epoch,loss_gray,loss_color,total\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& e : trace) {
        out << e.epoch << ',' << e.loss.loss_gray << ',' << e.loss.loss_color << ',' << e.loss.total << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace dcsi
