#pragma once

// Physics-informed self-supervised reconstruction.
//
// The network only ever sees measurements. Its output cube is pushed back
// through both acquisition branches and compared with what each camera
// recorded; the two mean-squared errors drive training:
//   loss_gray  = mean_pixels (cassi_forward(net(f_gray)) - f_gray)^2
//   loss_color = mean_pixels (color_forward(net(f_gray)) - f_color)^2
//   total      = w_gray * loss_gray + w_color * loss_color

#include <filesystem>
#include <utility>
#include <vector>

#include "dcsi/forward_model.hpp"
#include "dcsi/recon_net.hpp"

namespace dcsi {

struct Physics {
    CassiOperator cassi;
    ColorOperator color;
};

struct LossWeights {
    double gray = 1.0;
    double color = 1.0;
};

struct DualLoss {
    double loss_color = 0.0;
    double loss_gray = 0.0;
    double total = 0.0;
};

/// One pair of simultaneous captures of a scene.
struct MeasurementPair {
    CompressedFrame gray;
    RawColorFrame color;
};

enum class Optimizer { Sgd, Adam };

struct TrainConfig {
    int epochs = 1200;
    /// Pairs per gradient step; 0 uses every pair.
    int batch = 0;
    double lr0 = 1e-3;
    /// Multiplier applied every lr_decay_every epochs (1/5 by default).
    double lr_decay_factor = 0.2;
    int lr_decay_every = 300;
    LossWeights loss_weights;
    Optimizer optimizer = Optimizer::Sgd;
    unsigned long long seed = 0;

    void validate() const;
    double learning_rate(int epoch) const;
};

struct LossTraceEntry {
    int epoch = 0;
    DualLoss loss;
};

using LossTrace = std::vector<LossTraceEntry>;

DualLoss dual_loss(const HsiCube& cube, const Physics& physics, const CompressedFrame& f_gray,
                   const RawColorFrame& f_color, LossWeights weights);

/// Loss and exact gradients of `total` with respect to every weight array.
std::pair<DualLoss, Gradients> backprop(const ReconNet& net, const CompressedFrame& frame, const Physics& physics,
                                        const CompressedFrame& f_gray, const RawColorFrame& f_color,
                                        LossWeights weights);

/// Trains `net` on measurement pairs only. Returns the updated network and the
/// per-epoch mean loss over pairs, each evaluated before that pair's update.
std::pair<ReconNet, LossTrace> train_selfsup(ReconNet net, const std::vector<MeasurementPair>& pairs,
                                             const Physics& physics, const TrainConfig& cfg);

/// Single forward pass; the color camera is not needed at inference.
HsiCube reconstruct_selfsup(const ReconNet& trained, const CompressedFrame& frame);

/// Columns epoch, loss_gray, loss_color, total.
void write_loss_trace_csv(const LossTrace& trace, const std::filesystem::path& path);

}  // namespace dcsi
