#pragma once

// Iterative CASSI reconstruction baselines: GAP-TV and monotone TwIST, both
// built on an anisotropic per-band total-variation denoiser.

#include <filesystem>
#include <utility>
#include <vector>

#include "dcsi/core.hpp"
#include "dcsi/forward_model.hpp"

namespace dcsi {

struct SolverParams {
    int max_iters = 100;
    double tv_weight = 0.02;
    int tv_inner_iters = 10;
    /// Stop once ||h_{k+1} - h_k|| / ||h_k|| < tol.
    double tol = 1e-5;
    /// Two-step coefficients; non-positive values select the standard defaults.
    double twist_alpha = 0.0;
    double twist_beta = 0.0;
    /// Seeds the power-iteration start vector.
    unsigned long long seed = 0;

    void validate() const;
};

struct SolveReport {
    int iterations_run = 0;
    std::vector<double> objective_trace;
    /// GAP-TV: max-norm data residual right after each projection, on covered rows.
    /// TwIST: max-norm data residual of each accepted iterate.
    std::vector<double> data_residual_trace;
    double wall_time = 0.0;

    /// Columns iter, objective, data_residual. Wall time is deliberately left out.
    void write_csv(const std::filesystem::path& path) const;
};

/// Anisotropic total variation summed over bands and both spatial axes.
double total_variation(const HsiCube& cube);

/// Approximately minimizes 0.5*||u - cube||^2 + weight*TV(u) with a fixed number of
/// projected dual gradient steps per band.
HsiCube tv_denoise(const HsiCube& cube, double weight, int iters);

/// 0.5*||Phi h - f||^2 + tv_weight * TV(h).
double cassi_objective(const HsiCube& cube, const CompressedFrame& frame, const CassiOperator& op, double tv_weight);

/// Largest eigenvalue of Phi^T Phi estimated by `iters` power iterations.
double estimate_phit_phi_norm(const CassiOperator& op, int iters, unsigned long long seed);

/// Standard TwIST coefficients for spectral bounds [lam1, 1] of the normalized operator.
std::pair<double, double> twist_default_coefficients(double lam1 = 1e-4);

std::pair<HsiCube, SolveReport> reconstruct_gaptv(const CompressedFrame& frame, const CassiOperator& op,
                                                  const SolverParams& p, const WavelengthGrid* grid = nullptr);

std::pair<HsiCube, SolveReport> reconstruct_twist(const CompressedFrame& frame, const CassiOperator& op,
                                                  const SolverParams& p, const WavelengthGrid* grid = nullptr);

}  // namespace dcsi
