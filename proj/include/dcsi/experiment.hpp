#pragma once

// Simulate -> reconstruct -> evaluate orchestration.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dcsi/metrics.hpp"
#include "dcsi/scene.hpp"
#include "dcsi/selfsup.hpp"
#include "dcsi/solvers.hpp"

namespace dcsi {

enum class Method { Twist, GapTv, SelfSup, SelfSupGrayOnly };

Method parse_method(std::string_view tag);
std::string to_string(Method method);

struct ExperimentConfig {
    SceneSpec scene;
    /// When set, the cube is loaded from this file instead of generated from `scene`.
    std::optional<std::filesystem::path> scene_file;
    MaskSpec mask;
    std::size_t shift_step = 1;
    std::vector<Method> methods{Method::Twist, Method::GapTv, Method::SelfSup, Method::SelfSupGrayOnly};
    SolverParams solver;
    TrainConfig train;
    std::size_t hidden_channels = 16;
    std::filesystem::path output_dir = "experiment_out";

    void validate() const;
};

/// Reads a JSON document mirroring ExperimentConfig. Missing fields keep their defaults.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
ExperimentConfig parse_experiment_config(const std::string& json_text);
std::string to_json(const ExperimentConfig& cfg);
std::string to_json(const TrainConfig& cfg);

/// Ground truth plus both simulated measurements.
struct Simulation {
    HsiCube truth;
    Physics physics;
    CompressedFrame gray;
    RawColorFrame color;
};

/// Default color branch for a grid: Gaussian RGB curves, flat illuminant.
ColorOperator default_color_operator(const WavelengthGrid& grid);

Simulation simulate(const HsiCube& truth, const CodedAperture& mask, std::size_t shift_step, double noise_sigma,
                    unsigned long long noise_seed);
Simulation simulate(const ExperimentConfig& cfg);

/// Directory layout shared by `simulate` and run_experiment:
///   scene/truth, scene/mask (1-band cube), measurements/cassi, measurements/bayer,
///   measurements/physics.json (shift step and wavelength grid).
void save_simulation(const Simulation& sim, const std::filesystem::path& root);

struct MeasurementSet {
    Physics physics;
    WavelengthGrid grid;
    CompressedFrame gray;
    RawColorFrame color;
};

/// Reads back what save_simulation wrote, minus the truth.
MeasurementSet load_measurements(const std::filesystem::path& root);

struct MethodOutcome {
    Method method;
    HsiCube reconstruction;  // clamped to [0, 1]
    MetricReport metrics;
    std::optional<SolveReport> solve_report;
    std::optional<LossTrace> loss_trace;
    std::optional<ReconNet> net;
    double wall_time = 0.0;
};

/// Runs one method on a simulation. Self-supervised methods train a fresh
/// network on the single measurement pair; the truth is only used for metrics.
MethodOutcome run_method(Method method, const Simulation& sim, const ExperimentConfig& cfg);

struct ExperimentReport {
    std::string scene_id;
    std::vector<MethodOutcome> outcomes;
};

/// Writes, under cfg.output_dir:
///   scene/truth, scene/mask, measurements/cassi, measurements/bayer   (cube containers)
///   <method>/reconstruction, <method>/trace.csv, <method>/probes.csv, <method>/renders/*.pgm
///   <method>/checkpoint (self-supervised methods)
///   metrics.csv, run.log (wall-clock times; the only non-deterministic file)
ExperimentReport run_experiment(const ExperimentConfig& cfg);

std::string scene_id(const ExperimentConfig& cfg);

/// Quadrant centres, used as spectral probe locations.
std::vector<std::pair<std::size_t, std::size_t>> probe_locations(std::size_t width, std::size_t height);

/// Columns probe, x, y, band, wavelength_nm, truth, reconstruction.
void write_probe_csv(const HsiCube& truth, const HsiCube& recon, const std::filesystem::path& path);

/// One 8-bit binary PGM per band plus a max-projection composite.
void write_band_renders(const HsiCube& cube, const std::filesystem::path& dir);

}  // namespace dcsi
