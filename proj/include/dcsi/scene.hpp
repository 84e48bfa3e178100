#pragma once

// Synthetic scenes and coded-aperture masks for desk-scale experiments.

#include <string>
#include <string_view>

#include "dcsi/core.hpp"

namespace dcsi {

enum class SceneFamily { SmoothBlobs, StepTargets, SpectralRamps };

SceneFamily parse_scene_family(std::string_view tag);
std::string to_string(SceneFamily family);

struct SceneSpec {
    std::size_t width = 32;
    std::size_t height = 32;
    std::size_t bands = 8;
    SceneFamily family = SceneFamily::SmoothBlobs;
    unsigned long long seed = 0;
    /// Additive Gaussian noise on both measurements.
    double noise_sigma = 0.0;
    /// Blob count for smooth-blobs, patches per side for step-targets; -1 picks the family default.
    int components = -1;

    WavelengthGrid grid() const { return WavelengthGrid::visible(bands); }
};

/// Deterministic cube with every sample in [0, 1].
///  smooth-blobs:   sum of spatial Gaussians, each carrying a Gaussian spectrum
///  step-targets:   grid of constant patches with distinct smooth spectra
///  spectral-ramps: per-pixel spectra linear in wavelength, varying linearly in space
HsiCube generate_scene(const SceneSpec& spec);

enum class MaskKind { Bernoulli, Hadamard };

MaskKind parse_mask_kind(std::string_view tag);
std::string to_string(MaskKind kind);

struct MaskSpec {
    MaskKind kind = MaskKind::Bernoulli;
    double density = 0.5;
    std::size_t order = 8;
    unsigned long long seed = 0;
};

/// Bernoulli: i.i.d. {0,1} with P(1) = density.
/// Hadamard: Sylvester matrix of `order` (a power of two) mapped +1 -> 1, -1 -> 0,
/// tiled periodically over the aperture.
CodedAperture generate_mask(const MaskSpec& spec, std::size_t width, std::size_t height);

}  // namespace dcsi
