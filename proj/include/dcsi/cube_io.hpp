#pragma once

// Cube container: a JSON header `<base>.json` next to a raw little-endian
// payload `<base>.bin`. The header carries
//   width, height, bands, start_nm, step_nm, peak, dtype ("f32"|"f64"), order ("band-major")
// and, for measurement frames (bands = 1), a "kind" of "cassi" or "bayer-rggb".
//
// Paths passed to these functions may name the base, the .json or the .bin file.

#include <filesystem>
#include <string>

#include "dcsi/core.hpp"

namespace dcsi {

enum class SampleType { F32, F64 };

struct ContainerPaths {
    std::filesystem::path header;
    std::filesystem::path payload;
};

ContainerPaths container_paths(const std::filesystem::path& path);

/// Loads a cube and divides every sample by the header's peak. Rejects
/// samples that land outside [0,1] after rescaling.
HsiCube load_cube(const std::filesystem::path& path);

/// Writes with peak 1, so load_cube(save_cube(c)) reproduces c at the stored precision.
void save_cube(const HsiCube& cube, const std::filesystem::path& path, SampleType dtype = SampleType::F64);

/// Copies the window [x0, x0+w) x [y0, y0+h) across all bands.
HsiCube crop_patch(const HsiCube& cube, std::size_t x0, std::size_t y0, std::size_t w, std::size_t h);

void save_frame(const CompressedFrame& frame, const std::filesystem::path& path);
void save_frame(const RawColorFrame& frame, const std::filesystem::path& path);
CompressedFrame load_compressed_frame(const std::filesystem::path& path);
RawColorFrame load_color_frame(const std::filesystem::path& path);

}  // namespace dcsi
