#pragma once

// Shared helpers for the test binaries.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "dcsi/core.hpp"

namespace dcsi::test {

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("dcsi_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline HsiCube random_cube(std::size_t w, std::size_t h, std::size_t n, unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    HsiCube cube(w, h, WavelengthGrid::visible(n));
    for (double& v : cube.data()) v = uni(rng);
    return cube;
}

template <class PlaneT>
PlaneT random_plane(std::size_t w, std::size_t h, unsigned long long seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(lo, hi);
    PlaneT p(w, h);
    for (double& v : p.values()) v = uni(rng);
    return p;
}

inline CodedAperture random_binary_mask(std::size_t w, std::size_t h, unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    CodedAperture m(w, h);
    for (double& v : m.values()) v = coin(rng) ? 1.0 : 0.0;
    return m;
}

/// |a - b| / max(|a|, |b|, floor)
inline double relative_error(double a, double b, double floor = 1e-300) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace dcsi::test
