#include "dcsi/cube_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json.hpp"

namespace dcsi {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

template <class T>
T byteswap_if_needed(T v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        unsigned char bytes[sizeof(T)];
        std::memcpy(bytes, &v, sizeof(T));
        std::reverse(std::begin(bytes), std::end(bytes));
        std::memcpy(&v, bytes, sizeof(T));
        return v;
    }
}

struct Header {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t bands = 0;
    double start_nm = 0.0;
    double step_nm = 1.0;
    double peak = 1.0;
    SampleType dtype = SampleType::F64;
    std::string kind;
};

void write_container(const fs::path& path, const Header& h, const std::vector<double>& values) {
    if (path.empty()) throw std::runtime_error("save: empty path");
    const auto paths = container_paths(path);
    json j = {
        {"width", h.width},
        {"height", h.height},
        {"bands", h.bands},
        {"start_nm", h.start_nm},
        {"step_nm", h.step_nm},
        {"peak", h.peak},
        {"dtype", h.dtype == SampleType::F32 ? "f32" : "f64"},
        {"order", "band-major"},
    };
    if (!h.kind.empty()) j["kind"] = h.kind;

    std::ofstream header(paths.header);
    if (!header) throw std::runtime_error("cannot open " + paths.header.string() + " for writing");
    header << j.dump(2) << '\n';
    if (!header) throw std::runtime_error("write failed: " + paths.header.string());

    std::ofstream payload(paths.payload, std::ios::binary);
    if (!payload) throw std::runtime_error("cannot open " + paths.payload.string() + " for writing");
    for (double v : values) {
        if (h.dtype == SampleType::F32) {
            const float f = byteswap_if_needed(static_cast<float>(v));
            payload.write(reinterpret_cast<const char*>(&f), sizeof f);
        } else {
            const double d = byteswap_if_needed(v);
            payload.write(reinterpret_cast<const char*>(&d), sizeof d);
        }
    }
    if (!payload) throw std::runtime_error("write failed: " + paths.payload.string());
}

template <class T>
T required(const json& j, const char* key) {
    if (!j.contains(key)) throw FormatError(std::string("header missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("header field '") + key + "': " + e.what());
    }
}

std::pair<Header, std::vector<double>> read_container(const fs::path& path) {
    const auto paths = container_paths(path);
    std::ifstream header_in(paths.header);
    if (!header_in) throw std::runtime_error("cannot open " + paths.header.string());

    json j;
    try {
        j = json::parse(header_in);
    } catch (const json::parse_error& e) {
        throw FormatError("malformed header " + paths.header.string() + ": " + e.what());
    }
    if (!j.is_object()) throw FormatError("header is not a JSON object");

    Header h;
    const auto width = required<std::int64_t>(j, "width");
    const auto height = required<std::int64_t>(j, "height");
    const auto bands = required<std::int64_t>(j, "bands");
    if (width < 1 || height < 1 || bands < 1) throw FormatError("header dimensions must be positive");
    h.width = static_cast<std::size_t>(width);
    h.height = static_cast<std::size_t>(height);
    h.bands = static_cast<std::size_t>(bands);
    h.start_nm = required<double>(j, "start_nm");
    h.step_nm = required<double>(j, "step_nm");
    h.peak = required<double>(j, "peak");
    if (!(h.peak > 0.0) || !std::isfinite(h.peak)) throw FormatError("header peak must be positive");
    if (!(h.step_nm > 0.0)) throw FormatError("header step_nm must be positive");
    const auto dtype = required<std::string>(j, "dtype");
    if (dtype == "f32") {
        h.dtype = SampleType::F32;
    } else if (dtype == "f64") {
        h.dtype = SampleType::F64;
    } else {
        throw FormatError("unsupported dtype '" + dtype + "'");
    }
    if (required<std::string>(j, "order") != "band-major") throw FormatError("only band-major order is supported");
    if (j.contains("kind")) h.kind = required<std::string>(j, "kind");

    std::ifstream payload(paths.payload, std::ios::binary);
    if (!payload) throw std::runtime_error("cannot open " + paths.payload.string());
    const std::vector<char> bytes((std::istreambuf_iterator<char>(payload)), std::istreambuf_iterator<char>());

    const std::size_t count = h.width * h.height * h.bands;
    const std::size_t sample = h.dtype == SampleType::F32 ? sizeof(float) : sizeof(double);
    if (bytes.size() != count * sample) {
        throw FormatError("payload length mismatch: expected " + std::to_string(count * sample) + " bytes, found " +
                          std::to_string(bytes.size()));
    }

    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) {
        double v;
        if (h.dtype == SampleType::F32) {
            float f;
            std::memcpy(&f, bytes.data() + i * sample, sample);
            v = byteswap_if_needed(f);
        } else {
            std::memcpy(&v, bytes.data() + i * sample, sample);
            v = byteswap_if_needed(v);
        }
        if (!std::isfinite(v)) throw FormatError("non-finite sample at index " + std::to_string(i));
        values[i] = v;
    }
    return {h, std::move(values)};
}

}  // namespace

ContainerPaths container_paths(const fs::path& path) {
    fs::path base = path;
    if (base.extension() == ".json" || base.extension() == ".bin") base.replace_extension();
    fs::path header = base;
    header += ".json";
    fs::path payload = base;
    payload += ".bin";
    return {header, payload};
}

HsiCube load_cube(const fs::path& path) {
    auto [h, values] = read_container(path);
    if (!h.kind.empty()) throw FormatError("file holds a '" + h.kind + "' frame, not a cube");
    for (double& v : values) {
        v /= h.peak;
        if (v < 0.0 || v > 1.0) throw FormatError("sample outside [0, peak] in " + path.string());
    }
    return {h.width, h.height, WavelengthGrid(h.start_nm, h.step_nm, h.bands), std::move(values)};
}

void save_cube(const HsiCube& cube, const fs::path& path, SampleType dtype) {
    Header h;
    h.width = cube.width();
    h.height = cube.height();
    h.bands = cube.bands();
    h.start_nm = cube.grid().start_nm;
    h.step_nm = cube.grid().step_nm;
    h.peak = 1.0;
    h.dtype = dtype;
    write_container(path, h, cube.data());
}

HsiCube crop_patch(const HsiCube& cube, std::size_t x0, std::size_t y0, std::size_t w, std::size_t h) {
    if (w == 0 || h == 0 || x0 + w > cube.width() || y0 + h > cube.height()) {
        throw DimensionError("crop window " + std::to_string(w) + "x" + std::to_string(h) + " at (" +
                             std::to_string(x0) + "," + std::to_string(y0) + ") exceeds " +
                             std::to_string(cube.width()) + "x" + std::to_string(cube.height()));
    }
    HsiCube out(w, h, cube.grid());
    for (std::size_t b = 0; b < cube.bands(); ++b)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) out.at(x, y, b) = cube.at(x0 + x, y0 + y, b);
    return out;
}

void save_frame(const CompressedFrame& frame, const fs::path& path) {
    Header h{frame.width(), frame.height(), 1, 0.0, 1.0, 1.0, SampleType::F64, "cassi"};
    write_container(path, h, frame.values());
}

void save_frame(const RawColorFrame& frame, const fs::path& path) {
    Header h{frame.width(), frame.height(), 1, 0.0, 1.0, 1.0, SampleType::F64, "bayer-rggb"};
    write_container(path, h, frame.values());
}

namespace {

std::pair<Header, std::vector<double>> read_frame(const fs::path& path, const std::string& kind) {
    auto [h, values] = read_container(path);
    if (h.kind != kind) throw FormatError("expected a '" + kind + "' frame, found '" + h.kind + "'");
    if (h.bands != 1) throw FormatError("frames must have bands = 1");
    for (double& v : values) v /= h.peak;
    return {h, std::move(values)};
}

}  // namespace

CompressedFrame load_compressed_frame(const fs::path& path) {
    auto [h, values] = read_frame(path, "cassi");
    return {h.width, h.height, std::move(values)};
}

RawColorFrame load_color_frame(const fs::path& path) {
    auto [h, values] = read_frame(path, "bayer-rggb");
    return {h.width, h.height, std::move(values)};
}

}  // namespace dcsi
