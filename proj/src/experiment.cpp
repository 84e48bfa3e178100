#include "dcsi/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

#include "dcsi/cube_io.hpp"
#include "json.hpp"

namespace dcsi {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

template <class T>
void read_opt(const json& j, const char* key, T& dst) {
    if (j.contains(key)) dst = j.at(key).get<T>();
}

std::string optimizer_tag(Optimizer o) { return o == Optimizer::Adam ? "adam" : "sgd"; }

Optimizer parse_optimizer(const std::string& tag) {
    if (tag == "sgd") return Optimizer::Sgd;
    if (tag == "adam") return Optimizer::Adam;
    throw std::invalid_argument("unknown optimizer '" + tag + "'");
}

json train_json(const TrainConfig& t) {
    return {
        {"epochs", t.epochs},
        {"batch", t.batch},
        {"lr0", t.lr0},
        {"lr_decay_factor", t.lr_decay_factor},
        {"lr_decay_every", t.lr_decay_every},
        {"loss_weights", {{"w_gray", t.loss_weights.gray}, {"w_color", t.loss_weights.color}}},
        {"optimizer", optimizer_tag(t.optimizer)},
        {"seed", t.seed},
    };
}

void clamp_unit(HsiCube& cube) {
    for (double& v : cube.data()) v = std::clamp(v, 0.0, 1.0);
}

void write_pgm(const fs::path& path, std::size_t width, std::size_t height, const std::vector<double>& values) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "P5\n" << width << ' ' << height << "\n255\n";
    for (double v : values) {
        const auto byte = static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
        out.put(static_cast<char>(byte));
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

Method parse_method(std::string_view tag) {
    if (tag == "twist") return Method::Twist;
    if (tag == "gaptv") return Method::GapTv;
    if (tag == "selfsup") return Method::SelfSup;
    if (tag == "selfsup-gray-only") return Method::SelfSupGrayOnly;
    throw std::invalid_argument("unknown method '" + std::string(tag) + "'");
}

std::string to_string(Method method) {
    switch (method) {
        case Method::Twist: return "twist";
        case Method::GapTv: return "gaptv";
        case Method::SelfSup: return "selfsup";
        case Method::SelfSupGrayOnly: return "selfsup-gray-only";
    }
    return "unknown";
}

void ExperimentConfig::validate() const {
    if (methods.empty()) throw std::invalid_argument("experiment: select at least one method");
    if (shift_step < 1) throw std::invalid_argument("experiment: shift_step must be >= 1");
    solver.validate();
    train.validate();
}

ExperimentConfig parse_experiment_config(const std::string& text) {
    ExperimentConfig cfg;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("experiment config: ") + e.what());
    }
    try {
        if (j.contains("scene")) {
            const auto& s = j.at("scene");
            read_opt(s, "width", cfg.scene.width);
            read_opt(s, "height", cfg.scene.height);
            read_opt(s, "bands", cfg.scene.bands);
            if (s.contains("family")) cfg.scene.family = parse_scene_family(s.at("family").get<std::string>());
            read_opt(s, "seed", cfg.scene.seed);
            read_opt(s, "noise_sigma", cfg.scene.noise_sigma);
            read_opt(s, "components", cfg.scene.components);
            if (s.contains("file")) cfg.scene_file = s.at("file").get<std::string>();
        }
        if (j.contains("mask")) {
            const auto& m = j.at("mask");
            if (m.contains("kind")) cfg.mask.kind = parse_mask_kind(m.at("kind").get<std::string>());
            read_opt(m, "density", cfg.mask.density);
            read_opt(m, "order", cfg.mask.order);
            read_opt(m, "seed", cfg.mask.seed);
        }
        read_opt(j, "shift_step", cfg.shift_step);
        if (j.contains("methods")) {
            cfg.methods.clear();
            for (const auto& m : j.at("methods")) cfg.methods.push_back(parse_method(m.get<std::string>()));
        }
        if (j.contains("solver")) {
            const auto& s = j.at("solver");
            read_opt(s, "max_iters", cfg.solver.max_iters);
            read_opt(s, "tv_weight", cfg.solver.tv_weight);
            read_opt(s, "tv_inner_iters", cfg.solver.tv_inner_iters);
            read_opt(s, "tol", cfg.solver.tol);
            read_opt(s, "twist_alpha", cfg.solver.twist_alpha);
            read_opt(s, "twist_beta", cfg.solver.twist_beta);
            read_opt(s, "seed", cfg.solver.seed);
        }
        if (j.contains("train")) {
            const auto& t = j.at("train");
            read_opt(t, "epochs", cfg.train.epochs);
            read_opt(t, "batch", cfg.train.batch);
            read_opt(t, "lr0", cfg.train.lr0);
            read_opt(t, "lr_decay_factor", cfg.train.lr_decay_factor);
            read_opt(t, "lr_decay_every", cfg.train.lr_decay_every);
            if (t.contains("loss_weights")) {
                read_opt(t.at("loss_weights"), "w_gray", cfg.train.loss_weights.gray);
                read_opt(t.at("loss_weights"), "w_color", cfg.train.loss_weights.color);
            }
            if (t.contains("optimizer")) cfg.train.optimizer = parse_optimizer(t.at("optimizer").get<std::string>());
            read_opt(t, "seed", cfg.train.seed);
        }
        read_opt(j, "hidden_channels", cfg.hidden_channels);
        if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("experiment config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_experiment_config(buf.str());
}

std::string to_json(const TrainConfig& cfg) { return train_json(cfg).dump(); }

std::string to_json(const ExperimentConfig& cfg) {
    json methods = json::array();
    for (auto m : cfg.methods) methods.push_back(to_string(m));
    json scene = {
        {"width", cfg.scene.width},   {"height", cfg.scene.height},           {"bands", cfg.scene.bands},
        {"family", to_string(cfg.scene.family)}, {"seed", cfg.scene.seed}, {"noise_sigma", cfg.scene.noise_sigma},
        {"components", cfg.scene.components},
    };
    if (cfg.scene_file) scene["file"] = cfg.scene_file->string();
    json j = {
        {"scene", scene},
        {"mask", {{"kind", to_string(cfg.mask.kind)}, {"density", cfg.mask.density}, {"order", cfg.mask.order}, {"seed", cfg.mask.seed}}},
        {"shift_step", cfg.shift_step},
        {"methods", methods},
        {"solver",
         {{"max_iters", cfg.solver.max_iters},
          {"tv_weight", cfg.solver.tv_weight},
          {"tv_inner_iters", cfg.solver.tv_inner_iters},
          {"tol", cfg.solver.tol},
          {"twist_alpha", cfg.solver.twist_alpha},
          {"twist_beta", cfg.solver.twist_beta},
          {"seed", cfg.solver.seed}}},
        {"train", train_json(cfg.train)},
        {"hidden_channels", cfg.hidden_channels},
        {"output_dir", cfg.output_dir.string()},
    };
    return j.dump(2);
}

ColorOperator default_color_operator(const WavelengthGrid& grid) {
    return {SpectralResponse::gaussian_default(grid), Illuminant::flat(grid.bands)};
}

Simulation simulate(const HsiCube& truth, const CodedAperture& mask, std::size_t shift_step, double noise_sigma,
                    unsigned long long noise_seed) {
    if (mask.width() != truth.width() || mask.height() != truth.height()) {
        throw DimensionError("simulate: mask size differs from the scene");
    }
    Physics physics{CassiOperator(mask, truth.bands(), shift_step), default_color_operator(truth.grid())};
    auto gray = cassi_forward(truth, physics.cassi);
    auto color = color_forward(truth, physics.color);
    if (noise_sigma > 0.0) {
        std::mt19937_64 rng(noise_seed);
        std::normal_distribution<double> noise(0.0, noise_sigma);
        for (double& v : gray.values()) v += noise(rng);
        for (double& v : color.values()) v += noise(rng);
    }
    return {truth, std::move(physics), std::move(gray), std::move(color)};
}

Simulation simulate(const ExperimentConfig& cfg) {
    const HsiCube truth = cfg.scene_file ? load_cube(*cfg.scene_file) : generate_scene(cfg.scene);
    const auto mask = generate_mask(cfg.mask, truth.width(), truth.height());
    return simulate(truth, mask, cfg.shift_step, cfg.scene.noise_sigma, cfg.scene.seed ^ 0x9e3779b97f4a7c15ULL);
}

void save_simulation(const Simulation& sim, const fs::path& root) {
    fs::create_directories(root / "scene");
    fs::create_directories(root / "measurements");
    save_cube(sim.truth, root / "scene" / "truth");
    save_cube(HsiCube(sim.truth.width(), sim.truth.height(), WavelengthGrid(0.0, 1.0, 1), sim.physics.cassi.mask.values()),
              root / "scene" / "mask");
    save_frame(sim.gray, root / "measurements" / "cassi");
    save_frame(sim.color, root / "measurements" / "bayer");
    const auto& g = sim.truth.grid();
    const json physics = {
        {"shift_step", sim.physics.cassi.shift_step},
        {"bands", g.bands},
        {"start_nm", g.start_nm},
        {"step_nm", g.step_nm},
        {"response", "gaussian-default"},
        {"illuminant", "flat"},
    };
    std::ofstream out(root / "measurements" / "physics.json");
    out << physics.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + (root / "measurements" / "physics.json").string());
}

MeasurementSet load_measurements(const fs::path& root) {
    const fs::path manifest = root / "measurements" / "physics.json";
    std::ifstream in(manifest);
    if (!in) throw std::runtime_error("cannot open " + manifest.string());
    std::size_t shift = 1;
    WavelengthGrid grid;
    try {
        const json j = json::parse(in);
        shift = j.at("shift_step").get<std::size_t>();
        grid = WavelengthGrid(j.at("start_nm").get<double>(), j.at("step_nm").get<double>(), j.at("bands").get<std::size_t>());
    } catch (const json::exception& e) {
        throw FormatError(manifest.string() + ": " + e.what());
    }
    const HsiCube mask_cube = load_cube(root / "scene" / "mask");
    if (mask_cube.bands() != 1) throw FormatError("scene/mask must hold a single band");
    CodedAperture mask(mask_cube.width(), mask_cube.height(), mask_cube.data());
    MeasurementSet m{{CassiOperator(std::move(mask), grid.bands, shift), default_color_operator(grid)},
                     grid,
                     load_compressed_frame(root / "measurements" / "cassi"),
                     load_color_frame(root / "measurements" / "bayer")};
    if (m.gray.width() != m.physics.cassi.frame_width() || m.gray.height() != m.physics.cassi.height()) {
        throw DimensionError("measurements/cassi does not match the mask and band count");
    }
    if (m.color.width() != mask_cube.width() || m.color.height() != mask_cube.height()) {
        throw DimensionError("measurements/bayer does not match the mask size");
    }
    return m;
}

MethodOutcome run_method(Method method, const Simulation& sim, const ExperimentConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    MethodOutcome out{method, {}, {}, std::nullopt, std::nullopt, std::nullopt, 0.0};
    const auto& grid = sim.truth.grid();
    switch (method) {
        case Method::Twist:
        case Method::GapTv: {
            auto [cube, report] = method == Method::Twist ? reconstruct_twist(sim.gray, sim.physics.cassi, cfg.solver, &grid)
                                                          : reconstruct_gaptv(sim.gray, sim.physics.cassi, cfg.solver, &grid);
            out.reconstruction = std::move(cube);
            out.solve_report = std::move(report);
            break;
        }
        case Method::SelfSup:
        case Method::SelfSupGrayOnly: {
            TrainConfig train = cfg.train;
            if (method == Method::SelfSupGrayOnly) train.loss_weights.color = 0.0;
            NetShape shape{sim.truth.width(), sim.truth.height(), grid, cfg.hidden_channels, cfg.shift_step};
            auto [net, trace] = train_selfsup(ReconNet(shape, train.seed), {{sim.gray, sim.color}}, sim.physics, train);
            out.reconstruction = reconstruct_selfsup(net, sim.gray);
            out.loss_trace = std::move(trace);
            out.net = std::move(net);
            break;
        }
    }
    clamp_unit(out.reconstruction);
    out.metrics = evaluate(sim.truth, out.reconstruction);
    out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

std::string scene_id(const ExperimentConfig& cfg) {
    if (cfg.scene_file) return cfg.scene_file->stem().string();
    return to_string(cfg.scene.family) + "-seed" + std::to_string(cfg.scene.seed);
}

std::vector<std::pair<std::size_t, std::size_t>> probe_locations(std::size_t width, std::size_t height) {
    return {{width / 4, height / 4}, {(3 * width) / 4, height / 4}, {width / 4, (3 * height) / 4},
            {(3 * width) / 4, (3 * height) / 4}};
}

void write_probe_csv(const HsiCube& truth, const HsiCube& recon, const fs::path& path) {
    if (!truth.same_shape(recon)) throw DimensionError("probe csv: cube shapes differ");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "probe,x,y,band,wavelength_nm,truth,reconstruction\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    const auto probes = probe_locations(truth.width(), truth.height());
    for (std::size_t p = 0; p < probes.size(); ++p) {
        const auto [x, y] = probes[p];
        for (std::size_t b = 0; b < truth.bands(); ++b) {
            out << p << ',' << x << ',' << y << ',' << b << ',' << truth.grid().wavelength(b) << ','
                << truth.at(x, y, b) << ',' << recon.at(x, y, b) << '\n';
        }
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_band_renders(const HsiCube& cube, const fs::path& dir) {
    fs::create_directories(dir);
    const std::size_t n = cube.band_size();
    std::vector<double> composite(n, 0.0);
    for (std::size_t b = 0; b < cube.bands(); ++b) {
        std::vector<double> band(cube.data().begin() + static_cast<std::ptrdiff_t>(b * n),
                                 cube.data().begin() + static_cast<std::ptrdiff_t>((b + 1) * n));
        for (std::size_t i = 0; i < n; ++i) composite[i] = std::max(composite[i], band[i]);
        char name[32];
        std::snprintf(name, sizeof name, "band_%03zu.pgm", b);
        write_pgm(dir / name, cube.width(), cube.height(), band);
    }
    write_pgm(dir / "max_projection.pgm", cube.width(), cube.height(), composite);
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const fs::path root = cfg.output_dir;
    const Simulation sim = simulate(cfg);
    save_simulation(sim, root);

    ExperimentReport report{scene_id(cfg), {}};
    std::ofstream log(root / "run.log");
    for (Method method : cfg.methods) {
        const std::string tag = to_string(method);
        MethodOutcome outcome = [&] {
            try {
                return run_method(method, sim, cfg);
            } catch (const std::exception& e) {
                throw std::runtime_error("method " + tag + " on scene " + report.scene_id + ": " + e.what());
            }
        }();

        const fs::path dir = root / tag;
        fs::create_directories(dir);
        save_cube(outcome.reconstruction, dir / "reconstruction");
        if (outcome.solve_report) outcome.solve_report->write_csv(dir / "trace.csv");
        if (outcome.loss_trace) write_loss_trace_csv(*outcome.loss_trace, dir / "trace.csv");
        if (outcome.net) {
            TrainConfig train = cfg.train;
            if (method == Method::SelfSupGrayOnly) train.loss_weights.color = 0.0;
            save_checkpoint(*outcome.net, dir / "checkpoint", to_json(train));
        }
        write_probe_csv(sim.truth, outcome.reconstruction, dir / "probes.csv");
        write_band_renders(outcome.reconstruction, dir / "renders");
        log << tag << " wall_time_s=" << outcome.wall_time << '\n';
        report.outcomes.push_back(std::move(outcome));
    }

    std::ofstream metrics(root / "metrics.csv");
    if (!metrics) throw std::runtime_error("cannot write metrics.csv");
    metrics << kMetricCsvHeader << '\n';
    for (const auto& o : report.outcomes) write_metric_row(metrics, report.scene_id, to_string(o.method), o.metrics);
    return report;
}

}  // namespace dcsi
