// dcsi: command-line front end.
//
//   dcsi simulate     scene + mask -> measurement directory
//   dcsi reconstruct  measurement directory -> cube (twist | gaptv | selfsup | selfsup-gray-only)
//   dcsi evaluate     reference cube + test cube -> metrics CSV row
//   dcsi experiment   config file -> full report directory
//   dcsi train        measurement directories -> network checkpoint
//   dcsi infer        checkpoint + CASSI frame -> cube

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dcsi/cube_io.hpp"
#include "dcsi/experiment.hpp"

namespace fs = std::filesystem;
using namespace dcsi;

namespace {

// Flags that override fields of the (optional) config file.
struct Overrides {
    std::optional<std::string> family;
    std::optional<std::size_t> width, height, bands;
    std::optional<unsigned long long> seed;
    std::optional<double> noise_sigma;
    std::optional<std::string> scene_file;
    std::optional<std::string> mask_kind;
    std::optional<double> density;
    std::optional<std::size_t> order;
    std::optional<unsigned long long> mask_seed;
    std::optional<std::size_t> shift_step;
    std::optional<int> max_iters, tv_inner_iters;
    std::optional<double> tv_weight;
    std::optional<int> epochs;
    std::optional<double> lr0;
    std::optional<std::string> optimizer;
    std::optional<double> w_gray, w_color;
    std::optional<std::size_t> hidden;
};

void add_scene_options(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--family", o.family, "smooth-blobs | step-targets | spectral-ramps");
    cmd->add_option("--width", o.width);
    cmd->add_option("--height", o.height);
    cmd->add_option("--bands", o.bands);
    cmd->add_option("--seed", o.seed, "scene seed");
    cmd->add_option("--noise-sigma", o.noise_sigma);
    cmd->add_option("--scene-file", o.scene_file, "cube container used instead of a synthetic scene");
    cmd->add_option("--mask", o.mask_kind, "bernoulli | hadamard");
    cmd->add_option("--density", o.density);
    cmd->add_option("--order", o.order, "hadamard order");
    cmd->add_option("--mask-seed", o.mask_seed);
    cmd->add_option("--shift-step", o.shift_step);
}

void add_solver_options(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--max-iters", o.max_iters);
    cmd->add_option("--tv-weight", o.tv_weight);
    cmd->add_option("--tv-inner-iters", o.tv_inner_iters);
}

void add_train_options(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--epochs", o.epochs);
    cmd->add_option("--lr", o.lr0);
    cmd->add_option("--optimizer", o.optimizer, "sgd | adam");
    cmd->add_option("--w-gray", o.w_gray);
    cmd->add_option("--w-color", o.w_color);
    cmd->add_option("--hidden", o.hidden, "hidden channels of a new network");
}

template <class T>
void apply(const std::optional<T>& v, T& dst) {
    if (v) dst = *v;
}

ExperimentConfig resolve(const std::string& config_path, const Overrides& o) {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_experiment_config(config_path);
    if (o.family) cfg.scene.family = parse_scene_family(*o.family);
    apply(o.width, cfg.scene.width);
    apply(o.height, cfg.scene.height);
    apply(o.bands, cfg.scene.bands);
    apply(o.seed, cfg.scene.seed);
    apply(o.noise_sigma, cfg.scene.noise_sigma);
    if (o.scene_file) cfg.scene_file = *o.scene_file;
    if (o.mask_kind) cfg.mask.kind = parse_mask_kind(*o.mask_kind);
    apply(o.density, cfg.mask.density);
    apply(o.order, cfg.mask.order);
    apply(o.mask_seed, cfg.mask.seed);
    apply(o.shift_step, cfg.shift_step);
    apply(o.max_iters, cfg.solver.max_iters);
    apply(o.tv_weight, cfg.solver.tv_weight);
    apply(o.tv_inner_iters, cfg.solver.tv_inner_iters);
    apply(o.epochs, cfg.train.epochs);
    apply(o.lr0, cfg.train.lr0);
    if (o.optimizer) {
        if (*o.optimizer == "adam") cfg.train.optimizer = Optimizer::Adam;
        else if (*o.optimizer == "sgd") cfg.train.optimizer = Optimizer::Sgd;
        else throw std::invalid_argument("unknown optimizer '" + *o.optimizer + "'");
    }
    apply(o.w_gray, cfg.train.loss_weights.gray);
    apply(o.w_color, cfg.train.loss_weights.color);
    apply(o.hidden, cfg.hidden_channels);
    cfg.validate();
    return cfg;
}

int run(int argc, char** argv) {
    CLI::App app{"Dual-camera compressive spectral imaging: simulation, reconstruction, evaluation"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides o;

    auto* sim_cmd = app.add_subcommand("simulate", "generate a scene and mask, write both measurements");
    fs::path sim_out;
    sim_cmd->add_option("--config", config_path, "experiment config JSON");
    sim_cmd->add_option("-o,--out", sim_out, "output directory")->required();
    add_scene_options(sim_cmd, o);

    auto* rec_cmd = app.add_subcommand("reconstruct", "reconstruct a cube from a measurement directory");
    fs::path rec_in, rec_out, rec_trace, rec_ckpt;
    std::string rec_method;
    rec_cmd->add_option("-i,--input", rec_in, "measurement directory written by simulate")->required();
    rec_cmd->add_option("-m,--method", rec_method, "twist | gaptv | selfsup | selfsup-gray-only")->required();
    rec_cmd->add_option("-o,--out", rec_out, "output cube base path")->required();
    rec_cmd->add_option("--trace", rec_trace, "write the solver or loss trace CSV here");
    rec_cmd->add_option("--checkpoint", rec_ckpt, "self-supervised methods: save the trained network here");
    rec_cmd->add_option("--config", config_path, "experiment config JSON (solver / train sections)");
    add_solver_options(rec_cmd, o);
    add_train_options(rec_cmd, o);

    auto* eval_cmd = app.add_subcommand("evaluate", "compare two cubes, print one metrics CSV row");
    fs::path eval_ref, eval_test, eval_out;
    std::string eval_scene = "scene", eval_method = "method";
    eval_cmd->add_option("-r,--reference", eval_ref)->required();
    eval_cmd->add_option("-t,--test", eval_test)->required();
    eval_cmd->add_option("--scene-id", eval_scene);
    eval_cmd->add_option("--method", eval_method);
    eval_cmd->add_option("-o,--out", eval_out, "append to this CSV (header written when new)");

    auto* exp_cmd = app.add_subcommand("experiment", "run every configured method and write the report");
    fs::path exp_out;
    exp_cmd->add_option("-c,--config", config_path, "experiment config JSON")->required();
    exp_cmd->add_option("-o,--output-dir", exp_out, "overrides output_dir from the config");

    auto* train_cmd = app.add_subcommand("train", "self-supervised training on measurement directories");
    std::vector<fs::path> train_in;
    fs::path train_out, train_init, train_trace;
    train_cmd->add_option("-i,--input", train_in, "measurement directories (one pair each)")->required();
    train_cmd->add_option("-o,--out", train_out, "checkpoint base path")->required();
    train_cmd->add_option("--init", train_init, "resume from this checkpoint (fine-tuning)");
    train_cmd->add_option("--trace", train_trace, "loss trace CSV");
    train_cmd->add_option("--config", config_path, "experiment config JSON (train section)");
    add_train_options(train_cmd, o);

    auto* infer_cmd = app.add_subcommand("infer", "run a trained network on a CASSI frame");
    fs::path infer_ckpt, infer_frame, infer_out;
    infer_cmd->add_option("--checkpoint", infer_ckpt)->required();
    infer_cmd->add_option("-f,--frame", infer_frame, "CASSI frame container")->required();
    infer_cmd->add_option("-o,--out", infer_out, "output cube base path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (sim_cmd->parsed()) {
        const auto cfg = resolve(config_path, o);
        save_simulation(simulate(cfg), sim_out);
        std::printf("wrote %s (%s)\n", sim_out.string().c_str(), scene_id(cfg).c_str());
        return 0;
    }

    if (rec_cmd->parsed()) {
        const auto cfg = resolve(config_path, o);
        const Method method = parse_method(rec_method);
        const auto m = load_measurements(rec_in);
        HsiCube cube;
        if (method == Method::Twist || method == Method::GapTv) {
            auto [c, report] = method == Method::Twist ? reconstruct_twist(m.gray, m.physics.cassi, cfg.solver, &m.grid)
                                                       : reconstruct_gaptv(m.gray, m.physics.cassi, cfg.solver, &m.grid);
            cube = std::move(c);
            if (!rec_trace.empty()) report.write_csv(rec_trace);
        } else {
            TrainConfig train = cfg.train;
            if (method == Method::SelfSupGrayOnly) train.loss_weights.color = 0.0;
            const NetShape shape{m.physics.cassi.width(), m.physics.cassi.height(), m.grid, cfg.hidden_channels,
                                 m.physics.cassi.shift_step};
            auto [net, trace] = train_selfsup(ReconNet(shape, train.seed), {{m.gray, m.color}}, m.physics, train);
            cube = reconstruct_selfsup(net, m.gray);
            if (!rec_trace.empty()) write_loss_trace_csv(trace, rec_trace);
            if (!rec_ckpt.empty()) save_checkpoint(net, rec_ckpt, to_json(train));
        }
        for (double& v : cube.data()) v = std::clamp(v, 0.0, 1.0);
        save_cube(cube, rec_out);
        return 0;
    }

    if (eval_cmd->parsed()) {
        const auto report = evaluate(load_cube(eval_ref), load_cube(eval_test));
        if (eval_out.empty()) {
            std::cout << kMetricCsvHeader << '\n';
            write_metric_row(std::cout, eval_scene, eval_method, report);
        } else {
            const bool fresh = !fs::exists(eval_out) || fs::file_size(eval_out) == 0;
            std::ofstream out(eval_out, std::ios::app);
            if (!out) throw std::runtime_error("cannot open " + eval_out.string());
            if (fresh) out << kMetricCsvHeader << '\n';
            write_metric_row(out, eval_scene, eval_method, report);
        }
        return 0;
    }

    if (exp_cmd->parsed()) {
        auto cfg = load_experiment_config(config_path);
        if (!exp_out.empty()) cfg.output_dir = exp_out;
        const auto report = run_experiment(cfg);
        std::cout << kMetricCsvHeader << '\n';
        for (const auto& out : report.outcomes) write_metric_row(std::cout, report.scene_id, to_string(out.method), out.metrics);
        return 0;
    }

    if (train_cmd->parsed()) {
        const auto cfg = resolve(config_path, o);
        std::vector<MeasurementPair> pairs;
        std::optional<MeasurementSet> first;
        for (const auto& dir : train_in) {
            auto m = load_measurements(dir);
            if (first && (m.gray.width() != first->gray.width() || m.gray.height() != first->gray.height() ||
                          m.physics.cassi.mask != first->physics.cassi.mask || !(m.grid == first->grid))) {
                throw DimensionError(dir.string() + ": measurements must share size, mask and wavelength grid");
            }
            pairs.push_back({m.gray, m.color});
            if (!first) first = std::move(m);
        }
        const NetShape shape{first->physics.cassi.width(), first->physics.cassi.height(), first->grid,
                             cfg.hidden_channels, first->physics.cassi.shift_step};
        ReconNet net = train_init.empty() ? ReconNet(shape, cfg.train.seed) : load_checkpoint(train_init);
        if (!(net.shape() == shape) && !train_init.empty()) {
            const auto& s = net.shape();
            if (s.width != shape.width || s.height != shape.height || !(s.grid == shape.grid) || s.shift_step != shape.shift_step) {
                throw DimensionError("checkpoint " + train_init.string() + " does not match the measurements");
            }
        }
        auto [trained, trace] = train_selfsup(std::move(net), pairs, first->physics, cfg.train);
        save_checkpoint(trained, train_out, to_json(cfg.train));
        if (!train_trace.empty()) write_loss_trace_csv(trace, train_trace);
        std::printf("loss %.6g -> %.6g over %zu epochs\n", trace.front().loss.total, trace.back().loss.total, trace.size());
        return 0;
    }

    if (infer_cmd->parsed()) {
        const auto net = load_checkpoint(infer_ckpt);
        auto cube = reconstruct_selfsup(net, load_compressed_frame(infer_frame));
        for (double& v : cube.data()) v = std::clamp(v, 0.0, 1.0);
        save_cube(cube, infer_out);
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "dcsi: %s\n", e.what());
        return 1;
    }
}
