// Pilot sweep over seed-indexed synthetic scenes. Prints per-scene and median
// PSNR for each method; used to fix the acceptance-suite thresholds.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dcsi/experiment.hpp"

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pilot sweep"};
    int scenes = 10;
    unsigned long long first_seed = 0;
    std::string family = "smooth-blobs";
    std::vector<std::string> methods{"twist", "gaptv", "selfsup", "selfsup-gray-only"};
    std::string config_path;
    dcsi::ExperimentConfig cfg;
    std::string optimizer;
    app.add_option("--config", config_path, "base experiment config");
    app.add_option("--scenes", scenes);
    app.add_option("--first-seed", first_seed);
    app.add_option("--family", family);
    app.add_option("--methods", methods);
    app.add_option("--epochs", cfg.train.epochs);
    app.add_option("--lr", cfg.train.lr0);
    app.add_option("--decay-every", cfg.train.lr_decay_every);
    app.add_option("--optimizer", optimizer);
    app.add_option("--hidden", cfg.hidden_channels);
    app.add_option("--tv-weight", cfg.solver.tv_weight);
    app.add_option("--iters", cfg.solver.max_iters);
    app.add_option("--tv-inner", cfg.solver.tv_inner_iters);
    app.add_option("--size", cfg.scene.width);
    app.add_option("--bands", cfg.scene.bands);
    CLI11_PARSE(app, argc, argv);

    if (!config_path.empty()) {
        // Command-line values were written into cfg; config values win only where no flag was given.
        auto base = dcsi::load_experiment_config(config_path);
        auto given = [&](const char* name) { return app.count(name) > 0; };
        if (given("--epochs")) base.train.epochs = cfg.train.epochs;
        if (given("--lr")) base.train.lr0 = cfg.train.lr0;
        if (given("--decay-every")) base.train.lr_decay_every = cfg.train.lr_decay_every;
        if (given("--hidden")) base.hidden_channels = cfg.hidden_channels;
        if (given("--tv-weight")) base.solver.tv_weight = cfg.solver.tv_weight;
        if (given("--iters")) base.solver.max_iters = cfg.solver.max_iters;
        if (given("--tv-inner")) base.solver.tv_inner_iters = cfg.solver.tv_inner_iters;
        if (given("--size")) base.scene.width = cfg.scene.width;
        if (given("--bands")) base.scene.bands = cfg.scene.bands;
        cfg = base;
    }
    if (!optimizer.empty()) cfg.train.optimizer = optimizer == "adam" ? dcsi::Optimizer::Adam : dcsi::Optimizer::Sgd;
    cfg.scene.height = cfg.scene.width;
    cfg.scene.family = dcsi::parse_scene_family(family);

    std::map<std::string, std::vector<double>> psnrs;
    for (int s = 0; s < scenes; ++s) {
        cfg.scene.seed = first_seed + static_cast<unsigned long long>(s);
        const auto sim = dcsi::simulate(cfg);
        std::printf("scene %llu:", cfg.scene.seed);
        for (const auto& tag : methods) {
            const auto out = dcsi::run_method(dcsi::parse_method(tag), sim, cfg);
            psnrs[tag].push_back(out.metrics.psnr_db);
            std::printf("  %s %.3f dB (ssim %.3f sam %.2f, %.1fs", tag.c_str(), out.metrics.psnr_db, out.metrics.ssim,
                        out.metrics.sam_deg, out.wall_time);
            if (out.loss_trace) std::printf(", loss %.3g->%.3g", out.loss_trace->front().loss.total, out.loss_trace->back().loss.total);
            if (out.solve_report) std::printf(", %d it", out.solve_report->iterations_run);
            std::printf(")");
        }
        std::printf("\n");
        std::fflush(stdout);
    }
    for (const auto& [tag, v] : psnrs) std::printf("median %s: %.3f dB\n", tag.c_str(), median(v));
    return 0;
}
