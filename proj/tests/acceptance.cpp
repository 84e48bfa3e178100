// Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.
//
//   acceptance                      full suite on the evaluation seeds (0..9)
//   acceptance --seed-offset 100    same procedure on the pilot seeds
//   acceptance --only 1,2,8         subset

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dcsi/experiment.hpp"
#include "test_util.hpp"

using namespace dcsi;
namespace fs = std::filesystem;

namespace {

// Pre-registered thresholds, fixed from the pilot run on seeds 100..109
// before the evaluation seeds were run: half the pilot median gap, rounded
// down to 0.1 dB, never below the stated floor.
// Pilot medians: selfsup 28.392, gaptv 25.799, twist 27.114, gray-only 20.014.
constexpr double kSelfSupOverGapTvDb = 1.2;   // criterion 5
constexpr double kGapTvOverTwistDb = 0.0;     // criterion 5
constexpr double kDualOverGrayOnlyDb = 4.1;   // criterion 6
// Pilot: train 26.152, held-out 16.173, step-targets +7.214 after fine-tuning.
constexpr double kHeldOutGapDb = 3.0;         // criterion 7, stated bound kept
constexpr double kFineTuneGainDb = 3.6;       // criterion 7

constexpr int kScenes = 10;
constexpr int kFineTuneEpochs = 3000;

struct Outcome {
    bool pass;
    std::string detail;
};

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExperimentConfig load_default() { return load_experiment_config(DCSI_DEFAULT_CONFIG); }

// Every simulated frame seen by the suite is checked against the width law.
struct ShapeLedger {
    std::size_t checked = 0;
    std::size_t violations = 0;
    void record(const Simulation& sim) {
        const std::size_t expected = sim.truth.width() + (sim.truth.bands() - 1) * sim.physics.cassi.shift_step;
        ++checked;
        if (sim.gray.width() != expected || sim.gray.height() != sim.truth.height()) ++violations;
    }
};
ShapeLedger g_shapes;

Simulation simulate_scene(const ExperimentConfig& base, SceneFamily family, unsigned long long seed) {
    ExperimentConfig cfg = base;
    cfg.scene.family = family;
    cfg.scene.seed = seed;
    auto sim = simulate(cfg);
    g_shapes.record(sim);
    return sim;
}

// 1: operator correctness.
Outcome operators() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> dim(1, 8), bands(1, 4), shift(1, 2);
    double worst_matrix = 0.0;
    for (int k = 0; k < 50; ++k) {
        const std::size_t X = dim(rng), Y = dim(rng), N = bands(rng);
        const CassiOperator op(test::random_plane<CodedAperture>(X, Y, rng(), 0.0, 1.0), N, shift(rng));
        const auto h = test::random_cube(X, Y, N, rng());
        const auto f = cassi_forward(h, op);
        const auto m = build_sensing_matrix(op, X, Y).multiply(h.data());
        for (std::size_t i = 0; i < m.size(); ++i) worst_matrix = std::max(worst_matrix, std::abs(m[i] - f.values()[i]));
    }
    double worst_cassi = 0.0, worst_color = 0.0;
    for (int k = 0; k < 100; ++k) {
        const std::size_t X = dim(rng), Y = dim(rng), N = bands(rng);
        const CassiOperator op(test::random_plane<CodedAperture>(X, Y, rng(), 0.0, 1.0), N, shift(rng));
        const auto h = test::random_cube(X, Y, N, rng());
        const auto f = test::random_plane<CompressedFrame>(op.frame_width(), Y, rng());
        worst_cassi = std::max(worst_cassi, test::relative_error(dot(cassi_forward(h, op).values(), f.values()),
                                                                 dot(h.data(), cassi_adjoint(f, op).data())));

        SpectralResponse k_rgb;
        Illuminant l{std::vector<double>(N)};
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (std::size_t i = 0; i < N; ++i) {
            k_rgb.red.push_back(uni(rng));
            k_rgb.green.push_back(uni(rng));
            k_rgb.blue.push_back(uni(rng));
            l.spectrum[i] = uni(rng);
        }
        const ColorOperator cop(k_rgb, l);
        const auto g = test::random_plane<RawColorFrame>(X, Y, rng());
        worst_color = std::max(worst_color, test::relative_error(dot(color_forward(h, cop).values(), g.values()),
                                                                 dot(h.data(), color_adjoint(g, cop).data())));
    }
    const double t = seconds_since(t0);
    const bool pass = worst_matrix <= 1e-12 && worst_cassi <= 1e-10 && worst_color <= 1e-10 && t < 10.0;
    return {pass, "matrix max|diff| " + fmt("%.2e", worst_matrix) + ", adjoint rel cassi " + fmt("%.2e", worst_cassi) +
                      " color " + fmt("%.2e", worst_color) + ", " + fmt("%.2f s", t)};
}

// 2: frame width law over a sweep of shapes plus every simulation the suite ran.
Outcome shape_law() {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> dim(1, 40), bands(1, 31), shift(1, 3);
    for (int k = 0; k < 200; ++k) {
        const std::size_t X = dim(rng), Y = dim(rng), N = bands(rng), s = shift(rng);
        SceneSpec spec;
        spec.width = X;
        spec.height = Y;
        spec.bands = N;
        spec.seed = rng();
        MaskSpec ms;
        ms.seed = rng();
        g_shapes.record(simulate(generate_scene(spec), generate_mask(ms, X, Y), s, 0.0, 0));
    }
    return {g_shapes.violations == 0,
            std::to_string(g_shapes.checked) + " simulated instances, " + std::to_string(g_shapes.violations) + " violations"};
}

// 3: finite-difference gradient check.
Outcome gradient_check() {
    const auto t0 = std::chrono::steady_clock::now();
    SceneSpec spec;
    spec.width = 8;
    spec.height = 8;
    spec.bands = 3;
    const auto sim = simulate(generate_scene(spec), generate_mask(MaskSpec{}, 8, 8), 1, 0.0, 0);
    g_shapes.record(sim);
    ReconNet net(NetShape{8, 8, spec.grid(), 16, 1}, 0);
    const auto grads = backprop(net, sim.gray, sim.physics, sim.gray, sim.color, {}).second;
    const double h = 1e-5;
    // Relative error against max(|analytic|, |numeric|, 1e-6): gradients below 1e-6
    // are compared at the finite-difference noise floor.
    double worst = 0.0;
    std::string where;
    std::size_t n = 0;
    for (std::size_t a = 0; a < net.params().size(); ++a) {
        auto& values = net.params()[a].values;
        for (std::size_t i = 0; i < values.size(); ++i, ++n) {
            const double keep = values[i];
            values[i] = keep + h;
            const double up = dual_loss(net.forward(sim.gray), sim.physics, sim.gray, sim.color, {}).total;
            values[i] = keep - h;
            const double down = dual_loss(net.forward(sim.gray), sim.physics, sim.gray, sim.color, {}).total;
            values[i] = keep;
            const double err = test::relative_error(grads[a][i], (up - down) / (2.0 * h), 1e-6);
            if (err > worst) {
                worst = err;
                where = net.params()[a].name + "[" + std::to_string(i) + "]";
            }
        }
    }
    const double t = seconds_since(t0);
    return {worst <= 1e-4 && t < 60.0,
            std::to_string(n) + " weights, worst rel err " + fmt("%.2e", worst) + " at " + where + ", " + fmt("%.1f s", t)};
}

// 4: solver traces on the seed-0 scene.
Outcome solver_sanity(const ExperimentConfig& base) {
    const auto sim = simulate_scene(base, SceneFamily::SmoothBlobs, 0);
    const auto [tw, tw_report] = reconstruct_twist(sim.gray, sim.physics.cassi, base.solver, &sim.truth.grid());
    double worst_rise = -INFINITY;
    for (std::size_t k = 1; k < tw_report.objective_trace.size(); ++k)
        worst_rise = std::max(worst_rise, tw_report.objective_trace[k] - tw_report.objective_trace[k - 1]);
    const auto [gp, gp_report] = reconstruct_gaptv(sim.gray, sim.physics.cassi, base.solver, &sim.truth.grid());
    const double worst_res = *std::max_element(gp_report.data_residual_trace.begin(), gp_report.data_residual_trace.end());
    return {worst_rise <= 1e-12 && worst_res <= 1e-9,
            "twist max step rise " + fmt("%.2e", worst_rise) + " over " + std::to_string(tw_report.iterations_run) +
                " iters; gaptv max residual " + fmt("%.2e", worst_res) + " over " +
                std::to_string(gp_report.iterations_run) + " iters"};
}

struct SceneSweep {
    std::vector<double> twist, gaptv, selfsup, gray_only;
};

SceneSweep sweep_scenes(const ExperimentConfig& base, unsigned long long first_seed) {
    SceneSweep s;
    for (int k = 0; k < kScenes; ++k) {
        const auto sim = simulate_scene(base, SceneFamily::SmoothBlobs, first_seed + k);
        s.twist.push_back(run_method(Method::Twist, sim, base).metrics.psnr_db);
        s.gaptv.push_back(run_method(Method::GapTv, sim, base).metrics.psnr_db);
        s.selfsup.push_back(run_method(Method::SelfSup, sim, base).metrics.psnr_db);
        s.gray_only.push_back(run_method(Method::SelfSupGrayOnly, sim, base).metrics.psnr_db);
        std::printf("  scene %llu: twist %.3f gaptv %.3f selfsup %.3f selfsup-gray-only %.3f\n", first_seed + k,
                    s.twist.back(), s.gaptv.back(), s.selfsup.back(), s.gray_only.back());
        std::fflush(stdout);
    }
    return s;
}

// 5: ordering of the methods.
Outcome ordering(const SceneSweep& s, double seconds) {
    const double ss = median(s.selfsup), gp = median(s.gaptv), tw = median(s.twist);
    const bool pass = ss - gp >= kSelfSupOverGapTvDb && gp - tw >= kGapTvOverTwistDb && seconds < 1800.0;
    return {pass, "median PSNR selfsup " + fmt("%.3f", ss) + " gaptv " + fmt("%.3f", gp) + " twist " + fmt("%.3f", tw) +
                      " (need selfsup-gaptv >= " + fmt("%.1f", kSelfSupOverGapTvDb) + ", gaptv-twist >= " +
                      fmt("%.1f", kGapTvOverTwistDb) + "), " + fmt("%.0f s", seconds)};
}

// 6: dual loss against the gray-only ablation.
Outcome ablation(const SceneSweep& s) {
    const double dual = median(s.selfsup), gray = median(s.gray_only);
    return {dual - gray >= kDualOverGrayOnlyDb,
            "median PSNR dual " + fmt("%.3f", dual) + " gray-only " + fmt("%.3f", gray) + " (need gap >= " +
                fmt("%.1f", kDualOverGrayOnlyDb) + ")"};
}

// 7: one network across scenes, then fine-tuning on another family.
Outcome generalization(const ExperimentConfig& base, unsigned long long first_seed) {
    std::vector<Simulation> train, held_out;
    for (int k = 0; k < 5; ++k) train.push_back(simulate_scene(base, SceneFamily::SmoothBlobs, first_seed + k));
    for (int k = 5; k < 10; ++k) held_out.push_back(simulate_scene(base, SceneFamily::SmoothBlobs, first_seed + k));
    const Simulation step = simulate_scene(base, SceneFamily::StepTargets, first_seed);

    std::vector<MeasurementPair> pairs;
    for (const auto& s : train) pairs.push_back({s.gray, s.color});
    const auto& t0 = train.front();
    const NetShape shape{t0.truth.width(), t0.truth.height(), t0.truth.grid(), base.hidden_channels, base.shift_step};
    const auto [net, trace] = train_selfsup(ReconNet(shape, base.train.seed), pairs, t0.physics, base.train);

    auto score = [](const ReconNet& n, const Simulation& s) {
        auto cube = reconstruct_selfsup(n, s.gray);
        for (double& v : cube.data()) v = std::clamp(v, 0.0, 1.0);
        return psnr(s.truth, cube);
    };
    std::vector<double> seen, unseen;
    for (const auto& s : train) seen.push_back(score(net, s));
    for (const auto& s : held_out) unseen.push_back(score(net, s));
    const double m_seen = median(seen), m_unseen = median(unseen);

    const double before = score(net, step);
    TrainConfig ft = base.train;
    ft.epochs = kFineTuneEpochs;
    const auto tuned = train_selfsup(net, {{step.gray, step.color}}, step.physics, ft).first;
    const double after = score(tuned, step);

    const bool pass = m_seen - m_unseen <= kHeldOutGapDb && after - before >= kFineTuneGainDb;
    return {pass, "median PSNR train " + fmt("%.3f", m_seen) + " held-out " + fmt("%.3f", m_unseen) + " (need gap <= " +
                      fmt("%.1f", kHeldOutGapDb) + "); step-targets " + fmt("%.3f", before) + " -> " + fmt("%.3f", after) +
                      " after fine-tune (need gain >= " + fmt("%.1f", kFineTuneGainDb) + ")"};
}

// 8: metric fixtures.
Outcome metric_fixtures() {
    const auto grid = WavelengthGrid::visible(4);
    const auto a = test::random_cube(16, 16, 4, 8);
    const bool identical = psnr(a, a) == kPsnrCapDb && ssim(a, a) == 1.0 && sam(a, a) == 0.0;

    HsiCube p(4, 4, WavelengthGrid::visible(2)), q(4, 4, WavelengthGrid::visible(2));
    for (std::size_t y = 0; y < 4; ++y)
        for (std::size_t x = 0; x < 4; ++x) {
            p.at(x, y, 0) = 1.0;
            q.at(x, y, 1) = 1.0;
        }
    const double angle = sam(p, q);

    const HsiCube r(8, 8, grid, std::vector<double>(256, 0.5));
    const HsiCube t(8, 8, grid, std::vector<double>(256, 0.6));
    const double db20 = psnr(r, t);
    const HsiCube ones(4, 4, grid, std::vector<double>(64, 1.0));
    const HsiCube zeros(4, 4, grid);
    const double db0 = psnr(ones, zeros);

    // 0.1 has no exact binary form; 1e-10 dB covers the representation error.
    const bool pass = identical && std::abs(angle - 90.0) <= 1e-9 && std::abs(db20 - 20.0) <= 1e-10 && db0 == 0.0;
    return {pass, std::string("identical ") + (identical ? "99/1/0" : "mismatch") + ", orthogonal " + fmt("%.12g deg", angle) +
                      ", uniform 0.1 " + fmt("%.12g dB", db20) + ", ones vs zeros " + fmt("%.12g dB", db0)};
}

// 9: the default config run twice.
Outcome determinism(const ExperimentConfig& base) {
    test::TempDir dir;
    ExperimentConfig a = base, b = base;
    a.output_dir = dir.path() / "a";
    b.output_dir = dir.path() / "b";
    run_experiment(a);
    run_experiment(b);
    std::size_t files = 0, differ = 0;
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    for (const auto& e : fs::recursive_directory_iterator(a.output_dir)) {
        if (e.path().extension() != ".csv") continue;
        ++files;
        const fs::path other = b.output_dir / fs::relative(e.path(), a.output_dir);
        if (!fs::exists(other) || slurp(e.path()) != slurp(other)) ++differ;
    }
    return {files > 0 && differ == 0, std::to_string(files) + " CSV files compared, " + std::to_string(differ) + " differ"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance suite"};
    unsigned long long offset = 0;
    std::vector<int> only;
    app.add_option("--seed-offset", offset, "first scene seed (evaluation 0, pilot 100)");
    app.add_option("--only", only, "criteria to run")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    const std::set<int> selected = only.empty() ? std::set<int>{1, 2, 3, 4, 5, 6, 7, 8, 9}
                                                : std::set<int>(only.begin(), only.end());
    const auto base = load_default();
    std::vector<std::pair<int, Outcome>> results;
    auto record = [&](int id, const Outcome& o) {
        results.emplace_back(id, o);
        std::printf("criterion %d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
    };

    try {
        if (selected.count(1)) record(1, operators());
        if (selected.count(3)) record(3, gradient_check());
        if (selected.count(4)) record(4, solver_sanity(base));
        if (selected.count(8)) record(8, metric_fixtures());
        if (selected.count(5) || selected.count(6)) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto sweep = sweep_scenes(base, offset);
            const double t = seconds_since(t0);
            if (selected.count(5)) record(5, ordering(sweep, t));
            if (selected.count(6)) record(6, ablation(sweep));
        }
        if (selected.count(7)) record(7, generalization(base, offset));
        if (selected.count(9)) record(9, determinism(base));
        if (selected.count(2)) record(2, shape_law());
    } catch (const std::exception& e) {
        std::printf("acceptance aborted: %s\n", e.what());
        return 2;
    }

    std::sort(results.begin(), results.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    int failed = 0;
    std::printf("summary:");
    for (const auto& [id, o] : results) {
        std::printf(" %d=%s", id, o.pass ? "PASS" : "FAIL");
        failed += o.pass ? 0 : 1;
    }
    std::printf("\n");
    return failed == 0 ? 0 : 1;
}
