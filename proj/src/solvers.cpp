#include "dcsi/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>

namespace dcsi {
namespace {

using Clock = std::chrono::steady_clock;

double norm2(const std::vector<double>& v) { return std::sqrt(dot(v, v)); }

double relative_change(const std::vector<double>& next, const std::vector<double>& prev) {
    double diff = 0.0;
    double base = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) {
        const double d = next[i] - prev[i];
        diff += d * d;
        base += prev[i] * prev[i];
    }
    if (base == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::sqrt(diff / base);
}

void clamp_nonnegative(HsiCube& cube) {
    for (double& v : cube.data()) v = std::max(v, 0.0);
}

double max_residual(const CompressedFrame& predicted, const CompressedFrame& frame, const std::vector<double>* diag) {
    double worst = 0.0;
    for (std::size_t r = 0; r < frame.size(); ++r) {
        if (diag && (*diag)[r] == 0.0) continue;
        worst = std::max(worst, std::abs(predicted.values()[r] - frame.values()[r]));
    }
    return worst;
}

void check_frame(const CompressedFrame& frame, const CassiOperator& op) {
    if (frame.width() != op.frame_width() || frame.height() != op.height()) {
        throw DimensionError("solver: frame " + std::to_string(frame.width()) + "x" + std::to_string(frame.height()) +
                             " does not match operator (" + std::to_string(op.frame_width()) + "x" +
                             std::to_string(op.height()) + ")");
    }
}

}  // namespace

void SolverParams::validate() const {
    if (max_iters < 1) throw std::invalid_argument("solver: max_iters must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("solver: tol must be > 0");
    if (!(tv_weight >= 0.0)) throw std::invalid_argument("solver: tv_weight must be >= 0");
    if (tv_inner_iters < 0) throw std::invalid_argument("solver: tv_inner_iters must be >= 0");
}

void SolveReport::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "iter,objective,data_residual\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (int k = 0; k < iterations_run; ++k) {
        out << k + 1 << ',' << objective_trace[k] << ',' << data_residual_trace[k] << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

double total_variation(const HsiCube& cube) {
    const std::size_t X = cube.width();
    const std::size_t Y = cube.height();
    double tv = 0.0;
    for (std::size_t b = 0; b < cube.bands(); ++b) {
        for (std::size_t y = 0; y < Y; ++y) {
            for (std::size_t x = 0; x < X; ++x) {
                const double v = cube.at(x, y, b);
                if (x + 1 < X) tv += std::abs(cube.at(x + 1, y, b) - v);
                if (y + 1 < Y) tv += std::abs(cube.at(x, y + 1, b) - v);
            }
        }
    }
    return tv;
}

HsiCube tv_denoise(const HsiCube& cube, double weight, int iters) {
    if (!(weight >= 0.0)) throw std::invalid_argument("tv_denoise: weight must be >= 0");
    if (weight == 0.0 || iters <= 0) return cube;

    const std::size_t X = cube.width();
    const std::size_t Y = cube.height();
    const std::size_t n = X * Y;
    // Step below 2 / ||D||^2 = 1/4 in units of the dual variable.
    const double step = 0.25 / weight;

    HsiCube out = cube;
    std::vector<double> px(n), py(n), u(n);
    for (std::size_t b = 0; b < cube.bands(); ++b) {
        const double* g = cube.data().data() + b * n;
        std::fill(px.begin(), px.end(), 0.0);
        std::fill(py.begin(), py.end(), 0.0);
        std::copy(g, g + n, u.begin());
        for (int k = 0; k < iters; ++k) {
            // Dual ascent: p <- clip(p + step * D u, [-1, 1]).
            for (std::size_t y = 0; y < Y; ++y) {
                for (std::size_t x = 0; x < X; ++x) {
                    const std::size_t i = y * X + x;
                    const double dx = x + 1 < X ? u[i + 1] - u[i] : 0.0;
                    const double dy = y + 1 < Y ? u[i + X] - u[i] : 0.0;
                    px[i] = std::clamp(px[i] + step * dx, -1.0, 1.0);
                    py[i] = std::clamp(py[i] + step * dy, -1.0, 1.0);
                }
            }
            // Primal: u = g - weight * D^T p, with D^T p = -div p.
            for (std::size_t y = 0; y < Y; ++y) {
                for (std::size_t x = 0; x < X; ++x) {
                    const std::size_t i = y * X + x;
                    double dtp = 0.0;
                    if (x + 1 < X) dtp -= px[i];
                    if (x > 0) dtp += px[i - 1];
                    if (y + 1 < Y) dtp -= py[i];
                    if (y > 0) dtp += py[i - X];
                    u[i] = g[i] - weight * dtp;
                }
            }
        }
        std::copy(u.begin(), u.end(), out.data().begin() + static_cast<std::ptrdiff_t>(b * n));
    }
    return out;
}

double cassi_objective(const HsiCube& cube, const CompressedFrame& frame, const CassiOperator& op, double tv_weight) {
    const auto predicted = cassi_forward(cube, op);
    double data = 0.0;
    for (std::size_t r = 0; r < frame.size(); ++r) {
        const double d = predicted.values()[r] - frame.values()[r];
        data += d * d;
    }
    return 0.5 * data + (tv_weight > 0.0 ? tv_weight * total_variation(cube) : 0.0);
}

double estimate_phit_phi_norm(const CassiOperator& op, int iters, unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    HsiCube v(op.width(), op.height(), WavelengthGrid::visible(op.bands));
    for (double& s : v.data()) s = uni(rng);
    double lambda = 0.0;
    for (int k = 0; k < iters; ++k) {
        const double n = norm2(v.data());
        if (n == 0.0) return 0.0;
        for (double& s : v.data()) s /= n;
        v = cassi_adjoint(cassi_forward(v, op), op);
        lambda = norm2(v.data());
    }
    return lambda;
}

std::pair<double, double> twist_default_coefficients(double lam1) {
    const double lamN = 1.0;
    const double ratio = lam1 / lamN;
    const double rho0 = (1.0 - ratio) / (1.0 + ratio);
    const double alpha = 2.0 / (1.0 + std::sqrt(1.0 - rho0 * rho0));
    const double beta = alpha * 2.0 / (lam1 + lamN);
    return {alpha, beta};
}

std::pair<HsiCube, SolveReport> reconstruct_gaptv(const CompressedFrame& frame, const CassiOperator& op,
                                                  const SolverParams& p, const WavelengthGrid* grid) {
    p.validate();
    check_frame(frame, op);
    const auto start = Clock::now();

    const auto diag = phi_phit_diagonal(op);
    if (std::none_of(diag.begin(), diag.end(), [](double d) { return d > 0.0; })) {
        throw std::invalid_argument("gaptv: mask covers no measurement pixel");
    }

    // (f - Phi v) / diag(Phi Phi^T) on covered rows, zero elsewhere.
    auto weighted_residual = [&](const HsiCube& v) {
        auto r = cassi_forward(v, op);
        for (std::size_t i = 0; i < r.size(); ++i) {
            r.values()[i] = diag[i] > 0.0 ? (frame.values()[i] - r.values()[i]) / diag[i] : 0.0;
        }
        return r;
    };

    HsiCube zero(op.width(), op.height(), grid ? *grid : WavelengthGrid::visible(op.bands));
    HsiCube v = zero;
    {
        auto correction = cassi_adjoint(weighted_residual(v), op, &v.grid());
        v = std::move(correction);
    }

    SolveReport report;
    for (int k = 0; k < p.max_iters; ++k) {
        // Euclidean projection onto {h : Phi h = f}.
        HsiCube h = v;
        const auto correction = cassi_adjoint(weighted_residual(v), op, &v.grid());
        for (std::size_t i = 0; i < h.size(); ++i) h.data()[i] += correction.data()[i];
        report.data_residual_trace.push_back(max_residual(cassi_forward(h, op), frame, &diag));

        HsiCube next = tv_denoise(h, p.tv_weight, p.tv_inner_iters);
        report.objective_trace.push_back(cassi_objective(next, frame, op, p.tv_weight));
        ++report.iterations_run;

        const double change = relative_change(next.data(), v.data());
        v = std::move(next);
        if (change < p.tol) break;
    }

    clamp_nonnegative(v);
    report.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
    return {std::move(v), std::move(report)};
}

std::pair<HsiCube, SolveReport> reconstruct_twist(const CompressedFrame& frame, const CassiOperator& op,
                                                  const SolverParams& p, const WavelengthGrid* grid) {
    p.validate();
    check_frame(frame, op);
    const auto start = Clock::now();

    const double lipschitz = estimate_phit_phi_norm(op, 20, p.seed);
    auto [alpha, beta] = twist_default_coefficients();
    if (p.twist_alpha > 0.0) alpha = p.twist_alpha;
    if (p.twist_beta > 0.0) beta = p.twist_beta;

    const WavelengthGrid g = grid ? *grid : WavelengthGrid::visible(op.bands);
    HsiCube x = cassi_adjoint(frame, op, &g);
    SolveReport report;
    if (lipschitz == 0.0) {
        // Phi = 0: every cube explains the data equally; zero is the TV minimizer.
        std::fill(x.data().begin(), x.data().end(), 0.0);
        report.iterations_run = 1;
        report.objective_trace.push_back(cassi_objective(x, frame, op, p.tv_weight));
        report.data_residual_trace.push_back(max_residual(cassi_forward(x, op), frame, nullptr));
        report.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
        return {std::move(x), std::move(report)};
    }

    const double prox_weight = p.tv_weight / lipschitz;
    auto objective = [&](const HsiCube& c) { return cassi_objective(c, frame, op, p.tv_weight); };

    // One iterative shrinkage step: denoise(x + Phi^T (f - Phi x) / L).
    auto ist_step = [&](const HsiCube& c) {
        auto r = cassi_forward(c, op);
        for (std::size_t i = 0; i < r.size(); ++i) r.values()[i] = frame.values()[i] - r.values()[i];
        const auto grad = cassi_adjoint(r, op, &g);
        HsiCube z = c;
        for (std::size_t i = 0; i < z.size(); ++i) z.data()[i] += grad.data()[i] / lipschitz;
        return tv_denoise(z, prox_weight, p.tv_inner_iters);
    };

    HsiCube prev = x;
    double f_x = objective(x);
    for (int k = 0; k < p.max_iters; ++k) {
        HsiCube gamma = ist_step(x);
        HsiCube next;
        double f_next;
        if (k == 0) {
            next = std::move(gamma);
            f_next = objective(next);
        } else {
            next = HsiCube(x.width(), x.height(), g);
            for (std::size_t i = 0; i < next.size(); ++i) {
                next.data()[i] = (1.0 - alpha) * prev.data()[i] + (alpha - beta) * x.data()[i] + beta * gamma.data()[i];
            }
            f_next = objective(next);
            if (f_next > f_x) {
                // Monotone variant: fall back to the plain shrinkage step.
                next = std::move(gamma);
                f_next = objective(next);
            }
        }
        if (f_next > f_x) {
            // The inexact proximal map can still overshoot; keep the current iterate.
            next = x;
            f_next = f_x;
        }

        report.objective_trace.push_back(f_next);
        report.data_residual_trace.push_back(max_residual(cassi_forward(next, op), frame, nullptr));
        ++report.iterations_run;

        const double change = relative_change(next.data(), x.data());
        prev = std::move(x);
        x = std::move(next);
        f_x = f_next;
        if (change < p.tol) break;
    }

    clamp_nonnegative(x);
    report.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
    return {std::move(x), std::move(report)};
}

}  // namespace dcsi
