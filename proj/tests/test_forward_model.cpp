#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "dcsi/forward_model.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace dcsi;

namespace {

CassiOperator ones_operator(std::size_t X, std::size_t Y, std::size_t N, std::size_t s = 1) {
    return CassiOperator(CodedAperture(X, Y, std::vector<double>(X * Y, 1.0)), N, s);
}

ColorOperator random_color_operator(std::size_t N, unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    SpectralResponse k;
    k.red.resize(N);
    k.green.resize(N);
    k.blue.resize(N);
    Illuminant l{std::vector<double>(N)};
    for (std::size_t i = 0; i < N; ++i) {
        k.red[i] = uni(rng);
        k.green[i] = uni(rng);
        k.blue[i] = uni(rng);
        l.spectrum[i] = uni(rng);
    }
    return ColorOperator(k, l);
}

}  // namespace

TEST_SUITE("cassi_forward") {
    TEST_CASE("2x2x2 fixture") {
        // Values as written in the fixture; the expected sums only hold when the
        // outer index is x, so band0(x=0) = {1, 2} and band0(x=1) = {3, 4}.
        HsiCube cube(2, 2, WavelengthGrid::visible(2));
        const double b0[2][2] = {{1, 2}, {3, 4}};
        const double b1[2][2] = {{5, 6}, {7, 8}};
        for (std::size_t x = 0; x < 2; ++x)
            for (std::size_t y = 0; y < 2; ++y) {
                cube.at(x, y, 0) = b0[x][y];
                cube.at(x, y, 1) = b1[x][y];
            }
        const auto op = ones_operator(2, 2, 2);
        const auto f = cassi_forward(cube, op);
        REQUIRE(f.width() == 3);
        REQUIRE(f.height() == 2);
        CHECK(f.at(0, 0) == 1);
        CHECK(f.at(1, 0) == 8);
        CHECK(f.at(2, 0) == 7);
        CHECK(f.at(0, 1) == 2);
        CHECK(f.at(1, 1) == 10);
        CHECK(f.at(2, 1) == 8);

        const auto phi = build_sensing_matrix(op, 2, 2);
        CHECK(phi.multiply(cube.data()) == f.values());
    }

    TEST_CASE("single band with open mask is the identity") {
        const auto cube = test::random_cube(6, 5, 1, 3);
        const auto f = cassi_forward(cube, ones_operator(6, 5, 1));
        CHECK(f.values() == cube.data());
    }

    TEST_CASE("frame width") {
        const auto cube = test::random_cube(256, 256, 31, 1);
        const auto f = cassi_forward(cube, CassiOperator(test::random_binary_mask(256, 256, 2), 31, 1));
        CHECK(f.width() == 286);
        CHECK(f.height() == 256);

        const auto g = cassi_forward(test::random_cube(7, 3, 4, 1), ones_operator(7, 3, 4, 3));
        CHECK(g.width() == 7 + 3 * 3);
    }

    TEST_CASE("shape mismatch is rejected") {
        const auto cube = test::random_cube(4, 4, 3, 1);
        CHECK_THROWS_AS(cassi_forward(cube, ones_operator(4, 5, 3)), DimensionError);
        CHECK_THROWS_AS(cassi_forward(cube, ones_operator(4, 4, 2)), DimensionError);
    }

    TEST_CASE("linearity") {
        const CassiOperator op(test::random_binary_mask(5, 4, 7), 3, 2);
        const auto a = test::random_cube(5, 4, 3, 1);
        const auto b = test::random_cube(5, 4, 3, 2);
        HsiCube c(5, 4, a.grid());
        for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] = 2.0 * a.data()[i] - 0.5 * b.data()[i];
        const auto fa = cassi_forward(a, op);
        const auto fb = cassi_forward(b, op);
        const auto fc = cassi_forward(c, op);
        for (std::size_t i = 0; i < fc.size(); ++i) CHECK(fc.values()[i] == doctest::Approx(2.0 * fa.values()[i] - 0.5 * fb.values()[i]).epsilon(1e-12));
    }
}

TEST_SUITE("cassi_adjoint") {
    TEST_CASE("zero frame gives zero cube") {
        const CassiOperator op(test::random_binary_mask(4, 4, 1), 3);
        const auto cube = cassi_adjoint(CompressedFrame(op.frame_width(), 4), op);
        for (double v : cube.data()) CHECK(v == 0.0);
    }

    TEST_CASE("dot-product identity on 8x8x4") {
        for (unsigned long long seed = 0; seed < 20; ++seed) {
            const CassiOperator op(test::random_plane<CodedAperture>(8, 8, seed, 0.0, 1.0), 4, 1 + seed % 2);
            const auto h = test::random_cube(8, 8, 4, 100 + seed);
            const auto f = test::random_plane<CompressedFrame>(op.frame_width(), 8, 200 + seed);
            const double lhs = dot(cassi_forward(h, op).values(), f.values());
            const double rhs = dot(h.data(), cassi_adjoint(f, op).data());
            CHECK(test::relative_error(lhs, rhs) <= 1e-10);
        }
    }

    TEST_CASE("matches the transpose of the sensing matrix") {
        for (unsigned long long seed = 0; seed < 10; ++seed) {
            const CassiOperator op(test::random_plane<CodedAperture>(8, 8, seed, 0.0, 1.0), 4);
            const auto f = test::random_plane<CompressedFrame>(op.frame_width(), 8, 50 + seed);
            const auto phi = build_sensing_matrix(op, 8, 8);
            const auto expected = phi.multiply_transpose(f.values());
            const auto got = cassi_adjoint(f, op);
            REQUIRE(got.size() == expected.size());
            for (std::size_t i = 0; i < expected.size(); ++i) CHECK(std::abs(got.data()[i] - expected[i]) <= 1e-12);
        }
    }

    TEST_CASE("grid is carried through") {
        const auto op = ones_operator(3, 3, 2);
        const WavelengthGrid grid(400.0, 10.0, 2);
        CHECK(cassi_adjoint(CompressedFrame(4, 3), op, &grid).grid() == grid);
    }
}

TEST_SUITE("color_forward") {
    TEST_CASE("flat response collapses to the band sum") {
        const std::size_t N = 3;
        SpectralResponse k{std::vector<double>(N, 1.0), std::vector<double>(N, 1.0), std::vector<double>(N, 1.0)};
        const ColorOperator op(k, Illuminant::flat(N));
        const auto cube = test::random_cube(4, 4, N, 9);
        const auto f = color_forward(cube, op);
        for (std::size_t y = 0; y < 4; ++y)
            for (std::size_t x = 0; x < 4; ++x)
                CHECK(f.at(x, y) == doctest::Approx(cube.at(x, y, 0) + cube.at(x, y, 1) + cube.at(x, y, 2)).epsilon(1e-15));
    }

    TEST_CASE("single band scales by curve and illuminant") {
        SpectralResponse k{{0.5}, {0.25}, {0.75}};
        const ColorOperator op(k, Illuminant{{0.8}});
        const auto cube = test::random_cube(4, 2, 1, 4);
        const auto f = color_forward(cube, op);
        CHECK(f.at(0, 0) == 0.5 * 0.8 * cube.at(0, 0, 0));
        CHECK(f.at(1, 0) == 0.25 * 0.8 * cube.at(1, 0, 0));
        CHECK(f.at(0, 1) == 0.25 * 0.8 * cube.at(0, 1, 0));
        CHECK(f.at(3, 1) == 0.75 * 0.8 * cube.at(3, 1, 0));
    }

    TEST_CASE("matches a per-pixel summation oracle") {
        const std::size_t N = 3;
        const auto op = random_color_operator(N, 17);
        const auto cube = test::random_cube(4, 4, N, 18);
        const auto f = color_forward(cube, op);
        for (std::size_t y = 0; y < 4; ++y) {
            for (std::size_t x = 0; x < 4; ++x) {
                const std::vector<double>* curve = &op.response.green;
                if (x % 2 == 0 && y % 2 == 0) curve = &op.response.red;
                if (x % 2 == 1 && y % 2 == 1) curve = &op.response.blue;
                double acc = 0.0;
                for (std::size_t i = 0; i < N; ++i) acc += cube.at(x, y, i) * ((*curve)[i] * op.illuminant.spectrum[i]);
                CHECK(f.at(x, y) == acc);
            }
        }
    }

    TEST_CASE("band count mismatch is rejected") {
        const auto op = random_color_operator(3, 1);
        CHECK_THROWS_AS(color_forward(test::random_cube(4, 4, 2, 1), op), DimensionError);
    }
}

TEST_SUITE("color_adjoint") {
    TEST_CASE("zero frame gives zero cube") {
        const auto op = random_color_operator(3, 2);
        const auto cube = color_adjoint(RawColorFrame(4, 4), op);
        for (double v : cube.data()) CHECK(v == 0.0);
    }

    TEST_CASE("dot-product identity") {
        for (unsigned long long seed = 0; seed < 20; ++seed) {
            const auto op = random_color_operator(3, seed);
            const auto h = test::random_cube(4, 4, 3, 100 + seed);
            const auto f = test::random_plane<RawColorFrame>(4, 4, 200 + seed);
            const double lhs = dot(color_forward(h, op).values(), f.values());
            const double rhs = dot(h.data(), color_adjoint(f, op).data());
            CHECK(test::relative_error(lhs, rhs) <= 1e-10);
        }
    }

    TEST_CASE("flat response replicates the frame across bands") {
        const std::size_t N = 4;
        SpectralResponse k{std::vector<double>(N, 1.0), std::vector<double>(N, 1.0), std::vector<double>(N, 1.0)};
        const ColorOperator op(k, Illuminant::flat(N));
        const auto f = test::random_plane<RawColorFrame>(3, 5, 6);
        const auto cube = color_adjoint(f, op);
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t y = 0; y < 5; ++y)
                for (std::size_t x = 0; x < 3; ++x) CHECK(cube.at(x, y, i) == f.at(x, y));
    }
}

TEST_SUITE("sensing_matrix") {
    TEST_CASE("2x2 mask, two bands") {
        const auto phi = build_sensing_matrix(ones_operator(2, 2, 2), 2, 2);
        CHECK(phi.rows == 6);
        CHECK(phi.cols == 8);
        std::vector<int> per_row(phi.rows, 0);
        for (const auto& e : phi.entries) ++per_row[e.row];
        for (int n : per_row) CHECK(n <= 2);
    }

    TEST_CASE("zero mask gives an empty matrix") {
        const CassiOperator op(CodedAperture(4, 4), 3);
        const auto phi = build_sensing_matrix(op, 4, 4);
        CHECK(phi.entries.empty());
        for (double v : phi.multiply(test::random_cube(4, 4, 3, 1).data())) CHECK(v == 0.0);
    }

    TEST_CASE("matrix multiply equals the operator") {
        for (unsigned long long seed = 0; seed < 10; ++seed) {
            const CassiOperator op(test::random_binary_mask(4, 4, seed), 3);
            const auto h = test::random_cube(4, 4, 3, seed + 30);
            const auto expected = cassi_forward(h, op);
            const auto got = build_sensing_matrix(op, 4, 4).multiply(h.data());
            for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - expected.values()[i]) <= 1e-12);
        }
    }

    TEST_CASE("column cap and size mismatch") {
        CHECK_THROWS_AS(build_sensing_matrix(ones_operator(64, 64, 32), 64, 64), std::length_error);
        CHECK_THROWS_AS(build_sensing_matrix(ones_operator(4, 4, 2), 5, 4), DimensionError);
    }

    TEST_CASE("coordinate export") {
        test::TempDir dir;
        const CassiOperator op(test::random_binary_mask(3, 2, 4), 2);
        const auto phi = build_sensing_matrix(op, 3, 2);
        phi.write_coo(dir.path() / "phi.txt");
        std::ifstream in(dir.path() / "phi.txt");
        std::size_t rows = 0, cols = 0, nnz = 0;
        in >> rows >> cols >> nnz;
        CHECK(rows == phi.rows);
        CHECK(cols == phi.cols);
        REQUIRE(nnz == phi.entries.size());
        for (const auto& e : phi.entries) {
            std::size_t r = 0, c = 0;
            double v = 0.0;
            in >> r >> c >> v;
            CHECK(r == e.row);
            CHECK(c == e.col);
            CHECK(v == e.value);
        }
    }
}

TEST_SUITE("phi_phit_diagonal") {
    TEST_CASE("open mask interior reaches the band count") {
        const auto d = phi_phit_diagonal(ones_operator(6, 2, 4));
        // Frame column 3 receives x = 3, 2, 1, 0 from bands 0..3.
        CHECK(d[3] == 4.0);
        CHECK(d[0] == 1.0);
    }

    TEST_CASE("zero mask") {
        for (double v : phi_phit_diagonal(CassiOperator(CodedAperture(4, 4), 3))) CHECK(v == 0.0);
    }

    TEST_CASE("matches the dense product") {
        const CassiOperator op(test::random_plane<CodedAperture>(4, 4, 12, 0.0, 1.0), 3);
        const auto phi = build_sensing_matrix(op, 4, 4);
        std::vector<std::vector<double>> dense(phi.rows, std::vector<double>(phi.cols, 0.0));
        for (const auto& e : phi.entries) dense[e.row][e.col] += e.value;
        const auto d = phi_phit_diagonal(op);
        for (std::size_t r = 0; r < phi.rows; ++r) {
            for (std::size_t q = 0; q < phi.rows; ++q) {
                double acc = 0.0;
                for (std::size_t c = 0; c < phi.cols; ++c) acc += dense[r][c] * dense[q][c];
                if (r == q) {
                    CHECK(std::abs(acc - d[r]) <= 1e-12);
                } else {
                    CHECK(acc == 0.0);
                }
            }
        }
    }
}
