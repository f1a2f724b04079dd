#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "latentface/tensor.hpp"

namespace lf_test {

using latentface::DenseTensor;
using latentface::Index;
using latentface::Matrix;
using latentface::Shape;
using latentface::Vector;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double normal() { return normal_(gen_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
    Index integer(Index lo, Index hi) { return std::uniform_int_distribution<Index>(lo, hi)(gen_); }

    Matrix matrix(Index r, Index c) {
        Matrix m(r, c);
        for (Index j = 0; j < c; ++j)
            for (Index i = 0; i < r; ++i) m(i, j) = normal();
        return m;
    }
    Vector vector(Index n) { return matrix(n, 1); }

    DenseTensor tensor(const Shape& shape) {
        std::vector<double> v(static_cast<std::size_t>(latentface::shape_product(shape)));
        for (double& x : v) x = normal();
        return DenseTensor(shape, std::move(v));
    }

    /// Random orthogonal n x n matrix.
    Matrix orthogonal(Index n);

private:
    std::mt19937_64 gen_;
    std::normal_distribution<double> normal_;
};

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Values rounded through 32-bit floats, as stored in a container.
DenseTensor to_f32(const DenseTensor& t);
Matrix to_f32(const Matrix& m);

}  // namespace lf_test
