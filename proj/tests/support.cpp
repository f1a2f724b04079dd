#include "support.hpp"

#include <atomic>

#include <Eigen/QR>

#include <unistd.h>

namespace lf_test {

Matrix Rng::orthogonal(Index n) {
    Eigen::HouseholderQR<Matrix> qr(matrix(n, n));
    return qr.householderQ() * Matrix::Identity(n, n);
}

TempDir::TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("lf_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

DenseTensor to_f32(const DenseTensor& t) {
    std::vector<double> v(t.values());
    for (double& x : v) x = static_cast<float>(x);
    return DenseTensor(t.shape(), std::move(v));
}

Matrix to_f32(const Matrix& m) { return m.cast<float>().cast<double>(); }

}  // namespace lf_test
