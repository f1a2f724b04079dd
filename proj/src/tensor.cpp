#include "latentface/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "latentface/error.hpp"

namespace latentface {

namespace {

// The buffer seen from one mode: `left` contiguous elements for the lower
// modes, `size` entries of the mode itself, and `right` repetitions of that
// block for the higher modes.
struct ModeBlocks {
    Index left = 1;
    Index size = 1;
    Index right = 1;
};

void check_mode(const Shape& shape, int mode) {
    if (mode < 1 || mode > static_cast<int>(shape.size())) {
        throw ShapeError("mode " + std::to_string(mode) + " out of range for order-" +
                         std::to_string(shape.size()) + " tensor");
    }
}

ModeBlocks blocks(const Shape& shape, int mode) {
    check_mode(shape, mode);
    ModeBlocks b;
    for (int k = 0; k < mode - 1; ++k) b.left *= shape[k];
    b.size = shape[mode - 1];
    for (std::size_t k = mode; k < shape.size(); ++k) b.right *= shape[k];
    return b;
}

std::string shape_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t k = 0; k < shape.size(); ++k) {
        if (k) s += ",";
        s += std::to_string(shape[k]);
    }
    return s + "]";
}

}  // namespace

Index shape_product(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

DenseTensor::DenseTensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_.empty() || shape_.size() > kMaxOrder) {
        throw ShapeError("tensor order must be in [1, 8], got " + std::to_string(shape_.size()));
    }
    for (Index s : shape_) {
        if (s < 1) throw ShapeError("tensor sizes must be >= 1, got " + shape_string(shape_));
    }
    if (shape_product(shape_) != static_cast<Index>(data_.size())) {
        throw ShapeError("shape " + shape_string(shape_) + " does not match " +
                         std::to_string(data_.size()) + " elements");
    }
}

DenseTensor DenseTensor::zeros(Shape shape) {
    const Index n = shape_product(shape);
    return DenseTensor(std::move(shape), std::vector<double>(static_cast<std::size_t>(std::max<Index>(n, 0)), 0.0));
}

Index DenseTensor::dim(int mode) const {
    check_mode(shape_, mode);
    return shape_[mode - 1];
}

Index DenseTensor::linear_index(std::span<const Index> index) const {
    if (index.size() != shape_.size()) {
        throw ShapeError("index has " + std::to_string(index.size()) + " entries for order-" +
                         std::to_string(shape_.size()) + " tensor");
    }
    Index linear = 0;
    Index stride = 1;
    for (std::size_t k = 0; k < shape_.size(); ++k) {
        if (index[k] < 0 || index[k] >= shape_[k]) {
            throw ShapeError("index out of range on mode " + std::to_string(k + 1));
        }
        linear += index[k] * stride;
        stride *= shape_[k];
    }
    return linear;
}

double DenseTensor::operator()(std::span<const Index> index) const {
    return data_[static_cast<std::size_t>(linear_index(index))];
}

double DenseTensor::frobenius_norm() const {
    return Eigen::Map<const Vector>(data_.data(), size()).norm();
}

Eigen::Map<const Matrix> DenseTensor::mode1_view() const {
    return {data_.data(), shape_[0], size() / shape_[0]};
}

DenseTensor DenseTensor::reshaped(Shape shape) const {
    return DenseTensor(std::move(shape), data_);
}

Matrix unfold(const DenseTensor& t, int mode) {
    const auto b = blocks(t.shape(), mode);
    const double* src = t.data().data();
    Matrix out(b.size, b.left * b.right);
    // column = a + left * r for the element at a + left * (i + size * r)
    for (Index r = 0; r < b.right; ++r) {
        Eigen::Map<const Matrix> block(src + r * b.left * b.size, b.left, b.size);
        out.middleCols(r * b.left, b.left) = block.transpose();
    }
    return out;
}

DenseTensor fold(const Matrix& m, int mode, const Shape& shape) {
    const auto b = blocks(shape, mode);
    if (m.rows() != b.size || m.cols() != b.left * b.right) {
        throw ShapeError("cannot fold a " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                         " matrix into shape " + shape_string(shape) + " along mode " + std::to_string(mode));
    }
    std::vector<double> data(static_cast<std::size_t>(shape_product(shape)));
    for (Index r = 0; r < b.right; ++r) {
        Eigen::Map<Matrix> block(data.data() + r * b.left * b.size, b.left, b.size);
        block = m.middleCols(r * b.left, b.left).transpose();
    }
    return DenseTensor(shape, std::move(data));
}

DenseTensor mode_product(const DenseTensor& t, const Matrix& m, int mode) {
    const auto b = blocks(t.shape(), mode);
    if (m.cols() != b.size) {
        throw ShapeError("mode-" + std::to_string(mode) + " product needs " + std::to_string(b.size) +
                         " columns, matrix has " + std::to_string(m.cols()));
    }
    Shape shape = t.shape();
    shape[mode - 1] = m.rows();
    std::vector<double> data(static_cast<std::size_t>(b.left * m.rows() * b.right));
    const double* src = t.data().data();
    if (b.left == 1) {
        Eigen::Map<const Matrix> in(src, b.size, b.right);
        Eigen::Map<Matrix>(data.data(), m.rows(), b.right).noalias() = m * in;
    } else {
        for (Index r = 0; r < b.right; ++r) {
            Eigen::Map<const Matrix> in(src + r * b.left * b.size, b.left, b.size);
            Eigen::Map<Matrix> out(data.data() + r * b.left * m.rows(), b.left, m.rows());
            out.noalias() = in * m.transpose();
        }
    }
    return DenseTensor(std::move(shape), std::move(data));
}

DenseTensor mode_product(const DenseTensor& t, const Vector& v, int mode) {
    return mode_product(t, Matrix(v.transpose()), mode);
}

Matrix mode_gram(const DenseTensor& t, int mode) {
    const auto b = blocks(t.shape(), mode);
    Matrix gram = Matrix::Zero(b.size, b.size);
    const double* src = t.data().data();
    if (b.left == 1) {
        Eigen::Map<const Matrix> a(src, b.size, b.right);
        gram.selfadjointView<Eigen::Lower>().rankUpdate(a);
    } else {
        for (Index r = 0; r < b.right; ++r) {
            Eigen::Map<const Matrix> block(src + r * b.left * b.size, b.left, b.size);
            gram.selfadjointView<Eigen::Lower>().rankUpdate(block.transpose());
        }
    }
    return gram.selfadjointView<Eigen::Lower>();
}

DenseTensor outer(std::span<const Vector> vectors) {
    if (vectors.empty()) throw ShapeError("outer product of an empty list");
    Shape shape;
    for (const auto& v : vectors) {
        if (v.size() == 0) throw ShapeError("outer product of an empty vector");
        shape.push_back(v.size());
    }
    std::vector<double> data(vectors[0].data(), vectors[0].data() + vectors[0].size());
    for (std::size_t k = 1; k < vectors.size(); ++k) {
        const Vector& v = vectors[k];
        std::vector<double> next;
        next.reserve(data.size() * static_cast<std::size_t>(v.size()));
        for (Index i = 0; i < v.size(); ++i) {
            for (double x : data) next.push_back(x * v[i]);
        }
        data = std::move(next);
    }
    return DenseTensor(std::move(shape), std::move(data));
}

DenseTensor outer(std::initializer_list<Vector> vectors) {
    return outer(std::span<const Vector>(vectors.begin(), vectors.size()));
}

DenseTensor squeeze(const DenseTensor& t, int mode) {
    if (t.dim(mode) != 1) {
        throw ShapeError("cannot squeeze mode " + std::to_string(mode) + " of size " +
                         std::to_string(t.dim(mode)));
    }
    if (t.order() == 1) return t;
    Shape shape = t.shape();
    shape.erase(shape.begin() + (mode - 1));
    return t.reshaped(std::move(shape));
}

DenseTensor leading_slices(const DenseTensor& t, int mode, Index count) {
    const auto b = blocks(t.shape(), mode);
    if (count < 1 || count > b.size) {
        throw ShapeError("cannot keep " + std::to_string(count) + " of " + std::to_string(b.size) +
                         " slices on mode " + std::to_string(mode));
    }
    Shape shape = t.shape();
    shape[mode - 1] = count;
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(b.left * count * b.right));
    const double* src = t.data().data();
    for (Index r = 0; r < b.right; ++r) {
        const double* first = src + r * b.left * b.size;
        data.insert(data.end(), first, first + b.left * count);
    }
    return DenseTensor(std::move(shape), std::move(data));
}

DenseTensor operator-(const DenseTensor& a, const DenseTensor& b) {
    if (a.shape() != b.shape()) throw ShapeError("tensor difference with mismatched shapes");
    std::vector<double> data(a.values());
    for (std::size_t k = 0; k < data.size(); ++k) data[k] -= b.values()[k];
    return DenseTensor(a.shape(), std::move(data));
}

DenseTensor operator*(double s, const DenseTensor& t) {
    std::vector<double> data(t.values());
    for (double& x : data) x *= s;
    return DenseTensor(t.shape(), std::move(data));
}

double relative_error(const DenseTensor& a, const DenseTensor& b) {
    const double diff = (a - b).frobenius_norm();
    const double ref = b.frobenius_norm();
    return ref > 0.0 ? diff / ref : diff;
}

}  // namespace latentface
