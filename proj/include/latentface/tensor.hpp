#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace latentface {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Shape = std::vector<Index>;

inline constexpr int kMaxOrder = 8;

/**
 * Dense N-way array of doubles.
 *
 * Storage is generalized column-major: the first mode varies fastest, so the
 * element (i1, ..., iN) lives at i1 + I1*(i2 + I2*(i3 + ...)). Modes are
 * numbered from 1 as in the Tucker literature.
 *
 * The mode-n unfolding is the In x (prod of the other sizes) matrix whose
 * column index enumerates the remaining modes with the lower-numbered ones
 * varying fastest. Under this layout the mode-1 unfolding is the raw buffer
 * viewed as an I1 x (I2...IN) column-major matrix.
 *
 * Tensors are values: nothing here mutates a tensor after construction.
 */
class DenseTensor {
public:
    /// Throws ShapeError unless every size is >= 1, the order is in
    /// [1, kMaxOrder] and data.size() equals the product of the sizes.
    DenseTensor(Shape shape, std::vector<double> data);

    static DenseTensor zeros(Shape shape);

    const Shape& shape() const noexcept { return shape_; }
    int order() const noexcept { return static_cast<int>(shape_.size()); }
    /// Size of a 1-based mode.
    Index dim(int mode) const;
    Index size() const noexcept { return static_cast<Index>(data_.size()); }

    std::span<const double> data() const noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    double operator()(std::span<const Index> index) const;
    double operator()(std::initializer_list<Index> index) const {
        return (*this)(std::span<const Index>(index.begin(), index.size()));
    }

    Index linear_index(std::span<const Index> index) const;

    double frobenius_norm() const;

    /// View of the mode-1 unfolding without copying.
    Eigen::Map<const Matrix> mode1_view() const;

    /// Same values with a new shape of equal element count.
    DenseTensor reshaped(Shape shape) const;

    friend bool operator==(const DenseTensor& a, const DenseTensor& b) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

Index shape_product(const Shape& shape);

/// Same size and bitwise-equal entries (Eigen's operator== asserts on a size
/// mismatch).
template <class A, class B>
bool identical(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || (a.array() == b.array()).all());
}

/// Mode-n unfolding (mode is 1-based).
Matrix unfold(const DenseTensor& t, int mode);

/// Inverse of unfold for the given target shape.
DenseTensor fold(const Matrix& m, int mode, const Shape& shape);

/// t x_mode m: replaces the mode size with m.rows(). Requires
/// m.cols() == t.dim(mode).
DenseTensor mode_product(const DenseTensor& t, const Matrix& m, int mode);

/// Contraction with a vector along one mode; the mode is kept with size 1.
DenseTensor mode_product(const DenseTensor& t, const Vector& v, int mode);

/// Gram matrix of the mode-n unfolding, A_(n) A_(n)^T, computed blockwise.
Matrix mode_gram(const DenseTensor& t, int mode);

/// result(i1..iN) = v1(i1) * ... * vN(iN).
DenseTensor outer(std::span<const Vector> vectors);
DenseTensor outer(std::initializer_list<Vector> vectors);

/// Drops the given size-1 mode.
DenseTensor squeeze(const DenseTensor& t, int mode);

/// Keeps indices [0, count) of one mode.
DenseTensor leading_slices(const DenseTensor& t, int mode, Index count);

DenseTensor operator-(const DenseTensor& a, const DenseTensor& b);
DenseTensor operator*(double s, const DenseTensor& t);

/// ||a - b||_F / ||b||_F, or ||a||_F when b is zero.
double relative_error(const DenseTensor& a, const DenseTensor& b);

}  // namespace latentface
