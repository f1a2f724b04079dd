#pragma once

#include <vector>

#include "latentface/tensor.hpp"

namespace latentface {

/// Number of modes of the latent data tensor: latent, person, expression,
/// intensity, rotation.
inline constexpr int kDataOrder = 5;

struct MeanCentered {
    DenseTensor centered;
    Vector mean_latent;
};

/// Subtracts the average mode-1 fiber from every mode-1 fiber of an order-5
/// tensor.
MeanCentered mean_center(const DenseTensor& t);

/**
 * Higher-order SVD of a mean-centered order-5 tensor:
 *
 *   T - mean (x) 1 (x) 1 (x) 1 (x) 1 = S x1 U1 x2 U2 x3 U3 x4 U4 x5 U5
 *
 * Factor n holds the left singular vectors of the mode-n unfolding by
 * descending singular value. U2..U5 are square. U1 is economy sized when the
 * latent dimension exceeds the number of grid cells: it then has one column
 * per cell and the core's first mode shrinks to match. Columns past the
 * numerical rank of a mode are an orthonormal completion and are reported in
 * `numerical_rank`.
 */
struct HosvdResult {
    DenseTensor core = DenseTensor::zeros({1});
    std::vector<Matrix> factors;                // U1..U5, index 0 is mode 1
    Vector mean_latent;
    std::vector<Vector> singular_values;        // per mode, descending
    std::vector<Index> numerical_rank;          // per mode
    bool degenerate = false;                    // centered data identically zero

    const Matrix& factor(int mode) const { return factors.at(static_cast<std::size_t>(mode - 1)); }
    bool rank_deficient(int mode) const;
};

HosvdResult hosvd(const DenseTensor& t);

/// Keeps the leading `rank` columns of one factor and the matching leading
/// core slices. Because the factor is orthonormal this equals projecting the
/// centered data through the retained factors.
HosvdResult truncate_factor(const HosvdResult& h, int mode, Index rank);

/// S x1 U1 ... x5 U5, the centered reconstruction.
DenseTensor recompose_centered(const HosvdResult& h);

/// Adds the mean latent back onto a centered order-5 tensor.
DenseTensor add_mean(const DenseTensor& centered, const Vector& mean_latent);

struct HosvdDiagnostics {
    double reconstruction_error = 0.0;    // relative Frobenius, against the input
    double orthonormality = 0.0;          // max over factors of max |U^T U - I|
    double all_orthogonality = 0.0;       // max over modes of |<S_a, S_b>| / ||S||^2, a != b
    bool ordered = true;                  // slice norms non-increasing on every mode
};

HosvdDiagnostics diagnose(const HosvdResult& h, const DenseTensor& original);

/// max over modes of the largest off-diagonal entry of the core's mode-n
/// Gram matrix, relative to ||S||_F^2.
double all_orthogonality(const DenseTensor& core);

}  // namespace latentface
