#pragma once

#include <array>
#include <cstdint>

#include "latentface/dataset.hpp"
#include "latentface/decomposition.hpp"
#include "latentface/tensor.hpp"

namespace latentface {

/// Canonical parameters q'_i: weights over the dataset entries of each axis.
/// A one-hot vector selects an in-sample person/expression/intensity/rotation.
struct CanonicalParams {
    std::array<Vector, 4> v;  // indexed by slot_of(Axis)
    Vector& operator[](Axis a) { return v[slot_of(a)]; }
    const Vector& operator[](Axis a) const { return v[slot_of(a)]; }
};

/// Compact parameters q_i = U_i^T q'_i.
struct CompactParams {
    std::array<Vector, 4> v;
    Vector& operator[](Axis a) { return v[slot_of(a)]; }
    const Vector& operator[](Axis a) const { return v[slot_of(a)]; }
};

/**
 * Fitted multilinear latent model
 *
 *   w_hat = w_bar + C x2 q2^T x3 q3^T x4 q4^T x5 q5^T,   C = S x1 U1,
 *
 * holding the mean latent, the latent-space core C (D x P' x E' x I' x R')
 * and the square (or column-truncated) factors U2..U5.
 */
class TensorModel {
public:
    TensorModel(Vector mean_latent, DenseTensor core, std::array<Matrix, 4> factors, AxisLabels labels,
                StyleLayout layout);

    const Vector& mean_latent() const noexcept { return mean_; }
    const DenseTensor& core() const noexcept { return core_; }
    const Matrix& factor(Axis a) const { return factors_[slot_of(a)]; }
    const std::array<Matrix, 4>& factors() const noexcept { return factors_; }
    const AxisLabels& labels() const noexcept { return labels_; }
    const StyleLayout& layout() const noexcept { return layout_; }

    Index latent_dim() const noexcept { return mean_.size(); }
    /// Number of dataset entries along an axis (factor rows).
    Index count(Axis a) const { return factor(a).rows(); }
    /// Compact parameter length along an axis (factor columns).
    Index rank(Axis a) const { return factor(a).cols(); }
    /// Shape of a full-rank parameter tensor, P' x E' x I' x R'.
    Shape param_shape() const;

    /// C_(1), the D x (P'E'I'R') mode-1 unfolding of the core, as a view.
    Eigen::Map<const Matrix> core_matrix() const { return core_.mode1_view(); }

    friend bool operator==(const TensorModel& a, const TensorModel& b);

private:
    Vector mean_;
    DenseTensor core_;
    std::array<Matrix, 4> factors_;
    AxisLabels labels_;
    StyleLayout layout_;
};

/// C = S x1 U1 from a decomposition of the dataset's latent tensor.
TensorModel model_from_hosvd(const HosvdResult& h, AxisLabels labels, StyleLayout layout);

/// Mean-center, decompose and build the model in one step.
TensorModel fit_model(const LatentDataset& data);

CompactParams to_compact(const TensorModel& m, const CanonicalParams& canonical);

/// One-hot canonical parameters for a grid cell.
CanonicalParams one_hot(const TensorModel& m, Index person, Index expression, Index intensity, Index rotation);

Vector reconstruct_canonical(const TensorModel& m, const CanonicalParams& q);
Vector reconstruct_compact(const TensorModel& m, const CompactParams& q);
/// w_bar_i + sum C_ijklm Q_jklm for a parameter tensor Q of param_shape().
Vector reconstruct_full_rank(const TensorModel& m, const DenseTensor& q);

/// Compact parameter whose canonical form is the uniform average over the
/// axis entries: (1/N) U^T 1.
Vector mean_params(const TensorModel& m, Axis axis);

/// Model with the intensity subspace cut to its dominant singular vector.
/// The singleton intensity mode of the core is squeezed away.
class TruncatedModel {
public:
    TruncatedModel(Vector mean_latent, DenseTensor core, Vector intensity_basis, Matrix person_factor,
                   Matrix expression_factor, Matrix rotation_factor);

    const Vector& mean_latent() const noexcept { return mean_; }
    /// C~, shape D x P' x E' x R'.
    const DenseTensor& core() const noexcept { return core_; }
    /// u~4, the first column of U4.
    const Vector& intensity_basis() const noexcept { return u4_; }
    const Matrix& factor(Axis a) const;

private:
    Vector mean_;
    DenseTensor core_;
    Vector u4_;
    Matrix u2_;
    Matrix u3_;
    Matrix u5_;
};

TruncatedModel truncate_intensity(const TensorModel& m);

/// w_bar + q4 * (C~ x2 q2^T x3 q3^T x5 q5^T) with compact q2, q3, q5.
Vector reconstruct_truncated(const TruncatedModel& tm, const Vector& q2, const Vector& q3, double q4,
                             const Vector& q5);

/// Contracts C~ with a P' x E' x R' parameter tensor: n_i = C~_ijkm Q_jkm.
Vector contract_truncated(const TruncatedModel& tm, const DenseTensor& q);

/// Largest relative reconstruction error over all in-sample grid cells when
/// rebuilt from one-hot canonical parameters.
double in_sample_error(const TensorModel& m, const LatentDataset& data);

/// FNV-1a over the model's values rounded to 32-bit floats, its shapes and
/// labels. Stable across a container write and read.
std::uint64_t fingerprint(const TensorModel& m);

}  // namespace latentface
