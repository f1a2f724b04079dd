#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "latentface/dataset.hpp"

namespace latentface {

enum class ExpressionOffsets {
    centered,     // Gaussian offsets with their mean over expressions removed
    orthogonal,   // mutually orthogonal offsets of equal norm (needs E <= D)
    raw,          // independent Gaussian offsets
};

/// Planted-structure generator settings:
///
///   w(p,e,i,r) = base + person_p + ramp(i) d_e + sign(r) d_rot + noise
///
/// Scales are the per-coordinate standard deviation of each planted term.
/// An empty ramp means linspace(0, 1, I); rotation signs are
/// linspace(1, -1, R).
struct SyntheticSpec {
    std::array<Index, 5> dims{64, 5, 6, 5, 2};   // D, P, E, I, R
    double base_scale = 1.0;
    double person_scale = 1.0;
    double expression_scale = 1.0;
    double rotation_scale = 1.0;
    std::vector<double> intensity_ramp;
    ExpressionOffsets offsets = ExpressionOffsets::centered;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;

    /// Throws ShapeError on a size < 1, a negative scale, or a ramp whose
    /// length is not I.
    void validate() const;
    std::vector<double> ramp() const;
    std::vector<double> rotation_signs() const;
};

struct GroundTruth {
    Vector base;
    Matrix person_offsets;       // D x P
    Matrix expression_offsets;   // D x E
    Vector rotation_offset;
    std::vector<double> ramp;
    std::vector<double> rotation_signs;

    /// d_e minus the mean offset over expressions.
    Vector centered_expression_offset(Index e) const;
};

struct SyntheticData {
    LatentDataset dataset;
    GroundTruth truth;
};

/// Deterministic per seed. Labels are numbered, except that the expression,
/// intensity and rotation axes take the BU-3DFE names when their sizes are
/// 6, 5 and 2. The style layout is StyleLayout::for_dim(D).
SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace latentface
