#pragma once

#include <array>
#include <string>
#include <vector>

#include "latentface/tensor.hpp"

namespace latentface {

/// Dataset axes after the latent axis, in tensor mode order 2..5.
enum class Axis : int { person = 2, expression = 3, intensity = 4, rotation = 5 };

inline constexpr std::array<Axis, 4> kParameterAxes{Axis::person, Axis::expression, Axis::intensity,
                                                    Axis::rotation};

constexpr int mode_of(Axis a) noexcept { return static_cast<int>(a); }
constexpr std::size_t slot_of(Axis a) noexcept { return static_cast<std::size_t>(static_cast<int>(a) - 2); }
const char* axis_name(Axis a) noexcept;

/// How a flat latent of length D splits into style vectors (18 x 512 for a
/// 1024px generator in W+).
struct StyleLayout {
    Index num_style_vectors = 1;
    Index style_dim = 1;

    Index latent_dim() const noexcept { return num_style_vectors * style_dim; }
    /// 18 x 512 when D == 9216, otherwise 1 x D.
    static StyleLayout for_dim(Index d);
    friend bool operator==(const StyleLayout&, const StyleLayout&) = default;
};

struct AxisLabels {
    std::vector<std::string> persons;
    std::vector<std::string> expressions;
    std::vector<std::string> intensities;
    std::vector<std::string> rotations;

    const std::vector<std::string>& of(Axis a) const;
    /// Labels "p0".."p{P-1}", "e0".., "i0".., "r0"...
    static AxisLabels numbered(Index persons, Index expressions, Index intensities, Index rotations);
    friend bool operator==(const AxisLabels&, const AxisLabels&) = default;
};

/// A grid of latent codes, tensor shape D x P x E x I x R.
class LatentDataset {
public:
    /// Throws ShapeError on label/shape/layout mismatch, NumericError on
    /// non-finite values.
    LatentDataset(DenseTensor latents, AxisLabels labels, StyleLayout layout);

    const DenseTensor& latents() const noexcept { return latents_; }
    const AxisLabels& labels() const noexcept { return labels_; }
    const StyleLayout& layout() const noexcept { return layout_; }

    Index latent_dim() const { return latents_.dim(1); }
    Index count(Axis a) const { return latents_.dim(mode_of(a)); }

    /// Latent at one grid cell (p, e, i, r).
    Vector cell(Index person, Index expression, Index intensity, Index rotation) const;

    /// All cells except one person, in the same axis order.
    LatentDataset without_person(Index person) const;

    friend bool operator==(const LatentDataset&, const LatentDataset&) = default;

private:
    DenseTensor latents_;
    AxisLabels labels_;
    StyleLayout layout_;
};

/// Loose latent codes, one per column, e.g. inputs and outputs of edits.
struct LatentBatch {
    Matrix latents;                    // D x N
    std::vector<std::string> names;    // N entries
    StyleLayout layout;

    /// Throws ShapeError on name/column or layout mismatch.
    void validate() const;
    friend bool operator==(const LatentBatch& a, const LatentBatch& b) {
        return a.names == b.names && a.layout == b.layout && identical(a.latents, b.latents);
    }
};

/// Canonical BU-3DFE grid: six basic emotions, neutral replicated into
/// intensity slot 0 of every expression, four graded intensities, two views.
struct Bu3dfeLayout {
    static const std::vector<std::string>& expressions();   // anger ... surprise
    static const std::vector<std::string>& intensities();   // "0" .. "4"
    static const std::vector<std::string>& rotations();     // left, right
};

struct LayoutOptions {
    /// Accept any expression/intensity grid; only the two-view rotation axis
    /// is still enforced.
    bool allow_alternative_grid = false;
};

/// Throws LayoutError naming the first offending label or size.
void validate_bu3dfe_layout(const LatentDataset& data, const LayoutOptions& options = {});

}  // namespace latentface
