#include "latentface/dataset.hpp"

#include <cmath>
#include <string>

#include "latentface/error.hpp"

namespace latentface {

namespace {

std::vector<std::string> numbered_labels(char prefix, Index n) {
    std::vector<std::string> out;
    for (Index k = 0; k < n; ++k) out.push_back(std::string(1, prefix) + std::to_string(k));
    return out;
}

void check_labels(const std::vector<std::string>& labels, const std::vector<std::string>& expected,
                  const char* axis) {
    if (labels.size() != expected.size()) {
        throw LayoutError(std::string(axis) + " axis has " + std::to_string(labels.size()) +
                          " entries, the BU-3DFE layout needs " + std::to_string(expected.size()));
    }
    for (std::size_t k = 0; k < labels.size(); ++k) {
        if (labels[k] != expected[k]) {
            throw LayoutError(std::string(axis) + " label '" + labels[k] + "' at position " + std::to_string(k) +
                              ", expected '" + expected[k] + "'");
        }
    }
}

}  // namespace

const char* axis_name(Axis a) noexcept {
    switch (a) {
    case Axis::person: return "person";
    case Axis::expression: return "expression";
    case Axis::intensity: return "intensity";
    case Axis::rotation: return "rotation";
    }
    return "?";
}

StyleLayout StyleLayout::for_dim(Index d) {
    if (d == 18 * 512) return {18, 512};
    return {1, d};
}

const std::vector<std::string>& AxisLabels::of(Axis a) const {
    switch (a) {
    case Axis::person: return persons;
    case Axis::expression: return expressions;
    case Axis::intensity: return intensities;
    case Axis::rotation: return rotations;
    }
    throw ShapeError("unknown axis");
}

AxisLabels AxisLabels::numbered(Index persons, Index expressions, Index intensities, Index rotations) {
    return {numbered_labels('p', persons), numbered_labels('e', expressions), numbered_labels('i', intensities),
            numbered_labels('r', rotations)};
}

LatentDataset::LatentDataset(DenseTensor latents, AxisLabels labels, StyleLayout layout)
    : latents_(std::move(latents)), labels_(std::move(labels)), layout_(layout) {
    if (latents_.order() != 5) {
        throw ShapeError("latent dataset must be an order-5 tensor, got order " + std::to_string(latents_.order()));
    }
    for (Axis a : kParameterAxes) {
        if (static_cast<Index>(labels_.of(a).size()) != latents_.dim(mode_of(a))) {
            throw ShapeError(std::string(axis_name(a)) + " axis has " + std::to_string(latents_.dim(mode_of(a))) +
                             " entries but " + std::to_string(labels_.of(a).size()) + " labels");
        }
    }
    if (layout_.num_style_vectors < 1 || layout_.style_dim < 1 || layout_.latent_dim() != latents_.dim(1)) {
        throw ShapeError("style layout " + std::to_string(layout_.num_style_vectors) + "x" +
                         std::to_string(layout_.style_dim) + " does not match latent dimension " +
                         std::to_string(latents_.dim(1)));
    }
    for (double x : latents_.values()) {
        if (!std::isfinite(x)) throw NumericError("latent dataset contains non-finite values");
    }
}

Vector LatentDataset::cell(Index person, Index expression, Index intensity, Index rotation) const {
    const std::array<Index, 5> idx{0, person, expression, intensity, rotation};
    const Index first = latents_.linear_index(idx);
    return Eigen::Map<const Vector>(latents_.data().data() + first, latent_dim());
}

LatentDataset LatentDataset::without_person(Index person) const {
    const Index p = count(Axis::person);
    if (person < 0 || person >= p) throw ShapeError("person index out of range");
    if (p == 1) throw ShapeError("cannot drop the only person");
    Shape shape = latents_.shape();
    shape[1] = p - 1;
    const Index d = latent_dim();
    const Index rest = latents_.size() / (d * p);
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(d * (p - 1) * rest));
    const double* src = latents_.data().data();
    for (Index r = 0; r < rest; ++r) {
        for (Index q = 0; q < p; ++q) {
            if (q == person) continue;
            const double* fiber = src + (r * p + q) * d;
            data.insert(data.end(), fiber, fiber + d);
        }
    }
    AxisLabels labels = labels_;
    labels.persons.erase(labels.persons.begin() + person);
    return LatentDataset(DenseTensor(std::move(shape), std::move(data)), std::move(labels), layout_);
}

void LatentBatch::validate() const {
    if (static_cast<Index>(names.size()) != latents.cols()) {
        throw ShapeError("latent batch has " + std::to_string(latents.cols()) + " columns but " +
                         std::to_string(names.size()) + " names");
    }
    if (layout.num_style_vectors < 1 || layout.style_dim < 1 || layout.latent_dim() != latents.rows()) {
        throw ShapeError("style layout does not match latent batch dimension " + std::to_string(latents.rows()));
    }
}

const std::vector<std::string>& Bu3dfeLayout::expressions() {
    static const std::vector<std::string> v{"anger", "disgust", "fear", "happiness", "sadness", "surprise"};
    return v;
}

const std::vector<std::string>& Bu3dfeLayout::intensities() {
    static const std::vector<std::string> v{"0", "1", "2", "3", "4"};
    return v;
}

const std::vector<std::string>& Bu3dfeLayout::rotations() {
    static const std::vector<std::string> v{"left", "right"};
    return v;
}

void validate_bu3dfe_layout(const LatentDataset& data, const LayoutOptions& options) {
    const auto& labels = data.labels();
    check_labels(labels.rotations, Bu3dfeLayout::rotations(), "rotation");
    if (options.allow_alternative_grid) return;
    check_labels(labels.expressions, Bu3dfeLayout::expressions(), "expression");
    check_labels(labels.intensities, Bu3dfeLayout::intensities(), "intensity");
}

}  // namespace latentface
