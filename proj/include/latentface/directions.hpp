#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "latentface/model.hpp"

namespace latentface {

enum class DirectionKind : std::uint8_t { expression = 0, rotation = 1 };

const char* kind_name(DirectionKind k) noexcept;

/// A latent-space edit direction. The vector is stored at the precision of
/// the container format (32-bit floats promoted to double) so a direction
/// applies identically before and after a write/read cycle.
class SemanticDirection {
public:
    /// Throws ShapeError for an empty vector and NumericError for a
    /// non-finite or all-zero one.
    SemanticDirection(std::string name, DirectionKind kind, Vector vector, std::uint64_t model_fingerprint);

    const std::string& name() const noexcept { return name_; }
    DirectionKind kind() const noexcept { return kind_; }
    const Vector& vector() const noexcept { return vector_; }
    std::uint64_t model_fingerprint() const noexcept { return fingerprint_; }
    Index latent_dim() const noexcept { return vector_.size(); }

    friend bool operator==(const SemanticDirection& a, const SemanticDirection& b) {
        return a.name_ == b.name_ && a.kind_ == b.kind_ && a.fingerprint_ == b.fingerprint_ &&
               identical(a.vector_, b.vector_);
    }

private:
    std::string name_;
    DirectionKind kind_;
    Vector vector_;
    std::uint64_t fingerprint_;
};

/// n = C~ contracted with q2_bar (x) (row e of U3) (x) q5_bar. The sign is
/// chosen so that positive strength moves along the model's own
/// high-minus-low intensity difference for that expression.
SemanticDirection expression_direction(const TruncatedModel& tm, const TensorModel& m, Index expression);

/// (1/sqrt 2) [1, -1]^T U5: the difference of the two view rows.
Vector rotation_parameter(const Matrix& rotation_factor);

/// n = C~ contracted with q4_bar * (q2_bar (x) q3_bar (x) q5_rot), where
/// q4_bar = (1/I) 1^T u~4. Requires exactly two rotation entries.
SemanticDirection rotation_direction(const TruncatedModel& tm, const TensorModel& m);

/// Every expression direction followed by "yaw" when the model has two views.
std::vector<SemanticDirection> all_directions(const TensorModel& m);

struct EditRequest {
    Vector latent;
    SemanticDirection direction;
    double strength = 0.0;   // q4 for expressions, beta for yaw
};

/// w + strength * n.
Vector apply_edit(const EditRequest& req);
Vector apply_edit(const Vector& latent, const SemanticDirection& direction, double strength);

/// Pairwise cosine similarities; exact ones on the diagonal.
Matrix direction_orthogonality_report(std::span<const SemanticDirection> dirs);

}  // namespace latentface
