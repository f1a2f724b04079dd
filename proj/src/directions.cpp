#include "latentface/directions.hpp"

#include <cmath>
#include <string>

#include <spdlog/spdlog.h>

#include "latentface/error.hpp"

namespace latentface {

namespace {

// Average in-sample change from a low to the highest intensity slot for one
// expression, taken over persons and views.
Vector intensity_difference(const TensorModel& m, Index expression) {
    const Index levels = m.count(Axis::intensity);
    const Index high = levels - 1;
    const Index low = levels >= 3 ? 1 : 0;
    const Vector step = Vector::Unit(levels, high) - Vector::Unit(levels, low);
    CompactParams q;
    q[Axis::person] = mean_params(m, Axis::person);
    q[Axis::expression] = m.factor(Axis::expression).row(expression).transpose();
    q[Axis::intensity] = m.factor(Axis::intensity).transpose() * step;
    q[Axis::rotation] = mean_params(m, Axis::rotation);
    return reconstruct_compact(m, q) - m.mean_latent();
}

}  // namespace

const char* kind_name(DirectionKind k) noexcept {
    return k == DirectionKind::expression ? "expression" : "rotation";
}

SemanticDirection::SemanticDirection(std::string name, DirectionKind kind, Vector vector,
                                     std::uint64_t model_fingerprint)
    : name_(std::move(name)),
      kind_(kind),
      vector_(vector.cast<float>().cast<double>()),
      fingerprint_(model_fingerprint) {
    if (vector_.size() == 0) throw ShapeError("direction '" + name_ + "' is empty");
    if (!vector_.allFinite()) throw NumericError("direction '" + name_ + "' has non-finite entries");
    if (vector_.cwiseAbs().maxCoeff() == 0.0) {
        throw NumericError("direction '" + name_ + "' is identically zero (degenerate model)");
    }
}

SemanticDirection expression_direction(const TruncatedModel& tm, const TensorModel& m, Index expression) {
    const Index count = m.count(Axis::expression);
    if (expression < 0 || expression >= count) {
        throw ShapeError("expression index " + std::to_string(expression) + " out of range [0, " +
                         std::to_string(count) + ")");
    }
    const Vector q2 = mean_params(m, Axis::person);
    const Vector q3 = tm.factor(Axis::expression).row(expression).transpose();
    const Vector q5 = mean_params(m, Axis::rotation);
    Vector n = contract_truncated(tm, outer({q2, q3, q5}));
    if (m.count(Axis::intensity) > 1 && n.dot(intensity_difference(m, expression)) < 0.0) n = -n;
    return SemanticDirection(m.labels().expressions.at(static_cast<std::size_t>(expression)),
                             DirectionKind::expression, std::move(n), fingerprint(m));
}

Vector rotation_parameter(const Matrix& rotation_factor) {
    if (rotation_factor.rows() != 2) {
        throw ShapeError("rotation direction needs exactly two views, model has " +
                         std::to_string(rotation_factor.rows()));
    }
    return (rotation_factor.row(0) - rotation_factor.row(1)).transpose() / std::sqrt(2.0);
}

SemanticDirection rotation_direction(const TruncatedModel& tm, const TensorModel& m) {
    const Vector q5 = rotation_parameter(tm.factor(Axis::rotation));
    const Vector& u4 = tm.intensity_basis();
    const double q4_bar = u4.sum() / static_cast<double>(u4.size());
    const DenseTensor q = q4_bar * outer({mean_params(m, Axis::person), mean_params(m, Axis::expression), q5});
    return SemanticDirection("yaw", DirectionKind::rotation, contract_truncated(tm, q), fingerprint(m));
}

std::vector<SemanticDirection> all_directions(const TensorModel& m) {
    const TruncatedModel tm = truncate_intensity(m);
    std::vector<SemanticDirection> out;
    for (Index e = 0; e < m.count(Axis::expression); ++e) out.push_back(expression_direction(tm, m, e));
    if (m.count(Axis::rotation) == 2) {
        out.push_back(rotation_direction(tm, m));
    } else {
        spdlog::info("model has {} views; no yaw direction", m.count(Axis::rotation));
    }
    return out;
}

Vector apply_edit(const Vector& latent, const SemanticDirection& direction, double strength) {
    if (!std::isfinite(strength)) throw ShapeError("edit strength must be finite");
    if (latent.size() != direction.latent_dim()) {
        throw ShapeError("latent has length " + std::to_string(latent.size()) + ", direction '" + direction.name() +
                         "' has " + std::to_string(direction.latent_dim()));
    }
    // keeps signed zeros intact for the identity edit
    if (strength == 0.0) return latent;
    return latent + strength * direction.vector();
}

Vector apply_edit(const EditRequest& req) {
    return apply_edit(req.latent, req.direction, req.strength);
}

Matrix direction_orthogonality_report(std::span<const SemanticDirection> dirs) {
    const auto n = static_cast<Index>(dirs.size());
    Matrix cos = Matrix::Identity(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            const Vector& a = dirs[static_cast<std::size_t>(i)].vector();
            const Vector& b = dirs[static_cast<std::size_t>(j)].vector();
            if (a.size() != b.size()) throw ShapeError("directions of different dimension");
            cos(i, j) = cos(j, i) = a.dot(b) / (a.norm() * b.norm());
        }
    }
    return cos;
}

}  // namespace latentface
