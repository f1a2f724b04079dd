#include "latentface/model.hpp"

#include <cmath>
#include <string>

#include "byte_io.hpp"
#include "latentface/checksum.hpp"
#include "latentface/error.hpp"

namespace latentface {

namespace {

void check_length(const Vector& v, Index expected, Axis a, const char* what) {
    if (v.size() != expected) {
        throw ShapeError(std::string(what) + " " + axis_name(a) + " parameter has length " +
                         std::to_string(v.size()) + ", expected " + std::to_string(expected));
    }
}

Vector contract_core(const Eigen::Map<const Matrix>& core_matrix, const Vector& mean, const DenseTensor& q) {
    const Eigen::Map<const Vector> flat(q.data().data(), q.size());
    return mean + core_matrix * flat;
}

}  // namespace

TensorModel::TensorModel(Vector mean_latent, DenseTensor core, std::array<Matrix, 4> factors, AxisLabels labels,
                         StyleLayout layout)
    : mean_(std::move(mean_latent)),
      core_(std::move(core)),
      factors_(std::move(factors)),
      labels_(std::move(labels)),
      layout_(layout) {
    if (core_.order() != 5) throw ShapeError("model core must have order 5");
    if (core_.dim(1) != mean_.size()) {
        throw ShapeError("core latent size " + std::to_string(core_.dim(1)) + " differs from mean latent length " +
                         std::to_string(mean_.size()));
    }
    for (Axis a : kParameterAxes) {
        const Matrix& u = factor(a);
        if (u.cols() != core_.dim(mode_of(a))) {
            throw ShapeError(std::string(axis_name(a)) + " factor has " + std::to_string(u.cols()) +
                             " columns but the core has " + std::to_string(core_.dim(mode_of(a))));
        }
        if (static_cast<Index>(labels_.of(a).size()) != u.rows()) {
            throw ShapeError(std::string(axis_name(a)) + " factor has " + std::to_string(u.rows()) + " rows but " +
                             std::to_string(labels_.of(a).size()) + " labels");
        }
    }
    if (layout_.latent_dim() != mean_.size()) throw ShapeError("style layout does not match latent dimension");
}

bool operator==(const TensorModel& a, const TensorModel& b) {
    for (std::size_t k = 0; k < 4; ++k) {
        if (!identical(a.factors_[k], b.factors_[k])) return false;
    }
    return identical(a.mean_, b.mean_) && a.core_ == b.core_ && a.labels_ == b.labels_ && a.layout_ == b.layout_;
}

Shape TensorModel::param_shape() const {
    return {rank(Axis::person), rank(Axis::expression), rank(Axis::intensity), rank(Axis::rotation)};
}

TensorModel model_from_hosvd(const HosvdResult& h, AxisLabels labels, StyleLayout layout) {
    DenseTensor c = mode_product(h.core, h.factor(1), 1);
    return TensorModel(h.mean_latent, std::move(c), {h.factor(2), h.factor(3), h.factor(4), h.factor(5)},
                       std::move(labels), layout);
}

TensorModel fit_model(const LatentDataset& data) {
    return model_from_hosvd(hosvd(data.latents()), data.labels(), data.layout());
}

CompactParams to_compact(const TensorModel& m, const CanonicalParams& canonical) {
    CompactParams out;
    for (Axis a : kParameterAxes) {
        check_length(canonical[a], m.count(a), a, "canonical");
        out[a] = m.factor(a).transpose() * canonical[a];
    }
    return out;
}

CanonicalParams one_hot(const TensorModel& m, Index person, Index expression, Index intensity, Index rotation) {
    const std::array<Index, 4> idx{person, expression, intensity, rotation};
    CanonicalParams q;
    for (Axis a : kParameterAxes) {
        const Index k = idx[slot_of(a)];
        if (k < 0 || k >= m.count(a)) throw ShapeError(std::string(axis_name(a)) + " index out of range");
        q[a] = Vector::Unit(m.count(a), k);
    }
    return q;
}

Vector reconstruct_canonical(const TensorModel& m, const CanonicalParams& q) {
    return reconstruct_compact(m, to_compact(m, q));
}

Vector reconstruct_compact(const TensorModel& m, const CompactParams& q) {
    for (Axis a : kParameterAxes) check_length(q[a], m.rank(a), a, "compact");
    // The rank-one parameter tensor is small (P'E'I'R'); contracting it against
    // C_(1) in one product avoids any order-5 intermediate.
    const DenseTensor rank_one = outer(q.v);
    return contract_core(m.core_matrix(), m.mean_latent(), rank_one);
}

Vector reconstruct_full_rank(const TensorModel& m, const DenseTensor& q) {
    if (q.shape() != m.param_shape()) throw ShapeError("parameter tensor shape does not match the model");
    return contract_core(m.core_matrix(), m.mean_latent(), q);
}

Vector mean_params(const TensorModel& m, Axis axis) {
    const Matrix& u = m.factor(axis);
    return u.colwise().sum().transpose() / static_cast<double>(u.rows());
}

TruncatedModel::TruncatedModel(Vector mean_latent, DenseTensor core, Vector intensity_basis, Matrix person_factor,
                               Matrix expression_factor, Matrix rotation_factor)
    : mean_(std::move(mean_latent)),
      core_(std::move(core)),
      u4_(std::move(intensity_basis)),
      u2_(std::move(person_factor)),
      u3_(std::move(expression_factor)),
      u5_(std::move(rotation_factor)) {
    if (core_.order() != 4) throw ShapeError("truncated core must have order 4 (D x P x E x R)");
    if (core_.dim(1) != mean_.size()) throw ShapeError("truncated core latent size mismatch");
    if (core_.dim(2) != u2_.cols() || core_.dim(3) != u3_.cols() || core_.dim(4) != u5_.cols()) {
        throw ShapeError("truncated core does not match its factors");
    }
    if (std::abs(u4_.norm() - 1.0) > 1e-6) throw InvariantError("intensity basis vector is not unit length");
}

const Matrix& TruncatedModel::factor(Axis a) const {
    switch (a) {
    case Axis::person: return u2_;
    case Axis::expression: return u3_;
    case Axis::rotation: return u5_;
    case Axis::intensity: break;
    }
    throw ShapeError("the truncated model has no intensity factor matrix");
}

TruncatedModel truncate_intensity(const TensorModel& m) {
    const int mode = mode_of(Axis::intensity);
    DenseTensor c = squeeze(leading_slices(m.core(), mode, 1), mode);
    return TruncatedModel(m.mean_latent(), std::move(c), m.factor(Axis::intensity).col(0),
                          m.factor(Axis::person), m.factor(Axis::expression), m.factor(Axis::rotation));
}

Vector contract_truncated(const TruncatedModel& tm, const DenseTensor& q) {
    const Shape expected{tm.core().dim(2), tm.core().dim(3), tm.core().dim(4)};
    if (q.shape() != expected) throw ShapeError("parameter tensor shape does not match the truncated core");
    const Eigen::Map<const Vector> flat(q.data().data(), q.size());
    return tm.core().mode1_view() * flat;
}

Vector reconstruct_truncated(const TruncatedModel& tm, const Vector& q2, const Vector& q3, double q4,
                             const Vector& q5) {
    check_length(q2, tm.core().dim(2), Axis::person, "compact");
    check_length(q3, tm.core().dim(3), Axis::expression, "compact");
    check_length(q5, tm.core().dim(4), Axis::rotation, "compact");
    return tm.mean_latent() + q4 * contract_truncated(tm, outer({q2, q3, q5}));
}

double in_sample_error(const TensorModel& m, const LatentDataset& data) {
    if (data.latent_dim() != m.latent_dim()) throw ShapeError("dataset and model latent dimensions differ");
    for (Axis a : kParameterAxes) {
        if (data.count(a) != m.count(a)) throw ShapeError("dataset and model grids differ");
    }
    // Every one-hot reconstruction at once: C x2 U2 x3 U3 x4 U4 x5 U5 + w_bar.
    DenseTensor full = m.core();
    for (Axis a : kParameterAxes) full = mode_product(full, m.factor(a), mode_of(a));
    full = add_mean(full, m.mean_latent());
    const auto rebuilt = full.mode1_view();
    const auto original = data.latents().mode1_view();
    double worst = 0.0;
    for (Index k = 0; k < original.cols(); ++k) {
        const double ref = original.col(k).norm();
        const double err = (rebuilt.col(k) - original.col(k)).norm();
        worst = std::max(worst, ref > 0.0 ? err / ref : err);
    }
    return worst;
}

std::uint64_t fingerprint(const TensorModel& m) {
    std::vector<std::byte> buf;
    Fnv1a64 h;
    auto flush = [&] {
        h.update(buf);
        buf.clear();
    };
    auto add_values = [&](const double* p, Index n) {
        for (Index k = 0; k < n; ++k) {
            detail::append_f32(buf, p[k]);
            if (buf.size() >= (1u << 16)) flush();
        }
        flush();
    };
    detail::append_le(buf, static_cast<std::uint64_t>(m.layout().num_style_vectors));
    detail::append_le(buf, static_cast<std::uint64_t>(m.layout().style_dim));
    for (Index s : m.core().shape()) detail::append_le(buf, static_cast<std::uint64_t>(s));
    for (const Matrix& u : m.factors()) {
        detail::append_le(buf, static_cast<std::uint64_t>(u.rows()));
        detail::append_le(buf, static_cast<std::uint64_t>(u.cols()));
    }
    for (Axis a : kParameterAxes) {
        for (const auto& label : m.labels().of(a)) detail::append_string(buf, label);
    }
    flush();
    add_values(m.mean_latent().data(), m.mean_latent().size());
    add_values(m.core().data().data(), m.core().size());
    for (const Matrix& u : m.factors()) add_values(u.data(), u.size());
    return h.digest();
}

}  // namespace latentface
