#include "latentface/decomposition.hpp"

#include <string>

#include <spdlog/spdlog.h>

#include "latentface/error.hpp"
#include "latentface/linalg.hpp"

namespace latentface {

namespace {

void require_order5(const DenseTensor& t) {
    if (t.order() != kDataOrder) {
        throw ShapeError("expected an order-5 latent tensor, got order " + std::to_string(t.order()));
    }
}

LeftSingular mode_factor(const DenseTensor& centered, int mode) {
    // Only the latent mode may come back economy sized.
    if (mode == 1) return left_singular_vectors(Matrix(centered.mode1_view()), true);
    return left_singular_vectors(unfold(centered, mode), false);
}

}  // namespace

bool HosvdResult::rank_deficient(int mode) const {
    return numerical_rank.at(static_cast<std::size_t>(mode - 1)) < factor(mode).cols();
}

MeanCentered mean_center(const DenseTensor& t) {
    require_order5(t);
    const auto fibers = t.mode1_view();
    Vector mean = fibers.rowwise().mean();
    std::vector<double> data(t.values());
    Eigen::Map<Matrix> centered(data.data(), fibers.rows(), fibers.cols());
    centered.colwise() -= mean;
    return {DenseTensor(t.shape(), std::move(data)), std::move(mean)};
}

HosvdResult hosvd(const DenseTensor& t) {
    auto [centered, mean] = mean_center(t);
    HosvdResult out;
    out.mean_latent = std::move(mean);
    out.degenerate = centered.frobenius_norm() == 0.0;

    for (int mode = 1; mode <= kDataOrder; ++mode) {
        LeftSingular ls;
        if (out.degenerate) {
            const Index rows = centered.dim(mode);
            const Index cols = mode == 1 ? std::min(rows, centered.size() / rows) : rows;
            ls.vectors = Matrix::Identity(rows, cols);
            ls.values = Vector::Zero(cols);
        } else {
            ls = mode_factor(centered, mode);
        }
        spdlog::debug("mode {}: {} x {} factor, numerical rank {}", mode, ls.vectors.rows(),
                      ls.vectors.cols(), ls.rank);
        out.factors.push_back(std::move(ls.vectors));
        out.singular_values.push_back(std::move(ls.values));
        out.numerical_rank.push_back(ls.rank);
    }

    DenseTensor core = std::move(centered);
    for (int mode = 1; mode <= kDataOrder; ++mode) {
        core = mode_product(core, Matrix(out.factor(mode).transpose()), mode);
    }
    out.core = std::move(core);
    if (out.degenerate) spdlog::warn("HOSVD of an all-constant tensor: zero core");
    return out;
}

HosvdResult truncate_factor(const HosvdResult& h, int mode, Index rank) {
    if (mode < 1 || mode > kDataOrder) {
        throw ShapeError("truncation mode " + std::to_string(mode) + " out of range");
    }
    const Matrix& u = h.factor(mode);
    if (rank < 1 || rank > u.cols()) {
        throw ShapeError("truncation rank " + std::to_string(rank) + " out of range [1, " +
                         std::to_string(u.cols()) + "] on mode " + std::to_string(mode));
    }
    HosvdResult out = h;
    const auto k = static_cast<std::size_t>(mode - 1);
    out.factors[k] = u.leftCols(rank);
    out.singular_values[k] = h.singular_values[k].head(rank);
    out.numerical_rank[k] = std::min(h.numerical_rank[k], rank);
    out.core = leading_slices(h.core, mode, rank);
    return out;
}

DenseTensor recompose_centered(const HosvdResult& h) {
    DenseTensor t = h.core;
    // Expand the small modes first; the latent mode is usually the largest.
    for (int mode = kDataOrder; mode >= 1; --mode) t = mode_product(t, h.factor(mode), mode);
    return t;
}

DenseTensor add_mean(const DenseTensor& centered, const Vector& mean_latent) {
    require_order5(centered);
    if (centered.dim(1) != mean_latent.size()) throw ShapeError("mean latent length mismatch");
    std::vector<double> data(centered.values());
    Eigen::Map<Matrix> fibers(data.data(), centered.dim(1), centered.size() / centered.dim(1));
    fibers.colwise() += mean_latent;
    return DenseTensor(centered.shape(), std::move(data));
}

double all_orthogonality(const DenseTensor& core) {
    const double total = core.frobenius_norm();
    if (total == 0.0) return 0.0;
    double worst = 0.0;
    for (int mode = 1; mode <= core.order(); ++mode) {
        Matrix g = mode_gram(core, mode);
        g.diagonal().setZero();
        if (g.size() > 0) worst = std::max(worst, g.cwiseAbs().maxCoeff() / (total * total));
    }
    return worst;
}

HosvdDiagnostics diagnose(const HosvdResult& h, const DenseTensor& original) {
    HosvdDiagnostics d;
    d.reconstruction_error = relative_error(add_mean(recompose_centered(h), h.mean_latent), original);
    for (const auto& u : h.factors) d.orthonormality = std::max(d.orthonormality, orthonormality_deviation(u));
    d.all_orthogonality = all_orthogonality(h.core);
    const double scale = h.core.frobenius_norm();
    for (int mode = 1; mode <= h.core.order(); ++mode) {
        const Vector norms = mode_gram(h.core, mode).diagonal();
        for (Index k = 1; k < norms.size(); ++k) {
            if (norms[k] > norms[k - 1] + 1e-12 * scale * scale) d.ordered = false;
        }
    }
    return d;
}

}  // namespace latentface
