#include "latentface/synthetic.hpp"

#include <cmath>
#include <random>

#include <Eigen/QR>

#include "latentface/error.hpp"

namespace latentface {

namespace {

std::vector<double> linspace(double a, double b, Index n) {
    if (n == 1) return {a};
    std::vector<double> out(static_cast<std::size_t>(n));
    for (Index k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = a + (b - a) * double(k) / double(n - 1);
    return out;
}

class Gaussian {
public:
    explicit Gaussian(std::uint64_t seed) : rng_(seed) {}
    Matrix matrix(Index rows, Index cols, double sigma) {
        Matrix m(rows, cols);
        for (Index j = 0; j < cols; ++j) {
            for (Index i = 0; i < rows; ++i) m(i, j) = sigma * dist_(rng_);
        }
        return m;
    }

private:
    std::mt19937_64 rng_;
    std::normal_distribution<double> dist_;
};

}  // namespace

void SyntheticSpec::validate() const {
    for (Index d : dims) {
        if (d < 1) throw ShapeError("synthetic sizes must be at least 1");
    }
    for (double s : {base_scale, person_scale, expression_scale, rotation_scale, noise_sigma}) {
        if (!(s >= 0.0) || !std::isfinite(s)) throw ShapeError("synthetic scales must be finite and non-negative");
    }
    if (!intensity_ramp.empty() && static_cast<Index>(intensity_ramp.size()) != dims[3]) {
        throw ShapeError("intensity ramp length differs from the intensity count");
    }
    if (offsets == ExpressionOffsets::orthogonal && dims[2] > dims[0]) {
        throw ShapeError("orthogonal expression offsets need E <= D");
    }
}

std::vector<double> SyntheticSpec::ramp() const {
    return intensity_ramp.empty() ? linspace(0.0, 1.0, dims[3]) : intensity_ramp;
}

std::vector<double> SyntheticSpec::rotation_signs() const { return linspace(1.0, -1.0, dims[4]); }

Vector GroundTruth::centered_expression_offset(Index e) const {
    return expression_offsets.col(e) - expression_offsets.rowwise().mean();
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const auto [d, p, e, ni, r] = spec.dims;
    // Planted terms and noise come from separate streams so the noise level
    // does not change the planted structure.
    Gaussian planted(spec.seed);
    Gaussian noise(spec.seed ^ 0x9e3779b97f4a7c15ULL);

    GroundTruth gt;
    gt.base = planted.matrix(d, 1, spec.base_scale);
    gt.person_offsets = planted.matrix(d, p, spec.person_scale);
    Matrix raw = planted.matrix(d, e, 1.0);
    switch (spec.offsets) {
    case ExpressionOffsets::raw: gt.expression_offsets = spec.expression_scale * raw; break;
    case ExpressionOffsets::centered:
        gt.expression_offsets = spec.expression_scale * (raw.colwise() - raw.rowwise().mean());
        break;
    case ExpressionOffsets::orthogonal: {
        Eigen::HouseholderQR<Matrix> qr(raw);
        gt.expression_offsets = spec.expression_scale * std::sqrt(double(d)) *
                                (qr.householderQ() * Matrix::Identity(d, e));
        break;
    }
    }
    gt.rotation_offset = planted.matrix(d, 1, spec.rotation_scale);
    gt.ramp = spec.ramp();
    gt.rotation_signs = spec.rotation_signs();

    DenseTensor t = DenseTensor::zeros({d, p, e, ni, r});
    std::vector<double> values(t.values());
    Index col = 0;
    for (Index rr = 0; rr < r; ++rr) {
        for (Index ii = 0; ii < ni; ++ii) {
            for (Index ee = 0; ee < e; ++ee) {
                for (Index pp = 0; pp < p; ++pp) {
                    Eigen::Map<Vector> w(values.data() + col * d, d);
                    w = gt.base + gt.person_offsets.col(pp) + gt.ramp[ii] * gt.expression_offsets.col(ee) +
                        gt.rotation_signs[rr] * gt.rotation_offset;
                    if (spec.noise_sigma > 0.0) w += noise.matrix(d, 1, spec.noise_sigma);
                    ++col;
                }
            }
        }
    }

    AxisLabels labels = AxisLabels::numbered(p, e, ni, r);
    if (e == 6) labels.expressions = Bu3dfeLayout::expressions();
    if (ni == 5) labels.intensities = Bu3dfeLayout::intensities();
    if (r == 2) labels.rotations = Bu3dfeLayout::rotations();
    LatentDataset data(DenseTensor({d, p, e, ni, r}, std::move(values)), std::move(labels), StyleLayout::for_dim(d));
    return {std::move(data), std::move(gt)};
}

}  // namespace latentface
