// Acceptance gate: one line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "latentface/container.hpp"
#include "latentface/decomposition.hpp"
#include "latentface/directions.hpp"
#include "latentface/error.hpp"
#include "latentface/recovery.hpp"
#include "latentface/synthetic.hpp"
#include "support.hpp"

using namespace latentface;
using lf_test::Rng;
using lf_test::TempDir;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void criterion(const char* name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s  %-28s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

LatentDataset random_dataset(Rng& rng, const Shape& s) {
    return LatentDataset(rng.tensor(s), AxisLabels::numbered(s[1], s[2], s[3], s[4]), StyleLayout::for_dim(s[0]));
}

// Off-diagonal mass of the mode-n slice Gram, relative to ||S||^2.
double slice_cross_talk(const DenseTensor& core, int mode) {
    const Matrix a = unfold(core, mode);
    const Matrix g = a * a.transpose();
    const double total = g.trace();
    if (total == 0.0) return 0.0;
    return (g - Matrix(g.diagonal().asDiagonal())).cwiseAbs().maxCoeff() / total;
}

Outcome hosvd_exactness() {
    Rng rng(101);
    const auto t0 = Clock::now();
    double recon = 0, ortho = 0, allortho = 0;
    for (int k = 0; k < 25; ++k) {
        const Shape s = k == 0 ? Shape{64, 6, 6, 5, 2}
                               : Shape{rng.integer(1, 64), rng.integer(1, 6), rng.integer(1, 6), rng.integer(1, 5),
                                       rng.integer(1, 2)};
        const DenseTensor t = rng.tensor(s);
        const HosvdResult h = hosvd(t);
        DenseTensor back = h.core;
        for (int mode = 1; mode <= 5; ++mode) {
            back = mode_product(back, h.factor(mode), mode);
            const Matrix& u = h.factor(mode);
            ortho = std::max(ortho, (u.transpose() * u - Matrix::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff());
            allortho = std::max(allortho, slice_cross_talk(h.core, mode));
        }
        std::vector<double> full(back.values());
        for (std::size_t c = 0; c < full.size(); ++c) full[c] += h.mean_latent[static_cast<Index>(c) % s[0]];
        recon = std::max(recon, relative_error(DenseTensor(s, std::move(full)), t));
    }
    const double secs = seconds_since(t0);
    return {recon < 1e-8 && ortho < 1e-8 && allortho < 1e-8 && secs < 10.0,
            fmt("recompose %.2e  orthonormal %.2e  all-orthogonal %.2e  %.2fs", recon, ortho, allortho, secs)};
}

Outcome in_sample_exactness() {
    SyntheticSpec spec;
    spec.dims = {64, 5, 6, 5, 2};
    spec.noise_sigma = 0.1;
    spec.seed = 102;
    const LatentDataset d = generate_synthetic(spec).dataset;
    const TensorModel m = fit_model(d);
    double worst = 0;
    for (Index p = 0; p < 5; ++p)
        for (Index e = 0; e < 6; ++e)
            for (Index i = 0; i < 5; ++i)
                for (Index r = 0; r < 2; ++r) {
                    const Vector w = d.cell(p, e, i, r);
                    const Vector hat = reconstruct_canonical(m, one_hot(m, p, e, i, r));
                    worst = std::max(worst, (hat - w).norm() / w.norm());
                }
    return {worst < 1e-6, fmt("max relative error %.2e over 300 cells", worst)};
}

Outcome component_oracle() {
    Rng rng(103);
    const TensorModel m = fit_model(random_dataset(rng, {20, 4, 3, 3, 2}));
    const Shape& s = m.core().shape();
    double worst = 0;
    for (int k = 0; k < 10; ++k) {
        CompactParams q;
        for (Axis a : kParameterAxes) q[a] = rng.vector(m.rank(a));
        Vector w = m.mean_latent();
        for (Index a5 = 0; a5 < s[4]; ++a5)
            for (Index a4 = 0; a4 < s[3]; ++a4)
                for (Index a3 = 0; a3 < s[2]; ++a3)
                    for (Index a2 = 0; a2 < s[1]; ++a2)
                        for (Index a1 = 0; a1 < s[0]; ++a1)
                            w[a1] += m.core()({a1, a2, a3, a4, a5}) * q[Axis::person][a2] *
                                     q[Axis::expression][a3] * q[Axis::intensity][a4] * q[Axis::rotation][a5];
        worst = std::max(worst, (reconstruct_compact(m, q) - w).cwiseAbs().maxCoeff());
    }
    return {worst < 1e-9, fmt("max deviation %.2e over 10 parameter sets", worst)};
}

struct HeldOut {
    TensorModel model;
    std::vector<Vector> latents;
};

HeldOut held_out_setup() {
    SyntheticSpec spec;
    spec.dims = {256, 6, 4, 3, 2};
    spec.noise_sigma = 0.1;
    spec.seed = 104;
    const LatentDataset d = generate_synthetic(spec).dataset;
    HeldOut h{fit_model(d.without_person(0)), {}};
    for (Index e = 0; e < 4; ++e)
        for (Index i = 0; i < 3; ++i)
            for (Index r = 0; r < 2; ++r)
                if (h.latents.size() < 20) h.latents.push_back(d.cell(0, e, i, r));
    return h;
}

Outcome relaxation_dominance(const HeldOut& h) {
    const auto t0 = Clock::now();
    const FullRankSolver solver(h.model, RecoveryConfig{});
    int dominated = 0, strict = 0;
    double worst_gap = -1e300;
    for (const Vector& w : h.latents) {
        const double r1 = recover_rank_one(h.model, w, RecoveryConfig{}).final_loss;
        const double fr = solver.solve(w).final_loss;
        dominated += fr <= r1;
        strict += fr < r1;
        worst_gap = std::max(worst_gap, fr - r1);
    }
    const double secs = seconds_since(t0);
    const int n = static_cast<int>(h.latents.size());
    return {n == 20 && dominated == n && strict >= 18 && secs < 120.0,
            fmt("full-rank <= rank-one %.0f/20, strictly %.0f/20, worst gap %.2e, %.2fs", dominated, strict,
                worst_gap, secs)};
}

Outcome regularization_tradeoff(const HeldOut& h) {
    RecoveryConfig none;
    none.lambda1.fill(0.0);
    none.lambda2.fill(0.0);
    RecoveryConfig heavy;
    heavy.lambda1.fill(10.0);
    heavy.lambda2.fill(10.0);
    const Vector& w = h.latents[5];
    const double l0 = recover_rank_one(h.model, w, none).final_loss;
    const double l10 = recover_rank_one(h.model, w, heavy).final_loss;
    return {l10 >= l0, fmt("loss at lambda 10: %.4e, at lambda 0: %.4e", l10, l0)};
}

Outcome gradient_correctness() {
    Rng rng(105);
    double worst = 0;
    for (int k = 0; k < 20; ++k) {
        const TensorModel m = fit_model(random_dataset(
            rng, {rng.integer(4, 30), rng.integer(2, 5), rng.integer(2, 4), rng.integer(2, 4), rng.integer(1, 2)}));
        RecoveryConfig cfg;
        for (auto& l : cfg.lambda1) l = rng.uniform(0, 2);
        for (auto& l : cfg.lambda2) l = rng.uniform(0, 2);
        CanonicalParams q;
        for (Axis a : kParameterAxes) q[a] = rng.vector(m.count(a));
        RecoveredParams p;
        p.params = RankOneParams{q};
        const Vector w = m.mean_latent() + rng.vector(m.latent_dim());
        worst = std::max(worst, gradient_check(m, p, w, cfg));
    }
    return {worst < 1e-4, fmt("max relative deviation %.2e over 20 instances", worst)};
}

Outcome direction_oracle() {
    double expr = 1, yaw = 1, unit = 0;
    for (std::uint64_t seed : {106u, 107u, 108u}) {
        SyntheticSpec spec;
        spec.dims = {64, 5, 6, 5, 2};
        spec.seed = seed;
        const SyntheticData s = generate_synthetic(spec);
        const TensorModel m = fit_model(s.dataset);
        const auto dirs = all_directions(m);
        for (Index e = 0; e < 6; ++e) {
            const Vector& n = dirs[static_cast<std::size_t>(e)].vector();
            const Vector c = s.truth.centered_expression_offset(e);
            expr = std::min(expr, n.dot(c) / (n.norm() * c.norm()));
        }
        const Vector& n = dirs.back().vector();
        const Vector& d = s.truth.rotation_offset;
        yaw = std::min(yaw, std::abs(n.dot(d)) / (n.norm() * d.norm()));
        unit = std::max(unit, std::abs(rotation_parameter(m.factor(Axis::rotation)).norm() - 1.0));
    }
    return {expr > 0.99 && yaw > 0.99 && unit < 1e-10,
            fmt("min expression cosine %.6f  yaw |cosine| %.6f  rotation parameter norm deviation %.1e", expr, yaw,
                unit)};
}

Outcome edit_algebra() {
    Rng rng(109);
    SyntheticSpec spec;
    spec.dims = {64, 5, 6, 5, 2};
    spec.seed = 109;
    const auto dirs = all_directions(fit_model(generate_synthetic(spec).dataset));
    bool identity = true;
    double additive = 0, inverse = 0;
    for (int k = 0; k < 100; ++k) {
        const Vector w = rng.vector(64);
        const SemanticDirection& d = dirs[static_cast<std::size_t>(k) % dirs.size()];
        const double s = rng.uniform(-2, 2);
        const double t = rng.uniform(-2, 2);
        identity = identity && identical(apply_edit(w, d, 0.0), w);
        additive = std::max(additive,
                            (apply_edit(apply_edit(w, d, s), d, t) - apply_edit(w, d, s + t)).cwiseAbs().maxCoeff());
        inverse = std::max(inverse, (apply_edit(apply_edit(w, d, s), d, -s) - w).cwiseAbs().maxCoeff());
    }
    return {identity && additive < 1e-12 && inverse < 1e-12,
            fmt("zero strength bitwise %.0f  additivity %.2e  invertibility %.2e", identity, additive, inverse)};
}

Outcome global_direction() {
    TempDir dir("accept");
    Rng rng(110);
    SyntheticSpec spec;
    spec.dims = {64, 5, 6, 5, 2};
    spec.seed = 110;
    const auto dirs = all_directions(fit_model(generate_synthetic(spec).dataset));
    bool same = true;
    for (const auto& d : dirs) {
        const auto path = dir / (d.name() + ".ltc");
        write_container(d, path);
        const SemanticDirection back = read_as<SemanticDirection>(path);
        for (int k = 0; k < 10; ++k) {
            const Vector w = rng.vector(64);
            const double s = rng.uniform(-3, 3);
            same = same && identical(apply_edit(w, back, s), apply_edit(w, d, s));
        }
    }
    return {same, fmt("%.0f directions x 10 latents, reloaded edits bitwise equal: %.0f", double(dirs.size()), same)};
}

Outcome fit_timing() {
    SyntheticSpec spec;
    spec.dims = {9216, 10, 6, 5, 2};
    spec.noise_sigma = 0.01;
    spec.seed = 111;
    const LatentDataset d = generate_synthetic(spec).dataset;
    const auto t0 = Clock::now();
    const TensorModel m = fit_model(d);
    const double secs = seconds_since(t0);
    return {secs < 60.0 && m.latent_dim() == 9216, fmt("fit of 9216x10x6x5x2 in %.2fs", secs)};
}

DenseTensor rounded(const DenseTensor& t) {
    std::vector<double> v(t.values());
    for (double& x : v) x = static_cast<double>(static_cast<float>(x));
    return DenseTensor(t.shape(), std::move(v));
}

Outcome container_round_trip() {
    TempDir dir("accept");
    SyntheticSpec spec;
    spec.dims = {32, 4, 6, 5, 2};
    spec.noise_sigma = 0.05;
    spec.seed = 112;
    const LatentDataset d = generate_synthetic(spec).dataset;
    const TensorModel m = fit_model(d);
    const SemanticDirection n = all_directions(m).front();
    write_container(d, dir / "d.ltc");
    write_container(m, dir / "m.ltc");
    write_container(n, dir / "n.ltc");

    const LatentDataset d2 = read_as<LatentDataset>(dir / "d.ltc");
    const bool dataset_ok = d2.latents() == rounded(d.latents()) && d2.labels() == d.labels();
    const TensorModel m2 = read_as<TensorModel>(dir / "m.ltc");
    bool model_ok = m2.core() == rounded(m.core()) && fingerprint(m2) == fingerprint(m) &&
                    identical(m2.mean_latent(), m.mean_latent().cast<float>().cast<double>());
    for (Axis a : kParameterAxes) model_ok = model_ok && identical(m2.factor(a), m.factor(a).cast<float>().cast<double>());
    const bool direction_ok = read_as<SemanticDirection>(dir / "n.ltc") == n;

    std::vector<std::byte> bytes = encode(m);
    bytes[bytes.size() / 3] ^= std::byte{0x04};
    bool rejected = false;
    try {
        decode(bytes);
    } catch (const ChecksumError&) {
        rejected = true;
    }
    return {dataset_ok && model_ok && direction_ok && rejected,
            fmt("dataset %.0f  model %.0f  direction %.0f  corrupted checksum rejected %.0f", dataset_ok, model_ok,
                direction_ok, rejected)};
}

}  // namespace

int main() {
    criterion("hosvd-exactness", hosvd_exactness);
    criterion("in-sample-exactness", in_sample_exactness);
    criterion("component-form-oracle", component_oracle);
    const HeldOut h = held_out_setup();
    criterion("relaxation-dominance", [&] { return relaxation_dominance(h); });
    criterion("regularization-tradeoff", [&] { return regularization_tradeoff(h); });
    criterion("gradient-correctness", gradient_correctness);
    criterion("direction-recovery", direction_oracle);
    criterion("edit-algebra", edit_algebra);
    criterion("global-direction-file", global_direction);
    criterion("fit-timing", fit_timing);
    criterion("ltc1-round-trip", container_round_trip);
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
