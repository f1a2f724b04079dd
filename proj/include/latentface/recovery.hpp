#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <variant>
#include <vector>

#include "latentface/model.hpp"

namespace latentface {

enum class RecoveryForm { rank_one, full_rank };

const char* form_name(RecoveryForm f) noexcept;

/// Optimizer and regularization settings. The per-axis weights are ordered
/// person, expression, intensity, rotation.
struct RecoveryConfig {
    std::array<double, 4> lambda1{0.1, 0.1, 0.1, 0.1};   // Tikhonov weight on ||q'_i||^2
    std::array<double, 4> lambda2{0.1, 0.1, 0.1, 0.1};   // weight on (q'_i . 1 - 1)^2
    int max_iters = 2000;
    double learning_rate = 1e-2;    // first trial step
    double tolerance = 1e-9;        // stop when the relative objective decrease falls below this
    /// Full-rank problems with more parameters than this are solved by
    /// gradient descent instead of the pseudoinverse.
    Index full_rank_direct_limit = 20000;
    /// Keep the objective of every accepted iterate in RecoveredParams::trace.
    bool record_trace = false;

    /// Throws ShapeError on negative weights, max_iters < 1, or a
    /// non-positive learning rate.
    void validate() const;
};

/// Reads `key = value` lines (blank lines and `#` comments allowed). Keys:
/// lambda1, lambda2 (one value or four comma-separated), max_iters,
/// learning_rate, tolerance, full_rank_direct_limit.
RecoveryConfig parse_recovery_config(std::istream& in, RecoveryConfig base = {});
RecoveryConfig load_recovery_config(const std::filesystem::path& path, RecoveryConfig base = {});

struct RankOneParams {
    CanonicalParams canonical;
};

struct FullRankParams {
    DenseTensor q;  // P' x E' x I' x R'
};

struct RecoveredParams {
    std::variant<RankOneParams, FullRankParams> params;
    double final_loss = 0.0;      // ||w_hat - w||^2
    double objective = 0.0;       // loss plus regularizer (rank-one form)
    int iterations = 0;
    bool converged = false;
    std::vector<double> trace;    // starting objective, then one entry per accepted step

    RecoveryForm form() const noexcept {
        return std::holds_alternative<RankOneParams>(params) ? RecoveryForm::rank_one : RecoveryForm::full_rank;
    }
    /// Number of free parameters: P+E+I+R or PEIR.
    Index parameter_count() const;
};

Vector reconstruct(const TensorModel& m, const RecoveredParams& p);

/// ||w_hat(params) - w||^2.
double loss(const TensorModel& m, const RecoveredParams& p, const Vector& w);

/// sum_i lambda1_i ||q'_i||^2 + lambda2_i (q'_i . 1 - 1)^2. Only defined for
/// the rank-one form; throws ShapeError otherwise.
double regularizer(const RecoveredParams& p, const RecoveryConfig& cfg);

/// Gradient of loss + regularizer (rank-one) or of the loss (full-rank),
/// flattened in the same order as `flatten`.
Vector analytic_gradient(const TensorModel& m, const RecoveredParams& p, const Vector& w, const RecoveryConfig& cfg);

/// Parameters as one vector: q'_2..q'_5 concatenated, or vec(Q).
Vector flatten(const RecoveredParams& p);
RecoveredParams unflatten(const RecoveredParams& like, const Vector& x);

/// Max over coordinates of |analytic - numeric| / (|numeric| + 1e-8) with
/// central differences of the given step.
double gradient_check(const TensorModel& m, const RecoveredParams& p, const Vector& w, const RecoveryConfig& cfg,
                      double step = 1e-5);

/// Gradient descent on the canonical vectors from the uniform point
/// q'_i = 1/N_i. Step proposals use the Barzilai-Borwein rule and are halved
/// until the objective decreases, so accepted objectives never increase.
RecoveredParams recover_rank_one(const TensorModel& m, const Vector& w, const RecoveryConfig& cfg);

/// Unregularized least squares over the full parameter tensor.
RecoveredParams recover_full_rank(const TensorModel& m, const Vector& w, const RecoveryConfig& cfg);

/// Caches a complete orthogonal decomposition of C_(1) so many latents can be
/// solved against one model.
class FullRankSolver {
public:
    FullRankSolver(const TensorModel& m, const RecoveryConfig& cfg);
    ~FullRankSolver();
    FullRankSolver(FullRankSolver&&) noexcept;
    FullRankSolver& operator=(FullRankSolver&&) noexcept;

    RecoveredParams solve(const Vector& w) const;
    bool direct() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// One recovery per column of `latents`, spread over `threads` workers
/// (0 = hardware concurrency). Results are independent of the thread count.
std::vector<RecoveredParams> recover_batch(const TensorModel& m, const Matrix& latents, RecoveryForm form,
                                           const RecoveryConfig& cfg, unsigned threads = 0);

}  // namespace latentface
