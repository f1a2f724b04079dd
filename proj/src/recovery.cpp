#include "latentface/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <thread>

#include <Eigen/QR>
#include <spdlog/spdlog.h>

#include "latentface/error.hpp"

namespace latentface {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 60;

CanonicalParams uniform_canonical(const TensorModel& m) {
    CanonicalParams q;
    for (Axis a : kParameterAxes) q[a] = Vector::Constant(m.count(a), 1.0 / static_cast<double>(m.count(a)));
    return q;
}

CanonicalParams split_canonical(const TensorModel& m, const Vector& x) {
    CanonicalParams q;
    Index offset = 0;
    for (Axis a : kParameterAxes) {
        q[a] = x.segment(offset, m.count(a));
        offset += m.count(a);
    }
    return q;
}

Vector join_canonical(const CanonicalParams& q) {
    Index n = 0;
    for (const auto& v : q.v) n += v.size();
    Vector x(n);
    Index offset = 0;
    for (const auto& v : q.v) {
        x.segment(offset, v.size()) = v;
        offset += v.size();
    }
    return x;
}

void check_latent(const TensorModel& m, const Vector& w) {
    if (w.size() != m.latent_dim()) {
        throw ShapeError("latent has length " + std::to_string(w.size()) + ", model expects " +
                         std::to_string(m.latent_dim()));
    }
}

double rank_one_regularizer(const CanonicalParams& q, const RecoveryConfig& cfg) {
    double r = 0.0;
    for (Axis a : kParameterAxes) {
        const auto k = slot_of(a);
        const double excess = q[a].sum() - 1.0;
        r += cfg.lambda1[k] * q[a].squaredNorm() + cfg.lambda2[k] * excess * excess;
    }
    return r;
}

// Gradient of ||C_(1) vec(Q) + w_bar - w||^2 with respect to vec(Q).
Vector tensor_gradient(const TensorModel& m, const Vector& residual) {
    return 2.0 * (m.core_matrix().transpose() * residual);
}

// Chain rule from dL/dQ down to the four compact vectors of Q = q2 o q3 o q4 o q5.
CompactParams rank_one_chain(const TensorModel& m, const CompactParams& q, const Vector& g) {
    const Index n2 = m.rank(Axis::person), n3 = m.rank(Axis::expression);
    const Index n4 = m.rank(Axis::intensity), n5 = m.rank(Axis::rotation);
    const Vector &q2 = q[Axis::person], &q3 = q[Axis::expression];
    const Vector &q4 = q[Axis::intensity], &q5 = q[Axis::rotation];
    CompactParams d;
    for (Axis a : kParameterAxes) d[a] = Vector::Zero(m.rank(a));
    Index k = 0;
    for (Index i5 = 0; i5 < n5; ++i5) {
        for (Index i4 = 0; i4 < n4; ++i4) {
            for (Index i3 = 0; i3 < n3; ++i3) {
                const double c45 = q4[i4] * q5[i5];
                for (Index i2 = 0; i2 < n2; ++i2, ++k) {
                    const double gk = g[k];
                    d[Axis::person][i2] += gk * q3[i3] * c45;
                    d[Axis::expression][i3] += gk * q2[i2] * c45;
                    d[Axis::intensity][i4] += gk * q2[i2] * q3[i3] * q5[i5];
                    d[Axis::rotation][i5] += gk * q2[i2] * q3[i3] * q4[i4];
                }
            }
        }
    }
    return d;
}

// Objective and gradient over a flat parameter vector.
struct Problem {
    std::function<double(const Vector&)> objective;
    std::function<Vector(const Vector&)> gradient;
};

struct DescentResult {
    Vector x;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> trace;
};

DescentResult gradient_descent(const Problem& p, Vector x, const RecoveryConfig& cfg) {
    DescentResult out;
    double f = p.objective(x);
    if (!std::isfinite(f)) throw NumericError("non-finite objective at the initial point");
    Vector g = p.gradient(x);
    double step = cfg.learning_rate;
    if (cfg.record_trace) out.trace.push_back(f);

    for (int it = 1; it <= cfg.max_iters; ++it) {
        if (!g.allFinite()) {
            throw NumericError("non-finite gradient at iteration " + std::to_string(it) + " (objective " +
                               std::to_string(f) + ", step " + std::to_string(step) + ")");
        }
        const double gnorm2 = g.squaredNorm();
        if (gnorm2 == 0.0) {
            out.converged = true;
            break;
        }
        double trial = step;
        bool accepted = false;
        Vector next;
        double f_next = f;
        for (int h = 0; h < kMaxHalvings; ++h) {
            next = x - trial * g;
            f_next = p.objective(next);
            if (std::isfinite(f_next) && f_next <= f - kArmijo * trial * gnorm2) {
                accepted = true;
                break;
            }
            trial *= 0.5;
        }
        out.iterations = it;
        if (!accepted) {
            // No decrease is representable along the gradient: stationary at working precision.
            out.converged = true;
            break;
        }
        Vector g_next = p.gradient(next);
        const Vector s = next - x;
        const double sy = s.dot(g_next - g);
        step = sy > 0.0 ? s.squaredNorm() / sy : 2.0 * trial;
        step = std::clamp(step, 1e-30, 1e30);

        const double decrease = (f - f_next) / std::max(std::abs(f), std::numeric_limits<double>::min());
        x = std::move(next);
        g = std::move(g_next);
        f = f_next;
        if (cfg.record_trace) out.trace.push_back(f);
        if (decrease < cfg.tolerance) {
            out.converged = true;
            break;
        }
    }
    out.x = std::move(x);
    out.objective = f;
    return out;
}

Problem rank_one_problem(const TensorModel& m, const Vector& w, const RecoveryConfig& cfg) {
    Problem p;
    p.objective = [&m, &w, &cfg](const Vector& x) {
        const CanonicalParams q = split_canonical(m, x);
        const Vector r = reconstruct_canonical(m, q) - w;
        return r.squaredNorm() + rank_one_regularizer(q, cfg);
    };
    p.gradient = [&m, &w, &cfg](const Vector& x) {
        const CanonicalParams q = split_canonical(m, x);
        const CompactParams c = to_compact(m, q);
        const Vector r = reconstruct_compact(m, c) - w;
        const CompactParams d = rank_one_chain(m, c, tensor_gradient(m, r));
        CanonicalParams grad;
        for (Axis a : kParameterAxes) {
            const auto k = slot_of(a);
            grad[a] = m.factor(a) * d[a] + 2.0 * cfg.lambda1[k] * q[a] +
                      Vector::Constant(q[a].size(), 2.0 * cfg.lambda2[k] * (q[a].sum() - 1.0));
        }
        return join_canonical(grad);
    };
    return p;
}

Problem full_rank_problem(const TensorModel& m, const Vector& w) {
    Problem p;
    p.objective = [&m, &w](const Vector& x) {
        const Vector r = m.mean_latent() + m.core_matrix() * x - w;
        return r.squaredNorm();
    };
    p.gradient = [&m, &w](const Vector& x) {
        const Vector r = m.mean_latent() + m.core_matrix() * x - w;
        return tensor_gradient(m, r);
    };
    return p;
}

DenseTensor to_param_tensor(const TensorModel& m, const Vector& x) {
    return DenseTensor(m.param_shape(), std::vector<double>(x.data(), x.data() + x.size()));
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_number(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        const double v = std::stod(trim(text), &used);
        if (used != trim(text).size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ShapeError("config key '" + key + "': cannot parse '" + text + "' as a number");
    }
}

std::array<double, 4> parse_weights(const std::string& key, const std::string& text) {
    const auto parts = split_list(text);
    if (parts.size() == 1) {
        const double v = parse_number(key, parts[0]);
        return {v, v, v, v};
    }
    if (parts.size() != 4) throw ShapeError("config key '" + key + "' needs one or four values");
    return {parse_number(key, parts[0]), parse_number(key, parts[1]), parse_number(key, parts[2]),
            parse_number(key, parts[3])};
}

}  // namespace

const char* form_name(RecoveryForm f) noexcept {
    return f == RecoveryForm::rank_one ? "rank-one" : "full-rank";
}

void RecoveryConfig::validate() const {
    for (std::size_t k = 0; k < 4; ++k) {
        if (!(lambda1[k] >= 0.0) || !(lambda2[k] >= 0.0)) throw ShapeError("regularization weights must be >= 0");
    }
    if (max_iters < 1) throw ShapeError("max_iters must be >= 1");
    if (!(learning_rate > 0.0)) throw ShapeError("learning_rate must be > 0");
    if (!(tolerance >= 0.0)) throw ShapeError("tolerance must be >= 0");
    if (full_rank_direct_limit < 0) throw ShapeError("full_rank_direct_limit must be >= 0");
}

RecoveryConfig parse_recovery_config(std::istream& in, RecoveryConfig cfg) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ShapeError("config line " + std::to_string(lineno) + ": expected key=value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "lambda1") {
            cfg.lambda1 = parse_weights(key, value);
        } else if (key == "lambda2") {
            cfg.lambda2 = parse_weights(key, value);
        } else if (key == "max_iters") {
            cfg.max_iters = static_cast<int>(parse_number(key, value));
        } else if (key == "learning_rate") {
            cfg.learning_rate = parse_number(key, value);
        } else if (key == "tolerance") {
            cfg.tolerance = parse_number(key, value);
        } else if (key == "full_rank_direct_limit") {
            cfg.full_rank_direct_limit = static_cast<Index>(parse_number(key, value));
        } else {
            throw ShapeError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

RecoveryConfig load_recovery_config(const std::filesystem::path& path, RecoveryConfig base) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    return parse_recovery_config(in, base);
}

Index RecoveredParams::parameter_count() const {
    if (const auto* r = std::get_if<RankOneParams>(&params)) {
        Index n = 0;
        for (const auto& v : r->canonical.v) n += v.size();
        return n;
    }
    return std::get<FullRankParams>(params).q.size();
}

Vector reconstruct(const TensorModel& m, const RecoveredParams& p) {
    if (const auto* r = std::get_if<RankOneParams>(&p.params)) return reconstruct_canonical(m, r->canonical);
    return reconstruct_full_rank(m, std::get<FullRankParams>(p.params).q);
}

double loss(const TensorModel& m, const RecoveredParams& p, const Vector& w) {
    check_latent(m, w);
    return (reconstruct(m, p) - w).squaredNorm();
}

double regularizer(const RecoveredParams& p, const RecoveryConfig& cfg) {
    const auto* r = std::get_if<RankOneParams>(&p.params);
    if (!r) throw ShapeError("the regularizer is only defined for rank-one parameters");
    return rank_one_regularizer(r->canonical, cfg);
}

Vector flatten(const RecoveredParams& p) {
    if (const auto* r = std::get_if<RankOneParams>(&p.params)) return join_canonical(r->canonical);
    const auto& q = std::get<FullRankParams>(p.params).q;
    return Eigen::Map<const Vector>(q.data().data(), q.size());
}

RecoveredParams unflatten(const RecoveredParams& like, const Vector& x) {
    RecoveredParams out = like;
    if (const auto* r = std::get_if<RankOneParams>(&like.params)) {
        CanonicalParams q;
        Index offset = 0;
        for (Axis a : kParameterAxes) {
            q[a] = x.segment(offset, r->canonical[a].size());
            offset += r->canonical[a].size();
        }
        out.params = RankOneParams{std::move(q)};
    } else {
        const auto& q = std::get<FullRankParams>(like.params).q;
        out.params = FullRankParams{DenseTensor(q.shape(), std::vector<double>(x.data(), x.data() + x.size()))};
    }
    return out;
}

Vector analytic_gradient(const TensorModel& m, const RecoveredParams& p, const Vector& w, const RecoveryConfig& cfg) {
    check_latent(m, w);
    if (p.form() == RecoveryForm::rank_one) return rank_one_problem(m, w, cfg).gradient(flatten(p));
    return full_rank_problem(m, w).gradient(flatten(p));
}

double gradient_check(const TensorModel& m, const RecoveredParams& p, const Vector& w, const RecoveryConfig& cfg,
                      double step) {
    check_latent(m, w);
    const Problem prob = p.form() == RecoveryForm::rank_one ? rank_one_problem(m, w, cfg) : full_rank_problem(m, w);
    const Vector x = flatten(p);
    const Vector analytic = prob.gradient(x);
    double worst = 0.0;
    Vector probe = x;
    for (Index k = 0; k < x.size(); ++k) {
        probe[k] = x[k] + step;
        const double up = prob.objective(probe);
        probe[k] = x[k] - step;
        const double down = prob.objective(probe);
        probe[k] = x[k];
        const double numeric = (up - down) / (2.0 * step);
        worst = std::max(worst, std::abs(analytic[k] - numeric) / (std::abs(numeric) + 1e-8));
    }
    return worst;
}

RecoveredParams recover_rank_one(const TensorModel& m, const Vector& w, const RecoveryConfig& cfg) {
    check_latent(m, w);
    cfg.validate();
    if (!w.allFinite()) throw NumericError("target latent contains non-finite values");
    const DescentResult d = gradient_descent(rank_one_problem(m, w, cfg), join_canonical(uniform_canonical(m)), cfg);
    RecoveredParams out;
    out.params = RankOneParams{split_canonical(m, d.x)};
    out.final_loss = loss(m, out, w);
    out.objective = d.objective;
    out.iterations = d.iterations;
    out.converged = d.converged;
    out.trace = d.trace;
    spdlog::debug("rank-one recovery: loss {:.6e} after {} iterations", out.final_loss, out.iterations);
    return out;
}

struct FullRankSolver::Impl {
    const TensorModel* model;
    RecoveryConfig cfg;
    std::unique_ptr<Eigen::CompleteOrthogonalDecomposition<Matrix>> cod;
};

FullRankSolver::FullRankSolver(const TensorModel& m, const RecoveryConfig& cfg) : impl_(std::make_unique<Impl>()) {
    cfg.validate();
    impl_->model = &m;
    impl_->cfg = cfg;
    const Index k = shape_product(m.param_shape());
    if (k <= cfg.full_rank_direct_limit) {
        impl_->cod = std::make_unique<Eigen::CompleteOrthogonalDecomposition<Matrix>>(m.core_matrix().rows(),
                                                                                      m.core_matrix().cols());
        impl_->cod->setThreshold(1e-10);
        impl_->cod->compute(m.core_matrix());
    }
}

FullRankSolver::~FullRankSolver() = default;
FullRankSolver::FullRankSolver(FullRankSolver&&) noexcept = default;
FullRankSolver& FullRankSolver::operator=(FullRankSolver&&) noexcept = default;

bool FullRankSolver::direct() const noexcept { return impl_->cod != nullptr; }

RecoveredParams FullRankSolver::solve(const Vector& w) const {
    const TensorModel& m = *impl_->model;
    check_latent(m, w);
    if (!w.allFinite()) throw NumericError("target latent contains non-finite values");
    RecoveredParams out;
    if (impl_->cod) {
        const Vector x = impl_->cod->solve(Vector(w - m.mean_latent()));
        if (!x.allFinite()) throw NumericError("pseudoinverse solve produced non-finite parameters");
        out.params = FullRankParams{to_param_tensor(m, x)};
        out.iterations = 0;
        out.converged = true;
    } else {
        const DenseTensor start = outer({mean_params(m, Axis::person), mean_params(m, Axis::expression),
                                         mean_params(m, Axis::intensity), mean_params(m, Axis::rotation)});
        const Vector x0 = Eigen::Map<const Vector>(start.data().data(), start.size());
        const DescentResult d = gradient_descent(full_rank_problem(m, w), x0, impl_->cfg);
        out.params = FullRankParams{to_param_tensor(m, d.x)};
        out.iterations = d.iterations;
        out.converged = d.converged;
        out.trace = d.trace;
    }
    out.final_loss = loss(m, out, w);
    out.objective = out.final_loss;
    return out;
}

RecoveredParams recover_full_rank(const TensorModel& m, const Vector& w, const RecoveryConfig& cfg) {
    return FullRankSolver(m, cfg).solve(w);
}

std::vector<RecoveredParams> recover_batch(const TensorModel& m, const Matrix& latents, RecoveryForm form,
                                           const RecoveryConfig& cfg, unsigned threads) {
    if (latents.rows() != m.latent_dim()) throw ShapeError("latent batch dimension does not match the model");
    cfg.validate();
    const Index n = latents.cols();
    std::vector<RecoveredParams> out(static_cast<std::size_t>(n));
    std::unique_ptr<FullRankSolver> solver;
    if (form == RecoveryForm::full_rank) solver = std::make_unique<FullRankSolver>(m, cfg);

    auto work = [&](Index k) {
        const Vector w = latents.col(k);
        out[static_cast<std::size_t>(k)] =
            form == RecoveryForm::rank_one ? recover_rank_one(m, w, cfg) : solver->solve(w);
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<Index>(threads, std::max<Index>(n, 1)));
    if (threads <= 1) {
        for (Index k = 0; k < n; ++k) work(k);
        return out;
    }
    std::vector<std::exception_ptr> errors(threads);
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                try {
                    for (Index k = t; k < n; k += threads) work(k);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

}  // namespace latentface
