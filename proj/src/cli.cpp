#include "latentface/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "latentface/container.hpp"
#include "latentface/directions.hpp"
#include "latentface/error.hpp"
#include "latentface/linalg.hpp"
#include "latentface/recovery.hpp"
#include "latentface/synthetic.hpp"

namespace latentface {

namespace {

namespace fs = std::filesystem;

void configure_logging() {
    static const bool once = [] {
        auto logger = spdlog::stderr_color_mt("latentface");
        spdlog::set_default_logger(logger);
        return true;
    }();
    (void)once;
    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("LF_LOG")) level = spdlog::level::from_str(env);
    spdlog::set_level(level);
}

struct Failure {
    const char* kind;
    int code;
};

Failure classify(const std::exception& e) {
    if (dynamic_cast<const BadMagicError*>(&e)) return {"bad_magic", kExitIo};
    if (dynamic_cast<const VersionError*>(&e)) return {"version", kExitIo};
    if (dynamic_cast<const TruncatedError*>(&e)) return {"truncated", kExitIo};
    if (dynamic_cast<const ChecksumError*>(&e)) return {"checksum", kExitIo};
    if (dynamic_cast<const NonFiniteError*>(&e)) return {"non_finite", kExitIo};
    if (dynamic_cast<const RecordKindError*>(&e)) return {"record_kind", kExitIo};
    if (dynamic_cast<const FormatError*>(&e)) return {"format", kExitIo};
    if (dynamic_cast<const IoError*>(&e)) return {"io", kExitIo};
    if (dynamic_cast<const ShapeError*>(&e)) return {"shape", kExitUsage};
    if (dynamic_cast<const NumericError*>(&e)) return {"numeric", kExitNumeric};
    if (dynamic_cast<const InvariantError*>(&e)) return {"invariant", kExitInvariant};
    if (dynamic_cast<const LayoutError*>(&e)) return {"layout", kExitInvariant};
    if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return {"io", kExitIo};
    return {"internal", kExitNumeric};
}

int report(std::ostream& err, const char* kind, int code, const std::string& message) {
    err << nlohmann::json{{"error", kind}, {"code", code}, {"message", message}}.dump() << '\n';
    return code;
}

void require_file(const std::string& path) {
    if (!fs::is_regular_file(path)) throw IoError("no such file: " + path);
}

void require_parent(const std::string& path) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty() && !fs::is_directory(parent)) throw IoError("output directory does not exist: " + parent.string());
}

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(6) << std::scientific << v;
    return s.str();
}

// ---------------------------------------------------------------------------

struct SynthArgs {
    std::vector<Index> dims{64, 5, 6, 5, 2};
    std::uint64_t seed = 0;
    double noise = 0.0;
    std::string offsets = "centered";
    std::string output;
    std::string truth;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
    if (a.dims.size() != 5) throw ShapeError("--dims needs five sizes D,P,E,I,R");
    require_parent(a.output);
    if (!a.truth.empty()) require_parent(a.truth);
    SyntheticSpec spec;
    std::copy(a.dims.begin(), a.dims.end(), spec.dims.begin());
    spec.seed = a.seed;
    spec.noise_sigma = a.noise;
    if (a.offsets == "centered") spec.offsets = ExpressionOffsets::centered;
    else if (a.offsets == "orthogonal") spec.offsets = ExpressionOffsets::orthogonal;
    else if (a.offsets == "raw") spec.offsets = ExpressionOffsets::raw;
    else throw ShapeError("unknown --offsets value '" + a.offsets + "'");

    SyntheticData s = generate_synthetic(spec);
    write_container(s.dataset, a.output);
    out << "dataset " << a.output << " shape";
    for (Index d : a.dims) out << ' ' << d;
    out << '\n';

    if (!a.truth.empty()) {
        const GroundTruth& gt = s.truth;
        const Index d = spec.dims[0];
        const Index n = 2 + gt.person_offsets.cols() + gt.expression_offsets.cols();
        LatentBatch b{Matrix(d, n), {}, s.dataset.layout()};
        Index col = 0;
        b.latents.col(col++) = gt.base;
        b.names.push_back("base");
        for (Index p = 0; p < gt.person_offsets.cols(); ++p) {
            b.latents.col(col++) = gt.person_offsets.col(p);
            b.names.push_back("person/" + s.dataset.labels().persons[p]);
        }
        for (Index e = 0; e < gt.expression_offsets.cols(); ++e) {
            b.latents.col(col++) = gt.expression_offsets.col(e);
            b.names.push_back("expression/" + s.dataset.labels().expressions[e]);
        }
        b.latents.col(col++) = gt.rotation_offset;
        b.names.push_back("rotation");
        write_container(b, a.truth);
        out << "truth " << a.truth << " vectors " << n << '\n';
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct FitArgs {
    std::string input;
    std::string output;
    std::string layout = "any";
    bool alternative_grid = false;
};

int cmd_fit(const FitArgs& a, std::ostream& out) {
    if (a.layout != "bu3dfe" && a.layout != "any") throw ShapeError("unknown --layout value '" + a.layout + "'");
    require_file(a.input);
    require_parent(a.output);
    LatentDataset data = a.layout == "bu3dfe" ? load_bu3dfe_layout(a.input, {a.alternative_grid})
                                              : read_as<LatentDataset>(a.input);

    const HosvdResult h = hosvd(data.latents());
    const HosvdDiagnostics diag = diagnose(h, data.latents());
    const TensorModel m = model_from_hosvd(h, data.labels(), data.layout());
    write_container(m, a.output);

    for (int mode = 1; mode <= kDataOrder; ++mode) {
        const Vector& s = h.singular_values[static_cast<std::size_t>(mode - 1)];
        out << "mode " << mode << " size " << h.factor(mode).rows() << " rank "
            << h.numerical_rank[static_cast<std::size_t>(mode - 1)] << " sigma";
        for (Index k = 0; k < std::min<Index>(s.size(), 5); ++k) out << ' ' << fmt(s[k]);
        if (s.size() > 5) out << " ...";
        out << '\n';
    }
    out << "residual " << fmt(diag.reconstruction_error) << '\n';
    out << "model " << a.output << " fingerprint " << std::hex << fingerprint(m) << std::dec << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct ReconstructArgs {
    std::string model;
    std::vector<Index> cell;
    bool mean = false;
    std::string output;
};

int cmd_reconstruct(const ReconstructArgs& a, std::ostream& out) {
    require_file(a.model);
    require_parent(a.output);
    if (a.mean == !a.cell.empty()) throw ShapeError("give exactly one of --cell or --mean");
    const TensorModel m = read_as<TensorModel>(a.model);
    LatentBatch b{Matrix(m.latent_dim(), 1), {}, m.layout()};
    if (a.mean) {
        CompactParams q;
        for (Axis ax : kParameterAxes) q[ax] = mean_params(m, ax);
        b.latents.col(0) = reconstruct_compact(m, q);
        b.names.push_back("mean");
    } else {
        if (a.cell.size() != 4) throw ShapeError("--cell needs four indices p,e,i,r");
        b.latents.col(0) = reconstruct_canonical(m, one_hot(m, a.cell[0], a.cell[1], a.cell[2], a.cell[3]));
        const AxisLabels& l = m.labels();
        b.names.push_back(l.persons[a.cell[0]] + "/" + l.expressions[a.cell[1]] + "/" + l.intensities[a.cell[2]] +
                          "/" + l.rotations[a.cell[3]]);
    }
    write_container(b, a.output);
    out << "latent " << b.names[0] << " norm " << fmt(b.latents.col(0).norm()) << " -> " << a.output << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct RecoverArgs {
    std::string model;
    std::string latent;
    std::string form = "rank-one";
    std::string config;
    std::string lambda1;
    std::string lambda2;
    std::optional<int> max_iters;
    std::optional<double> learning_rate;
    std::optional<double> tolerance;
    unsigned threads = 0;
    std::string output;
};

int cmd_recover(const RecoverArgs& a, std::ostream& out) {
    require_file(a.model);
    require_file(a.latent);
    if (!a.config.empty()) require_file(a.config);
    if (!a.output.empty()) require_parent(a.output);
    RecoveryForm form;
    if (a.form == "rank-one") form = RecoveryForm::rank_one;
    else if (a.form == "full-rank") form = RecoveryForm::full_rank;
    else throw ShapeError("unknown --form value '" + a.form + "'");

    RecoveryConfig cfg;
    if (!a.config.empty()) cfg = load_recovery_config(a.config, cfg);
    std::stringstream flags;
    if (!a.lambda1.empty()) flags << "lambda1 = " << a.lambda1 << '\n';
    if (!a.lambda2.empty()) flags << "lambda2 = " << a.lambda2 << '\n';
    if (a.max_iters) flags << "max_iters = " << *a.max_iters << '\n';
    if (a.learning_rate) flags << "learning_rate = " << std::setprecision(17) << *a.learning_rate << '\n';
    if (a.tolerance) flags << "tolerance = " << std::setprecision(17) << *a.tolerance << '\n';
    cfg = parse_recovery_config(flags, cfg);

    const TensorModel m = read_as<TensorModel>(a.model);
    const LatentBatch in = read_as<LatentBatch>(a.latent);
    if (in.latents.rows() != m.latent_dim()) {
        throw ShapeError("latent dimension " + std::to_string(in.latents.rows()) + " differs from the model's " +
                         std::to_string(m.latent_dim()));
    }
    const auto results = recover_batch(m, in.latents, form, cfg, a.threads);

    LatentBatch rebuilt{Matrix(in.latents.rows(), in.latents.cols()), in.names, in.layout};
    for (std::size_t k = 0; k < results.size(); ++k) {
        const RecoveredParams& r = results[k];
        rebuilt.latents.col(static_cast<Index>(k)) = reconstruct(m, r);
        out << in.names[k] << " form " << form_name(r.form()) << " loss " << fmt(r.final_loss) << " objective "
            << fmt(r.objective) << " iterations " << r.iterations << " converged "
            << (r.converged ? "true" : "false") << '\n';
    }
    if (!a.output.empty()) write_container(rebuilt, a.output);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct DirectionArgs {
    std::string model;
    std::string output_dir;
    std::vector<std::string> only;
};

int cmd_direction(const DirectionArgs& a, std::ostream& out) {
    require_file(a.model);
    if (!fs::is_directory(a.output_dir)) throw IoError("output directory does not exist: " + a.output_dir);
    const TensorModel m = read_as<TensorModel>(a.model);
    std::vector<SemanticDirection> dirs = all_directions(m);
    for (const auto& name : a.only) {
        const bool known = std::any_of(dirs.begin(), dirs.end(), [&](const auto& d) { return d.name() == name; });
        if (!known) throw ShapeError("the model has no direction named '" + name + "'");
    }
    for (const auto& d : dirs) {
        if (!a.only.empty() && std::find(a.only.begin(), a.only.end(), d.name()) == a.only.end()) continue;
        const fs::path path = fs::path(a.output_dir) / (d.name() + ".ltc");
        write_container(d, path);
        out << d.name() << ' ' << kind_name(d.kind()) << " norm " << fmt(d.vector().norm()) << " -> "
            << path.string() << '\n';
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct EditArgs {
    std::string direction;
    std::string latent;
    double strength = 0.0;
    std::string output;
};

int cmd_edit(const EditArgs& a, std::ostream& out) {
    require_file(a.direction);
    require_file(a.latent);
    require_parent(a.output);
    const SemanticDirection d = read_as<SemanticDirection>(a.direction);
    LatentBatch b = read_as<LatentBatch>(a.latent);
    for (Index k = 0; k < b.latents.cols(); ++k) b.latents.col(k) = apply_edit(b.latents.col(k), d, a.strength);
    write_container(b, a.output);
    out << "edited " << b.latents.cols() << " latents along " << d.name() << " strength " << a.strength << " -> "
        << a.output << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct DiagnoseArgs {
    std::string model;
    std::string data;
    double tolerance = 1e-5;
};

int cmd_diagnose(const DiagnoseArgs& a, std::ostream& out) {
    require_file(a.model);
    if (!a.data.empty()) require_file(a.data);
    const TensorModel m = read_as<TensorModel>(a.model);

    int checked = 0;
    int failed = 0;
    auto check = [&](const std::string& name, double value, double limit) {
        ++checked;
        const bool ok = value <= limit;
        if (!ok) ++failed;
        out << (ok ? "ok   " : "FAIL ") << name << ' ' << fmt(value) << " (limit " << fmt(limit) << ")\n";
    };

    for (Axis ax : kParameterAxes) {
        check(std::string(axis_name(ax)) + " factor orthonormality", orthonormality_deviation(m.factor(ax)),
              a.tolerance);
    }
    // C = S x1 U1 keeps the all-orthogonality of S on every mode but the first.
    const double total = m.core().frobenius_norm();
    for (Axis ax : kParameterAxes) {
        Matrix g = mode_gram(m.core(), mode_of(ax));
        double ordering = 0.0;
        for (Index k = 1; k < g.rows(); ++k) ordering = std::max(ordering, g(k, k) - g(k - 1, k - 1));
        g.diagonal().setZero();
        const double scale = total > 0.0 ? total * total : 1.0;
        check(std::string(axis_name(ax)) + " core all-orthogonality", g.size() ? g.cwiseAbs().maxCoeff() / scale : 0.0,
              a.tolerance);
        check(std::string(axis_name(ax)) + " core slice ordering", std::max(0.0, ordering) / scale, a.tolerance);
    }
    const TruncatedModel tm = truncate_intensity(m);
    check("intensity basis norm deviation", std::abs(tm.intensity_basis().norm() - 1.0), a.tolerance);
    if (!a.data.empty()) {
        const LatentDataset data = read_as<LatentDataset>(a.data);
        check("in-sample reconstruction error", in_sample_error(m, data), a.tolerance);
    }

    const std::vector<SemanticDirection> dirs = all_directions(m);
    const Matrix cos = direction_orthogonality_report(dirs);
    out << "direction cosine similarity\n";
    out << std::setw(12) << "";
    for (const auto& d : dirs) out << std::setw(11) << d.name();
    out << '\n';
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        out << std::setw(12) << dirs[i].name();
        for (std::size_t j = 0; j < dirs.size(); ++j) {
            out << std::setw(11) << std::fixed << std::setprecision(4)
                << cos(static_cast<Index>(i), static_cast<Index>(j));
        }
        out << std::defaultfloat << '\n';
    }
    out << "invariants " << checked << " checked " << failed << " failed\n";
    return failed == 0 ? kExitOk : kExitInvariant;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    configure_logging();

    CLI::App app{"Multilinear latent-space face model toolkit"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Generate a synthetic latent dataset with planted structure");
    s->add_option("--dims", synth.dims, "Sizes D,P,E,I,R")->delimiter(',')->capture_default_str();
    s->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
    s->add_option("--noise", synth.noise, "Noise standard deviation")->capture_default_str()->check(
        CLI::NonNegativeNumber);
    s->add_option("--offsets", synth.offsets, "Expression offsets: centered, orthogonal or raw")
        ->capture_default_str();
    s->add_option("-o,--output", synth.output, "Dataset container to write")->required();
    s->add_option("--truth", synth.truth, "Also write the planted vectors as a latents container");

    FitArgs fit;
    auto* f = app.add_subcommand("fit", "Fit the tensor model to a dataset");
    f->add_option("input", fit.input, "Dataset container")->required();
    f->add_option("-o,--output", fit.output, "Model container to write")->required();
    f->add_option("--layout", fit.layout, "Required grid: any or bu3dfe")->capture_default_str();
    f->add_flag("--allow-alternative-grid", fit.alternative_grid,
                "With --layout bu3dfe, accept other expression/intensity grids");

    ReconstructArgs rec;
    auto* r = app.add_subcommand("reconstruct", "Rebuild a latent from the model");
    r->add_option("model", rec.model, "Model container")->required();
    r->add_option("--cell", rec.cell, "Grid cell p,e,i,r")->delimiter(',')->expected(4);
    r->add_flag("--mean", rec.mean, "Use the mean parameters of every axis");
    r->add_option("-o,--output", rec.output, "Latents container to write")->required();

    RecoverArgs recover;
    auto* rv = app.add_subcommand("recover", "Recover model parameters for latents");
    rv->add_option("model", recover.model, "Model container")->required();
    rv->add_option("--latent", recover.latent, "Latents container")->required();
    rv->add_option("--form", recover.form, "rank-one or full-rank")->capture_default_str();
    rv->add_option("--config", recover.config, "key = value settings file");
    rv->add_option("--lambda1", recover.lambda1, "Tikhonov weight, one value or four (default 0.1)");
    rv->add_option("--lambda2", recover.lambda2, "Sum-to-one weight, one value or four (default 0.1)");
    rv->add_option("--max-iters", recover.max_iters, "Iteration limit (default 2000)");
    rv->add_option("--learning-rate", recover.learning_rate, "First trial step (default 0.01)");
    rv->add_option("--tolerance", recover.tolerance, "Relative decrease stopping threshold (default 1e-9)");
    rv->add_option("--threads", recover.threads, "Worker threads, 0 for all cores")->capture_default_str();
    rv->add_option("-o,--output", recover.output, "Write the reconstructed latents");

    DirectionArgs dir;
    auto* d = app.add_subcommand("direction", "Extract expression and yaw directions");
    d->add_option("model", dir.model, "Model container")->required();
    d->add_option("-o,--output-dir", dir.output_dir, "Directory for <name>.ltc files")->required();
    d->add_option("--only", dir.only, "Comma-separated direction names")->delimiter(',');

    EditArgs edit;
    auto* e = app.add_subcommand("edit", "Move latents along a direction");
    e->add_option("--direction", edit.direction, "Direction container")->required();
    e->add_option("--latent", edit.latent, "Latents container")->required();
    e->add_option("--strength", edit.strength, "Step along the direction")->capture_default_str();
    e->add_option("-o,--output", edit.output, "Latents container to write")->required();

    DiagnoseArgs diag;
    auto* g = app.add_subcommand("diagnose", "Check model invariants and direction entanglement");
    g->add_option("model", diag.model, "Model container")->required();
    g->add_option("--data", diag.data, "Dataset the model was fitted on");
    g->add_option("--tolerance", diag.tolerance, "Limit for every check")->capture_default_str();

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& h) {
        return app.exit(h, out, err);
    } catch (const CLI::CallForAllHelp& h) {
        return app.exit(h, out, err);
    } catch (const CLI::ParseError& pe) {
        return report(err, "usage", kExitUsage, pe.what());
    }

    try {
        if (*s) return cmd_synth(synth, out);
        if (*f) return cmd_fit(fit, out);
        if (*r) return cmd_reconstruct(rec, out);
        if (*rv) return cmd_recover(recover, out);
        if (*d) return cmd_direction(dir, out);
        if (*e) return cmd_edit(edit, out);
        if (*g) return cmd_diagnose(diag, out);
    } catch (const std::exception& ex) {
        const Failure fail = classify(ex);
        spdlog::debug("command failed: {}", ex.what());
        return report(err, fail.kind, fail.code, ex.what());
    }
    return kExitUsage;
}

}  // namespace latentface
