#include "latentface/container.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <type_traits>

#include "byte_io.hpp"
#include "latentface/checksum.hpp"
#include "latentface/error.hpp"

namespace latentface {

namespace {

constexpr char kMagic[4] = {'L', 'T', 'C', '1'};

// Decoded frame before it is turned into a typed record.
struct Frame {
    RecordKind kind{};
    std::vector<std::int64_t> meta;
    std::vector<std::string> labels;
    std::vector<Shape> shapes;
    std::vector<std::vector<double>> arrays;
};

struct ArrayRef {
    Shape shape;
    const double* data;
};

std::vector<std::byte> encode_frame(RecordKind kind, const std::vector<std::int64_t>& meta,
                                    const std::vector<std::string>& labels, const std::vector<ArrayRef>& arrays) {
    std::vector<std::byte> out;
    for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
    detail::append_le(out, kContainerVersion);
    detail::append_le(out, static_cast<std::uint8_t>(kind));
    detail::append_le(out, std::uint16_t{0});

    detail::append_le(out, static_cast<std::uint32_t>(meta.size()));
    for (std::int64_t m : meta) detail::append_le(out, m);

    detail::append_le(out, static_cast<std::uint32_t>(labels.size()));
    for (const auto& s : labels) detail::append_string(out, s);

    detail::append_le(out, static_cast<std::uint32_t>(arrays.size()));
    std::size_t total = 0;
    for (const auto& a : arrays) {
        detail::append_le(out, static_cast<std::uint8_t>(a.shape.size()));
        for (Index s : a.shape) {
            if (s < 0 || s > std::numeric_limits<std::uint32_t>::max()) throw ShapeError("array size too large");
            detail::append_le(out, static_cast<std::uint32_t>(s));
        }
        total += static_cast<std::size_t>(shape_product(a.shape));
    }
    out.reserve(out.size() + total * 4 + 8);
    for (const auto& a : arrays) {
        const Index n = shape_product(a.shape);
        for (Index k = 0; k < n; ++k) detail::append_f32(out, a.data[k]);
    }
    detail::append_le(out, fnv1a64(out));
    return out;
}

std::vector<std::string> concat_labels(const AxisLabels& l) {
    std::vector<std::string> out;
    for (Axis a : kParameterAxes) out.insert(out.end(), l.of(a).begin(), l.of(a).end());
    return out;
}

std::vector<std::byte> encode_dataset(const LatentDataset& d) {
    const DenseTensor& t = d.latents();
    return encode_frame(RecordKind::dataset, {d.layout().num_style_vectors, d.layout().style_dim},
                        concat_labels(d.labels()), {{t.shape(), t.data().data()}});
}

std::vector<std::byte> encode_model(const TensorModel& m) {
    std::vector<ArrayRef> arrays;
    arrays.push_back({{m.latent_dim()}, m.mean_latent().data()});
    arrays.push_back({m.core().shape(), m.core().data().data()});
    for (const Matrix& u : m.factors()) arrays.push_back({{u.rows(), u.cols()}, u.data()});
    return encode_frame(RecordKind::model,
                        {m.layout().num_style_vectors, m.layout().style_dim,
                         std::bit_cast<std::int64_t>(fingerprint(m))},
                        concat_labels(m.labels()), arrays);
}

std::vector<std::byte> encode_direction(const SemanticDirection& d) {
    return encode_frame(RecordKind::direction,
                        {static_cast<std::int64_t>(d.kind()), std::bit_cast<std::int64_t>(d.model_fingerprint())},
                        {d.name()}, {{{d.latent_dim()}, d.vector().data()}});
}

std::vector<std::byte> encode_batch(const LatentBatch& b) {
    b.validate();
    return encode_frame(RecordKind::latents, {b.layout.num_style_vectors, b.layout.style_dim}, b.names,
                        {{{b.latents.rows(), b.latents.cols()}, b.latents.data()}});
}

Frame decode_frame(std::span<const std::byte> bytes) {
    const std::size_t head = std::min<std::size_t>(bytes.size(), 4);
    if (head > 0 && std::memcmp(bytes.data(), kMagic, head) != 0) throw BadMagicError("not an LTC1 container");
    if (head < 4) throw TruncatedError("file ends inside the magic bytes");
    detail::ByteReader r(bytes.data(), bytes.size());
    r.read_le<std::uint32_t>();
    const auto version = r.read_le<std::uint8_t>();
    if (version != kContainerVersion) {
        throw VersionError("container version " + std::to_string(version) + " is not supported (expected " +
                           std::to_string(kContainerVersion) + ")");
    }
    const auto kind = r.read_le<std::uint8_t>();
    if (kind < 1 || kind > 4) throw RecordKindError("unknown record kind " + std::to_string(kind));
    Frame f;
    f.kind = static_cast<RecordKind>(kind);
    if (r.read_le<std::uint16_t>() != 0) throw FormatError("reserved header field is not zero");

    const auto n_meta = r.read_le<std::uint32_t>();
    r.need(std::size_t{n_meta} * 8);
    for (std::uint32_t k = 0; k < n_meta; ++k) f.meta.push_back(r.read_le<std::int64_t>());

    const auto n_label = r.read_le<std::uint32_t>();
    r.need(std::size_t{n_label} * 4);
    for (std::uint32_t k = 0; k < n_label; ++k) f.labels.push_back(r.read_string());

    const auto n_array = r.read_le<std::uint32_t>();
    std::size_t total = 0;
    for (std::uint32_t k = 0; k < n_array; ++k) {
        const auto order = r.read_le<std::uint8_t>();
        if (order < 1 || order > kMaxOrder) throw FormatError("array order " + std::to_string(order) + " out of range");
        Shape s;
        std::size_t n = 1;
        for (int m = 0; m < order; ++m) {
            const auto d = r.read_le<std::uint32_t>();
            if (d == 0) throw FormatError("array has a zero-sized mode");
            s.push_back(d);
            n *= d;
            if (n > bytes.size()) throw TruncatedError("container ends before its declared contents");
        }
        total += n;
        f.shapes.push_back(std::move(s));
    }
    if (total > bytes.size()) throw TruncatedError("container ends before its declared contents");
    r.need(total * 4 + 8);
    const std::size_t expected = r.position() + total * 4 + 8;
    if (bytes.size() > expected) {
        throw FormatError("container has " + std::to_string(bytes.size() - expected) + " trailing bytes");
    }

    const std::size_t body = bytes.size() - 8;
    detail::ByteReader trailer(bytes.data() + body, 8);
    if (trailer.read_le<std::uint64_t>() != fnv1a64(bytes.first(body))) {
        throw ChecksumError("container checksum does not match its contents");
    }

    for (const Shape& s : f.shapes) {
        std::vector<double> values(static_cast<std::size_t>(shape_product(s)));
        for (double& v : values) {
            const float x = r.read_f32();
            if (!std::isfinite(x)) throw NonFiniteError("container payload holds a NaN or infinite value");
            v = x;
        }
        f.arrays.push_back(std::move(values));
    }
    return f;
}

void expect_counts(const Frame& f, std::size_t meta, std::size_t arrays) {
    if (f.meta.size() != meta || f.arrays.size() != arrays) {
        throw FormatError(std::string(record_kind_name(f.kind)) + " record has " + std::to_string(f.meta.size()) +
                          " meta values and " + std::to_string(f.arrays.size()) + " arrays");
    }
}

StyleLayout layout_from(const Frame& f) {
    return StyleLayout{static_cast<Index>(f.meta[0]), static_cast<Index>(f.meta[1])};
}

AxisLabels split_labels(const Frame& f, const std::array<Index, 4>& counts) {
    Index total = 0;
    for (Index c : counts) total += c;
    if (static_cast<Index>(f.labels.size()) != total) throw FormatError("label count does not match the grid");
    AxisLabels l;
    std::vector<std::string>* groups[4] = {&l.persons, &l.expressions, &l.intensities, &l.rotations};
    auto it = f.labels.begin();
    for (std::size_t k = 0; k < 4; ++k) {
        groups[k]->assign(it, it + counts[k]);
        it += counts[k];
    }
    return l;
}

Matrix to_matrix(const Shape& s, const std::vector<double>& v) {
    if (s.size() != 2) throw FormatError("expected a matrix array");
    return Eigen::Map<const Matrix>(v.data(), s[0], s[1]);
}

Vector to_vector(const Shape& s, const std::vector<double>& v) {
    if (s.size() != 1) throw FormatError("expected a vector array");
    return Eigen::Map<const Vector>(v.data(), s[0]);
}

// Shape errors raised while rebuilding a record mean the file is
// self-inconsistent.
template <class F>
auto as_format_error(F&& build) {
    try {
        return build();
    } catch (const ShapeError& e) {
        throw FormatError(std::string("inconsistent container: ") + e.what());
    } catch (const NumericError& e) {
        throw FormatError(std::string("inconsistent container: ") + e.what());
    }
}

Record build(Frame f) {
    switch (f.kind) {
    case RecordKind::dataset: {
        expect_counts(f, 2, 1);
        if (f.shapes[0].size() != 5) throw FormatError("dataset array must have order 5");
        const Shape& s = f.shapes[0];
        AxisLabels l = split_labels(f, {s[1], s[2], s[3], s[4]});
        return as_format_error([&] {
            return Record(LatentDataset(DenseTensor(s, std::move(f.arrays[0])), std::move(l), layout_from(f)));
        });
    }
    case RecordKind::model: {
        expect_counts(f, 3, 6);
        std::array<Matrix, 4> factors;
        std::array<Index, 4> rows{};
        for (std::size_t k = 0; k < 4; ++k) {
            factors[k] = to_matrix(f.shapes[2 + k], f.arrays[2 + k]);
            rows[k] = factors[k].rows();
        }
        AxisLabels l = split_labels(f, rows);
        Vector mean = to_vector(f.shapes[0], f.arrays[0]);
        TensorModel m = as_format_error([&] {
            return TensorModel(std::move(mean), DenseTensor(f.shapes[1], std::move(f.arrays[1])), std::move(factors),
                               std::move(l), layout_from(f));
        });
        if (fingerprint(m) != std::bit_cast<std::uint64_t>(f.meta[2])) {
            throw FormatError("model fingerprint does not match its contents");
        }
        return m;
    }
    case RecordKind::direction: {
        expect_counts(f, 2, 1);
        if (f.labels.size() != 1) throw FormatError("direction record must carry exactly one name");
        if (f.meta[0] != 0 && f.meta[0] != 1) throw FormatError("unknown direction kind");
        Vector v = to_vector(f.shapes[0], f.arrays[0]);
        return as_format_error([&] {
            return Record(SemanticDirection(f.labels[0], static_cast<DirectionKind>(f.meta[0]), std::move(v),
                                            std::bit_cast<std::uint64_t>(f.meta[1])));
        });
    }
    case RecordKind::latents: {
        expect_counts(f, 2, 1);
        LatentBatch b{to_matrix(f.shapes[0], f.arrays[0]), std::move(f.labels), layout_from(f)};
        as_format_error([&] {
            b.validate();
            return 0;
        });
        return b;
    }
    }
    throw RecordKindError("unknown record kind");
}

}  // namespace

const char* record_kind_name(RecordKind k) noexcept {
    switch (k) {
    case RecordKind::dataset: return "dataset";
    case RecordKind::model: return "model";
    case RecordKind::direction: return "direction";
    case RecordKind::latents: return "latents";
    }
    return "unknown";
}

RecordKind kind_of(const Record& r) noexcept {
    return static_cast<RecordKind>(r.index() + 1);
}

std::vector<std::byte> encode(const Record& r) {
    return std::visit(
        [](const auto& v) -> std::vector<std::byte> {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, LatentDataset>) return encode_dataset(v);
            else if constexpr (std::is_same_v<T, TensorModel>) return encode_model(v);
            else if constexpr (std::is_same_v<T, SemanticDirection>) return encode_direction(v);
            else return encode_batch(v);
        },
        r);
}

Record decode(std::span<const std::byte> bytes) { return build(decode_frame(bytes)); }

void write_container(const Record& r, const std::filesystem::path& path) {
    const auto bytes = encode(r);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

Record read_container(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("failed reading " + path.string());
    return decode(std::as_bytes(std::span(raw.data(), raw.size())));
}

template <class T>
T read_as(const std::filesystem::path& path) {
    Record r = read_container(path);
    if (auto* v = std::get_if<T>(&r)) return std::move(*v);
    throw RecordKindError(path.string() + " holds a " + record_kind_name(kind_of(r)) + " record");
}

template LatentDataset read_as<LatentDataset>(const std::filesystem::path&);
template TensorModel read_as<TensorModel>(const std::filesystem::path&);
template SemanticDirection read_as<SemanticDirection>(const std::filesystem::path&);
template LatentBatch read_as<LatentBatch>(const std::filesystem::path&);

LatentDataset load_bu3dfe_layout(const std::filesystem::path& path, const LayoutOptions& options) {
    LatentDataset d = read_as<LatentDataset>(path);
    validate_bu3dfe_layout(d, options);
    return d;
}

}  // namespace latentface
