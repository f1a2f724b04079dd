#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "latentface/container.hpp"
#include "latentface/error.hpp"
#include "latentface/synthetic.hpp"
#include "support.hpp"

using namespace latentface;
using lf_test::Rng;
using lf_test::TempDir;

namespace {

std::vector<std::byte> slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<std::byte> out(raw.size());
    std::memcpy(out.data(), raw.data(), raw.size());
    return out;
}

void spit(const std::filesystem::path& p, const std::vector<std::byte>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::uint64_t fnv1a(std::span<const std::byte> bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (std::byte b : bytes) {
        h ^= static_cast<std::uint64_t>(b);
        h *= 1099511628211ULL;
    }
    return h;
}

// Recompute and overwrite the trailing checksum after a deliberate edit.
void reseal(std::vector<std::byte>& bytes) {
    const std::uint64_t h = fnv1a(std::span(bytes).first(bytes.size() - 8));
    for (int k = 0; k < 8; ++k) bytes[bytes.size() - 8 + k] = static_cast<std::byte>((h >> (8 * k)) & 0xff);
}

template <class T>
void put(std::vector<std::byte>& out, T v) {
    for (std::size_t k = 0; k < sizeof(T); ++k) {
        out.push_back(static_cast<std::byte>((static_cast<std::uint64_t>(v) >> (8 * k)) & 0xff));
    }
}

LatentDataset small_dataset(std::uint64_t seed) {
    SyntheticSpec spec;
    spec.dims = {12, 3, 2, 3, 2};
    spec.noise_sigma = 0.1;
    spec.seed = seed;
    return generate_synthetic(spec).dataset;
}

DenseTensor rounded(const DenseTensor& t) {
    std::vector<double> v(t.values());
    for (double& x : v) x = static_cast<double>(static_cast<float>(x));
    return DenseTensor(t.shape(), std::move(v));
}

}  // namespace

TEST(Container, DatasetRoundTripAtStoredPrecision) {
    TempDir dir("io");
    const LatentDataset d = small_dataset(1);
    write_container(d, dir / "d.ltc");
    const LatentDataset back = read_as<LatentDataset>(dir / "d.ltc");
    EXPECT_EQ(back.labels(), d.labels());
    EXPECT_EQ(back.layout(), d.layout());
    EXPECT_EQ(back.latents(), rounded(d.latents()));
    // Already-rounded data round-trips exactly.
    write_container(back, dir / "again.ltc");
    EXPECT_EQ(read_as<LatentDataset>(dir / "again.ltc"), back);
}

TEST(Container, MinimalDataset) {
    TempDir dir("io");
    const LatentDataset d(DenseTensor({1, 1, 1, 1, 1}, {0.5}), AxisLabels::numbered(1, 1, 1, 1),
                          StyleLayout::for_dim(1));
    write_container(d, dir / "min.ltc");
    EXPECT_EQ(read_as<LatentDataset>(dir / "min.ltc"), d);
}

TEST(Container, ModelRoundTripKeepsFingerprint) {
    TempDir dir("io");
    const TensorModel m = fit_model(small_dataset(2));
    write_container(m, dir / "m.ltc");
    const TensorModel back = read_as<TensorModel>(dir / "m.ltc");
    EXPECT_EQ(fingerprint(back), fingerprint(m));
    EXPECT_TRUE(identical(back.mean_latent(), m.mean_latent().cast<float>().cast<double>()));
    EXPECT_EQ(back.core(), rounded(m.core()));
    for (Axis a : kParameterAxes) {
        EXPECT_TRUE(identical(back.factor(a), m.factor(a).cast<float>().cast<double>())) << axis_name(a);
    }
    EXPECT_EQ(back.labels(), m.labels());
    // A second cycle is exact.
    write_container(back, dir / "m2.ltc");
    EXPECT_EQ(read_as<TensorModel>(dir / "m2.ltc"), back);
}

TEST(Container, DirectionRoundTripIsExact) {
    TempDir dir("io");
    Rng rng(3);
    const SemanticDirection d("happiness", DirectionKind::expression, rng.vector(20), 0xfeedfacecafebeefULL);
    write_container(d, dir / "d.ltc");
    const SemanticDirection back = read_as<SemanticDirection>(dir / "d.ltc");
    EXPECT_EQ(back, d);
    EXPECT_EQ(back.name(), "happiness");
    EXPECT_EQ(back.kind(), DirectionKind::expression);
    EXPECT_EQ(back.model_fingerprint(), 0xfeedfacecafebeefULL);
}

TEST(Container, LatentBatchRoundTrip) {
    TempDir dir("io");
    Rng rng(4);
    const LatentBatch b{lf_test::to_f32(rng.matrix(6, 3)), {"a", "b", "c"}, StyleLayout{2, 3}};
    write_container(b, dir / "b.ltc");
    EXPECT_EQ(read_as<LatentBatch>(dir / "b.ltc"), b);
    EXPECT_EQ(kind_of(Record(b)), RecordKind::latents);
}

TEST(Container, DeterministicBytes) {
    TempDir dir("io");
    const LatentDataset d = small_dataset(5);
    write_container(d, dir / "a.ltc");
    write_container(d, dir / "b.ltc");
    EXPECT_EQ(slurp(dir / "a.ltc"), slurp(dir / "b.ltc"));
    EXPECT_EQ(slurp(dir / "a.ltc"), encode(d));
}

TEST(Container, GoldenBytesForTinyDirection) {
    const SemanticDirection d("yaw", DirectionKind::rotation, Vector::Constant(2, 1.5), 7);
    std::vector<std::byte> expect;
    for (char c : {'L', 'T', 'C', '1'}) expect.push_back(static_cast<std::byte>(c));
    put<std::uint8_t>(expect, 1);     // version
    put<std::uint8_t>(expect, 3);     // direction
    put<std::uint16_t>(expect, 0);
    put<std::uint32_t>(expect, 2);    // meta: kind, fingerprint
    put<std::int64_t>(expect, 1);
    put<std::int64_t>(expect, 7);
    put<std::uint32_t>(expect, 1);    // one label
    put<std::uint32_t>(expect, 3);
    for (char c : {'y', 'a', 'w'}) expect.push_back(static_cast<std::byte>(c));
    put<std::uint32_t>(expect, 1);    // one array of order 1, size 2
    put<std::uint8_t>(expect, 1);
    put<std::uint32_t>(expect, 2);
    put<std::uint32_t>(expect, std::bit_cast<std::uint32_t>(1.5f));
    put<std::uint32_t>(expect, std::bit_cast<std::uint32_t>(1.5f));
    put<std::uint64_t>(expect, fnv1a(expect));
    EXPECT_EQ(encode(d), expect);
    EXPECT_EQ(std::get<SemanticDirection>(decode(expect)), d);
}

TEST(Container, RejectsEachCorruption) {
    const std::vector<std::byte> good = encode(small_dataset(6));
    ASSERT_NO_THROW(decode(good));

    auto bad_magic = good;
    bad_magic[0] = std::byte{'X'};
    EXPECT_THROW(decode(bad_magic), BadMagicError);

    auto bad_version = good;
    bad_version[4] = std::byte{2};
    reseal(bad_version);
    EXPECT_THROW(decode(bad_version), VersionError);

    auto bad_kind = good;
    bad_kind[5] = std::byte{9};
    reseal(bad_kind);
    EXPECT_THROW(decode(bad_kind), RecordKindError);

    for (std::size_t cut : {std::size_t{3}, std::size_t{10}, good.size() / 2, good.size() - 1}) {
        EXPECT_THROW(decode(std::span(good).first(cut)), TruncatedError) << cut;
    }

    auto trailing = good;
    trailing.push_back(std::byte{0});
    EXPECT_THROW(decode(trailing), FormatError);

    auto flipped = good;
    flipped[good.size() - 20] ^= std::byte{0x01};
    EXPECT_THROW(decode(flipped), ChecksumError);

    auto bad_sum = good;
    bad_sum.back() ^= std::byte{0x80};
    EXPECT_THROW(decode(bad_sum), ChecksumError);

    // A NaN with a valid checksum is still rejected, as its own error.
    auto nan = good;
    const auto bits = std::bit_cast<std::uint32_t>(std::numeric_limits<float>::quiet_NaN());
    for (int k = 0; k < 4; ++k) nan[good.size() - 12 + k] = static_cast<std::byte>((bits >> (8 * k)) & 0xff);
    reseal(nan);
    EXPECT_THROW(decode(nan), NonFiniteError);

    auto inf = good;
    const auto ibits = std::bit_cast<std::uint32_t>(std::numeric_limits<float>::infinity());
    for (int k = 0; k < 4; ++k) inf[good.size() - 12 + k] = static_cast<std::byte>((ibits >> (8 * k)) & 0xff);
    reseal(inf);
    EXPECT_THROW(decode(inf), NonFiniteError);
}

TEST(Container, ErrorTypesAreDistinct) {
    // Each specific error must not be caught as another specific error.
    auto bytes = encode(small_dataset(7));
    bytes.back() ^= std::byte{1};
    try {
        decode(bytes);
        FAIL() << "no error";
    } catch (const TruncatedError&) {
        FAIL() << "checksum failure reported as truncation";
    } catch (const NonFiniteError&) {
        FAIL() << "checksum failure reported as non-finite";
    } catch (const ChecksumError&) {
    }
}

TEST(Container, ModelFingerprintMismatchRejected) {
    const TensorModel m = fit_model(small_dataset(8));
    auto bytes = encode(m);
    // The fingerprint is the third meta value; offsets: 8 header + 4 count + 16.
    bytes[8 + 4 + 16] ^= std::byte{1};
    reseal(bytes);
    EXPECT_THROW(decode(bytes), FormatError);
}

TEST(Container, ReadAsWrongKind) {
    TempDir dir("io");
    write_container(small_dataset(9), dir / "d.ltc");
    EXPECT_THROW(read_as<TensorModel>(dir / "d.ltc"), RecordKindError);
    EXPECT_THROW(read_as<SemanticDirection>(dir / "d.ltc"), RecordKindError);
    EXPECT_NO_THROW(read_as<LatentDataset>(dir / "d.ltc"));
}

TEST(Container, MissingFileAndUnwritablePath) {
    TempDir dir("io");
    EXPECT_THROW(read_container(dir / "absent.ltc"), IoError);
    EXPECT_THROW(write_container(small_dataset(10), dir / "no" / "such" / "dir.ltc"), IoError);
    spit(dir / "empty.ltc", {});
    EXPECT_THROW(read_container(dir / "empty.ltc"), TruncatedError);
}

TEST(Synthetic, DeterministicPerSeed) {
    SyntheticSpec spec;
    spec.dims = {10, 2, 3, 4, 2};
    spec.noise_sigma = 0.3;
    spec.seed = 11;
    const SyntheticData a = generate_synthetic(spec);
    const SyntheticData b = generate_synthetic(spec);
    EXPECT_EQ(a.dataset, b.dataset);
    spec.seed = 12;
    const SyntheticData c = generate_synthetic(spec);
    EXPECT_NE(a.dataset.latents(), c.dataset.latents());
}

TEST(Synthetic, NoiseDoesNotMovePlantedTerms) {
    SyntheticSpec spec;
    spec.dims = {10, 2, 3, 4, 2};
    spec.seed = 13;
    const SyntheticData clean = generate_synthetic(spec);
    spec.noise_sigma = 0.5;
    const SyntheticData noisy = generate_synthetic(spec);
    EXPECT_TRUE(identical(clean.truth.expression_offsets, noisy.truth.expression_offsets));
    EXPECT_TRUE(identical(clean.truth.rotation_offset, noisy.truth.rotation_offset));
    EXPECT_NE(clean.dataset.latents(), noisy.dataset.latents());
}

TEST(Synthetic, MatchesConstruction) {
    SyntheticSpec spec;
    spec.dims = {7, 3, 4, 3, 2};
    spec.offsets = ExpressionOffsets::raw;
    spec.seed = 14;
    const SyntheticData s = generate_synthetic(spec);
    const GroundTruth& g = s.truth;
    EXPECT_EQ(g.ramp, (std::vector<double>{0.0, 0.5, 1.0}));
    EXPECT_EQ(g.rotation_signs, (std::vector<double>{1.0, -1.0}));
    for (Index p = 0; p < 3; ++p)
        for (Index e = 0; e < 4; ++e)
            for (Index i = 0; i < 3; ++i)
                for (Index r = 0; r < 2; ++r) {
                    const Vector expect = g.base + g.person_offsets.col(p) +
                                          g.ramp[static_cast<std::size_t>(i)] * g.expression_offsets.col(e) +
                                          g.rotation_signs[static_cast<std::size_t>(r)] * g.rotation_offset;
                    EXPECT_LT((s.dataset.cell(p, e, i, r) - expect).norm(), 1e-12);
                }
}

TEST(Synthetic, SinglePersonAndExpressionFibersDifferByRampAndSign) {
    SyntheticSpec spec;
    spec.dims = {9, 1, 1, 4, 2};
    spec.offsets = ExpressionOffsets::raw;
    spec.seed = 15;
    const SyntheticData s = generate_synthetic(spec);
    const Vector w00 = s.dataset.cell(0, 0, 0, 0);
    for (Index i = 0; i < 4; ++i)
        for (Index r = 0; r < 2; ++r) {
            const Vector diff = s.dataset.cell(0, 0, i, r) - w00;
            const Vector expect = s.truth.ramp[static_cast<std::size_t>(i)] * s.truth.expression_offsets.col(0) +
                                  (s.truth.rotation_signs[static_cast<std::size_t>(r)] - 1.0) * s.truth.rotation_offset;
            EXPECT_LT((diff - expect).norm(), 1e-12);
        }
}

TEST(Synthetic, OffsetModes) {
    SyntheticSpec spec;
    spec.dims = {16, 2, 5, 3, 2};
    spec.offsets = ExpressionOffsets::centered;
    EXPECT_LT(generate_synthetic(spec).truth.expression_offsets.rowwise().sum().norm(), 1e-12);
    spec.offsets = ExpressionOffsets::orthogonal;
    const Matrix o = generate_synthetic(spec).truth.expression_offsets;
    EXPECT_LT((o.transpose() * o - 16.0 * Matrix::Identity(5, 5)).norm(), 1e-10);
    spec.dims = {4, 2, 5, 3, 2};
    EXPECT_THROW(generate_synthetic(spec), ShapeError);
}

TEST(Synthetic, RejectsBadSpec) {
    SyntheticSpec spec;
    spec.dims = {4, 0, 1, 1, 1};
    EXPECT_THROW(generate_synthetic(spec), ShapeError);
    spec.dims = {4, 1, 1, 2, 1};
    spec.noise_sigma = -1.0;
    EXPECT_THROW(generate_synthetic(spec), ShapeError);
    spec.noise_sigma = 0.0;
    spec.intensity_ramp = {0.0, 1.0, 2.0};
    EXPECT_THROW(generate_synthetic(spec), ShapeError);
}

TEST(Synthetic, BuLabelsWhenSizesMatch) {
    SyntheticSpec spec;
    spec.dims = {8, 2, 6, 5, 2};
    const LatentDataset d = generate_synthetic(spec).dataset;
    EXPECT_EQ(d.labels().expressions, Bu3dfeLayout::expressions());
    EXPECT_EQ(d.labels().intensities, Bu3dfeLayout::intensities());
    EXPECT_EQ(d.labels().rotations, Bu3dfeLayout::rotations());
    EXPECT_NO_THROW(validate_bu3dfe_layout(d));
}

TEST(Synthetic, NoiselessHosvdIsExact) {
    SyntheticSpec spec;
    spec.dims = {32, 4, 6, 5, 2};
    spec.seed = 16;
    const LatentDataset d = generate_synthetic(spec).dataset;
    const TensorModel m = fit_model(d);
    EXPECT_LT(in_sample_error(m, d), 1e-8);
}

TEST(Bu3dfe, CanonicalLabels) {
    EXPECT_EQ(Bu3dfeLayout::expressions(),
              (std::vector<std::string>{"anger", "disgust", "fear", "happiness", "sadness", "surprise"}));
    EXPECT_EQ(Bu3dfeLayout::intensities(), (std::vector<std::string>{"0", "1", "2", "3", "4"}));
    EXPECT_EQ(Bu3dfeLayout::rotations(), (std::vector<std::string>{"left", "right"}));
}

TEST(Bu3dfe, FullSizeContainerAccepted) {
    TempDir dir("bu");
    AxisLabels labels = AxisLabels::numbered(100, 6, 5, 2);
    labels.expressions = Bu3dfeLayout::expressions();
    labels.intensities = Bu3dfeLayout::intensities();
    labels.rotations = Bu3dfeLayout::rotations();
    {
        const LatentDataset d(DenseTensor::zeros({9216, 100, 6, 5, 2}), labels, StyleLayout::for_dim(9216));
        write_container(d, dir / "bu.ltc");
    }
    const LatentDataset back = load_bu3dfe_layout(dir / "bu.ltc");
    EXPECT_EQ(back.layout(), (StyleLayout{18, 512}));
    EXPECT_EQ(back.count(Axis::person), 100);
}

TEST(Bu3dfe, RejectsThreeViews) {
    TempDir dir("bu");
    AxisLabels labels = AxisLabels::numbered(2, 6, 5, 3);
    labels.expressions = Bu3dfeLayout::expressions();
    labels.intensities = Bu3dfeLayout::intensities();
    write_container(LatentDataset(DenseTensor::zeros({4, 2, 6, 5, 3}), labels, StyleLayout::for_dim(4)),
                    dir / "r3.ltc");
    EXPECT_THROW(load_bu3dfe_layout(dir / "r3.ltc"), LayoutError);
    EXPECT_THROW(load_bu3dfe_layout(dir / "r3.ltc", LayoutOptions{true}), LayoutError);
}

TEST(Bu3dfe, PermutedExpressionsNamed) {
    AxisLabels labels = AxisLabels::numbered(2, 6, 5, 2);
    labels.expressions = Bu3dfeLayout::expressions();
    std::swap(labels.expressions[1], labels.expressions[2]);
    labels.intensities = Bu3dfeLayout::intensities();
    labels.rotations = Bu3dfeLayout::rotations();
    const LatentDataset d(DenseTensor::zeros({4, 2, 6, 5, 2}), labels, StyleLayout::for_dim(4));
    try {
        validate_bu3dfe_layout(d);
        FAIL() << "accepted permuted labels";
    } catch (const LayoutError& e) {
        EXPECT_NE(std::string(e.what()).find("fear"), std::string::npos) << e.what();
    }
    EXPECT_NO_THROW(validate_bu3dfe_layout(d, LayoutOptions{true}));
}

TEST(Bu3dfe, AlternativeGridNeedsOverride) {
    AxisLabels labels = AxisLabels::numbered(2, 25, 1, 2);
    labels.rotations = Bu3dfeLayout::rotations();
    const LatentDataset d(DenseTensor::zeros({4, 2, 25, 1, 2}), labels, StyleLayout::for_dim(4));
    EXPECT_THROW(validate_bu3dfe_layout(d), LayoutError);
    EXPECT_NO_THROW(validate_bu3dfe_layout(d, LayoutOptions{true}));
}

TEST(Dataset, Invariants) {
    EXPECT_THROW(LatentDataset(DenseTensor::zeros({4, 2, 1, 1, 1}), AxisLabels::numbered(3, 1, 1, 1),
                               StyleLayout::for_dim(4)),
                 ShapeError);
    EXPECT_THROW(LatentDataset(DenseTensor::zeros({4, 1, 1, 1, 1}), AxisLabels::numbered(1, 1, 1, 1),
                               StyleLayout{3, 2}),
                 ShapeError);
    EXPECT_THROW(LatentDataset(DenseTensor({1, 1, 1, 1, 1}, {std::nan("")}), AxisLabels::numbered(1, 1, 1, 1),
                               StyleLayout::for_dim(1)),
                 NumericError);
    EXPECT_THROW(LatentDataset(DenseTensor::zeros({4, 1, 1, 1}), AxisLabels::numbered(1, 1, 1, 1),
                               StyleLayout::for_dim(4)),
                 ShapeError);
}

TEST(Dataset, WithoutPerson) {
    const LatentDataset d = small_dataset(17);
    const LatentDataset rest = d.without_person(1);
    EXPECT_EQ(rest.count(Axis::person), 2);
    EXPECT_EQ(rest.labels().persons, (std::vector<std::string>{d.labels().persons[0], d.labels().persons[2]}));
    EXPECT_TRUE(identical(rest.cell(1, 1, 2, 1), d.cell(2, 1, 2, 1)));
    EXPECT_THROW(d.without_person(3), ShapeError);
}
