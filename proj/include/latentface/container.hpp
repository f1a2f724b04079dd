#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include "latentface/dataset.hpp"
#include "latentface/directions.hpp"
#include "latentface/model.hpp"

namespace latentface {

/// LTC1 container. Layout (all integers little-endian):
///
///   "LTC1" | u8 version | u8 kind | u16 reserved
///   u32 n_meta  | n_meta x i64
///   u32 n_label | n_label x (u32 length, UTF-8 bytes)
///   u32 n_array | n_array x (u8 order, order x u32 size)
///   payload: every array as f32, first mode fastest
///   u64 FNV-1a of every preceding byte
///
/// See docs/format.md for the per-kind meaning of meta, labels and arrays.
inline constexpr std::uint8_t kContainerVersion = 1;

enum class RecordKind : std::uint8_t { dataset = 1, model = 2, direction = 3, latents = 4 };

const char* record_kind_name(RecordKind k) noexcept;

using Record = std::variant<LatentDataset, TensorModel, SemanticDirection, LatentBatch>;

RecordKind kind_of(const Record& r) noexcept;

std::vector<std::byte> encode(const Record& r);
/// Throws BadMagicError, VersionError, TruncatedError, ChecksumError,
/// NonFiniteError, RecordKindError or FormatError.
Record decode(std::span<const std::byte> bytes);

/// Output bytes depend only on the record, never on time or environment.
void write_container(const Record& r, const std::filesystem::path& path);
Record read_container(const std::filesystem::path& path);

/// Reads a container and requires a specific payload kind.
template <class T>
T read_as(const std::filesystem::path& path);

extern template LatentDataset read_as<LatentDataset>(const std::filesystem::path&);
extern template TensorModel read_as<TensorModel>(const std::filesystem::path&);
extern template SemanticDirection read_as<SemanticDirection>(const std::filesystem::path&);
extern template LatentBatch read_as<LatentBatch>(const std::filesystem::path&);

/// Reads a dataset container and checks it against the BU-3DFE grid.
LatentDataset load_bu3dfe_layout(const std::filesystem::path& path, const LayoutOptions& options = {});

}  // namespace latentface
