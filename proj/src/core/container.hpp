#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/model.hpp"

namespace velinv {

// Binary layout (little-endian):
//   [0, 8)   magic, one per payload kind
//   [8]      format version
//   [9, 12)  reserved, zero
//   [12, 20) payload byte count, u64
//   [20, 24) CRC32 of payload, u32
//   [24, ..) float32 payload, row-major
// Shapes and metadata live in "<file>.json" next to the binary.

enum class PayloadKind { VelocityModel, SeismicRecord, Tensor, Weights, Snapshots };

inline constexpr std::uint8_t kContainerVersion = 1;
inline constexpr std::size_t kContainerHeaderBytes = 24;

std::array<char, 8> payload_magic(PayloadKind kind);
std::string payload_extension(PayloadKind kind);

std::filesystem::path sidecar_path(const std::filesystem::path& binary);

void write_payload(const std::filesystem::path& path, PayloadKind kind, std::span<const float> values);
std::vector<float> read_payload(const std::filesystem::path& path, PayloadKind kind);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

// Payload + sidecar pairs.
void save_model(const std::filesystem::path& path, const VelocityModel& vm,
                const NormalizationSpec& norm = {});
VelocityModel load_model(const std::filesystem::path& path, NormalizationSpec* norm = nullptr);

void save_record(const std::filesystem::path& path, const SeismicRecord& rec);
SeismicRecord load_record(const std::filesystem::path& path);

/// Generic float array with an explicit shape; extra metadata is merged into the sidecar.
void save_array(const std::filesystem::path& path, PayloadKind kind, const std::vector<std::size_t>& shape,
                std::span<const float> values, const nlohmann::json& meta = nlohmann::json::object());
std::vector<float> load_array(const std::filesystem::path& path, PayloadKind kind,
                              std::vector<std::size_t>* shape = nullptr, nlohmann::json* meta = nullptr);

/// A sample is "<dir>/<id>.svm" plus "<dir>/<id>.sgr".
void save_sample(const std::filesystem::path& dir, const std::string& id, const Sample& s,
                 const NormalizationSpec& norm = {});
Sample load_sample(const std::filesystem::path& dir, const std::string& id);

}  // namespace velinv
