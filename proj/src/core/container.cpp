#include "core/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "core/errors.hpp"

namespace velinv {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

namespace {

void put_u32(unsigned char* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}
void put_u64(unsigned char* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}
std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}
std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::uint32_t crc_of(const void* data, std::size_t bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  const auto* p = static_cast<const Bytef*>(data);
  // zlib takes uInt lengths; feed in chunks.
  while (bytes > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(bytes, 1u << 30));
    crc = crc32(crc, p, chunk);
    p += chunk;
    bytes -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

// Write-then-rename so a crash never leaves a half-written file under the final name.
void atomic_write(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw DataError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

json grid_to_json(const GridSpec& g) { return {{"nx", g.nx}, {"ny", g.ny}, {"dx", g.dx}, {"dy", g.dy}}; }

GridSpec grid_from_json(const json& j) {
  GridSpec g;
  g.nx = j.at("nx").get<int>();
  g.ny = j.at("ny").get<int>();
  g.dx = j.at("dx").get<double>();
  g.dy = j.at("dy").get<double>();
  return g;
}

}  // namespace

std::array<char, 8> payload_magic(PayloadKind kind) {
  switch (kind) {
    case PayloadKind::VelocityModel: return {'V', 'L', 'N', 'V', 'S', 'V', 'M', '\x1a'};
    case PayloadKind::SeismicRecord: return {'V', 'L', 'N', 'V', 'S', 'G', 'R', '\x1a'};
    case PayloadKind::Tensor: return {'V', 'L', 'N', 'V', 'T', 'N', 'S', '\x1a'};
    case PayloadKind::Weights: return {'V', 'L', 'N', 'V', 'W', 'G', 'T', '\x1a'};
    case PayloadKind::Snapshots: return {'V', 'L', 'N', 'V', 'S', 'N', 'P', '\x1a'};
  }
  return {};
}

std::string payload_extension(PayloadKind kind) {
  switch (kind) {
    case PayloadKind::VelocityModel: return ".svm";
    case PayloadKind::SeismicRecord: return ".sgr";
    case PayloadKind::Tensor: return ".tns";
    case PayloadKind::Weights: return ".wts";
    case PayloadKind::Snapshots: return ".snp";
  }
  return {};
}

fs::path sidecar_path(const fs::path& binary) {
  fs::path p = binary;
  p += ".json";
  return p;
}

void write_payload(const fs::path& path, PayloadKind kind, std::span<const float> values) {
  const std::size_t payload_bytes = values.size() * sizeof(float);
  std::string buf(kContainerHeaderBytes + payload_bytes, '\0');
  auto* p = reinterpret_cast<unsigned char*>(buf.data());
  const auto magic = payload_magic(kind);
  std::memcpy(p, magic.data(), magic.size());
  p[8] = kContainerVersion;
  put_u64(p + 12, payload_bytes);
  if (payload_bytes > 0) std::memcpy(p + kContainerHeaderBytes, values.data(), payload_bytes);
  put_u32(p + 20, crc_of(p + kContainerHeaderBytes, payload_bytes));
  atomic_write(path, buf);
}

std::vector<float> read_payload(const fs::path& path, PayloadKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data());

  const auto magic = payload_magic(kind);
  if (buf.size() < magic.size()) throw TruncatedError(path.string() + ": truncated before magic");
  if (std::memcmp(p, magic.data(), magic.size()) != 0) {
    throw FormatError(path.string() + ": wrong magic bytes for " + payload_extension(kind) + " container");
  }
  if (buf.size() < kContainerHeaderBytes) throw TruncatedError(path.string() + ": truncated header");
  if (p[8] != kContainerVersion) {
    throw VersionError(path.string() + ": container version " + std::to_string(p[8]) + ", expected " +
                       std::to_string(kContainerVersion));
  }
  const std::uint64_t payload_bytes = get_u64(p + 12);
  if (payload_bytes % sizeof(float) != 0) throw FormatError(path.string() + ": payload not a float array");
  if (buf.size() - kContainerHeaderBytes < payload_bytes) {
    std::ostringstream os;
    os << path.string() << ": truncated payload (" << buf.size() - kContainerHeaderBytes << " of "
       << payload_bytes << " bytes)";
    throw TruncatedError(os.str());
  }
  if (crc_of(p + kContainerHeaderBytes, payload_bytes) != get_u32(p + 20)) {
    throw ChecksumError(path.string() + ": payload CRC32 mismatch");
  }
  std::vector<float> values(payload_bytes / sizeof(float));
  if (payload_bytes > 0) std::memcpy(values.data(), p + kContainerHeaderBytes, payload_bytes);
  return values;
}

void write_json(const fs::path& path, const json& j) { atomic_write(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed JSON: " + e.what());
  }
}

void save_array(const fs::path& path, PayloadKind kind, const std::vector<std::size_t>& shape,
                std::span<const float> values, const json& meta) {
  if (shape_product(shape) != values.size()) throw DataError("array shape does not match value count");
  json side = meta.is_object() ? meta : json::object();
  side["format"] = payload_extension(kind).substr(1);
  side["version"] = kContainerVersion;
  side["dtype"] = "float32-le";
  side["layout"] = "row-major";
  side["shape"] = shape;
  write_payload(path, kind, values);
  write_json(sidecar_path(path), side);
}

std::vector<float> load_array(const fs::path& path, PayloadKind kind, std::vector<std::size_t>* shape,
                              json* meta) {
  auto values = read_payload(path, kind);
  json side = read_json(sidecar_path(path));
  try {
    auto s = side.at("shape").get<std::vector<std::size_t>>();
    if (shape_product(s) != values.size()) {
      throw DataError(path.string() + ": sidecar shape disagrees with payload size");
    }
    if (shape) *shape = std::move(s);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": bad sidecar: " + e.what());
  }
  if (meta) *meta = std::move(side);
  return values;
}

void save_model(const fs::path& path, const VelocityModel& vm, const NormalizationSpec& norm) {
  json meta = {{"grid", grid_to_json(vm.grid)},
               {"normalization", {{"vmin", norm.vmin}, {"vmax", norm.vmax}}},
               {"units", "m/s"}};
  save_array(path, PayloadKind::VelocityModel, {vm.cp.rows(), vm.cp.cols()}, vm.cp.values(), meta);
}

VelocityModel load_model(const fs::path& path, NormalizationSpec* norm) {
  std::vector<std::size_t> shape;
  json meta;
  auto values = load_array(path, PayloadKind::VelocityModel, &shape, &meta);
  try {
    if (shape.size() != 2) throw DataError(path.string() + ": velocity model must be 2D");
    VelocityModel vm;
    vm.grid = grid_from_json(meta.at("grid"));
    if (shape[0] != static_cast<std::size_t>(vm.grid.ny) || shape[1] != static_cast<std::size_t>(vm.grid.nx)) {
      throw DataError(path.string() + ": shape disagrees with grid");
    }
    vm.cp = Array2f(shape[0], shape[1], std::move(values));
    if (norm && meta.contains("normalization")) {
      norm->vmin = meta["normalization"].at("vmin").get<double>();
      norm->vmax = meta["normalization"].at("vmax").get<double>();
    }
    return vm;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": bad sidecar: " + e.what());
  }
}

void save_record(const fs::path& path, const SeismicRecord& rec) {
  rec.validate();
  const auto& first = rec.shots.front();
  const std::size_t nr = first.data.rows(), ns = first.data.cols();
  std::vector<float> flat;
  flat.reserve(rec.shots.size() * nr * ns);
  json indices = json::array(), columns = json::array();
  for (const auto& s : rec.shots) {
    flat.insert(flat.end(), s.data.values().begin(), s.data.values().end());
    indices.push_back(s.emitter_index);
    columns.push_back(s.emitter_column);
  }
  json meta = {{"model_id", rec.model_id},
               {"dt_record", first.dt_record},
               {"emitter_indices", indices},
               {"emitter_columns", columns},
               {"axes", {"shot", "receiver", "sample"}},
               {"quantity", "vertical velocity, m/s"}};
  save_array(path, PayloadKind::SeismicRecord, {rec.shots.size(), nr, ns}, flat, meta);
}

SeismicRecord load_record(const fs::path& path) {
  std::vector<std::size_t> shape;
  json meta;
  auto values = load_array(path, PayloadKind::SeismicRecord, &shape, &meta);
  if (shape.size() != 3) throw DataError(path.string() + ": seismic record must be 3D");
  try {
    SeismicRecord rec;
    rec.model_id = meta.at("model_id").get<std::string>();
    const auto indices = meta.at("emitter_indices").get<std::vector<int>>();
    const auto columns = meta.at("emitter_columns").get<std::vector<int>>();
    const double dt = meta.at("dt_record").get<double>();
    if (indices.size() != shape[0] || columns.size() != shape[0]) {
      throw DataError(path.string() + ": emitter list length disagrees with shot count");
    }
    const std::size_t per_shot = shape[1] * shape[2];
    for (std::size_t s = 0; s < shape[0]; ++s) {
      ShotGather g;
      g.emitter_index = indices[s];
      g.emitter_column = columns[s];
      g.dt_record = dt;
      g.data = Array2f(shape[1], shape[2],
                       std::vector<float>(values.begin() + static_cast<std::ptrdiff_t>(s * per_shot),
                                          values.begin() + static_cast<std::ptrdiff_t>((s + 1) * per_shot)));
      rec.shots.push_back(std::move(g));
    }
    rec.validate();
    return rec;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": bad sidecar: " + e.what());
  }
}

void save_sample(const fs::path& dir, const std::string& id, const Sample& s, const NormalizationSpec& norm) {
  save_model(dir / (id + ".svm"), s.model, norm);
  save_record(dir / (id + ".sgr"), s.record);
}

Sample load_sample(const fs::path& dir, const std::string& id) {
  Sample s{load_model(dir / (id + ".svm")), load_record(dir / (id + ".sgr"))};
  if (s.record.shots.front().n_receivers() != s.model.grid.nx) {
    throw DataError("sample " + id + ": receiver count does not match model width");
  }
  return s;
}

}  // namespace velinv
