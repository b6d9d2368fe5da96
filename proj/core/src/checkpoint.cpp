#include "stf/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <zlib.h>

namespace stf {

using nlohmann::json;

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

std::uint32_t crc32_of(const void* bytes, std::size_t length) {
  uLong crc = crc32(0L, Z_NULL, 0);
  const auto* p = static_cast<const Bytef*>(bytes);
  while (length > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(length, 1u << 30));
    crc = crc32(crc, p, chunk);
    p += chunk;
    length -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

namespace {

std::vector<unsigned char> to_le_bytes(const std::vector<float>& values) {
  std::vector<unsigned char> out(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b) out[i * 4 + static_cast<std::size_t>(b)] = static_cast<unsigned char>(bits >> (8 * b));
  }
  return out;
}

std::vector<float> from_le_bytes(const unsigned char* p, std::size_t count) {
  std::vector<float> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(p[i * 4 + static_cast<std::size_t>(b)]) << (8 * b);
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

std::filesystem::path blob_path_for(const std::filesystem::path& manifest_path) {
  auto p = manifest_path;
  p.replace_extension(".bin");
  return p;
}

}  // namespace

Checkpoint capture_checkpoint(const ParameterSet& params, json config) {
  Checkpoint c;
  c.config = std::move(config);
  std::uint64_t offset = 0;
  for (const auto& e : params.entries()) {
    StoredTensor t;
    t.name = e.name;
    t.shape = e.tensor.shape();
    t.data.assign(e.tensor.data().begin(), e.tensor.data().end());
    t.offset = offset;
    t.byte_length = t.data.size() * 4;
    const auto bytes = to_le_bytes(t.data);
    t.crc32 = crc32_of(bytes.data(), bytes.size());
    offset += t.byte_length;
    c.tensors.push_back(std::move(t));
  }
  return c;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& manifest_path) {
  std::vector<unsigned char> blob;
  json index = json::array();
  for (const auto& t : checkpoint.tensors) {
    const auto bytes = to_le_bytes(t.data);
    const std::uint64_t offset = blob.size();
    blob.insert(blob.end(), bytes.begin(), bytes.end());
    index.push_back({{"name", t.name},
                     {"shape", t.shape},
                     {"offset", offset},
                     {"byte_length", bytes.size()},
                     {"crc32", crc32_of(bytes.data(), bytes.size())}});
  }
  const auto blob_path = blob_path_for(manifest_path);
  json manifest = {{"format", kCheckpointFormat},
                   {"version", kCheckpointVersion},
                   {"config", checkpoint.config},
                   {"tensors", index},
                   {"blob", blob_path.filename().string()},
                   {"blob_bytes", blob.size()},
                   {"blob_crc32", crc32_of(blob.data(), blob.size())}};
  if (manifest_path.has_parent_path()) std::filesystem::create_directories(manifest_path.parent_path());
  {
    std::ofstream out(blob_path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write " + blob_path.string());
    out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
  }
  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) throw CheckpointError("cannot write " + manifest_path.string());
  out << manifest.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw CheckpointError("cannot open checkpoint manifest " + manifest_path.string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw CheckpointError("malformed checkpoint manifest: " + std::string(e.what()));
  }
  try {
    if (manifest.at("format") != kCheckpointFormat) throw CheckpointError("not a checkpoint manifest");
    if (manifest.at("version").get<int>() != kCheckpointVersion) {
      throw CheckpointError("unsupported checkpoint version " + manifest.at("version").dump());
    }
    const auto blob_path = manifest_path.parent_path() / manifest.at("blob").get<std::string>();
    std::ifstream bin(blob_path, std::ios::binary);
    if (!bin) throw CheckpointError("cannot open checkpoint blob " + blob_path.string());
    std::vector<unsigned char> blob((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
    if (blob.size() != manifest.at("blob_bytes").get<std::uint64_t>()) {
      throw CheckpointError("checkpoint blob size mismatch");
    }
    if (crc32_of(blob.data(), blob.size()) != manifest.at("blob_crc32").get<std::uint32_t>()) {
      throw CheckpointError("checkpoint blob checksum mismatch");
    }
    Checkpoint c;
    c.config = manifest.at("config");
    for (const auto& entry : manifest.at("tensors")) {
      StoredTensor t;
      t.name = entry.at("name").get<std::string>();
      t.shape = entry.at("shape").get<Shape>();
      t.offset = entry.at("offset").get<std::uint64_t>();
      t.byte_length = entry.at("byte_length").get<std::uint64_t>();
      t.crc32 = entry.at("crc32").get<std::uint32_t>();
      if (t.byte_length != numel(t.shape) * 4 || t.offset + t.byte_length > blob.size()) {
        throw CheckpointError("tensor '" + t.name + "' has an inconsistent index entry");
      }
      const unsigned char* p = blob.data() + t.offset;
      if (crc32_of(p, t.byte_length) != t.crc32) {
        throw CheckpointError("tensor '" + t.name + "' checksum mismatch");
      }
      t.data = from_le_bytes(p, numel(t.shape));
      c.tensors.push_back(std::move(t));
    }
    return c;
  } catch (const json::exception& e) {
    throw CheckpointError("malformed checkpoint manifest: " + std::string(e.what()));
  }
}

void restore_checkpoint(const Checkpoint& checkpoint, ParameterSet& params) {
  auto& entries = params.entries();
  if (entries.size() != checkpoint.tensors.size()) {
    throw CheckpointError("checkpoint holds " + std::to_string(checkpoint.tensors.size()) +
                          " tensors, model expects " + std::to_string(entries.size()));
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& stored = checkpoint.tensors[i];
    if (stored.name != entries[i].name) {
      throw CheckpointError("checkpoint tensor '" + stored.name + "' where '" + entries[i].name + "' expected");
    }
    require_same_shape(stored.shape, entries[i].tensor.shape(), stored.name.c_str());
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto dst = entries[i].tensor.mutable_data();
    std::copy(checkpoint.tensors[i].data.begin(), checkpoint.tensors[i].data.end(), dst.begin());
  }
}

}  // namespace stf
