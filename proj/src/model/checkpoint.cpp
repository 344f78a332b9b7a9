// SPDX-License-Identifier: Apache-2.0
#include "chemrl/model/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "chemrl/common/io.hpp"
#include "json.hpp"

namespace chemrl::model {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T get(std::string_view in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw CheckpointError("TruncatedFile", "unexpected end of file");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  const auto& s = ckpt.params.shape;
  nlohmann::json header;
  header["vocabulary"] = ckpt.vocab.tokens();
  header["hyperparameters"] = {{"vocab_size", s.vocab_size}, {"embedding", s.embedding},
                               {"hidden", s.hidden},         {"layers", s.layers},
                               {"critic", s.critic}};
  header["meta"] = ckpt.meta;
  auto manifest = nlohmann::json::array();
  ckpt.params.for_each([&](const std::string& name, const Matrix& m) {
    manifest.push_back({{"name", name}, {"shape", {m.rows(), m.cols()}}});
  });
  header["tensors"] = manifest;
  const std::string text = header.dump();
  std::string out = "ACGF";
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, text.size());
  out += text;
  ckpt.params.for_each([&](const std::string&, const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) put<double>(out, m(r, c));
  });
  return out;
}

Checkpoint decode_checkpoint(std::string_view in) {
  if (in.size() < 4 || in.substr(0, 4) != "ACGF") throw CheckpointError("BadMagic", "not a checkpoint file");
  std::size_t pos = 4;
  const auto version = get<std::uint32_t>(in, pos);
  if (version != kCheckpointVersion)
    throw CheckpointError("VersionUnsupported", "version " + std::to_string(version));
  const auto hlen = get<std::uint64_t>(in, pos);
  if (pos + hlen > in.size()) throw CheckpointError("TruncatedFile", "header extends past end of file");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(in.substr(pos, hlen));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("ManifestShapeMismatch", std::string("bad header: ") + e.what());
  }
  pos += hlen;

  Checkpoint ckpt;
  try {
    ckpt.vocab = lang::Vocabulary(header.at("vocabulary").get<std::vector<std::string>>());
    const auto& hp = header.at("hyperparameters");
    ModelShape shape;
    shape.vocab_size = hp.at("vocab_size").get<int>();
    shape.embedding = hp.at("embedding").get<int>();
    shape.hidden = hp.at("hidden").get<int>();
    shape.layers = hp.at("layers").get<int>();
    shape.critic = hp.at("critic").get<bool>();
    if (shape.vocab_size != static_cast<int>(ckpt.vocab.size()))
      throw CheckpointError("ManifestShapeMismatch", "vocab_size disagrees with vocabulary");
    ckpt.meta = header.value("meta", std::map<std::string, std::string>{});
    ckpt.params = PolicyParams(zeros(shape));
    const auto& manifest = header.at("tensors");
    // Manifest must agree with the shapes implied by the hyperparameters.
    std::size_t i = 0;
    std::size_t expected_values = 0;
    ckpt.params.for_each([&](const std::string& name, Matrix& m) {
      if (i >= manifest.size()) throw CheckpointError("ManifestShapeMismatch", "missing tensor " + name);
      const auto& e = manifest[i++];
      const auto shp = e.at("shape").get<std::vector<long>>();
      if (e.at("name").get<std::string>() != name || shp.size() != 2 || shp[0] != m.rows() || shp[1] != m.cols())
        throw CheckpointError("ManifestShapeMismatch", "tensor " + name + " does not match hyperparameters");
      expected_values += static_cast<std::size_t>(m.size());
    });
    if (i != manifest.size()) throw CheckpointError("ManifestShapeMismatch", "extra tensors in manifest");
    const std::size_t remaining = in.size() - pos;
    if (remaining < expected_values * sizeof(double))
      throw CheckpointError("TruncatedFile", "manifest declares " + std::to_string(expected_values) +
                                                 " values, file holds " + std::to_string(remaining / sizeof(double)));
    if (remaining > expected_values * sizeof(double))
      throw CheckpointError("ManifestShapeMismatch", "trailing data after tensors");
    ckpt.params.for_each([&](const std::string&, Matrix& m) {
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = get<double>(in, pos);
    });
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("ManifestShapeMismatch", std::string("bad header: ") + e.what());
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_file_atomic(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

}  // namespace chemrl::model
