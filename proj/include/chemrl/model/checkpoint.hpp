// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "chemrl/common/error.hpp"
#include "chemrl/lang/vocabulary.hpp"
#include "chemrl/model/params.hpp"

namespace chemrl::model {

// File layout (all integers little-endian):
//   "ACGF" | u32 version (1) | u64 header length | JSON header | f64 data
// The JSON header holds the vocabulary token list, hyperparameters, free
// form metadata and the tensor manifest (name, [rows, cols]) in data order.
// Tensor values are written row-major.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  PolicyParams params;
  lang::Vocabulary vocab;
  std::map<std::string, std::string> meta;
};

// Error codes: BadMagic, VersionUnsupported, ManifestShapeMismatch, TruncatedFile.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);

// Atomic: writes to a temporary file and renames it into place.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace chemrl::model
