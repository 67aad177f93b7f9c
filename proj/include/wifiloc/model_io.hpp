#pragma once
// Versioned model container: an 8-byte magic prefix followed by a
// MessagePack-encoded document (doubles stored as raw IEEE bits, so a
// save/load round trip predicts bit-identically).

#include <memory>
#include <string>

#include "wifiloc/models.hpp"

namespace wifiloc {

struct VersionMismatch : std::runtime_error {
  explicit VersionMismatch(const std::string& got)
      : std::runtime_error("unsupported model container version '" + got + "'") {}
};
struct CorruptFile : std::runtime_error {
  explicit CorruptFile(const std::string& what)
      : std::runtime_error("corrupt model file: " + what) {}
};

struct ModelMeta {
  std::string vocabulary_fingerprint;
};

void save_model(const Regressor2D& model, const std::string& path,
                const ModelMeta& meta = {});

struct LoadedModel {
  std::shared_ptr<Regressor2D> model;
  ModelMeta meta;
};

LoadedModel load_model(const std::string& path);

}  // namespace wifiloc
