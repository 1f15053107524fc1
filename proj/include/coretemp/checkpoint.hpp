#pragma once

#include <string>

#include "coretemp/datagen.hpp"
#include "coretemp/net.hpp"

namespace coretemp {

/// A trained estimator plus everything needed to feed it: the normalization
/// stats it was trained with and its window length.
struct Model {
  NetParams net;
  NormStats norm;
  std::size_t window = 300;
};

inline constexpr int kCheckpointVersion = 1;

/// Text container (magic line, version, shapes, freeze mask, stats and their
/// hash, then weights in hexfloat). Byte-identical for identical models.
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);
std::string checkpoint_text(const Model& model);

}  // namespace coretemp
