#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lsmgan/ad/graph.hpp"

namespace lsmgan::ad {

template <class Real>
struct NamedParam {
  std::string name;
  Var<Real> var;
};

/// Writes <stem>.json (names, shapes, offsets) and <stem>.bin (concatenated
/// little-endian float32 values in the same order).
template <class Real>
void save_checkpoint(const std::filesystem::path& stem, const std::vector<NamedParam<Real>>& params,
                     const std::string& kind = "");

/// Loads values into existing parameters, matching by name and shape.
/// Throws IoError on missing files and ShapeMismatch on layout differences.
template <class Real>
void load_checkpoint(const std::filesystem::path& stem, const std::vector<NamedParam<Real>>& params);

void write_f32le(std::ostream& out, float value);
float read_f32le(std::istream& in);

}  // namespace lsmgan::ad
