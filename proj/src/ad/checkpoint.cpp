#include "lsmgan/ad/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <json.hpp>

#include "lsmgan/error.hpp"

namespace lsmgan::ad {

void write_f32le(std::ostream& out, float value) {
  const auto bits = std::bit_cast<std::uint32_t>(value);
  const char bytes[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                         static_cast<char>((bits >> 16) & 0xff), static_cast<char>((bits >> 24) & 0xff)};
  out.write(bytes, 4);
}

float read_f32le(std::istream& in) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) throw Error(ErrorCode::IoError, "truncated float32 stream");
  const std::uint32_t bits = static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
                             (static_cast<std::uint32_t>(bytes[2]) << 16) |
                             (static_cast<std::uint32_t>(bytes[3]) << 24);
  return std::bit_cast<float>(bits);
}

namespace {

std::filesystem::path with_ext(const std::filesystem::path& stem, const char* ext) {
  return std::filesystem::path(stem.string() + ext);
}

}  // namespace

template <class Real>
void save_checkpoint(const std::filesystem::path& stem, const std::vector<NamedParam<Real>>& params,
                     const std::string& kind) {
  nlohmann::json meta;
  meta["format"] = "lsmgan-checkpoint-v1";
  meta["dtype"] = "f32le";
  meta["kind"] = kind;
  std::size_t offset = 0;
  std::ofstream bin(with_ext(stem, ".bin"), std::ios::binary);
  if (!bin) throw Error(ErrorCode::IoError, "cannot write " + with_ext(stem, ".bin").string());
  for (const auto& p : params) {
    meta["tensors"].push_back({{"name", p.name}, {"shape", p.var->shape}, {"offset", offset}});
    for (Real v : p.var->value) write_f32le(bin, static_cast<float>(v));
    offset += p.var->size();
  }
  meta["count"] = offset;
  std::ofstream js(with_ext(stem, ".json"));
  if (!js) throw Error(ErrorCode::IoError, "cannot write " + with_ext(stem, ".json").string());
  js << meta.dump(2) << "\n";
}

template <class Real>
void load_checkpoint(const std::filesystem::path& stem, const std::vector<NamedParam<Real>>& params) {
  std::ifstream js(with_ext(stem, ".json"));
  std::ifstream bin(with_ext(stem, ".bin"), std::ios::binary);
  if (!js || !bin) throw Error(ErrorCode::IoError, "missing checkpoint " + stem.string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("bad checkpoint metadata: ") + e.what());
  }
  const auto& tensors = meta.at("tensors");
  if (tensors.size() != params.size())
    throw Error(ErrorCode::ShapeMismatch, "checkpoint tensor count differs from the network");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& t = tensors[i];
    if (t.at("name").get<std::string>() != params[i].name ||
        t.at("shape").get<Shape>() != params[i].var->shape)
      throw Error(ErrorCode::ShapeMismatch, "checkpoint layout differs at " + params[i].name);
    bin.seekg(static_cast<std::streamoff>(t.at("offset").get<std::size_t>() * 4));
    for (Real& v : params[i].var->value) v = static_cast<Real>(read_f32le(bin));
  }
}

template void save_checkpoint<float>(const std::filesystem::path&,
                                     const std::vector<NamedParam<float>>&, const std::string&);
template void save_checkpoint<double>(const std::filesystem::path&,
                                      const std::vector<NamedParam<double>>&, const std::string&);
template void load_checkpoint<float>(const std::filesystem::path&,
                                     const std::vector<NamedParam<float>>&);
template void load_checkpoint<double>(const std::filesystem::path&,
                                      const std::vector<NamedParam<double>>&);

}  // namespace lsmgan::ad
