#include "lsmgan/corpus_io.hpp"

#include <bit>
#include <fstream>

#include <json.hpp>

#include "lsmgan/ad/checkpoint.hpp"
#include "lsmgan/error.hpp"

namespace lsmgan::corpus {

namespace {

constexpr const char* kFormat = "lsmgan-corpus-v1";

std::filesystem::path with_ext(const std::filesystem::path& stem, const char* ext) {
  return std::filesystem::path(stem.string() + ext);
}

void write_meta(const std::filesystem::path& stem, const nlohmann::ordered_json& meta) {
  std::ofstream js(with_ext(stem, ".json"));
  if (!js) throw Error(ErrorCode::IoError, "cannot write " + with_ext(stem, ".json").string());
  js << meta.dump(1) << '\n';
  if (!js) throw Error(ErrorCode::IoError, "write failed: " + with_ext(stem, ".json").string());
}

nlohmann::json read_meta(const std::filesystem::path& stem, const char* kind) {
  std::ifstream js(with_ext(stem, ".json"));
  if (!js) throw Error(ErrorCode::IoError, "cannot read " + with_ext(stem, ".json").string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, with_ext(stem, ".json").string() + ": " + e.what());
  }
  if (meta.value("format", "") != kFormat || meta.value("kind", "") != kind)
    throw Error(ErrorCode::IoError,
                with_ext(stem, ".json").string() + " is not a " + kind + " corpus");
  return meta;
}

template <class Fn>
void write_samples(const std::filesystem::path& stem, std::size_t count, Fn samples_of) {
  std::ofstream bin(with_ext(stem, ".bin"), std::ios::binary);
  if (!bin) throw Error(ErrorCode::IoError, "cannot write " + with_ext(stem, ".bin").string());
  for (std::size_t i = 0; i < count; ++i)
    for (double v : samples_of(i)) ad::write_f32le(bin, static_cast<float>(v));
  if (!bin) throw Error(ErrorCode::IoError, "write failed: " + with_ext(stem, ".bin").string());
}

std::vector<double> read_block(std::istream& in, std::size_t n) {
  std::vector<double> out(n);
  for (auto& v : out) v = ad::read_f32le(in);
  return out;
}

std::ifstream open_bin(const std::filesystem::path& stem) {
  std::ifstream bin(with_ext(stem, ".bin"), std::ios::binary);
  if (!bin) throw Error(ErrorCode::IoError, "cannot read " + with_ext(stem, ".bin").string());
  return bin;
}

}  // namespace

void save_raw(const std::filesystem::path& stem,
              const std::vector<ppgsim::LabeledSignal>& signals) {
  nlohmann::ordered_json meta;
  meta["format"] = kFormat;
  meta["kind"] = "raw";
  meta["record_count"] = signals.size();
  meta["sample_rate_hz"] = signals.empty() ? 0.0 : signals.front().signal.sample_rate_hz;
  meta["records"] = nlohmann::ordered_json::array();
  for (const auto& s : signals)
    meta["records"].push_back(
        {{"label", to_string(s.label)}, {"seed", s.seed}, {"samples", s.signal.samples.size()}});
  write_samples(stem, signals.size(), [&](std::size_t i) { return signals[i].signal.samples; });
  write_meta(stem, meta);
}

std::vector<ppgsim::LabeledSignal> load_raw(const std::filesystem::path& stem) {
  const auto meta = read_meta(stem, "raw");
  auto bin = open_bin(stem);
  const double rate = meta.at("sample_rate_hz").get<double>();
  std::vector<ppgsim::LabeledSignal> out;
  for (const auto& r : meta.at("records")) {
    ppgsim::LabeledSignal s;
    s.label = parse_rhythm_class(r.at("label").get<std::string>());
    s.seed = r.at("seed").get<std::uint64_t>();
    s.signal.sample_rate_hz = rate;
    s.signal.samples = read_block(bin, r.at("samples").get<std::size_t>());
    out.push_back(std::move(s));
  }
  if (out.size() != meta.at("record_count").get<std::size_t>())
    throw Error(ErrorCode::IoError, "record_count disagrees with the record list");
  return out;
}

void save_records(const std::filesystem::path& stem, const std::vector<dsp::Record>& records) {
  nlohmann::ordered_json meta;
  meta["format"] = kFormat;
  meta["kind"] = "records";
  meta["record_count"] = records.size();
  meta["sample_rate_hz"] = dsp::kRecordRateHz;
  meta["samples_per_record"] = dsp::kRecordLength;
  meta["records"] = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    if (r.samples.size() != dsp::kRecordLength)
      throw Error(ErrorCode::ShapeMismatch, "records must have 1200 samples");
    meta["records"].push_back({{"label", to_string(r.label)},
                               {"artifact_fraction", r.artifact_fraction},
                               {"origin", to_string(r.origin)}});
  }
  write_samples(stem, records.size(), [&](std::size_t i) { return records[i].samples; });
  write_meta(stem, meta);
}

std::vector<dsp::Record> load_records(const std::filesystem::path& stem) {
  const auto meta = read_meta(stem, "records");
  auto bin = open_bin(stem);
  const std::size_t n = meta.at("samples_per_record").get<std::size_t>();
  std::vector<dsp::Record> out;
  for (const auto& r : meta.at("records")) {
    dsp::Record rec;
    rec.label = parse_rhythm_class(r.at("label").get<std::string>());
    rec.artifact_fraction = r.at("artifact_fraction").get<double>();
    rec.origin = parse_augment_method(r.at("origin").get<std::string>());
    rec.samples = read_block(bin, n);
    out.push_back(std::move(rec));
  }
  if (out.size() != meta.at("record_count").get<std::size_t>())
    throw Error(ErrorCode::IoError, "record_count disagrees with the record list");
  return out;
}

std::uint64_t fingerprint(const dsp::Record& record) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : record.samples) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int b = 0; b < 4; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::uint64_t corpus_hash(const std::vector<dsp::Record>& records) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& r : records) {
    mix(fingerprint(r));
    mix(static_cast<std::uint64_t>(r.label));
    mix(static_cast<std::uint64_t>(r.origin));
    mix(std::bit_cast<std::uint64_t>(r.artifact_fraction));
  }
  return h;
}

std::uint64_t file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace lsmgan::corpus
