#pragma once

// Corpus persistence: <stem>.json carries the record count, sample rate and
// per-record metadata; <stem>.bin holds the samples as little-endian
// float32, records concatenated in metadata order.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lsmgan/dsp.hpp"
#include "lsmgan/ppgsim.hpp"

namespace lsmgan::corpus {

void save_raw(const std::filesystem::path& stem,
              const std::vector<ppgsim::LabeledSignal>& signals);
std::vector<ppgsim::LabeledSignal> load_raw(const std::filesystem::path& stem);

void save_records(const std::filesystem::path& stem, const std::vector<dsp::Record>& records);
std::vector<dsp::Record> load_records(const std::filesystem::path& stem);

/// Content hash of a record's samples after float32 rounding, so records
/// compare equal before and after a save/load round trip.
std::uint64_t fingerprint(const dsp::Record& record);

/// Order-sensitive hash over fingerprints, labels, origins and artifact
/// fractions; used for test-corpus identity checks.
std::uint64_t corpus_hash(const std::vector<dsp::Record>& records);

/// FNV-1a over a byte file.
std::uint64_t file_hash(const std::filesystem::path& path);

}  // namespace lsmgan::corpus
