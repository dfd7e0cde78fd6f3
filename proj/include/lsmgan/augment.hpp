#pragma once

// Baseline augmentations and the facade the experiments use to grow a
// corpus to per-class target counts.

#include <cstdint>
#include <map>
#include <vector>

#include "lsmgan/dsp.hpp"
#include "lsmgan/nn.hpp"
#include "lsmgan/types.hpp"

namespace lsmgan::augment {

using dsp::Record;

inline constexpr std::size_t kPermutationSegments = 5;

/// Appends n_extra exact copies of uniformly drawn records (with replacement).
std::vector<Record> data_copying(const std::vector<Record>& records, std::size_t n_extra,
                                 std::uint64_t seed);

/// Rearranges the five equal sub-segments of a record in a seeded order.
Record permutation(const Record& record, std::uint64_t seed);

struct ClassTargets {
  std::size_t af = 0;
  std::size_t nonaf = 0;

  std::size_t for_class(RhythmClass c) const { return c == RhythmClass::AF ? af : nonaf; }
};

/// Trained generators per class for the GAN methods.
using GeneratorSet = std::map<RhythmClass, const nn::Generator<float>*>;

/// Grows each class to its target with the given method. Added records are
/// tagged with the method as their origin; originals keep their order and
/// come first. Original returns the corpus unchanged for targets at or below
/// the current counts and raises InvalidConfig for anything larger.
/// Throws TargetBelowCurrent and, for GAN methods, MissingGenerator.
std::vector<Record> augment_corpus(const std::vector<Record>& corpus, AugmentMethod method,
                                   const ClassTargets& targets, const GeneratorSet& generators,
                                   std::uint64_t seed);

std::size_t count_class(const std::vector<Record>& corpus, RhythmClass c);

}  // namespace lsmgan::augment
