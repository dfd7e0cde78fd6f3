#include "lsmgan/augment.hpp"

#include <algorithm>
#include <array>
#include <iterator>
#include <numeric>
#include <span>

#include "lsmgan/error.hpp"
#include "lsmgan/gan.hpp"
#include "lsmgan/rng.hpp"

namespace lsmgan::augment {

std::vector<Record> data_copying(const std::vector<Record>& records, std::size_t n_extra,
                                 std::uint64_t seed) {
  if (records.empty()) throw Error(ErrorCode::EmptyPool, "data_copying on an empty pool");
  std::vector<Record> out = records;
  out.reserve(records.size() + n_extra);
  Rng rng(seed);
  for (std::size_t i = 0; i < n_extra; ++i) {
    Record copy = records[rng.below(records.size())];
    copy.origin = AugmentMethod::DataCopying;
    out.push_back(std::move(copy));
  }
  return out;
}

Record permutation(const Record& record, std::uint64_t seed) {
  const std::size_t n = record.samples.size();
  if (n == 0 || n % kPermutationSegments != 0)
    throw Error(ErrorCode::IndivisibleLength,
                "length " + std::to_string(n) + " is not divisible by 5");
  const std::size_t seg = n / kPermutationSegments;
  std::array<std::size_t, kPermutationSegments> order{};
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  Record out = record;
  out.origin = AugmentMethod::Permutation;
  for (std::size_t i = 0; i < kPermutationSegments; ++i)
    std::copy_n(record.samples.begin() + order[i] * seg, seg, out.samples.begin() + i * seg);
  return out;
}

std::size_t count_class(const std::vector<Record>& corpus, RhythmClass c) {
  return static_cast<std::size_t>(
      std::count_if(corpus.begin(), corpus.end(), [c](const Record& r) { return r.label == c; }));
}

namespace {

std::vector<Record> grow_class(const std::vector<Record>& pool, RhythmClass label,
                               std::size_t n_extra, AugmentMethod method,
                               const GeneratorSet& generators, std::uint64_t seed) {
  std::vector<Record> added;
  if (n_extra == 0) return added;
  added.reserve(n_extra);
  if (method == AugmentMethod::DataCopying) {
    auto grown = data_copying(pool, n_extra, seed);
    added.assign(grown.begin() + static_cast<std::ptrdiff_t>(pool.size()), grown.end());
    return added;
  }
  if (method == AugmentMethod::Permutation) {
    if (pool.empty()) throw Error(ErrorCode::EmptyPool, "permutation on an empty pool");
    Rng rng(seed);
    for (std::size_t i = 0; i < n_extra; ++i) {
      const Record& src = pool[rng.below(pool.size())];
      added.push_back(permutation(src, rng.next_u64()));
    }
    return added;
  }
  auto it = generators.find(label);
  if (it == generators.end() || it->second == nullptr)
    throw Error(ErrorCode::MissingGenerator, "no " + std::string(to_string(label)) +
                                                 " generator for " +
                                                 std::string(to_string(method)));
  for (auto& signal : gan::sample(*it->second, n_extra, seed)) {
    Record r;
    r.samples = std::move(signal);
    r.label = label;
    r.origin = method;
    added.push_back(std::move(r));
  }
  return added;
}

}  // namespace

std::vector<Record> augment_corpus(const std::vector<Record>& corpus, AugmentMethod method,
                                   const ClassTargets& targets, const GeneratorSet& generators,
                                   std::uint64_t seed) {
  if (method == AugmentMethod::Original) {
    for (RhythmClass c : {RhythmClass::AF, RhythmClass::NonAF})
      if (targets.for_class(c) > count_class(corpus, c))
        throw Error(ErrorCode::InvalidConfig,
                    "Original cannot grow " + std::string(to_string(c)) + " records");
    return corpus;
  }
  std::vector<Record> out = corpus;
  for (RhythmClass c : {RhythmClass::AF, RhythmClass::NonAF}) {
    const std::size_t have = count_class(corpus, c);
    const std::size_t want = targets.for_class(c);
    if (want < have)
      throw Error(ErrorCode::TargetBelowCurrent,
                  std::string(to_string(c)) + " target " + std::to_string(want) + " < current " +
                      std::to_string(have));
    if (want == have) continue;
    std::vector<Record> pool;
    for (const auto& r : corpus)
      if (r.label == c) pool.push_back(r);
    auto added = grow_class(pool, c, want - have, method, generators,
                            derive_seed(seed, static_cast<std::uint64_t>(c)));
    std::move(added.begin(), added.end(), std::back_inserter(out));
  }
  return out;
}

}  // namespace lsmgan::augment
