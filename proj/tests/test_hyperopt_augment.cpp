#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "lsmgan/augment.hpp"
#include "lsmgan/corpus_io.hpp"
#include "lsmgan/error.hpp"
#include "lsmgan/hyperopt.hpp"
#include "lsmgan/nn.hpp"
#include "lsmgan/rng.hpp"

using namespace lsmgan;
using hyperopt::LsmHyperParams;
using spectral::AggregationFn;

namespace {

std::vector<dsp::Record> toy_corpus(std::size_t n_af, std::size_t n_nonaf, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<dsp::Record> out;
  for (std::size_t i = 0; i < n_af + n_nonaf; ++i) {
    dsp::Record r;
    r.label = i < n_af ? RhythmClass::AF : RhythmClass::NonAF;
    r.samples.resize(dsp::kRecordLength);
    const double freq = r.label == RhythmClass::AF ? 0.31 : 0.19;
    const double phase = rng.uniform(0.0, 6.28);
    for (std::size_t t = 0; t < r.samples.size(); ++t)
      r.samples[t] = 0.5 + 0.4 * std::sin(freq * double(t) + phase) + 0.05 * rng.uniform();
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::vector<double>> segments_sorted(const std::vector<double>& x) {
  std::vector<std::vector<double>> segs;
  const std::size_t len = x.size() / augment::kPermutationSegments;
  for (std::size_t i = 0; i < augment::kPermutationSegments; ++i)
    segs.emplace_back(x.begin() + i * len, x.begin() + (i + 1) * len);
  std::sort(segs.begin(), segs.end());
  return segs;
}

template <class F>
void expect_code(ErrorCode code, F&& f) {
  try {
    f();
    FAIL("expected " << to_string(code));
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

bool same_hp(const LsmHyperParams& a, const LsmHyperParams& b) {
  return std::abs(a.lambda1 - b.lambda1) < 1e-12 && std::abs(a.lambda2 - b.lambda2) < 1e-12 && a.f == b.f;
}

}  // namespace

TEST_CASE("grid cardinalities") {
  const auto fine = hyperopt::fine_grid();
  CHECK(fine.lambda_values.size() == 31);
  CHECK(hyperopt::grid_size(fine) == 1922);
  const auto coarse = hyperopt::coarse_grid();
  CHECK(hyperopt::grid_size(coarse) == 98);
  for (double v : coarse.lambda_values)
    CHECK(std::any_of(fine.lambda_values.begin(), fine.lambda_values.end(),
                      [&](double f) { return f == v; }));
  const auto r = hyperopt::grid_search(fine, [](const LsmHyperParams&) { return 1.0; });
  CHECK(r.evaluated == 1922);
  CHECK(r.scores.size() == 1922);
}

TEST_CASE("planted optimum is recovered") {
  const hyperopt::Scorer rigged = [](const LsmHyperParams& hp) {
    return std::hypot(hp.lambda1 - 1.5, hp.lambda2 - 1.5) + (hp.f == AggregationFn::Mean ? 0.0 : 0.01);
  };
  for (std::size_t jobs : {1, 3}) {
    const auto r = hyperopt::grid_search(hyperopt::fine_grid(), rigged, jobs);
    CHECK(same_hp(r.best, LsmHyperParams{1.5, 1.5, AggregationFn::Mean}));
    CHECK(r.best_score < 1e-9);
  }
}

TEST_CASE("ties go to the earlier combination") {
  const auto all_equal = hyperopt::grid_search(hyperopt::coarse_grid(), [](const LsmHyperParams&) { return 2.0; });
  CHECK(same_hp(all_equal.best, LsmHyperParams{0.0, 0.0, AggregationFn::Mean}));
  CHECK(same_hp(all_equal.scores.front().hp, all_equal.best));
  // Two minima: (1.0, 2.0, Max) precedes (2.0, 1.0, Mean) in lambda1-outer order.
  const hyperopt::Scorer two = [](const LsmHyperParams& hp) {
    if (same_hp(hp, {1.0, 2.0, AggregationFn::Max}) || same_hp(hp, {2.0, 1.0, AggregationFn::Mean})) return 0.5;
    return 1.0;
  };
  for (std::size_t jobs : {1, 4})
    CHECK(same_hp(hyperopt::grid_search(hyperopt::coarse_grid(), two, jobs).best, {1.0, 2.0, AggregationFn::Max}));
}

TEST_CASE("grid validation rejects an empty grid") {
  hyperopt::GridSpec spec = hyperopt::coarse_grid();
  spec.lambda_values.clear();
  CHECK_THROWS(hyperopt::validate(spec));
}

TEST_CASE("select_subset") {
  const auto recs = toy_corpus(20, 0, 1);
  const auto a = hyperopt::select_subset(recs, 8, 5);
  CHECK(a.size() == 8);
  CHECK(hyperopt::select_subset(recs, 8, 5) == a);
  std::set<std::vector<double>> unique(a.begin(), a.end());
  CHECK(unique.size() == 8);
  expect_code(ErrorCode::InsufficientData, [&] { hyperopt::select_subset(recs, 21, 5); });
}

TEST_CASE("score_combo against identity and noise sources") {
  const auto real = toy_corpus(350, 0, 2);
  std::size_t seen_k = 0;
  const hyperopt::SignalSource identity = [&](const LsmHyperParams&, std::size_t k, std::uint64_t seed) {
    seen_k = k;
    return hyperopt::select_subset(real, k, seed);
  };
  const hyperopt::SignalSource noise = [](const LsmHyperParams&, std::size_t k, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> out(k, std::vector<double>(1200));
    for (auto& s : out)
      for (auto& v : s) v = rng.uniform();
    return out;
  };
  const LsmHyperParams hp{1, 1, AggregationFn::Mean};
  const double id_score = hyperopt::score_combo(hp, real, identity, 300, 9);
  CHECK(seen_k == 300);
  CHECK(id_score < 1e-10);
  const double noise_score = hyperopt::score_combo(hp, real, noise, 300, 9);
  CHECK(noise_score > 10.0 * id_score);
  CHECK(noise_score > 1e-3);
}

TEST_CASE("grid_search over a source is reproducible") {
  const auto real = toy_corpus(40, 0, 3);
  auto spec = hyperopt::coarse_grid();
  spec.lambda_values = {0.0, 1.5};
  spec.k = 10;
  const auto a = hyperopt::grid_search(spec, real, hyperopt::permutation_stub(real), 4, 1);
  const auto b = hyperopt::grid_search(spec, real, hyperopt::permutation_stub(real), 4, 2);
  REQUIRE(a.scores.size() == 8);
  for (std::size_t i = 0; i < a.scores.size(); ++i) CHECK(a.scores[i].score == b.scores[i].score);
}

TEST_CASE("data_copying") {
  const auto recs = toy_corpus(10, 0, 4);
  CHECK(augment::data_copying(recs, 0, 1).size() == recs.size());
  const auto grown = augment::data_copying(recs, 60, 1);
  REQUIRE(grown.size() == 70);
  std::set<std::uint64_t> originals;
  for (const auto& r : recs) originals.insert(corpus::fingerprint(r));
  for (std::size_t i = 0; i < grown.size(); ++i) {
    CHECK(originals.count(corpus::fingerprint(grown[i])) == 1);
    if (i < recs.size()) CHECK(grown[i].samples == recs[i].samples);
  }
}

TEST_CASE("permutation preserves the sub-segments") {
  const auto r = toy_corpus(1, 0, 5).front();
  bool saw_identity = false;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto p = augment::permutation(r, seed);
    CHECK(p.label == r.label);
    CHECK(segments_sorted(p.samples) == segments_sorted(r.samples));
    auto a = p.samples, b = r.samples;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
    saw_identity = saw_identity || p.samples == r.samples;
  }
  CHECK(saw_identity);
}

TEST_CASE("augment_corpus") {
  const auto corpus = toy_corpus(10, 70, 6);
  const augment::GeneratorSet none;

  const auto same = augment::augment_corpus(corpus, AugmentMethod::Original, {10, 70}, none, 1);
  CHECK(same.size() == corpus.size());
  expect_code(ErrorCode::InvalidConfig,
              [&] { augment::augment_corpus(corpus, AugmentMethod::Original, {20, 70}, none, 1); });
  expect_code(ErrorCode::TargetBelowCurrent,
              [&] { augment::augment_corpus(corpus, AugmentMethod::DataCopying, {5, 70}, none, 1); });
  expect_code(ErrorCode::MissingGenerator,
              [&] { augment::augment_corpus(corpus, AugmentMethod::LsmGan, {70, 70}, none, 1); });

  // Six extra folds of AF take a 1:7 corpus to parity.
  const auto copied = augment::augment_corpus(corpus, AugmentMethod::DataCopying, {70, 70}, none, 1);
  CHECK(augment::count_class(copied, RhythmClass::AF) == 70);
  CHECK(augment::count_class(copied, RhythmClass::NonAF) == 70);
  for (std::size_t i = 0; i < corpus.size(); ++i) CHECK(copied[i].samples == corpus[i].samples);
  for (std::size_t i = corpus.size(); i < copied.size(); ++i) {
    CHECK(copied[i].origin == AugmentMethod::DataCopying);
    CHECK(copied[i].label == RhythmClass::AF);
  }

  nn::Generator<float> g_af(nn::GeneratorKind::SameLength1200, 1), g_non(nn::GeneratorKind::SameLength1200, 2);
  const augment::GeneratorSet gens{{RhythmClass::AF, &g_af}, {RhythmClass::NonAF, &g_non}};
  const auto lsm = augment::augment_corpus(corpus, AugmentMethod::LsmGan, {70, 70}, gens, 2);
  CHECK(augment::count_class(lsm, RhythmClass::AF) == 70);
  CHECK(augment::count_class(lsm, RhythmClass::NonAF) == 70);
  for (std::size_t i = corpus.size(); i < lsm.size(); ++i) {
    CHECK(lsm[i].origin == AugmentMethod::LsmGan);
    CHECK(lsm[i].samples.size() == 1200);
  }

  const auto perm = augment::augment_corpus(corpus, AugmentMethod::Permutation, {20, 140}, none, 3);
  CHECK(augment::count_class(perm, RhythmClass::AF) == 20);
  CHECK(augment::count_class(perm, RhythmClass::NonAF) == 140);
  for (std::size_t i = corpus.size(); i < perm.size(); ++i) {
    const auto segs = segments_sorted(perm[i].samples);
    const bool has_source = std::any_of(corpus.begin(), corpus.end(), [&](const dsp::Record& r) {
      return r.label == perm[i].label && segments_sorted(r.samples) == segs;
    });
    CHECK(has_source);
  }
}
