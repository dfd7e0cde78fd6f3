#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace lsmgan {

enum class RhythmClass : std::uint8_t { NonAF = 0, AF = 1 };

std::string_view to_string(RhythmClass c);
RhythmClass parse_rhythm_class(std::string_view text);

/// Where a record came from. Real (simulated-sensor) records are Original;
/// everything else was produced by an augmentation method.
enum class AugmentMethod : std::uint8_t {
  Original,
  DataCopying,
  Permutation,
  Dcgan100,
  Dcgan1200,
  Wdcgan100,
  Wdcgan1200,
  LsmGan,
};

inline constexpr std::array<AugmentMethod, 8> kAllAugmentMethods = {
    AugmentMethod::Original,  AugmentMethod::DataCopying, AugmentMethod::Permutation,
    AugmentMethod::Dcgan100,  AugmentMethod::Dcgan1200,   AugmentMethod::Wdcgan100,
    AugmentMethod::Wdcgan1200, AugmentMethod::LsmGan};

std::string_view to_string(AugmentMethod m);
AugmentMethod parse_augment_method(std::string_view text);
bool is_gan_method(AugmentMethod m);

}  // namespace lsmgan
