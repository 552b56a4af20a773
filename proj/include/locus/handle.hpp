#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>

namespace locus {

/// Index of one simulated locale. Must fit in 16 bits so it can be packed
/// into the high bits of a compressed reference.
using LocaleId = std::uint32_t;

inline constexpr std::uint64_t kMaxLocales = std::uint64_t{1} << 16;
inline constexpr std::uint64_t kAddrBits = 48;
inline constexpr std::uint64_t kAddrMask = (std::uint64_t{1} << kAddrBits) - 1;

/// A 64-bit object reference: 16 bits of locale id packed above a 48-bit
/// home-arena slot address. All-zero bits are the distinguished nil
/// reference; slot address 0 on locale 0 is never handed out.
class CompressedHandle {
 public:
  constexpr CompressedHandle() noexcept = default;

  static CompressedHandle encode(LocaleId locale, std::uint64_t addr) {
    if (locale >= kMaxLocales) {
      throw std::out_of_range("CompressedHandle: locale id exceeds 16 bits");
    }
    if (addr > kAddrMask) {
      throw std::out_of_range("CompressedHandle: address exceeds 48 bits");
    }
    return CompressedHandle((std::uint64_t{locale} << kAddrBits) | addr);
  }

  /// Reinterpret raw bits as a handle with no range checking.
  static constexpr CompressedHandle fromBits(std::uint64_t bits) noexcept {
    return CompressedHandle(bits);
  }

  static constexpr CompressedHandle nil() noexcept { return {}; }

  constexpr std::uint64_t bits() const noexcept { return bits_; }
  constexpr LocaleId locale() const noexcept {
    return static_cast<LocaleId>(bits_ >> kAddrBits);
  }
  constexpr std::uint64_t addr() const noexcept { return bits_ & kAddrMask; }
  constexpr bool isNil() const noexcept { return bits_ == 0; }

  friend constexpr bool operator==(CompressedHandle a,
                                   CompressedHandle b) noexcept {
    return a.bits_ == b.bits_;
  }
  friend constexpr bool operator!=(CompressedHandle a,
                                   CompressedHandle b) noexcept {
    return a.bits_ != b.bits_;
  }

 private:
  constexpr explicit CompressedHandle(std::uint64_t bits) noexcept
      : bits_(bits) {}

  std::uint64_t bits_ = 0;
};

}  // namespace locus

template <>
struct std::hash<locus::CompressedHandle> {
  std::size_t operator()(locus::CompressedHandle h) const noexcept {
    return std::hash<std::uint64_t>{}(h.bits());
  }
};
