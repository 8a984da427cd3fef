#pragma once

#include <bit>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace depshap {

inline constexpr int kMaxFeatures = 63;

/// A subset of feature indices {0, ..., m-1}, stored as a bit set.
class Coalition {
 public:
  constexpr Coalition() = default;
  constexpr explicit Coalition(std::uint64_t bits) : bits_(bits) {}

  static constexpr Coalition empty() { return Coalition{}; }
  static constexpr Coalition full(int m) {
    return Coalition(m >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << m) - 1);
  }
  static Coalition from_indices(std::span<const int> indices);

  constexpr std::uint64_t bits() const { return bits_; }
  constexpr int size() const { return std::popcount(bits_); }
  constexpr bool is_empty() const { return bits_ == 0; }
  constexpr bool contains(int j) const { return (bits_ >> j) & 1U; }

  constexpr Coalition with(int j) const { return Coalition(bits_ | (std::uint64_t{1} << j)); }
  constexpr Coalition without(int j) const { return Coalition(bits_ & ~(std::uint64_t{1} << j)); }
  constexpr Coalition complement(int m) const { return Coalition(full(m).bits_ & ~bits_); }

  // Sorted member indices.
  std::vector<int> members() const;
  // Sorted indices of {0..m-1} not in the coalition.
  std::vector<int> non_members(int m) const;

  // "{1,3}" using 1-based feature numbers.
  std::string to_string() const;

  constexpr auto operator<=>(const Coalition&) const = default;

 private:
  std::uint64_t bits_ = 0;
};

// Canonical order: by size, then lexicographically by sorted member list.
constexpr bool canonical_less(Coalition a, Coalition b) {
  if (a.size() != b.size()) return a.size() < b.size();
  const std::uint64_t diff = a.bits() ^ b.bits();
  if (diff == 0) return false;
  const std::uint64_t lowest = diff & (~diff + 1);
  return (a.bits() & lowest) != 0;
}

}  // namespace depshap
