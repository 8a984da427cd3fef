#include "depshap/coalition.hpp"

#include "depshap/errors.hpp"

namespace depshap {

Coalition Coalition::from_indices(std::span<const int> indices) {
  std::uint64_t bits = 0;
  for (int j : indices) {
    if (j < 0 || j > kMaxFeatures) throw DomainError("feature index out of range: " + std::to_string(j));
    bits |= std::uint64_t{1} << j;
  }
  return Coalition(bits);
}

std::vector<int> Coalition::members() const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(size()));
  for (std::uint64_t b = bits_; b != 0; b &= b - 1) out.push_back(std::countr_zero(b));
  return out;
}

std::vector<int> Coalition::non_members(int m) const { return complement(m).members(); }

std::string Coalition::to_string() const {
  std::string out = "{";
  bool first = true;
  for (int j : members()) {
    if (!first) out += ",";
    out += std::to_string(j + 1);
    first = false;
  }
  return out + "}";
}

}  // namespace depshap
