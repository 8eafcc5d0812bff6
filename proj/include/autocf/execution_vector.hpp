#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace autocf {

/// Row mask produced by executing a condition on a table.
class ExecutionVector {
 public:
  ExecutionVector() = default;
  explicit ExecutionVector(std::size_t size, bool value = false)
      : size_(size), words_((size + 63) / 64, value ? ~std::uint64_t{0} : 0) {
    trim_tail();
  }

  std::size_t size() const noexcept { return size_; }

  bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1U; }
  void set(std::size_t i, bool value = true) {
    const std::uint64_t bit = std::uint64_t{1} << (i % 64);
    if (value)
      words_[i / 64] |= bit;
    else
      words_[i / 64] &= ~bit;
  }

  std::size_t count() const noexcept {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }
  bool none() const noexcept { return count() == 0; }
  bool all() const noexcept { return count() == size_; }

  ExecutionVector& operator&=(const ExecutionVector& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
    return *this;
  }
  ExecutionVector& operator|=(const ExecutionVector& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
    return *this;
  }
  ExecutionVector& operator^=(const ExecutionVector& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] ^= o.words_[i];
    return *this;
  }
  friend ExecutionVector operator&(ExecutionVector a, const ExecutionVector& b) { return a &= b; }
  friend ExecutionVector operator|(ExecutionVector a, const ExecutionVector& b) { return a |= b; }
  friend ExecutionVector operator^(ExecutionVector a, const ExecutionVector& b) { return a ^= b; }
  ExecutionVector operator~() const {
    ExecutionVector out = *this;
    for (auto& w : out.words_) w = ~w;
    out.trim_tail();
    return out;
  }

  /// Number of positions where the vectors differ.
  std::size_t hamming(const ExecutionVector& o) const { return (*this ^ o).count(); }

  bool operator==(const ExecutionVector&) const = default;

  std::size_t hash() const noexcept {
    std::size_t h = std::hash<std::size_t>{}(size_);
    for (auto w : words_) h ^= std::hash<std::uint64_t>{}(w) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }

  /// '1'/'0' per row, row 0 first.
  std::string to_bitstring() const {
    std::string s(size_, '0');
    for (std::size_t i = 0; i < size_; ++i)
      if (test(i)) s[i] = '1';
    return s;
  }
  static ExecutionVector from_bits(const std::vector<bool>& bits) {
    ExecutionVector v(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) v.set(i, bits[i]);
    return v;
  }

  /// Base64 of the little-endian bitset bytes: row i is bit (i % 8) of byte i / 8.
  std::string to_base64() const;
  static std::optional<ExecutionVector> from_base64(std::string_view text, std::size_t size);

 private:
  void trim_tail() {
    if (size_ % 64 != 0 && !words_.empty())
      words_.back() &= (std::uint64_t{1} << (size_ % 64)) - 1;
  }

  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

struct ExecutionVectorHash {
  std::size_t operator()(const ExecutionVector& v) const noexcept { return v.hash(); }
};

}  // namespace autocf
