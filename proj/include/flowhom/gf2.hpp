#pragma once

#include <cstdint>
#include <vector>

#include "flowhom/common.hpp"

namespace flowhom {

// Dense GF(2) matrix with packed 64-bit rows. Elimination pivots on the
// lowest column index so ranks are reproducible.
class GF2Matrix {
 public:
  GF2Matrix() = default;
  GF2Matrix(int rows, int cols)
      : rows_(rows), cols_(cols), words_((cols + 63) / 64),
        data_(size_t(rows) * size_t(words_), 0) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  bool get(int r, int c) const {
    return (data_[size_t(r) * words_ + c / 64] >> (c % 64)) & 1u;
  }
  void set(int r, int c, bool v) {
    std::uint64_t& w = data_[size_t(r) * words_ + c / 64];
    std::uint64_t m = std::uint64_t(1) << (c % 64);
    if (v) w |= m;
    else w &= ~m;
  }
  void flip(int r, int c) { data_[size_t(r) * words_ + c / 64] ^= std::uint64_t(1) << (c % 64); }

  void xor_rows(int dst, int src) {
    for (int w = 0; w < words_; ++w)
      data_[size_t(dst) * words_ + w] ^= data_[size_t(src) * words_ + w];
  }

  bool row_empty(int r) const {
    for (int w = 0; w < words_; ++w)
      if (data_[size_t(r) * words_ + w]) return false;
    return true;
  }

  GF2Matrix multiply(const GF2Matrix& other) const {
    if (cols_ != other.rows_) throw std::invalid_argument("GF2 shape mismatch");
    GF2Matrix out(rows_, other.cols_);
    for (int i = 0; i < rows_; ++i)
      for (int k = 0; k < cols_; ++k)
        if (get(i, k)) out.xor_rows_external(i, other, k);
    return out;
  }

  bool is_zero() const {
    for (auto w : data_)
      if (w) return false;
    return true;
  }

  int rank() const {
    GF2Matrix work = *this;
    int r = 0;
    for (int c = 0; c < cols_ && r < rows_; ++c) {
      int pivot = -1;
      for (int i = r; i < rows_; ++i)
        if (work.get(i, c)) {
          pivot = i;
          break;
        }
      if (pivot < 0) continue;
      work.swap_rows(pivot, r);
      for (int i = 0; i < rows_; ++i)
        if (i != r && work.get(i, c)) work.xor_rows(i, r);
      ++r;
    }
    return r;
  }

 private:
  void swap_rows(int a, int b) {
    if (a == b) return;
    for (int w = 0; w < words_; ++w)
      std::swap(data_[size_t(a) * words_ + w], data_[size_t(b) * words_ + w]);
  }
  void xor_rows_external(int dst, const GF2Matrix& other, int src) {
    for (int w = 0; w < words_; ++w)
      data_[size_t(dst) * words_ + w] ^= other.data_[size_t(src) * words_ + w];
  }

  int rows_ = 0, cols_ = 0, words_ = 0;
  std::vector<std::uint64_t> data_;
};

}  // namespace flowhom
