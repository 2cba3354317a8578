#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qkam {

// Fixed-width bit set used for qubit and check index sets.
inline constexpr std::size_t kMaxBits = 256;

class Mask {
 public:
  static constexpr std::size_t kWords = kMaxBits / 64;

  Mask() = default;

  static Mask single(std::size_t i) {
    Mask m;
    m.set(i);
    return m;
  }
  static Mask range(std::size_t n) {
    Mask m;
    for (std::size_t i = 0; i < n; ++i) m.set(i);
    return m;
  }
  static Mask of(const std::vector<int>& idx) {
    Mask m;
    for (int i : idx) m.set(static_cast<std::size_t>(i));
    return m;
  }

  bool test(std::size_t i) const { return (w_[i >> 6] >> (i & 63)) & 1u; }
  void set(std::size_t i, bool v = true) {
    if (i >= kMaxBits) throw std::out_of_range("Mask index beyond kMaxBits");
    if (v)
      w_[i >> 6] |= (std::uint64_t{1} << (i & 63));
    else
      w_[i >> 6] &= ~(std::uint64_t{1} << (i & 63));
  }
  void reset(std::size_t i) { set(i, false); }
  void flip(std::size_t i) { w_[i >> 6] ^= (std::uint64_t{1} << (i & 63)); }

  std::size_t count() const {
    std::size_t c = 0;
    for (auto w : w_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }
  bool any() const {
    for (auto w : w_)
      if (w) return true;
    return false;
  }
  bool none() const { return !any(); }

  Mask& operator&=(const Mask& o) {
    for (std::size_t i = 0; i < kWords; ++i) w_[i] &= o.w_[i];
    return *this;
  }
  Mask& operator|=(const Mask& o) {
    for (std::size_t i = 0; i < kWords; ++i) w_[i] |= o.w_[i];
    return *this;
  }
  Mask& operator^=(const Mask& o) {
    for (std::size_t i = 0; i < kWords; ++i) w_[i] ^= o.w_[i];
    return *this;
  }
  // this & ~o
  Mask minus(const Mask& o) const {
    Mask r;
    for (std::size_t i = 0; i < kWords; ++i) r.w_[i] = w_[i] & ~o.w_[i];
    return r;
  }
  friend Mask operator&(Mask a, const Mask& b) { return a &= b; }
  friend Mask operator|(Mask a, const Mask& b) { return a |= b; }
  friend Mask operator^(Mask a, const Mask& b) { return a ^= b; }
  friend bool operator==(const Mask& a, const Mask& b) { return a.w_ == b.w_; }
  friend bool operator!=(const Mask& a, const Mask& b) { return !(a == b); }
  friend bool operator<(const Mask& a, const Mask& b) {
    for (std::size_t i = kWords; i-- > 0;)
      if (a.w_[i] != b.w_[i]) return a.w_[i] < b.w_[i];
    return false;
  }

  bool intersects(const Mask& o) const {
    for (std::size_t i = 0; i < kWords; ++i)
      if (w_[i] & o.w_[i]) return true;
    return false;
  }
  bool subset_of(const Mask& o) const {
    for (std::size_t i = 0; i < kWords; ++i)
      if (w_[i] & ~o.w_[i]) return false;
    return true;
  }
  // parity of |this & o|
  bool odd_overlap(const Mask& o) const {
    std::uint64_t acc = 0;
    for (std::size_t i = 0; i < kWords; ++i) acc ^= (w_[i] & o.w_[i]);
    return std::popcount(acc) & 1;
  }
  std::size_t overlap(const Mask& o) const {
    std::size_t c = 0;
    for (std::size_t i = 0; i < kWords; ++i) c += static_cast<std::size_t>(std::popcount(w_[i] & o.w_[i]));
    return c;
  }

  int first() const {
    for (std::size_t i = 0; i < kWords; ++i)
      if (w_[i]) return static_cast<int>(i * 64 + static_cast<std::size_t>(std::countr_zero(w_[i])));
    return -1;
  }

  template <class F>
  void for_each(F&& f) const {
    for (std::size_t i = 0; i < kWords; ++i) {
      std::uint64_t w = w_[i];
      while (w) {
        int b = std::countr_zero(w);
        f(static_cast<int>(i * 64 + static_cast<std::size_t>(b)));
        w &= w - 1;
      }
    }
  }
  std::vector<int> indices() const {
    std::vector<int> out;
    for_each([&](int i) { out.push_back(i); });
    return out;
  }

  std::uint64_t word(std::size_t i) const { return w_[i]; }
  std::uint64_t& word(std::size_t i) { return w_[i]; }

  std::size_t hash() const {
    std::uint64_t h = 0x9e3779b97f4a7c15ull;
    for (auto w : w_) {
      h ^= w + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      h *= 0xff51afd7ed558ccdull;
    }
    return static_cast<std::size_t>(h ^ (h >> 33));
  }

  std::string bitstring(std::size_t n) const {
    std::string s(n, '0');
    for (std::size_t i = 0; i < n; ++i)
      if (test(i)) s[i] = '1';
    return s;
  }

 private:
  std::array<std::uint64_t, kWords> w_{};
};

struct MaskHash {
  std::size_t operator()(const Mask& m) const { return m.hash(); }
};

// Dynamic-length GF(2) vector.
class BitVec {
 public:
  BitVec() = default;
  explicit BitVec(std::size_t n) : n_(n), w_((n + 63) / 64, 0) {}

  std::size_t size() const { return n_; }
  bool test(std::size_t i) const { return (w_[i >> 6] >> (i & 63)) & 1u; }
  void set(std::size_t i, bool v = true) {
    if (v)
      w_[i >> 6] |= (std::uint64_t{1} << (i & 63));
    else
      w_[i >> 6] &= ~(std::uint64_t{1} << (i & 63));
  }
  void flip(std::size_t i) { w_[i >> 6] ^= (std::uint64_t{1} << (i & 63)); }
  BitVec& operator^=(const BitVec& o) {
    for (std::size_t i = 0; i < w_.size(); ++i) w_[i] ^= o.w_[i];
    return *this;
  }
  friend bool operator==(const BitVec& a, const BitVec& b) { return a.n_ == b.n_ && a.w_ == b.w_; }
  bool any() const {
    for (auto w : w_)
      if (w) return true;
    return false;
  }
  std::size_t count() const {
    std::size_t c = 0;
    for (auto w : w_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }
  long first() const {
    for (std::size_t i = 0; i < w_.size(); ++i)
      if (w_[i]) return static_cast<long>(i * 64 + static_cast<std::size_t>(std::countr_zero(w_[i])));
    return -1;
  }
  std::vector<int> indices() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < w_.size(); ++i) {
      std::uint64_t w = w_[i];
      while (w) {
        out.push_back(static_cast<int>(i * 64 + static_cast<std::size_t>(std::countr_zero(w))));
        w &= w - 1;
      }
    }
    return out;
  }
  Mask to_mask() const {
    Mask m;
    for (int i : indices()) m.set(static_cast<std::size_t>(i));
    return m;
  }

 private:
  std::size_t n_ = 0;
  std::vector<std::uint64_t> w_;
};

// Incremental row echelon basis over GF(2). Each stored row carries a tag
// recording which inserted vectors were combined to produce it, so a reduction
// doubles as a linear solve. Pivots are the lowest set bit of each reduced row;
// insertion order fixes the result.
class Gf2Basis {
 public:
  Gf2Basis(std::size_t width, std::size_t tag_width) : width_(width), tag_width_(tag_width) {}

  std::size_t width() const { return width_; }
  std::size_t rank() const { return rows_.size(); }

  // Returns the dependency tag (a kernel element) when v is in the span,
  // otherwise stores v and returns nothing.
  std::optional<BitVec> insert(BitVec v, BitVec tag) {
    reduce_in_place(v, tag);
    long p = v.first();
    if (p < 0) return tag;
    rows_.push_back(std::move(v));
    tags_.push_back(std::move(tag));
    pivots_.push_back(static_cast<std::size_t>(p));
    return std::nullopt;
  }

  // Insert the i-th generator (tag = unit vector i).
  std::optional<BitVec> insert_generator(const BitVec& v, std::size_t i) {
    BitVec tag(tag_width_);
    tag.set(i);
    return insert(v, std::move(tag));
  }

  // Combination of inserted generators equal to v, if v is in the span.
  std::optional<BitVec> solve(BitVec v) const {
    BitVec tag(tag_width_);
    reduce_in_place(v, tag);
    if (v.any()) return std::nullopt;
    return tag;
  }

  bool contains(BitVec v) const {
    BitVec tag(tag_width_);
    reduce_in_place(v, tag);
    return !v.any();
  }

 private:
  void reduce_in_place(BitVec& v, BitVec& tag) const {
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      if (v.test(pivots_[r])) {
        v ^= rows_[r];
        tag ^= tags_[r];
      }
    }
  }

  std::size_t width_;
  std::size_t tag_width_;
  std::vector<BitVec> rows_;
  std::vector<BitVec> tags_;
  std::vector<std::size_t> pivots_;
};

// Same elimination as Gf2Basis for vectors and tags that fit in a Mask.
class MaskBasis {
 public:
  std::size_t rank() const { return rows_.size(); }

  std::optional<Mask> insert(Mask v, Mask tag) {
    reduce(v, tag);
    int p = v.first();
    if (p < 0) return tag;
    rows_.push_back(v);
    tags_.push_back(tag);
    pivots_.push_back(p);
    return std::nullopt;
  }
  std::optional<Mask> insert_generator(const Mask& v, std::size_t i) { return insert(v, Mask::single(i)); }

  std::optional<Mask> solve(Mask v) const {
    Mask tag;
    reduce(v, tag);
    if (v.any()) return std::nullopt;
    return tag;
  }
  bool contains(Mask v) const {
    Mask tag;
    reduce(v, tag);
    return v.none();
  }

 private:
  void reduce(Mask& v, Mask& tag) const {
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      if (v.test(static_cast<std::size_t>(pivots_[r]))) {
        v ^= rows_[r];
        tag ^= tags_[r];
      }
    }
  }

  std::vector<Mask> rows_;
  std::vector<Mask> tags_;
  std::vector<int> pivots_;
};

// Dense GF(2) matrix stored by rows.
class Gf2Matrix {
 public:
  Gf2Matrix() = default;
  Gf2Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows, BitVec(cols)) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool get(std::size_t r, std::size_t c) const { return data_[r].test(c); }
  void set(std::size_t r, std::size_t c, bool v = true) { data_[r].set(c, v); }
  const BitVec& row(std::size_t r) const { return data_[r]; }
  BitVec column(std::size_t c) const {
    BitVec v(rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      if (get(r, c)) v.set(r);
    return v;
  }
  Gf2Matrix transpose() const {
    Gf2Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (int c : data_[r].indices()) t.set(static_cast<std::size_t>(c), r);
    return t;
  }
  std::size_t row_weight(std::size_t r) const { return data_[r].count(); }
  std::size_t col_weight(std::size_t c) const { return column(c).count(); }

  std::size_t rank() const {
    Gf2Basis b(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r) b.insert_generator(data_[r], r);
    return b.rank();
  }

  // Basis of {x : M x = 0}.
  std::vector<BitVec> kernel() const {
    Gf2Basis b(rows_, cols_);
    std::vector<BitVec> out;
    for (std::size_t c = 0; c < cols_; ++c) {
      if (auto dep = b.insert_generator(column(c), c)) out.push_back(*dep);
    }
    return out;
  }

  // M x for x of length cols.
  BitVec apply(const BitVec& x) const {
    BitVec y(rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
      bool s = false;
      for (int c : x.indices()) s ^= get(r, static_cast<std::size_t>(c));
      y.set(r, s);
    }
    return y;
  }

  friend bool operator==(const Gf2Matrix& a, const Gf2Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<BitVec> data_;
};

}  // namespace qkam
