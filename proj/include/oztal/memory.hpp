#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "oztal/config.hpp"
#include "oztal/error.hpp"
#include "oztal/linalg.hpp"

namespace oztal {

/// Bounded FIFO of foreground features. Index 0 is the oldest entry; pushing into a
/// full bank evicts it. Storage is a fixed ring, so memory is capacity * dim doubles
/// regardless of how long the stream runs.
class MemoryBank {
 public:
  MemoryBank(std::size_t capacity, std::size_t dim)
      : capacity_(capacity), dim_(dim), storage_(capacity * dim) {
    if (capacity == 0) throw Error("memory_capacity must be >= 1");
    if (dim == 0) throw Error("memory dimension must be >= 1");
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  bool full() const { return size_ == capacity_; }

  std::span<const double> operator[](std::size_t i) const {
    return std::span<const double>(storage_).subspan(slot(i) * dim_, dim_);
  }

  void push(std::span<const double> x) {
    if (x.size() != dim_) {
      throw Error("dimension mismatch: memory holds " + std::to_string(dim_) +
                  "-vectors, got " + std::to_string(x.size()));
    }
    std::size_t dst;
    if (full()) {
      dst = head_;
      head_ = (head_ + 1) % capacity_;
    } else {
      dst = (head_ + size_) % capacity_;
      ++size_;
    }
    std::copy(x.begin(), x.end(), storage_.begin() + static_cast<std::ptrdiff_t>(dst * dim_));
  }

  void clear() {
    head_ = 0;
    size_ = 0;
  }

 private:
  std::size_t slot(std::size_t i) const { return (head_ + i) % capacity_; }

  std::size_t capacity_;
  std::size_t dim_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
  Vector storage_;
};

/// Appends x when it looks more like the foreground prompt than the background prompt.
/// Ties do not append. Returns whether x was stored.
inline bool update_memory(MemoryBank& bank, std::span<const double> x,
                          std::span<const double> foreground,
                          std::span<const double> background) {
  if (x.size() != bank.dim()) {
    throw Error("dimension mismatch: feature has " + std::to_string(x.size()) +
                ", memory holds " + std::to_string(bank.dim()));
  }
  if (cosine(x, background) < cosine(x, foreground)) {
    bank.push(x);
    return true;
  }
  return false;
}

inline void mean_memory(const MemoryBank& bank, std::span<double> out) {
  if (bank.empty()) throw Error("empty memory");
  if (out.size() != bank.dim()) throw Error("dimension mismatch in mean_memory");
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const auto q = bank[i];
    for (std::size_t d = 0; d < out.size(); ++d) out[d] += q[d];
  }
  const double m = static_cast<double>(bank.size());
  for (double& v : out) v /= m;
}

inline Vector mean_memory(const MemoryBank& bank) {
  Vector out(bank.dim());
  mean_memory(bank, out);
  return out;
}

/// Recency-weighted summary. Entry i (1-based, oldest first) of m gets 1 / (m + 1 - i).
/// Literal mode scales the sum by 1/m, so the weights total H_m / m; normalized mode
/// divides by H_m instead and yields a convex combination.
inline void weighted_memory(const MemoryBank& bank, bool normalized, std::span<double> out) {
  if (bank.empty()) throw Error("empty memory");
  if (out.size() != bank.dim()) throw Error("dimension mismatch in weighted_memory");
  const std::size_t m = bank.size();
  double harmonic = 0.0;
  for (std::size_t i = 1; i <= m; ++i) harmonic += 1.0 / static_cast<double>(i);
  const double divisor = normalized ? harmonic : static_cast<double>(m);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double w = 1.0 / (static_cast<double>(m - i) * divisor);
    const auto q = bank[i];
    for (std::size_t d = 0; d < out.size(); ++d) out[d] += w * q[d];
  }
}

inline Vector weighted_memory(const MemoryBank& bank, bool normalized) {
  Vector out(bank.dim());
  weighted_memory(bank, normalized, out);
  return out;
}

struct Enhancement {
  Vector z;
  double lambda = 0.0;
  bool fused = false;
};

// Gate open when cos(x, mean) > theta. The fusion weight maps that cosine affinely to
// [0, 1] and halves it, so lambda is in [0, 0.5].
inline double fusion_weight(double similarity) { return 0.5 * (similarity + 1.0) / 2.0; }

namespace detail {

// Writes the enhanced feature into z using caller-provided scratch buffers. Returns
// lambda; zero means the gate stayed closed and z is a bit-exact copy of x.
inline double enhance_into(const MemoryBank& bank, std::span<const double> x,
                           const LocalizerConfig& cfg, std::span<double> z,
                           std::span<double> mean_buf, std::span<double> weighted_buf) {
  if (x.size() != bank.dim()) {
    throw Error("dimension mismatch: feature has " + std::to_string(x.size()) +
                ", memory holds " + std::to_string(bank.dim()));
  }
  std::copy(x.begin(), x.end(), z.begin());
  if (bank.empty()) return 0.0;
  mean_memory(bank, mean_buf);
  const double similarity = cosine(x, mean_buf);
  if (!(similarity > cfg.fusion_threshold)) return 0.0;
  const double lambda = fusion_weight(similarity);
  weighted_memory(bank, cfg.normalized_memory_weights, weighted_buf);
  for (std::size_t d = 0; d < z.size(); ++d) {
    z[d] = (1.0 - lambda) * x[d] + lambda * weighted_buf[d];
  }
  if (cfg.renormalize_fused) normalize_in_place(z);
  return lambda;
}

}  // namespace detail

/// Fuses x with the memory summary. Call after update_memory for the same timestep.
inline Enhancement enhance_feature(const MemoryBank& bank, std::span<const double> x,
                                   const LocalizerConfig& cfg) {
  Enhancement out;
  out.z.resize(x.size());
  Vector mean_buf(bank.dim()), weighted_buf(bank.dim());
  out.lambda = detail::enhance_into(bank, x, cfg, out.z, mean_buf, weighted_buf);
  out.fused = out.lambda > 0.0;
  return out;
}

}  // namespace oztal
