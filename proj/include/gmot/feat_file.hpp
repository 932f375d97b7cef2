#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gmot {

/// Appearance sidecar format: 4-byte magic "FEAT", u32 LE row count,
/// u32 LE dim, then row-major f32 LE values. Row k is the k-th detection
/// of the sequence in frame-major order.
class FeatFile {
 public:
  static FeatFile load(const std::string& path);
  static void write(const std::string& path, std::uint32_t dim,
                    const std::vector<std::vector<float>>& rows);

  std::uint32_t rows() const { return rows_; }
  std::uint32_t dim() const { return dim_; }
  std::span<const float> row(std::uint32_t i) const;

 private:
  std::uint32_t rows_ = 0;
  std::uint32_t dim_ = 0;
  std::vector<float> data_;
};

}  // namespace gmot
