#include "gmot/feat_file.hpp"

#include <cstring>
#include <fstream>

#include "gmot/error.hpp"

namespace gmot {

namespace {

void put_u32_le(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff),
               static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

std::uint32_t get_u32_le(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw Error(ErrorCode::Io, path + ": truncated header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

FeatFile FeatFile::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open feature file " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "FEAT", 4) != 0)
    throw Error(ErrorCode::Parse, path + ": bad magic, expected FEAT");
  FeatFile f;
  f.rows_ = get_u32_le(in, path);
  f.dim_ = get_u32_le(in, path);
  const std::size_t n = static_cast<std::size_t>(f.rows_) * f.dim_;
  f.data_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
      throw Error(ErrorCode::Io, path + ": truncated data");
    std::uint32_t bits = static_cast<std::uint32_t>(b[0]) |
                         (static_cast<std::uint32_t>(b[1]) << 8) |
                         (static_cast<std::uint32_t>(b[2]) << 16) |
                         (static_cast<std::uint32_t>(b[3]) << 24);
    float v;
    std::memcpy(&v, &bits, 4);
    f.data_[i] = v;
  }
  return f;
}

void FeatFile::write(const std::string& path, std::uint32_t dim,
                     const std::vector<std::vector<float>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write feature file " + path);
  out.write("FEAT", 4);
  put_u32_le(out, static_cast<std::uint32_t>(rows.size()));
  put_u32_le(out, dim);
  for (const std::vector<float>& row : rows) {
    if (row.size() != dim)
      throw Error(ErrorCode::InvalidArgument,
                  "feature row size mismatch in " + path);
    for (float v : row) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      put_u32_le(out, bits);
    }
  }
}

std::span<const float> FeatFile::row(std::uint32_t i) const {
  if (i >= rows_)
    throw Error(ErrorCode::InvalidArgument,
                "feature row " + std::to_string(i) + " out of range (" +
                    std::to_string(rows_) + " rows)");
  return std::span<const float>(data_.data() + static_cast<std::size_t>(i) * dim_, dim_);
}

}  // namespace gmot
