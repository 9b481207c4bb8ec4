#include "mdlcl/idx.h"

#include <zlib.h>

#include <cstdio>
#include <string>

namespace mdlcl {

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
         std::uint32_t{b[at + 3]};
}

}  // namespace

IdxArray parse_idx(std::span<const std::uint8_t> file, std::uint32_t expected_magic) {
  using K = IdxError::Kind;
  if (file.size() < 4) throw IdxError(K::kTruncated, "IDX file shorter than its magic number");
  const std::uint32_t magic = read_be32(file, 0);
  if (magic != expected_magic) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "IDX magic 0x%08x, expected 0x%08x", magic, expected_magic);
    throw IdxError(K::kBadMagic, buf);
  }
  const std::size_t rank = magic & 0xff;
  if (file.size() < 4 + 4 * rank) throw IdxError(K::kTruncated, "IDX header truncated");
  IdxArray out;
  std::size_t count = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    out.dims.push_back(read_be32(file, 4 + 4 * i));
    count *= out.dims.back();
  }
  const std::size_t offset = 4 + 4 * rank;
  if (file.size() - offset < count)
    throw IdxError(K::kTruncated, "IDX payload has " + std::to_string(file.size() - offset) + " bytes, header promises " +
                                      std::to_string(count));
  out.bytes.assign(file.begin() + static_cast<std::ptrdiff_t>(offset),
                   file.begin() + static_cast<std::ptrdiff_t>(offset + count));
  return out;
}

std::vector<std::uint8_t> read_file_maybe_gzip(const std::filesystem::path& path) {
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (!f) throw IdxError(IdxError::Kind::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> out;
  std::uint8_t buf[1 << 16];
  for (;;) {
    const int n = gzread(f, buf, sizeof buf);
    if (n < 0) {
      gzclose(f);
      throw IdxError(IdxError::Kind::kIo, "read error in " + path.string());
    }
    if (n == 0) break;
    out.insert(out.end(), buf, buf + n);
  }
  gzclose(f);
  return out;
}

LabeledImages load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const IdxArray img = parse_idx(read_file_maybe_gzip(images), kIdxImageMagic);
  const IdxArray lab = parse_idx(read_file_maybe_gzip(labels), kIdxLabelMagic);
  if (img.dims.size() != 3) throw IdxError(IdxError::Kind::kBadMagic, "image file is not rank 3");
  if (img.dims[0] != lab.dims[0])
    throw IdxError(IdxError::Kind::kCountMismatch, std::to_string(img.dims[0]) + " images but " +
                                                       std::to_string(lab.dims[0]) + " labels");
  const std::size_t n = img.dims[0];
  const std::size_t d = std::size_t{img.dims[1]} * img.dims[2];
  LabeledImages out{Tensor({n, d}), {}};
  for (std::size_t i = 0; i < n * d; ++i) out.examples[i] = img.bytes[i] / 255.0;
  out.labels.assign(lab.bytes.begin(), lab.bytes.end());
  return out;
}

}  // namespace mdlcl
