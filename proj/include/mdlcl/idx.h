#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "mdlcl/tensor.h"

namespace mdlcl {

class IdxError : public std::runtime_error {
 public:
  enum class Kind { kIo, kBadMagic, kTruncated, kCountMismatch };
  IdxError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// An unsigned-byte IDX array: its dimension sizes and raw payload.
struct IdxArray {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> bytes;
};

/// Parses an in-memory IDX file whose magic must equal `expected_magic`.
IdxArray parse_idx(std::span<const std::uint8_t> file, std::uint32_t expected_magic);

/// Reads a whole file, transparently gunzipping it if compressed.
std::vector<std::uint8_t> read_file_maybe_gzip(const std::filesystem::path& path);

struct LabeledImages {
  Tensor examples;  // [n, rows*cols], values byte/255
  std::vector<int> labels;
};

LabeledImages load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

}  // namespace mdlcl
