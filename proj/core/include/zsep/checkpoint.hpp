#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "zsep/analytic_denoiser.hpp"
#include "zsep/inversion.hpp"
#include "zsep/tiny_denoiser.hpp"

namespace zsep {

/// Binary layout, all integers little-endian:
///
///   "ZSEP" | u16 version | u32 record count
///   per record: u8 kind | u16 name length | name bytes | u8 ndims | u32 dims[ndims]
///               | u64 value count | f32 values[count]
enum class RecordKind : std::uint8_t { params = 1, gaussian_model = 2, grid = 3, trace_metadata = 4 };

inline constexpr std::uint16_t kCheckpointVersion = 1;

struct Record {
  RecordKind kind = RecordKind::grid;
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
  friend bool operator==(const Record&, const Record&) = default;
};

class Checkpoint {
 public:
  /// Throws if the name is taken.
  void add(Record r);
  const Record* find(std::string_view name) const;
  /// Throws FormatError when missing.
  const Record& get(std::string_view name) const;
  const std::vector<Record>& records() const { return records_; }
  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;

 private:
  std::vector<Record> records_;
};

std::string serialize(const Checkpoint& ckpt);
/// Throws FormatError on bad magic, version, truncation or trailing bytes.
Checkpoint deserialize(std::string_view bytes);
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

void add_grid(Checkpoint& ckpt, const std::string& name, const FeatureGrid& g);
FeatureGrid read_grid(const Checkpoint& ckpt, std::string_view name);

/// Records under "tiny/".
void add_tiny_params(Checkpoint& ckpt, const TinyDenoiserParams& p);
TinyDenoiserParams read_tiny_params(const Checkpoint& ckpt);

/// Records under "gauss/".
void add_gaussian_model(Checkpoint& ckpt, const GaussianSourceModel& m);
GaussianSourceModel read_gaussian_model(const Checkpoint& ckpt);

/// Records under "<prefix>/": meta, plan, c_inv, x_T and one grid per z.
void add_trace(Checkpoint& ckpt, const std::string& prefix, const InversionTrace& trace);
InversionTrace read_trace(const Checkpoint& ckpt, const std::string& prefix);

}  // namespace zsep
