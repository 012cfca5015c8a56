#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hictl/numerics/adam.hpp"
#include "hictl/numerics/params.hpp"

namespace hictl::train {

inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class DType : std::uint8_t { kF32 = 0, kF64 = 1, kU64 = 2, kBytes = 3 };

struct Record {
  std::string name;
  DType dtype = DType::kF32;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;  // little-endian payload
};

/// Ordered list of named records. File layout:
///   "HCTL" | u32 version | u64 payload length | records | u64 FNV-1a(payload)
/// with each record
///   u32 name length | name | u8 dtype | u8 rank | u32 dims[rank] | data.
/// Record order is kept, so save -> load -> save is byte-identical.
class Checkpoint {
 public:
  void put_f32(const std::string& name, const num::Tensor<float>& t);
  void put_f64(const std::string& name, const std::vector<double>& values);
  void put_u64(const std::string& name, std::uint64_t value);
  void put_bytes(const std::string& name, const std::string& bytes);

  bool has(const std::string& name) const { return find(name) != nullptr; }
  num::Tensor<float> f32(const std::string& name) const;
  std::vector<double> f64(const std::string& name) const;
  std::uint64_t u64(const std::string& name) const;
  std::string bytes(const std::string& name) const;
  /// Names starting with prefix, in file order.
  std::vector<std::string> names_with_prefix(const std::string& prefix) const;
  const std::vector<Record>& records() const { return records_; }

  std::vector<std::uint8_t> serialize() const;
  static Checkpoint deserialize(const std::vector<std::uint8_t>& file);
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

 private:
  const Record* find(const std::string& name) const;
  const Record& get(const std::string& name, DType dtype) const;
  void put(Record r);

  std::vector<Record> records_;
};

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size, std::uint64_t h = 0xcbf29ce484222325ULL);

/// Parameters under "<prefix>params/<name>".
void put_params(Checkpoint& ck, const std::string& prefix, const num::ParameterStore<float>& params);
num::ParameterStore<float> get_params(const Checkpoint& ck, const std::string& prefix);

/// Adam moments and counters under "<prefix>adam/...".
void put_adam(Checkpoint& ck, const std::string& prefix, const num::AdamState<float>& state,
              const num::ParameterStore<float>& params);
num::AdamState<float> get_adam(const Checkpoint& ck, const std::string& prefix);

}  // namespace hictl::train
