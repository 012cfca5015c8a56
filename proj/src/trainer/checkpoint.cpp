#include "hictl/trainer/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "hictl/error.hpp"

namespace hictl::train {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'H', 'C', 'T', 'L'};

template <class V>
void append(std::vector<std::uint8_t>& out, V v) {
  std::uint8_t buf[sizeof(V)];
  std::memcpy(buf, &v, sizeof(V));
  out.insert(out.end(), buf, buf + sizeof(V));
}

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& data, std::size_t begin, std::size_t end)
      : data_(data), pos_(begin), end_(end) {}

  template <class V>
  V read() {
    need(sizeof(V));
    V v;
    std::memcpy(&v, data_.data() + pos_, sizeof(V));
    pos_ += sizeof(V);
    return v;
  }

  std::vector<std::uint8_t> bytes(std::size_t n) {
    need(n);
    std::vector<std::uint8_t> out(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                  data_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
  }

  bool done() const { return pos_ == end_; }

 private:
  void need(std::size_t n) const {
    if (end_ - pos_ < n) throw CheckpointError("checkpoint truncated inside a record");
  }
  const std::vector<std::uint8_t>& data_;
  std::size_t pos_;
  std::size_t end_;
};

std::size_t element_size(DType t) {
  switch (t) {
    case DType::kF32: return 4;
    case DType::kF64: return 8;
    case DType::kU64: return 8;
    case DType::kBytes: return 1;
  }
  throw CheckpointError("unknown dtype tag");
}

std::size_t element_count(const std::vector<std::uint32_t>& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

template <class V>
std::vector<std::uint8_t> raw_bytes(const V* p, std::size_t n) {
  std::vector<std::uint8_t> out(n * sizeof(V));
  if (n) std::memcpy(out.data(), p, out.size());
  return out;
}

}  // namespace

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size, std::uint64_t h) {
  for (std::size_t i = 0; i < size; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

void Checkpoint::put(Record r) {
  if (has(r.name)) throw CheckpointError("duplicate checkpoint record '" + r.name + "'");
  records_.push_back(std::move(r));
}

void Checkpoint::put_f32(const std::string& name, const num::Tensor<float>& t) {
  Record r{name, DType::kF32, {}, raw_bytes(t.data(), t.size())};
  for (int d : t.dims()) r.dims.push_back(static_cast<std::uint32_t>(d));
  put(std::move(r));
}

void Checkpoint::put_f64(const std::string& name, const std::vector<double>& values) {
  put({name, DType::kF64, {static_cast<std::uint32_t>(values.size())}, raw_bytes(values.data(), values.size())});
}

void Checkpoint::put_u64(const std::string& name, std::uint64_t value) {
  put({name, DType::kU64, {}, raw_bytes(&value, 1)});
}

void Checkpoint::put_bytes(const std::string& name, const std::string& bytes) {
  put({name, DType::kBytes, {static_cast<std::uint32_t>(bytes.size())},
       std::vector<std::uint8_t>(bytes.begin(), bytes.end())});
}

const Record* Checkpoint::find(const std::string& name) const {
  for (const auto& r : records_) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

const Record& Checkpoint::get(const std::string& name, DType dtype) const {
  const Record* r = find(name);
  if (!r) throw CheckpointError("checkpoint has no record '" + name + "'");
  if (r->dtype != dtype) throw CheckpointError("checkpoint record '" + name + "' has an unexpected type");
  return *r;
}

num::Tensor<float> Checkpoint::f32(const std::string& name) const {
  const Record& r = get(name, DType::kF32);
  num::Shape dims;
  for (auto d : r.dims) dims.push_back(static_cast<int>(d));
  std::vector<float> v(r.data.size() / 4);
  if (!v.empty()) std::memcpy(v.data(), r.data.data(), r.data.size());
  return num::Tensor<float>(std::move(dims), std::move(v));
}

std::vector<double> Checkpoint::f64(const std::string& name) const {
  const Record& r = get(name, DType::kF64);
  std::vector<double> v(r.data.size() / 8);
  if (!v.empty()) std::memcpy(v.data(), r.data.data(), r.data.size());
  return v;
}

std::uint64_t Checkpoint::u64(const std::string& name) const {
  const Record& r = get(name, DType::kU64);
  std::uint64_t v;
  std::memcpy(&v, r.data.data(), 8);
  return v;
}

std::string Checkpoint::bytes(const std::string& name) const {
  const Record& r = get(name, DType::kBytes);
  return std::string(r.data.begin(), r.data.end());
}

std::vector<std::string> Checkpoint::names_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& r : records_) {
    if (r.name.starts_with(prefix)) out.push_back(r.name);
  }
  return out;
}

std::vector<std::uint8_t> Checkpoint::serialize() const {
  std::vector<std::uint8_t> payload;
  for (const auto& r : records_) {
    append<std::uint32_t>(payload, static_cast<std::uint32_t>(r.name.size()));
    payload.insert(payload.end(), r.name.begin(), r.name.end());
    append<std::uint8_t>(payload, static_cast<std::uint8_t>(r.dtype));
    append<std::uint8_t>(payload, static_cast<std::uint8_t>(r.dims.size()));
    for (auto d : r.dims) append<std::uint32_t>(payload, d);
    payload.insert(payload.end(), r.data.begin(), r.data.end());
  }
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  append<std::uint32_t>(out, kCheckpointVersion);
  append<std::uint64_t>(out, payload.size());
  out.insert(out.end(), payload.begin(), payload.end());
  append<std::uint64_t>(out, fnv1a64(payload.data(), payload.size()));
  return out;
}

Checkpoint Checkpoint::deserialize(const std::vector<std::uint8_t>& file) {
  constexpr std::size_t kHeader = 4 + 4 + 8;
  if (file.size() < kHeader + 8) throw CheckpointError("checkpoint truncated: header incomplete");
  if (std::memcmp(file.data(), kMagic, 4) != 0) throw CheckpointError("not a checkpoint file (bad magic)");
  Reader header(file, 4, kHeader);
  const auto version = header.read<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  const auto length = header.read<std::uint64_t>();
  if (length > file.size() - kHeader - 8 || file.size() != kHeader + length + 8) {
    throw CheckpointError("checkpoint truncated or padded: payload length mismatch");
  }
  std::uint64_t stored;
  std::memcpy(&stored, file.data() + kHeader + length, 8);
  if (fnv1a64(file.data() + kHeader, length) != stored) throw CheckpointError("checkpoint checksum mismatch");

  Checkpoint ck;
  Reader rd(file, kHeader, kHeader + length);
  while (!rd.done()) {
    Record r;
    const auto name_len = rd.read<std::uint32_t>();
    const auto name = rd.bytes(name_len);
    r.name.assign(name.begin(), name.end());
    r.dtype = static_cast<DType>(rd.read<std::uint8_t>());
    const auto rank = rd.read<std::uint8_t>();
    for (int i = 0; i < rank; ++i) r.dims.push_back(rd.read<std::uint32_t>());
    r.data = rd.bytes(element_count(r.dims) * element_size(r.dtype));
    ck.put(std::move(r));
  }
  return ck;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

void put_params(Checkpoint& ck, const std::string& prefix, const num::ParameterStore<float>& params) {
  for (const auto& p : params) ck.put_f32(prefix + "params/" + p.name, p.value);
}

num::ParameterStore<float> get_params(const Checkpoint& ck, const std::string& prefix) {
  num::ParameterStore<float> out;
  const std::string head = prefix + "params/";
  for (const auto& name : ck.names_with_prefix(head)) out.add(name.substr(head.size()), ck.f32(name));
  return out;
}

void put_adam(Checkpoint& ck, const std::string& prefix, const num::AdamState<float>& state,
              const num::ParameterStore<float>& params) {
  ck.put_f64(prefix + "adam/hyper", {state.beta1, state.beta2, state.epsilon});
  ck.put_u64(prefix + "adam/step", static_cast<std::uint64_t>(state.step));
  std::size_t i = 0;
  for (const auto& p : params) {
    if (i < state.m.size()) {
      ck.put_f32(prefix + "adam/m/" + p.name, state.m[i]);
      ck.put_f32(prefix + "adam/v/" + p.name, state.v[i]);
    }
    ++i;
  }
}

num::AdamState<float> get_adam(const Checkpoint& ck, const std::string& prefix) {
  num::AdamState<float> st;
  const auto hyper = ck.f64(prefix + "adam/hyper");
  if (hyper.size() != 3) throw CheckpointError("malformed adam hyperparameters");
  st.beta1 = hyper[0];
  st.beta2 = hyper[1];
  st.epsilon = hyper[2];
  st.step = static_cast<std::int64_t>(ck.u64(prefix + "adam/step"));
  for (const auto& name : ck.names_with_prefix(prefix + "adam/m/")) st.m.push_back(ck.f32(name));
  for (const auto& name : ck.names_with_prefix(prefix + "adam/v/")) st.v.push_back(ck.f32(name));
  if (st.m.size() != st.v.size()) throw CheckpointError("adam moments incomplete");
  return st;
}

}  // namespace hictl::train
