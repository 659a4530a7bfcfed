// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/nn/param_store.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>

#include "dnr/common/error.h"

namespace dnr::nn {
namespace {

static_assert(std::endian::native == std::endian::little,
              "weight files assume a little-endian host");

constexpr char kMagic[4] = {'D', 'N', 'R', 'W'};
constexpr std::uint32_t kMaxRank = 8;
constexpr std::uint32_t kMaxName = 4096;

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path)
      : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open weight file " + path.string());
  }

  template <typename T>
  T get(const char* what) {
    T v;
    read(reinterpret_cast<char*>(&v), sizeof(T), what);
    return v;
  }

  void read(char* dst, std::size_t n, const char* what) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw IoError("truncated weight file " + path_.string() + " (reading " +
                    what + ")");
    }
  }

  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
};

bool has_prefix(const std::string& s, const std::string& prefix) {
  return s.compare(0, prefix.size(), prefix) == 0;
}

}  // namespace

void write_tensor_file(const std::filesystem::path& path,
                       const NamedTensors& tensors) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(kMagic, 4);
    put<std::uint32_t>(out, kWeightFormatVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
    std::vector<float> buf;
    for (const auto& [name, t] : tensors) {
      put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
      for (auto d : t.shape()) put<std::uint64_t>(out, static_cast<std::uint64_t>(d));
      buf.assign(t.size(), 0.0f);
      for (std::size_t i = 0; i < t.size(); ++i) buf[i] = static_cast<float>(t[i]);
      out.write(reinterpret_cast<const char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

NamedTensors read_tensor_file(const std::filesystem::path& path) {
  Reader r(path);
  char magic[4];
  r.read(magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("bad magic in weight file " + path.string());
  }
  const auto version = r.get<std::uint32_t>("version");
  if (version != kWeightFormatVersion) {
    throw IoError("unsupported weight file version " + std::to_string(version) +
                  " in " + path.string());
  }
  const auto count = r.get<std::uint32_t>("count");
  NamedTensors out;
  std::set<std::string> seen;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.get<std::uint32_t>("name length");
    if (len == 0 || len > kMaxName) {
      throw IoError("corrupt tensor name length in " + path.string());
    }
    std::string name(len, '\0');
    r.read(name.data(), len, "name");
    if (!seen.insert(name).second) {
      throw IoError("duplicate tensor '" + name + "' in " + path.string());
    }
    const auto rank = r.get<std::uint32_t>("rank");
    if (rank > kMaxRank) {
      throw IoError("corrupt rank for tensor '" + name + "' in " + path.string());
    }
    Shape shape(rank);
    std::uint64_t total = 1;
    for (auto& d : shape) {
      const auto v = r.get<std::uint64_t>("dims");
      if (v > (1ULL << 32)) {
        throw IoError("corrupt dims for tensor '" + name + "' in " + path.string());
      }
      d = static_cast<std::int64_t>(v);
      total *= v;
      if (total > (1ULL << 34)) {
        throw IoError("tensor '" + name + "' too large in " + path.string());
      }
    }
    std::vector<float> buf(total);
    r.read(reinterpret_cast<char*>(buf.data()), total * sizeof(float), "payload");
    std::vector<double> data(buf.begin(), buf.end());
    out.emplace_back(name, Tensor(std::move(shape), std::move(data)));
  }
  if (!r.at_end()) {
    throw IoError("trailing bytes after last tensor in " + path.string());
  }
  return out;
}

Var ParamStore::add(const std::string& name, Tensor init, bool trainable) {
  if (entries_.count(name)) throw ConfigError("duplicate parameter name " + name);
  Var v(std::move(init), trainable, name);
  entries_.emplace(name, Entry{v, trainable});
  return v;
}

bool ParamStore::contains(const std::string& name) const {
  return entries_.count(name) != 0;
}

Var ParamStore::get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("unknown parameter " + name);
  return it->second.var;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  for (const auto& [name, e] : entries_) out.push_back(name);
  return out;
}

std::vector<Var> ParamStore::trainable(const std::string& prefix) const {
  std::vector<Var> out;
  for (const auto& [name, e] : entries_) {
    if (e.trainable && has_prefix(name, prefix)) out.push_back(e.var);
  }
  return out;
}

std::vector<std::pair<std::string, Var>> ParamStore::entries(
    const std::string& prefix) const {
  std::vector<std::pair<std::string, Var>> out;
  for (const auto& [name, e] : entries_) {
    if (has_prefix(name, prefix)) out.emplace_back(name, e.var);
  }
  return out;
}

std::int64_t ParamStore::parameter_count(const std::string& prefix) const {
  std::int64_t n = 0;
  for (const Var& v : trainable(prefix)) n += static_cast<std::int64_t>(v.value().size());
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [name, e] : entries_) e.var.zero_grad();
}

NamedTensors ParamStore::snapshot(const std::string& prefix) const {
  NamedTensors out;
  for (const auto& [name, e] : entries_) {
    if (has_prefix(name, prefix)) out.emplace_back(name, e.var.value());
  }
  return out;
}

void ParamStore::save(const std::filesystem::path& path,
                      const std::string& prefix) const {
  write_tensor_file(path, snapshot(prefix));
}

void ParamStore::load(const std::filesystem::path& path, bool strict,
                      const std::string& prefix) {
  assign(read_tensor_file(path), strict, prefix, path.string());
}

void ParamStore::assign(const NamedTensors& tensors, bool strict,
                        const std::string& prefix, const std::string& source) {
  std::set<std::string> provided;
  std::string unknown;
  for (const auto& [name, t] : tensors) {
    if (!has_prefix(name, prefix)) continue;
    provided.insert(name);
    auto it = entries_.find(name);
    if (it == entries_.end()) {
      if (strict) unknown += (unknown.empty() ? "" : ", ") + name;
      continue;
    }
    if (it->second.var.shape() != t.shape()) {
      throw ShapeError("tensor '" + name + "' in " + source + " has shape " +
                       shape_str(t.shape()) + ", expected " +
                       shape_str(it->second.var.shape()));
    }
  }
  std::string missing;
  for (const auto& [name, e] : entries_) {
    if (has_prefix(name, prefix) && !provided.count(name)) {
      missing += (missing.empty() ? "" : ", ") + name;
    }
  }
  if (strict && !missing.empty()) {
    throw ConfigError("missing tensors in " + source + ": " + missing);
  }
  if (!unknown.empty()) {
    throw ConfigError("unknown tensors in " + source + ": " + unknown);
  }
  for (const auto& [name, t] : tensors) {
    auto it = entries_.find(name);
    if (it == entries_.end() || !has_prefix(name, prefix)) continue;
    it->second.var.mutable_value() = t;
  }
}

}  // namespace dnr::nn
