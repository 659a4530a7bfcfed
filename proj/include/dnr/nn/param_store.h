// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_NN_PARAM_STORE_H_
#define DNR_NN_PARAM_STORE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dnr/nn/autograd.h"

namespace dnr::nn {

inline constexpr std::uint32_t kWeightFormatVersion = 1;

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

// Weight file layout (little endian):
//   "DNRW" | u32 version | u32 count |
//   count x { u32 name_len | name | u32 rank | u64 dims[rank] | f32 data }
// Written to a temporary sibling and renamed into place.
void write_tensor_file(const std::filesystem::path& path,
                       const NamedTensors& tensors);
NamedTensors read_tensor_file(const std::filesystem::path& path);

// Named parameters and buffers, iterated in sorted name order.
class ParamStore {
 public:
  // Registers a new entry; duplicate names are a ConfigError.
  Var add(const std::string& name, Tensor init, bool trainable = true);

  bool contains(const std::string& name) const;
  Var get(const std::string& name) const;
  std::vector<std::string> names() const;

  // Trainable entries whose name starts with prefix.
  std::vector<Var> trainable(const std::string& prefix = "") const;
  std::vector<std::pair<std::string, Var>> entries(
      const std::string& prefix = "") const;
  std::int64_t parameter_count(const std::string& prefix = "") const;

  void zero_grad();

  NamedTensors snapshot(const std::string& prefix = "") const;
  void save(const std::filesystem::path& path,
            const std::string& prefix = "") const;

  // Copies tensors into registered entries. Strict mode requires the file
  // and the store (restricted to prefix) to hold exactly the same names.
  void load(const std::filesystem::path& path, bool strict = true,
            const std::string& prefix = "");
  void assign(const NamedTensors& tensors, bool strict,
              const std::string& prefix, const std::string& source);

 private:
  struct Entry {
    Var var;
    bool trainable;
  };
  std::map<std::string, Entry> entries_;
};

}  // namespace dnr::nn

#endif  // DNR_NN_PARAM_STORE_H_
