// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_NN_LAYERS_H_
#define DNR_NN_LAYERS_H_

#include <string>

#include "dnr/common/random.h"
#include "dnr/nn/ops.h"
#include "dnr/nn/param_store.h"

namespace dnr::nn {

// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(Shape shape, std::int64_t fan_in, std::int64_t fan_out,
                      Rng& rng);

enum class Init { kGlorot, kZero };

// y = x W + b over the last axis of a rank-2 input.
class Dense {
 public:
  Dense() = default;
  Dense(ParamStore& store, const std::string& name, std::int64_t in,
        std::int64_t out, Rng& rng, Init init = Init::kGlorot);
  Var operator()(const Var& x) const;

  Var weight, bias;
};

// Same-padded convolution along time: [L, Cin] -> [L, Cout].
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(ParamStore& store, const std::string& name, std::int64_t cin,
         std::int64_t cout, std::int64_t taps, Rng& rng,
         Init init = Init::kGlorot);
  Var operator()(const Var& x) const;

  Var weight, bias;
};

// [Cin, T, F] -> [Cout, T', F'].
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(ParamStore& store, const std::string& name, std::int64_t cin,
         std::int64_t cout, std::int64_t kt, std::int64_t kf,
         Conv2dGeometry geometry, Rng& rng);
  Var operator()(const Var& x) const;

  Var weight, bias;
  Conv2dGeometry geometry;
};

class Gru {
 public:
  Gru() = default;
  Gru(ParamStore& store, const std::string& name, std::int64_t in,
      std::int64_t hidden, Rng& rng);
  Var operator()(const Var& x) const { return gru(x, weights); }

  GruWeights weights;
};

// [N, In] -> [N, 2H]: forward states then time-aligned backward states.
class BiGru {
 public:
  BiGru() = default;
  BiGru(ParamStore& store, const std::string& name, std::int64_t in,
        std::int64_t hidden, Rng& rng);
  Var operator()(const Var& x) const;

  Gru forward, backward;
};

struct AttentionResult {
  Var output;      // [1, D]
  Tensor weights;  // [heads, M]
};

// Scaled dot-product attention of one query row against M key/value rows,
// split into heads along the feature axis. q: [1, D]; k, v: [M, D].
AttentionResult multi_head_attention(const Var& q, const Var& k, const Var& v,
                                     int heads);

// Attention of a query vector over trainable templates used as keys and
// values; heads are concatenated and projected.
class TemplateAttention {
 public:
  TemplateAttention() = default;
  TemplateAttention(ParamStore& store, const std::string& name,
                    std::int64_t query_dim, std::int64_t num_templates,
                    std::int64_t dim, int heads, Rng& rng);

  // query: [1, query_dim] -> token [1, dim].
  Var operator()(const Var& query) const { return attend(query).output; }
  AttentionResult attend(const Var& query) const;

  Var templates;
  Dense query_proj, key_proj, value_proj, out_proj;
  int heads = 1;
};

}  // namespace dnr::nn

#endif  // DNR_NN_LAYERS_H_
