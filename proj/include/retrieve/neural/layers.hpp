// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "retrieve/neural/tape.hpp"
#include "retrieve/rng.hpp"

namespace retrieve::nn {

// Initializers register parameters under `name` in `p`. Weights are Glorot
// uniform drawn from `rng` in registration order; biases zero; gains one.
void init_linear(ParamMap& p, const std::string& name, int in, int out, Rng& rng);
/// widths = {in, hidden..., out}; layers are name.0, name.1, ...
void init_mlp(ParamMap& p, const std::string& name, const std::vector<int>& widths, Rng& rng);
void init_layer_norm(ParamMap& p, const std::string& name, int d);
void init_attention(ParamMap& p, const std::string& name, int d, Rng& rng);
void init_encoder_layer(ParamMap& p, const std::string& name, int d, int ff, Rng& rng);
void init_decoder_layer(ParamMap& p, const std::string& name, int d, int ff, Rng& rng);

// Graph builders. Lookup of a missing parameter throws ShapeError.
Var linear(Tape& t, ParamMap& p, const std::string& name, Var x);
/// ReLU between layers, linear output.
Var mlp(Tape& t, ParamMap& p, const std::string& name, Var x);
Var layer_norm(Tape& t, ParamMap& p, const std::string& name, Var x);
/// Keys and values of attention block `name`, projected from xkv.
struct KeyValue {
  Var k;
  Var v;
};
KeyValue project_kv(Tape& t, ParamMap& p, const std::string& name, Var xkv);
/// Projected multi-head attention: queries from xq, keys and values from xkv.
Var attention(Tape& t, ParamMap& p, const std::string& name, Var xq, Var xkv, int heads);
Var attention(Tape& t, ParamMap& p, const std::string& name, Var xq, const KeyValue& kv, int heads);
/// x + Attn(LN(x)), then + FF(LN(.)).
Var encoder_layer(Tape& t, ParamMap& p, const std::string& name, Var x, int heads);
/// q + SelfAttn(LN(q)), then + CrossAttn(LN(.), memory), then + FF(LN(.)).
/// `memory` is the cross block's projection of the encoder output, which
/// project_kv(t, p, name + ".cross", z) produces.
Var decoder_layer(Tape& t, ParamMap& p, const std::string& name, Var q, const KeyValue& memory, int heads);

}  // namespace retrieve::nn
