#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "atnj/rng.hpp"
#include "atnj/tensor.hpp"

namespace atnj {

struct ModelConfig {
    std::uint32_t channels = 4;
    std::uint32_t spatial = 8;  // H == W
    std::uint32_t d_model = 32;
    std::uint32_t heads = 1;
    std::uint32_t layers = 2;
    std::uint32_t mlp_hidden = 64;
    float layernorm_eps = 1e-5f;

    std::size_t tokens() const { return static_cast<std::size_t>(spatial) * spatial; }
    std::size_t param_count() const;
    void validate() const;
};

struct LayerWeights {
    Tensor ln1_scale, ln1_bias;   // pre self-attention
    Tensor ln2_scale, ln2_bias;   // pre cross-attention
    Tensor ln3_scale, ln3_bias;   // pre MLP
    Tensor self_wq, self_wk, self_wv, self_wo;      // [d x d], y = x * W
    Tensor cross_wq, cross_wk, cross_wv, cross_wo;  // [d x d]
    Tensor mlp_w1, mlp_b1, mlp_w2, mlp_b2;          // [d x m], [m], [m x d], [d]
};

enum class ParamKind { LnScale, LnBias, Dense };

// All denoiser parameters. Serialization order is the declaration order:
// per layer the layernorms, self-attention, cross-attention and MLP, then
// the input projection, output projection and time-embedding MLP.
struct ModelWeights {
    ModelConfig config;
    std::vector<LayerWeights> layers;
    Tensor in_w, in_b;     // [C x d], [d]
    Tensor out_w, out_b;   // [d x C], [C]
    Tensor time_w1, time_b1, time_w2, time_b2;  // [d x d], [d], [d x d], [d]

    void for_each_param(const std::function<void(Tensor&, ParamKind)>& fn);
    void for_each_param(const std::function<void(const Tensor&, ParamKind)>& fn) const;
    std::size_t param_count() const;
    std::uint64_t hash() const;
};

// Shapes allocated, values zero.
ModelWeights make_weights(const ModelConfig& config);

// Every dense parameter ~ N(0, 0.02) drawn in serialization order from one
// seeded stream; layernorm scales start at 1, biases at 0 (no draws).
ModelWeights init_weights(const ModelConfig& config, std::uint64_t seed);

// ".mw": magic "MUNT", u8 version=1, seven u32 config fields in declared
// order (layernorm_eps stored as its f32 bit pattern), then all parameters
// little-endian f32 in serialization order.
void save_weights(const std::string& path, const ModelWeights& w);
ModelWeights load_weights(const std::string& path);

struct PromptEmbedding {
    Tensor tokens;  // [N_txt x d]
    std::vector<std::string> token_strings;
};

// Toy text-encoder stand-in: each word's FNV-1a hash seeds an Rng and the
// row is N(0,1) * d^-1/2, so the same word always maps to the same row.
PromptEmbedding embed_prompt(const std::vector<std::string>& words, const ModelConfig& config);

// Per-layer features exposed to the other UNet: self-attention K/V as used
// (pre output projection) and the row-stochastic cross-attention map
// recorded before any masking or scaling.
struct AttentionTap {
    struct LayerTap {
        Tensor self_k, self_v;  // [N x d]
        Tensor cross_probs;     // [N x n_keys]
    };
    std::vector<LayerTap> layers;
};

struct AttnContext {
    std::size_t layer;
    const LayerWeights& weights;
    const ModelConfig& config;
};

// P = softmax(q k^T / sqrt(d)), out = P v; probs_out receives P when given.
Tensor scaled_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                        Tensor* probs_out = nullptr);

// Attention processor seam: the injector replaces these without touching
// the model. Both return the pre-output-projection result.
class SelfAttnProcessor {
public:
    virtual ~SelfAttnProcessor() = default;
    // f: normed tokens; k/v: this UNet's own projections of f.
    virtual Tensor run(const Tensor& f, const Tensor& k, const Tensor& v,
                       const AttnContext& ctx) = 0;
};

class CrossAttnProcessor {
public:
    virtual ~CrossAttnProcessor() = default;
    // probs receives the row-stochastic map to record in the tap.
    virtual Tensor run(const Tensor& f, const Tensor& prompt,
                       const AttnContext& ctx, Tensor& probs) = 0;
};

class VanillaSelfAttn final : public SelfAttnProcessor {
public:
    Tensor run(const Tensor& f, const Tensor& k, const Tensor& v,
               const AttnContext& ctx) override;
};

class VanillaCrossAttn final : public CrossAttnProcessor {
public:
    Tensor run(const Tensor& f, const Tensor& prompt,
               const AttnContext& ctx, Tensor& probs) override;
};

struct ForwardResult {
    Tensor eps;        // [C x H x W]
    AttentionTap tap;
};

// Pre-layernorm transformer denoiser pass. Tokens are the input projection
// of x plus the time-embedding MLP of a sinusoidal timestep feature; each
// layer runs self-attention, cross-attention over the prompt and a ReLU MLP,
// attention routed through the installed processors.
ForwardResult forward(const Tensor& x, std::uint32_t t_index,
                      const PromptEmbedding& prompt, const ModelWeights& w,
                      SelfAttnProcessor& self_proc, CrossAttnProcessor& cross_proc);

// Vanilla-processor convenience overload.
ForwardResult forward(const Tensor& x, std::uint32_t t_index,
                      const PromptEmbedding& prompt, const ModelWeights& w);

// Internals shared with the injector and tests.
Tensor layernorm_rows(const Tensor& x, const Tensor& scale, const Tensor& bias, float eps);
Tensor sinusoidal_time_embedding(std::uint32_t t, std::uint32_t d);  // [1 x d]
Tensor to_tokens(const Tensor& x);                                   // [C,H,W] -> [N, C]
Tensor from_tokens(const Tensor& tokens, const ModelConfig& config); // [N, C] -> [C,H,W]
void add_row_broadcast(Tensor& m, const Tensor& row);
Tensor relu(const Tensor& x);

}  // namespace atnj
