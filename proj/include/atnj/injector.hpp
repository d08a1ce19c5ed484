#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "atnj/model.hpp"
#include "atnj/tensor.hpp"

namespace atnj {

enum class ScaleScope {
    All,           // scale the whole attention matrix
    InjectedOnly,  // scale only the injected key block
};

// Every knob of the injection mechanism.
struct InjectionConfig {
    double w_s = 1.0;  // self-attention output scale
    double w_c = 1.0;  // cross-attention output scale
    std::uint32_t mask_steps = 2;     // k: steps that only initialize masks
    std::uint32_t total_steps = 50;   // T: total denoise steps
    std::size_t coarse_token_gen = 0;
    std::size_t coarse_token_ref = 0;
    ScaleScope scale_scope = ScaleScope::All;
    bool enable_self_inject = true;
    bool enable_cross_inject = true;
    bool enable_mask = true;

    void validate(std::size_t n_prompt_gen, std::size_t n_prompt_ref) const;
};

// Soft spatial masks over generation and reference tokens, built from the
// coarse token's cross-attention columns of the first mask_steps steps and
// frozen afterwards.
struct ConceptMask {
    Tensor m_g;  // [N], in [0,1]
    Tensor m_r;  // [N]
    std::vector<Tensor> raw_g, raw_r;      // per-step layer-averaged A^K columns
    std::vector<Tensor> masks_g, masks_r;  // per-step extracted masks
    bool frozen = false;

    std::uint64_t hash() const;
};

// Concept-encoder output tokens; empty means cross-injection degenerates
// to vanilla cross-attention.
struct ConceptFeatures {
    Tensor f;  // [N_c x d] or default-constructed for N_c = 0
    std::size_t count() const { return f.empty() ? 0 : f.dim(0); }
};

// normalize -> shift by 0.5 -> sigmoid -> normalize. Output spans exactly
// [0,1] for non-constant input; constant input yields the zero mask.
Tensor extract_mask(const Tensor& a_col);

// Elementwise maximum (soft-mask union).
Tensor union_masks(const std::vector<Tensor>& masks);

// True (inject) iff step_s > mask_steps, with step_s counting denoise steps
// from 1 at the noisiest.
bool step_gate(std::uint32_t step_s, const InjectionConfig& cfg);

// Folds one step's taps into the mask state; freezes at step mask_steps.
void accumulate_mask_step(const AttentionTap& tap_gen, const AttentionTap& tap_ref,
                          const InjectionConfig& cfg, std::uint32_t step_s,
                          ConceptMask& state);

// Masked self-attention injection: concatenate reference K/V behind the
// generator's own, block-mask the attention matrix ((1 - M_G) on generator
// key columns, M_R on reference key columns), scale by w_s, multiply by V.
// No renormalization after masking. Inactive steps fall back to vanilla
// attention over the generator features alone.
Tensor masked_self_attention(const Tensor& f_g, const Tensor& f_r,
                             const LayerWeights& w, const ConceptMask& mask,
                             const InjectionConfig& cfg, std::uint32_t step_s);

// Same computation from already-projected reference K/V (bit-identical to
// projecting the concatenated features, since the shared projection acts
// row-wise).
Tensor masked_self_attention_kv(const Tensor& f_g, const Tensor& k_r, const Tensor& v_r,
                                const LayerWeights& w, const ConceptMask& mask,
                                const InjectionConfig& cfg, std::uint32_t step_s);

// Cross-attention direct detail injection: concatenate concept tokens behind
// the prompt K/V and scale the attention matrix by w_c. probs_out, when
// given, receives the row-stochastic map before scaling.
Tensor cross_attention_inject(const Tensor& f_g, const Tensor& prompt,
                              const ConceptFeatures& fc, const LayerWeights& w,
                              const InjectionConfig& cfg, std::uint32_t step_s,
                              Tensor* probs_out = nullptr);

// Mutable per-generation context shared by the injection processors.
struct InjectionState {
    InjectionConfig cfg;
    ConceptMask mask;
    const AttentionTap* ref_tap = nullptr;  // current step's reference tap
    ConceptFeatures concept_features;
    std::uint32_t step_s = 0;
};

class InjectSelfAttn final : public SelfAttnProcessor {
public:
    explicit InjectSelfAttn(InjectionState& state) : state_(state) {}
    Tensor run(const Tensor& f, const Tensor& k, const Tensor& v,
               const AttnContext& ctx) override;

private:
    InjectionState& state_;
};

class InjectCrossAttn final : public CrossAttnProcessor {
public:
    explicit InjectCrossAttn(InjectionState& state) : state_(state) {}
    Tensor run(const Tensor& f, const Tensor& prompt,
               const AttnContext& ctx, Tensor& probs) override;

private:
    InjectionState& state_;
};

// 8x8 binary PGM (P5), values rounded onto 0..255.
void save_mask_pgm(const std::string& path, const Tensor& mask, std::size_t side);

}  // namespace atnj
