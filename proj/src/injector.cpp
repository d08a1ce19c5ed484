#include "atnj/injector.hpp"

#include <cmath>
#include <fstream>

#include "atnj/ops.hpp"

namespace atnj {

void InjectionConfig::validate(std::size_t n_prompt_gen, std::size_t n_prompt_ref) const {
    if (!(w_s > 0.0) || !(w_c > 0.0)) throw InvalidConfig("w_s and w_c must be > 0");
    if (mask_steps == 0 || mask_steps > total_steps) {
        throw InvalidConfig("require 0 < mask_steps <= total_steps");
    }
    if (coarse_token_gen >= n_prompt_gen) {
        throw TokenIndexOutOfRange("coarse token index out of range for generation prompt");
    }
    if (coarse_token_ref >= n_prompt_ref) {
        throw TokenIndexOutOfRange("coarse token index out of range for reference prompt");
    }
}

std::uint64_t ConceptMask::hash() const {
    std::uint64_t h = tensor_hash(m_g);
    const std::uint64_t h2 = tensor_hash(m_r);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(h2 >> (8 * i));
    return fnv1a64(b, 8, h);
}

Tensor extract_mask(const Tensor& a_col) {
    Tensor n1 = minmax_normalize(a_col);
    for (float& v : n1.values()) v -= 0.5f;
    return minmax_normalize(sigmoid(n1));
}

Tensor union_masks(const std::vector<Tensor>& masks) {
    if (masks.empty()) throw EmptyList("union_masks: empty list");
    Tensor out = masks[0];
    for (std::size_t i = 1; i < masks.size(); ++i) {
        if (!masks[i].same_shape(out)) throw DimensionMismatch("union_masks: shape mismatch");
        for (std::size_t j = 0; j < out.numel(); ++j) {
            out[j] = masks[i][j] > out[j] ? masks[i][j] : out[j];
        }
    }
    return out;
}

bool step_gate(std::uint32_t step_s, const InjectionConfig& cfg) {
    if (step_s < 1 || step_s > cfg.total_steps) {
        throw InvalidStep("step_gate: step out of range");
    }
    return step_s > cfg.mask_steps;
}

namespace {

// Layer-averaged column of the coarse token across the tap's cross maps.
Tensor averaged_coarse_column(const AttentionTap& tap, std::size_t token) {
    if (tap.layers.empty()) throw EmptyList("tap has no layers");
    const std::size_t n = tap.layers[0].cross_probs.dim(0);
    Tensor col({n});
    std::vector<double> acc(n, 0.0);
    for (const auto& layer : tap.layers) {
        const Tensor& p = layer.cross_probs;
        if (token >= p.dim(1)) throw TokenIndexOutOfRange("coarse token beyond tap map");
        for (std::size_t r = 0; r < n; ++r) acc[r] += p.at2(r, token);
    }
    const double inv = 1.0 / static_cast<double>(tap.layers.size());
    for (std::size_t r = 0; r < n; ++r) col[r] = static_cast<float>(acc[r] * inv);
    return col;
}

}  // namespace

void accumulate_mask_step(const AttentionTap& tap_gen, const AttentionTap& tap_ref,
                          const InjectionConfig& cfg, std::uint32_t step_s,
                          ConceptMask& state) {
    if (state.frozen || step_s > cfg.mask_steps) {
        throw AlreadyFrozen("mask accumulation past the initialization window");
    }
    if (step_s != state.raw_g.size() + 1) {
        throw InvalidStep("mask accumulation must run in step order");
    }
    Tensor col_g = averaged_coarse_column(tap_gen, cfg.coarse_token_gen);
    Tensor col_r = averaged_coarse_column(tap_ref, cfg.coarse_token_ref);
    state.masks_g.push_back(extract_mask(col_g));
    state.masks_r.push_back(extract_mask(col_r));
    state.raw_g.push_back(std::move(col_g));
    state.raw_r.push_back(std::move(col_r));
    if (step_s == cfg.mask_steps) {
        state.m_g = union_masks(state.masks_g);
        state.m_r = union_masks(state.masks_r);
        state.frozen = true;
    }
}

namespace {

Tensor masked_self_core(const Tensor& f_g, const Tensor& k_r, const Tensor& v_r,
                        const LayerWeights& w, const ConceptMask& mask,
                        const InjectionConfig& cfg, std::uint32_t step_s) {
    const bool active = step_gate(step_s, cfg) && cfg.enable_self_inject;
    Tensor q = matmul(f_g, w.self_wq);
    Tensor k_g = matmul(f_g, w.self_wk);
    Tensor v_g = matmul(f_g, w.self_wv);
    if (!active) {
        return scaled_attention(q, k_g, v_g);
    }
    if (cfg.enable_mask && !mask.frozen) {
        throw MaskNotReady("self-attention injection requires a frozen mask");
    }
    if (!k_r.same_shape(k_g) || !v_r.same_shape(v_g)) {
        throw DimensionMismatch("reference K/V shape mismatch");
    }

    const std::size_t n = f_g.dim(0);
    Tensor k_full = concat(k_g, k_r, 0);
    Tensor v_full = concat(v_g, v_r, 0);
    Tensor scores = matmul(q, transpose2(k_full));
    const float inv_sqrt_d =
        static_cast<float>(1.0 / std::sqrt(static_cast<double>(q.dim(1))));
    scale_inplace(scores, inv_sqrt_d);
    Tensor probs = softmax_rows(scores);  // [n x 2n]

    // Block masking over key columns: generator block gets (1 - M_G),
    // reference block gets M_R. No renormalization afterwards.
    if (cfg.enable_mask) {
        if (mask.m_g.numel() != n || mask.m_r.numel() != n) {
            throw DimensionMismatch("mask length mismatch");
        }
        for (std::size_t r = 0; r < n; ++r) {
            float* row = probs.data() + r * 2 * n;
            for (std::size_t j = 0; j < n; ++j) row[j] *= 1.0f - mask.m_g[j];
            for (std::size_t j = 0; j < n; ++j) row[n + j] *= mask.m_r[j];
        }
    }

    const float ws = static_cast<float>(cfg.w_s);
    if (cfg.scale_scope == ScaleScope::All) {
        scale_inplace(probs, ws);
    } else {
        for (std::size_t r = 0; r < n; ++r) {
            float* row = probs.data() + r * 2 * n;
            for (std::size_t j = 0; j < n; ++j) row[n + j] *= ws;
        }
    }
    return matmul(probs, v_full);
}

}  // namespace

Tensor masked_self_attention_kv(const Tensor& f_g, const Tensor& k_r, const Tensor& v_r,
                                const LayerWeights& w, const ConceptMask& mask,
                                const InjectionConfig& cfg, std::uint32_t step_s) {
    return masked_self_core(f_g, k_r, v_r, w, mask, cfg, step_s);
}

Tensor masked_self_attention(const Tensor& f_g, const Tensor& f_r,
                             const LayerWeights& w, const ConceptMask& mask,
                             const InjectionConfig& cfg, std::uint32_t step_s) {
    if (!f_r.same_shape(f_g)) throw DimensionMismatch("f_g/f_r shape mismatch");
    Tensor k_r = matmul(f_r, w.self_wk);
    Tensor v_r = matmul(f_r, w.self_wv);
    return masked_self_core(f_g, k_r, v_r, w, mask, cfg, step_s);
}

Tensor cross_attention_inject(const Tensor& f_g, const Tensor& prompt,
                              const ConceptFeatures& fc, const LayerWeights& w,
                              const InjectionConfig& cfg, std::uint32_t step_s,
                              Tensor* probs_out) {
    const bool active = step_gate(step_s, cfg) && cfg.enable_cross_inject;
    Tensor q = matmul(f_g, w.cross_wq);
    if (!active) {
        Tensor k = matmul(prompt, w.cross_wk);
        Tensor v = matmul(prompt, w.cross_wv);
        return scaled_attention(q, k, v, probs_out);
    }

    const bool has_concept = fc.count() > 0;
    Tensor keys_src = has_concept ? concat(prompt, fc.f, 0) : prompt;
    Tensor k = matmul(keys_src, w.cross_wk);
    Tensor v = matmul(keys_src, w.cross_wv);
    Tensor scores = matmul(q, transpose2(k));
    const float inv_sqrt_d =
        static_cast<float>(1.0 / std::sqrt(static_cast<double>(q.dim(1))));
    scale_inplace(scores, inv_sqrt_d);
    Tensor probs = softmax_rows(scores);
    if (probs_out) *probs_out = probs;

    const float wc = static_cast<float>(cfg.w_c);
    if (cfg.scale_scope == ScaleScope::All) {
        scale_inplace(probs, wc);
    } else {
        const std::size_t n_txt = prompt.dim(0);
        const std::size_t cols = probs.dim(1);
        for (std::size_t r = 0; r < probs.dim(0); ++r) {
            float* row = probs.data() + r * cols;
            for (std::size_t j = n_txt; j < cols; ++j) row[j] *= wc;
        }
    }
    return matmul(probs, v);
}

Tensor InjectSelfAttn::run(const Tensor& f, const Tensor& k, const Tensor& v,
                           const AttnContext& ctx) {
    const bool active = step_gate(state_.step_s, state_.cfg) && state_.cfg.enable_self_inject;
    if (!active) {
        Tensor q = matmul(f, ctx.weights.self_wq);
        return scaled_attention(q, k, v);
    }
    if (!state_.ref_tap || ctx.layer >= state_.ref_tap->layers.size()) {
        throw MissingInput("self-attention injection requires the reference tap");
    }
    const auto& ref = state_.ref_tap->layers[ctx.layer];
    return masked_self_attention_kv(f, ref.self_k, ref.self_v, ctx.weights,
                                    state_.mask, state_.cfg, state_.step_s);
}

Tensor InjectCrossAttn::run(const Tensor& f, const Tensor& prompt,
                            const AttnContext& ctx, Tensor& probs) {
    return cross_attention_inject(f, prompt, state_.concept_features, ctx.weights,
                                  state_.cfg, state_.step_s, &probs);
}

void save_mask_pgm(const std::string& path, const Tensor& mask, std::size_t side) {
    if (mask.numel() != side * side) throw DimensionMismatch("mask size vs side mismatch");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << "P5\n" << side << " " << side << "\n255\n";
    for (float v : mask.values()) {
        float c = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
        os.put(static_cast<char>(static_cast<int>(std::lround(c * 255.0f))));
    }
    if (!os) throw IoError("write failed: " + path);
}

}  // namespace atnj
