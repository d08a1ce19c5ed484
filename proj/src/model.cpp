#include "atnj/model.hpp"

#include <bit>
#include <cmath>
#include <fstream>

#include "atnj/ops.hpp"
#include "atnj/tenio.hpp"

namespace atnj {

void ModelConfig::validate() const {
    if (channels == 0 || spatial == 0 || d_model == 0 || layers == 0 || mlp_hidden == 0) {
        throw InvalidConfig("model dims must be >= 1");
    }
    if (heads == 0 || d_model % heads != 0) {
        throw InvalidConfig("d_model must be divisible by heads");
    }
    if (heads != 1) {
        throw InvalidConfig("only heads=1 is supported");
    }
    if (d_model % 2 != 0) {
        throw InvalidConfig("d_model must be even for the sinusoidal embedding");
    }
}

std::size_t ModelConfig::param_count() const {
    const std::size_t d = d_model, m = mlp_hidden, c = channels;
    const std::size_t per_layer = 6 * d + 8 * d * d + (d * m + m + m * d + d);
    return layers * per_layer + (c * d + d) + (d * c + c) + (2 * d * d + 2 * d);
}

ModelWeights make_weights(const ModelConfig& config) {
    config.validate();
    const std::size_t d = config.d_model, m = config.mlp_hidden, c = config.channels;
    ModelWeights w;
    w.config = config;
    w.layers.resize(config.layers);
    for (auto& l : w.layers) {
        l.ln1_scale = Tensor({d});
        l.ln1_bias = Tensor({d});
        l.ln2_scale = Tensor({d});
        l.ln2_bias = Tensor({d});
        l.ln3_scale = Tensor({d});
        l.ln3_bias = Tensor({d});
        l.self_wq = Tensor({d, d});
        l.self_wk = Tensor({d, d});
        l.self_wv = Tensor({d, d});
        l.self_wo = Tensor({d, d});
        l.cross_wq = Tensor({d, d});
        l.cross_wk = Tensor({d, d});
        l.cross_wv = Tensor({d, d});
        l.cross_wo = Tensor({d, d});
        l.mlp_w1 = Tensor({d, m});
        l.mlp_b1 = Tensor({m});
        l.mlp_w2 = Tensor({m, d});
        l.mlp_b2 = Tensor({d});
    }
    w.in_w = Tensor({c, d});
    w.in_b = Tensor({d});
    w.out_w = Tensor({d, c});
    w.out_b = Tensor({c});
    w.time_w1 = Tensor({d, d});
    w.time_b1 = Tensor({d});
    w.time_w2 = Tensor({d, d});
    w.time_b2 = Tensor({d});
    return w;
}

namespace {

template <typename W, typename Fn>
void visit_params(W& w, const Fn& fn) {
    for (auto& l : w.layers) {
        fn(l.ln1_scale, ParamKind::LnScale);
        fn(l.ln1_bias, ParamKind::LnBias);
        fn(l.ln2_scale, ParamKind::LnScale);
        fn(l.ln2_bias, ParamKind::LnBias);
        fn(l.ln3_scale, ParamKind::LnScale);
        fn(l.ln3_bias, ParamKind::LnBias);
        fn(l.self_wq, ParamKind::Dense);
        fn(l.self_wk, ParamKind::Dense);
        fn(l.self_wv, ParamKind::Dense);
        fn(l.self_wo, ParamKind::Dense);
        fn(l.cross_wq, ParamKind::Dense);
        fn(l.cross_wk, ParamKind::Dense);
        fn(l.cross_wv, ParamKind::Dense);
        fn(l.cross_wo, ParamKind::Dense);
        fn(l.mlp_w1, ParamKind::Dense);
        fn(l.mlp_b1, ParamKind::Dense);
        fn(l.mlp_w2, ParamKind::Dense);
        fn(l.mlp_b2, ParamKind::Dense);
    }
    fn(w.in_w, ParamKind::Dense);
    fn(w.in_b, ParamKind::Dense);
    fn(w.out_w, ParamKind::Dense);
    fn(w.out_b, ParamKind::Dense);
    fn(w.time_w1, ParamKind::Dense);
    fn(w.time_b1, ParamKind::Dense);
    fn(w.time_w2, ParamKind::Dense);
    fn(w.time_b2, ParamKind::Dense);
}

}  // namespace

void ModelWeights::for_each_param(const std::function<void(Tensor&, ParamKind)>& fn) {
    visit_params(*this, fn);
}

void ModelWeights::for_each_param(const std::function<void(const Tensor&, ParamKind)>& fn) const {
    visit_params(*this, fn);
}

std::size_t ModelWeights::param_count() const {
    std::size_t n = 0;
    for_each_param([&](const Tensor& t, ParamKind) { n += t.numel(); });
    return n;
}

std::uint64_t ModelWeights::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for_each_param([&](const Tensor& t, ParamKind) {
        const std::uint64_t th = tensor_hash(t);
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(th >> (8 * i));
        h = fnv1a64(b, 8, h);
    });
    return h;
}

ModelWeights init_weights(const ModelConfig& config, std::uint64_t seed) {
    ModelWeights w = make_weights(config);
    Rng rng(seed);
    w.for_each_param([&](Tensor& t, ParamKind kind) {
        switch (kind) {
            case ParamKind::LnScale:
                for (float& v : t.values()) v = 1.0f;
                break;
            case ParamKind::LnBias:
                break;  // stays zero
            case ParamKind::Dense:
                rng.fill_normal(t.values(), 0.0, 0.02);
                break;
        }
    });
    return w;
}

void save_weights(const std::string& path, const ModelWeights& w) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os.write("MUNT", 4);
    wire::put_u8(os, 1);
    wire::put_u32(os, w.config.channels);
    wire::put_u32(os, w.config.spatial);
    wire::put_u32(os, w.config.d_model);
    wire::put_u32(os, w.config.heads);
    wire::put_u32(os, w.config.layers);
    wire::put_u32(os, w.config.mlp_hidden);
    wire::put_u32(os, std::bit_cast<std::uint32_t>(w.config.layernorm_eps));
    w.for_each_param([&](const Tensor& t, ParamKind) {
        for (float v : t.values()) wire::put_f32(os, v);
    });
    if (!os) throw IoError("write failed: " + path);
}

ModelWeights load_weights(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    wire::expect_magic(is, "MUNT", ".mw");
    if (wire::get_u8(is) != 1) throw ParseError(".mw: unsupported version");
    ModelConfig config;
    config.channels = wire::get_u32(is);
    config.spatial = wire::get_u32(is);
    config.d_model = wire::get_u32(is);
    config.heads = wire::get_u32(is);
    config.layers = wire::get_u32(is);
    config.mlp_hidden = wire::get_u32(is);
    config.layernorm_eps = std::bit_cast<float>(wire::get_u32(is));
    ModelWeights w = make_weights(config);
    w.for_each_param([&](Tensor& t, ParamKind) {
        for (float& v : t.values()) v = wire::get_f32(is);
    });
    return w;
}

PromptEmbedding embed_prompt(const std::vector<std::string>& words, const ModelConfig& config) {
    if (words.empty()) throw EmptyPrompt("prompt must contain at least one word");
    const std::size_t d = config.d_model;
    PromptEmbedding p;
    p.token_strings = words;
    p.tokens = Tensor({words.size(), d});
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t i = 0; i < words.size(); ++i) {
        Rng rng(fnv1a64(words[i].data(), words[i].size()));
        rng.fill_normal(std::span<float>(p.tokens.data() + i * d, d), 0.0, scale);
    }
    return p;
}

Tensor layernorm_rows(const Tensor& x, const Tensor& scale, const Tensor& bias, float eps) {
    const std::size_t rows = x.dim(0), cols = x.dim(1);
    if (scale.numel() != cols || bias.numel() != cols) {
        throw DimensionMismatch("layernorm: scale/bias length mismatch");
    }
    Tensor out(x.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const float* xr = x.data() + r * cols;
        double mean = 0.0;
        for (std::size_t c = 0; c < cols; ++c) mean += xr[c];
        mean /= static_cast<double>(cols);
        double var = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            const double d = xr[c] - mean;
            var += d * d;
        }
        var /= static_cast<double>(cols);
        const double inv = 1.0 / std::sqrt(var + static_cast<double>(eps));
        float* or_ = out.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) {
            or_[c] = static_cast<float>(static_cast<double>(scale[c]) * ((xr[c] - mean) * inv) +
                                        static_cast<double>(bias[c]));
        }
    }
    return out;
}

Tensor sinusoidal_time_embedding(std::uint32_t t, std::uint32_t d) {
    const std::size_t half = d / 2;
    Tensor emb({1, d});
    for (std::size_t i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) /
                                     static_cast<double>(half));
        const double a = static_cast<double>(t) * freq;
        emb[i] = static_cast<float>(std::sin(a));
        emb[half + i] = static_cast<float>(std::cos(a));
    }
    return emb;
}

Tensor to_tokens(const Tensor& x) {
    if (x.rank() != 3) throw DimensionMismatch("to_tokens expects [C,H,W]");
    const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor out({h * w, c});
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t xx = 0; xx < w; ++xx) {
                out.at2(y * w + xx, ch) = x.at3(ch, y, xx);
            }
        }
    }
    return out;
}

Tensor from_tokens(const Tensor& tokens, const ModelConfig& config) {
    const std::size_t h = config.spatial, w = config.spatial, c = config.channels;
    if (tokens.rank() != 2 || tokens.dim(0) != h * w || tokens.dim(1) != c) {
        throw DimensionMismatch("from_tokens: unexpected token shape");
    }
    Tensor out({c, h, w});
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t xx = 0; xx < w; ++xx) {
                out.at3(ch, y, xx) = tokens.at2(y * w + xx, ch);
            }
        }
    }
    return out;
}

void add_row_broadcast(Tensor& m, const Tensor& row) {
    const std::size_t rows = m.dim(0), cols = m.dim(1);
    if (row.numel() != cols) throw DimensionMismatch("row broadcast length mismatch");
    for (std::size_t r = 0; r < rows; ++r) {
        float* mr = m.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) mr[c] += row[c];
    }
}

Tensor relu(const Tensor& x) {
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) out[i] = x[i] > 0.0f ? x[i] : 0.0f;
    return out;
}

Tensor scaled_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                        Tensor* probs_out) {
    Tensor scores = matmul(q, transpose2(k));
    const float inv_sqrt_d = static_cast<float>(1.0 / std::sqrt(static_cast<double>(q.dim(1))));
    scale_inplace(scores, inv_sqrt_d);
    Tensor probs = softmax_rows(scores);
    Tensor out = matmul(probs, v);
    if (probs_out) *probs_out = std::move(probs);
    return out;
}

Tensor VanillaSelfAttn::run(const Tensor& f, const Tensor& k, const Tensor& v,
                            const AttnContext& ctx) {
    Tensor q = matmul(f, ctx.weights.self_wq);
    return scaled_attention(q, k, v);
}

Tensor VanillaCrossAttn::run(const Tensor& f, const Tensor& prompt,
                             const AttnContext& ctx, Tensor& probs) {
    Tensor q = matmul(f, ctx.weights.cross_wq);
    Tensor k = matmul(prompt, ctx.weights.cross_wk);
    Tensor v = matmul(prompt, ctx.weights.cross_wv);
    return scaled_attention(q, k, v, &probs);
}

namespace {

Tensor mlp_block(const Tensor& f, const LayerWeights& l) {
    Tensor h = matmul(f, l.mlp_w1);
    add_row_broadcast(h, l.mlp_b1);
    h = relu(h);
    Tensor out = matmul(h, l.mlp_w2);
    add_row_broadcast(out, l.mlp_b2);
    return out;
}

}  // namespace

ForwardResult forward(const Tensor& x, std::uint32_t t_index,
                      const PromptEmbedding& prompt, const ModelWeights& w,
                      SelfAttnProcessor& self_proc, CrossAttnProcessor& cross_proc) {
    const ModelConfig& cfg = w.config;
    if (x.rank() != 3 || x.dim(0) != cfg.channels || x.dim(1) != cfg.spatial ||
        x.dim(2) != cfg.spatial) {
        throw DimensionMismatch("forward: input shape does not match config");
    }
    if (prompt.tokens.rank() != 2 || prompt.tokens.dim(1) != cfg.d_model) {
        throw DimensionMismatch("forward: prompt embedding width mismatch");
    }

    Tensor h = matmul(to_tokens(x), w.in_w);
    add_row_broadcast(h, w.in_b);

    Tensor temb = sinusoidal_time_embedding(t_index, cfg.d_model);
    Tensor tfeat = matmul(temb, w.time_w1);
    add_row_broadcast(tfeat, w.time_b1);
    tfeat = relu(tfeat);
    tfeat = matmul(tfeat, w.time_w2);
    add_row_broadcast(tfeat, w.time_b2);
    add_row_broadcast(h, tfeat.reshaped({cfg.d_model}));

    ForwardResult res;
    res.tap.layers.resize(cfg.layers);
    for (std::size_t li = 0; li < cfg.layers; ++li) {
        const LayerWeights& l = w.layers[li];
        const AttnContext ctx{li, l, cfg};

        Tensor f1 = layernorm_rows(h, l.ln1_scale, l.ln1_bias, cfg.layernorm_eps);
        Tensor k = matmul(f1, l.self_wk);
        Tensor v = matmul(f1, l.self_wv);
        res.tap.layers[li].self_k = k;
        res.tap.layers[li].self_v = v;
        Tensor attn = self_proc.run(f1, k, v, ctx);
        add_scaled_inplace(h, matmul(attn, l.self_wo));

        Tensor f2 = layernorm_rows(h, l.ln2_scale, l.ln2_bias, cfg.layernorm_eps);
        Tensor probs;
        Tensor cross = cross_proc.run(f2, prompt.tokens, ctx, probs);
        res.tap.layers[li].cross_probs = std::move(probs);
        add_scaled_inplace(h, matmul(cross, l.cross_wo));

        Tensor f3 = layernorm_rows(h, l.ln3_scale, l.ln3_bias, cfg.layernorm_eps);
        add_scaled_inplace(h, mlp_block(f3, l));
        h.require_finite("forward activations");
    }

    Tensor eps_tokens = matmul(h, w.out_w);
    add_row_broadcast(eps_tokens, w.out_b);
    res.eps = from_tokens(eps_tokens, cfg);
    res.eps.require_finite("forward output");
    return res;
}

ForwardResult forward(const Tensor& x, std::uint32_t t_index,
                      const PromptEmbedding& prompt, const ModelWeights& w) {
    VanillaSelfAttn sp;
    VanillaCrossAttn cp;
    return forward(x, t_index, prompt, w, sp, cp);
}

}  // namespace atnj
