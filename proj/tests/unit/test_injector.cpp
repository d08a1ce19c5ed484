#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "atnj/injector.hpp"
#include "atnj/ops.hpp"
#include "test_helpers.hpp"

using namespace atnj;
using test::random_tensor;

namespace {

ConceptMask transparent_mask(std::size_t n) {
    ConceptMask m;
    m.m_g = Tensor({n});                  // zeros: generator block keeps weight 1
    m.m_r = Tensor::full({n}, 1.0f);      // ones: reference block transparent
    m.frozen = true;
    return m;
}

LayerWeights random_layer(Rng& rng, std::size_t d, double scale = 0.3) {
    LayerWeights w;
    w.self_wq = random_tensor(rng, {d, d}, scale);
    w.self_wk = random_tensor(rng, {d, d}, scale);
    w.self_wv = random_tensor(rng, {d, d}, scale);
    w.cross_wq = random_tensor(rng, {d, d}, scale);
    w.cross_wk = random_tensor(rng, {d, d}, scale);
    w.cross_wv = random_tensor(rng, {d, d}, scale);
    return w;
}

// f64 brute-force oracle for masked concatenated self-attention.
Tensor masked_attention_oracle(const Tensor& f_g, const Tensor& f_r,
                               const LayerWeights& w, const ConceptMask& mask,
                               const InjectionConfig& cfg) {
    const std::size_t n = f_g.dim(0), d = w.self_wq.dim(1);
    Tensor q = test::matmul_oracle(f_g, w.self_wq);
    Tensor kg = test::matmul_oracle(f_g, w.self_wk);
    Tensor kr = test::matmul_oracle(f_r, w.self_wk);
    Tensor vg = test::matmul_oracle(f_g, w.self_wv);
    Tensor vr = test::matmul_oracle(f_r, w.self_wv);
    Tensor out({n, d});
    for (std::size_t r = 0; r < n; ++r) {
        std::vector<double> logits(2 * n);
        for (std::size_t j = 0; j < 2 * n; ++j) {
            double dot = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double kv = j < n ? kg.at2(j, c) : kr.at2(j - n, c);
                dot += static_cast<double>(q.at2(r, c)) * kv;
            }
            logits[j] = dot / std::sqrt(static_cast<double>(d));
        }
        double mx = logits[0];
        for (double v : logits) mx = std::max(mx, v);
        double sum = 0.0;
        std::vector<double> p(2 * n);
        for (std::size_t j = 0; j < 2 * n; ++j) {
            p[j] = std::exp(logits[j] - mx);
            sum += p[j];
        }
        for (std::size_t j = 0; j < 2 * n; ++j) {
            p[j] /= sum;
            if (cfg.enable_mask) {
                p[j] *= j < n ? 1.0 - mask.m_g[j] : mask.m_r[j - n];
            }
            const bool injected = j >= n;
            if (cfg.scale_scope == ScaleScope::All || injected) p[j] *= cfg.w_s;
        }
        for (std::size_t c = 0; c < d; ++c) {
            double acc = 0.0;
            for (std::size_t j = 0; j < 2 * n; ++j) {
                acc += p[j] * (j < n ? vg.at2(j, c) : vr.at2(j - n, c));
            }
            out.at2(r, c) = static_cast<float>(acc);
        }
    }
    return out;
}

// f64 brute-force oracle for injected cross-attention.
Tensor cross_inject_oracle(const Tensor& f_g, const Tensor& prompt,
                           const ConceptFeatures& fc, const LayerWeights& w,
                           const InjectionConfig& cfg) {
    const std::size_t n = f_g.dim(0), d = w.cross_wq.dim(1);
    const std::size_t n_txt = prompt.dim(0);
    const std::size_t n_keys = n_txt + fc.count();
    Tensor q = test::matmul_oracle(f_g, w.cross_wq);
    Tensor src = fc.count() ? concat(prompt, fc.f, 0) : prompt;
    Tensor k = test::matmul_oracle(src, w.cross_wk);
    Tensor v = test::matmul_oracle(src, w.cross_wv);
    Tensor out({n, d});
    for (std::size_t r = 0; r < n; ++r) {
        std::vector<double> logits(n_keys);
        for (std::size_t j = 0; j < n_keys; ++j) {
            double dot = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                dot += static_cast<double>(q.at2(r, c)) * k.at2(j, c);
            }
            logits[j] = dot / std::sqrt(static_cast<double>(d));
        }
        double mx = logits[0];
        for (double lv : logits) mx = std::max(mx, lv);
        double sum = 0.0;
        std::vector<double> p(n_keys);
        for (std::size_t j = 0; j < n_keys; ++j) {
            p[j] = std::exp(logits[j] - mx);
            sum += p[j];
        }
        for (std::size_t j = 0; j < n_keys; ++j) {
            p[j] /= sum;
            if (cfg.scale_scope == ScaleScope::All || j >= n_txt) p[j] *= cfg.w_c;
        }
        for (std::size_t c = 0; c < d; ++c) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n_keys; ++j) acc += p[j] * v.at2(j, c);
            out.at2(r, c) = static_cast<float>(acc);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("extract_mask reproduces the worked scalar example") {
    Tensor a({4}, {0.0f, 1.0f, 0.5f, 0.25f});
    Tensor m = extract_mask(a);
    CHECK(m[0] == 0.0f);
    CHECK(m[1] == 1.0f);
    CHECK(m[2] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(m[3] == doctest::Approx(0.2461).epsilon(1e-3));
}

TEST_CASE("extract_mask degenerate and extreme laws") {
    Tensor flat = extract_mask(Tensor::full({64}, 0.4f));
    for (float v : flat.values()) CHECK(v == 0.0f);

    Rng rng(50);
    for (int rep = 0; rep < 25; ++rep) {
        Tensor a = random_tensor(rng, {64});
        Tensor m = extract_mask(a);
        float mn = 2.0f, mx = -1.0f;
        for (float v : m.values()) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        CHECK(mn == 0.0f);
        CHECK(mx == 1.0f);
    }
}

TEST_CASE("union_masks is elementwise max") {
    Tensor a({2}, {0.0f, 1.0f});
    Tensor b({2}, {1.0f, 0.0f});
    Tensor u = union_masks({a, b});
    CHECK(u[0] == 1.0f);
    CHECK(u[1] == 1.0f);

    Tensor c({2}, {0.2f, 0.7f});
    Tensor d({2}, {0.4f, 0.3f});
    Tensor u2 = union_masks({c, d});
    CHECK(u2[0] == 0.4f);
    CHECK(u2[1] == 0.7f);

    CHECK(test::bits_equal(union_masks({c}), c));
    CHECK_THROWS_AS(union_masks({}), EmptyList);
    Tensor e({3});
    CHECK_THROWS_AS(union_masks({c, e}), DimensionMismatch);
}

TEST_CASE("step_gate boundary behaviour") {
    InjectionConfig cfg;  // k = 2, T = 50
    CHECK_FALSE(step_gate(1, cfg));
    CHECK_FALSE(step_gate(2, cfg));
    CHECK(step_gate(3, cfg));
    for (std::uint32_t k = 1; k <= 50; ++k) {
        InjectionConfig c2;
        c2.mask_steps = k;
        CHECK_FALSE(step_gate(k, c2));
        if (k < 50) CHECK(step_gate(k + 1, c2));
    }
    CHECK_THROWS_AS(step_gate(0, cfg), InvalidStep);
    CHECK_THROWS_AS(step_gate(51, cfg), InvalidStep);
}

TEST_CASE("masked self-attention annihilates under inverted masks") {
    Rng rng(51);
    const std::size_t n = 8, d = 4;
    LayerWeights w = random_layer(rng, d);
    Tensor f_g = random_tensor(rng, {n, d});
    Tensor f_r = random_tensor(rng, {n, d});
    ConceptMask mask;
    mask.m_g = Tensor::full({n}, 1.0f);  // (1 - M_G) = 0
    mask.m_r = Tensor({n});              // M_R = 0
    mask.frozen = true;
    InjectionConfig cfg;
    Tensor out = masked_self_attention(f_g, f_r, w, mask, cfg, 10);
    for (float v : out.values()) CHECK(v == 0.0f);
}

TEST_CASE("transparent masks with w_s=1 equal concatenated attention") {
    Rng rng(52);
    const std::size_t n = 8, d = 4;
    LayerWeights w = random_layer(rng, d);
    Tensor f_g = random_tensor(rng, {n, d});
    Tensor f_r = random_tensor(rng, {n, d});
    InjectionConfig cfg;
    Tensor got = masked_self_attention(f_g, f_r, w, transparent_mask(n), cfg, 10);

    Tensor q = matmul(f_g, w.self_wq);
    Tensor k_full = concat(matmul(f_g, w.self_wk), matmul(f_r, w.self_wk), 0);
    Tensor v_full = concat(matmul(f_g, w.self_wv), matmul(f_r, w.self_wv), 0);
    Tensor want = scaled_attention(q, k_full, v_full);
    CHECK(max_abs_diff(got, want) <= 1e-6);
}

TEST_CASE("masked self-attention matches the brute-force oracle") {
    Rng rng(53);
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t n = 2 + rng.next_u64() % 6;
        const std::size_t d = 2 + rng.next_u64() % 5;
        LayerWeights w = random_layer(rng, d);
        Tensor f_g = random_tensor(rng, {n, d});
        Tensor f_r = random_tensor(rng, {n, d});
        ConceptMask mask;
        mask.m_g = random_tensor(rng, {n});
        mask.m_r = random_tensor(rng, {n});
        for (float& v : mask.m_g.values()) v = std::min(1.0f, std::fabs(v));
        for (float& v : mask.m_r.values()) v = std::min(1.0f, std::fabs(v));
        mask.frozen = true;
        InjectionConfig cfg;
        cfg.w_s = 0.5 + rng.next_uniform() * 2.0;
        cfg.scale_scope = (rng.next_u64() & 1) ? ScaleScope::All : ScaleScope::InjectedOnly;

        Tensor got = masked_self_attention(f_g, f_r, w, mask, cfg, 10);
        Tensor want = masked_attention_oracle(f_g, f_r, w, mask, cfg);
        CHECK(max_abs_diff(got, want) <= 1e-6);
    }
}

TEST_CASE("masked attention matrix entries stay inside [0, max(w_s, 1)]") {
    // Softmax entries live in [0,1] and masks in [0,1], so every masked,
    // scaled matrix entry lies in [0, w_s] and each row sum is bounded by
    // the unmasked row sum (= 1) times the applied scale.
    Rng rng(61);
    const std::size_t n = 6, d = 4;
    LayerWeights w = random_layer(rng, d);
    Tensor f_g = random_tensor(rng, {n, d});
    Tensor f_r = random_tensor(rng, {n, d});
    ConceptMask mask;
    mask.m_g = random_tensor(rng, {n});
    mask.m_r = random_tensor(rng, {n});
    for (float& v : mask.m_g.values()) v = std::min(1.0f, std::fabs(v));
    for (float& v : mask.m_r.values()) v = std::min(1.0f, std::fabs(v));
    mask.frozen = true;
    for (double ws : {0.5, 1.0, 2.5}) {
        InjectionConfig cfg;
        cfg.w_s = ws;
        Tensor q = matmul(f_g, w.self_wq);
        Tensor k_full = concat(matmul(f_g, w.self_wk), matmul(f_r, w.self_wk), 0);
        Tensor scores = matmul(q, transpose2(k_full));
        scale_inplace(scores, static_cast<float>(1.0 / std::sqrt(double(d))));
        Tensor probs = softmax_rows(scores);
        const float bound = static_cast<float>(std::max(ws, 1.0)) + 1e-6f;
        for (std::size_t r = 0; r < n; ++r) {
            double row_sum = 0.0;
            for (std::size_t j = 0; j < 2 * n; ++j) {
                const float m = j < n ? 1.0f - mask.m_g[j] : mask.m_r[j - n];
                const float entry = probs.at2(r, j) * m * static_cast<float>(ws);
                CHECK(entry >= 0.0f);
                CHECK(entry <= bound);
                row_sum += entry;
            }
            CHECK(row_sum <= ws + 1e-6);
        }
    }
}

TEST_CASE("two-token hand-set toy matches the oracle") {
    // d = 2, two spatial tokens, hand-set weights: small enough to audit.
    LayerWeights w;
    w.self_wq = Tensor({2, 2}, {1.0f, 0.0f, 0.0f, 1.0f});
    w.self_wk = Tensor({2, 2}, {0.5f, -0.25f, 0.75f, 1.0f});
    w.self_wv = Tensor({2, 2}, {-1.0f, 0.5f, 0.25f, 0.125f});
    Tensor f_g({2, 2}, {0.2f, -0.4f, 1.0f, 0.3f});
    Tensor f_r({2, 2}, {-0.6f, 0.8f, 0.1f, -0.2f});
    ConceptMask mask;
    mask.m_g = Tensor({2}, {0.25f, 0.75f});
    mask.m_r = Tensor({2}, {1.0f, 0.5f});
    mask.frozen = true;
    InjectionConfig cfg;
    cfg.w_s = 1.25;
    Tensor got = masked_self_attention(f_g, f_r, w, mask, cfg, 10);
    Tensor want = masked_attention_oracle(f_g, f_r, w, mask, cfg);
    CHECK(max_abs_diff(got, want) <= 1e-6);
}

TEST_CASE("masked self-attention is vanilla when the gate is closed") {
    Rng rng(54);
    const std::size_t n = 8, d = 4;
    LayerWeights w = random_layer(rng, d);
    Tensor f_g = random_tensor(rng, {n, d});
    Tensor f_r = random_tensor(rng, {n, d});
    ConceptMask unfrozen;  // never initialized
    InjectionConfig cfg;   // k = 2
    Tensor got = masked_self_attention(f_g, f_r, w, unfrozen, cfg, 1);
    Tensor want = scaled_attention(matmul(f_g, w.self_wq), matmul(f_g, w.self_wk),
                                   matmul(f_g, w.self_wv));
    CHECK(test::bits_equal(got, want));
}

TEST_CASE("active injection without a frozen mask is an error") {
    Rng rng(55);
    const std::size_t n = 4, d = 3;
    LayerWeights w = random_layer(rng, d);
    Tensor f_g = random_tensor(rng, {n, d});
    Tensor f_r = random_tensor(rng, {n, d});
    ConceptMask unfrozen;
    InjectionConfig cfg;
    CHECK_THROWS_AS(masked_self_attention(f_g, f_r, w, unfrozen, cfg, 5), MaskNotReady);

    // Masking disabled: no mask needed even when active.
    cfg.enable_mask = false;
    CHECK_NOTHROW(masked_self_attention(f_g, f_r, w, unfrozen, cfg, 5));
}

TEST_CASE("kv-route equals feature-route bit-exactly") {
    Rng rng(56);
    const std::size_t n = 8, d = 4;
    LayerWeights w = random_layer(rng, d);
    Tensor f_g = random_tensor(rng, {n, d});
    Tensor f_r = random_tensor(rng, {n, d});
    ConceptMask mask = transparent_mask(n);
    InjectionConfig cfg;
    cfg.w_s = 1.7;
    Tensor via_features = masked_self_attention(f_g, f_r, w, mask, cfg, 10);
    Tensor via_kv = masked_self_attention_kv(f_g, matmul(f_r, w.self_wk),
                                             matmul(f_r, w.self_wv), w, mask, cfg, 10);
    CHECK(test::bits_equal(via_features, via_kv));
}

TEST_CASE("cross injection with no concept tokens and w_c=1 is vanilla") {
    Rng rng(57);
    const std::size_t n = 8, d = 4;
    LayerWeights w = random_layer(rng, d);
    Tensor f_g = random_tensor(rng, {n, d});
    Tensor prompt = random_tensor(rng, {3, d});
    InjectionConfig cfg;
    ConceptFeatures empty;
    Tensor got = cross_attention_inject(f_g, prompt, empty, w, cfg, 10);
    Tensor want = scaled_attention(matmul(f_g, w.cross_wq), matmul(prompt, w.cross_wk),
                                   matmul(prompt, w.cross_wv));
    CHECK(max_abs_diff(got, want) <= 1e-6);
}

TEST_CASE("cross injection inactive step ignores concept features entirely") {
    Rng rng(58);
    const std::size_t n = 8, d = 4;
    LayerWeights w = random_layer(rng, d);
    Tensor f_g = random_tensor(rng, {n, d});
    Tensor prompt = random_tensor(rng, {2, d});
    ConceptFeatures fc{random_tensor(rng, {5, d})};
    InjectionConfig cfg;
    cfg.w_c = 3.0;
    Tensor got = cross_attention_inject(f_g, prompt, fc, w, cfg, 1);
    Tensor want = scaled_attention(matmul(f_g, w.cross_wq), matmul(prompt, w.cross_wk),
                                   matmul(prompt, w.cross_wv));
    CHECK(test::bits_equal(got, want));
}

TEST_CASE("cross injection matches the brute-force oracle") {
    Rng rng(59);
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t n = 2 + rng.next_u64() % 6;
        const std::size_t d = 2 + rng.next_u64() % 5;
        const std::size_t n_txt = 1 + rng.next_u64() % 3;
        const std::size_t n_c = rng.next_u64() % 4;
        LayerWeights w = random_layer(rng, d);
        Tensor f_g = random_tensor(rng, {n, d});
        Tensor prompt = random_tensor(rng, {n_txt, d});
        ConceptFeatures fc;
        if (n_c) fc.f = random_tensor(rng, {n_c, d});
        InjectionConfig cfg;
        cfg.w_c = 0.5 + rng.next_uniform() * 2.0;
        cfg.scale_scope = (rng.next_u64() & 1) ? ScaleScope::All : ScaleScope::InjectedOnly;
        Tensor got = cross_attention_inject(f_g, prompt, fc, w, cfg, 10);
        Tensor want = cross_inject_oracle(f_g, prompt, fc, w, cfg);
        CHECK(max_abs_diff(got, want) <= 1e-6);
    }
}

TEST_CASE("doubling w_c doubles the active cross output exactly") {
    Rng rng(60);
    const std::size_t n = 8, d = 4;
    LayerWeights w = random_layer(rng, d);
    Tensor f_g = random_tensor(rng, {n, d});
    Tensor prompt = random_tensor(rng, {2, d});
    ConceptFeatures fc{random_tensor(rng, {3, d})};
    InjectionConfig cfg;
    cfg.w_c = 1.0;
    Tensor base = cross_attention_inject(f_g, prompt, fc, w, cfg, 10);
    cfg.w_c = 2.0;
    Tensor twice = cross_attention_inject(f_g, prompt, fc, w, cfg, 10);
    for (std::size_t i = 0; i < base.numel(); ++i) {
        CHECK(std::fabs(2.0 * base[i] - twice[i]) <= 1e-6);
    }
}

TEST_CASE("mask accumulation unions per-step masks and freezes at k") {
    // Hand-built taps: one layer, 4 spatial tokens, 2 prompt tokens.
    auto tap_from_cols = [](std::vector<float> col) {
        AttentionTap tap;
        tap.layers.resize(1);
        Tensor probs({4, 2});
        for (std::size_t r = 0; r < 4; ++r) {
            probs.at2(r, 0) = col[r];
            probs.at2(r, 1) = 1.0f - col[r];
        }
        tap.layers[0].cross_probs = probs;
        return tap;
    };
    InjectionConfig cfg;
    cfg.mask_steps = 2;
    cfg.coarse_token_gen = 0;
    cfg.coarse_token_ref = 0;

    ConceptMask state;
    AttentionTap g1 = tap_from_cols({0.0f, 1.0f, 0.5f, 0.25f});
    AttentionTap r1 = tap_from_cols({1.0f, 0.0f, 0.5f, 0.75f});
    accumulate_mask_step(g1, r1, cfg, 1, state);
    CHECK_FALSE(state.frozen);

    AttentionTap g2 = tap_from_cols({1.0f, 0.0f, 0.5f, 0.25f});
    AttentionTap r2 = tap_from_cols({0.0f, 1.0f, 0.5f, 0.75f});
    accumulate_mask_step(g2, r2, cfg, 2, state);
    CHECK(state.frozen);
    CHECK(test::bits_equal(state.m_g, union_masks({state.masks_g[0], state.masks_g[1]})));
    CHECK(test::bits_equal(state.m_r, union_masks({state.masks_r[0], state.masks_r[1]})));

    CHECK_THROWS_AS(accumulate_mask_step(g1, r1, cfg, 3, state), AlreadyFrozen);

    // k = 1 freezes immediately with the single-step mask.
    InjectionConfig c1 = cfg;
    c1.mask_steps = 1;
    ConceptMask s1;
    accumulate_mask_step(g1, r1, c1, 1, s1);
    CHECK(s1.frozen);
    CHECK(test::bits_equal(s1.m_g, s1.masks_g[0]));
}

TEST_CASE("injection config validation") {
    InjectionConfig cfg;
    CHECK_NOTHROW(cfg.validate(2, 1));
    cfg.coarse_token_gen = 2;
    CHECK_THROWS_AS(cfg.validate(2, 1), TokenIndexOutOfRange);
    cfg = InjectionConfig{};
    cfg.w_s = 0.0;
    CHECK_THROWS_AS(cfg.validate(2, 1), InvalidConfig);
    cfg = InjectionConfig{};
    cfg.mask_steps = 51;
    CHECK_THROWS_AS(cfg.validate(2, 1), InvalidConfig);
}

TEST_CASE("mask PGM export writes the expected header and bytes") {
    Tensor m({4}, {0.0f, 0.5f, 1.0f, 0.25f});
    const std::string path = "test_mask.pgm";
    save_mask_pgm(path, m, 2);
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    const std::string bytes = ss.str();
    REQUIRE(bytes.size() == std::string("P5\n2 2\n255\n").size() + 4);
    CHECK(bytes.substr(0, 11) == "P5\n2 2\n255\n");
    const unsigned char* px = reinterpret_cast<const unsigned char*>(bytes.data() + 11);
    CHECK(px[0] == 0);
    CHECK(px[1] == 128);  // round(0.5 * 255)
    CHECK(px[2] == 255);
    CHECK(px[3] == 64);   // round(0.25 * 255)
    std::remove(path.c_str());
}
