#include "atnj/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "atnj/ops.hpp"
#include "atnj/rng.hpp"

namespace atnj {

namespace {

Tensor draw_initial_noise(const ModelConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    return rng_normal(rng, cfg.channels * cfg.tokens())
        .reshaped({cfg.channels, cfg.spatial, cfg.spatial});
}

}  // namespace

GenerationResult generate(const GenerationRequest& req, const NoiseSchedule& sched) {
    if (!req.model) throw MissingInput("generate: model weights required");
    const ModelWeights& model = *req.model;
    const ModelConfig& mc = model.config;

    PromptEmbedding prompt_gen = embed_prompt(req.prompt_gen, mc);
    PromptEmbedding prompt_ref = embed_prompt(req.prompt_ref, mc);
    req.cfg.validate(prompt_gen.tokens.dim(0), prompt_ref.tokens.dim(0));
    if (req.cfg.total_steps != sched.num_inference_steps()) {
        throw TrajectoryMismatch("config step count differs from schedule");
    }

    GenerationResult result;
    if (req.trajectory) {
        result.trajectory = *req.trajectory;
    } else {
        if (!req.image) throw MissingInput("generate: need a reference image or trajectory");
        const Tensor x0 = image_to_latent(*req.image);
        result.trajectory = invert_reference(
            x0,
            [&](const Tensor& x, std::uint32_t t) {
                return forward(x, t, prompt_ref, model).eps;
            },
            sched);
    }
    require_matching(result.trajectory, sched);

    InjectionState state;
    state.cfg = req.cfg;
    if (req.cfg.enable_cross_inject) {
        if (!req.encoder) throw MissingInput("generate: cross-injection needs encoder weights");
        if (!req.image) throw MissingInput("generate: cross-injection needs the reference image");
        state.concept_features = encode_concept(*req.image, *req.encoder);
    }
    InjectSelfAttn self_proc(state);
    InjectCrossAttn cross_proc(state);

    const std::uint32_t T = static_cast<std::uint32_t>(sched.num_inference_steps());
    const std::uint32_t k = req.cfg.mask_steps;
    Tensor z = draw_initial_noise(mc, req.seed);
    const Tensor& x0_ref = result.trajectory.latents[0];
    Tensor ones_mask = Tensor::full({mc.tokens()}, 1.0f);

    for (std::uint32_t s = 1; s <= T; ++s) {
        const auto t_start = std::chrono::steady_clock::now();
        const std::uint32_t t = sched.inference_steps[s - 1];
        const std::uint32_t t_next = s < T ? sched.inference_steps[s] : 0;
        state.step_s = s;

        // The reference forward is only needed while masks accumulate or
        // while its K/V actually get injected.
        AttentionTap ref_tap;
        const bool need_ref = s <= k || req.cfg.enable_self_inject;
        if (need_ref) {
            const Tensor& x_ref = result.trajectory.latents[T - s + 1];
            ref_tap = forward(x_ref, t, prompt_ref, model).tap;
            state.ref_tap = &ref_tap;
        } else {
            state.ref_tap = nullptr;
        }

        ForwardResult gen = forward(z, t, prompt_gen, model, self_proc, cross_proc);
        if (s <= k) {
            accumulate_mask_step(gen.tap, ref_tap, req.cfg, s, state.mask);
            if (state.mask.frozen) result.mask_freeze_step = s;
        }

        Tensor x0_hat = predict_x0(z, gen.eps, t, sched);
        z = ddim_step(z, gen.eps, t, t_next, sched);

        StepDiag diag;
        diag.step = s;
        diag.t_index = t;
        const Tensor& m = state.mask.frozen ? state.mask.m_r : ones_mask;
        diag.identity = identity_proxy(x0_hat, x0_ref, m);
        diag.latent_l2 = l2_norm(z);
        diag.millis = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t_start)
                          .count();
        result.diagnostics.push_back(diag);
    }

    z.require_finite("generated latent");
    result.z0 = std::move(z);
    const Tensor& m_final = state.mask.frozen ? state.mask.m_r : ones_mask;
    result.identity = identity_proxy(result.z0, x0_ref, m_final);
    result.mask = std::move(state.mask);
    return result;
}

Tensor sample_vanilla(const ModelWeights& w, const NoiseSchedule& sched,
                      const PromptEmbedding& prompt, std::uint64_t seed) {
    const std::uint32_t T = static_cast<std::uint32_t>(sched.num_inference_steps());
    Tensor z = draw_initial_noise(w.config, seed);
    for (std::uint32_t s = 1; s <= T; ++s) {
        const std::uint32_t t = sched.inference_steps[s - 1];
        const std::uint32_t t_next = s < T ? sched.inference_steps[s] : 0;
        const Tensor eps = forward(z, t, prompt, w).eps;
        z = ddim_step(z, eps, t, t_next, sched);
    }
    return z;
}

double identity_proxy(const Tensor& z_gen, const Tensor& x_ref, const Tensor& m_r) {
    if (!z_gen.same_shape(x_ref)) throw DimensionMismatch("identity_proxy: shape mismatch");
    if (z_gen.rank() != 3) throw DimensionMismatch("identity_proxy expects [C,H,W]");
    const std::size_t c = z_gen.dim(0), h = z_gen.dim(1), w = z_gen.dim(2);
    if (m_r.numel() != h * w) throw DimensionMismatch("identity_proxy: mask length mismatch");
    constexpr double kEps = 1e-8;
    double num = 0.0, den = 0.0;
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                const double m = m_r[y * w + x];
                const double zv = z_gen.at3(ch, y, x);
                const double xv = x_ref.at3(ch, y, x);
                const double d = zv - xv;
                num += m * d * d;
                den += m * (zv * zv + xv * xv + kEps);
            }
        }
    }
    // The factor 2 bounds the ratio by 1 ((z-x)^2 <= 2(z^2+x^2)), pinning
    // identical inputs to 1 and sign-flipped inputs to 0.
    if (den == 0.0) return 1.0;
    return 1.0 - num / (2.0 * den);
}

const char* sweep_axis_name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::WS: return "ws";
        case SweepAxis::WC: return "wc";
        case SweepAxis::K: return "k";
    }
    return "?";
}

std::vector<SweepRow> sweep(const GenerationRequest& req, const NoiseSchedule& sched,
                            SweepAxis axis, const std::vector<double>& values,
                            std::size_t jobs) {
    if (values.empty()) throw EmptySweep("sweep: empty value list");
    if (jobs == 0) jobs = 1;

    // Invert once and share the trajectory across runs.
    GenerationRequest base = req;
    if (!base.trajectory) {
        if (!base.image) throw MissingInput("sweep: need a reference image or trajectory");
        PromptEmbedding prompt_ref = embed_prompt(base.prompt_ref, base.model->config);
        const Tensor x0 = image_to_latent(*base.image);
        base.trajectory = invert_reference(
            x0,
            [&](const Tensor& x, std::uint32_t t) {
                return forward(x, t, prompt_ref, *base.model).eps;
            },
            sched);
    }

    std::vector<SweepRow> rows(values.size());
    std::exception_ptr first_error;
    std::mutex error_mu;

    auto run_one = [&](std::size_t idx) {
        GenerationRequest r = base;
        switch (axis) {
            case SweepAxis::WS: r.cfg.w_s = values[idx]; break;
            case SweepAxis::WC: r.cfg.w_c = values[idx]; break;
            case SweepAxis::K:
                r.cfg.mask_steps = static_cast<std::uint32_t>(values[idx]);
                break;
        }
        GenerationResult res = generate(r, sched);
        rows[idx] = SweepRow{values[idx], res.identity, l2_norm(res.z0)};
    };

    if (jobs == 1) {
        for (std::size_t i = 0; i < values.size(); ++i) run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= values.size()) return;
                try {
                    run_one(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        const std::size_t n = std::min(jobs, values.size());
        pool.reserve(n);
        for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);
    }
    return rows;
}

}  // namespace atnj
