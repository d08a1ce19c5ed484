#include "atnj/encoder.hpp"

#include <cmath>
#include <fstream>

#include "atnj/ops.hpp"
#include "atnj/tenio.hpp"

namespace atnj {

namespace {

// Init scales, calibrated empirically. The attention path from concept
// tokens to the denoiser output attenuates by roughly three 0.11x
// projections plus softmax dilution, so a conventional init leaves the
// optimizer a numerically dead landscape at the fixed SPSA gains. The
// encoder therefore starts hot: the initial injection is large and
// training pulls it toward the reconstruction target. Scales much past
// these overflow f32 activations during the first optimizer steps.
constexpr double kPatchWStd = 16.0;   // / sqrt(patch_dim)
constexpr double kMlpW1Std = 12.0;    // / sqrt(d_model)
constexpr double kMlpW2Std = 16.0;    // / sqrt(hidden)
constexpr double kGlobalStd = 0.5;

constexpr double kSpsaA = 0.05;
constexpr double kSpsaC = 0.01;
constexpr double kSpsaAlpha = 0.602;
constexpr double kSpsaGamma = 0.101;

}  // namespace

void EncoderConfig::validate() const {
    if (patch == 0 || image_side == 0 || channels == 0 || d_model == 0 || hidden == 0) {
        throw InvalidConfig("encoder dims must be >= 1");
    }
    if (image_side % patch != 0) {
        throw InvalidConfig("image side must be a multiple of the patch size");
    }
}

EncoderWeights make_encoder(const EncoderConfig& config) {
    config.validate();
    const std::size_t d = config.d_model, h = config.hidden, p = config.patch_dim();
    EncoderWeights w;
    w.config = config;
    w.patch_w = Tensor({p, d});
    w.patch_b = Tensor({d});
    w.mlp_w1 = Tensor({d, h});
    w.mlp_b1 = Tensor({h});
    w.mlp_w2 = Tensor({h, d});
    w.mlp_b2 = Tensor({d});
    w.global_token = Tensor({d});
    return w;
}

namespace {

template <typename W, typename Fn>
void visit_encoder_params(W& w, const Fn& fn) {
    const bool train_patch = w.config.train_patch_proj;
    fn(w.patch_w, train_patch);
    fn(w.patch_b, train_patch);
    fn(w.mlp_w1, true);
    fn(w.mlp_b1, true);
    fn(w.mlp_w2, true);
    fn(w.mlp_b2, true);
    fn(w.global_token, true);
}

}  // namespace

void EncoderWeights::for_each_param(const std::function<void(Tensor&, bool)>& fn) {
    visit_encoder_params(*this, fn);
}

void EncoderWeights::for_each_param(const std::function<void(const Tensor&, bool)>& fn) const {
    visit_encoder_params(*this, fn);
}

std::size_t EncoderWeights::param_count() const {
    std::size_t n = 0;
    for_each_param([&](const Tensor& t, bool) { n += t.numel(); });
    return n;
}

std::size_t EncoderWeights::trainable_count() const {
    std::size_t n = 0;
    for_each_param([&](const Tensor& t, bool tr) { n += tr ? t.numel() : 0; });
    return n;
}

std::vector<float> EncoderWeights::flatten_trainable() const {
    std::vector<float> theta;
    theta.reserve(trainable_count());
    for_each_param([&](const Tensor& t, bool tr) {
        if (tr) theta.insert(theta.end(), t.values().begin(), t.values().end());
    });
    return theta;
}

void EncoderWeights::load_trainable(std::span<const float> theta) {
    std::size_t off = 0;
    for_each_param([&](Tensor& t, bool tr) {
        if (!tr) return;
        if (off + t.numel() > theta.size()) {
            throw DimensionMismatch("trainable parameter vector too short");
        }
        for (float& v : t.values()) v = theta[off++];
    });
    if (off != theta.size()) {
        throw DimensionMismatch("trainable parameter vector too long");
    }
}

std::uint64_t EncoderWeights::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for_each_param([&](const Tensor& t, bool) {
        const std::uint64_t th = tensor_hash(t);
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(th >> (8 * i));
        h = fnv1a64(b, 8, h);
    });
    return h;
}

EncoderWeights init_encoder(const EncoderConfig& config, std::uint64_t seed) {
    EncoderWeights w = make_encoder(config);
    Rng rng(seed);
    rng.fill_normal(w.patch_w.values(), 0.0,
                    kPatchWStd / std::sqrt(static_cast<double>(config.patch_dim())));
    rng.fill_normal(w.mlp_w1.values(), 0.0,
                    kMlpW1Std / std::sqrt(static_cast<double>(config.d_model)));
    rng.fill_normal(w.mlp_w2.values(), 0.0,
                    kMlpW2Std / std::sqrt(static_cast<double>(config.hidden)));
    rng.fill_normal(w.global_token.values(), 0.0, kGlobalStd);
    // Biases start at zero.
    return w;
}

void save_encoder(const std::string& path, const EncoderWeights& w) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os.write("CENC", 4);
    wire::put_u8(os, 1);
    wire::put_u32(os, w.config.patch);
    wire::put_u32(os, w.config.image_side);
    wire::put_u32(os, w.config.channels);
    wire::put_u32(os, w.config.d_model);
    wire::put_u32(os, w.config.hidden);
    wire::put_u32(os, w.config.train_patch_proj ? 1 : 0);
    w.for_each_param([&](const Tensor& t, bool) {
        for (float v : t.values()) wire::put_f32(os, v);
    });
    if (!os) throw IoError("write failed: " + path);
}

EncoderWeights load_encoder(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    wire::expect_magic(is, "CENC", ".enc");
    if (wire::get_u8(is) != 1) throw ParseError(".enc: unsupported version");
    EncoderConfig config;
    config.patch = wire::get_u32(is);
    config.image_side = wire::get_u32(is);
    config.channels = wire::get_u32(is);
    config.d_model = wire::get_u32(is);
    config.hidden = wire::get_u32(is);
    config.train_patch_proj = wire::get_u32(is) != 0;
    EncoderWeights w = make_encoder(config);
    w.for_each_param([&](Tensor& t, bool) {
        for (float& v : t.values()) v = wire::get_f32(is);
    });
    return w;
}

Tensor patch_embed(const ReferenceImage& img, const EncoderWeights& w) {
    const EncoderConfig& cfg = w.config;
    if (img.pixels.dim(0) != cfg.channels || img.pixels.dim(1) != cfg.image_side ||
        img.pixels.dim(2) != cfg.image_side) {
        throw DimensionMismatch("image does not match encoder config");
    }
    const std::size_t side = cfg.patches_per_side();
    const std::size_t pdim = cfg.patch_dim();

    // Non-overlapping patches, row-major over the grid; each flattened
    // channel-major before projection.
    Tensor patches({cfg.num_patches(), pdim});
    for (std::size_t pr = 0; pr < side; ++pr) {
        for (std::size_t pc = 0; pc < side; ++pc) {
            float* row = patches.data() + (pr * side + pc) * pdim;
            std::size_t idx = 0;
            for (std::size_t c = 0; c < cfg.channels; ++c) {
                for (std::size_t y = 0; y < cfg.patch; ++y) {
                    for (std::size_t x = 0; x < cfg.patch; ++x) {
                        row[idx++] = img.pixels.at3(c, pr * cfg.patch + y, pc * cfg.patch + x);
                    }
                }
            }
        }
    }
    Tensor proj = matmul(patches, w.patch_w);
    add_row_broadcast(proj, w.patch_b);

    Tensor out({cfg.num_tokens(), cfg.d_model});
    for (std::size_t c = 0; c < cfg.d_model; ++c) out.at2(0, c) = w.global_token[c];
    for (std::size_t r = 0; r < cfg.num_patches(); ++r) {
        for (std::size_t c = 0; c < cfg.d_model; ++c) out.at2(r + 1, c) = proj.at2(r, c);
    }
    return out;
}

ConceptFeatures encode_concept(const ReferenceImage& img, const EncoderWeights& w) {
    Tensor tokens = patch_embed(img, w);
    Tensor h = matmul(tokens, w.mlp_w1);
    add_row_broadcast(h, w.mlp_b1);
    h = relu(h);
    Tensor f = matmul(h, w.mlp_w2);
    add_row_broadcast(f, w.mlp_b2);
    return ConceptFeatures{std::move(f)};
}

TrainingBatch make_training_batch(const std::vector<ReferenceImage>& dataset,
                                  const NoiseSchedule& sched,
                                  const PromptEmbedding& prompt, Rng& rng) {
    if (dataset.empty()) throw EmptyDataset("training batch needs at least one image");
    TrainingBatch b;
    b.prompt = prompt;
    const auto steps = sched.ascending_steps();
    for (const ReferenceImage& img : dataset) {
        Tensor z0 = image_to_latent(img);
        const std::uint32_t t = steps[rng.next_u64() % steps.size()];
        Tensor eta = rng_normal(rng, z0.numel()).reshaped(z0.shape());
        b.z0.push_back(std::move(z0));
        b.t.push_back(t);
        b.eta.push_back(std::move(eta));
        b.images.push_back(img);
    }
    return b;
}

namespace {

// z_t = sqrt(abar_t) z0 + sqrt(1 - abar_t) eta, per element in f64.
Tensor forward_diffuse(const Tensor& z0, const Tensor& eta, std::uint32_t t,
                       const NoiseSchedule& sched) {
    const double ab = sched.alpha_bar(t);
    const double s = std::sqrt(ab);
    const double c = std::sqrt(1.0 - ab);
    Tensor out(z0.shape());
    for (std::size_t i = 0; i < z0.numel(); ++i) {
        out[i] = static_cast<float>(s * z0[i] + c * eta[i]);
    }
    return out;
}

}  // namespace

double concept_loss(const TrainingBatch& batch, const EncoderWeights& enc,
                    const ModelWeights& model, const NoiseSchedule& sched,
                    const InjectionConfig& cfg) {
    if (batch.z0.empty()) throw EmptyDataset("concept_loss: empty batch");

    // Training runs cross-attention injection unconditionally; there is no
    // denoise-step gate during reconstruction training.
    InjectionState state;
    state.cfg = cfg;
    state.cfg.enable_self_inject = false;
    state.cfg.enable_cross_inject = true;
    state.step_s = state.cfg.total_steps;
    VanillaSelfAttn self_proc;
    InjectCrossAttn cross_proc(state);

    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < batch.z0.size(); ++i) {
        state.concept_features = encode_concept(batch.images[i], enc);
        Tensor z_t = forward_diffuse(batch.z0[i], batch.eta[i], batch.t[i], sched);
        ForwardResult res = forward(z_t, batch.t[i], batch.prompt, model, self_proc, cross_proc);
        total += sq_diff_sum(batch.eta[i], res.eps);
        count += batch.eta[i].numel();
    }
    return total / static_cast<double>(count);
}

TrainResult train_encoder(const std::vector<ReferenceImage>& dataset,
                          const EncoderWeights& enc, const ModelWeights& model,
                          const NoiseSchedule& sched, const InjectionConfig& cfg,
                          std::size_t iters, std::uint64_t seed,
                          const std::vector<std::string>& prompt_words) {
    if (dataset.empty()) throw EmptyDataset("train_encoder: empty dataset");
    Rng rng(seed);
    PromptEmbedding prompt = embed_prompt(prompt_words, model.config);
    TrainingBatch batch = make_training_batch(dataset, sched, prompt, rng);

    TrainResult result;
    result.weights = enc;
    std::vector<float> theta = result.weights.flatten_trainable();
    EncoderWeights scratch = enc;

    auto loss_at = [&](const std::vector<float>& th) {
        scratch.load_trainable(th);
        return concept_loss(batch, scratch, model, sched, cfg);
    };

    result.trace.push_back(loss_at(theta));
    std::vector<float> delta(theta.size());
    std::vector<float> plus(theta.size()), minus(theta.size());
    for (std::size_t k = 0; k < iters; ++k) {
        const double ak = kSpsaA / std::pow(static_cast<double>(k + 1), kSpsaAlpha);
        const double ck = kSpsaC / std::pow(static_cast<double>(k + 1), kSpsaGamma);
        for (auto& d : delta) d = (rng.next_u64() & 1u) ? 1.0f : -1.0f;
        const float ckf = static_cast<float>(ck);
        for (std::size_t i = 0; i < theta.size(); ++i) {
            plus[i] = theta[i] + ckf * delta[i];
            minus[i] = theta[i] - ckf * delta[i];
        }
        const double lp = loss_at(plus);
        const double lm = loss_at(minus);
        const float step = static_cast<float>(ak * (lp - lm) / (2.0 * ck));
        for (std::size_t i = 0; i < theta.size(); ++i) {
            theta[i] -= step * delta[i];
        }
        result.trace.push_back(loss_at(theta));
    }
    result.weights.load_trainable(theta);
    return result;
}

double smoothed_initial(const std::vector<double>& trace, std::size_t window) {
    if (trace.empty()) throw EmptyList("empty loss trace");
    const std::size_t n = std::min(window, trace.size());
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += trace[i];
    return s / static_cast<double>(n);
}

double smoothed_final(const std::vector<double>& trace, std::size_t window) {
    if (trace.empty()) throw EmptyList("empty loss trace");
    const std::size_t n = std::min(window, trace.size());
    double s = 0.0;
    for (std::size_t i = trace.size() - n; i < trace.size(); ++i) s += trace[i];
    return s / static_cast<double>(n);
}

std::vector<double> fd_gradient(const LossFn& loss, const std::vector<float>& theta,
                                const std::vector<std::size_t>& indices, double h) {
    if (!(h > 0.0)) throw InvalidStep("finite-difference step must be > 0");
    std::vector<double> grad(indices.size());
    std::vector<float> work = theta;
    for (std::size_t j = 0; j < indices.size(); ++j) {
        const std::size_t i = indices[j];
        const float orig = work[i];
        work[i] = static_cast<float>(orig + h);
        const double lp = loss(work);
        work[i] = static_cast<float>(orig - h);
        const double lm = loss(work);
        work[i] = orig;
        grad[j] = (lp - lm) / (2.0 * h);
    }
    return grad;
}

FdReport fd_gradient_check(const LossFn& loss, const std::vector<float>& theta0,
                           std::size_t n_params, double h, std::size_t trials,
                           std::uint64_t seed) {
    if (!(h > 0.0)) throw InvalidStep("finite-difference step must be > 0");
    if (theta0.empty()) throw EmptyList("fd_gradient_check: empty parameter vector");
    Rng rng(seed);
    n_params = std::min(n_params, theta0.size());

    // Seeded subset without replacement.
    std::vector<std::size_t> indices;
    indices.reserve(n_params);
    std::vector<bool> used(theta0.size(), false);
    while (indices.size() < n_params) {
        const std::size_t i = rng.next_u64() % theta0.size();
        if (!used[i]) {
            used[i] = true;
            indices.push_back(i);
        }
    }

    const std::vector<double> g_fd = fd_gradient(loss, theta0, indices, h);

    FdReport report;
    report.trials = trials;
    std::vector<float> work(theta0.size());
    for (std::size_t trial = 0; trial < trials; ++trial) {
        std::vector<double> delta(indices.size());
        for (auto& d : delta) d = (rng.next_u64() & 1u) ? 1.0 : -1.0;
        work = theta0;
        for (std::size_t j = 0; j < indices.size(); ++j) {
            work[indices[j]] = static_cast<float>(theta0[indices[j]] + kSpsaC * delta[j]);
        }
        const double lp = loss(work);
        work = theta0;
        for (std::size_t j = 0; j < indices.size(); ++j) {
            work[indices[j]] = static_cast<float>(theta0[indices[j]] - kSpsaC * delta[j]);
        }
        const double lm = loss(work);
        const double diff = (lp - lm) / (2.0 * kSpsaC);

        double ip = 0.0;
        for (std::size_t j = 0; j < indices.size(); ++j) {
            ip += (diff * delta[j]) * g_fd[j];  // 1/delta == delta for +-1
        }
        report.inner_products.push_back(ip);
        if (ip > 0.0) ++report.passes;
    }
    report.pass_rate = trials == 0 ? 0.0
                                   : static_cast<double>(report.passes) /
                                         static_cast<double>(trials);
    return report;
}

FdReport fd_gradient_check(const TrainingBatch& batch, const EncoderWeights& enc,
                           const ModelWeights& model, const NoiseSchedule& sched,
                           const InjectionConfig& cfg, std::size_t n_params,
                           double h, std::size_t trials, std::uint64_t seed) {
    EncoderWeights scratch = enc;
    LossFn loss = [&](const std::vector<float>& th) {
        scratch.load_trainable(th);
        return concept_loss(batch, scratch, model, sched, cfg);
    };
    return fd_gradient_check(loss, enc.flatten_trainable(), n_params, h, trials, seed);
}

}  // namespace atnj
