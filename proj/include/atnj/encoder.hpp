#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "atnj/image.hpp"
#include "atnj/injector.hpp"
#include "atnj/model.hpp"
#include "atnj/rng.hpp"
#include "atnj/schedule.hpp"

namespace atnj {

struct EncoderConfig {
    std::uint32_t patch = 8;
    std::uint32_t image_side = 32;
    std::uint32_t channels = 3;
    std::uint32_t d_model = 32;
    std::uint32_t hidden = 64;
    bool train_patch_proj = true;

    std::size_t patch_dim() const { return static_cast<std::size_t>(patch) * patch * channels; }
    std::size_t patches_per_side() const { return image_side / patch; }
    std::size_t num_patches() const { return patches_per_side() * patches_per_side(); }
    std::size_t num_tokens() const { return num_patches() + 1; }  // + global token
    void validate() const;
};

// Patch projector plus per-token MLP plus a learned global token.
// Serialization order: patch_w, patch_b, mlp_w1, mlp_b1, mlp_w2, mlp_b2,
// global_token.
struct EncoderWeights {
    EncoderConfig config;
    Tensor patch_w, patch_b;                // [192 x d], [d]
    Tensor mlp_w1, mlp_b1, mlp_w2, mlp_b2;  // [d x h], [h], [h x d], [d]
    Tensor global_token;                    // [d]

    void for_each_param(const std::function<void(Tensor&, bool trainable)>& fn);
    void for_each_param(const std::function<void(const Tensor&, bool trainable)>& fn) const;
    std::size_t param_count() const;
    std::size_t trainable_count() const;
    std::vector<float> flatten_trainable() const;
    void load_trainable(std::span<const float> theta);
    std::uint64_t hash() const;
};

EncoderWeights make_encoder(const EncoderConfig& config);
EncoderWeights init_encoder(const EncoderConfig& config, std::uint64_t seed);

// ".enc": magic "CENC", u8 version=1, six u32 config fields, then all
// parameters little-endian f32 in serialization order.
void save_encoder(const std::string& path, const EncoderWeights& w);
EncoderWeights load_encoder(const std::string& path);

// Global token plus projected 8x8 patches, before the MLP. [17 x d]
Tensor patch_embed(const ReferenceImage& img, const EncoderWeights& w);

// f = MLP(patch_embed(I_R)); 17 concept tokens.
ConceptFeatures encode_concept(const ReferenceImage& img, const EncoderWeights& w);

// One fixed training batch: per image a schedule timestep, a noise target
// and the reduced clean latent. The coarse prompt is shared.
struct TrainingBatch {
    std::vector<Tensor> z0;
    std::vector<std::uint32_t> t;
    std::vector<Tensor> eta;
    std::vector<ReferenceImage> images;
    PromptEmbedding prompt;
};

TrainingBatch make_training_batch(const std::vector<ReferenceImage>& dataset,
                                  const NoiseSchedule& sched,
                                  const PromptEmbedding& prompt, Rng& rng);

// Mean squared error between the noise targets and the denoiser prediction
// given cross-attention injection of the encoded training image itself.
double concept_loss(const TrainingBatch& batch, const EncoderWeights& enc,
                    const ModelWeights& model, const NoiseSchedule& sched,
                    const InjectionConfig& cfg);

struct TrainResult {
    EncoderWeights weights;
    std::vector<double> trace;  // trace[i] = loss after i updates; trace[0] initial
};

// SPSA: two loss evaluations per iteration with a simultaneous Rademacher
// perturbation of all trainable parameters; gains a_k = a/(k+1)^0.602 and
// c_k = c/(k+1)^0.101 with a = 0.05, c = 0.01.
TrainResult train_encoder(const std::vector<ReferenceImage>& dataset,
                          const EncoderWeights& enc, const ModelWeights& model,
                          const NoiseSchedule& sched, const InjectionConfig& cfg,
                          std::size_t iters, std::uint64_t seed,
                          const std::vector<std::string>& prompt_words = {"blob"});

// Mean of the first and last `window` trace entries.
double smoothed_initial(const std::vector<double>& trace, std::size_t window = 20);
double smoothed_final(const std::vector<double>& trace, std::size_t window = 20);

using LossFn = std::function<double(const std::vector<float>&)>;

// Central differences at the given coordinates.
std::vector<double> fd_gradient(const LossFn& loss, const std::vector<float>& theta,
                                const std::vector<std::size_t>& indices, double h);

struct FdReport {
    std::size_t trials = 0;
    std::size_t passes = 0;
    double pass_rate = 0.0;
    std::vector<double> inner_products;
};

// Validates the SPSA direction against a finite-difference gradient on a
// seeded random subset of coordinates. Each trial perturbs only the subset
// (a full-dimension perturbation would make the 32-coordinate comparison
// statistically meaningless) and passes when the SPSA estimate has positive
// inner product with the FD gradient.
FdReport fd_gradient_check(const LossFn& loss, const std::vector<float>& theta0,
                           std::size_t n_params, double h, std::size_t trials,
                           std::uint64_t seed);

// Convenience overload over concept_loss with the batch held fixed.
FdReport fd_gradient_check(const TrainingBatch& batch, const EncoderWeights& enc,
                           const ModelWeights& model, const NoiseSchedule& sched,
                           const InjectionConfig& cfg, std::size_t n_params = 32,
                           double h = 1e-3, std::size_t trials = 20,
                           std::uint64_t seed = 1234);

}  // namespace atnj
