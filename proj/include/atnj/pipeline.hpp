#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "atnj/encoder.hpp"
#include "atnj/image.hpp"
#include "atnj/injector.hpp"
#include "atnj/model.hpp"
#include "atnj/schedule.hpp"

namespace atnj {

struct GenerationRequest {
    std::vector<std::string> prompt_gen;
    std::vector<std::string> prompt_ref;
    std::optional<ReferenceImage> image;
    std::optional<LatentTrajectory> trajectory;  // used as-is when supplied
    InjectionConfig cfg;
    std::uint64_t seed = 0;
    const ModelWeights* model = nullptr;
    const EncoderWeights* encoder = nullptr;  // required for cross-injection
};

struct StepDiag {
    std::uint32_t step = 0;     // 1-based denoise step
    std::uint32_t t_index = 0;  // schedule timestep
    double identity = 0.0;      // proxy of the implied x0-hat vs the reference
    double latent_l2 = 0.0;     // after the DDIM update
    double millis = 0.0;        // informational; never written to artifacts
};

struct GenerationResult {
    Tensor z0;
    ConceptMask mask;
    std::vector<StepDiag> diagnostics;
    LatentTrajectory trajectory;
    std::uint32_t mask_freeze_step = 0;
    double identity = 0.0;  // final z0 vs reference latent under M_R
};

// Runs the reference UNet over the stored inverted trajectory while the
// generation UNet denoises fresh seeded noise with the injection processors
// installed. The reference side only reads trajectory latents.
GenerationResult generate(const GenerationRequest& req, const NoiseSchedule& sched);

// Plain single-UNet DDIM sampling from the same seeded noise; the baseline
// that disabled injections must match byte-for-byte.
Tensor sample_vanilla(const ModelWeights& w, const NoiseSchedule& sched,
                      const PromptEmbedding& prompt, std::uint64_t seed);

// 1 - normalized masked squared distance, in [0,1] up to rounding: 1 for
// identical tensors, ~0 for sign-flipped ones. The mask is broadcast over
// channels.
double identity_proxy(const Tensor& z_gen, const Tensor& x_ref, const Tensor& m_r);

enum class SweepAxis { WS, WC, K };

struct SweepRow {
    double value = 0.0;
    double identity = 0.0;
    double latent_l2 = 0.0;
};

// One generate per value, other knobs fixed; deterministic row order.
std::vector<SweepRow> sweep(const GenerationRequest& req, const NoiseSchedule& sched,
                            SweepAxis axis, const std::vector<double>& values,
                            std::size_t jobs = 1);

const char* sweep_axis_name(SweepAxis axis);

}  // namespace atnj
