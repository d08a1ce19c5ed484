#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "atnj/tensor.hpp"

namespace atnj {

// Diffusion noise schedule. Timestep t counts applied noising steps:
// t = 0 is the clean state with alpha_bar(0) = 1; t in [1, train_steps]
// indexes betas/alpha_bars (stored 0-based, entry i belongs to t = i+1).
struct NoiseSchedule {
    std::vector<float> betas;
    std::vector<float> alpha_bars;
    std::vector<std::uint32_t> inference_steps;  // descending for sampling

    std::size_t train_steps() const { return betas.size(); }
    std::size_t num_inference_steps() const { return inference_steps.size(); }

    double alpha_bar(std::uint32_t t) const;

    // Inference timesteps in ascending order (inversion direction).
    std::vector<std::uint32_t> ascending_steps() const;
};

// Betas linear in the sqrt domain from beta_start to beta_end, squared;
// T inference timesteps at uniform stride with offset 1.
NoiseSchedule build_schedule(double beta_start = 8.5e-4, double beta_end = 1.2e-2,
                             std::size_t train_steps = 1000, std::size_t T = 50);

// eps-hat of the clean state implied by (x_t, eps) at timestep t.
Tensor predict_x0(const Tensor& x_t, const Tensor& eps, std::uint32_t t,
                  const NoiseSchedule& sched);

// Deterministic DDIM update (eta = 0) from t_from down to t_to.
Tensor ddim_step(const Tensor& x_t, const Tensor& eps, std::uint32_t t_from,
                 std::uint32_t t_to, const NoiseSchedule& sched);

// Same transport run upward (t_from < t_to), assuming locally constant eps.
Tensor ddim_inverse_step(const Tensor& x_t, const Tensor& eps, std::uint32_t t_from,
                         std::uint32_t t_to, const NoiseSchedule& sched);

// The DDIM-inverted reference latents X_0 .. X_T plus their timesteps.
struct LatentTrajectory {
    std::vector<Tensor> latents;               // index 0 = clean, index T = noisiest
    std::vector<std::uint32_t> step_indices;   // ascending, starts at 0

    std::size_t num_steps() const { return latents.empty() ? 0 : latents.size() - 1; }
    std::uint64_t hash() const;
};

using EpsFn = std::function<Tensor(const Tensor& x, std::uint32_t t)>;

// Integrates ddim_inverse_step from the clean latent up through every
// inference timestep. The model is queried at the destination timestep of
// each interval so resampling sees the matching conditioning.
LatentTrajectory invert_reference(const Tensor& x0, const EpsFn& eps_fn,
                                  const NoiseSchedule& sched);

// ".traj": magic "ATRJ", u32 T, (T+1) ".ten" tensors, (T+1) u32 indices.
void save_trajectory(const std::string& path, const LatentTrajectory& traj);
LatentTrajectory load_trajectory(const std::string& path);

// Throws TrajectoryMismatch unless the trajectory matches the schedule's
// inference timesteps exactly.
void require_matching(const LatentTrajectory& traj, const NoiseSchedule& sched);

}  // namespace atnj
