#include "atnj/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "atnj/tenio.hpp"

namespace atnj {

double NoiseSchedule::alpha_bar(std::uint32_t t) const {
    if (t == 0) return 1.0;
    if (t > betas.size()) throw InvalidSchedule("timestep out of range");
    return static_cast<double>(alpha_bars[t - 1]);
}

std::vector<std::uint32_t> NoiseSchedule::ascending_steps() const {
    std::vector<std::uint32_t> up(inference_steps.rbegin(), inference_steps.rend());
    return up;
}

NoiseSchedule build_schedule(double beta_start, double beta_end,
                             std::size_t train_steps, std::size_t T) {
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
        throw InvalidSchedule("require 0 < beta_start <= beta_end < 1");
    }
    if (train_steps == 0 || T == 0 || T > train_steps) {
        throw InvalidSchedule("require 0 < T <= train_steps");
    }

    NoiseSchedule s;
    s.betas.resize(train_steps);
    s.alpha_bars.resize(train_steps);
    const double sb0 = std::sqrt(beta_start);
    const double sb1 = std::sqrt(beta_end);
    double abar = 1.0;
    for (std::size_t i = 0; i < train_steps; ++i) {
        const double frac = train_steps == 1 ? 0.0
                                             : static_cast<double>(i) / static_cast<double>(train_steps - 1);
        const double sq = sb0 + (sb1 - sb0) * frac;
        const double beta = sq * sq;
        s.betas[i] = static_cast<float>(beta);
        abar *= 1.0 - beta;
        s.alpha_bars[i] = static_cast<float>(abar);
        if (!(abar > 0.0)) throw InvalidSchedule("alpha_bar underflowed to zero");
    }
    if (!(s.alpha_bars[0] > 0.99)) {
        throw InvalidSchedule("alpha_bar(1) must exceed 0.99");
    }

    // Uniform stride with offset 1: {1, 1+stride, ...}, descending for sampling.
    const std::size_t stride = train_steps / T;
    s.inference_steps.resize(T);
    for (std::size_t i = 0; i < T; ++i) {
        s.inference_steps[T - 1 - i] = static_cast<std::uint32_t>(1 + i * stride);
    }
    if (s.inference_steps.front() > train_steps) {
        throw InvalidSchedule("inference timestep exceeds train_steps");
    }
    return s;
}

namespace {

// Shared DDIM transport: reconstruct x0-hat from the source timestep, then
// renoise to the destination. Single f32 rounding per element at the store.
Tensor ddim_transport(const Tensor& x_t, const Tensor& eps, std::uint32_t t_from,
                      std::uint32_t t_to, const NoiseSchedule& sched) {
    if (!x_t.same_shape(eps)) throw DimensionMismatch("ddim: latent/eps shape mismatch");
    const double ab_from = sched.alpha_bar(t_from);
    const double ab_to = sched.alpha_bar(t_to);
    const double s_from = std::sqrt(ab_from);
    const double c_from = std::sqrt(1.0 - ab_from);
    const double s_to = std::sqrt(ab_to);
    const double c_to = std::sqrt(1.0 - ab_to);
    Tensor out(x_t.shape());
    for (std::size_t i = 0; i < x_t.numel(); ++i) {
        const double x = x_t[i];
        const double e = eps[i];
        const double x0 = (x - c_from * e) / s_from;
        out[i] = static_cast<float>(s_to * x0 + c_to * e);
    }
    return out;
}

}  // namespace

Tensor predict_x0(const Tensor& x_t, const Tensor& eps, std::uint32_t t,
                  const NoiseSchedule& sched) {
    if (!x_t.same_shape(eps)) throw DimensionMismatch("predict_x0: shape mismatch");
    const double ab = sched.alpha_bar(t);
    const double s = std::sqrt(ab);
    const double c = std::sqrt(1.0 - ab);
    Tensor out(x_t.shape());
    for (std::size_t i = 0; i < x_t.numel(); ++i) {
        out[i] = static_cast<float>((static_cast<double>(x_t[i]) - c * eps[i]) / s);
    }
    return out;
}

Tensor ddim_step(const Tensor& x_t, const Tensor& eps, std::uint32_t t_from,
                 std::uint32_t t_to, const NoiseSchedule& sched) {
    if (t_from == t_to) return x_t;
    if (t_from < t_to) throw InvalidSchedule("ddim_step runs downward: t_from > t_to");
    return ddim_transport(x_t, eps, t_from, t_to, sched);
}

Tensor ddim_inverse_step(const Tensor& x_t, const Tensor& eps, std::uint32_t t_from,
                         std::uint32_t t_to, const NoiseSchedule& sched) {
    if (t_from == t_to) return x_t;
    if (t_from > t_to) throw InvalidSchedule("ddim_inverse_step runs upward: t_from < t_to");
    return ddim_transport(x_t, eps, t_from, t_to, sched);
}

std::uint64_t LatentTrajectory::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const Tensor& t : latents) {
        const std::uint64_t th = tensor_hash(t);
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(th >> (8 * i));
        h = fnv1a64(b, 8, h);
    }
    for (std::uint32_t s : step_indices) {
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(s >> (8 * i));
        h = fnv1a64(b, 4, h);
    }
    return h;
}

LatentTrajectory invert_reference(const Tensor& x0, const EpsFn& eps_fn,
                                  const NoiseSchedule& sched) {
    x0.require_finite("invert_reference input");
    LatentTrajectory traj;
    traj.latents.push_back(x0);
    traj.step_indices.push_back(0);
    Tensor cur = x0;
    std::uint32_t t_prev = 0;
    for (std::uint32_t t : sched.ascending_steps()) {
        // eps stays constant within the step; the fixed-point refinement
        // re-queries it at the destination state so resampling, which
        // evaluates the model at (x_t, t), sees a matching prediction.
        Tensor eps = eps_fn(cur, t);
        Tensor next = ddim_inverse_step(cur, eps, t_prev, t, sched);
        for (int refine = 0; refine < 2; ++refine) {
            eps = eps_fn(next, t);
            next = ddim_inverse_step(cur, eps, t_prev, t, sched);
        }
        cur = std::move(next);
        traj.latents.push_back(cur);
        traj.step_indices.push_back(t);
        t_prev = t;
    }
    return traj;
}

void save_trajectory(const std::string& path, const LatentTrajectory& traj) {
    if (traj.latents.size() != traj.step_indices.size() || traj.latents.empty()) {
        throw DimensionMismatch("trajectory latents/indices mismatch");
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os.write("ATRJ", 4);
    wire::put_u32(os, static_cast<std::uint32_t>(traj.num_steps()));
    for (const Tensor& t : traj.latents) write_tensor(os, t);
    for (std::uint32_t s : traj.step_indices) wire::put_u32(os, s);
    if (!os) throw IoError("write failed: " + path);
}

LatentTrajectory load_trajectory(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    wire::expect_magic(is, "ATRJ", ".traj");
    const std::uint32_t T = wire::get_u32(is);
    LatentTrajectory traj;
    traj.latents.reserve(T + 1);
    for (std::uint32_t i = 0; i <= T; ++i) traj.latents.push_back(read_tensor(is));
    traj.step_indices.resize(T + 1);
    for (auto& s : traj.step_indices) s = wire::get_u32(is);
    for (std::size_t i = 1; i < traj.latents.size(); ++i) {
        if (!traj.latents[i].same_shape(traj.latents[0])) {
            throw ParseError(".traj: inconsistent latent shapes");
        }
    }
    return traj;
}

void require_matching(const LatentTrajectory& traj, const NoiseSchedule& sched) {
    const auto up = sched.ascending_steps();
    if (traj.num_steps() != up.size()) {
        throw TrajectoryMismatch("trajectory step count differs from schedule");
    }
    if (traj.step_indices.empty() || traj.step_indices[0] != 0) {
        throw TrajectoryMismatch("trajectory must start at timestep 0");
    }
    for (std::size_t i = 0; i < up.size(); ++i) {
        if (traj.step_indices[i + 1] != up[i]) {
            throw TrajectoryMismatch("trajectory timesteps differ from schedule");
        }
    }
}

}  // namespace atnj
