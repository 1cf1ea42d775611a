#pragma once
// DDPM machinery over fixed-horizon action sequences: squared-cosine
// noise schedule, forward noising, the reverse denoising step, and
// ancestral sampling with an injected noise-prediction function.

#include <cmath>
#include <functional>
#include <vector>

#include "floornav/core.hpp"
#include "floornav/rng.hpp"

namespace floornav {

// H x 2 action matrix, row-major; components are normalized to [-1,1]
// for clean sequences (noisy intermediates range freely).
struct ActionSeq {
    int horizon = 0;
    std::vector<double> v;  // 2*horizon values

    ActionSeq() = default;
    explicit ActionSeq(int h) : horizon(h), v(static_cast<size_t>(h) * 2, 0.0) {}

    double& at(int i, int j) { return v[static_cast<size_t>(i) * 2 + j]; }
    double at(int i, int j) const { return v[static_cast<size_t>(i) * 2 + j]; }
    size_t size() const { return v.size(); }
};

struct NoiseSchedule {
    int K = 0;
    std::vector<double> alpha_bar;  // K+1 entries, alpha_bar[0] = 1
    std::vector<double> alpha;      // index 1..K (entry 0 unused = 1)
    std::vector<double> beta;       // 1 - alpha_k
    std::vector<double> sigma;      // posterior std; sigma[1] = 0
};

// alpha_bar_k = f(k/K)/f(0), f(t) = cos^2((t+s)/(1+s) * pi/2), s = 0.008;
// per-step beta clipped at 0.999 and alpha_bar rebuilt from the clipped
// alphas so the invariants (strictly decreasing, in (0,1]) hold exactly.
inline NoiseSchedule square_cosine_schedule(int K) {
    if (K < 1) throw Error("square_cosine_schedule: K must be >= 1");
    const double s = 0.008;
    auto f = [s](double t) {
        double c = std::cos((t + s) / (1.0 + s) * M_PI / 2.0);
        return c * c;
    };
    NoiseSchedule sched;
    sched.K = K;
    sched.alpha_bar.assign(K + 1, 1.0);
    sched.alpha.assign(K + 1, 1.0);
    sched.beta.assign(K + 1, 0.0);
    sched.sigma.assign(K + 1, 0.0);

    const double f0 = f(0.0);
    double prev_raw = 1.0;
    for (int k = 1; k <= K; ++k) {
        double raw = f(static_cast<double>(k) / K) / f0;
        double beta = 1.0 - raw / prev_raw;
        if (beta > 0.999) beta = 0.999;
        prev_raw = raw;
        sched.beta[k] = beta;
        sched.alpha[k] = 1.0 - beta;
        sched.alpha_bar[k] = sched.alpha_bar[k - 1] * sched.alpha[k];
        sched.sigma[k] =
            std::sqrt(beta * (1.0 - sched.alpha_bar[k - 1]) / (1.0 - sched.alpha_bar[k]));
    }
    return sched;
}

// a^k = sqrt(alpha_bar_k) a0 + sqrt(1 - alpha_bar_k) eps; k = 0 is identity.
inline ActionSeq forward_noise(const ActionSeq& a0, int k, const ActionSeq& eps,
                               const NoiseSchedule& sched) {
    if (k < 0 || k > sched.K) throw Error("forward_noise: k out of range");
    if (eps.size() != a0.size()) throw Error("forward_noise: shape mismatch");
    ActionSeq out = a0;
    if (k == 0) return out;
    double sa = std::sqrt(sched.alpha_bar[k]);
    double sb = std::sqrt(1.0 - sched.alpha_bar[k]);
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = sa * a0.v[i] + sb * eps.v[i];
    return out;
}

// a^{k-1} = (a^k - ((1-alpha_k)/sqrt(1-alpha_bar_k)) eps_hat) / sqrt(alpha_k)
//           + sigma_k z
inline ActionSeq reverse_step(const ActionSeq& a_k, const ActionSeq& eps_hat, int k,
                              const ActionSeq& z, const NoiseSchedule& sched) {
    if (k < 1 || k > sched.K) throw Error("reverse_step: k out of range");
    if (eps_hat.size() != a_k.size() || z.size() != a_k.size())
        throw Error("reverse_step: shape mismatch");
    double inv_sqrt_alpha = 1.0 / std::sqrt(sched.alpha[k]);
    double coef = (1.0 - sched.alpha[k]) / std::sqrt(1.0 - sched.alpha_bar[k]);
    ActionSeq out = a_k;
    for (size_t i = 0; i < out.v.size(); ++i)
        out.v[i] = inv_sqrt_alpha * (a_k.v[i] - coef * eps_hat.v[i]) + sched.sigma[k] * z.v[i];
    return out;
}

using Denoiser = std::function<ActionSeq(const ActionSeq& a_k, int k)>;

// Ancestral sampling: a^K ~ N(0, I), K reverse steps with fresh z per step
// (z = 0 at k = 1); the final sequence is clamped to the [-1,1] action box.
inline ActionSeq sample(const Denoiser& denoiser, int horizon, const NoiseSchedule& sched,
                        Rng& rng) {
    ActionSeq a(horizon);
    for (auto& x : a.v) x = rng.normal();
    for (int k = sched.K; k >= 1; --k) {
        ActionSeq eps_hat = denoiser(a, k);
        ActionSeq z(horizon);
        if (k > 1)
            for (auto& x : z.v) x = rng.normal();
        a = reverse_step(a, eps_hat, k, z, sched);
    }
    for (auto& x : a.v) x = std::clamp(x, -1.0, 1.0);
    return a;
}

}  // namespace floornav
