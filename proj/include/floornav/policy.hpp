#pragma once
// Conditional diffusion policy over action sequences.
//
// Context: each raycast observation in the short history passes through a
// shared two-layer encoder, the downsampled floor plan through its own
// encoder, and the resulting token sequence through a stack of residual
// self-attention blocks; the context vector c_t is the plan token's final
// embedding. The denoiser is a dense residual trunk conditioned on
// (c_t, goal, pose, step embedding). Two heads regularize training:
// f_d predicts the remaining shortest-path distance, and (Naive variant
// only) f_p predicts the agent pose, which also feeds the condition in
// place of an external localizer.
//
// Everything runs on one flat 64-bit parameter vector with hand-written
// backward passes, checked against central finite differences in the tests.

#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "floornav/core.hpp"
#include "floornav/diffusion.hpp"
#include "floornav/episodes.hpp"
#include "floornav/nn.hpp"
#include "floornav/rng.hpp"
#include "floornav/scene.hpp"
#include "floornav/simulator.hpp"

namespace floornav {

enum class Variant { Naive, Loc };

inline const char* to_string(Variant v) { return v == Variant::Naive ? "naive" : "loc"; }
inline Variant variant_from_string(const std::string& s) {
    if (s == "naive") return Variant::Naive;
    if (s == "loc") return Variant::Loc;
    throw Error("unknown variant: " + s);
}

struct ModelConfig {
    int rays = 32;
    int context_len = 3;  // l; history holds l+1 observations
    int plan_patch = 32;  // floor plan downsample side
    int d_model = 64;     // context dim (paper setting 256 remains expressible)
    int n_layers = 4;
    int n_heads = 4;
    int d_ff = 128;
    int h_psi = 64;
    int h_phi = 64;
    int h_eps = 128;
    int eps_blocks = 2;
    int h_head = 32;
    int k_emb = 16;
    int horizon = 32;         // H_p
    int exec_horizon = 16;    // H_a
    int diffusion_steps = 10; // K
    bool positional_encoding = false;

    int tokens() const { return context_len + 2; }
    int cond_dim() const { return d_model + 2 + 4 + k_emb; }
    int eps_in_dim() const { return 2 * horizon + cond_dim(); }
};

struct TrainConfig {
    double lr = 1e-4;
    int epochs = 5;
    int batch = 64;
    double lambda_d = 0.001;     // distance head weight (lambda_1 = lambda_3)
    double lambda_pose = 0.005;  // pose head weight (lambda_2, Naive only)
    double weight_decay = 0.01;
    uint64_t seed = 0;
    int workers = 1;
};

// Conditioning input assembled by the caller. The observation history is
// oldest-first and padded by repeating the oldest entry; the goal is a
// world position; pose is present for the Loc variant only.
struct ContextInput {
    std::vector<std::vector<double>> obs_history;
    std::vector<double> plan_features;
    WorldPoint goal;
    std::optional<Pose> pose;
};

// Average obstacle occupancy per block of a patch x patch downsample.
inline std::vector<double> downsample_plan(const GridMap& map, int patch) {
    std::vector<double> out(static_cast<size_t>(patch) * patch, 0.0);
    for (int pr = 0; pr < patch; ++pr) {
        int r0 = static_cast<int>(static_cast<long>(pr) * map.height / patch);
        int r1 = static_cast<int>(static_cast<long>(pr + 1) * map.height / patch);
        r1 = std::max(r1, r0 + 1);
        for (int pc = 0; pc < patch; ++pc) {
            int c0 = static_cast<int>(static_cast<long>(pc) * map.width / patch);
            int c1 = static_cast<int>(static_cast<long>(pc + 1) * map.width / patch);
            c1 = std::max(c1, c0 + 1);
            int occ = 0, tot = 0;
            for (int r = r0; r < r1 && r < map.height; ++r)
                for (int c = c0; c < c1 && c < map.width; ++c) {
                    tot++;
                    if (map.is_obstacle(c, r)) occ++;
                }
            out[static_cast<size_t>(pr) * patch + pc] = tot ? static_cast<double>(occ) / tot : 0.0;
        }
    }
    return out;
}

struct PolicyNet {
    ModelConfig cfg;
    Variant variant = Variant::Loc;
    double action_scale = 1.0;  // max |action component| in the dataset
    double pos_scale = 1.0;     // max |coordinate| in the dataset
    uint64_t train_seed = 0;

    nn::Dense psi1, psi2, phi1, phi2;
    std::vector<nn::AttnBlock> blocks;
    nn::Dense eps_in, eps_out;
    std::vector<nn::Dense> eps_mid;  // two per residual block
    nn::Dense fd1, fd2;
    nn::Dense fp1, fp2;  // Naive only

    std::vector<double> params;

    struct Workspace {
        std::vector<std::vector<double>> psi_h;  // tanh outputs per obs token
        std::vector<double> phi_h;
        std::vector<double> tokens;  // attention input, T*d
        std::vector<nn::AttnBlock::Workspace> attn_ws;
        std::vector<std::vector<double>> layer_out;  // per layer, T*d
        std::vector<double> c_t;
        std::vector<double> fp_h, fp_raw;  // Naive pose head caches
        double fp_norm = 1.0;
        std::vector<double> pose_vec;  // 4: x_n, y_n, cos, sin
        std::vector<double> goal_n;    // 2
        std::vector<double> kemb;
        std::vector<double> eps_in_vec, z0;
        std::vector<std::vector<double>> blk_in, blk_h;
        std::vector<double> eps_hat;  // 2*H_p
        std::vector<double> fd_in, fd_h;
        double fd_s = 0.0;
        double d_hat = 0.0;
    };

    size_t param_count() const { return params.size(); }

    void check_context(const ContextInput& ctx) const {
        if (static_cast<int>(ctx.obs_history.size()) != cfg.context_len + 1)
            throw Error("ContextInput: history must hold context_len+1 observations");
        for (const auto& o : ctx.obs_history)
            if (static_cast<int>(o.size()) != cfg.rays)
                throw Error("ContextInput: observation width mismatch");
        if (static_cast<int>(ctx.plan_features.size()) != cfg.plan_patch * cfg.plan_patch)
            throw Error("ContextInput: plan feature size mismatch");
        if (variant == Variant::Loc && !ctx.pose)
            throw Error("ContextInput: Loc variant requires a pose");
    }

    // context -> c_t and pose_vec (everything the denoiser conditions on
    // that does not depend on the diffusion step)
    void forward_context(const ContextInput& ctx, Workspace& ws) const {
        check_context(ctx);
        const int T = cfg.tokens();
        const int d = cfg.d_model;
        const double* p = params.data();

        ws.psi_h.assign(cfg.context_len + 1, std::vector<double>(cfg.h_psi));
        ws.tokens.assign(static_cast<size_t>(T) * d, 0.0);
        std::vector<double> pre(std::max(cfg.h_psi, cfg.h_phi));
        for (int i = 0; i <= cfg.context_len; ++i) {
            psi1.fwd(p, ctx.obs_history[i].data(), pre.data());
            nn::tanh_fwd(pre.data(), ws.psi_h[i].data(), cfg.h_psi);
            psi2.fwd(p, ws.psi_h[i].data(), ws.tokens.data() + static_cast<size_t>(i) * d);
        }
        ws.phi_h.assign(cfg.h_phi, 0.0);
        phi1.fwd(p, ctx.plan_features.data(), pre.data());
        nn::tanh_fwd(pre.data(), ws.phi_h.data(), cfg.h_phi);
        phi2.fwd(p, ws.phi_h.data(), ws.tokens.data() + static_cast<size_t>(T - 1) * d);

        if (cfg.positional_encoding) {
            std::vector<double> pe(d);
            for (int t = 0; t < T; ++t) {
                nn::sinusoidal_embedding(t + 1, d, pe.data());
                for (int i = 0; i < d; ++i) ws.tokens[static_cast<size_t>(t) * d + i] += pe[i];
            }
        }

        ws.attn_ws.resize(cfg.n_layers);
        ws.layer_out.assign(cfg.n_layers, std::vector<double>(static_cast<size_t>(T) * d));
        const double* x = ws.tokens.data();
        for (int L = 0; L < cfg.n_layers; ++L) {
            blocks[L].fwd(p, x, T, ws.attn_ws[L], ws.layer_out[L].data());
            x = ws.layer_out[L].data();
        }
        ws.c_t.assign(x + static_cast<size_t>(T - 1) * d, x + static_cast<size_t>(T) * d);

        ws.goal_n = {ctx.goal.x / pos_scale, ctx.goal.y / pos_scale};
        ws.pose_vec.assign(4, 0.0);
        if (variant == Variant::Loc) {
            ws.pose_vec = {ctx.pose->position.x / pos_scale, ctx.pose->position.y / pos_scale,
                           std::cos(ctx.pose->theta), std::sin(ctx.pose->theta)};
        } else {
            ws.fp_h.assign(cfg.h_head, 0.0);
            ws.fp_raw.assign(4, 0.0);
            std::vector<double> hpre(cfg.h_head);
            fp1.fwd(p, ws.c_t.data(), hpre.data());
            nn::tanh_fwd(hpre.data(), ws.fp_h.data(), cfg.h_head);
            fp2.fwd(p, ws.fp_h.data(), ws.fp_raw.data());
            double n2 = ws.fp_raw[2] * ws.fp_raw[2] + ws.fp_raw[3] * ws.fp_raw[3] + 1e-12;
            ws.fp_norm = std::sqrt(n2);
            ws.pose_vec = {ws.fp_raw[0], ws.fp_raw[1], ws.fp_raw[2] / ws.fp_norm,
                           ws.fp_raw[3] / ws.fp_norm};
        }
    }

    // noise prediction for a (possibly noisy) normalized action sequence
    void forward_eps(const ActionSeq& a_k, int k, Workspace& ws) const {
        const double* p = params.data();
        ws.kemb.assign(cfg.k_emb, 0.0);
        nn::sinusoidal_embedding(k, cfg.k_emb, ws.kemb.data());

        ws.eps_in_vec.assign(cfg.eps_in_dim(), 0.0);
        double* in = ws.eps_in_vec.data();
        std::memcpy(in, a_k.v.data(), sizeof(double) * a_k.v.size());
        size_t off = a_k.v.size();
        std::memcpy(in + off, ws.c_t.data(), sizeof(double) * cfg.d_model);
        off += cfg.d_model;
        in[off++] = ws.goal_n[0];
        in[off++] = ws.goal_n[1];
        for (int i = 0; i < 4; ++i) in[off++] = ws.pose_vec[i];
        std::memcpy(in + off, ws.kemb.data(), sizeof(double) * cfg.k_emb);

        std::vector<double> pre(cfg.h_eps);
        ws.z0.assign(cfg.h_eps, 0.0);
        eps_in.fwd(p, in, pre.data());
        nn::tanh_fwd(pre.data(), ws.z0.data(), cfg.h_eps);

        ws.blk_in.assign(cfg.eps_blocks, std::vector<double>(cfg.h_eps));
        ws.blk_h.assign(cfg.eps_blocks, std::vector<double>(cfg.h_eps));
        std::vector<double> z = ws.z0, r(cfg.h_eps);
        for (int b = 0; b < cfg.eps_blocks; ++b) {
            ws.blk_in[b] = z;
            eps_mid[2 * b].fwd(p, z.data(), pre.data());
            nn::tanh_fwd(pre.data(), ws.blk_h[b].data(), cfg.h_eps);
            eps_mid[2 * b + 1].fwd(p, ws.blk_h[b].data(), r.data());
            for (int i = 0; i < cfg.h_eps; ++i) z[i] += r[i];
        }
        ws.blk_in.push_back(z);  // final trunk state
        ws.eps_hat.assign(2 * cfg.horizon, 0.0);
        eps_out.fwd(p, z.data(), ws.eps_hat.data());
    }

    // f_d on (c_t, pose_vec, goal)
    void forward_dist(Workspace& ws) const {
        const double* p = params.data();
        ws.fd_in.assign(cfg.d_model + 6, 0.0);
        std::memcpy(ws.fd_in.data(), ws.c_t.data(), sizeof(double) * cfg.d_model);
        for (int i = 0; i < 4; ++i) ws.fd_in[cfg.d_model + i] = ws.pose_vec[i];
        ws.fd_in[cfg.d_model + 4] = ws.goal_n[0];
        ws.fd_in[cfg.d_model + 5] = ws.goal_n[1];
        std::vector<double> pre(cfg.h_head);
        ws.fd_h.assign(cfg.h_head, 0.0);
        fd1.fwd(p, ws.fd_in.data(), pre.data());
        nn::tanh_fwd(pre.data(), ws.fd_h.data(), cfg.h_head);
        double s = 0.0;
        fd2.fwd(p, ws.fd_h.data(), &s);
        ws.fd_s = s;
        ws.d_hat = nn::softplus(s);
    }

    // Backward through the whole sample given loss seeds. d_eps_hat has
    // 2*H_p entries; d_d_hat is dL/d d_hat; d_pose_vec has 4 entries
    // (zeros unless the pose loss is active).
    void backward(const ContextInput& ctx, const Workspace& ws, const std::vector<double>& d_eps_hat,
                  double d_d_hat, const std::vector<double>& d_pose_loss, double* g) const {
        const double* p = params.data();
        const int d = cfg.d_model;
        const int T = cfg.tokens();

        std::vector<double> d_c_t(d, 0.0);
        std::vector<double> d_pose_vec = d_pose_loss;

        // distance head
        if (d_d_hat != 0.0) {
            double d_s = d_d_hat * nn::softplus_grad(ws.fd_s);
            std::vector<double> d_fd_h(cfg.h_head, 0.0);
            fd2.bwd(p, ws.fd_h.data(), &d_s, g, d_fd_h.data());
            std::vector<double> d_fd_pre(cfg.h_head, 0.0);
            nn::tanh_bwd(ws.fd_h.data(), d_fd_h.data(), d_fd_pre.data(), cfg.h_head);
            std::vector<double> d_fd_in(cfg.d_model + 6, 0.0);
            fd1.bwd(p, ws.fd_in.data(), d_fd_pre.data(), g, d_fd_in.data());
            for (int i = 0; i < d; ++i) d_c_t[i] += d_fd_in[i];
            for (int i = 0; i < 4; ++i) d_pose_vec[i] += d_fd_in[d + i];
        }

        // denoiser trunk
        {
            std::vector<double> dz(cfg.h_eps, 0.0);
            eps_out.bwd(p, ws.blk_in[cfg.eps_blocks].data(), d_eps_hat.data(), g, dz.data());
            std::vector<double> d_h(cfg.h_eps), d_pre(cfg.h_eps);
            for (int b = cfg.eps_blocks - 1; b >= 0; --b) {
                std::fill(d_h.begin(), d_h.end(), 0.0);
                eps_mid[2 * b + 1].bwd(p, ws.blk_h[b].data(), dz.data(), g, d_h.data());
                std::fill(d_pre.begin(), d_pre.end(), 0.0);
                nn::tanh_bwd(ws.blk_h[b].data(), d_h.data(), d_pre.data(), cfg.h_eps);
                // residual: dz flows through unchanged plus the branch
                eps_mid[2 * b].bwd(p, ws.blk_in[b].data(), d_pre.data(), g, dz.data());
            }
            std::vector<double> d_z0_pre(cfg.h_eps, 0.0);
            nn::tanh_bwd(ws.z0.data(), dz.data(), d_z0_pre.data(), cfg.h_eps);
            std::vector<double> d_in(cfg.eps_in_dim(), 0.0);
            eps_in.bwd(p, ws.eps_in_vec.data(), d_z0_pre.data(), g, d_in.data());
            size_t off = static_cast<size_t>(2) * cfg.horizon;
            for (int i = 0; i < d; ++i) d_c_t[i] += d_in[off + i];
            off += d + 2;  // goal gets no gradient (pure input)
            for (int i = 0; i < 4; ++i) d_pose_vec[i] += d_in[off + i];
        }

        // pose head (Naive): pose_vec = (raw0, raw1, raw2/n, raw3/n)
        if (variant == Variant::Naive) {
            std::vector<double> d_raw(4, 0.0);
            d_raw[0] = d_pose_vec[0];
            d_raw[1] = d_pose_vec[1];
            double n = ws.fp_norm;
            double vx = ws.fp_raw[2], vy = ws.fp_raw[3];
            double dot = vx * d_pose_vec[2] + vy * d_pose_vec[3];
            d_raw[2] = d_pose_vec[2] / n - vx * dot / (n * n * n);
            d_raw[3] = d_pose_vec[3] / n - vy * dot / (n * n * n);
            std::vector<double> d_fp_h(cfg.h_head, 0.0);
            fp2.bwd(p, ws.fp_h.data(), d_raw.data(), g, d_fp_h.data());
            std::vector<double> d_fp_pre(cfg.h_head, 0.0);
            nn::tanh_bwd(ws.fp_h.data(), d_fp_h.data(), d_fp_pre.data(), cfg.h_head);
            fp1.bwd(p, ws.c_t.data(), d_fp_pre.data(), g, d_c_t.data());
        }

        // attention stack
        std::vector<double> d_x(static_cast<size_t>(T) * d, 0.0);
        for (int i = 0; i < d; ++i) d_x[static_cast<size_t>(T - 1) * d + i] = d_c_t[i];
        for (int L = cfg.n_layers - 1; L >= 0; --L) {
            std::vector<double> d_in(static_cast<size_t>(T) * d, 0.0);
            blocks[L].bwd(p, ws.attn_ws[L], d_x.data(), g, d_in.data());
            d_x = std::move(d_in);
        }

        // token encoders
        std::vector<double> d_h(std::max(cfg.h_psi, cfg.h_phi));
        std::vector<double> d_pre(std::max(cfg.h_psi, cfg.h_phi));
        for (int i = 0; i <= cfg.context_len; ++i) {
            std::fill(d_h.begin(), d_h.end(), 0.0);
            psi2.bwd(p, ws.psi_h[i].data(), d_x.data() + static_cast<size_t>(i) * d, g, d_h.data());
            std::fill(d_pre.begin(), d_pre.end(), 0.0);
            nn::tanh_bwd(ws.psi_h[i].data(), d_h.data(), d_pre.data(), cfg.h_psi);
            psi1.bwd(p, ctx.obs_history[i].data(), d_pre.data(), g, nullptr);
        }
        std::fill(d_h.begin(), d_h.end(), 0.0);
        phi2.bwd(p, ws.phi_h.data(), d_x.data() + static_cast<size_t>(T - 1) * d, g, d_h.data());
        std::fill(d_pre.begin(), d_pre.end(), 0.0);
        nn::tanh_bwd(ws.phi_h.data(), d_h.data(), d_pre.data(), cfg.h_phi);
        phi1.bwd(p, ctx.plan_features.data(), d_pre.data(), g, nullptr);
    }
};

inline PolicyNet make_policy(const ModelConfig& cfg, Variant variant) {
    PolicyNet net;
    net.cfg = cfg;
    net.variant = variant;
    nn::ParamLayout layout;
    net.psi1.init(layout, cfg.rays, cfg.h_psi);
    net.psi2.init(layout, cfg.h_psi, cfg.d_model);
    net.phi1.init(layout, cfg.plan_patch * cfg.plan_patch, cfg.h_phi);
    net.phi2.init(layout, cfg.h_phi, cfg.d_model);
    net.blocks.resize(cfg.n_layers);
    for (auto& b : net.blocks) b.init(layout, cfg.d_model, cfg.d_ff, cfg.n_heads);
    net.eps_in.init(layout, cfg.eps_in_dim(), cfg.h_eps);
    net.eps_mid.resize(2 * cfg.eps_blocks);
    for (auto& m : net.eps_mid) m.init(layout, cfg.h_eps, cfg.h_eps);
    net.eps_out.init(layout, cfg.h_eps, 2 * cfg.horizon);
    net.fd1.init(layout, cfg.d_model + 6, cfg.h_head);
    net.fd2.init(layout, cfg.h_head, 1);
    if (variant == Variant::Naive) {
        net.fp1.init(layout, cfg.d_model, cfg.h_head);
        net.fp2.init(layout, cfg.h_head, 4);
    }
    net.params.assign(layout.size, 0.0);
    return net;
}

inline void init_params(PolicyNet& net, Rng& rng) {
    net.psi1.xavier(net.params, rng);
    net.psi2.xavier(net.params, rng);
    net.phi1.xavier(net.params, rng);
    net.phi2.xavier(net.params, rng);
    for (auto& b : net.blocks) b.xavier(net.params, rng);
    net.eps_in.xavier(net.params, rng);
    for (auto& m : net.eps_mid) m.xavier(net.params, rng);
    net.eps_out.xavier(net.params, rng);
    net.fd1.xavier(net.params, rng);
    net.fd2.xavier(net.params, rng);
    if (net.variant == Variant::Naive) {
        net.fp1.xavier(net.params, rng);
        net.fp2.xavier(net.params, rng);
    }
}

// thin wrappers for the conditioning pieces

inline std::vector<double> encode_context(const PolicyNet& net, const ContextInput& ctx) {
    PolicyNet::Workspace ws;
    net.forward_context(ctx, ws);
    return ws.c_t;
}

struct HeadOutputs {
    double d_hat = 0.0;
    std::vector<double> pose_vec;  // (x_n, y_n, cos, sin)
    std::vector<double> eps_hat;   // for the given (a_k, k)
};

inline HeadOutputs heads(const PolicyNet& net, const ContextInput& ctx, const ActionSeq& a_k,
                         int k) {
    PolicyNet::Workspace ws;
    net.forward_context(ctx, ws);
    net.forward_eps(a_k, k, ws);
    net.forward_dist(ws);
    return {ws.d_hat, ws.pose_vec, ws.eps_hat};
}

// One training sample with its noise draw frozen, so the loss is a pure
// function of the parameters (required for finite-difference checks).
struct TrainSample {
    ContextInput ctx;
    ActionSeq a0;  // clean normalized actions
    ActionSeq eps;
    int k = 1;
    double d_target = 0.0;                 // normalized
    std::vector<double> pose_target;       // 4 entries, Naive only
};

// Loss given predictions; the zero point of the training objective.
inline double sample_loss_from_predictions(const std::vector<double>& eps_hat,
                                           const ActionSeq& eps, double d_hat, double d_target,
                                           const std::vector<double>& pose_vec,
                                           const std::vector<double>& pose_target,
                                           double lambda_d, double lambda_pose) {
    double mse_eps = 0.0;
    for (size_t i = 0; i < eps.v.size(); ++i) {
        double diff = eps_hat[i] - eps.v[i];
        mse_eps += diff * diff;
    }
    mse_eps /= static_cast<double>(eps.v.size());
    double loss = mse_eps + lambda_d * (d_hat - d_target) * (d_hat - d_target);
    if (!pose_target.empty()) {
        double mse_pose = 0.0;
        for (int i = 0; i < 4; ++i) {
            double diff = pose_vec[i] - pose_target[i];
            mse_pose += diff * diff;
        }
        loss += lambda_pose * mse_pose / 4.0;
    }
    return loss;
}

namespace detail {

inline double sample_loss_and_grad(const PolicyNet& net, const TrainSample& s,
                                   const NoiseSchedule& sched, double lambda_d,
                                   double lambda_pose, double weight,
                                   PolicyNet::Workspace& ws, double* g) {
    ActionSeq a_k = forward_noise(s.a0, s.k, s.eps, sched);
    net.forward_context(s.ctx, ws);
    net.forward_eps(a_k, s.k, ws);
    net.forward_dist(ws);

    const bool pose_term = net.variant == Variant::Naive && !s.pose_target.empty();
    double loss = sample_loss_from_predictions(ws.eps_hat, s.eps, ws.d_hat, s.d_target,
                                               ws.pose_vec, pose_term ? s.pose_target
                                                                      : std::vector<double>{},
                                               lambda_d, lambda_pose);
    if (g) {
        const size_t n_eps = s.eps.v.size();
        std::vector<double> d_eps_hat(n_eps);
        for (size_t i = 0; i < n_eps; ++i)
            d_eps_hat[i] = weight * 2.0 * (ws.eps_hat[i] - s.eps.v[i]) / static_cast<double>(n_eps);
        double d_d_hat = weight * lambda_d * 2.0 * (ws.d_hat - s.d_target);
        std::vector<double> d_pose(4, 0.0);
        if (pose_term)
            for (int i = 0; i < 4; ++i)
                d_pose[i] = weight * lambda_pose * 2.0 * (ws.pose_vec[i] - s.pose_target[i]) / 4.0;
        net.backward(s.ctx, ws, d_eps_hat, d_d_hat, d_pose, g);
    }
    return loss;
}

}  // namespace detail

// Mean loss over the batch; if `grad` is non-null it receives the full
// analytic gradient. Fixed worker count gives a fixed reduction order.
inline double batch_loss(const PolicyNet& net, const std::vector<TrainSample>& batch,
                         const NoiseSchedule& sched, double lambda_d, double lambda_pose,
                         std::vector<double>* grad, int workers = 1) {
    if (batch.empty()) throw Error("batch_loss: empty batch");
    const double w = 1.0 / static_cast<double>(batch.size());
    if (grad) grad->assign(net.params.size(), 0.0);

    if (workers <= 1) {
        PolicyNet::Workspace ws;
        double total = 0.0;
        for (const auto& s : batch)
            total += detail::sample_loss_and_grad(net, s, sched, lambda_d, lambda_pose, w, ws,
                                                  grad ? grad->data() : nullptr);
        return total * w;
    }

    int W = std::min<int>(workers, static_cast<int>(batch.size()));
    std::vector<double> losses(W, 0.0);
    std::vector<std::vector<double>> grads(W);
    std::vector<std::thread> threads;
    for (int t = 0; t < W; ++t) {
        if (grad) grads[t].assign(net.params.size(), 0.0);
        threads.emplace_back([&, t] {
            PolicyNet::Workspace ws;
            size_t lo = batch.size() * t / W, hi = batch.size() * (t + 1) / W;
            for (size_t i = lo; i < hi; ++i)
                losses[t] += detail::sample_loss_and_grad(net, batch[i], sched, lambda_d,
                                                          lambda_pose, w, ws,
                                                          grad ? grads[t].data() : nullptr);
        });
    }
    for (auto& th : threads) th.join();
    double total = 0.0;
    for (int t = 0; t < W; ++t) {
        total += losses[t];
        if (grad)
            for (size_t i = 0; i < grad->size(); ++i) (*grad)[i] += grads[t][i];
    }
    return total * w;
}

inline double loss_naive(const PolicyNet& net, const std::vector<TrainSample>& batch,
                         const NoiseSchedule& sched, const TrainConfig& cfg) {
    if (net.variant != Variant::Naive) throw Error("loss_naive: net is not the Naive variant");
    return batch_loss(net, batch, sched, cfg.lambda_d, cfg.lambda_pose, nullptr);
}

inline double loss_loc(const PolicyNet& net, const std::vector<TrainSample>& batch,
                       const NoiseSchedule& sched, const TrainConfig& cfg) {
    if (net.variant != Variant::Loc) throw Error("loss_loc: net is not the Loc variant");
    return batch_loss(net, batch, sched, cfg.lambda_d, 0.0, nullptr);
}

// ---- training data assembly ----

struct SceneTable {
    std::map<std::string, Scene> scenes;
    std::map<std::string, std::vector<double>> plan_feats;

    void add(Scene scene, int plan_patch) {
        plan_feats[scene.id] = downsample_plan(scene.floor_plan, plan_patch);
        scenes.emplace(scene.id, std::move(scene));
    }
    const Scene& get(const std::string& id) const {
        auto it = scenes.find(id);
        if (it == scenes.end()) throw Error("unknown scene id: " + id);
        return it->second;
    }
    const std::vector<double>& feats(const std::string& id) const {
        auto it = plan_feats.find(id);
        if (it == plan_feats.end()) throw Error("unknown scene id: " + id);
        return it->second;
    }
};

// Observation history for trajectory index t, oldest first, padded by
// repeating the first pose's observation.
inline std::vector<std::vector<double>> observation_history(const Scene& scene,
                                                            const Trajectory& traj, int t,
                                                            const SimConfig& sim_cfg,
                                                            int context_len) {
    std::vector<std::vector<double>> hist;
    hist.reserve(context_len + 1);
    for (int i = t - context_len; i <= t; ++i) {
        int j = std::max(i, 0);
        AgentState st;
        st.pose = traj.poses[j];
        hist.push_back(observe(st, scene, sim_cfg).rays);
    }
    return hist;
}

struct TrainLog {
    std::vector<double> step_loss;
    std::vector<double> epoch_loss;
};

inline TrainLog train(PolicyNet& net, const std::vector<Episode>& episodes,
                      const SceneTable& table, const SimConfig& sim_cfg, const TrainConfig& tc) {
    if (episodes.empty()) throw Error("train: empty dataset");
    if (sim_cfg.rays != net.cfg.rays) throw Error("train: sim rays disagree with model rays");
    const ModelConfig& mc = net.cfg;
    net.train_seed = tc.seed;

    // normalization constants from the dataset
    double a_scale = 0.0, p_scale = 0.0;
    for (const auto& ep : episodes) {
        for (const auto& a : ep.actions)
            a_scale = std::max({a_scale, std::abs(a.x), std::abs(a.y)});
        for (const auto& pose : ep.trajectory.poses)
            p_scale = std::max({p_scale, std::abs(pose.position.x), std::abs(pose.position.y)});
        p_scale = std::max({p_scale, std::abs(ep.goal.x), std::abs(ep.goal.y)});
    }
    net.action_scale = a_scale > 0.0 ? a_scale : 1.0;
    net.pos_scale = p_scale > 0.0 ? p_scale : 1.0;

    // cumulative path length per episode, for distance-to-go targets
    std::vector<std::vector<double>> prefix(episodes.size());
    std::vector<std::pair<int, int>> segments;  // (episode, start index)
    for (size_t e = 0; e < episodes.size(); ++e) {
        const auto& poses = episodes[e].trajectory.poses;
        prefix[e].resize(poses.size(), 0.0);
        for (size_t i = 1; i < poses.size(); ++i)
            prefix[e][i] = prefix[e][i - 1] + distance(poses[i - 1].position, poses[i].position);
        for (size_t t = 0; t + 1 < poses.size(); ++t)
            segments.emplace_back(static_cast<int>(e), static_cast<int>(t));
    }

    Rng init_rng(derive_seed(tc.seed, "policy_init"));
    init_params(net, init_rng);
    Rng data_rng(derive_seed(tc.seed, "policy_data"));

    NoiseSchedule sched = square_cosine_schedule(mc.diffusion_steps);
    nn::AdamW opt(net.params.size());
    opt.lr = tc.lr;
    opt.weight_decay = tc.weight_decay;

    const int steps_per_epoch =
        std::max<int>(1, static_cast<int>((segments.size() + tc.batch - 1) / tc.batch));

    TrainLog log;
    std::vector<double> grad;
    std::vector<TrainSample> batch(tc.batch);
    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        double epoch_sum = 0.0;
        for (int step = 0; step < steps_per_epoch; ++step) {
            for (int b = 0; b < tc.batch; ++b) {
                auto [e, t] = segments[data_rng.uniform_int(segments.size())];
                const Episode& ep = episodes[e];
                const Scene& scene = table.get(ep.scene_id);
                const int len = static_cast<int>(ep.trajectory.poses.size());

                TrainSample& s = batch[b];
                s.ctx.obs_history =
                    observation_history(scene, ep.trajectory, t, sim_cfg, mc.context_len);
                s.ctx.plan_features = table.feats(ep.scene_id);

                // goal relabeling: a trajectory point at least H_a past t
                int lo = t + mc.exec_horizon;
                double d_to_go;
                if (lo <= len - 1) {
                    int gi = lo + static_cast<int>(data_rng.uniform_int(len - lo));
                    s.ctx.goal = ep.trajectory.poses[gi].position;
                    d_to_go = prefix[e][gi] - prefix[e][t];
                } else {
                    s.ctx.goal = ep.goal;
                    d_to_go = prefix[e].back() - prefix[e][t];
                }
                s.d_target = d_to_go / net.pos_scale;

                const Pose& pose = ep.trajectory.poses[t];
                if (net.variant == Variant::Loc) {
                    s.ctx.pose = pose;
                    s.pose_target.clear();
                } else {
                    s.ctx.pose.reset();
                    s.pose_target = {pose.position.x / net.pos_scale,
                                     pose.position.y / net.pos_scale, std::cos(pose.theta),
                                     std::sin(pose.theta)};
                }

                s.a0 = ActionSeq(mc.horizon);
                for (int i = 0; i < mc.horizon; ++i) {
                    size_t ai = static_cast<size_t>(t) + i;
                    if (ai < ep.actions.size()) {
                        s.a0.at(i, 0) = ep.actions[ai].x / net.action_scale;
                        s.a0.at(i, 1) = ep.actions[ai].y / net.action_scale;
                    }
                }
                s.k = 1 + static_cast<int>(data_rng.uniform_int(mc.diffusion_steps));
                s.eps = ActionSeq(mc.horizon);
                for (auto& x : s.eps.v) x = data_rng.normal();
            }

            double loss = batch_loss(net, batch, sched, tc.lambda_d,
                                     net.variant == Variant::Naive ? tc.lambda_pose : 0.0, &grad,
                                     tc.workers);
            opt.step(net.params, grad);
            log.step_loss.push_back(loss);
            epoch_sum += loss;
        }
        log.epoch_loss.push_back(epoch_sum / steps_per_epoch);
    }
    return log;
}

// ---- inference ----

struct ActInfo {
    Pose pose_estimate;   // f_p output (Naive) or the supplied pose
    double d_estimate = 0.0;  // meters
};

// Receding-horizon proposal: sample an H_p-step sequence conditioned on the
// context and return the first H_a actions, denormalized to meters.
inline std::vector<Action> act(const PolicyNet& net, const ContextInput& ctx,
                               const NoiseSchedule& sched, Rng& rng, ActInfo* info = nullptr) {
    PolicyNet::Workspace ws;
    net.forward_context(ctx, ws);
    Denoiser denoiser = [&](const ActionSeq& a_k, int k) {
        net.forward_eps(a_k, k, ws);
        ActionSeq out(net.cfg.horizon);
        out.v = ws.eps_hat;
        return out;
    };
    ActionSeq a0 = sample(denoiser, net.cfg.horizon, sched, rng);
    if (info) {
        net.forward_dist(ws);
        info->d_estimate = ws.d_hat * net.pos_scale;
        info->pose_estimate.position = {ws.pose_vec[0] * net.pos_scale,
                                        ws.pose_vec[1] * net.pos_scale};
        info->pose_estimate.theta = std::atan2(ws.pose_vec[3], ws.pose_vec[2]);
    }
    std::vector<Action> actions(net.cfg.exec_horizon);
    for (int i = 0; i < net.cfg.exec_horizon; ++i)
        actions[i] = {a0.at(i, 0) * net.action_scale, a0.at(i, 1) * net.action_scale};
    return actions;
}

// ---- checkpoint io ----

inline void save_checkpoint(const PolicyNet& net, const std::string& path) {
    nlohmann::ordered_json j;
    j["format"] = "floornav-policy-v1";
    j["variant"] = to_string(net.variant);
    nlohmann::ordered_json m;
    m["rays"] = net.cfg.rays;
    m["context_len"] = net.cfg.context_len;
    m["plan_patch"] = net.cfg.plan_patch;
    m["d_model"] = net.cfg.d_model;
    m["n_layers"] = net.cfg.n_layers;
    m["n_heads"] = net.cfg.n_heads;
    m["d_ff"] = net.cfg.d_ff;
    m["h_psi"] = net.cfg.h_psi;
    m["h_phi"] = net.cfg.h_phi;
    m["h_eps"] = net.cfg.h_eps;
    m["eps_blocks"] = net.cfg.eps_blocks;
    m["h_head"] = net.cfg.h_head;
    m["k_emb"] = net.cfg.k_emb;
    m["horizon"] = net.cfg.horizon;
    m["exec_horizon"] = net.cfg.exec_horizon;
    m["diffusion_steps"] = net.cfg.diffusion_steps;
    m["positional_encoding"] = net.cfg.positional_encoding;
    j["model"] = m;
    j["action_scale"] = net.action_scale;
    j["pos_scale"] = net.pos_scale;
    j["train_seed"] = net.train_seed;
    j["params"] = net.params;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open for writing: " + path);
    f << j.dump() << "\n";
}

inline PolicyNet load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open: " + path);
    nlohmann::ordered_json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw Error("malformed checkpoint " + path + ": " + e.what());
    }
    if (j.value("format", "") != "floornav-policy-v1")
        throw Error("unrecognized checkpoint format: " + path);
    const auto& m = j.at("model");
    ModelConfig cfg;
    cfg.rays = m.at("rays");
    cfg.context_len = m.at("context_len");
    cfg.plan_patch = m.at("plan_patch");
    cfg.d_model = m.at("d_model");
    cfg.n_layers = m.at("n_layers");
    cfg.n_heads = m.at("n_heads");
    cfg.d_ff = m.at("d_ff");
    cfg.h_psi = m.at("h_psi");
    cfg.h_phi = m.at("h_phi");
    cfg.h_eps = m.at("h_eps");
    cfg.eps_blocks = m.at("eps_blocks");
    cfg.h_head = m.at("h_head");
    cfg.k_emb = m.at("k_emb");
    cfg.horizon = m.at("horizon");
    cfg.exec_horizon = m.at("exec_horizon");
    cfg.diffusion_steps = m.at("diffusion_steps");
    cfg.positional_encoding = m.at("positional_encoding");
    PolicyNet net = make_policy(cfg, variant_from_string(j.at("variant")));
    net.action_scale = j.at("action_scale");
    net.pos_scale = j.at("pos_scale");
    net.train_seed = j.at("train_seed");
    std::vector<double> params = j.at("params").get<std::vector<double>>();
    if (params.size() != net.params.size())
        throw Error("checkpoint parameter count mismatch: " + path);
    net.params = std::move(params);
    return net;
}

}  // namespace floornav
