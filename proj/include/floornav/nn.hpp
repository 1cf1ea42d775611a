#pragma once
// Small dense-network toolkit with hand-written backward passes, built on
// one flat parameter vector so gradients, optimizer state, serialization,
// and finite-difference checks all share a single layout.

#include <cmath>
#include <cstring>
#include <vector>

#include "floornav/core.hpp"
#include "floornav/rng.hpp"

namespace floornav::nn {

// Allocates offsets into the flat parameter vector.
struct ParamLayout {
    size_t size = 0;
    size_t alloc(size_t n) {
        size_t off = size;
        size += n;
        return off;
    }
};

struct Dense {
    size_t w_off = 0, b_off = 0;
    int in = 0, out = 0;

    void init(ParamLayout& layout, int in_dim, int out_dim) {
        in = in_dim;
        out = out_dim;
        w_off = layout.alloc(static_cast<size_t>(in) * out);
        b_off = layout.alloc(out);
    }

    void xavier(std::vector<double>& p, Rng& rng) const {
        double scale = std::sqrt(6.0 / (in + out));
        for (size_t i = 0; i < static_cast<size_t>(in) * out; ++i)
            p[w_off + i] = rng.uniform(-scale, scale);
        for (int i = 0; i < out; ++i) p[b_off + i] = 0.0;
    }

    // y = W x + b (W row-major, out x in)
    void fwd(const double* p, const double* x, double* y) const {
        for (int o = 0; o < out; ++o) {
            const double* w = p + w_off + static_cast<size_t>(o) * in;
            double acc = p[b_off + o];
            for (int i = 0; i < in; ++i) acc += w[i] * x[i];
            y[o] = acc;
        }
    }

    // accumulate dW/db into g and (optionally) dx into dx
    void bwd(const double* p, const double* x, const double* dy, double* g, double* dx) const {
        for (int o = 0; o < out; ++o) {
            double d = dy[o];
            double* gw = g + w_off + static_cast<size_t>(o) * in;
            for (int i = 0; i < in; ++i) gw[i] += d * x[i];
            g[b_off + o] += d;
        }
        if (dx) {
            for (int o = 0; o < out; ++o) {
                double d = dy[o];
                const double* w = p + w_off + static_cast<size_t>(o) * in;
                for (int i = 0; i < in; ++i) dx[i] += d * w[i];
            }
        }
    }
};

inline void tanh_fwd(const double* x, double* y, int n) {
    for (int i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

// dx accumulated from dy and the cached outputs y
inline void tanh_bwd(const double* y, const double* dy, double* dx, int n) {
    for (int i = 0; i < n; ++i) dx[i] += dy[i] * (1.0 - y[i] * y[i]);
}

inline double softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

inline double softplus_grad(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Interleaved sin/cos embedding of an integer step index.
inline void sinusoidal_embedding(int k, int dim, double* out) {
    int half = dim / 2;
    for (int j = 0; j < half; ++j) {
        double freq = std::exp(-std::log(10000.0) * j / half);
        out[2 * j] = std::sin(k * freq);
        out[2 * j + 1] = std::cos(k * freq);
    }
    if (dim % 2) out[dim - 1] = 0.0;
}

// One pre-activation residual transformer block over T tokens of width d:
//   X2 = X + Wo * MultiHeadAttention(X);  out = X2 + ff2(tanh(ff1(X2)))
// No positional information is added here; token order only matters if the
// caller injects it.
struct AttnBlock {
    Dense wq, wk, wv, wo, ff1, ff2;
    int d = 0, dff = 0, heads = 0;

    void init(ParamLayout& layout, int d_model, int d_ff, int n_heads) {
        d = d_model;
        dff = d_ff;
        heads = n_heads;
        if (d % heads != 0) throw Error("AttnBlock: d_model must be divisible by heads");
        wq.init(layout, d, d);
        wk.init(layout, d, d);
        wv.init(layout, d, d);
        wo.init(layout, d, d);
        ff1.init(layout, d, dff);
        ff2.init(layout, dff, d);
    }

    void xavier(std::vector<double>& p, Rng& rng) const {
        wq.xavier(p, rng);
        wk.xavier(p, rng);
        wv.xavier(p, rng);
        wo.xavier(p, rng);
        ff1.xavier(p, rng);
        ff2.xavier(p, rng);
    }

    struct Workspace {
        int T = 0;
        std::vector<double> X, Q, K, V, P, O, X2, U;  // caches for backward
        void resize(int tokens, int d, int dff, int heads) {
            T = tokens;
            size_t td = static_cast<size_t>(T) * d;
            X.assign(td, 0.0);
            Q.assign(td, 0.0);
            K.assign(td, 0.0);
            V.assign(td, 0.0);
            P.assign(static_cast<size_t>(heads) * T * T, 0.0);
            O.assign(td, 0.0);
            X2.assign(td, 0.0);
            U.assign(static_cast<size_t>(T) * dff, 0.0);
        }
    };

    void fwd(const double* p, const double* x_in, int T, Workspace& ws, double* out) const {
        const int dh = d / heads;
        const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
        ws.resize(T, d, dff, heads);
        std::memcpy(ws.X.data(), x_in, sizeof(double) * T * d);
        for (int t = 0; t < T; ++t) {
            wq.fwd(p, x_in + t * d, ws.Q.data() + t * d);
            wk.fwd(p, x_in + t * d, ws.K.data() + t * d);
            wv.fwd(p, x_in + t * d, ws.V.data() + t * d);
        }
        for (int h = 0; h < heads; ++h) {
            for (int t = 0; t < T; ++t) {
                double* prow = ws.P.data() + (static_cast<size_t>(h) * T + t) * T;
                double mx = -1e300;
                for (int u = 0; u < T; ++u) {
                    double s = 0.0;
                    const double* q = ws.Q.data() + t * d + h * dh;
                    const double* k = ws.K.data() + u * d + h * dh;
                    for (int j = 0; j < dh; ++j) s += q[j] * k[j];
                    prow[u] = s * inv_sqrt_dh;
                    mx = std::max(mx, prow[u]);
                }
                double z = 0.0;
                for (int u = 0; u < T; ++u) {
                    prow[u] = std::exp(prow[u] - mx);
                    z += prow[u];
                }
                for (int u = 0; u < T; ++u) prow[u] /= z;
                double* o = ws.O.data() + t * d + h * dh;
                for (int j = 0; j < dh; ++j) {
                    double acc = 0.0;
                    for (int u = 0; u < T; ++u) acc += prow[u] * ws.V[u * d + h * dh + j];
                    o[j] = acc;
                }
            }
        }
        std::vector<double> y(d);
        for (int t = 0; t < T; ++t) {
            wo.fwd(p, ws.O.data() + t * d, y.data());
            for (int i = 0; i < d; ++i) ws.X2[t * d + i] = x_in[t * d + i] + y[i];
        }
        std::vector<double> u_pre(dff), f(d);
        for (int t = 0; t < T; ++t) {
            ff1.fwd(p, ws.X2.data() + t * d, u_pre.data());
            tanh_fwd(u_pre.data(), ws.U.data() + t * dff, dff);
            ff2.fwd(p, ws.U.data() + t * dff, f.data());
            for (int i = 0; i < d; ++i) out[t * d + i] = ws.X2[t * d + i] + f[i];
        }
    }

    void bwd(const double* p, const Workspace& ws, const double* dout, double* g,
             double* dx) const {
        const int T = ws.T;
        const int dh = d / heads;
        const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

        std::vector<double> dX2(dout, dout + static_cast<size_t>(T) * d);
        std::vector<double> dU(static_cast<size_t>(T) * dff, 0.0);
        std::vector<double> dU_pre(static_cast<size_t>(T) * dff, 0.0);
        for (int t = 0; t < T; ++t)
            ff2.bwd(p, ws.U.data() + t * dff, dout + t * d, g, dU.data() + t * dff);
        for (int t = 0; t < T; ++t) {
            tanh_bwd(ws.U.data() + t * dff, dU.data() + t * dff, dU_pre.data() + t * dff, dff);
            ff1.bwd(p, ws.X2.data() + t * d, dU_pre.data() + t * dff, g, dX2.data() + t * d);
        }

        // dX2 is also the gradient at the attention residual output
        std::vector<double> dO(static_cast<size_t>(T) * d, 0.0);
        for (int t = 0; t < T; ++t) {
            for (int i = 0; i < d; ++i) dx[t * d + i] += dX2[t * d + i];  // residual
            wo.bwd(p, ws.O.data() + t * d, dX2.data() + t * d, g, dO.data() + t * d);
        }

        std::vector<double> dQ(static_cast<size_t>(T) * d, 0.0);
        std::vector<double> dK(static_cast<size_t>(T) * d, 0.0);
        std::vector<double> dV(static_cast<size_t>(T) * d, 0.0);
        std::vector<double> dP(T), dS(T);
        for (int h = 0; h < heads; ++h) {
            for (int t = 0; t < T; ++t) {
                const double* prow = ws.P.data() + (static_cast<size_t>(h) * T + t) * T;
                const double* do_h = dO.data() + t * d + h * dh;
                for (int u = 0; u < T; ++u) {
                    double acc = 0.0;
                    const double* v = ws.V.data() + u * d + h * dh;
                    for (int j = 0; j < dh; ++j) acc += do_h[j] * v[j];
                    dP[u] = acc;
                    double* dv = dV.data() + u * d + h * dh;
                    for (int j = 0; j < dh; ++j) dv[j] += prow[u] * do_h[j];
                }
                double dot = 0.0;
                for (int u = 0; u < T; ++u) dot += dP[u] * prow[u];
                for (int u = 0; u < T; ++u) dS[u] = prow[u] * (dP[u] - dot) * inv_sqrt_dh;
                double* dq = dQ.data() + t * d + h * dh;
                for (int u = 0; u < T; ++u) {
                    const double* k = ws.K.data() + u * d + h * dh;
                    for (int j = 0; j < dh; ++j) dq[j] += dS[u] * k[j];
                    double* dk = dK.data() + u * d + h * dh;
                    const double* q = ws.Q.data() + t * d + h * dh;
                    for (int j = 0; j < dh; ++j) dk[j] += dS[u] * q[j];
                }
            }
        }
        for (int t = 0; t < T; ++t) {
            wq.bwd(p, ws.X.data() + t * d, dQ.data() + t * d, g, dx + t * d);
            wk.bwd(p, ws.X.data() + t * d, dK.data() + t * d, g, dx + t * d);
            wv.bwd(p, ws.X.data() + t * d, dV.data() + t * d, g, dx + t * d);
        }
    }
};

// Decoupled weight decay Adam.
struct AdamW {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
    long t = 0;
    std::vector<double> m, v;

    explicit AdamW(size_t n = 0) : m(n, 0.0), v(n, 0.0) {}

    void step(std::vector<double>& p, const std::vector<double>& g) {
        if (m.size() != p.size()) {
            m.assign(p.size(), 0.0);
            v.assign(p.size(), 0.0);
        }
        t += 1;
        double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (size_t i = 0; i < p.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            double mhat = m[i] / bc1;
            double vhat = v[i] / bc2;
            p[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * p[i]);
        }
    }
};

}  // namespace floornav::nn
