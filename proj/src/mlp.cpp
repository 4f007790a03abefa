#include "sors/mlp.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>

static_assert(std::endian::native == std::endian::little,
              "snapshot format assumes a little-endian host");

namespace sors {

namespace {

double activate(double x, Activation act) {
    switch (act) {
        case Activation::Tanh: return std::tanh(x);
        case Activation::Relu: return x > 0.0 ? x : 0.0;
        case Activation::Identity: return x;
    }
    return x;
}

// derivative recovered from the post-activation value
double activate_grad_from_output(double y, Activation act) {
    switch (act) {
        case Activation::Tanh: return 1.0 - y * y;
        case Activation::Relu: return y > 0.0 ? 1.0 : 0.0;
        case Activation::Identity: return 1.0;
    }
    return 1.0;
}

void check_shapes(const MlpParams& params, size_t input_size) {
    if (params.layers.empty())
        throw ContractViolation("mlp: no layers");
    if (input_size != static_cast<size_t>(params.input_dim()))
        throw ContractViolation("mlp: input size " + std::to_string(input_size) +
                                " does not match first layer (" +
                                std::to_string(params.input_dim()) + ")");
}

void write_u32(std::ostream& out, uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

uint32_t read_u32(std::istream& in) {
    uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw ConfigError("mlp snapshot: truncated header");
    return v;
}

} // namespace

size_t MlpParams::param_count() const {
    size_t n = 0;
    for (const Layer& l : layers) n += l.w.size() + l.b.size();
    return n;
}

MlpParams MlpParams::create(const std::vector<int>& dims,
                            const std::vector<Activation>& acts, Rng& rng) {
    if (dims.size() < 2 || acts.size() != dims.size() - 1)
        throw ContractViolation("MlpParams::create: need dims = layers + 1 activation tags");
    MlpParams params;
    params.layers.reserve(acts.size());
    for (size_t i = 0; i + 1 < dims.size(); ++i) {
        Layer layer;
        layer.in = dims[i];
        layer.out = dims[i + 1];
        if (layer.in <= 0 || layer.out <= 0)
            throw ContractViolation("MlpParams::create: non-positive layer dimension");
        layer.act = acts[i];
        const double a = std::sqrt(6.0 / (layer.in + layer.out));
        layer.w.resize(static_cast<size_t>(layer.in) * layer.out);
        for (double& w : layer.w) w = rng.uniform(-a, a);
        layer.b.assign(static_cast<size_t>(layer.out), 0.0);
        params.layers.push_back(std::move(layer));
    }
    return params;
}

MlpParams MlpParams::create_stack(int input, const std::vector<int>& hidden, int output,
                                  Activation hidden_act, Activation final_act, Rng& rng) {
    std::vector<int> dims;
    dims.push_back(input);
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(output);
    std::vector<Activation> acts(hidden.size(), hidden_act);
    acts.push_back(final_act);
    return create(dims, acts, rng);
}

MlpGrads MlpGrads::zeros_like(const MlpParams& params) {
    MlpGrads g;
    g.layers.resize(params.layers.size());
    for (size_t i = 0; i < params.layers.size(); ++i) {
        g.layers[i].w.assign(params.layers[i].w.size(), 0.0);
        g.layers[i].b.assign(params.layers[i].b.size(), 0.0);
    }
    return g;
}

void MlpGrads::scale(double factor) {
    for (LayerGrads& l : layers) {
        for (double& x : l.w) x *= factor;
        for (double& x : l.b) x *= factor;
    }
}

std::vector<double> forward(const MlpParams& params, std::span<const double> input) {
    check_shapes(params, input.size());
    std::vector<double> cur(input.begin(), input.end());
    std::vector<double> next;
    for (const Layer& layer : params.layers) {
        next.assign(static_cast<size_t>(layer.out), 0.0);
        for (int o = 0; o < layer.out; ++o) {
            const double* row = layer.w.data() + static_cast<size_t>(o) * layer.in;
            double acc = layer.b[static_cast<size_t>(o)];
            for (int i = 0; i < layer.in; ++i) acc += row[i] * cur[static_cast<size_t>(i)];
            next[static_cast<size_t>(o)] = activate(acc, layer.act);
        }
        cur.swap(next);
    }
    return cur;
}

std::vector<double> forward(const MlpParams& params, std::span<const double> input,
                            ForwardTrace& trace) {
    check_shapes(params, input.size());
    trace.activations.assign(params.layers.size() + 1, {});
    trace.activations[0].assign(input.begin(), input.end());
    for (size_t li = 0; li < params.layers.size(); ++li) {
        const Layer& layer = params.layers[li];
        const std::vector<double>& cur = trace.activations[li];
        std::vector<double>& next = trace.activations[li + 1];
        next.assign(static_cast<size_t>(layer.out), 0.0);
        for (int o = 0; o < layer.out; ++o) {
            const double* row = layer.w.data() + static_cast<size_t>(o) * layer.in;
            double acc = layer.b[static_cast<size_t>(o)];
            for (int i = 0; i < layer.in; ++i) acc += row[i] * cur[static_cast<size_t>(i)];
            next[static_cast<size_t>(o)] = activate(acc, layer.act);
        }
    }
    return trace.activations.back();
}

std::vector<double> backprop(const MlpParams& params, const ForwardTrace& trace,
                             std::span<const double> upstream, MlpGrads& grads) {
    if (trace.activations.size() != params.layers.size() + 1)
        throw ContractViolation("backprop: trace does not match params");
    if (upstream.size() != static_cast<size_t>(params.output_dim()))
        throw ContractViolation("backprop: upstream size mismatch");
    if (grads.layers.size() != params.layers.size())
        throw ContractViolation("backprop: grads shape mismatch");

    std::vector<double> delta(upstream.begin(), upstream.end());
    std::vector<double> prev_delta;
    for (size_t li = params.layers.size(); li-- > 0;) {
        const Layer& layer = params.layers[li];
        const std::vector<double>& input = trace.activations[li];
        const std::vector<double>& output = trace.activations[li + 1];
        LayerGrads& lg = grads.layers[li];

        // fold the activation derivative into delta
        for (int o = 0; o < layer.out; ++o)
            delta[static_cast<size_t>(o)] *=
                activate_grad_from_output(output[static_cast<size_t>(o)], layer.act);

        prev_delta.assign(static_cast<size_t>(layer.in), 0.0);
        for (int o = 0; o < layer.out; ++o) {
            const double d = delta[static_cast<size_t>(o)];
            if (d == 0.0) continue;
            const double* row = layer.w.data() + static_cast<size_t>(o) * layer.in;
            double* grow = lg.w.data() + static_cast<size_t>(o) * layer.in;
            for (int i = 0; i < layer.in; ++i) {
                grow[i] += d * input[static_cast<size_t>(i)];
                prev_delta[static_cast<size_t>(i)] += d * row[i];
            }
            lg.b[static_cast<size_t>(o)] += d;
        }
        delta.swap(prev_delta);
    }
    return delta;
}

AdamState AdamState::for_params(const MlpParams& params, AdamConfig cfg) {
    AdamState st;
    st.cfg = cfg;
    MlpGrads zeros = MlpGrads::zeros_like(params);
    st.m = zeros.layers;
    st.v = zeros.layers;
    return st;
}

VecAdamState VecAdamState::for_size(size_t n, AdamConfig cfg) {
    VecAdamState st;
    st.cfg = cfg;
    st.m.assign(n, 0.0);
    st.v.assign(n, 0.0);
    return st;
}

namespace {

void adam_apply(const AdamConfig& cfg, long t, std::span<double> p,
                std::span<const double> g, std::span<double> m, std::span<double> v) {
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (size_t i = 0; i < p.size(); ++i) {
        if (!std::isfinite(g[i]))
            throw NumericalError("adam_step: non-finite gradient");
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
}

} // namespace

void adam_step(MlpParams& params, const MlpGrads& grads, AdamState& state) {
    if (grads.layers.size() != params.layers.size() ||
        state.m.size() != params.layers.size())
        throw ContractViolation("adam_step: shape mismatch");
    ++state.step;
    for (size_t li = 0; li < params.layers.size(); ++li) {
        Layer& layer = params.layers[li];
        if (grads.layers[li].w.size() != layer.w.size() ||
            grads.layers[li].b.size() != layer.b.size())
            throw ContractViolation("adam_step: layer shape mismatch");
        adam_apply(state.cfg, state.step, layer.w, grads.layers[li].w,
                   state.m[li].w, state.v[li].w);
        adam_apply(state.cfg, state.step, layer.b, grads.layers[li].b,
                   state.m[li].b, state.v[li].b);
    }
}

void adam_step(std::span<double> params, std::span<const double> grads, VecAdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw ContractViolation("adam_step: vector shape mismatch");
    ++state.step;
    adam_apply(state.cfg, state.step, params, grads, state.m, state.v);
}

void save_mlp(std::ostream& out, const MlpParams& params) {
    write_u32(out, static_cast<uint32_t>(params.layers.size()));
    for (const Layer& l : params.layers) {
        write_u32(out, static_cast<uint32_t>(l.in));
        write_u32(out, static_cast<uint32_t>(l.out));
        write_u32(out, static_cast<uint32_t>(l.act));
    }
    for (const Layer& l : params.layers) {
        out.write(reinterpret_cast<const char*>(l.w.data()),
                  static_cast<std::streamsize>(l.w.size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(l.b.data()),
                  static_cast<std::streamsize>(l.b.size() * sizeof(double)));
    }
}

MlpParams load_mlp(std::istream& in) {
    const uint32_t n_layers = read_u32(in);
    if (n_layers == 0 || n_layers > 1024)
        throw ConfigError("mlp snapshot: implausible layer count");
    MlpParams params;
    params.layers.resize(n_layers);
    for (Layer& l : params.layers) {
        l.in = static_cast<int>(read_u32(in));
        l.out = static_cast<int>(read_u32(in));
        const uint32_t tag = read_u32(in);
        if (tag > static_cast<uint32_t>(Activation::Identity))
            throw ConfigError("mlp snapshot: bad activation tag");
        l.act = static_cast<Activation>(tag);
        if (l.in <= 0 || l.out <= 0)
            throw ConfigError("mlp snapshot: bad layer dims");
    }
    for (size_t li = 0; li + 1 < params.layers.size(); ++li)
        if (params.layers[li].out != params.layers[li + 1].in)
            throw ConfigError("mlp snapshot: layer dims do not chain");
    for (Layer& l : params.layers) {
        l.w.resize(static_cast<size_t>(l.in) * l.out);
        l.b.resize(static_cast<size_t>(l.out));
        in.read(reinterpret_cast<char*>(l.w.data()),
                static_cast<std::streamsize>(l.w.size() * sizeof(double)));
        in.read(reinterpret_cast<char*>(l.b.data()),
                static_cast<std::streamsize>(l.b.size() * sizeof(double)));
        if (!in) throw ConfigError("mlp snapshot: truncated data");
    }
    return params;
}

} // namespace sors
