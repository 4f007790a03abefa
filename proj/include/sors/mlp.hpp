#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "sors/errors.hpp"
#include "sors/rng.hpp"

namespace sors {

enum class Activation { Tanh, Relu, Identity };

/// One affine layer followed by its activation. Weights are row-major
/// [out][in].
struct Layer {
    int in = 0;
    int out = 0;
    Activation act = Activation::Identity;
    std::vector<double> w;
    std::vector<double> b;
};

/// A fixed stack of affine-then-activation layers, 64-bit throughout.
struct MlpParams {
    std::vector<Layer> layers;

    int input_dim() const { return layers.empty() ? 0 : layers.front().in; }
    int output_dim() const { return layers.empty() ? 0 : layers.back().out; }
    size_t param_count() const;

    /// dims = {in, h1, ..., out}; acts has one tag per layer. Weights are
    /// uniform in [-a, a] with a = sqrt(6 / (fan_in + fan_out)), biases zero.
    static MlpParams create(const std::vector<int>& dims,
                            const std::vector<Activation>& acts, Rng& rng);

    /// Convenience: `hidden` sizes with a shared hidden activation and an
    /// identity (or `final_act`) output layer.
    static MlpParams create_stack(int input, const std::vector<int>& hidden, int output,
                                  Activation hidden_act, Activation final_act, Rng& rng);
};

struct LayerGrads {
    std::vector<double> w;
    std::vector<double> b;
};

struct MlpGrads {
    std::vector<LayerGrads> layers;
    static MlpGrads zeros_like(const MlpParams& params);
    void scale(double factor);
};

/// Post-activation values per layer; activations[0] is the input. Enough to
/// run reverse mode: tanh' and relu' are recoverable from outputs alone.
struct ForwardTrace {
    std::vector<std::vector<double>> activations;
};

std::vector<double> forward(const MlpParams& params, std::span<const double> input);

std::vector<double> forward(const MlpParams& params, std::span<const double> input,
                            ForwardTrace& trace);

/// Reverse-mode sweep. `upstream` is dL/d(output); parameter gradients are
/// accumulated into `grads` (callers zero or reuse as needed). Returns
/// dL/d(input).
std::vector<double> backprop(const MlpParams& params, const ForwardTrace& trace,
                             std::span<const double> upstream, MlpGrads& grads);

struct AdamConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First/second moment accumulators shaped like the parameters they update.
struct AdamState {
    AdamConfig cfg;
    long step = 0;
    std::vector<LayerGrads> m;
    std::vector<LayerGrads> v;

    static AdamState for_params(const MlpParams& params, AdamConfig cfg = {});
};

/// Flat-vector variant for parameters that are not an MLP (e.g. an output
/// weight vector trained jointly with a trunk).
struct VecAdamState {
    AdamConfig cfg;
    long step = 0;
    std::vector<double> m;
    std::vector<double> v;

    static VecAdamState for_size(size_t n, AdamConfig cfg = {});
};

/// Bias-corrected Adam update in place. Throws NumericalError when any
/// gradient entry is non-finite.
void adam_step(MlpParams& params, const MlpGrads& grads, AdamState& state);
void adam_step(std::span<double> params, std::span<const double> grads, VecAdamState& state);

/// Flat binary snapshot: u32 layer count; per layer u32 in, u32 out, u32
/// activation tag; then per layer row-major little-endian f64 weights followed
/// by biases.
void save_mlp(std::ostream& out, const MlpParams& params);
MlpParams load_mlp(std::istream& in);

} // namespace sors
