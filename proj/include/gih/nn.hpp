#pragma once

#include <string>
#include <vector>

#include "gih/rng.hpp"

namespace gih::nn {

struct Shape {
    int c = 1, h = 1, w = 1;
    int size() const { return c * h * w; }
    bool operator==(const Shape& o) const { return c == o.c && h == o.h && w == o.w; }
    static Shape flat(int d) { return Shape{d, 1, 1}; }
};

enum class LayerKind { Dense, Conv1d, Conv2d, ReLU, GELU, GlobalAvgPool, Flatten, Residual };

struct Layer {
    LayerKind kind = LayerKind::Dense;
    int out = 0;     // dense features / conv out-channels
    int kh = 1, kw = 1;
    int stride = 1;
    int pad = 0;
    std::vector<Layer> inner;  // residual block body

    static Layer dense(int out);
    static Layer conv1d(int out_channels, int kernel, int stride = 1, int pad = 0);
    static Layer conv2d(int out_channels, int kh, int kw, int stride = 1, int pad = 0);
    static Layer relu();
    static Layer gelu();
    static Layer global_avg_pool();
    static Layer flatten();
    static Layer residual(std::vector<Layer> inner);
};

// Architecture description. Weights are drawn i.i.d. zero-mean Gaussian:
// hidden_std for every parametric layer but the last, final_std for the last
// one; 0 means 1/sqrt(fan_in). Bias-free unless `bias` is set (biases start
// at zero).
struct ModelSpec {
    Shape input;
    std::vector<Layer> layers;
    double hidden_std = 0.0;
    double final_std = 0.0;
    bool bias = false;
};

std::string to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const std::string& json_text);

struct Params {
    std::vector<double> v;
};

struct GradResult {
    double logit = 0.0;
    std::vector<double> input_grad;
    std::vector<double> param_grad;
};

namespace detail {
struct CompiledLayer {
    LayerKind kind;
    int out = 0, kh = 1, kw = 1, stride = 1, pad_h = 0, pad_w = 0;
    Shape in_shape, out_shape;
    int weight_offset = -1, weight_count = 0;
    int bias_offset = -1, bias_count = 0;
    double init_std = 0.0;
    std::vector<CompiledLayer> inner;
};
}  // namespace detail

// Validated, offset-assigned form of a ModelSpec; all evaluation methods are
// const and safe to share across threads.
class Network {
public:
    explicit Network(ModelSpec spec);

    const ModelSpec& spec() const { return spec_; }
    Shape input_shape() const { return spec_.input; }
    int param_count() const { return total_params_; }

    Params init_params(SeededRng rng) const;

    double forward(const Params& p, const std::vector<double>& x) const;
    std::vector<double> input_gradient(const Params& p, const std::vector<double>& x) const;
    std::vector<double> param_gradient(const Params& p, const std::vector<double>& x) const;
    GradResult evaluate(const Params& p, const std::vector<double>& x, bool want_input_grad,
                        bool want_param_grad) const;

    // Central finite difference of the input gradient along v, rescaled to
    // approximate the mixed second derivative applied to v; O(eps^2) error.
    std::vector<double> mixed_dvp(const Params& p, const std::vector<double>& x,
                                  const std::vector<double>& v, double eps) const;

private:
    ModelSpec spec_;
    std::vector<detail::CompiledLayer> compiled_;
    int total_params_ = 0;
};

// Convenience wrappers matching the one-shot call style.
Params init_params(const ModelSpec& spec, SeededRng rng);
double forward(const ModelSpec& spec, const Params& p, const std::vector<double>& x);
std::vector<double> input_gradient(const ModelSpec& spec, const Params& p,
                                   const std::vector<double>& x);
std::vector<double> param_gradient(const ModelSpec& spec, const Params& p,
                                   const std::vector<double>& x);
std::vector<double> mixed_dvp(const ModelSpec& spec, const Params& p, const std::vector<double>& x,
                              const std::vector<double>& v, double eps);

// Reference architectures.
ModelSpec make_mlp(int dim, const std::vector<int>& widths, bool gelu = false);
ModelSpec make_conv1d_pool(int length, int channels, int kernel);   // conv, pool, dense head
ModelSpec make_conv1d_pool_single(int length, int kernel);          // single-kernel conv + pool
ModelSpec make_conv2d_pool(Shape input, int channels, int kernel, int pad = 0, bool relu = false);
ModelSpec make_mini_resnet(Shape input, int channels = 8);

}  // namespace gih::nn
