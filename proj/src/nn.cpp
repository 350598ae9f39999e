#include "gih/nn.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "gih/error.hpp"
#include "gih/matrix.hpp"

namespace gih::nn {

using detail::CompiledLayer;
using json = nlohmann::json;

namespace {
Layer make_layer(LayerKind kind, int out = 0) {
    Layer l;
    l.kind = kind;
    l.out = out;
    return l;
}
}  // namespace

Layer Layer::dense(int out) { return make_layer(LayerKind::Dense, out); }
Layer Layer::conv1d(int out_channels, int kernel, int stride, int pad) {
    Layer l = make_layer(LayerKind::Conv1d, out_channels);
    l.kh = 1;
    l.kw = kernel;
    l.stride = stride;
    l.pad = pad;
    return l;
}
Layer Layer::conv2d(int out_channels, int kh, int kw, int stride, int pad) {
    Layer l = make_layer(LayerKind::Conv2d, out_channels);
    l.kh = kh;
    l.kw = kw;
    l.stride = stride;
    l.pad = pad;
    return l;
}
Layer Layer::relu() { return make_layer(LayerKind::ReLU); }
Layer Layer::gelu() { return make_layer(LayerKind::GELU); }
Layer Layer::global_avg_pool() { return make_layer(LayerKind::GlobalAvgPool); }
Layer Layer::flatten() { return make_layer(LayerKind::Flatten); }
Layer Layer::residual(std::vector<Layer> inner) {
    Layer l = make_layer(LayerKind::Residual);
    l.inner = std::move(inner);
    return l;
}

namespace {

constexpr double kGeluC0 = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluC1 = 0.044715;

double gelu_fn(double x) {
    double u = kGeluC0 * (x + kGeluC1 * x * x * x);
    return 0.5 * x * (1.0 + std::tanh(u));
}

double gelu_grad(double x) {
    double u = kGeluC0 * (x + kGeluC1 * x * x * x);
    double t = std::tanh(u);
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC0 * (1.0 + 3.0 * kGeluC1 * x * x);
}

bool is_parametric(LayerKind k) {
    return k == LayerKind::Dense || k == LayerKind::Conv1d || k == LayerKind::Conv2d;
}

int count_parametric(const std::vector<Layer>& layers) {
    int n = 0;
    for (const Layer& l : layers) {
        if (is_parametric(l.kind)) ++n;
        if (l.kind == LayerKind::Residual) n += count_parametric(l.inner);
    }
    return n;
}

struct CompileState {
    int offset = 0;
    int parametric_seen = 0;
    int parametric_total = 0;
    double hidden_std = 0.0;
    double final_std = 0.0;
    bool bias = false;
};

std::vector<CompiledLayer> compile_seq(const std::vector<Layer>& layers, Shape in,
                                       CompileState& st, Shape* out_shape) {
    std::vector<CompiledLayer> out;
    Shape cur = in;
    for (const Layer& l : layers) {
        CompiledLayer cl;
        cl.kind = l.kind;
        cl.out = l.out;
        cl.kh = l.kh;
        cl.kw = l.kw;
        cl.stride = l.stride;
        cl.in_shape = cur;
        switch (l.kind) {
            case LayerKind::Dense: {
                if (l.out < 1) throw ShapeError("dense layer needs out >= 1");
                cl.out_shape = Shape::flat(l.out);
                int fan_in = cur.size();
                cl.weight_count = l.out * fan_in;
                cl.weight_offset = st.offset;
                st.offset += cl.weight_count;
                if (st.bias) {
                    cl.bias_count = l.out;
                    cl.bias_offset = st.offset;
                    st.offset += cl.bias_count;
                }
                bool final_layer = (++st.parametric_seen == st.parametric_total);
                cl.init_std = final_layer ? st.final_std : st.hidden_std;
                if (cl.init_std == 0.0) cl.init_std = 1.0 / std::sqrt(double(fan_in));
                break;
            }
            case LayerKind::Conv1d:
            case LayerKind::Conv2d: {
                cl.pad_h = (l.kind == LayerKind::Conv1d) ? 0 : l.pad;
                cl.pad_w = l.pad;
                if (l.stride < 1 || l.kh < 1 || l.kw < 1 || l.out < 1)
                    throw ShapeError("invalid conv geometry");
                int oh = (cur.h + 2 * cl.pad_h - l.kh) / l.stride + 1;
                int ow = (cur.w + 2 * cl.pad_w - l.kw) / l.stride + 1;
                if (l.kh > cur.h + 2 * cl.pad_h || l.kw > cur.w + 2 * cl.pad_w || oh < 1 || ow < 1)
                    throw ShapeError("conv kernel larger than (padded) input");
                cl.out_shape = Shape{l.out, oh, ow};
                int fan_in = cur.c * l.kh * l.kw;
                cl.weight_count = l.out * fan_in;
                cl.weight_offset = st.offset;
                st.offset += cl.weight_count;
                if (st.bias) {
                    cl.bias_count = l.out;
                    cl.bias_offset = st.offset;
                    st.offset += cl.bias_count;
                }
                bool final_layer = (++st.parametric_seen == st.parametric_total);
                cl.init_std = final_layer ? st.final_std : st.hidden_std;
                if (cl.init_std == 0.0) cl.init_std = 1.0 / std::sqrt(double(fan_in));
                break;
            }
            case LayerKind::ReLU:
            case LayerKind::GELU:
                cl.out_shape = cur;
                break;
            case LayerKind::GlobalAvgPool:
                cl.out_shape = Shape{cur.c, 1, 1};
                break;
            case LayerKind::Flatten:
                cl.out_shape = Shape::flat(cur.size());
                break;
            case LayerKind::Residual: {
                Shape inner_out;
                cl.inner = compile_seq(l.inner, cur, st, &inner_out);
                if (!(inner_out == cur))
                    throw ShapeError("residual block must preserve its input shape");
                cl.out_shape = cur;
                break;
            }
        }
        cur = cl.out_shape;
        out.push_back(std::move(cl));
    }
    *out_shape = cur;
    return out;
}

struct Act {
    std::vector<double> x;  // input to the layer
    std::vector<std::vector<Act>> inner;
};

void forward_seq(const std::vector<CompiledLayer>& layers, const Params& p,
                 std::vector<double>& x, std::vector<Act>* trace);

void forward_layer(const CompiledLayer& l, const Params& p, std::vector<double>& x, Act* act) {
    switch (l.kind) {
        case LayerKind::Dense: {
            int n = l.in_shape.size();
            std::vector<double> y(l.out, 0.0);
            const double* w = p.v.data() + l.weight_offset;
            for (int o = 0; o < l.out; ++o) {
                double s = l.bias_count ? p.v[l.bias_offset + o] : 0.0;
                const double* wo = w + o * n;
                for (int i = 0; i < n; ++i) s += wo[i] * x[i];
                y[o] = s;
            }
            x = std::move(y);
            break;
        }
        case LayerKind::Conv1d:
        case LayerKind::Conv2d: {
            const Shape& in = l.in_shape;
            const Shape& os = l.out_shape;
            std::vector<double> y(os.size(), 0.0);
            const double* w = p.v.data() + l.weight_offset;
            const int kin = in.c * l.kh * l.kw;
            for (int oc = 0; oc < os.c; ++oc) {
                const double* woc = w + oc * kin;
                double b = l.bias_count ? p.v[l.bias_offset + oc] : 0.0;
                for (int oy = 0; oy < os.h; ++oy)
                    for (int ox = 0; ox < os.w; ++ox) {
                        double s = b;
                        for (int ic = 0; ic < in.c; ++ic)
                            for (int ky = 0; ky < l.kh; ++ky) {
                                int iy = oy * l.stride + ky - l.pad_h;
                                if (iy < 0 || iy >= in.h) continue;
                                for (int kx = 0; kx < l.kw; ++kx) {
                                    int ix = ox * l.stride + kx - l.pad_w;
                                    if (ix < 0 || ix >= in.w) continue;
                                    s += woc[(ic * l.kh + ky) * l.kw + kx] *
                                         x[(ic * in.h + iy) * in.w + ix];
                                }
                            }
                        y[(oc * os.h + oy) * os.w + ox] = s;
                    }
            }
            x = std::move(y);
            break;
        }
        case LayerKind::ReLU:
            for (double& v : x) v = v > 0.0 ? v : 0.0;
            break;
        case LayerKind::GELU:
            for (double& v : x) v = gelu_fn(v);
            break;
        case LayerKind::GlobalAvgPool: {
            const Shape& in = l.in_shape;
            std::vector<double> y(in.c, 0.0);
            int area = in.h * in.w;
            for (int c = 0; c < in.c; ++c) {
                double s = 0.0;
                for (int i = 0; i < area; ++i) s += x[c * area + i];
                y[c] = s / area;
            }
            x = std::move(y);
            break;
        }
        case LayerKind::Flatten:
            break;  // layout is already flat
        case LayerKind::Residual: {
            std::vector<double> branch = x;
            if (act) {
                act->inner.emplace_back();
                forward_seq(l.inner, p, branch, &act->inner.back());
            } else {
                forward_seq(l.inner, p, branch, nullptr);
            }
            for (std::size_t i = 0; i < x.size(); ++i) x[i] += branch[i];
            break;
        }
    }
}

void forward_seq(const std::vector<CompiledLayer>& layers, const Params& p,
                 std::vector<double>& x, std::vector<Act>* trace) {
    for (const CompiledLayer& l : layers) {
        Act* act = nullptr;
        if (trace) {
            trace->emplace_back();
            act = &trace->back();
            act->x = x;  // keep the layer input for backprop
        }
        forward_layer(l, p, x, act);
    }
}

void backward_seq(const std::vector<CompiledLayer>& layers, const std::vector<Act>& trace,
                  const Params& p, std::vector<double>& g, std::vector<double>* pg);

void backward_layer(const CompiledLayer& l, const Act& act, const Params& p,
                    std::vector<double>& g, std::vector<double>* pg) {
    const std::vector<double>& x = act.x;
    switch (l.kind) {
        case LayerKind::Dense: {
            int n = l.in_shape.size();
            const double* w = p.v.data() + l.weight_offset;
            std::vector<double> gin(n, 0.0);
            for (int o = 0; o < l.out; ++o) {
                double go = g[o];
                const double* wo = w + o * n;
                if (pg) {
                    double* gw = pg->data() + l.weight_offset + o * n;
                    for (int i = 0; i < n; ++i) gw[i] += go * x[i];
                    if (l.bias_count) (*pg)[l.bias_offset + o] += go;
                }
                for (int i = 0; i < n; ++i) gin[i] += wo[i] * go;
            }
            g = std::move(gin);
            break;
        }
        case LayerKind::Conv1d:
        case LayerKind::Conv2d: {
            const Shape& in = l.in_shape;
            const Shape& os = l.out_shape;
            const double* w = p.v.data() + l.weight_offset;
            const int kin = in.c * l.kh * l.kw;
            std::vector<double> gin(in.size(), 0.0);
            for (int oc = 0; oc < os.c; ++oc) {
                const double* woc = w + oc * kin;
                double* gwoc = pg ? pg->data() + l.weight_offset + oc * kin : nullptr;
                for (int oy = 0; oy < os.h; ++oy)
                    for (int ox = 0; ox < os.w; ++ox) {
                        double go = g[(oc * os.h + oy) * os.w + ox];
                        if (go == 0.0) continue;
                        if (pg && l.bias_count) (*pg)[l.bias_offset + oc] += go;
                        for (int ic = 0; ic < in.c; ++ic)
                            for (int ky = 0; ky < l.kh; ++ky) {
                                int iy = oy * l.stride + ky - l.pad_h;
                                if (iy < 0 || iy >= in.h) continue;
                                for (int kx = 0; kx < l.kw; ++kx) {
                                    int ix = ox * l.stride + kx - l.pad_w;
                                    if (ix < 0 || ix >= in.w) continue;
                                    int wi = (ic * l.kh + ky) * l.kw + kx;
                                    int xi = (ic * in.h + iy) * in.w + ix;
                                    if (gwoc) gwoc[wi] += go * x[xi];
                                    gin[xi] += woc[wi] * go;
                                }
                            }
                    }
            }
            g = std::move(gin);
            break;
        }
        case LayerKind::ReLU:
            // Subgradient at exactly 0 is 0.
            for (std::size_t i = 0; i < g.size(); ++i)
                if (!(x[i] > 0.0)) g[i] = 0.0;
            break;
        case LayerKind::GELU:
            for (std::size_t i = 0; i < g.size(); ++i) g[i] *= gelu_grad(x[i]);
            break;
        case LayerKind::GlobalAvgPool: {
            const Shape& in = l.in_shape;
            int area = in.h * in.w;
            std::vector<double> gin(in.size());
            for (int c = 0; c < in.c; ++c) {
                double v = g[c] / area;
                for (int i = 0; i < area; ++i) gin[c * area + i] = v;
            }
            g = std::move(gin);
            break;
        }
        case LayerKind::Flatten:
            break;
        case LayerKind::Residual: {
            std::vector<double> gb = g;  // gradient through the block body
            backward_seq(l.inner, act.inner.front(), p, gb, pg);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += gb[i];
            break;
        }
    }
}

void backward_seq(const std::vector<CompiledLayer>& layers, const std::vector<Act>& trace,
                  const Params& p, std::vector<double>& g, std::vector<double>* pg) {
    for (std::size_t i = layers.size(); i-- > 0;) backward_layer(layers[i], trace[i], p, g, pg);
}

void draw_params_seq(const std::vector<CompiledLayer>& layers, SeededRng& rng,
                     std::vector<double>& out) {
    for (const CompiledLayer& l : layers) {
        if (is_parametric(l.kind)) {
            for (int i = 0; i < l.weight_count; ++i)
                out[l.weight_offset + i] = l.init_std * rng.next_gaussian();
            // Enabled biases start at zero.
        } else if (l.kind == LayerKind::Residual) {
            draw_params_seq(l.inner, rng, out);
        }
    }
}

}  // namespace

Network::Network(ModelSpec spec) : spec_(std::move(spec)) {
    if (spec_.input.size() < 1) throw ShapeError("model input must be non-empty");
    CompileState st;
    st.hidden_std = spec_.hidden_std;
    st.final_std = spec_.final_std;
    st.bias = spec_.bias;
    st.parametric_total = count_parametric(spec_.layers);
    Shape out;
    compiled_ = compile_seq(spec_.layers, spec_.input, st, &out);
    if (out.size() != 1) throw ShapeError("model output must be a scalar logit");
    total_params_ = st.offset;
}

Params Network::init_params(SeededRng rng) const {
    Params p;
    p.v.assign(total_params_, 0.0);
    draw_params_seq(compiled_, rng, p.v);
    return p;
}

double Network::forward(const Params& p, const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != spec_.input.size())
        throw ShapeError("forward: input size mismatch");
    if (static_cast<int>(p.v.size()) != total_params_)
        throw ShapeError("forward: parameter count mismatch");
    std::vector<double> a = x;
    forward_seq(compiled_, p, a, nullptr);
    return a[0];
}

GradResult Network::evaluate(const Params& p, const std::vector<double>& x, bool want_input_grad,
                             bool want_param_grad) const {
    if (static_cast<int>(x.size()) != spec_.input.size())
        throw ShapeError("evaluate: input size mismatch");
    if (static_cast<int>(p.v.size()) != total_params_)
        throw ShapeError("evaluate: parameter count mismatch");
    std::vector<Act> trace;
    trace.reserve(compiled_.size());
    std::vector<double> a = x;
    forward_seq(compiled_, p, a, &trace);

    GradResult r;
    r.logit = a[0];
    std::vector<double> g{1.0};
    std::vector<double>* pg = nullptr;
    if (want_param_grad) {
        r.param_grad.assign(total_params_, 0.0);
        pg = &r.param_grad;
    }
    backward_seq(compiled_, trace, p, g, pg);
    if (want_input_grad) r.input_grad = std::move(g);
    return r;
}

std::vector<double> Network::input_gradient(const Params& p, const std::vector<double>& x) const {
    return evaluate(p, x, true, false).input_grad;
}

std::vector<double> Network::param_gradient(const Params& p, const std::vector<double>& x) const {
    return evaluate(p, x, false, true).param_grad;
}

std::vector<double> Network::mixed_dvp(const Params& p, const std::vector<double>& x,
                                       const std::vector<double>& v, double eps) const {
    if (eps <= 0.0) throw Error("mixed_dvp: eps must be positive");
    if (static_cast<int>(v.size()) != total_params_)
        throw ShapeError("mixed_dvp: direction size mismatch");
    double vn = norm2(v);
    if (vn == 0.0) throw Error("mixed_dvp: zero direction");

    Params shifted = p;
    for (std::size_t i = 0; i < v.size(); ++i) shifted.v[i] = p.v[i] + eps * v[i] / vn;
    std::vector<double> gp = input_gradient(shifted, x);
    for (std::size_t i = 0; i < v.size(); ++i) shifted.v[i] = p.v[i] - eps * v[i] / vn;
    std::vector<double> gm = input_gradient(shifted, x);

    double scale = vn / (2.0 * eps);
    std::vector<double> out(gp.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = (gp[i] - gm[i]) * scale;
        if (!std::isfinite(out[i])) throw Error("mixed_dvp: non-finite result");
    }
    return out;
}

Params init_params(const ModelSpec& spec, SeededRng rng) {
    return Network(spec).init_params(rng);
}
double forward(const ModelSpec& spec, const Params& p, const std::vector<double>& x) {
    return Network(spec).forward(p, x);
}
std::vector<double> input_gradient(const ModelSpec& spec, const Params& p,
                                   const std::vector<double>& x) {
    return Network(spec).input_gradient(p, x);
}
std::vector<double> param_gradient(const ModelSpec& spec, const Params& p,
                                   const std::vector<double>& x) {
    return Network(spec).param_gradient(p, x);
}
std::vector<double> mixed_dvp(const ModelSpec& spec, const Params& p, const std::vector<double>& x,
                              const std::vector<double>& v, double eps) {
    return Network(spec).mixed_dvp(p, x, v, eps);
}

ModelSpec make_mlp(int dim, const std::vector<int>& widths, bool gelu) {
    ModelSpec s;
    s.input = Shape::flat(dim);
    for (int w : widths) {
        s.layers.push_back(Layer::dense(w));
        s.layers.push_back(gelu ? Layer::gelu() : Layer::relu());
    }
    s.layers.push_back(Layer::dense(1));
    return s;
}

ModelSpec make_conv1d_pool(int length, int channels, int kernel) {
    ModelSpec s;
    s.input = Shape{1, 1, length};
    s.layers.push_back(Layer::conv1d(channels, kernel));
    s.layers.push_back(Layer::global_avg_pool());
    s.layers.push_back(Layer::dense(1));
    return s;
}

ModelSpec make_conv1d_pool_single(int length, int kernel) {
    ModelSpec s;
    s.input = Shape{1, 1, length};
    s.layers.push_back(Layer::conv1d(1, kernel));
    s.layers.push_back(Layer::global_avg_pool());
    return s;
}

ModelSpec make_conv2d_pool(Shape input, int channels, int kernel, int pad, bool relu) {
    ModelSpec s;
    s.input = input;
    s.layers.push_back(Layer::conv2d(channels, kernel, kernel, 1, pad));
    if (relu) s.layers.push_back(Layer::relu());
    s.layers.push_back(Layer::global_avg_pool());
    s.layers.push_back(Layer::dense(1));
    return s;
}

ModelSpec make_mini_resnet(Shape input, int channels) {
    ModelSpec s;
    s.input = input;
    s.layers.push_back(Layer::conv2d(channels, 3, 3, 1, 1));
    s.layers.push_back(Layer::relu());
    s.layers.push_back(Layer::residual({Layer::conv2d(channels, 3, 3, 1, 1), Layer::relu(),
                                        Layer::conv2d(channels, 3, 3, 1, 1)}));
    s.layers.push_back(Layer::relu());
    s.layers.push_back(Layer::global_avg_pool());
    s.layers.push_back(Layer::dense(1));
    return s;
}

namespace {

json layer_to_json(const Layer& l) {
    json j;
    switch (l.kind) {
        case LayerKind::Dense:
            j = {{"type", "dense"}, {"out", l.out}};
            break;
        case LayerKind::Conv1d:
            j = {{"type", "conv1d"}, {"out", l.out}, {"kernel", l.kw},
                 {"stride", l.stride}, {"padding", l.pad}};
            break;
        case LayerKind::Conv2d:
            j = {{"type", "conv2d"}, {"out", l.out}, {"kernel", {l.kh, l.kw}},
                 {"stride", l.stride}, {"padding", l.pad}};
            break;
        case LayerKind::ReLU:
            j = {{"type", "relu"}};
            break;
        case LayerKind::GELU:
            j = {{"type", "gelu"}};
            break;
        case LayerKind::GlobalAvgPool:
            j = {{"type", "global_avg_pool"}};
            break;
        case LayerKind::Flatten:
            j = {{"type", "flatten"}};
            break;
        case LayerKind::Residual: {
            json inner = json::array();
            for (const Layer& il : l.inner) inner.push_back(layer_to_json(il));
            j = {{"type", "residual"}, {"layers", inner}};
            break;
        }
    }
    return j;
}

Layer layer_from_json(const json& j) {
    std::string type = j.at("type").get<std::string>();
    if (type == "dense") return Layer::dense(j.at("out").get<int>());
    if (type == "conv1d")
        return Layer::conv1d(j.at("out").get<int>(), j.at("kernel").get<int>(),
                             j.value("stride", 1), j.value("padding", 0));
    if (type == "conv2d") {
        auto k = j.at("kernel");
        int kh = k.is_array() ? k[0].get<int>() : k.get<int>();
        int kw = k.is_array() ? k[1].get<int>() : k.get<int>();
        return Layer::conv2d(j.at("out").get<int>(), kh, kw, j.value("stride", 1),
                             j.value("padding", 0));
    }
    if (type == "relu") return Layer::relu();
    if (type == "gelu") return Layer::gelu();
    if (type == "global_avg_pool") return Layer::global_avg_pool();
    if (type == "flatten") return Layer::flatten();
    if (type == "residual") {
        std::vector<Layer> inner;
        for (const json& il : j.at("layers")) inner.push_back(layer_from_json(il));
        return Layer::residual(std::move(inner));
    }
    throw ConfigError("unknown layer type: " + type);
}

}  // namespace

std::string to_json(const ModelSpec& spec) {
    json j;
    if (spec.input.h == 1 && spec.input.w == 1) {
        j["input"] = {{"dim", spec.input.c}};
    } else {
        j["input"] = {{"channels", spec.input.c}, {"height", spec.input.h},
                      {"width", spec.input.w}};
    }
    json layers = json::array();
    for (const Layer& l : spec.layers) layers.push_back(layer_to_json(l));
    j["layers"] = layers;
    if (spec.hidden_std != 0.0) j["hidden_std"] = spec.hidden_std;
    if (spec.final_std != 0.0) j["final_std"] = spec.final_std;
    if (spec.bias) j["bias"] = true;
    return j.dump(2);
}

ModelSpec spec_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("model spec JSON parse error: ") + e.what());
    }
    try {
        ModelSpec s;
        const json& in = j.at("input");
        if (in.contains("dim")) {
            s.input = Shape::flat(in.at("dim").get<int>());
        } else {
            s.input = Shape{in.at("channels").get<int>(), in.at("height").get<int>(),
                            in.at("width").get<int>()};
        }
        for (const json& lj : j.at("layers")) s.layers.push_back(layer_from_json(lj));
        s.hidden_std = j.value("hidden_std", 0.0);
        s.final_std = j.value("final_std", 0.0);
        s.bias = j.value("bias", false);
        return s;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("model spec JSON: ") + e.what());
    }
}

}  // namespace gih::nn
