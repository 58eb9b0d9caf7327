#include "sono/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace sono {

// ---------------------------------------------------------------------------
// Tensor
// ---------------------------------------------------------------------------

Tensor Tensor::chw(size_t c, size_t h, size_t w) {
    Tensor t;
    t.shape = {c, h, w};
    t.data.assign(c * h * w, 0.0);
    return t;
}

Tensor Tensor::vec(size_t n) {
    Tensor t;
    t.shape = {n};
    t.data.assign(n, 0.0);
    return t;
}

Tensor to_tensor(const UltrasoundFrame& frame) {
    Tensor t = Tensor::chw(1, static_cast<size_t>(frame.height),
                           static_cast<size_t>(frame.width));
    for (size_t i = 0; i < frame.pixels.size(); ++i) t.data[i] = frame.pixels[i];
    return t;
}

namespace {

std::string shape_str(const std::vector<size_t>& s) {
    std::string out = "(";
    for (size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
    return out + ")";
}

// ---------------------------------------------------------------------------
// Per-layer shape rules
// ---------------------------------------------------------------------------

std::vector<size_t> layer_out_shape(const Layer& layer, const std::vector<size_t>& in) {
    return std::visit(
        [&](const auto& l) -> std::vector<size_t> {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Conv2D>) {
                if (in.size() != 3 || in[0] != l.in_channels)
                    throw ShapeError("conv expects (" + std::to_string(l.in_channels) +
                                     ",h,w), got " + shape_str(in));
                return {l.out_channels, in[1], in[2]};
            } else if constexpr (std::is_same_v<T, ReLU>) {
                return in;
            } else if constexpr (std::is_same_v<T, MaxPool>) {
                if (in.size() != 3 || in[1] < 2 || in[2] < 2)
                    throw ShapeError("pool needs a (c,h,w) input with h,w >= 2, got " +
                                     shape_str(in));
                return {in[0], in[1] / 2, in[2] / 2};
            } else if constexpr (std::is_same_v<T, Flatten>) {
                if (in.size() != 3) throw ShapeError("flatten expects (c,h,w), got " + shape_str(in));
                return {in[0] * in[1] * in[2]};
            } else {  // Dense
                if (in.size() != 1 || in[0] != l.in)
                    throw ShapeError("dense expects (" + std::to_string(l.in) + "), got " +
                                     shape_str(in));
                return {l.out};
            }
        },
        layer);
}

// ---------------------------------------------------------------------------
// Forward kernels
// ---------------------------------------------------------------------------

Tensor padded_copy(const Tensor& in, size_t pad) {
    const size_t c = in.channels(), h = in.height(), w = in.width();
    Tensor out = Tensor::chw(c, h + 2 * pad, w + 2 * pad);
    for (size_t ch = 0; ch < c; ++ch)
        for (size_t y = 0; y < h; ++y) {
            const double* src = &in.data[(ch * h + y) * w];
            double* dst = &out.data[((ch * (h + 2 * pad)) + y + pad) * (w + 2 * pad) + pad];
            std::copy(src, src + w, dst);
        }
    return out;
}

Tensor conv_forward(const Conv2D& l, const Tensor& in) {
    const size_t h = in.height(), w = in.width();
    const size_t pad = l.kernel / 2;
    const Tensor padded = padded_copy(in, pad);
    const size_t pw = w + 2 * pad;

    Tensor out = Tensor::chw(l.out_channels, h, w);
    for (size_t o = 0; o < l.out_channels; ++o) {
        double* outp = &out.data[o * h * w];
        std::fill(outp, outp + h * w, l.bias[o]);
        for (size_t i = 0; i < l.in_channels; ++i) {
            const double* base = &padded.data[i * (h + 2 * pad) * pw];
            for (size_t ky = 0; ky < l.kernel; ++ky) {
                for (size_t kx = 0; kx < l.kernel; ++kx) {
                    const double wgt = l.weight[((o * l.in_channels + i) * l.kernel + ky) * l.kernel + kx];
                    for (size_t y = 0; y < h; ++y) {
                        const double* src = base + (y + ky) * pw + kx;
                        double* dst = outp + y * w;
                        for (size_t x = 0; x < w; ++x) dst[x] += wgt * src[x];
                    }
                }
            }
        }
    }
    return out;
}

void conv_backward(const Conv2D& l, const Tensor& in, const Tensor& gout, Tensor& gin,
                   LayerGrads& lg) {
    const size_t h = in.height(), w = in.width();
    const size_t pad = l.kernel / 2;
    const size_t pw = w + 2 * pad;
    const Tensor padded = padded_copy(in, pad);
    Tensor gpadded = Tensor::chw(l.in_channels, h + 2 * pad, pw);

    lg.weight.assign(l.weight.size(), 0.0);
    lg.bias.assign(l.bias.size(), 0.0);

    for (size_t o = 0; o < l.out_channels; ++o) {
        const double* goutp = &gout.data[o * h * w];
        double bsum = 0.0;
        for (size_t idx = 0; idx < h * w; ++idx) bsum += goutp[idx];
        lg.bias[o] = bsum;
        for (size_t i = 0; i < l.in_channels; ++i) {
            const double* base = &padded.data[i * (h + 2 * pad) * pw];
            double* gbase = &gpadded.data[i * (h + 2 * pad) * pw];
            for (size_t ky = 0; ky < l.kernel; ++ky) {
                for (size_t kx = 0; kx < l.kernel; ++kx) {
                    const size_t widx = ((o * l.in_channels + i) * l.kernel + ky) * l.kernel + kx;
                    const double wgt = l.weight[widx];
                    double wsum = 0.0;
                    for (size_t y = 0; y < h; ++y) {
                        const double* src = base + (y + ky) * pw + kx;
                        double* gdst = gbase + (y + ky) * pw + kx;
                        const double* go = goutp + y * w;
                        for (size_t x = 0; x < w; ++x) {
                            wsum += go[x] * src[x];
                            gdst[x] += wgt * go[x];
                        }
                    }
                    lg.weight[widx] += wsum;
                }
            }
        }
    }

    gin = Tensor::chw(l.in_channels, h, w);
    for (size_t i = 0; i < l.in_channels; ++i)
        for (size_t y = 0; y < h; ++y) {
            const double* src = &gpadded.data[(i * (h + 2 * pad) + y + pad) * pw + pad];
            double* dst = &gin.data[(i * h + y) * w];
            std::copy(src, src + w, dst);
        }
}

Tensor relu_forward(const Tensor& in) {
    Tensor out = in;
    for (double& v : out.data) v = std::max(v, 0.0);
    return out;
}

void relu_backward(const Tensor& in, const Tensor& gout, Tensor& gin) {
    gin = in;
    for (size_t i = 0; i < in.data.size(); ++i)
        gin.data[i] = in.data[i] > 0.0 ? gout.data[i] : 0.0;
}

Tensor pool_forward(const Tensor& in) {
    const size_t c = in.channels(), oh = in.height() / 2, ow = in.width() / 2;
    Tensor out = Tensor::chw(c, oh, ow);
    for (size_t ch = 0; ch < c; ++ch)
        for (size_t y = 0; y < oh; ++y)
            for (size_t x = 0; x < ow; ++x) {
                double best = -std::numeric_limits<double>::infinity();
                for (size_t dy = 0; dy < 2; ++dy)
                    for (size_t dx = 0; dx < 2; ++dx)
                        best = std::max(best, in.at(ch, 2 * y + dy, 2 * x + dx));
                out.at(ch, y, x) = best;
            }
    return out;
}

void pool_backward(const Tensor& in, const Tensor& gout, Tensor& gin) {
    gin = Tensor::chw(in.channels(), in.height(), in.width());
    const size_t oh = in.height() / 2, ow = in.width() / 2;
    for (size_t ch = 0; ch < in.channels(); ++ch)
        for (size_t y = 0; y < oh; ++y)
            for (size_t x = 0; x < ow; ++x) {
                // First maximum in scan order carries the gradient.
                size_t by = 2 * y, bx = 2 * x;
                double best = in.at(ch, by, bx);
                for (size_t dy = 0; dy < 2; ++dy)
                    for (size_t dx = 0; dx < 2; ++dx)
                        if (in.at(ch, 2 * y + dy, 2 * x + dx) > best) {
                            best = in.at(ch, 2 * y + dy, 2 * x + dx);
                            by = 2 * y + dy;
                            bx = 2 * x + dx;
                        }
                gin.at(ch, by, bx) += gout.at(ch, y, x);
            }
}

Tensor dense_forward(const Dense& l, const Tensor& in) {
    Tensor out = Tensor::vec(l.out);
    for (size_t j = 0; j < l.out; ++j) {
        const double* wrow = &l.weight[j * l.in];
        double s = l.bias[j];
        for (size_t i = 0; i < l.in; ++i) s += wrow[i] * in.data[i];
        out.data[j] = s;
    }
    return out;
}

void dense_backward(const Dense& l, const Tensor& in, const Tensor& gout, Tensor& gin,
                    LayerGrads& lg) {
    lg.weight.assign(l.weight.size(), 0.0);
    lg.bias.assign(l.out, 0.0);
    gin = Tensor::vec(l.in);
    for (size_t j = 0; j < l.out; ++j) {
        const double g = gout.data[j];
        lg.bias[j] = g;
        const double* wrow = &l.weight[j * l.in];
        double* grow = &lg.weight[j * l.in];
        for (size_t i = 0; i < l.in; ++i) {
            grow[i] = g * in.data[i];
            gin.data[i] += g * wrow[i];
        }
    }
}

std::string layer_descriptor(const Layer& layer) {
    return std::visit(
        [](const auto& l) -> std::string {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Conv2D>) {
                return "conv" + std::to_string(l.kernel) + "x" + std::to_string(l.kernel) + ":" +
                       std::to_string(l.in_channels) + ">" + std::to_string(l.out_channels);
            } else if constexpr (std::is_same_v<T, ReLU>) {
                return "relu";
            } else if constexpr (std::is_same_v<T, MaxPool>) {
                return "pool2";
            } else if constexpr (std::is_same_v<T, Flatten>) {
                return "flatten";
            } else {
                return "dense:" + std::to_string(l.in) + ">" + std::to_string(l.out);
            }
        },
        layer);
}

}  // namespace

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

std::string CnnModel::descriptor() const {
    std::string out;
    for (size_t i = 0; i < layers.size(); ++i) {
        if (i) out += "|";
        out += layer_descriptor(layers[i]);
    }
    return out;
}

std::vector<size_t> CnnModel::output_shape(const std::vector<size_t>& input_shape) const {
    std::vector<size_t> s = input_shape;
    for (const Layer& l : layers) s = layer_out_shape(l, s);
    return s;
}

std::vector<std::span<double>> CnnModel::param_blobs() {
    std::vector<std::span<double>> blobs;
    for (Layer& layer : layers) {
        if (auto* c = std::get_if<Conv2D>(&layer)) {
            blobs.emplace_back(c->weight);
            blobs.emplace_back(c->bias);
        } else if (auto* d = std::get_if<Dense>(&layer)) {
            blobs.emplace_back(d->weight);
            blobs.emplace_back(d->bias);
        }
    }
    return blobs;
}

std::vector<std::span<const double>> CnnModel::param_blobs() const {
    std::vector<std::span<const double>> blobs;
    for (const Layer& layer : layers) {
        if (const auto* c = std::get_if<Conv2D>(&layer)) {
            blobs.emplace_back(c->weight);
            blobs.emplace_back(c->bias);
        } else if (const auto* d = std::get_if<Dense>(&layer)) {
            blobs.emplace_back(d->weight);
            blobs.emplace_back(d->bias);
        }
    }
    return blobs;
}

size_t CnnModel::param_count() const {
    size_t n = 0;
    for (const auto& b : param_blobs()) n += b.size();
    return n;
}

std::vector<double> CnnModel::flatten_params() const {
    std::vector<double> flat;
    flat.reserve(param_count());
    for (const auto& b : param_blobs()) flat.insert(flat.end(), b.begin(), b.end());
    return flat;
}

void CnnModel::set_params(std::span<const double> flat) {
    if (flat.size() != param_count())
        throw ShapeError("set_params: " + std::to_string(flat.size()) + " values for " +
                         std::to_string(param_count()) + " parameters");
    size_t pos = 0;
    for (auto& b : param_blobs()) {
        std::copy(flat.begin() + static_cast<ptrdiff_t>(pos),
                  flat.begin() + static_cast<ptrdiff_t>(pos + b.size()), b.begin());
        pos += b.size();
    }
}

CnnModel model_from_descriptor(const std::string& descriptor) {
    CnnModel model;
    size_t pos = 0;
    while (pos <= descriptor.size()) {
        const size_t bar = descriptor.find('|', pos);
        const std::string tok =
            descriptor.substr(pos, bar == std::string::npos ? std::string::npos : bar - pos);
        pos = bar == std::string::npos ? descriptor.size() + 1 : bar + 1;

        if (tok == "relu") {
            model.layers.emplace_back(ReLU{});
        } else if (tok == "pool2") {
            model.layers.emplace_back(MaxPool{});
        } else if (tok == "flatten") {
            model.layers.emplace_back(Flatten{});
        } else if (tok.rfind("conv", 0) == 0) {
            unsigned k1 = 0, k2 = 0, in = 0, out = 0;
            if (std::sscanf(tok.c_str(), "conv%ux%u:%u>%u", &k1, &k2, &in, &out) != 4 ||
                k1 != k2 || k1 % 2 == 0 || in == 0 || out == 0)
                throw FormatError("bad conv descriptor '" + tok + "'");
            Conv2D c;
            c.kernel = k1;
            c.in_channels = in;
            c.out_channels = out;
            c.weight.assign(static_cast<size_t>(out) * in * k1 * k1, 0.0);
            c.bias.assign(out, 0.0);
            model.layers.emplace_back(std::move(c));
        } else if (tok.rfind("dense", 0) == 0) {
            unsigned in = 0, out = 0;
            if (std::sscanf(tok.c_str(), "dense:%u>%u", &in, &out) != 2 || in == 0 || out == 0)
                throw FormatError("bad dense descriptor '" + tok + "'");
            Dense d;
            d.in = in;
            d.out = out;
            d.weight.assign(static_cast<size_t>(in) * out, 0.0);
            d.bias.assign(out, 0.0);
            model.layers.emplace_back(std::move(d));
        } else if (tok.empty() && model.layers.empty() && pos > descriptor.size()) {
            throw FormatError("empty model descriptor");
        } else {
            throw FormatError("unknown layer descriptor '" + tok + "'");
        }
    }
    return model;
}

void init_params(CnnModel& model, uint64_t seed) {
    Rng rng(splitmix64(seed ^ 0xC44515EDULL));
    for (Layer& layer : model.layers) {
        if (auto* c = std::get_if<Conv2D>(&layer)) {
            const double bound = std::sqrt(6.0 / static_cast<double>(c->in_channels * c->kernel *
                                                                     c->kernel));
            for (double& w : c->weight) w = rng.uniform(-bound, bound);
            std::fill(c->bias.begin(), c->bias.end(), 0.0);
        } else if (auto* d = std::get_if<Dense>(&layer)) {
            const double bound = std::sqrt(6.0 / static_cast<double>(d->in));
            for (double& w : d->weight) w = rng.uniform(-bound, bound);
            std::fill(d->bias.begin(), d->bias.end(), 0.0);
        }
    }
}

CnnModel make_micro_cnn(int input_height, int input_width, uint64_t seed) {
    if (input_height < 4 || input_width < 4)
        throw ConfigError("micro cnn needs input dims of at least 4x4");
    const size_t h = static_cast<size_t>(input_height);
    const size_t w = static_cast<size_t>(input_width);
    const size_t flat = 16 * (h / 2 / 2) * (w / 2 / 2);

    CnnModel model;
    Conv2D c1;
    c1.in_channels = 1;
    c1.out_channels = 8;
    c1.kernel = 3;
    c1.weight.assign(8 * 1 * 9, 0.0);
    c1.bias.assign(8, 0.0);
    Conv2D c2;
    c2.in_channels = 8;
    c2.out_channels = 16;
    c2.kernel = 3;
    c2.weight.assign(16 * 8 * 9, 0.0);
    c2.bias.assign(16, 0.0);
    Dense d1;
    d1.in = flat;
    d1.out = 64;
    d1.weight.assign(flat * 64, 0.0);
    d1.bias.assign(64, 0.0);
    Dense d2;
    d2.in = 64;
    d2.out = 4;
    d2.weight.assign(64 * 4, 0.0);
    d2.bias.assign(4, 0.0);

    model.layers.emplace_back(std::move(c1));
    model.layers.emplace_back(ReLU{});
    model.layers.emplace_back(MaxPool{});
    model.layers.emplace_back(std::move(c2));
    model.layers.emplace_back(ReLU{});
    model.layers.emplace_back(MaxPool{});
    model.layers.emplace_back(Flatten{});
    model.layers.emplace_back(std::move(d1));
    model.layers.emplace_back(ReLU{});
    model.layers.emplace_back(std::move(d2));

    init_params(model, seed);
    return model;
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

ForwardResult forward(const CnnModel& model, const Tensor& input) {
    if (model.layers.empty()) throw ShapeError("forward: model has no layers");
    ForwardResult res;
    res.cache.descriptor = model.descriptor();
    res.cache.inputs.reserve(model.layers.size());

    Tensor x = input;
    for (const Layer& layer : model.layers) {
        layer_out_shape(layer, x.shape);  // shape check with a precise error
        res.cache.inputs.push_back(x);
        x = std::visit(
            [&](const auto& l) -> Tensor {
                using T = std::decay_t<decltype(l)>;
                const Tensor& in = res.cache.inputs.back();
                if constexpr (std::is_same_v<T, Conv2D>) return conv_forward(l, in);
                else if constexpr (std::is_same_v<T, ReLU>) return relu_forward(in);
                else if constexpr (std::is_same_v<T, MaxPool>) return pool_forward(in);
                else if constexpr (std::is_same_v<T, Flatten>) {
                    Tensor out = in;
                    out.shape = {in.size()};
                    return out;
                } else return dense_forward(l, in);
            },
            layer);
        for (double v : x.data)
            if (!std::isfinite(v)) throw DataError("forward: non-finite activation");
    }
    res.cache.output = x;
    res.output = x.data;
    return res;
}

Gradients backward(const CnnModel& model, const ForwardCache& cache,
                   std::span<const double> grad_output) {
    if (cache.descriptor != model.descriptor())
        throw CacheError("backward: cache from model '" + cache.descriptor +
                         "', called with '" + model.descriptor() + "'");
    if (cache.inputs.size() != model.layers.size())
        throw CacheError("backward: cache depth mismatch");
    if (grad_output.size() != cache.output.size())
        throw ShapeError("backward: grad size " + std::to_string(grad_output.size()) +
                         ", output size " + std::to_string(cache.output.size()));

    Gradients grads;
    grads.layers.resize(model.layers.size());

    Tensor g = cache.output;
    g.data.assign(grad_output.begin(), grad_output.end());

    for (size_t li = model.layers.size(); li-- > 0;) {
        const Tensor& in = cache.inputs[li];
        Tensor gin;
        std::visit(
            [&](const auto& l) {
                using T = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<T, Conv2D>) {
                    conv_backward(l, in, g, gin, grads.layers[li]);
                } else if constexpr (std::is_same_v<T, ReLU>) {
                    relu_backward(in, g, gin);
                } else if constexpr (std::is_same_v<T, MaxPool>) {
                    pool_backward(in, g, gin);
                } else if constexpr (std::is_same_v<T, Flatten>) {
                    gin = g;
                    gin.shape = in.shape;
                } else {
                    dense_backward(l, in, g, gin, grads.layers[li]);
                }
            },
            model.layers[li]);
        g = std::move(gin);
    }
    grads.input = std::move(g);
    return grads;
}

std::vector<double> Gradients::flatten() const {
    std::vector<double> flat;
    for (const LayerGrads& lg : layers) {
        flat.insert(flat.end(), lg.weight.begin(), lg.weight.end());
        flat.insert(flat.end(), lg.bias.begin(), lg.bias.end());
    }
    return flat;
}

MaeResult mae_loss(std::span<const double> pred, std::span<const double> target) {
    if (pred.size() != target.size() || pred.empty())
        throw ShapeError("mae_loss: size mismatch or empty input");
    MaeResult res;
    res.grad.assign(pred.size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(pred.size());
    for (size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        res.loss += std::fabs(d) * inv_n;
        res.grad[i] = d > 0.0 ? inv_n : (d < 0.0 ? -inv_n : 0.0);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

double adam_lr(const AdamState& state, int epoch) {
    return state.alpha / (1.0 + state.decay * static_cast<double>(epoch));
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               double lr) {
    if (params.size() != grads.size())
        throw ShapeError("adam_step: " + std::to_string(params.size()) + " params vs " +
                         std::to_string(grads.size()) + " grads");
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    if (state.m.size() != params.size())
        throw ShapeError("adam_step: state sized for " + std::to_string(state.m.size()) +
                         " params, got " + std::to_string(params.size()));

    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (size_t i = 0; i < params.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

SplitSizes split_sizes(size_t n, const TrainConfig& cfg) {
    if (!(cfg.test_split > 0.0 && cfg.test_split < 1.0) ||
        !(cfg.validation_split > 0.0 && cfg.validation_split < 1.0))
        throw ConfigError("splits must lie in (0, 1)");
    if (cfg.test_split + cfg.validation_split >= 1.0)
        throw ConfigError("test + validation splits must stay below 1");
    SplitSizes s;
    s.test = static_cast<size_t>(std::llround(static_cast<double>(n) * cfg.test_split));
    const size_t rest = n - s.test;
    s.validation = static_cast<size_t>(std::llround(static_cast<double>(rest) * cfg.validation_split));
    s.train = rest - s.validation;
    return s;
}

namespace {

std::array<double, 4> target_of(const McpAngles& a) {
    return {a.flexion[0], a.flexion[1], a.flexion[2], a.flexion[3]};
}

}  // namespace

CnnTrainResult train_cnn(const std::vector<UltrasoundFrame>& frames,
                         const std::vector<McpAngles>& angles, const TrainConfig& cfg) {
    if (frames.size() != angles.size())
        throw ShapeError("train_cnn: " + std::to_string(frames.size()) + " frames vs " +
                         std::to_string(angles.size()) + " angle samples");
    if (frames.size() < 10)
        throw DataError("train_cnn: need at least 10 samples, got " +
                        std::to_string(frames.size()));
    if (cfg.epochs < 1 || cfg.batch_size < 1)
        throw ConfigError("train_cnn: epochs and batch size must be positive");

    CnnTrainResult res;
    res.split = split_sizes(frames.size(), cfg);
    if (res.split.train == 0) throw DataError("train_cnn: split leaves no training samples");

    std::vector<Tensor> inputs;
    inputs.reserve(frames.size());
    for (const UltrasoundFrame& fr : frames) inputs.push_back(to_tensor(fr));

    res.model = make_micro_cnn(frames.front().height, frames.front().width, cfg.seed);
    res.model.output_shape(inputs.front().shape);  // validates compatibility up front

    const size_t n_train = res.split.train;
    const size_t val_begin = n_train;
    const size_t val_end = n_train + res.split.validation;

    AdamState adam;
    std::vector<double> params = res.model.flatten_params();
    std::vector<double> batch_grad(params.size(), 0.0);

    std::vector<size_t> order(n_train);
    for (size_t i = 0; i < n_train; ++i) order[i] = i;
    Rng rng(splitmix64(cfg.seed ^ 0x7Ea13ULL));

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = adam_lr(adam, epoch);
        rng.shuffle(order);

        double epoch_loss = 0.0;
        for (size_t start = 0; start < n_train; start += static_cast<size_t>(cfg.batch_size)) {
            const size_t stop = std::min(n_train, start + static_cast<size_t>(cfg.batch_size));
            std::fill(batch_grad.begin(), batch_grad.end(), 0.0);
            for (size_t bi = start; bi < stop; ++bi) {
                const size_t idx = order[bi];
                ForwardResult fr = forward(res.model, inputs[idx]);
                const auto tgt = target_of(angles[idx]);
                MaeResult mae = mae_loss(fr.output, tgt);
                epoch_loss += mae.loss;
                Gradients g = backward(res.model, fr.cache, mae.grad);
                const std::vector<double> flat = g.flatten();
                for (size_t i = 0; i < flat.size(); ++i) batch_grad[i] += flat[i];
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (double& v : batch_grad) v *= inv;
            adam_step(adam, params, batch_grad, lr);
            res.model.set_params(params);
        }
        res.history.train_mae.push_back(epoch_loss / static_cast<double>(n_train));
        res.history.lr.push_back(lr);

        if (val_end > val_begin) {
            double val_loss = 0.0;
            for (size_t i = val_begin; i < val_end; ++i) {
                ForwardResult fr = forward(res.model, inputs[i]);
                val_loss += mae_loss(fr.output, target_of(angles[i])).loss;
            }
            res.history.val_mae.push_back(val_loss / static_cast<double>(val_end - val_begin));
        } else {
            res.history.val_mae.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    }
    return res;
}

McpAngles predict_angles(const CnnModel& model, const UltrasoundFrame& frame) {
    const ForwardResult fr = forward(model, to_tensor(frame));
    if (fr.output.size() != 4)
        throw ShapeError("predict_angles: model emits " + std::to_string(fr.output.size()) +
                         " outputs, need 4");
    McpAngles a;
    for (Finger f : kFingers) set_flexion(a, f, fr.output[static_cast<size_t>(f)]);
    return a;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {
constexpr char kCnnMagic[8] = {'S', 'O', 'N', 'O', 'C', 'N', 'N', '\0'};
constexpr uint32_t kCnnVersion = 1;
}  // namespace

std::string serialize_cnn(const CnnModel& model) {
    std::string out(kCnnMagic, sizeof(kCnnMagic));
    put_u32(out, kCnnVersion);
    const std::string desc = model.descriptor();
    put_u32(out, static_cast<uint32_t>(desc.size()));
    out += desc;
    for (const auto& blob : model.param_blobs()) {
        put_u64(out, blob.size());
        for (double v : blob) put_f64(out, v);
    }
    return out;
}

CnnModel deserialize_cnn(const std::string& bytes, const std::string& origin) {
    ByteReader in(bytes, origin);
    if (in.get_bytes(sizeof(kCnnMagic)) != std::string(kCnnMagic, sizeof(kCnnMagic)))
        throw FormatError(origin + ": not a CNN model file (bad magic)");
    const uint32_t version = in.get_u32();
    if (version != kCnnVersion)
        throw FormatError(origin + ": CNN model version " + std::to_string(version) +
                          ", expected " + std::to_string(kCnnVersion));
    const uint32_t desc_len = in.get_u32();
    const std::string desc = in.get_bytes(desc_len);
    CnnModel model = model_from_descriptor(desc);
    for (auto& blob : model.param_blobs()) {
        const uint64_t n = in.get_u64();
        if (n != blob.size())
            throw FormatError(origin + ": parameter blob of " + std::to_string(n) +
                              " values does not match descriptor (expected " +
                              std::to_string(blob.size()) + ")");
        for (double& v : blob) v = in.get_f64();
    }
    if (!in.exhausted())
        throw FormatError(origin + ": " + std::to_string(in.remaining()) +
                          " trailing bytes after model data");
    return model;
}

void save_cnn(const CnnModel& model, const std::string& path) {
    write_file(path, serialize_cnn(model));
}

CnnModel load_cnn(const std::string& path) {
    return deserialize_cnn(read_file(path), path);
}

}  // namespace sono
