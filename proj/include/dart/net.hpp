#ifndef DART_NET_HPP
#define DART_NET_HPP

#include <filesystem>
#include <fstream>
#include <memory>

#include "dart/dtsr.hpp"
#include "dart/ops.hpp"

namespace dart {

// ---------------------------------------------------------------------------
// layers
// ---------------------------------------------------------------------------

template <typename T>
struct Conv2dLayer {
    TensorT<T> weight;  // [cout,cin,k,k]
    TensorT<T> bias;    // [cout] when has_bias
    int stride = 1, padding = 0;
    bool has_bias = false;

    Conv2dLayer() = default;
    Conv2dLayer(int cin, int cout, int k, int stride_, int padding_, bool bias_,
                Rng& rng)
        : stride(stride_), padding(padding_), has_bias(bias_) {
        weight = TensorT<T>({cout, cin, k, k}, true);
        const double bound = 1.0 / std::sqrt(double(cin) * k * k);
        for (auto& v : weight.values()) v = T(rng.uniform(-bound, bound));
        if (has_bias) bias = TensorT<T>({cout}, true);
    }

    TensorT<T> forward(const TensorT<T>& x) const {
        return has_bias ? ops::conv2d(x, weight, bias, stride, padding)
                        : ops::conv2d(x, weight, stride, padding);
    }
    void collect(std::vector<ParameterT<T>>& out, const std::string& prefix) {
        out.push_back({prefix + ".weight", weight});
        if (has_bias) out.push_back({prefix + ".bias", bias});
    }
};

template <typename T>
struct ConvTranspose2dLayer {
    TensorT<T> weight;  // [cin,cout,k,k]
    int stride = 2;

    ConvTranspose2dLayer() = default;
    ConvTranspose2dLayer(int cin, int cout, int k, int stride_, Rng& rng)
        : stride(stride_) {
        weight = TensorT<T>({cin, cout, k, k}, true);
        const double bound = 1.0 / std::sqrt(double(cin) * k * k);
        for (auto& v : weight.values()) v = T(rng.uniform(-bound, bound));
    }
    TensorT<T> forward(const TensorT<T>& x) const {
        return ops::conv_transpose2d(x, weight, stride);
    }
    void collect(std::vector<ParameterT<T>>& out, const std::string& prefix) {
        out.push_back({prefix + ".weight", weight});
    }
};

template <typename T>
struct BatchNorm2dLayer {
    TensorT<T> gamma, beta;
    std::vector<T> running_mean, running_var;
    T momentum = T(0.1), epsilon = T(1e-5);

    BatchNorm2dLayer() = default;
    explicit BatchNorm2dLayer(int channels) {
        gamma = TensorT<T>({channels}, true);
        std::fill(gamma.values().begin(), gamma.values().end(), T(1));
        beta = TensorT<T>({channels}, true);
        running_mean.assign(channels, T(0));
        running_var.assign(channels, T(1));
    }
    TensorT<T> forward(const TensorT<T>& x, bool train) {
        return ops::batch_norm(x, gamma, beta, train, running_mean, running_var,
                               momentum, epsilon);
    }
    void collect(std::vector<ParameterT<T>>& out, const std::string& prefix) {
        out.push_back({prefix + ".gamma", gamma});
        out.push_back({prefix + ".beta", beta});
    }
    void collect_buffers(std::vector<std::pair<std::string, std::vector<T>*>>& out,
                         const std::string& prefix) {
        out.push_back({prefix + ".running_mean", &running_mean});
        out.push_back({prefix + ".running_var", &running_var});
    }
};

// conv3x3 + BN + ReLU + conv3x3 + BN, residual skip (1x1 projection + BN
// when channel counts differ), final ReLU. Convs carry no bias.
template <typename T>
struct ResBlockT {
    Conv2dLayer<T> conv1, conv2;
    BatchNorm2dLayer<T> bn1, bn2;
    bool has_proj = false;
    Conv2dLayer<T> proj;
    BatchNorm2dLayer<T> proj_bn;

    ResBlockT() = default;
    ResBlockT(int cin, int cout, Rng& rng)
        : conv1(cin, cout, 3, 1, 1, false, rng),
          conv2(cout, cout, 3, 1, 1, false, rng), bn1(cout), bn2(cout) {
        if (cin != cout) {
            has_proj = true;
            proj = Conv2dLayer<T>(cin, cout, 1, 1, 0, false, rng);
            proj_bn = BatchNorm2dLayer<T>(cout);
        }
    }

    TensorT<T> forward(const TensorT<T>& x, bool train) {
        auto h = ops::relu(bn1.forward(conv1.forward(x), train));
        h = bn2.forward(conv2.forward(h), train);
        auto skip = has_proj ? proj_bn.forward(proj.forward(x), train) : x;
        return ops::relu(ops::add(h, skip));
    }
    void collect(std::vector<ParameterT<T>>& out, const std::string& prefix) {
        conv1.collect(out, prefix + ".conv1");
        bn1.collect(out, prefix + ".bn1");
        conv2.collect(out, prefix + ".conv2");
        bn2.collect(out, prefix + ".bn2");
        if (has_proj) {
            proj.collect(out, prefix + ".proj");
            proj_bn.collect(out, prefix + ".proj_bn");
        }
    }
    void collect_buffers(std::vector<std::pair<std::string, std::vector<T>*>>& out,
                         const std::string& prefix) {
        bn1.collect_buffers(out, prefix + ".bn1");
        bn2.collect_buffers(out, prefix + ".bn2");
        if (has_proj) proj_bn.collect_buffers(out, prefix + ".proj_bn");
    }
};

// Channel attention: GAP -> 1x1 (C -> C/r, bias) -> ReLU -> 1x1 (C/r -> C,
// bias) -> sigmoid -> channelwise rescale.
template <typename T>
struct SimplifiedAttentionT {
    Conv2dLayer<T> fc1, fc2;

    SimplifiedAttentionT() = default;
    SimplifiedAttentionT(int channels, int reduction, Rng& rng) {
        if (channels % reduction != 0)
            throw ShapeError("SimplifiedAttention: channels " +
                             std::to_string(channels) + " not divisible by reduction " +
                             std::to_string(reduction));
        fc1 = Conv2dLayer<T>(channels, channels / reduction, 1, 1, 0, true, rng);
        fc2 = Conv2dLayer<T>(channels / reduction, channels, 1, 1, 0, true, rng);
    }
    TensorT<T> forward(const TensorT<T>& x) const {
        auto gate = ops::sigmoid(
            fc2.forward(ops::relu(fc1.forward(ops::global_avg_pool(x)))));
        return ops::mul_channel_gate(x, gate);
    }
    void collect(std::vector<ParameterT<T>>& out, const std::string& prefix) {
        fc1.collect(out, prefix + ".fc1");
        fc2.collect(out, prefix + ".fc2");
    }
};

// Spatial attention: channel mean/max stats -> 7x7 conv -> sigmoid gate.
// Used by the single-decoder baseline's bottleneck attention.
template <typename T>
struct SpatialAttentionT {
    Conv2dLayer<T> conv;

    SpatialAttentionT() = default;
    explicit SpatialAttentionT(Rng& rng) : conv(2, 1, 7, 1, 3, true, rng) {}
    TensorT<T> forward(const TensorT<T>& x) const {
        auto gate = ops::sigmoid(conv.forward(ops::channel_pool_stats(x)));
        return ops::mul_spatial_gate(x, gate);
    }
    void collect(std::vector<ParameterT<T>>& out, const std::string& prefix) {
        conv.collect(out, prefix + ".conv");
    }
};

// 2x2 stride-2 transpose conv, concat with the encoder skip, ResBlock down
// to c_out.
template <typename T>
struct DecoderBlockT {
    ConvTranspose2dLayer<T> up;
    ResBlockT<T> block;

    DecoderBlockT() = default;
    DecoderBlockT(int c_in_deep, int c_skip, int c_out, Rng& rng)
        : up(c_in_deep, c_out, 2, 2, rng), block(c_out + c_skip, c_out, rng) {}

    TensorT<T> forward(const TensorT<T>& deep, const TensorT<T>& skip, bool train) {
        auto u = up.forward(deep);
        if (u.shape() != skip.shape()) {
            ops::Dims4 du = ops::as4d(u, "DecoderBlock");
            ops::Dims4 ds = ops::as4d(skip, "DecoderBlock");
            if (du.h != ds.h || du.w != ds.w)
                throw ShapeError("DecoderBlock: skip spatial mismatch " +
                                 shape_string(u.shape()) + " vs " +
                                 shape_string(skip.shape()));
        }
        return block.forward(ops::concat_channels(u, skip), train);
    }
    void collect(std::vector<ParameterT<T>>& out, const std::string& prefix) {
        up.collect(out, prefix + ".up");
        block.collect(out, prefix + ".block");
    }
    void collect_buffers(std::vector<std::pair<std::string, std::vector<T>*>>& out,
                         const std::string& prefix) {
        block.collect_buffers(out, prefix + ".block");
    }
};

// ---------------------------------------------------------------------------
// model configuration
// ---------------------------------------------------------------------------

struct DartConfig {
    int in_channels = 4;
    std::vector<int> encoder_widths = {32, 64, 128, 256};
    int bottleneck_width = 512;
    int attention_level = 2;  // after the N-th decoder block (1-based)
    int attention_reduction = 8;
    // desk-scale shrinkage as a rational factor applied to all widths
    int width_scale_num = 1;
    int width_scale_den = 1;
    uint64_t seed = 1;

    int scaled(int w) const {
        int v = w * width_scale_num / width_scale_den;
        return v < 1 ? 1 : v;
    }
    std::vector<int> widths() const {
        std::vector<int> out;
        for (int w : encoder_widths) out.push_back(scaled(w));
        return out;
    }
    int bottleneck() const { return scaled(bottleneck_width); }
    void validate() const {
        if (in_channels <= 0) throw ShapeError("DartConfig: in_channels must be positive");
        for (size_t i = 1; i < encoder_widths.size(); ++i)
            if (encoder_widths[i] <= encoder_widths[i - 1])
                throw ShapeError("DartConfig: encoder widths must be strictly increasing");
        if (bottleneck_width != 2 * encoder_widths.back())
            throw ShapeError("DartConfig: bottleneck must be twice the last encoder width");
        if (attention_level < 1 || attention_level > int(encoder_widths.size()))
            throw ShapeError("DartConfig: attention_level out of range");
    }
};

template <typename T>
struct DartOutputsT {
    TensorT<T> final;       // continuity + extreme, exact additive fusion
    TensorT<T> continuity;
    TensorT<T> extreme;
};
using DartOutputs = DartOutputsT<float>;

// ---------------------------------------------------------------------------
// DART: shared ResNet-style encoder, two specialized decoder heads fused
// additively, channel attention on the extreme decoder only.
// ---------------------------------------------------------------------------

template <typename T>
class DartModelT {
public:
    explicit DartModelT(const DartConfig& config) : cfg_(config) {
        cfg_.validate();
        Rng rng(cfg_.seed);
        const auto w = cfg_.widths();
        const int bott = cfg_.bottleneck();
        int prev = cfg_.in_channels;
        for (int i = 0; i < 4; ++i) {
            encoder_.emplace_back(prev, w[i], rng);
            prev = w[i];
        }
        bottleneck_ = ResBlockT<T>(w[3], bott, rng);
        auto build_decoder = [&](std::vector<DecoderBlockT<T>>& dec) {
            int deep = bott;
            for (int i = 3; i >= 0; --i) {
                dec.emplace_back(deep, w[i], w[i], rng);
                deep = w[i];
            }
        };
        build_decoder(cont_decoder_);
        build_decoder(ext_decoder_);
        attention_ = SimplifiedAttentionT<T>(w[4 - cfg_.attention_level],
                                             cfg_.attention_reduction, rng);
        cont_head_ = Conv2dLayer<T>(w[0], 1, 1, 1, 0, true, rng);
        ext_head_ = Conv2dLayer<T>(w[0], 1, 1, 1, 0, true, rng);
        register_params();
    }

    DartOutputsT<T> forward(const TensorT<T>& x, bool train) {
        ops::Dims4 d = ops::as4d(x, "DartModel");
        if (d.h % 16 != 0 || d.w % 16 != 0)
            throw ShapeError("DartModel: spatial dims must be divisible by 16, got " +
                             std::to_string(d.h) + "x" + std::to_string(d.w));
        if (d.c != cfg_.in_channels)
            throw ShapeError("DartModel: expected " + std::to_string(cfg_.in_channels) +
                             " input channels, got " + std::to_string(d.c));
        std::vector<TensorT<T>> skips;
        TensorT<T> h = x;
        for (auto& block : encoder_) {
            h = block.forward(h, train);
            skips.push_back(h);
            h = ops::maxpool2x2(h);
        }
        h = bottleneck_.forward(h, train);

        auto run_decoder = [&](std::vector<DecoderBlockT<T>>& dec, bool with_attn) {
            TensorT<T> y = h;
            for (int i = 0; i < 4; ++i) {
                y = dec[i].forward(y, skips[3 - i], train);
                if (with_attn && i + 1 == cfg_.attention_level)
                    y = attention_.forward(y);
            }
            return y;
        };
        DartOutputsT<T> out;
        out.continuity = cont_head_.forward(run_decoder(cont_decoder_, false));
        out.extreme = ext_head_.forward(run_decoder(ext_decoder_, true));
        out.final = ops::add(out.continuity, out.extreme);
        return out;
    }

    std::vector<ParameterT<T>>& params() { return params_; }
    long param_count() const {
        long n = 0;
        for (const auto& p : params_) n += p.tensor.numel();
        return n;
    }
    long component_param_count(const std::string& prefix) const {
        long n = 0;
        for (const auto& p : params_)
            if (p.name.rfind(prefix, 0) == 0) n += p.tensor.numel();
        return n;
    }
    const DartConfig& config() const { return cfg_; }
    std::vector<std::pair<std::string, std::vector<T>*>> buffers() {
        std::vector<std::pair<std::string, std::vector<T>*>> out;
        for (int i = 0; i < 4; ++i)
            encoder_[i].collect_buffers(out, "encoder." + std::to_string(i + 1));
        bottleneck_.collect_buffers(out, "bottleneck");
        for (int i = 0; i < 4; ++i) {
            cont_decoder_[i].collect_buffers(out, "decoder_cont." + std::to_string(i + 1));
            ext_decoder_[i].collect_buffers(out, "decoder_ext." + std::to_string(i + 1));
        }
        return out;
    }

private:
    DartConfig cfg_;
    std::vector<ResBlockT<T>> encoder_;
    ResBlockT<T> bottleneck_;
    std::vector<DecoderBlockT<T>> cont_decoder_, ext_decoder_;
    SimplifiedAttentionT<T> attention_;
    Conv2dLayer<T> cont_head_, ext_head_;
    std::vector<ParameterT<T>> params_;

    void register_params() {
        params_.clear();
        for (int i = 0; i < 4; ++i)
            encoder_[i].collect(params_, "encoder." + std::to_string(i + 1));
        bottleneck_.collect(params_, "bottleneck");
        for (int i = 0; i < 4; ++i)
            cont_decoder_[i].collect(params_, "decoder_cont." + std::to_string(i + 1));
        for (int i = 0; i < 4; ++i)
            ext_decoder_[i].collect(params_, "decoder_ext." + std::to_string(i + 1));
        attention_.collect(params_, "attention");
        cont_head_.collect(params_, "head_cont");
        ext_head_.collect(params_, "head_ext");
    }
};
using DartModel = DartModelT<float>;

// ---------------------------------------------------------------------------
// Single-decoder U-Net baseline: same encoder/bottleneck geometry, one
// decoder, channel + spatial attention after the bottleneck, one head.
// ---------------------------------------------------------------------------

template <typename T>
class UnetModelT {
public:
    explicit UnetModelT(const DartConfig& config) : cfg_(config) {
        cfg_.validate();
        // distinct init stream from a DART build at the same seed
        Rng rng(cfg_.seed ^ 0x9e3779b97f4a7c15ull);
        const auto w = cfg_.widths();
        const int bott = cfg_.bottleneck();
        int prev = cfg_.in_channels;
        for (int i = 0; i < 4; ++i) {
            encoder_.emplace_back(prev, w[i], rng);
            prev = w[i];
        }
        bottleneck_ = ResBlockT<T>(w[3], bott, rng);
        channel_attn_ = SimplifiedAttentionT<T>(bott, cfg_.attention_reduction, rng);
        spatial_attn_ = SpatialAttentionT<T>(rng);
        int deep = bott;
        for (int i = 3; i >= 0; --i) {
            decoder_.emplace_back(deep, w[i], w[i], rng);
            deep = w[i];
        }
        head_ = Conv2dLayer<T>(w[0], 1, 1, 1, 0, true, rng);
        register_params();
    }

    TensorT<T> forward(const TensorT<T>& x, bool train) {
        ops::Dims4 d = ops::as4d(x, "UnetModel");
        if (d.h % 16 != 0 || d.w % 16 != 0)
            throw ShapeError("UnetModel: spatial dims must be divisible by 16");
        std::vector<TensorT<T>> skips;
        TensorT<T> h = x;
        for (auto& block : encoder_) {
            h = block.forward(h, train);
            skips.push_back(h);
            h = ops::maxpool2x2(h);
        }
        h = bottleneck_.forward(h, train);
        h = spatial_attn_.forward(channel_attn_.forward(h));
        for (int i = 0; i < 4; ++i) h = decoder_[i].forward(h, skips[3 - i], train);
        return head_.forward(h);
    }

    std::vector<ParameterT<T>>& params() { return params_; }
    long param_count() const {
        long n = 0;
        for (const auto& p : params_) n += p.tensor.numel();
        return n;
    }
    long attention_param_count() const {
        long n = 0;
        for (const auto& p : params_)
            if (p.name.rfind("attention", 0) == 0) n += p.tensor.numel();
        return n;
    }
    const DartConfig& config() const { return cfg_; }
    std::vector<std::pair<std::string, std::vector<T>*>> buffers() {
        std::vector<std::pair<std::string, std::vector<T>*>> out;
        for (int i = 0; i < 4; ++i)
            encoder_[i].collect_buffers(out, "encoder." + std::to_string(i + 1));
        bottleneck_.collect_buffers(out, "bottleneck");
        for (int i = 0; i < 4; ++i)
            decoder_[i].collect_buffers(out, "decoder." + std::to_string(i + 1));
        return out;
    }

private:
    DartConfig cfg_;
    std::vector<ResBlockT<T>> encoder_;
    ResBlockT<T> bottleneck_;
    SimplifiedAttentionT<T> channel_attn_;
    SpatialAttentionT<T> spatial_attn_;
    std::vector<DecoderBlockT<T>> decoder_;
    Conv2dLayer<T> head_;
    std::vector<ParameterT<T>> params_;

    void register_params() {
        params_.clear();
        for (int i = 0; i < 4; ++i)
            encoder_[i].collect(params_, "encoder." + std::to_string(i + 1));
        bottleneck_.collect(params_, "bottleneck");
        channel_attn_.collect(params_, "attention.channel");
        spatial_attn_.collect(params_, "attention.spatial");
        for (int i = 0; i < 4; ++i)
            decoder_[i].collect(params_, "decoder." + std::to_string(i + 1));
        head_.collect(params_, "head");
    }
};
using UnetModel = UnetModelT<float>;

// ---------------------------------------------------------------------------
// checkpointing: one DTSR file per parameter/buffer plus a text index
// ---------------------------------------------------------------------------

template <typename Model>
void save_checkpoint(Model& model, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::ofstream index(dir + "/index.txt", std::ios::trunc);
    if (!index) throw DataError("save_checkpoint: cannot open index in " + dir);
    for (auto& p : model.params()) {
        const std::string file = p.name + ".dtsr";
        std::vector<float> vals(p.tensor.values().begin(), p.tensor.values().end());
        write_dtsr(dir + "/" + file, p.tensor.shape(), vals);
        index << "param\t" << p.name << '\t' << file << '\t';
        const auto& s = p.tensor.shape();
        for (size_t i = 0; i < s.size(); ++i) index << (i ? "," : "") << s[i];
        index << '\n';
    }
    for (auto& [name, buf] : model.buffers()) {
        const std::string file = name + ".dtsr";
        std::vector<float> vals(buf->begin(), buf->end());
        write_dtsr(dir + "/" + file, {int(buf->size())}, vals);
        index << "buffer\t" << name << '\t' << file << '\t' << buf->size() << '\n';
    }
}

template <typename Model>
void load_checkpoint(Model& model, const std::string& dir) {
    for (auto& p : model.params()) {
        DtsrTensor t = read_dtsr(dir + "/" + p.name + ".dtsr");
        if (t.dims != p.tensor.shape())
            throw DataError("load_checkpoint: shape mismatch for " + p.name);
        auto& vals = p.tensor.values();
        for (size_t i = 0; i < vals.size(); ++i) vals[i] = t.values[i];
    }
    for (auto& [name, buf] : model.buffers()) {
        DtsrTensor t = read_dtsr(dir + "/" + name + ".dtsr");
        if (t.values.size() != buf->size())
            throw DataError("load_checkpoint: size mismatch for buffer " + name);
        for (size_t i = 0; i < buf->size(); ++i) (*buf)[i] = t.values[i];
    }
}

}  // namespace dart

#endif
