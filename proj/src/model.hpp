#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "conv.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace hsjp::model {

// Fixed architecture (stride product 4, no normalization layers):
//   conv in_c->16 (7x7, s2, p3) + relu          [stem1]
//   conv 16->32   (3x3, s2, p1) + relu          [stem2]
//   3 x residual block of two 32->32 3x3 convs  [block1..3]
//     (conv + relu + conv, additive skip, relu)
//   conv 32->head_channels (1x1)                [head]
// Weight init: He-uniform fan-in, bound = sqrt(6 / (in_c*k*k)); biases 0.

struct LayerSpec {
    enum class Kind { Conv, Relu, Residual, HeadConv };
    Kind kind = Kind::Conv;
    int in_c = 0, out_c = 0, k = 0, stride = 1, pad = 0;
};

std::vector<LayerSpec> layer_chain(int in_channels, int head_channels);
std::string chain_string(const std::vector<LayerSpec>& chain);
std::uint64_t fnv1a64(const std::string& s);
std::uint64_t architecture_hash(int in_channels, int head_channels);

inline constexpr int kStem1Out = 16;
inline constexpr int kWidth = 32;       // channel width of stem2/blocks
inline constexpr int kNumBlocks = 3;
inline constexpr int kFreezeGroups = 6; // stem1, stem2, block1..3, head
inline constexpr int kNumParams = 18;   // weight+bias blocks

const char* freeze_group_name(int group);

// Param block index -> freeze group (weights and biases share the group).
inline int param_group(int param_idx) {
    if (param_idx < 2) return 0;                         // stem1 w,b
    if (param_idx < 4) return 1;                         // stem2 w,b
    if (param_idx < 16) return 2 + (param_idx - 4) / 4;  // blocks
    return 5;                                            // head w,b
}

template <class T>
struct Param {
    std::string name;
    std::vector<int> shape;
    std::vector<T> v;

    std::size_t size() const { return v.size(); }
};

template <class T>
struct Network {
    int in_channels = 3;
    int head_channels = 0;
    std::vector<Param<T>> params;             // kNumParams blocks, fixed order
    std::array<bool, kFreezeGroups> frozen{}; // not serialized

    std::size_t total_params() const {
        std::size_t n = 0;
        for (const auto& p : params) n += p.size();
        return n;
    }
};

template <class T>
using Grads = std::vector<std::vector<T>>;

namespace detail {

inline nn::ConvShape stem1_shape(int in_c) { return {in_c, kStem1Out, 7, 2, 3}; }
inline nn::ConvShape stem2_shape() { return {kStem1Out, kWidth, 3, 2, 1}; }
inline nn::ConvShape block_conv_shape() { return {kWidth, kWidth, 3, 1, 1}; }
inline nn::ConvShape head_shape(int head_c) { return {kWidth, head_c, 1, 1, 0}; }

template <class T>
Param<T> make_conv_param(const std::string& name, const nn::ConvShape& s) {
    Param<T> p;
    p.name = name + ".weight";
    p.shape = {s.out_c, s.in_c, s.k, s.k};
    p.v.assign(static_cast<std::size_t>(s.out_c) * s.in_c * s.k * s.k, T(0));
    return p;
}

template <class T>
Param<T> make_bias_param(const std::string& name, int out_c) {
    Param<T> p;
    p.name = name + ".bias";
    p.shape = {out_c};
    p.v.assign(static_cast<std::size_t>(out_c), T(0));
    return p;
}

template <class T>
void he_uniform_fill(Param<T>& weight, int fan_in, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (auto& w : weight.v) w = static_cast<T>(rng.uniform(-bound, bound));
}

inline std::vector<std::pair<std::string, nn::ConvShape>> conv_table(int in_c, int head_c) {
    std::vector<std::pair<std::string, nn::ConvShape>> t;
    t.emplace_back("stem1", stem1_shape(in_c));
    t.emplace_back("stem2", stem2_shape());
    for (int b = 0; b < kNumBlocks; ++b) {
        const std::string base = "block" + std::to_string(b + 1);
        t.emplace_back(base + ".conv1", block_conv_shape());
        t.emplace_back(base + ".conv2", block_conv_shape());
    }
    t.emplace_back("head", head_shape(head_c));
    return t;
}

}  // namespace detail

template <class T>
Network<T> build_network(int input_size, int head_channels, int in_channels, std::uint64_t seed) {
    if (input_size < 4 || input_size % 4 != 0)
        throw ArgError("build_network: input size must be a positive multiple of 4, got " +
                       std::to_string(input_size));
    if (head_channels < 1) throw ArgError("build_network: head_channels must be >= 1");
    if (in_channels != 3 && in_channels != 6)
        throw ArgError("build_network: in_channels must be 3 or 6");

    Network<T> net;
    net.in_channels = in_channels;
    net.head_channels = head_channels;
    Rng rng(seed);
    for (const auto& [name, shape] : detail::conv_table(in_channels, head_channels)) {
        Param<T> w = detail::make_conv_param<T>(name, shape);
        detail::he_uniform_fill(w, shape.in_c * shape.k * shape.k, rng);
        net.params.push_back(std::move(w));
        net.params.push_back(detail::make_bias_param<T>(name, shape.out_c));
    }
    return net;
}

template <class T>
Network<T> swap_head(const Network<T>& net, int new_channels, Rng& rng) {
    if (new_channels < 1) throw ArgError("swap_head: channel count must be >= 1");
    Network<T> out = net;
    out.head_channels = new_channels;
    const nn::ConvShape hs = detail::head_shape(new_channels);
    Param<T> w = detail::make_conv_param<T>("head", hs);
    detail::he_uniform_fill(w, hs.in_c * hs.k * hs.k, rng);
    out.params[kNumParams - 2] = std::move(w);
    out.params[kNumParams - 1] = detail::make_bias_param<T>("head", new_channels);
    return out;
}

template <class T>
void set_freeze_prefix(Network<T>& net, int depth) {
    if (depth < 0 || depth > kFreezeGroups)
        throw ArgError("set_freeze_prefix: depth must be in [0, " +
                       std::to_string(kFreezeGroups) + "], got " + std::to_string(depth));
    for (int g = 0; g < kFreezeGroups; ++g) net.frozen[static_cast<std::size_t>(g)] = g < depth;
}

// Post-activation feature maps kept for backward.
template <class T>
struct Cache {
    int batch = 0, in_c = 0, size = 0;
    int h1 = 0, h2 = 0;  // size/2, size/4
    std::vector<T> x0, r1, r2;
    std::array<std::vector<T>, kNumBlocks> rc1, bout;

    void resize(int b, int in_channels, int s) {
        batch = b;
        in_c = in_channels;
        size = s;
        h1 = s / 2;
        h2 = s / 4;
        const std::size_t n1 = static_cast<std::size_t>(b) * kStem1Out * h1 * h1;
        const std::size_t n2 = static_cast<std::size_t>(b) * kWidth * h2 * h2;
        x0.resize(static_cast<std::size_t>(b) * in_c * s * s);
        r1.resize(n1);
        r2.resize(n2);
        for (int k = 0; k < kNumBlocks; ++k) {
            rc1[static_cast<std::size_t>(k)].resize(n2);
            bout[static_cast<std::size_t>(k)].resize(n2);
        }
    }
};

namespace detail {

template <class T>
struct Workspace {
    std::vector<T> col, dcol;
    std::vector<T> da, db, dc;  // kWidth x h2 x h2 each
    std::vector<T> dd;          // kStem1Out x h1 x h1
    std::vector<T> scratch_w, scratch_b;  // discarded grads of frozen convs

    void resize(int in_c, int size) {
        const int h1 = size / 2, h2 = size / 4;
        std::size_t col_max = static_cast<std::size_t>(in_c) * 49 * h1 * h1;
        col_max = std::max(col_max, static_cast<std::size_t>(kWidth) * 9 * h2 * h2);
        col.resize(col_max);
        dcol.resize(col_max);
        const std::size_t n2 = static_cast<std::size_t>(kWidth) * h2 * h2;
        da.resize(n2);
        db.resize(n2);
        dc.resize(n2);
        dd.resize(static_cast<std::size_t>(kStem1Out) * h1 * h1);
        scratch_w.resize(static_cast<std::size_t>(kWidth) * kWidth * 9);
        scratch_b.resize(kWidth);
    }
};

template <class T>
void relu_inplace(T* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (x[i] < T(0)) x[i] = T(0);
}

// dx *= (act > 0), where act is the stored post-activation map.
template <class T>
void relu_backward_inplace(T* dx, const T* act, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (act[i] <= T(0)) dx[i] = T(0);
}

template <class T>
void forward_item(const Network<T>& net, const T* x, int size, Cache<T>& cache, int item,
                  T* out, Workspace<T>& ws) {
    const int h1 = size / 2, h2 = size / 4;
    const std::size_t in_n = static_cast<std::size_t>(net.in_channels) * size * size;
    const std::size_t n1 = static_cast<std::size_t>(kStem1Out) * h1 * h1;
    const std::size_t n2 = static_cast<std::size_t>(kWidth) * h2 * h2;

    T* x0 = cache.x0.data() + in_n * item;
    std::copy(x, x + in_n, x0);

    const auto& p = net.params;
    T* r1 = cache.r1.data() + n1 * item;
    nn::conv_forward(x0, size, size, stem1_shape(net.in_channels), p[0].v.data(), p[1].v.data(),
                     r1, ws.col.data());
    relu_inplace(r1, n1);

    T* r2 = cache.r2.data() + n2 * item;
    nn::conv_forward(r1, h1, h1, stem2_shape(), p[2].v.data(), p[3].v.data(), r2,
                     ws.col.data());
    relu_inplace(r2, n2);

    const T* cur = r2;
    for (int b = 0; b < kNumBlocks; ++b) {
        const int pi = 4 + b * 4;
        T* rc1 = cache.rc1[static_cast<std::size_t>(b)].data() + n2 * item;
        nn::conv_forward(cur, h2, h2, block_conv_shape(), p[pi].v.data(), p[pi + 1].v.data(),
                         rc1, ws.col.data());
        relu_inplace(rc1, n2);

        T* bout = cache.bout[static_cast<std::size_t>(b)].data() + n2 * item;
        nn::conv_forward(rc1, h2, h2, block_conv_shape(), p[pi + 2].v.data(),
                         p[pi + 3].v.data(), bout, ws.col.data());
        for (std::size_t i = 0; i < n2; ++i) bout[i] += cur[i];
        relu_inplace(bout, n2);
        cur = bout;
    }

    nn::conv_forward(cur, h2, h2, head_shape(net.head_channels), p[16].v.data(),
                     p[17].v.data(), out, ws.col.data());
}

// Walks groups head..stop_group; grads of frozen groups go to scratch.
template <class T>
void backward_item(const Network<T>& net, const Cache<T>& cache, int item, const T* dout,
                   Grads<T>& g, Workspace<T>& ws, int stop_group) {
    const int size = cache.size, h1 = cache.h1, h2 = cache.h2;
    const std::size_t in_n = static_cast<std::size_t>(net.in_channels) * size * size;
    const std::size_t n1 = static_cast<std::size_t>(kStem1Out) * h1 * h1;
    const std::size_t n2 = static_cast<std::size_t>(kWidth) * h2 * h2;
    const auto& p = net.params;

    auto gw = [&](int pi) -> T* {
        return net.frozen[static_cast<std::size_t>(param_group(pi))]
                   ? ws.scratch_w.data()
                   : g[static_cast<std::size_t>(pi)].data();
    };
    auto gb = [&](int pi) -> T* {
        return net.frozen[static_cast<std::size_t>(param_group(pi))]
                   ? ws.scratch_b.data()
                   : g[static_cast<std::size_t>(pi)].data();
    };

    // head (group 5)
    const T* head_in = cache.bout[kNumBlocks - 1].data() + n2 * item;
    T* da = ws.da.data();
    std::fill(da, da + n2, T(0));
    const bool below_head = stop_group <= 4;
    nn::conv_backward(head_in, h2, h2, head_shape(net.head_channels), p[16].v.data(), dout,
                      gw(16), gb(17), below_head ? da : nullptr, ws.col.data(),
                      ws.dcol.data());
    if (!below_head) return;

    // residual blocks (groups 4..2)
    for (int b = kNumBlocks - 1; b >= 0; --b) {
        const int group = 2 + b;
        if (group < stop_group) return;
        const int pi = 4 + b * 4;
        const T* bout = cache.bout[static_cast<std::size_t>(b)].data() + n2 * item;
        const T* rc1 = cache.rc1[static_cast<std::size_t>(b)].data() + n2 * item;
        const T* bin = (b == 0) ? cache.r2.data() + n2 * item
                                : cache.bout[static_cast<std::size_t>(b - 1)].data() + n2 * item;

        relu_backward_inplace(da, bout, n2);  // da = d(sum)
        T* drc1 = ws.db.data();
        std::fill(drc1, drc1 + n2, T(0));
        nn::conv_backward(rc1, h2, h2, block_conv_shape(), p[pi + 2].v.data(), da, gw(pi + 2),
                          gb(pi + 3), drc1, ws.col.data(), ws.dcol.data());
        relu_backward_inplace(drc1, rc1, n2);  // drc1 = d(conv1 pre-act)
        T* dbin = ws.dc.data();
        std::fill(dbin, dbin + n2, T(0));
        nn::conv_backward(bin, h2, h2, block_conv_shape(), p[pi].v.data(), drc1, gw(pi),
                          gb(pi + 1), dbin, ws.col.data(), ws.dcol.data());
        // skip connection: d(block input) = conv path + d(sum)
        for (std::size_t i = 0; i < n2; ++i) da[i] += dbin[i];
    }

    // stem2 (group 1)
    if (stop_group > 1) return;
    const T* r2 = cache.r2.data() + n2 * item;
    const T* r1 = cache.r1.data() + n1 * item;
    relu_backward_inplace(da, r2, n2);
    const bool need_stem1 = stop_group == 0;
    T* dr1 = ws.dd.data();
    std::fill(dr1, dr1 + n1, T(0));
    nn::conv_backward(r1, h1, h1, stem2_shape(), p[2].v.data(), da, gw(2), gb(3),
                      need_stem1 ? dr1 : nullptr, ws.col.data(), ws.dcol.data());

    // stem1 (group 0)
    if (!need_stem1) return;
    const T* x0 = cache.x0.data() + in_n * item;
    relu_backward_inplace(dr1, r1, n1);
    nn::conv_backward(x0, size, size, stem1_shape(net.in_channels), p[0].v.data(), dr1, gw(0),
                      gb(1), static_cast<T*>(nullptr), ws.col.data(), ws.dcol.data());
}

}  // namespace detail

inline int output_size(int input_size) { return input_size / 4; }

template <class T>
Grads<T> zero_grads(const Network<T>& net) {
    Grads<T> g(net.params.size());
    for (std::size_t i = 0; i < net.params.size(); ++i)
        g[i].assign(net.params[i].size(), T(0));
    return g;
}

// out must hold batch * head_channels * (size/4)^2 values. Deterministic for
// fixed weights and input, independent of the thread count.
template <class T>
void forward(const Network<T>& net, const T* input, int batch, int size, T* out,
             Cache<T>& cache, int threads = 1) {
    if (batch < 1) throw ArgError("forward: empty batch");
    if (size < 4 || size % 4 != 0)
        throw ArgError("forward: input size must be a multiple of 4, got " +
                       std::to_string(size));
    cache.resize(batch, net.in_channels, size);
    const std::size_t in_n = static_cast<std::size_t>(net.in_channels) * size * size;
    const int h2 = size / 4;
    const std::size_t out_n = static_cast<std::size_t>(net.head_channels) * h2 * h2;

    parallel_for(batch, threads, [&](int item) {
        thread_local detail::Workspace<T> ws;
        ws.resize(net.in_channels, size);
        detail::forward_item(net, input + in_n * item, size, cache, item, out + out_n * item,
                             ws);
    });
}

// Accumulates parameter gradients over the batch, summed in item order
// regardless of threading. Frozen groups receive exactly zero.
template <class T>
void backward(const Network<T>& net, const Cache<T>& cache, const T* dout, Grads<T>& grads,
              int threads = 1) {
    if (cache.batch < 1) throw ArgError("backward: stale or empty cache");
    if (grads.size() != net.params.size()) throw ShapeError("backward: grads layout mismatch");
    for (std::size_t i = 0; i < grads.size(); ++i)
        if (grads[i].size() != net.params[i].size())
            throw ShapeError("backward: grad block size mismatch at " + net.params[i].name);

    int stop_group = kFreezeGroups;
    for (int gidx = 0; gidx < kFreezeGroups; ++gidx)
        if (!net.frozen[static_cast<std::size_t>(gidx)]) {
            stop_group = gidx;
            break;
        }
    if (stop_group == kFreezeGroups) return;  // everything frozen

    const std::size_t out_n =
        static_cast<std::size_t>(net.head_channels) * cache.h2 * cache.h2;
    const int batch = cache.batch;

    std::vector<Grads<T>> item_grads(static_cast<std::size_t>(batch));
    parallel_for(batch, threads, [&](int item) {
        thread_local detail::Workspace<T> ws;
        ws.resize(net.in_channels, cache.size);
        item_grads[static_cast<std::size_t>(item)] = zero_grads(net);
        detail::backward_item(net, cache, item, dout + out_n * item,
                              item_grads[static_cast<std::size_t>(item)], ws, stop_group);
    });
    for (int item = 0; item < batch; ++item)
        for (std::size_t pi = 0; pi < grads.size(); ++pi) {
            const auto& src = item_grads[static_cast<std::size_t>(item)][pi];
            auto& dst = grads[pi];
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
        }
}

// ---------------------------------------------------------------- checkpoints

// Binary format (little-endian):
//   magic "HSJPCKPT", u32 version=1, u64 architecture hash,
//   u32 block count, then per parameter block:
//     u32 name length, name bytes, u32 rank, u32 dims[rank], f32 data.
// Writes are atomic (temp file + rename).
void save_checkpoint(const Network<float>& net, const std::string& path);
Network<float> load_checkpoint(const std::string& path);

}  // namespace hsjp::model
