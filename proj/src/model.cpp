#include "model.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace hsjp::model {

std::vector<LayerSpec> layer_chain(int in_channels, int head_channels) {
    using K = LayerSpec::Kind;
    std::vector<LayerSpec> chain;
    chain.push_back({K::Conv, in_channels, kStem1Out, 7, 2, 3});
    chain.push_back({K::Relu, kStem1Out, kStem1Out, 0, 1, 0});
    chain.push_back({K::Conv, kStem1Out, kWidth, 3, 2, 1});
    chain.push_back({K::Relu, kWidth, kWidth, 0, 1, 0});
    for (int b = 0; b < kNumBlocks; ++b) chain.push_back({K::Residual, kWidth, kWidth, 3, 1, 1});
    chain.push_back({K::HeadConv, kWidth, head_channels, 1, 1, 0});
    return chain;
}

std::string chain_string(const std::vector<LayerSpec>& chain) {
    std::string s;
    for (const auto& l : chain) {
        if (!s.empty()) s += "|";
        const char* kind = "?";
        switch (l.kind) {
            case LayerSpec::Kind::Conv: kind = "conv"; break;
            case LayerSpec::Kind::Relu: kind = "relu"; break;
            case LayerSpec::Kind::Residual: kind = "res"; break;
            case LayerSpec::Kind::HeadConv: kind = "head"; break;
        }
        s += kind;
        if (l.kind != LayerSpec::Kind::Relu) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "(%d,%d,k%d,s%d,p%d)", l.in_c, l.out_c, l.k,
                          l.stride, l.pad);
            s += buf;
        }
    }
    return s;
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t architecture_hash(int in_channels, int head_channels) {
    return fnv1a64(chain_string(layer_chain(in_channels, head_channels)));
}

const char* freeze_group_name(int group) {
    static const char* names[kFreezeGroups] = {"stem1", "stem2", "block1", "block2", "block3",
                                               "head"};
    if (group < 0 || group >= kFreezeGroups) throw ArgError("freeze_group_name: bad group");
    return names[group];
}

namespace {

constexpr char kMagic[8] = {'H', 'S', 'J', 'P', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

struct ByteReader {
    const std::string& bytes;
    std::size_t pos = 0;
    std::string context = "header";

    [[noreturn]] void fail(const std::string& why) const {
        throw ParseError("checkpoint: " + why + " (at byte " + std::to_string(pos) + ", " +
                         context + ")");
    }
    void need(std::size_t n) const {
        if (pos + n > bytes.size()) fail("truncated file");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    float f32() {
        const std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s = bytes.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace

void save_checkpoint(const Network<float>& net, const std::string& path) {
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_u32(out, kVersion);
    put_u64(out, architecture_hash(net.in_channels, net.head_channels));
    put_u32(out, static_cast<std::uint32_t>(net.params.size()));
    for (const auto& p : net.params) {
        put_u32(out, static_cast<std::uint32_t>(p.name.size()));
        out += p.name;
        put_u32(out, static_cast<std::uint32_t>(p.shape.size()));
        for (int d : p.shape) put_u32(out, static_cast<std::uint32_t>(d));
        for (float v : p.v) put_f32(out, v);
    }

    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open for writing: " + tmp);
        f.write(out.data(), static_cast<std::streamsize>(out.size()));
        if (!f) throw IoError("short write: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("rename " + tmp + " -> " + path + ": " + ec.message());
}

Network<float> load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open checkpoint: " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    ByteReader r{bytes};
    r.need(sizeof(kMagic));
    if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
        r.fail("bad magic, not a checkpoint file");
    r.pos = sizeof(kMagic);
    const std::uint32_t version = r.u32();
    if (version != kVersion)
        r.fail("unsupported version " + std::to_string(version) + ", expected " +
               std::to_string(kVersion));
    const std::uint64_t stored_hash = r.u64();
    const std::uint32_t n_blocks = r.u32();
    if (n_blocks != kNumParams)
        r.fail("expected " + std::to_string(kNumParams) + " parameter blocks, found " +
               std::to_string(n_blocks));

    std::vector<Param<float>> blocks;
    blocks.reserve(n_blocks);
    for (std::uint32_t b = 0; b < n_blocks; ++b) {
        r.context = "block " + std::to_string(b);
        const std::uint32_t name_len = r.u32();
        if (name_len == 0 || name_len > 256) r.fail("implausible name length");
        Param<float> p;
        p.name = r.str(name_len);
        r.context = "block '" + p.name + "'";
        const std::uint32_t rank = r.u32();
        if (rank == 0 || rank > 4) r.fail("implausible shape rank");
        std::size_t count = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            const std::uint32_t dim = r.u32();
            if (dim == 0 || dim > (1u << 20)) r.fail("implausible dimension");
            p.shape.push_back(static_cast<int>(dim));
            count *= dim;
        }
        r.need(count * 4);
        p.v.resize(count);
        for (std::size_t i = 0; i < count; ++i) p.v[i] = r.f32();
        blocks.push_back(std::move(p));
    }
    if (r.pos != bytes.size()) r.fail("trailing bytes after last block");

    // Reconstruct and validate against the fixed architecture.
    if (blocks[0].shape.size() != 4)
        throw ParseError("checkpoint: block '" + blocks[0].name + "' has wrong rank");
    const int in_channels = blocks[0].shape[1];
    const int head_channels = blocks[kNumParams - 2].shape[0];

    Network<float> net;
    net.in_channels = in_channels;
    net.head_channels = head_channels;
    for (const auto& [name, shape] : detail::conv_table(in_channels, head_channels)) {
        net.params.push_back(detail::make_conv_param<float>(name, shape));
        net.params.push_back(detail::make_bias_param<float>(name, shape.out_c));
    }
    for (int i = 0; i < kNumParams; ++i) {
        const auto& got = blocks[static_cast<std::size_t>(i)];
        auto& want = net.params[static_cast<std::size_t>(i)];
        if (got.name != want.name)
            throw ParseError("checkpoint: block " + std::to_string(i) + " is '" + got.name +
                             "', expected '" + want.name + "'");
        if (got.shape != want.shape || got.v.size() != want.v.size())
            throw ShapeError("checkpoint: shape mismatch in layer '" + got.name + "'");
        want.v = got.v;
    }
    const std::uint64_t computed = architecture_hash(in_channels, head_channels);
    if (stored_hash != computed)
        throw ParseError("checkpoint: architecture hash mismatch (stored " +
                         std::to_string(stored_hash) + ", computed " + std::to_string(computed) +
                         ")");
    return net;
}

}  // namespace hsjp::model
