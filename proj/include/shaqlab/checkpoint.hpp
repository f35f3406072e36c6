#pragma once

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include <json.hpp>

#include "shaqlab/model.hpp"

namespace shaqlab {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format stores raw little-endian values");

using json = nlohmann::json;

inline const char* to_string(CellKind c) { return c == CellKind::Lstm ? "lstm" : "qrnn"; }
inline const char* to_string(AttnChoice a) {
    switch (a) {
        case AttnChoice::Gated: return "gated";
        case AttnChoice::Ungated: return "ungated";
        case AttnChoice::Mean: return "mean";
    }
    return "?";
}
inline const char* to_string(FeedForwardKind f) {
    switch (f) {
        case FeedForwardKind::Boom: return "boom";
        case FeedForwardKind::Fc: return "fc";
        case FeedForwardKind::None: return "none";
    }
    return "?";
}
inline const char* to_string(BlockWiring w) {
    switch (w) {
        case BlockWiring::Auto: return "auto";
        case BlockWiring::ShaRnn: return "sharnn";
        case BlockWiring::Shaq: return "shaq";
    }
    return "?";
}

inline CellKind cell_from_string(const std::string& s) {
    if (s == "lstm") return CellKind::Lstm;
    if (s == "qrnn") return CellKind::Qrnn;
    throw std::invalid_argument("unknown cell kind: " + s);
}
inline AttnChoice attn_from_string(const std::string& s) {
    if (s == "gated") return AttnChoice::Gated;
    if (s == "ungated") return AttnChoice::Ungated;
    if (s == "mean") return AttnChoice::Mean;
    throw std::invalid_argument("unknown attention variant: " + s);
}
inline FeedForwardKind ff_from_string(const std::string& s) {
    if (s == "boom") return FeedForwardKind::Boom;
    if (s == "fc") return FeedForwardKind::Fc;
    if (s == "none") return FeedForwardKind::None;
    throw std::invalid_argument("unknown feed-forward kind: " + s);
}
inline BlockWiring wiring_from_string(const std::string& s) {
    if (s == "auto") return BlockWiring::Auto;
    if (s == "sharnn") return BlockWiring::ShaRnn;
    if (s == "shaq") return BlockWiring::Shaq;
    throw std::invalid_argument("unknown wiring: " + s);
}

inline json config_to_json(const ModelConfig& c) {
    return json{{"vocab", c.vocab},
                {"d_model", c.d_model},
                {"n_blocks", c.n_blocks},
                {"cell", to_string(c.cell)},
                {"qrnn_window", c.qrnn_window},
                {"attn_layers", c.attn_layers},
                {"attn", to_string(c.attn)},
                {"ff", to_string(c.ff)},
                {"boom_inner", c.boom_inner},
                {"drop_cell", c.drop_cell},
                {"drop_attn_w", c.drop_attn_w},
                {"drop_attn_out", c.drop_attn_out},
                {"drop_ff", c.drop_ff},
                {"window", c.window},
                {"cache_cap", c.cache_cap},
                {"tie_embedding", c.tie_embedding},
                {"attn_head_ln", c.attn_head_ln},
                {"wiring", to_string(c.wiring)}};
}

inline ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.vocab = j.at("vocab").get<int64_t>();
    c.d_model = j.at("d_model").get<int64_t>();
    c.n_blocks = j.at("n_blocks").get<int64_t>();
    c.cell = cell_from_string(j.at("cell").get<std::string>());
    c.qrnn_window = j.at("qrnn_window").get<int64_t>();
    c.attn_layers = j.at("attn_layers").get<std::vector<int64_t>>();
    c.attn = attn_from_string(j.at("attn").get<std::string>());
    c.ff = ff_from_string(j.at("ff").get<std::string>());
    c.boom_inner = j.at("boom_inner").get<int64_t>();
    c.drop_cell = j.at("drop_cell").get<double>();
    c.drop_attn_w = j.at("drop_attn_w").get<double>();
    c.drop_attn_out = j.at("drop_attn_out").get<double>();
    c.drop_ff = j.at("drop_ff").get<double>();
    c.window = j.at("window").get<int64_t>();
    c.cache_cap = j.at("cache_cap").get<int64_t>();
    c.tie_embedding = j.at("tie_embedding").get<bool>();
    c.attn_head_ln = j.at("attn_head_ln").get<bool>();
    c.wiring = wiring_from_string(j.at("wiring").get<std::string>());
    return c;
}

// ---------------------------------------------------------------------------
// Flat binary archive: meta JSON + named tensors (raw little-endian values)
// ---------------------------------------------------------------------------

constexpr uint32_t kCkptMagic = 0x53514C42;  // "BLQS"
constexpr uint32_t kCkptVersion = 1;

namespace detail_io {

inline void write_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
inline void write_u64(std::ostream& os, uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
inline uint32_t read_u32(std::istream& is) {
    uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
inline uint64_t read_u64(std::istream& is) {
    uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

template <typename T>
void write_tensor(std::ostream& os, const std::string& name, const Tensor<T>& t) {
    const uint16_t nl = static_cast<uint16_t>(name.size());
    os.write(reinterpret_cast<const char*>(&nl), 2);
    os.write(name.data(), nl);
    const uint8_t dtype = sizeof(T) == 4 ? 0 : 1;
    os.write(reinterpret_cast<const char*>(&dtype), 1);
    const uint8_t nd = static_cast<uint8_t>(t.ndim());
    os.write(reinterpret_cast<const char*>(&nd), 1);
    for (int64_t i = 0; i < t.ndim(); ++i) {
        const int64_t d = t.dim(i);
        os.write(reinterpret_cast<const char*>(&d), 8);
    }
    os.write(reinterpret_cast<const char*>(t.data()), sizeof(T) * size_t(t.numel()));
}

}  // namespace detail_io

struct Checkpoint {
    json meta;
    std::map<std::string, Tensor<float>> f32;
    std::map<std::string, Tensor<double>> f64;

    template <typename T>
    Tensor<T> get(const std::string& name) const {
        if (auto it = f32.find(name); it != f32.end()) {
            if constexpr (sizeof(T) == 4) return it->second;
            else return it->second.template cast<T>();
        }
        if (auto it = f64.find(name); it != f64.end()) {
            if constexpr (sizeof(T) == 8) return it->second;
            else return it->second.template cast<T>();
        }
        throw std::out_of_range("checkpoint: no tensor named " + name);
    }

    bool has(const std::string& name) const { return f32.count(name) || f64.count(name); }
};

template <typename T>
void write_checkpoint(const std::string& path, const json& meta,
                      const std::vector<std::pair<std::string, Tensor<T>>>& tensors,
                      const std::vector<std::pair<std::string, Tensor<double>>>& aux = {}) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("write_checkpoint: cannot open " + path);
    detail_io::write_u32(os, kCkptMagic);
    detail_io::write_u32(os, kCkptVersion);
    json m = meta;
    m["format_version"] = kCkptVersion;
    const std::string mj = m.dump();
    detail_io::write_u64(os, mj.size());
    os.write(mj.data(), static_cast<std::streamsize>(mj.size()));
    detail_io::write_u32(os, static_cast<uint32_t>(tensors.size() + aux.size()));
    for (const auto& [name, t] : tensors) detail_io::write_tensor(os, name, t);
    for (const auto& [name, t] : aux) detail_io::write_tensor(os, name, t);
    if (!os) throw std::runtime_error("write_checkpoint: failed writing " + path);
}

inline Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_checkpoint: cannot open " + path);
    if (detail_io::read_u32(is) != kCkptMagic) throw std::runtime_error("read_checkpoint: bad magic in " + path);
    const uint32_t version = detail_io::read_u32(is);
    if (version != kCkptVersion) {
        throw std::runtime_error("read_checkpoint: unsupported version " + std::to_string(version));
    }
    const uint64_t mlen = detail_io::read_u64(is);
    std::string mj(mlen, '\0');
    is.read(mj.data(), static_cast<std::streamsize>(mlen));
    Checkpoint ck;
    ck.meta = json::parse(mj);
    const uint32_t n = detail_io::read_u32(is);
    for (uint32_t i = 0; i < n; ++i) {
        uint16_t nl = 0;
        is.read(reinterpret_cast<char*>(&nl), 2);
        std::string name(nl, '\0');
        is.read(name.data(), nl);
        uint8_t dtype = 0, nd = 0;
        is.read(reinterpret_cast<char*>(&dtype), 1);
        is.read(reinterpret_cast<char*>(&nd), 1);
        Shape shape(nd);
        for (uint8_t d = 0; d < nd; ++d) {
            int64_t e = 0;
            is.read(reinterpret_cast<char*>(&e), 8);
            shape[d] = e;
        }
        if (dtype == 0) {
            Tensor<float> t(shape);
            is.read(reinterpret_cast<char*>(t.data()), sizeof(float) * size_t(t.numel()));
            ck.f32.emplace(std::move(name), std::move(t));
        } else {
            Tensor<double> t(shape);
            is.read(reinterpret_cast<char*>(t.data()), sizeof(double) * size_t(t.numel()));
            ck.f64.emplace(std::move(name), std::move(t));
        }
        if (!is) throw std::runtime_error("read_checkpoint: truncated file " + path);
    }
    return ck;
}

// Loads parameter tensors by name into an existing model; every registered
// parameter must be present with a matching shape.
template <typename T>
void load_model_params(Model<T>& model, const Checkpoint& ck) {
    for (auto& p : model.parameters()) {
        Tensor<T> t = ck.template get<T>(p.name);
        if (t.shape() != p.var->value.shape()) {
            throw std::runtime_error("checkpoint: shape mismatch for " + p.name + ": " +
                                     shape_str(t.shape()) + " vs " + shape_str(p.var->value.shape()));
        }
        p.var->value = std::move(t);
        p.var->grad = Tensor<T>{};
    }
}

}  // namespace shaqlab
