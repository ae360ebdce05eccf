#include "conekg/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "conekg/errors.hpp"

namespace conekg {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; big-endian hosts need byte swapping");

namespace {

constexpr std::uint32_t kVersion = 1;
constexpr char kMagic[4] = {'C', 'O', 'N', 'E'};

std::array<std::uint64_t, 256> make_crc_table() {
    constexpr std::uint64_t poly = 0x42F0E1EBA9EA3693ULL;
    std::array<std::uint64_t, 256> table{};
    for (int b = 0; b < 256; ++b) {
        std::uint64_t crc = static_cast<std::uint64_t>(b) << 56;
        for (int i = 0; i < 8; ++i)
            crc = (crc & (1ULL << 63)) ? (crc << 1) ^ poly : crc << 1;
        table[static_cast<std::size_t>(b)] = crc;
    }
    return table;
}

// Buffered writer/reader keeping a running CRC over everything passed through.
struct Sink {
    std::vector<char> bytes;
    template <class T>
    void raw(const T& v) {
        static_assert(std::is_trivially_copyable_v<T>);
        const char* p = reinterpret_cast<const char*>(&v);
        bytes.insert(bytes.end(), p, p + sizeof(T));
    }
    void str(const std::string& s) {
        raw(static_cast<std::uint32_t>(s.size()));
        bytes.insert(bytes.end(), s.begin(), s.end());
    }
};

struct Source {
    const std::vector<char>& bytes;
    std::size_t pos = 0;
    template <class T>
    T raw() {
        static_assert(std::is_trivially_copyable_v<T>);
        if (pos + sizeof(T) > bytes.size())
            throw DataError("checkpoint truncated or malformed");
        T v;
        std::memcpy(&v, bytes.data() + pos, sizeof(T));
        pos += sizeof(T);
        return v;
    }
    std::string str() {
        const auto len = raw<std::uint32_t>();
        if (pos + len > bytes.size()) throw DataError("checkpoint truncated or malformed");
        std::string s(bytes.data() + pos, len);
        pos += len;
        return s;
    }
};

}  // namespace

std::uint64_t crc64(const void* data, std::size_t len, std::uint64_t seed) {
    static const std::array<std::uint64_t, 256> table = make_crc_table();
    std::uint64_t crc = seed;
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i)
        crc = table[static_cast<std::size_t>((crc >> 56) ^ p[i])] ^ (crc << 8);
    return crc;
}

void save_checkpoint(const Model& model, const std::string& path) {
    Sink sink;
    sink.bytes.insert(sink.bytes.end(), kMagic, kMagic + 4);
    sink.raw(kVersion);
    const ModelConfig& cfg = model.config();
    sink.raw(static_cast<std::int32_t>(cfg.dim));
    sink.raw(static_cast<std::int32_t>(cfg.subspace_dim));
    sink.raw(cfg.cone_k);
    sink.raw(cfg.angle_weight);
    sink.raw(cfg.adv_temperature);
    sink.raw(static_cast<std::int32_t>(cfg.negatives));
    sink.raw(static_cast<std::uint64_t>(model.entity_count()));
    sink.raw(static_cast<std::uint64_t>(model.base_relation_count()));
    for (const auto& name : model.entity_names()) sink.str(name);
    for (std::size_t r = 0; r < model.base_relation_count(); ++r) {
        sink.str(model.relation_names()[r]);
        sink.raw(static_cast<std::uint8_t>(model.kinds()[r]));
    }
    sink.bytes.insert(sink.bytes.end(), model.masks().begin(), model.masks().end());
    sink.raw(static_cast<std::uint64_t>(model.params().size()));
    const char* p = reinterpret_cast<const char*>(model.params().data());
    sink.bytes.insert(sink.bytes.end(), p, p + model.params().size() * sizeof(double));
    const std::uint64_t crc = crc64(sink.bytes.data(), sink.bytes.size());
    sink.raw(crc);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out.write(sink.bytes.data(), static_cast<std::streamsize>(sink.bytes.size()));
    if (!out) throw DataError("checkpoint write failed: " + path);
}

Model load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read checkpoint: " + path);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 4 + sizeof(std::uint32_t) + sizeof(std::uint64_t))
        throw DataError("checkpoint truncated or malformed");
    const std::size_t body = bytes.size() - sizeof(std::uint64_t);
    std::uint64_t stored_crc;
    std::memcpy(&stored_crc, bytes.data() + body, sizeof(stored_crc));
    if (crc64(bytes.data(), body) != stored_crc)
        throw DataError("checkpoint checksum mismatch (file corrupt or truncated): " + path);

    Source src{bytes};
    char magic[4];
    for (char& c : magic) c = src.raw<char>();
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("not a checkpoint file (bad magic): " + path);
    const auto version = src.raw<std::uint32_t>();
    if (version != kVersion)
        throw DataError("unsupported checkpoint version " + std::to_string(version) +
                        " (expected " + std::to_string(kVersion) + "): " + path);
    ModelConfig cfg;
    cfg.dim = src.raw<std::int32_t>();
    cfg.subspace_dim = src.raw<std::int32_t>();
    cfg.cone_k = src.raw<double>();
    cfg.angle_weight = src.raw<double>();
    cfg.adv_temperature = src.raw<double>();
    cfg.negatives = src.raw<std::int32_t>();
    const auto n_entities = src.raw<std::uint64_t>();
    const auto n_relations = src.raw<std::uint64_t>();
    std::vector<std::string> entity_names;
    entity_names.reserve(n_entities);
    for (std::uint64_t i = 0; i < n_entities; ++i) entity_names.push_back(src.str());
    std::vector<std::string> relation_names;
    std::vector<RelationKind> kinds;
    relation_names.reserve(n_relations);
    kinds.reserve(n_relations);
    for (std::uint64_t i = 0; i < n_relations; ++i) {
        relation_names.push_back(src.str());
        const auto kind = src.raw<std::uint8_t>();
        if (kind > 2) throw DataError("checkpoint has invalid relation kind byte");
        kinds.push_back(static_cast<RelationKind>(kind));
    }
    Model model(cfg, std::move(entity_names), std::move(relation_names), std::move(kinds));
    for (auto& m : model.masks()) m = static_cast<std::uint8_t>(src.raw<std::uint8_t>());
    const auto n_params = src.raw<std::uint64_t>();
    if (n_params != model.param_count())
        throw DataError("checkpoint parameter count mismatch");
    if (src.pos + n_params * sizeof(double) > bytes.size())
        throw DataError("checkpoint truncated or malformed");
    std::memcpy(model.params().data(), bytes.data() + src.pos, n_params * sizeof(double));
    return model;
}

}  // namespace conekg
