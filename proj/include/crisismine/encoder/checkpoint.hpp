#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "crisismine/encoder/model.hpp"
#include "crisismine/encoder/vocab.hpp"
#include "crisismine/util/error.hpp"

namespace cm::encoder {

// Checkpoint layout (all integers and doubles little-endian):
//   bytes 0..7   magic "CMACT\0\0\1"
//   bytes 8..11  uint32 header length
//   header       UTF-8 JSON: {version, config{...}, vocab[...], tensors[{name,size}...]}
//   payload      raw IEEE-754 doubles, tensor order as listed in the header
inline constexpr char kCheckpointMagic[8] = {'C', 'M', 'A', 'C', 'T', 0, 0, 1};

namespace detail {

inline void write_u32(std::ostream& out, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

inline std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void write_doubles(std::ostream& out, const std::vector<double>& v) {
    for (double d : v) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, 8);
        char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
        out.write(b, 8);
    }
}

inline void read_doubles(std::istream& in, std::vector<double>& v) {
    for (double& d : v) {
        unsigned char b[8];
        in.read(reinterpret_cast<char*>(b), 8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        std::memcpy(&d, &bits, 8);
    }
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const EncoderParams& params,
                            const Vocabulary& vocab) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);

    nlohmann::ordered_json header;
    header["version"] = 1;
    header["config"] = {{"num_layers", params.cfg.num_layers},
                        {"num_heads", params.cfg.num_heads},
                        {"model_dim", params.cfg.model_dim},
                        {"ff_dim", params.cfg.ff_dim},
                        {"max_len", params.cfg.max_len},
                        {"vocab_size", params.cfg.vocab_size},
                        {"num_classes", params.cfg.num_classes},
                        {"dropout", params.cfg.dropout}};
    header["vocab"] = vocab.entries;
    nlohmann::ordered_json tensors = nlohmann::json::array();
    auto& mut = const_cast<EncoderParams&>(params);
    for_each_tensor(mut, [&](const std::string& name, std::vector<double>& v) {
        tensors.push_back({{"name", name}, {"size", v.size()}});
    });
    header["tensors"] = std::move(tensors);
    std::string hs = header.dump();

    out.write(kCheckpointMagic, 8);
    detail::write_u32(out, static_cast<std::uint32_t>(hs.size()));
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for_each_tensor(mut, [&](const std::string&, std::vector<double>& v) {
        detail::write_doubles(out, v);
    });
    if (!out) throw DataError("I/O failure writing checkpoint: " + path);
}

inline std::pair<EncoderParams, Vocabulary> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw DataError("not a model checkpoint (bad magic): " + path);
    std::uint32_t hlen = detail::read_u32(in);
    std::string hs(hlen, '\0');
    in.read(hs.data(), hlen);
    nlohmann::json header = nlohmann::json::parse(hs);
    if (header.at("version").get<int>() != 1)
        throw DataError("unsupported checkpoint version");

    EncoderConfig cfg;
    const auto& jc = header.at("config");
    cfg.num_layers = jc.at("num_layers").get<int>();
    cfg.num_heads = jc.at("num_heads").get<int>();
    cfg.model_dim = jc.at("model_dim").get<int>();
    cfg.ff_dim = jc.at("ff_dim").get<int>();
    cfg.max_len = jc.at("max_len").get<int>();
    cfg.vocab_size = jc.at("vocab_size").get<int>();
    cfg.num_classes = jc.at("num_classes").get<int>();
    cfg.dropout = jc.at("dropout").get<double>();
    cfg.validate();

    Vocabulary vocab;
    vocab.entries = header.at("vocab").get<std::vector<std::string>>();
    vocab.rebuild_index();
    if (static_cast<int>(vocab.entries.size()) != cfg.vocab_size)
        throw DataError("checkpoint vocab size disagrees with config");

    EncoderParams params = zeros_like_params(cfg);
    std::size_t k = 0;
    const auto& tensors = header.at("tensors");
    for_each_tensor(params, [&](const std::string& name, std::vector<double>& v) {
        if (k >= tensors.size() || tensors[k].at("name").get<std::string>() != name ||
            tensors[k].at("size").get<std::size_t>() != v.size())
            throw DataError("checkpoint tensor list disagrees with config shapes");
        detail::read_doubles(in, v);
        ++k;
    });
    if (!in) throw DataError("truncated checkpoint payload: " + path);
    return {std::move(params), std::move(vocab)};
}

}  // namespace cm::encoder
