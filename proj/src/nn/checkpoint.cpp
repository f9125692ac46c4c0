#include "vip/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "vip/common/error.hpp"
#include "vip/common/rng.hpp"

namespace vip::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint blobs are little-endian");

namespace {

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

}  // namespace

nlohmann::json spec_to_json(const NetSpec& spec) {
    return {{"kind", to_string(spec.kind)},   {"input_dim", spec.input_dim}, {"hidden", spec.hidden},
            {"layers", spec.layers},          {"classes", spec.classes},     {"seq_len", spec.seq_len}};
}

NetSpec spec_from_json(const nlohmann::json& j) {
    NetSpec s;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "lstm") {
        s.kind = NetKind::Lstm;
    } else if (kind == "ffnn") {
        s.kind = NetKind::Ffnn;
    } else {
        throw Error(ErrorCode::CorruptCheckpoint, "unknown network kind '" + kind + "'");
    }
    s.input_dim = j.at("input_dim").get<std::size_t>();
    s.hidden = j.at("hidden").get<std::size_t>();
    s.layers = j.at("layers").get<std::size_t>();
    s.classes = j.at("classes").get<std::size_t>();
    s.seq_len = j.at("seq_len").get<std::size_t>();
    return s;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir) {
    if (!ckpt.net) throw Error(ErrorCode::Config, "checkpoint without network");
    std::filesystem::create_directories(dir);
    const auto& p = ckpt.net->params();
    const auto bytes = std::as_bytes(std::span(p.data(), static_cast<std::size_t>(p.size())));

    nlohmann::json h;
    h["format"] = "vip-checkpoint-v1";
    h["model"] = ckpt.model_name;
    h["spec"] = spec_to_json(ckpt.net->spec());
    h["param_count"] = p.size();
    h["param_order"] = ckpt.net->spec().kind == NetKind::Lstm
                           ? "per layer: W(4N x in, col-major), U(4N x N), b(4N), gates f,i,c~,o; head W(K x N), b(K)"
                           : "per layer: W(H x in, col-major), b(H); head W(K x H), b(K)";
    h["init"] = "glorot-uniform sqrt(6/(fan_in+fan_out)); biases 0; lstm forget bias 1";
    h["seed"] = ckpt.seed;
    h["train_config_hash"] = ckpt.train_config_hash;
    h["feature_mean"] = ckpt.feature_mean;
    h["feature_std"] = ckpt.feature_std;
    h["checksum_fnv1a64"] = hex64(fnv1a64(bytes));
    h["extra"] = ckpt.extra;

    std::ofstream hf(dir / "header.json");
    hf << h.dump(2) << '\n';
    std::ofstream bf(dir / "params.bin", std::ios::binary);
    bf.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!hf || !bf) throw Error(ErrorCode::Io, "failed writing checkpoint to " + dir.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& dir, std::size_t expected_input_dim) {
    std::ifstream hf(dir / "header.json");
    if (!hf) throw Error(ErrorCode::Io, "missing " + (dir / "header.json").string());
    nlohmann::json h;
    try {
        hf >> h;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::CorruptCheckpoint, e.what());
    }
    if (h.value("format", "") != "vip-checkpoint-v1") throw Error(ErrorCode::CorruptCheckpoint, "unknown format");

    Checkpoint ck;
    NetSpec spec;
    try {
        spec = spec_from_json(h.at("spec"));
        ck.model_name = h.at("model").get<std::string>();
        ck.seed = h.at("seed").get<std::uint64_t>();
        ck.train_config_hash = h.at("train_config_hash").get<std::string>();
        ck.feature_mean = h.at("feature_mean").get<std::vector<double>>();
        ck.feature_std = h.at("feature_std").get<std::vector<double>>();
        ck.extra = h.value("extra", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::CorruptCheckpoint, e.what());
    }
    if (expected_input_dim != 0 && spec.input_dim != expected_input_dim) {
        throw Error(ErrorCode::DimensionMismatch, "checkpoint expects " + std::to_string(spec.input_dim) +
                                                      " features, data has " + std::to_string(expected_input_dim));
    }
    ck.net = make_classifier(spec);
    if (h.at("param_count").get<std::size_t>() != ck.net->param_count() ||
        ck.feature_mean.size() != spec.input_dim || ck.feature_std.size() != spec.input_dim) {
        throw Error(ErrorCode::DimensionMismatch, "header dimensions are inconsistent");
    }

    std::ifstream bf(dir / "params.bin", std::ios::binary | std::ios::ate);
    if (!bf) throw Error(ErrorCode::Io, "missing " + (dir / "params.bin").string());
    const auto size = static_cast<std::size_t>(bf.tellg());
    auto& p = ck.net->params();
    if (size != static_cast<std::size_t>(p.size()) * sizeof(double)) {
        throw Error(ErrorCode::CorruptCheckpoint, "parameter blob has the wrong size");
    }
    bf.seekg(0);
    bf.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(size));
    const auto bytes = std::as_bytes(std::span(p.data(), static_cast<std::size_t>(p.size())));
    if (hex64(fnv1a64(bytes)) != h.at("checksum_fnv1a64").get<std::string>()) {
        throw Error(ErrorCode::CorruptCheckpoint, "checksum mismatch");
    }
    return ck;
}

}  // namespace vip::nn
