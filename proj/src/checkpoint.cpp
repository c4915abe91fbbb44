#include "ipae/checkpoint.hpp"

#include "ipae/errors.hpp"
#include "ipae/io.hpp"

namespace ipae {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "ipae-checkpoint";

template <typename T>
T field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("checkpoint: missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("checkpoint: bad field '") + key + "': " + e.what());
    }
}

}  // namespace

json codec_spec_to_json(const CodecSpec& spec) {
    return json{{"preset", spec.preset},
                {"input_dim", spec.input_dim},
                {"hidden_dim", spec.hidden_dim},
                {"latent_dim", spec.latent_dim},
                {"hidden_activation", std::string(to_string(spec.hidden_act))},
                {"output_activation", std::string(to_string(spec.output_act))}};
}

CodecSpec codec_spec_from_json(const json& j) {
    CodecSpec s;
    s.preset = field<std::string>(j, "preset");
    s.input_dim = field<std::size_t>(j, "input_dim");
    s.hidden_dim = field<std::size_t>(j, "hidden_dim");
    s.latent_dim = field<std::size_t>(j, "latent_dim");
    try {
        s.hidden_act = activation_from_string(field<std::string>(j, "hidden_activation"));
        s.output_act = activation_from_string(field<std::string>(j, "output_activation"));
    } catch (const ContractError& e) {
        throw FormatError(std::string("checkpoint: ") + e.what());
    }
    if (s.input_dim == 0 || s.hidden_dim == 0 || s.latent_dim == 0) {
        throw FormatError("checkpoint: codec dimensions must be positive");
    }
    return s;
}

std::string checkpoint_to_string(const Checkpoint& ckpt) {
    json params = json::object();
    const auto names = CodecParams::tensor_names();
    const auto tensors = ckpt.params.tensors();
    for (std::size_t i = 0; i < names.size(); ++i) {
        const Matrix& m = tensors[i];
        params[names[i]] = json{{"shape", {m.rows(), m.cols()}}, {"data", m.values()}};
    }
    json doc{{"format", kFormat},
             {"version", Checkpoint::kVersion},
             {"codec", codec_spec_to_json(ckpt.params.spec())},
             {"seed", ckpt.seed},
             {"step", ckpt.step},
             {"params", std::move(params)}};
    return doc.dump() + "\n";
}

Checkpoint checkpoint_from_string(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("checkpoint: parse error: ") + e.what());
    }
    if (field<std::string>(doc, "format") != kFormat) throw FormatError("checkpoint: wrong format tag");
    const int version = field<int>(doc, "version");
    if (version != Checkpoint::kVersion) {
        throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    }
    Checkpoint ckpt;
    ckpt.params = CodecParams(codec_spec_from_json(field<json>(doc, "codec")));
    ckpt.seed = field<std::uint64_t>(doc, "seed");
    ckpt.step = field<std::uint64_t>(doc, "step");
    const json params = field<json>(doc, "params");
    const auto names = CodecParams::tensor_names();
    auto tensors = ckpt.params.tensors();
    for (std::size_t i = 0; i < names.size(); ++i) {
        const json entry = field<json>(params, names[i].c_str());
        const auto shape = field<std::vector<std::size_t>>(entry, "shape");
        auto data = field<std::vector<double>>(entry, "data");
        Matrix& dst = tensors[i];
        if (shape.size() != 2 || shape[0] != dst.rows() || shape[1] != dst.cols() ||
            data.size() != dst.size()) {
            throw FormatError("checkpoint: tensor '" + names[i] + "' does not match codec shape " +
                              dst.shape_str());
        }
        dst = Matrix(shape[0], shape[1], std::move(data));
    }
    if (params.size() != names.size()) throw FormatError("checkpoint: unexpected parameter entries");
    return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    write_file_atomic(path, checkpoint_to_string(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return checkpoint_from_string(read_file(path));
}

}  // namespace ipae
