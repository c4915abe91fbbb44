#include "ipae/codec.hpp"

#include <algorithm>
#include <cmath>

#include "ipae/errors.hpp"

namespace ipae {

CodecSpec CodecSpec::toy() { return {}; }

CodecSpec CodecSpec::mnist() {
    CodecSpec s;
    s.preset = "mnist";
    s.input_dim = 784;
    s.hidden_dim = 1024;
    s.latent_dim = 8;
    s.hidden_act = Activation::Sigmoid;
    s.output_act = Activation::Sigmoid;
    return s;
}

CodecSpec CodecSpec::from_preset(std::string_view name) {
    if (name == "toy") return toy();
    if (name == "mnist") return mnist();
    throw ContractError("unknown codec preset '" + std::string(name) + "'");
}

void GaussianCode::validate() const {
    require_same_shape(mu, sigma, "GaussianCode mu/sigma");
    if (!mu.all_finite()) throw NumericError("GaussianCode: non-finite mu");
    for (double s : sigma.flat()) {
        if (!std::isfinite(s) || s < kSigmaFloor * (1.0 - 1e-12)) {
            throw NumericError("GaussianCode: sigma " + std::to_string(s) + " below floor");
        }
    }
}

NoiseBlock NoiseBlock::draw(Rng& rng, std::size_t batch, std::size_t k, std::size_t dim) {
    NoiseBlock nb{k, Matrix(batch * k, dim)};
    for (double& e : nb.eps.flat()) e = rng.normal();
    return nb;
}

NoiseBlock NoiseBlock::zeros(std::size_t batch, std::size_t k, std::size_t dim) {
    return NoiseBlock{k, Matrix(batch * k, dim)};
}

CodecParams::CodecParams(const CodecSpec& spec)
    : enc_hidden(spec.input_dim, spec.hidden_dim, spec.hidden_act),
      enc_mu(spec.hidden_dim, spec.latent_dim, Activation::Identity),
      enc_logvar(spec.hidden_dim, spec.latent_dim, Activation::Identity),
      dec_hidden(spec.latent_dim, spec.hidden_dim, spec.hidden_act),
      dec_out(spec.hidden_dim, spec.input_dim, spec.output_act),
      spec_(spec) {}

std::array<DenseLayer*, CodecParams::kLayerCount> CodecParams::layers() noexcept {
    return {&enc_hidden, &enc_mu, &enc_logvar, &dec_hidden, &dec_out};
}

std::array<const DenseLayer*, CodecParams::kLayerCount> CodecParams::layers() const noexcept {
    return {&enc_hidden, &enc_mu, &enc_logvar, &dec_hidden, &dec_out};
}

void CodecParams::init_glorot(Rng& rng) {
    for (DenseLayer* l : layers()) l->init_glorot(rng);
}

void CodecParams::zero() {
    for (DenseLayer* l : layers()) {
        l->W.fill(0.0);
        l->b.fill(0.0);
    }
}

ParamRefs CodecParams::tensors() {
    ParamRefs out;
    for (DenseLayer* l : layers()) {
        out.emplace_back(l->W);
        out.emplace_back(l->b);
    }
    return out;
}

ConstParamRefs CodecParams::tensors() const {
    ConstParamRefs out;
    for (const DenseLayer* l : layers()) {
        out.emplace_back(l->W);
        out.emplace_back(l->b);
    }
    return out;
}

std::vector<std::string> CodecParams::tensor_names() {
    std::vector<std::string> names;
    for (std::string_view n : kLayerNames) {
        names.push_back(std::string(n) + ".W");
        names.push_back(std::string(n) + ".b");
    }
    return names;
}

std::vector<Matrix> CodecParams::zeros_like() const {
    std::vector<Matrix> out;
    for (const Matrix& t : tensors()) out.emplace_back(t.rows(), t.cols());
    return out;
}

bool operator==(const CodecParams& a, const CodecParams& b) {
    if (!(a.spec_ == b.spec_)) return false;
    const auto ta = a.tensors();
    const auto tb = b.tensors();
    for (std::size_t i = 0; i < ta.size(); ++i) {
        if (!(ta[i].get() == tb[i].get())) return false;
    }
    return true;
}

namespace {

void require_finite(const Matrix& m, const char* layer) {
    if (!m.all_finite()) throw NumericError(std::string("non-finite activations in layer ") + layer);
}

}  // namespace

EncodeCache encode_cached(const CodecParams& params, const Matrix& x) {
    if (x.cols() != params.spec().input_dim) {
        throw ShapeError("encode: input has " + std::to_string(x.cols()) + " columns, codec expects " +
                         std::to_string(params.spec().input_dim));
    }
    EncodeCache c;
    c.hidden = dense_forward(params.enc_hidden, x);
    require_finite(c.hidden, "enc.h");
    c.code.mu = dense_forward(params.enc_mu, c.hidden);
    require_finite(c.code.mu, "enc.mu");
    c.logvar = dense_forward(params.enc_logvar, c.hidden);
    require_finite(c.logvar, "enc.logvar");
    c.code.sigma = Matrix(c.logvar.rows(), c.logvar.cols());
    const double* lv = c.logvar.data();
    double* s = c.code.sigma.data();
    for (std::size_t i = 0; i < c.logvar.size(); ++i) {
        s[i] = std::clamp(std::exp(0.5 * lv[i]), kSigmaFloor, kSigmaCeil);
    }
    return c;
}

GaussianCode encode(const CodecParams& params, const Matrix& x) {
    return std::move(encode_cached(params, x).code);
}

Matrix reparameterize(const GaussianCode& code, const NoiseBlock& noise) {
    require_same_shape(code.mu, code.sigma, "reparameterize mu/sigma");
    const std::size_t k = noise.samples_per_row;
    if (k == 0 || noise.eps.cols() != code.dim() || noise.eps.rows() != code.batch() * k) {
        throw ShapeError("reparameterize: noise " + noise.eps.shape_str() + " with K=" +
                         std::to_string(k) + " vs code " + code.mu.shape_str());
    }
    const std::size_t d = code.dim();
    Matrix z(noise.eps.rows(), d);
    for (std::size_t i = 0; i < code.batch(); ++i) {
        const double* mu = code.mu.data() + i * d;
        const double* sg = code.sigma.data() + i * d;
        for (std::size_t s = 0; s < k; ++s) {
            const double* e = noise.eps.data() + (i * k + s) * d;
            double* out = z.data() + (i * k + s) * d;
            for (std::size_t c = 0; c < d; ++c) out[c] = mu[c] + sg[c] * e[c];
        }
    }
    return z;
}

DecodeCache decode_cached(const CodecParams& params, const Matrix& z) {
    if (z.cols() != params.spec().latent_dim) {
        throw ShapeError("decode: code has " + std::to_string(z.cols()) + " columns, codec expects " +
                         std::to_string(params.spec().latent_dim));
    }
    DecodeCache c;
    c.hidden = dense_forward(params.dec_hidden, z);
    require_finite(c.hidden, "dec.h");
    c.output = dense_forward(params.dec_out, c.hidden);
    require_finite(c.output, "dec.out");
    return c;
}

Matrix decode(const CodecParams& params, const Matrix& z) {
    return std::move(decode_cached(params, z).output);
}

}  // namespace ipae
