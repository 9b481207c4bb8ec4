#include "mdlcl/vae.h"

#include <cmath>
#include <numbers>
#include <string>

namespace mdlcl {

namespace {
constexpr std::string_view kVaeMagic = "MDLVAE01";

void push_dense(std::vector<Shape>& shapes, std::size_t in, std::size_t out) {
  shapes.push_back({in, out});
  shapes.push_back({out});
}

ad::Var dense(ad::Var x, ad::Var w, ad::Var b) { return ad::add_rowvector(ad::matmul(x, w), b); }
}  // namespace

VaeArchitecture VaeArchitecture::tiny(std::size_t input_dim) { return {input_dim, {32}, 4}; }

VaeArchitecture VaeArchitecture::mnist() { return {784, {200, 200}, 20}; }

std::vector<Shape> VaeArchitecture::encoder_shapes() const {
  std::vector<Shape> shapes;
  std::size_t in = input_dim;
  for (std::size_t h : hidden) {
    push_dense(shapes, in, h);
    in = h;
  }
  push_dense(shapes, in, latent_dim);
  push_dense(shapes, in, latent_dim);
  return shapes;
}

std::vector<Shape> VaeArchitecture::decoder_shapes() const {
  std::vector<Shape> shapes;
  std::size_t in = latent_dim;
  for (auto it = hidden.rbegin(); it != hidden.rend(); ++it) {
    push_dense(shapes, in, *it);
    in = *it;
  }
  push_dense(shapes, in, input_dim);
  return shapes;
}

std::size_t VaeArchitecture::decoder_size() const {
  std::size_t n = 0;
  for (const Shape& s : decoder_shapes()) n += shape_size(s);
  return n;
}

namespace {
std::vector<Tensor> init_layers(const std::vector<Shape>& shapes, Rng* rng) {
  std::vector<Tensor> out;
  for (const Shape& s : shapes) {
    Tensor t(s, 0.0);
    if (rng && s.size() == 2) {
      const double limit = std::sqrt(6.0 / static_cast<double>(s[0] + s[1]));
      for (double& v : t.data()) v = (2.0 * rng->uniform() - 1.0) * limit;
    }
    out.push_back(std::move(t));
  }
  return out;
}
}  // namespace

VaeParams VaeParams::initialize(const VaeArchitecture& arch, Rng& rng) {
  return {arch, init_layers(arch.encoder_shapes(), &rng), init_layers(arch.decoder_shapes(), &rng)};
}

VaeParams VaeParams::zeros(const VaeArchitecture& arch) {
  return {arch, init_layers(arch.encoder_shapes(), nullptr), init_layers(arch.decoder_shapes(), nullptr)};
}

std::vector<double> VaeParams::flat_decoder() const {
  std::vector<double> flat;
  for (const Tensor& t : decoder) flat.insert(flat.end(), t.data().begin(), t.data().end());
  return flat;
}

void VaeParams::set_flat_decoder(std::span<const double> flat) {
  const auto shapes = arch.decoder_shapes();
  if (flat.size() != arch.decoder_size())
    throw ShapeError("decoder vector has " + std::to_string(flat.size()) + " entries, architecture needs " +
                     std::to_string(arch.decoder_size()));
  decoder.clear();
  std::size_t off = 0;
  for (const Shape& s : shapes) {
    const std::size_t n = shape_size(s);
    decoder.emplace_back(s, std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(off),
                                                flat.begin() + static_cast<std::ptrdiff_t>(off + n)));
    off += n;
  }
}

void VaeParams::validate() const {
  auto check = [](const std::vector<Tensor>& ts, const std::vector<Shape>& shapes, const char* who) {
    if (ts.size() != shapes.size()) throw ShapeError(std::string(who) + ": wrong number of tensors");
    for (std::size_t i = 0; i < ts.size(); ++i)
      if (ts[i].shape() != shapes[i])
        throw ShapeError(std::string(who) + " tensor " + std::to_string(i) + " has shape " +
                         shape_string(ts[i].shape()) + ", expected " + shape_string(shapes[i]));
  };
  check(encoder, arch.encoder_shapes(), "encoder");
  check(decoder, arch.decoder_shapes(), "decoder");
}

void check_pixels(const Tensor& x, std::size_t input_dim) {
  if (x.rank() != 2 || x.cols() != input_dim)
    throw ShapeError("expected examples of shape [n," + std::to_string(input_dim) + "], got " +
                     shape_string(x.shape()));
  for (double v : x.data())
    if (!(v >= 0.0 && v <= 1.0)) throw std::domain_error("pixel value " + std::to_string(v) + " outside [0,1]");
}

std::vector<ad::Var> leaves(ad::Tape& tape, const std::vector<Tensor>& tensors) {
  std::vector<ad::Var> out;
  for (const Tensor& t : tensors) out.push_back(tape.leaf(t));
  return out;
}

std::vector<ad::Var> constants(ad::Tape& tape, const std::vector<Tensor>& tensors) {
  std::vector<ad::Var> out;
  for (const Tensor& t : tensors) out.push_back(tape.constant(t));
  return out;
}

std::vector<ad::Var> split_decoder(ad::Var flat, const VaeArchitecture& arch) {
  std::vector<ad::Var> out;
  std::size_t off = 0;
  for (const Shape& s : arch.decoder_shapes()) {
    out.push_back(ad::slice(flat, off, s));
    off += shape_size(s);
  }
  if (off != flat.value().size()) throw ShapeError("decoder vector does not match the architecture");
  return out;
}

LatentStats encode_latent(ad::Var x, std::span<const ad::Var> enc, const VaeArchitecture& arch) {
  ad::Var h = x;
  std::size_t i = 0;
  for (std::size_t layer = 0; layer < arch.hidden.size(); ++layer, i += 2) h = ad::tanh(dense(h, enc[i], enc[i + 1]));
  return {dense(h, enc[i], enc[i + 1]), dense(h, enc[i + 2], enc[i + 3])};
}

ad::Var decode_logits(ad::Var z, std::span<const ad::Var> dec, const VaeArchitecture& arch) {
  ad::Var h = z;
  std::size_t i = 0;
  for (std::size_t layer = 0; layer < arch.hidden.size(); ++layer, i += 2) h = ad::tanh(dense(h, dec[i], dec[i + 1]));
  return dense(h, dec[i], dec[i + 1]);
}

ad::Var latent_kl_rows(const LatentStats& s) {
  using namespace ad;
  const double latent = static_cast<double>(s.mean.shape()[1]);
  Var terms = scale(exp(scale(s.log_std, 2.0)) + square(s.mean), 0.5) - s.log_std;
  return add_scalar(sum_rows(terms), -0.5 * latent);
}

ad::Var elbo_rows(ad::Var x, std::span<const ad::Var> enc, std::span<const ad::Var> dec, const Tensor& z_noise,
                  const VaeArchitecture& arch) {
  using namespace ad;
  LatentStats stats = encode_latent(x, enc, arch);
  if (z_noise.shape() != stats.mean.shape())
    throw ShapeError("latent noise shape " + shape_string(z_noise.shape()) + " vs latent " +
                     shape_string(stats.mean.shape()));
  Var eps = x.tape().constant(z_noise);
  Var z = stats.mean + exp(stats.log_std) * eps;
  Var logits = decode_logits(z, dec, arch);
  // x log sigmoid(l) + (1-x) log(1 - sigmoid(l)) = x l - softplus(l)
  Var recon = sum_rows(x * logits - softplus(logits));
  return recon - latent_kl_rows(stats);
}

std::vector<double> elbo(const Tensor& x, const VaeParams& params, const Tensor& z_noise) {
  check_pixels(x, params.arch.input_dim);
  ad::Tape tape;
  auto enc = constants(tape, params.encoder);
  auto dec = constants(tape, params.decoder);
  ad::Var rows = elbo_rows(tape.constant(x), enc, dec, z_noise, params.arch);
  return rows.value().values();
}

std::vector<Tensor> latent_noise(std::size_t n, std::size_t latent_dim, std::size_t samples, Rng& rng) {
  std::vector<Tensor> out;
  out.reserve(samples);
  for (std::size_t s = 0; s < samples; ++s) out.push_back(rng.normal_tensor({n, latent_dim}));
  return out;
}

std::vector<double> codelength(const Tensor& x, const VaeParams& params, std::span<const Tensor> noises) {
  if (noises.empty()) throw std::invalid_argument("codelength needs at least one noise sample");
  check_pixels(x, params.arch.input_dim);
  std::vector<double> bits(x.rows(), 0.0);
  ad::Tape tape;
  auto enc = constants(tape, params.encoder);
  auto dec = constants(tape, params.decoder);
  ad::Var xv = tape.constant(x);
  for (const Tensor& noise : noises) {
    ad::Var rows = elbo_rows(xv, enc, dec, noise, params.arch);
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] -= rows.value()[i];
  }
  const double scale = 1.0 / (std::numbers::ln2 * static_cast<double>(noises.size()));
  for (double& b : bits) b *= scale;
  return bits;
}

std::vector<double> codelength(const Tensor& x, const VaeParams& params, Rng rng, std::size_t samples) {
  const auto noises = latent_noise(x.rows(), params.arch.latent_dim, samples, rng);
  return codelength(x, params, noises);
}

double bits_per_dim(double bits_per_example, std::size_t input_dim) {
  return bits_per_example / static_cast<double>(input_dim);
}

ExpectedCodelength expected_codelength_under_q(const Tensor& x, const VaeParams& params,
                                               const DiagonalGaussian& weights,
                                               std::span<const Tensor> weight_noises,
                                               std::span<const Tensor> latent_noises) {
  if (weights.dim() != params.arch.decoder_size())
    throw ShapeError("weight distribution has dimension " + std::to_string(weights.dim()) +
                     ", decoder has " + std::to_string(params.arch.decoder_size()) + " parameters");
  if (weight_noises.empty() || weight_noises.size() != latent_noises.size())
    throw std::invalid_argument("need matching, non-empty weight and latent noise lists");
  ExpectedCodelength out;
  out.samples = weight_noises.size();
  out.bits_per_example.assign(x.rows(), 0.0);
  std::vector<double> sample_means;
  VaeParams sampled = params;
  for (std::size_t s = 0; s < out.samples; ++s) {
    sampled.set_flat_decoder(sample_reparam(weights, weight_noises[s].data()));
    const auto bits = codelength(x, sampled, latent_noises.subspan(s, 1));
    double m = 0.0;
    for (std::size_t i = 0; i < bits.size(); ++i) {
      out.bits_per_example[i] += bits[i];
      m += bits[i];
    }
    sample_means.push_back(m / static_cast<double>(bits.size()));
  }
  const double s_count = static_cast<double>(out.samples);
  for (double& b : out.bits_per_example) b /= s_count;
  double mean = 0.0;
  for (double m : sample_means) mean += m;
  mean /= s_count;
  out.mean_bits = mean;
  if (out.samples > 1) {
    double var = 0.0;
    for (double m : sample_means) var += (m - mean) * (m - mean);
    var /= (s_count - 1.0);
    out.standard_error = std::sqrt(var / s_count);
  }
  return out;
}

ExpectedCodelength expected_codelength_under_q(const Tensor& x, const VaeParams& params,
                                               const DiagonalGaussian& weights, std::size_t samples, Rng rng) {
  std::vector<Tensor> wn;
  for (std::size_t s = 0; s < samples; ++s) wn.push_back(rng.normal_tensor({weights.dim()}));
  const auto ln = latent_noise(x.rows(), params.arch.latent_dim, samples, rng);
  return expected_codelength_under_q(x, params, weights, wn, ln);
}

Tensor sample_data(const VaeParams& params, std::size_t n, Rng& rng, bool binarize) {
  if (n == 0) throw std::invalid_argument("sample_data needs n >= 1");
  ad::Tape tape;
  auto dec = constants(tape, params.decoder);
  ad::Var z = tape.constant(rng.normal_tensor({n, params.arch.latent_dim}));
  Tensor probs = ad::sigmoid(decode_logits(z, dec, params.arch)).value();
  if (binarize)
    for (double& p : probs.data()) p = rng.uniform() < p ? 1.0 : 0.0;
  return probs;
}

void write_vae_snapshot(BinaryWriter& w, const VaeParams& params) {
  params.validate();
  w.magic(kVaeMagic);
  w.u32(static_cast<std::uint32_t>(params.arch.input_dim));
  w.u32(static_cast<std::uint32_t>(params.arch.latent_dim));
  w.u32(static_cast<std::uint32_t>(params.arch.hidden.size()));
  for (std::size_t h : params.arch.hidden) w.u32(static_cast<std::uint32_t>(h));
  const std::size_t count = params.encoder.size() + params.decoder.size();
  w.u32(static_cast<std::uint32_t>(count));
  std::size_t values = 0;
  for (const auto* group : {&params.encoder, &params.decoder})
    for (const Tensor& t : *group) {
      w.u32(static_cast<std::uint32_t>(t.rank()));
      for (std::size_t d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
      values += t.size();
    }
  w.u64(values);
  for (const auto* group : {&params.encoder, &params.decoder})
    for (const Tensor& t : *group)
      for (double v : t.data()) w.f64(v);
}

VaeParams read_vae_snapshot(BinaryReader& r) {
  r.expect_magic(kVaeMagic);
  VaeArchitecture arch;
  arch.input_dim = r.u32();
  arch.latent_dim = r.u32();
  arch.hidden.resize(r.u32());
  for (auto& h : arch.hidden) h = r.u32();
  const auto enc_shapes = arch.encoder_shapes();
  const auto dec_shapes = arch.decoder_shapes();
  const std::uint32_t count = r.u32();
  if (count != enc_shapes.size() + dec_shapes.size()) throw SnapshotError("snapshot layer table does not match architecture");
  std::vector<Shape> shapes(count);
  for (auto& s : shapes) {
    s.resize(r.u32());
    for (auto& d : s) d = r.u32();
  }
  for (std::size_t i = 0; i < count; ++i) {
    const Shape& want = i < enc_shapes.size() ? enc_shapes[i] : dec_shapes[i - enc_shapes.size()];
    if (shapes[i] != want) throw SnapshotError("snapshot layer " + std::to_string(i) + " has unexpected shape");
  }
  const std::uint64_t values = r.u64();
  std::size_t expected = 0;
  for (const Shape& s : shapes) expected += shape_size(s);
  if (values != expected) throw SnapshotError("snapshot value count mismatch");
  VaeParams p{arch, {}, {}};
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> data(shape_size(shapes[i]));
    for (double& v : data) v = r.f64();
    (i < enc_shapes.size() ? p.encoder : p.decoder).emplace_back(shapes[i], std::move(data));
  }
  return p;
}

}  // namespace mdlcl
