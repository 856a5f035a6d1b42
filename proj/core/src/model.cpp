#include "ppgbench/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "ppgbench/rng.hpp"

namespace ppgbench {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kRmsEps = 1e-6;
constexpr double kRopeBase = 10000.0;

double gelu(double z) { return 0.5 * z * (1.0 + std::erf(z / std::sqrt(2.0))); }

double gelu_grad(double z) {
  return 0.5 * (1.0 + std::erf(z / std::sqrt(2.0))) +
         z * std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi);
}

// Rotates (inverse: un-rotates) pairs within one head slice of `row`.
void rope_inplace(double* row, std::size_t dim, std::size_t position, bool inverse) {
  for (std::size_t i = 0; 2 * i + 1 < dim; ++i) {
    const double theta =
        std::pow(kRopeBase, -2.0 * static_cast<double>(i) / static_cast<double>(dim));
    double angle = static_cast<double>(position) * theta;
    if (inverse) angle = -angle;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double x = row[2 * i];
    const double y = row[2 * i + 1];
    row[2 * i] = x * c - y * s;
    row[2 * i + 1] = x * s + y * c;
  }
}

double rms_of(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return std::sqrt(acc / static_cast<double>(n) + kRmsEps);
}

void rmsnorm_row(const double* x, const double* gain, std::size_t n, double r,
                 double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = gain[i] * x[i] / r;
}

// Backward of y = gain * x / r with r = sqrt(mean(x^2) + eps).
void rmsnorm_backward_row(const double* x, const double* gain, std::size_t n, double r,
                          const double* dy, double* dx_accum, double* dgain_accum) {
  double dot = 0.0;  // sum_k dy_k * gain_k * x_k
  for (std::size_t k = 0; k < n; ++k) dot += dy[k] * gain[k] * x[k];
  const double r3n = static_cast<double>(n) * r * r * r;
  for (std::size_t j = 0; j < n; ++j) {
    dx_accum[j] += gain[j] * dy[j] / r - x[j] * dot / r3n;
    dgain_accum[j] += dy[j] * x[j] / r;
  }
}

struct LayerTrace {
  Matrix input;           // residual stream entering the layer, T x D
  std::vector<double> r1;  // per-row rms for the attention norm
  Matrix n1;              // normed input
  Matrix q_rot, k_rot, v;  // post-RoPE queries/keys and values, T x D
  std::vector<Matrix> probs;  // per head, T x T row-stochastic
  Matrix attn_concat;     // heads concatenated before the output projection
  Matrix mid;             // input + attention output
  std::vector<double> r2;
  Matrix n2;
  Matrix mlp_pre;         // n2 * W1, pre-activation, T x M
  Matrix mlp_act;         // gelu(mlp_pre)
};

struct Trace {
  std::vector<LayerTrace> layers;
  Matrix final_hidden;    // T x D
  std::vector<std::size_t> mask;
};

ForwardResult run_forward(const ModelParams& params, const PatchSeq& patchseq,
                          const std::vector<std::size_t>& masked_positions,
                          Trace* trace, std::size_t position_offset = 0) {
  const ModelConfig& cfg = params.config();
  const std::size_t t_len = patchseq.length();
  const std::size_t d = cfg.d_model;
  const std::size_t dh = cfg.head_dim();
  const std::size_t heads = cfg.n_heads;
  if (t_len == 0) raise(ErrorCode::ShapeMismatch, "forward: empty patch sequence");
  if (patchseq.patch_len() != cfg.patch_len)
    raise(ErrorCode::ShapeMismatch,
          "forward: patch length " + std::to_string(patchseq.patch_len()) +
              " != config patch_len " + std::to_string(cfg.patch_len));
  for (std::size_t m : masked_positions)
    if (m >= t_len) raise(ErrorCode::ShapeMismatch, "mask position out of range");

  Matrix hidden = matmul(patchseq.patches, params.embed());
  for (std::size_t m : masked_positions) {
    const Matrix& mask_embed = params.mask_embed();
    for (std::size_t j = 0; j < d; ++j) hidden(m, j) = mask_embed(0, j);
  }

  if (trace) {
    trace->layers.resize(cfg.n_layers);
    trace->mask = masked_positions;
  }

  ForwardResult result;
  result.attn.resize(cfg.n_layers);

  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  const bool causal = cfg.mode == AttentionMode::Causal;

  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    LayerTrace local;
    LayerTrace& lt = trace ? trace->layers[l] : local;
    lt.input = hidden;

    lt.r1.resize(t_len);
    lt.n1 = Matrix(t_len, d);
    const Matrix& g1 = params.norm1_gain(l);
    for (std::size_t t = 0; t < t_len; ++t) {
      lt.r1[t] = rms_of(hidden.row(t), d);
      rmsnorm_row(hidden.row(t), g1.row(0), d, lt.r1[t], lt.n1.row(t));
    }

    lt.q_rot = matmul(lt.n1, params.attn_q(l));
    lt.k_rot = matmul(lt.n1, params.attn_k(l));
    lt.v = matmul(lt.n1, params.attn_v(l));
    for (std::size_t t = 0; t < t_len; ++t) {
      for (std::size_t h = 0; h < heads; ++h) {
        rope_inplace(lt.q_rot.row(t) + h * dh, dh, position_offset + t, false);
        rope_inplace(lt.k_rot.row(t) + h * dh, dh, position_offset + t, false);
      }
    }

    lt.probs.assign(heads, Matrix(t_len, t_len, 0.0));
    lt.attn_concat = Matrix(t_len, d, 0.0);
    result.attn[l].assign(heads, Matrix(t_len, t_len, 0.0));
    for (std::size_t h = 0; h < heads; ++h) {
      Matrix& probs = lt.probs[h];
      for (std::size_t t = 0; t < t_len; ++t) {
        const std::size_t limit = causal ? t + 1 : t_len;
        double max_logit = -1e300;
        std::vector<double> logits(limit);
        for (std::size_t u = 0; u < limit; ++u) {
          double dot = 0.0;
          const double* qr = lt.q_rot.row(t) + h * dh;
          const double* kr = lt.k_rot.row(u) + h * dh;
          for (std::size_t j = 0; j < dh; ++j) dot += qr[j] * kr[j];
          logits[u] = dot * inv_sqrt_dh;
          max_logit = std::max(max_logit, logits[u]);
        }
        double denom = 0.0;
        for (std::size_t u = 0; u < limit; ++u) {
          logits[u] = std::exp(logits[u] - max_logit);
          denom += logits[u];
        }
        for (std::size_t u = 0; u < limit; ++u) probs(t, u) = logits[u] / denom;
        // future keys stay exactly zero in causal mode
        const double* vrow;
        for (std::size_t u = 0; u < limit; ++u) {
          const double p = probs(t, u);
          if (p == 0.0) continue;
          vrow = lt.v.row(u) + h * dh;
          double* orow = lt.attn_concat.row(t) + h * dh;
          for (std::size_t j = 0; j < dh; ++j) orow[j] += p * vrow[j];
        }
      }
      result.attn[l][h] = probs;
    }

    const Matrix attn_out = matmul(lt.attn_concat, params.attn_o(l));
    lt.mid = lt.input;
    lt.mid.add_scaled(attn_out, 1.0);

    lt.r2.resize(t_len);
    lt.n2 = Matrix(t_len, d);
    const Matrix& g2 = params.norm2_gain(l);
    for (std::size_t t = 0; t < t_len; ++t) {
      lt.r2[t] = rms_of(lt.mid.row(t), d);
      rmsnorm_row(lt.mid.row(t), g2.row(0), d, lt.r2[t], lt.n2.row(t));
    }

    lt.mlp_pre = matmul(lt.n2, params.mlp_in(l));
    lt.mlp_act = lt.mlp_pre;
    for (double& z : lt.mlp_act.data()) z = gelu(z);
    const Matrix mlp_out = matmul(lt.mlp_act, params.mlp_out(l));

    hidden = lt.mid;
    hidden.add_scaled(mlp_out, 1.0);
  }

  if (trace) trace->final_hidden = hidden;

  result.pooled.assign(d, 0.0);
  for (std::size_t t = 0; t < t_len; ++t)
    for (std::size_t j = 0; j < d; ++j) result.pooled[j] += hidden(t, j);
  for (double& v : result.pooled) v /= static_cast<double>(t_len);

  result.recon = matmul(hidden, params.recon_w());
  result.scale_logits = matmul(hidden, params.scale_w());
  const Matrix& recon_b = params.recon_b();
  const Matrix& scale_b = params.scale_b();
  for (std::size_t t = 0; t < t_len; ++t)
    for (std::size_t p = 0; p < cfg.patch_len; ++p) {
      result.recon(t, p) += recon_b(0, p);
      result.scale_logits(t, p) += scale_b(0, p);
    }

  const Matrix& task_w = params.task_w();
  const Matrix& task_b = params.task_b();
  result.task_out.assign(cfg.task_dim(), 0.0);
  for (std::size_t c = 0; c < cfg.task_dim(); ++c) {
    double acc = task_b(0, c);
    for (std::size_t j = 0; j < d; ++j) acc += result.pooled[j] * task_w(j, c);
    result.task_out[c] = acc;
  }
  return result;
}

// Loss value plus the seed gradients d loss / d recon, d loss / d scale
// logits, and d loss / d task output.
struct LossSeed {
  double value = 0.0;
  Matrix d_recon;
  Matrix d_scale;
  std::vector<double> d_task;
};

LossSeed loss_seed(const ModelConfig& cfg, const PatchSeq& patchseq,
                   const ForwardResult& fwd, const std::vector<std::size_t>& mask,
                   const LossInput& input) {
  const std::size_t t_len = patchseq.length();
  const std::size_t p_len = cfg.patch_len;
  const Matrix& targets = input.targets ? *input.targets : patchseq.patches;
  if (!targets.same_shape(patchseq.patches))
    raise(ErrorCode::ShapeMismatch, "loss targets must match the patch shape");
  LossSeed seed;
  seed.d_recon = Matrix(t_len, p_len, 0.0);
  seed.d_scale = Matrix(t_len, p_len, 0.0);
  seed.d_task.assign(cfg.task_dim(), 0.0);

  switch (cfg.objective) {
    case Objective::NextPatchMse: {
      if (t_len < 2) raise(ErrorCode::EmptyData, "next-patch loss needs >= 2 patches");
      const double norm = 1.0 / (static_cast<double>(t_len - 1) * static_cast<double>(p_len));
      for (std::size_t t = 0; t + 1 < t_len; ++t)
        for (std::size_t p = 0; p < p_len; ++p) {
          const double diff = fwd.recon(t, p) - targets(t + 1, p);
          seed.value += diff * diff * norm;
          seed.d_recon(t, p) = 2.0 * diff * norm;
        }
      break;
    }
    case Objective::NextPatchLaplace: {
      if (t_len < 2) raise(ErrorCode::EmptyData, "next-patch loss needs >= 2 patches");
      const double norm = 1.0 / (static_cast<double>(t_len - 1) * static_cast<double>(p_len));
      const double ln2 = std::log(2.0);
      for (std::size_t t = 0; t + 1 < t_len; ++t)
        for (std::size_t p = 0; p < p_len; ++p) {
          const double z = fwd.scale_logits(t, p);
          const double inv_b = std::exp(-z);
          const double diff = targets(t + 1, p) - fwd.recon(t, p);
          seed.value += (std::abs(diff) * inv_b + ln2 + z) * norm;
          const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
          seed.d_recon(t, p) = -sign * inv_b * norm;
          seed.d_scale(t, p) = (1.0 - std::abs(diff) * inv_b) * norm;
        }
      break;
    }
    case Objective::MaskedMse: {
      if (mask.empty()) raise(ErrorCode::EmptyData, "masked loss needs a non-empty mask");
      const double norm =
          1.0 / (static_cast<double>(mask.size()) * static_cast<double>(p_len));
      for (std::size_t t : mask)
        for (std::size_t p = 0; p < p_len; ++p) {
          const double diff = fwd.recon(t, p) - targets(t, p);
          seed.value += diff * diff * norm;
          seed.d_recon(t, p) = 2.0 * diff * norm;
        }
      break;
    }
    case Objective::TaskRegression: {
      if (!input.label)
        raise(ErrorCode::InvalidObjective, "task_regression requires a label");
      const double diff = fwd.task_out[0] - *input.label;
      seed.value = diff * diff;
      seed.d_task[0] = 2.0 * diff;
      break;
    }
    case Objective::TaskClassification: {
      if (!input.label)
        raise(ErrorCode::InvalidObjective, "task_classification requires a label");
      if (*input.label < 0.0 || *input.label != std::floor(*input.label) ||
          *input.label >= static_cast<double>(cfg.task_dim()))
        raise(ErrorCode::InvalidObjective, "class label out of range");
      const auto y = static_cast<std::size_t>(*input.label);
      double max_logit = fwd.task_out[0];
      for (double v : fwd.task_out) max_logit = std::max(max_logit, v);
      double denom = 0.0;
      std::vector<double> probs(fwd.task_out.size());
      for (std::size_t c = 0; c < probs.size(); ++c) {
        probs[c] = std::exp(fwd.task_out[c] - max_logit);
        denom += probs[c];
      }
      for (double& p : probs) p /= denom;
      seed.value = -std::log(std::max(probs[y], 1e-300));
      seed.d_task = probs;
      seed.d_task[y] -= 1.0;
      break;
    }
  }
  return seed;
}

std::vector<std::size_t> mask_for(const ModelConfig& cfg, std::size_t t_len,
                                  const LossInput& input) {
  if (cfg.objective != Objective::MaskedMse) return {};
  if (!(cfg.mask_fraction > 0.0 && cfg.mask_fraction < 1.0))
    raise(ErrorCode::MaskFractionOutOfRange,
          "mask_fraction must be in (0,1), got " + std::to_string(cfg.mask_fraction));
  return sample_mask(t_len, cfg.mask_fraction, input.mask_seed);
}

}  // namespace

Objective objective_from_string(const std::string& name) {
  if (name == "next_patch_mse") return Objective::NextPatchMse;
  if (name == "next_patch_laplace") return Objective::NextPatchLaplace;
  if (name == "masked_mse") return Objective::MaskedMse;
  if (name == "task_regression") return Objective::TaskRegression;
  if (name == "task_classification") return Objective::TaskClassification;
  raise(ErrorCode::InvalidObjective, "unknown objective '" + name + "'");
}

const char* objective_name(Objective objective) {
  switch (objective) {
    case Objective::NextPatchMse: return "next_patch_mse";
    case Objective::NextPatchLaplace: return "next_patch_laplace";
    case Objective::MaskedMse: return "masked_mse";
    case Objective::TaskRegression: return "task_regression";
    case Objective::TaskClassification: return "task_classification";
  }
  return "next_patch_mse";
}

void ModelConfig::validate() const {
  if (d_model == 0 || n_heads == 0 || n_layers == 0 || mlp_hidden == 0 || patch_len == 0)
    raise(ErrorCode::InvalidSpec, "model dimensions must be positive");
  if (d_model % n_heads != 0)
    raise(ErrorCode::InvalidSpec, "d_model must be divisible by n_heads");
  if (head_dim() % 2 != 0)
    raise(ErrorCode::OddDimension, "head dimension must be even for RoPE");
  if (objective == Objective::MaskedMse && !(mask_fraction > 0.0 && mask_fraction < 1.0))
    raise(ErrorCode::MaskFractionOutOfRange, "mask_fraction must be in (0,1)");
}

PatchSeq tokenize(const Segment& segment, std::size_t patch_len) {
  if (patch_len == 0) raise(ErrorCode::InvalidSpec, "patch_len must be > 0");
  if (segment.samples.empty()) raise(ErrorCode::EmptySignal, "tokenize");
  if (segment.samples.size() % patch_len != 0)
    raise(ErrorCode::LengthNotDivisible,
          "segment length " + std::to_string(segment.samples.size()) +
              " not divisible by patch length " + std::to_string(patch_len));
  const std::size_t t_len = segment.samples.size() / patch_len;
  PatchSeq seq;
  seq.patches = Matrix(t_len, patch_len);
  for (std::size_t t = 0; t < t_len; ++t)
    for (std::size_t p = 0; p < patch_len; ++p)
      seq.patches(t, p) = segment.samples[t * patch_len + p];
  return seq;
}

std::vector<double> rmsnorm(const std::vector<double>& x, const std::vector<double>& gain,
                            double eps) {
  if (x.size() != gain.size()) raise(ErrorCode::ShapeMismatch, "rmsnorm dims");
  if (x.empty()) raise(ErrorCode::ShapeMismatch, "rmsnorm on empty vector");
  double acc = 0.0;
  for (double v : x) acc += v * v;
  const double r = std::sqrt(acc / static_cast<double>(x.size()) + eps);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = gain[i] * x[i] / r;
  return out;
}

std::vector<double> rope_rotate(const std::vector<double>& vec, std::size_t position) {
  if (vec.size() % 2 != 0)
    raise(ErrorCode::OddDimension, "rope_rotate needs an even dimension");
  std::vector<double> out = vec;
  rope_inplace(out.data(), out.size(), position, false);
  return out;
}

ModelParams::ModelParams(const ModelConfig& config) : config_(config) {
  config_.validate();
  const std::size_t d = config.d_model;
  auto push = [&](const std::string& name, std::size_t rows, std::size_t cols) {
    names_.push_back(name);
    tensors_.emplace_back(rows, cols, 0.0);
    frozen_.push_back(0);
  };
  push("embed.w", config.patch_len, d);
  push("mask_embed", 1, d);
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    push(prefix + "attn.wq", d, d);
    push(prefix + "attn.wk", d, d);
    push(prefix + "attn.wv", d, d);
    push(prefix + "attn.wo", d, d);
    push(prefix + "norm1.gain", 1, d);
    push(prefix + "norm2.gain", 1, d);
    push(prefix + "mlp.w1", d, config.mlp_hidden);
    push(prefix + "mlp.w2", config.mlp_hidden, d);
  }
  push("head.recon.w", d, config.patch_len);
  push("head.recon.b", 1, config.patch_len);
  push("head.scale.w", d, config.patch_len);
  push("head.scale.b", 1, config.patch_len);
  push("head.task.w", d, config.task_dim());
  push("head.task.b", 1, config.task_dim());
}

std::string ModelParams::tensor_class(std::size_t i) const {
  const std::string& name = names_[i];
  if (name.rfind("head.", 0) == 0) return "head";
  if (name.find(".attn.") != std::string::npos) return "attention";
  if (name.find(".norm") != std::string::npos) return "norm";
  if (name.find(".mlp.") != std::string::npos) return "mlp";
  return "embedding";
}

void ModelParams::freeze_backbone() {
  for (std::size_t i = 0; i < tensors_.size(); ++i)
    frozen_[i] = names_[i].rfind("head.", 0) == 0 ? 0 : 1;
}

void ModelParams::unfreeze_all() {
  std::fill(frozen_.begin(), frozen_.end(), 0);
}

std::size_t ModelParams::param_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

std::uint64_t ModelParams::backbone_checksum() const {
  std::uint64_t hash = 1469598103934665603ull;  // FNV-1a
  auto mix = [&](const void* bytes, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < len; ++i) {
      hash ^= p[i];
      hash *= 1099511628211ull;
    }
  };
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (names_[i].rfind("head.", 0) == 0) continue;
    mix(names_[i].data(), names_[i].size());
    mix(tensors_[i].data().data(), tensors_[i].size() * sizeof(double));
  }
  return hash;
}

ModelParams init_params(const ModelConfig& config) {
  ModelParams params(config);
  Rng rng(config.seed);
  auto fill_gaussian = [&](Matrix& m, double std_dev) {
    for (double& v : m.data()) v = std_dev * rng.gaussian();
  };
  const double d_scale = 1.0 / std::sqrt(static_cast<double>(config.d_model));
  fill_gaussian(params.embed(), 1.0 / std::sqrt(static_cast<double>(config.patch_len)));
  fill_gaussian(params.mask_embed(), 0.1);
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    fill_gaussian(params.attn_q(l), d_scale);
    fill_gaussian(params.attn_k(l), d_scale);
    fill_gaussian(params.attn_v(l), d_scale);
    fill_gaussian(params.attn_o(l), d_scale);
    params.norm1_gain(l).fill(1.0);
    params.norm2_gain(l).fill(1.0);
    fill_gaussian(params.mlp_in(l), d_scale);
    fill_gaussian(params.mlp_out(l),
                  1.0 / std::sqrt(static_cast<double>(config.mlp_hidden)));
  }
  fill_gaussian(params.recon_w(), d_scale);
  fill_gaussian(params.task_w(), d_scale);
  // scale head starts at zero so the initial Laplace scale is exp(0) = 1
  return params;
}

ForwardResult forward(const ModelParams& params, const PatchSeq& patchseq,
                      const std::vector<std::size_t>& masked_positions,
                      std::size_t position_offset) {
  return run_forward(params, patchseq, masked_positions, nullptr, position_offset);
}

std::vector<std::size_t> sample_mask(std::size_t t, double mask_fraction,
                                     std::uint64_t seed) {
  if (!(mask_fraction > 0.0 && mask_fraction < 1.0))
    raise(ErrorCode::MaskFractionOutOfRange, "mask_fraction must be in (0,1)");
  if (t == 0) return {};
  const auto count = static_cast<std::size_t>(
      std::ceil(mask_fraction * static_cast<double>(t)));
  std::vector<std::size_t> positions(t);
  for (std::size_t i = 0; i < t; ++i) positions[i] = i;
  Rng rng(seed);
  rng.shuffle(positions);
  positions.resize(std::min(count, t));
  std::sort(positions.begin(), positions.end());
  return positions;
}

double loss(const ModelParams& params, const PatchSeq& patchseq, const LossInput& input) {
  const auto mask = mask_for(params.config(), patchseq.length(), input);
  const ForwardResult fwd = run_forward(params, patchseq, mask, nullptr);
  return loss_seed(params.config(), patchseq, fwd, mask, input).value;
}

GradResult grad(const ModelParams& params, const PatchSeq& patchseq,
                const LossInput& input) {
  const ModelConfig& cfg = params.config();
  const std::size_t t_len = patchseq.length();
  const std::size_t d = cfg.d_model;
  const std::size_t dh = cfg.head_dim();
  const std::size_t heads = cfg.n_heads;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  const auto mask = mask_for(cfg, t_len, input);
  Trace trace;
  const ForwardResult fwd = run_forward(params, patchseq, mask, &trace);
  const LossSeed seed = loss_seed(cfg, patchseq, fwd, mask, input);

  GradResult result;
  result.loss = seed.value;
  result.grads.reserve(params.tensor_count());
  for (std::size_t i = 0; i < params.tensor_count(); ++i)
    result.grads.emplace_back(params.tensor(i).rows(), params.tensor(i).cols(), 0.0);

  // Named views into the gradient registry, mirroring ModelParams layout.
  auto grad_of = [&](const Matrix& tensor) -> Matrix& {
    for (std::size_t i = 0; i < params.tensor_count(); ++i)
      if (&params.tensor(i) == &tensor) return result.grads[i];
    raise(ErrorCode::ShapeMismatch, "gradient lookup failed");
  };

  const Matrix& hidden = trace.final_hidden;

  // Heads.
  Matrix d_hidden(t_len, d, 0.0);
  {
    Matrix& d_recon_w = grad_of(params.recon_w());
    Matrix& d_recon_b = grad_of(params.recon_b());
    Matrix& d_scale_w = grad_of(params.scale_w());
    Matrix& d_scale_b = grad_of(params.scale_b());
    for (std::size_t t = 0; t < t_len; ++t) {
      for (std::size_t p = 0; p < cfg.patch_len; ++p) {
        const double dr = seed.d_recon(t, p);
        const double ds = seed.d_scale(t, p);
        if (dr != 0.0) {
          d_recon_b(0, p) += dr;
          for (std::size_t j = 0; j < d; ++j) {
            d_recon_w(j, p) += hidden(t, j) * dr;
            d_hidden(t, j) += params.recon_w()(j, p) * dr;
          }
        }
        if (ds != 0.0) {
          d_scale_b(0, p) += ds;
          for (std::size_t j = 0; j < d; ++j) {
            d_scale_w(j, p) += hidden(t, j) * ds;
            d_hidden(t, j) += params.scale_w()(j, p) * ds;
          }
        }
      }
    }

    Matrix& d_task_w = grad_of(params.task_w());
    Matrix& d_task_b = grad_of(params.task_b());
    std::vector<double> d_pooled(d, 0.0);
    for (std::size_t c = 0; c < cfg.task_dim(); ++c) {
      const double dt = seed.d_task[c];
      if (dt == 0.0) continue;
      d_task_b(0, c) += dt;
      for (std::size_t j = 0; j < d; ++j) {
        d_task_w(j, c) += fwd.pooled[j] * dt;
        d_pooled[j] += params.task_w()(j, c) * dt;
      }
    }
    const double inv_t = 1.0 / static_cast<double>(t_len);
    for (std::size_t t = 0; t < t_len; ++t)
      for (std::size_t j = 0; j < d; ++j) d_hidden(t, j) += d_pooled[j] * inv_t;
  }

  // Transformer blocks in reverse.
  for (std::size_t li = cfg.n_layers; li-- > 0;) {
    const LayerTrace& lt = trace.layers[li];

    // MLP branch: hidden = mid + gelu(n2 W1) W2
    Matrix d_mid = d_hidden;  // residual path
    {
      Matrix& d_w2 = grad_of(params.mlp_out(li));
      Matrix& d_w1 = grad_of(params.mlp_in(li));
      Matrix& d_g2 = grad_of(params.norm2_gain(li));

      Matrix d_act = matmul(d_hidden, params.mlp_out(li).transposed());
      {
        const Matrix act_t = lt.mlp_act.transposed();
        d_w2.add_scaled(matmul(act_t, d_hidden), 1.0);
      }
      Matrix d_pre = d_act;
      for (std::size_t i = 0; i < d_pre.size(); ++i)
        d_pre.data()[i] *= gelu_grad(lt.mlp_pre.data()[i]);
      d_w1.add_scaled(matmul(lt.n2.transposed(), d_pre), 1.0);
      const Matrix d_n2 = matmul(d_pre, params.mlp_in(li).transposed());

      const Matrix& g2 = params.norm2_gain(li);
      for (std::size_t t = 0; t < t_len; ++t)
        rmsnorm_backward_row(lt.mid.row(t), g2.row(0), d, lt.r2[t], d_n2.row(t),
                             d_mid.row(t), d_g2.row(0));
    }

    // Attention branch: mid = input + concat(heads) Wo
    Matrix d_input = d_mid;  // residual path
    {
      Matrix& d_wo = grad_of(params.attn_o(li));
      Matrix& d_wq = grad_of(params.attn_q(li));
      Matrix& d_wk = grad_of(params.attn_k(li));
      Matrix& d_wv = grad_of(params.attn_v(li));
      Matrix& d_g1 = grad_of(params.norm1_gain(li));

      const Matrix d_concat = matmul(d_mid, params.attn_o(li).transposed());
      d_wo.add_scaled(matmul(lt.attn_concat.transposed(), d_mid), 1.0);

      Matrix d_q(t_len, d, 0.0);
      Matrix d_k(t_len, d, 0.0);
      Matrix d_v(t_len, d, 0.0);
      for (std::size_t h = 0; h < heads; ++h) {
        const Matrix& probs = lt.probs[h];
        for (std::size_t t = 0; t < t_len; ++t) {
          const double* d_out = d_concat.row(t) + h * dh;
          // dV and dP from O = P V
          std::vector<double> d_prow(t_len, 0.0);
          for (std::size_t u = 0; u < t_len; ++u) {
            const double p = probs(t, u);
            const double* vrow = lt.v.row(u) + h * dh;
            double acc = 0.0;
            for (std::size_t j = 0; j < dh; ++j) acc += d_out[j] * vrow[j];
            d_prow[u] = acc;
            if (p != 0.0) {
              double* dvrow = d_v.row(u) + h * dh;
              for (std::size_t j = 0; j < dh; ++j) dvrow[j] += p * d_out[j];
            }
          }
          // softmax backward: ds = p .* (dp - <p, dp>)
          double dot = 0.0;
          for (std::size_t u = 0; u < t_len; ++u) dot += probs(t, u) * d_prow[u];
          for (std::size_t u = 0; u < t_len; ++u) {
            const double ds = probs(t, u) * (d_prow[u] - dot);
            if (ds == 0.0) continue;
            const double* krow = lt.k_rot.row(u) + h * dh;
            const double* qrow = lt.q_rot.row(t) + h * dh;
            double* dqrow = d_q.row(t) + h * dh;
            double* dkrow = d_k.row(u) + h * dh;
            for (std::size_t j = 0; j < dh; ++j) {
              dqrow[j] += ds * inv_sqrt_dh * krow[j];
              dkrow[j] += ds * inv_sqrt_dh * qrow[j];
            }
          }
        }
      }
      // un-rotate gradients back through RoPE
      for (std::size_t t = 0; t < t_len; ++t)
        for (std::size_t h = 0; h < heads; ++h) {
          rope_inplace(d_q.row(t) + h * dh, dh, t, true);
          rope_inplace(d_k.row(t) + h * dh, dh, t, true);
        }

      const Matrix n1_t = lt.n1.transposed();
      d_wq.add_scaled(matmul(n1_t, d_q), 1.0);
      d_wk.add_scaled(matmul(n1_t, d_k), 1.0);
      d_wv.add_scaled(matmul(n1_t, d_v), 1.0);

      Matrix d_n1 = matmul(d_q, params.attn_q(li).transposed());
      d_n1.add_scaled(matmul(d_k, params.attn_k(li).transposed()), 1.0);
      d_n1.add_scaled(matmul(d_v, params.attn_v(li).transposed()), 1.0);

      const Matrix& g1 = params.norm1_gain(li);
      for (std::size_t t = 0; t < t_len; ++t)
        rmsnorm_backward_row(lt.input.row(t), g1.row(0), d, lt.r1[t], d_n1.row(t),
                             d_input.row(t), d_g1.row(0));
    }

    d_hidden = std::move(d_input);
  }

  // Patch embedding; masked rows feed the mask embedding instead.
  {
    Matrix& d_embed = grad_of(params.embed());
    Matrix& d_mask = grad_of(params.mask_embed());
    std::vector<bool> is_masked(t_len, false);
    for (std::size_t m : trace.mask) is_masked[m] = true;
    for (std::size_t t = 0; t < t_len; ++t) {
      if (is_masked[t]) {
        for (std::size_t j = 0; j < d; ++j) d_mask(0, j) += d_hidden(t, j);
      } else {
        for (std::size_t p = 0; p < cfg.patch_len; ++p) {
          const double x = patchseq.patches(t, p);
          if (x == 0.0) continue;
          for (std::size_t j = 0; j < d; ++j) d_embed(p, j) += x * d_hidden(t, j);
        }
      }
    }
  }

  for (std::size_t i = 0; i < params.tensor_count(); ++i)
    if (params.frozen(i)) result.grads[i].fill(0.0);

  return result;
}

TrainResult train(const ModelParams& params, const std::vector<TrainItem>& data,
                  const TrainerConfig& trainer) {
  if (data.empty()) raise(ErrorCode::EmptyData, "train: no data");

  TrainResult result;
  result.params = params;
  if (trainer.freeze == FreezeMode::HeadOnly)
    result.params.freeze_backbone();
  else
    result.params.unfreeze_all();

  ModelParams& model = result.params;
  std::vector<Matrix> m1, m2;
  for (std::size_t i = 0; i < model.tensor_count(); ++i) {
    m1.emplace_back(model.tensor(i).rows(), model.tensor(i).cols(), 0.0);
    m2.emplace_back(model.tensor(i).rows(), model.tensor(i).cols(), 0.0);
  }

  Rng rng(trainer.seed);
  for (std::size_t step = 0; step < trainer.steps; ++step) {
    std::vector<Matrix> batch_grads;
    for (std::size_t i = 0; i < model.tensor_count(); ++i)
      batch_grads.emplace_back(model.tensor(i).rows(), model.tensor(i).cols(), 0.0);

    double batch_loss = 0.0;
    const std::size_t batch = std::max<std::size_t>(1, trainer.batch);
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t idx = rng.index(data.size());
      LossInput input;
      input.label = data[idx].label;
      // fresh mask per step and item, still a pure function of the seed
      input.mask_seed = trainer.seed + 0x9e3779b97f4a7c15ull * (step + 1) + idx;
      GradResult g = grad(model, data[idx].patches, input);
      batch_loss += g.loss;
      for (std::size_t i = 0; i < batch_grads.size(); ++i)
        batch_grads[i].add_scaled(g.grads[i], 1.0 / static_cast<double>(batch));
    }
    result.loss_trace.push_back(batch_loss / static_cast<double>(batch));

    const double t = static_cast<double>(step + 1);
    const double bias1 = 1.0 - std::pow(trainer.beta1, t);
    const double bias2 = 1.0 - std::pow(trainer.beta2, t);
    for (std::size_t i = 0; i < model.tensor_count(); ++i) {
      if (model.frozen(i)) continue;
      auto& theta = model.tensor(i).data();
      auto& m = m1[i].data();
      auto& v = m2[i].data();
      const auto& g = batch_grads[i].data();
      for (std::size_t j = 0; j < theta.size(); ++j) {
        m[j] = trainer.beta1 * m[j] + (1.0 - trainer.beta1) * g[j];
        v[j] = trainer.beta2 * v[j] + (1.0 - trainer.beta2) * g[j] * g[j];
        const double m_hat = m[j] / bias1;
        const double v_hat = v[j] / bias2;
        theta[j] -= trainer.lr * m_hat / (std::sqrt(v_hat) + trainer.adam_eps);
      }
    }
  }
  return result;
}

double row_entropy(const double* row, std::size_t n) {
  double h = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (row[i] > 0.0) h -= row[i] * std::log(row[i]);
  return h;
}

std::vector<std::vector<double>> attention_entropy(const AttnMaps& maps) {
  std::vector<std::vector<double>> out;
  for (const auto& layer : maps) {
    std::vector<double> per_head;
    for (const Matrix& probs : layer) {
      double acc = 0.0;
      for (std::size_t t = 0; t < probs.rows(); ++t) {
        double sum = 0.0;
        for (std::size_t u = 0; u < probs.cols(); ++u) sum += probs(t, u);
        if (std::abs(sum - 1.0) > 1e-6)
          raise(ErrorCode::NonStochasticRow,
                "attention row sums to " + std::to_string(sum));
        acc += row_entropy(probs.row(t), probs.cols());
      }
      per_head.push_back(acc / static_cast<double>(probs.rows()));
    }
    out.push_back(std::move(per_head));
  }
  return out;
}

void save_checkpoint(const std::string& path, const ModelParams& params) {
  nlohmann::json j;
  j["format_version"] = 1;
  const ModelConfig& cfg = params.config();
  j["config"] = {
      {"d_model", cfg.d_model},
      {"n_heads", cfg.n_heads},
      {"n_layers", cfg.n_layers},
      {"mlp_hidden", cfg.mlp_hidden},
      {"patch_len", cfg.patch_len},
      {"mode", cfg.mode == AttentionMode::Causal ? "causal" : "bidirectional"},
      {"objective", objective_name(cfg.objective)},
      {"mask_fraction", cfg.mask_fraction},
      {"n_classes", cfg.n_classes},
      {"seed", cfg.seed},
  };
  for (std::size_t i = 0; i < params.tensor_count(); ++i) {
    const Matrix& t = params.tensor(i);
    j["tensors"][params.tensor_name(i)] = {
        {"rows", t.rows()}, {"cols", t.cols()}, {"data", t.data()}};
    j["frozen"][params.tensor_name(i)] = params.frozen(i);
  }
  std::ofstream out(path);
  if (!out) raise(ErrorCode::IoError, "cannot write " + path);
  out << j.dump() << '\n';
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot open " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) raise(ErrorCode::ParseError, path + ": invalid checkpoint JSON");
  if (!j.contains("format_version") || j["format_version"].get<int>() != 1)
    raise(ErrorCode::SchemaError, path + ": unsupported checkpoint version");

  const auto& jc = j.at("config");
  ModelConfig cfg;
  cfg.d_model = jc.at("d_model").get<std::size_t>();
  cfg.n_heads = jc.at("n_heads").get<std::size_t>();
  cfg.n_layers = jc.at("n_layers").get<std::size_t>();
  cfg.mlp_hidden = jc.at("mlp_hidden").get<std::size_t>();
  cfg.patch_len = jc.at("patch_len").get<std::size_t>();
  cfg.mode = jc.at("mode").get<std::string>() == "causal" ? AttentionMode::Causal
                                                          : AttentionMode::Bidirectional;
  cfg.objective = objective_from_string(jc.at("objective").get<std::string>());
  cfg.mask_fraction = jc.at("mask_fraction").get<double>();
  cfg.n_classes = jc.at("n_classes").get<std::size_t>();
  cfg.seed = jc.at("seed").get<std::uint64_t>();

  ModelParams params(cfg);
  for (std::size_t i = 0; i < params.tensor_count(); ++i) {
    const std::string& name = params.tensor_name(i);
    if (!j.at("tensors").contains(name))
      raise(ErrorCode::SchemaError, path + ": checkpoint missing tensor " + name);
    const auto& jt = j["tensors"][name];
    Matrix& t = params.tensor(i);
    if (jt.at("rows").get<std::size_t>() != t.rows() ||
        jt.at("cols").get<std::size_t>() != t.cols())
      raise(ErrorCode::ShapeMismatch, path + ": tensor " + name + " has the wrong shape");
    const auto data = jt.at("data").get<std::vector<double>>();
    if (data.size() != t.size())
      raise(ErrorCode::ShapeMismatch, path + ": tensor " + name + " has the wrong size");
    t.data() = data;
    if (j.contains("frozen") && j["frozen"].contains(name))
      params.set_frozen(i, j["frozen"][name].get<bool>());
  }
  return params;
}

}  // namespace ppgbench
