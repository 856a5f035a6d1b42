#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ppgbench/numeric.hpp"
#include "ppgbench/signal.hpp"

namespace ppgbench {

enum class AttentionMode { Causal, Bidirectional };

// The first three are pretraining objectives; the task objectives drive
// supervised fine-tuning through the pooled-embedding head.
enum class Objective {
  NextPatchMse,
  NextPatchLaplace,
  MaskedMse,
  TaskRegression,
  TaskClassification,
};

Objective objective_from_string(const std::string& name);
const char* objective_name(Objective objective);

struct ModelConfig {
  std::size_t d_model = 32;
  std::size_t n_heads = 4;
  std::size_t n_layers = 2;
  std::size_t mlp_hidden = 64;
  std::size_t patch_len = 40;   // 1 s of samples at 40 Hz
  AttentionMode mode = AttentionMode::Causal;
  Objective objective = Objective::NextPatchMse;
  double mask_fraction = 0.3;
  std::size_t n_classes = 0;    // 0 => scalar regression head
  std::uint64_t seed = 0;

  std::size_t head_dim() const { return d_model / n_heads; }
  std::size_t task_dim() const { return n_classes > 0 ? n_classes : 1; }
  void validate() const;
};

// T non-overlapping patches of patch_len samples each.
struct PatchSeq {
  Matrix patches;  // T x P

  std::size_t length() const { return patches.rows(); }
  std::size_t patch_len() const { return patches.cols(); }
};

PatchSeq tokenize(const Segment& segment, std::size_t patch_len);

// x / sqrt(mean(x^2) + eps), elementwise times gain.
std::vector<double> rmsnorm(const std::vector<double>& x, const std::vector<double>& gain,
                            double eps = 1e-6);

// Rotates consecutive coordinate pairs by position * theta_i with the
// standard ladder theta_i = 10000^(-2i/d). Norm preserving; attention logits
// built on rotated vectors depend only on relative positions.
std::vector<double> rope_rotate(const std::vector<double>& vec, std::size_t position);

// All trainable state. Tensors live in one flat registry so training,
// checkpointing, freezing, and finite-difference probing can treat them
// uniformly; the named accessors below are what the forward pass uses.
class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(const ModelConfig& config);  // zero-initialized

  const ModelConfig& config() const { return config_; }

  std::size_t tensor_count() const { return tensors_.size(); }
  Matrix& tensor(std::size_t i) { return tensors_[i]; }
  const Matrix& tensor(std::size_t i) const { return tensors_[i]; }
  const std::string& tensor_name(std::size_t i) const { return names_[i]; }
  // Coarse grouping for diagnostics: embedding | attention | norm | mlp | head.
  std::string tensor_class(std::size_t i) const;

  bool frozen(std::size_t i) const { return frozen_[i] != 0; }
  void set_frozen(std::size_t i, bool value) { frozen_[i] = value ? 1 : 0; }
  void freeze_backbone();  // everything except head.* tensors
  void unfreeze_all();

  std::size_t param_count() const;
  // Order- and content-sensitive digest of the backbone tensors; head
  // tensors excluded so head-only tuning can be checked bitwise.
  std::uint64_t backbone_checksum() const;

  // accessors used by the forward/backward passes
  Matrix& embed() { return tensors_[0]; }
  Matrix& mask_embed() { return tensors_[1]; }
  Matrix& attn_q(std::size_t l) { return tensors_[layer_base(l) + 0]; }
  Matrix& attn_k(std::size_t l) { return tensors_[layer_base(l) + 1]; }
  Matrix& attn_v(std::size_t l) { return tensors_[layer_base(l) + 2]; }
  Matrix& attn_o(std::size_t l) { return tensors_[layer_base(l) + 3]; }
  Matrix& norm1_gain(std::size_t l) { return tensors_[layer_base(l) + 4]; }
  Matrix& norm2_gain(std::size_t l) { return tensors_[layer_base(l) + 5]; }
  Matrix& mlp_in(std::size_t l) { return tensors_[layer_base(l) + 6]; }
  Matrix& mlp_out(std::size_t l) { return tensors_[layer_base(l) + 7]; }
  Matrix& recon_w() { return tensors_[head_base() + 0]; }
  Matrix& recon_b() { return tensors_[head_base() + 1]; }
  Matrix& scale_w() { return tensors_[head_base() + 2]; }
  Matrix& scale_b() { return tensors_[head_base() + 3]; }
  Matrix& task_w() { return tensors_[head_base() + 4]; }
  Matrix& task_b() { return tensors_[head_base() + 5]; }

  const Matrix& embed() const { return tensors_[0]; }
  const Matrix& mask_embed() const { return tensors_[1]; }
  const Matrix& attn_q(std::size_t l) const { return tensors_[layer_base(l) + 0]; }
  const Matrix& attn_k(std::size_t l) const { return tensors_[layer_base(l) + 1]; }
  const Matrix& attn_v(std::size_t l) const { return tensors_[layer_base(l) + 2]; }
  const Matrix& attn_o(std::size_t l) const { return tensors_[layer_base(l) + 3]; }
  const Matrix& norm1_gain(std::size_t l) const { return tensors_[layer_base(l) + 4]; }
  const Matrix& norm2_gain(std::size_t l) const { return tensors_[layer_base(l) + 5]; }
  const Matrix& mlp_in(std::size_t l) const { return tensors_[layer_base(l) + 6]; }
  const Matrix& mlp_out(std::size_t l) const { return tensors_[layer_base(l) + 7]; }
  const Matrix& recon_w() const { return tensors_[head_base() + 0]; }
  const Matrix& recon_b() const { return tensors_[head_base() + 1]; }
  const Matrix& scale_w() const { return tensors_[head_base() + 2]; }
  const Matrix& scale_b() const { return tensors_[head_base() + 3]; }
  const Matrix& task_w() const { return tensors_[head_base() + 4]; }
  const Matrix& task_b() const { return tensors_[head_base() + 5]; }

 private:
  std::size_t layer_base(std::size_t l) const { return 2 + l * 8; }
  std::size_t head_base() const { return 2 + config_.n_layers * 8; }

  ModelConfig config_;
  std::vector<Matrix> tensors_;
  std::vector<std::string> names_;
  std::vector<std::uint8_t> frozen_;
};

ModelParams init_params(const ModelConfig& config);

// Row-stochastic attention maps: [layer][head] is T x T.
using AttnMaps = std::vector<std::vector<Matrix>>;

struct ForwardResult {
  Matrix recon;              // T x P patch predictions
  Matrix scale_logits;       // T x P, Laplace scale is exp() of these
  std::vector<double> pooled;    // mean of final hidden states
  std::vector<double> task_out;  // task head on the pooled embedding
  AttnMaps attn;
};

// Masked positions are replaced with the learned mask embedding; pass the
// mask only for masked-reconstruction objectives. position_offset shifts
// every RoPE position by a constant; attention depends only on relative
// positions, so the offset changes no attention weight.
ForwardResult forward(const ModelParams& params, const PatchSeq& patchseq,
                      const std::vector<std::size_t>& masked_positions = {},
                      std::size_t position_offset = 0);

// Deterministic mask of ceil(mask_fraction * T) distinct positions.
std::vector<std::size_t> sample_mask(std::size_t t, double mask_fraction,
                                     std::uint64_t seed);

struct LossInput {
  std::optional<double> label;          // task objectives
  std::uint64_t mask_seed = 0;          // masked_mse
  // Reconstruction targets; defaults to the input patches. The losses read
  // targets only at supervised positions (next patches, masked patches).
  std::optional<Matrix> targets;
};

double loss(const ModelParams& params, const PatchSeq& patchseq,
            const LossInput& input = {});

struct GradResult {
  double loss = 0.0;
  std::vector<Matrix> grads;  // aligned with ModelParams tensors
};

// Analytic gradients for every unfrozen tensor; frozen tensors get zeros.
GradResult grad(const ModelParams& params, const PatchSeq& patchseq,
                const LossInput& input = {});

enum class FreezeMode { HeadOnly, Full };

struct TrainerConfig {
  double lr = 1e-3;
  std::size_t steps = 100;
  std::size_t batch = 4;
  std::uint64_t seed = 0;
  FreezeMode freeze = FreezeMode::Full;
  // fixed adaptive-moment defaults
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct TrainItem {
  PatchSeq patches;
  std::optional<double> label;
};

struct TrainResult {
  ModelParams params;
  std::vector<double> loss_trace;  // pre-update loss per step
};

TrainResult train(const ModelParams& params, const std::vector<TrainItem>& data,
                  const TrainerConfig& trainer);

// Mean Shannon entropy of the attention rows, one value per layer per head.
// Rows must sum to 1 within 1e-6. Zero entries contribute 0.
std::vector<std::vector<double>> attention_entropy(const AttnMaps& maps);

double row_entropy(const double* row, std::size_t n);

// Versioned JSON checkpoint: config header plus a named tensor map.
void save_checkpoint(const std::string& path, const ModelParams& params);
ModelParams load_checkpoint(const std::string& path);

}  // namespace ppgbench
