#pragma once

// Raw loss functions and a plain gradient-descent minimizer. This module
// does not call into spectral.hpp: it is the independent check on every
// closed-form solver.

#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "contrastlab/datagen.hpp"

namespace contrastlab {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class LossKind {
  SelfCon,            // random-masking self-supervised contrastive loss
  SupConHybrid,       // SelfCon + weighted supervised contrastive loss
  HsicTransfer,       // SelfCon - sum_t alpha_t HSIC_t
  Autoencoder,        // (1/n) ||X0 - D W X0||_F^2 on centered data
  MaskedAutoencoder,  // (1/2n) mean over masks of both views' reconstruction
};

std::string_view to_string(LossKind kind) noexcept;

enum class MaskPolicy {
  Fixed,     // average over LossData::masks
  Resample,  // minimize() draws one fresh mask pair per iteration
};

struct LossSpec {
  LossKind kind = LossKind::SelfCon;
  double lambda = 1.0;        // weight of (lambda/2) ||W W^T||_F^2
  std::vector<double> alpha;  // per class (SupConHybrid) or per task (HsicTransfer)
  MaskPolicy mask_policy = MaskPolicy::Fixed;

  void validate() const;
};

/// Everything a loss may read. Unused members stay empty.
struct LossData {
  MatrixXd x;                          // d x n unlabeled samples (n may be 0 for SupConHybrid)
  std::vector<DiagMask> masks;         // views for the contrastive/masked terms
  std::vector<MatrixXd> class_blocks;  // SupConHybrid labeled classes
  std::vector<LabeledTask> tasks;      // HsicTransfer source tasks
  MatrixXd decoder;                    // d x r, autoencoder kinds only

  int dim() const;
};

struct LossValue {
  double value = 0.0;
  /// n = 1: the negative-pair sum is empty and contributes 0.
  bool empty_negatives = false;
};

/// The loss exactly as written, evaluated from per-sample inner products.
LossValue eval_loss(const LossSpec& spec, const MatrixXd& w, const LossData& data);

/// Analytic gradient with respect to the encoder W (r x d). For the
/// contrastive kinds this is -2 W S + 2 lambda W (W^T W).
MatrixXd loss_gradient(const LossSpec& spec, const MatrixXd& w, const LossData& data);

/// Gradient with respect to LossData::decoder (autoencoder kinds only).
MatrixXd decoder_gradient(const LossSpec& spec, const MatrixXd& w, const LossData& data);

/// The symmetric S with loss = -tr(S W^T W) + (lambda/2) ||W W^T||_F^2
/// (contrastive kinds only; masks averaged under the fixed policy).
MatrixXd loss_quadratic_form(const LossSpec& spec, const LossData& data);

/// Central differences, entrywise. Test helper.
MatrixXd finite_diff_gradient(const LossSpec& spec, const MatrixXd& w, const LossData& data,
                              double h);

struct GDConfig {
  double step_size = 1e-2;
  long max_iters = 10000;
  double grad_tol = 0.0;
  Seed seed = 0;  // mask stream for MaskPolicy::Resample

  void validate() const;
};

struct MinimizeResult {
  MatrixXd w;
  MatrixXd decoder;           // autoencoder kinds
  std::vector<double> trace;  // loss before each step, plus the final loss
  long iterations = 0;
  double final_grad_norm = 0.0;
  bool converged = false;     // stopped on grad_tol rather than max_iters
};

/// Plain gradient descent. Autoencoder kinds update encoder and decoder
/// jointly, starting from data.decoder (or init^T when it is empty).
/// Throws DivergenceError once the loss exceeds 1e12.
MinimizeResult minimize(const LossSpec& spec, const LossData& data, const MatrixXd& init,
                        const GDConfig& cfg);

/// Entries i.i.d. N(0, 1/d).
MatrixXd default_init(int r, int d, Seed seed);

/// 1e-2 divided by the spectral norm of the loss's data matrix (S for the
/// contrastive kinds, the normalized Gram for the autoencoders).
double default_step_size(const LossSpec& spec, const LossData& data);

}  // namespace contrastlab
