#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "gern/graph.hpp"
#include "gern/kernels.hpp"
#include "gern/matrix.hpp"
#include "gern/rng.hpp"

namespace gern {

/// Stack of GCN layers. weights[l] maps width dims[l] to dims[l + 1]; hidden
/// layers use ReLU and the last layer feeds log-softmax directly.
template <class T>
struct GcnModel {
  std::vector<Matrix<T>> weights;
  double dropout = 0.5;
  /// Bumped by every parameter update; forward caches remember it.
  std::uint64_t version = 0;

  std::size_t layer_count() const noexcept { return weights.size(); }
  std::vector<std::size_t> dims() const;

  template <class U>
  GcnModel<U> cast() const {
    GcnModel<U> out;
    out.dropout = dropout;
    for (const auto& w : weights) out.weights.push_back(w.template cast<U>());
    return out;
  }
};

/// Per-layer weight gradients, shaped like GcnModel::weights.
template <class T>
using Gradients = std::vector<Matrix<T>>;

/// Uniform(-a, a) weights with a = sqrt(6 / (fan_in + fan_out)).
/// Throws InvalidDims when fewer than two sizes or a zero size is given.
template <class T>
GcnModel<T> glorot_init(std::span<const std::size_t> dims, double dropout, RngStream& rng);

/// Everything the backward pass needs from one forward pass.
template <class T>
struct ForwardCache {
  const NormalizedAdjacency* adjacency = nullptr;
  std::uint64_t model_version = 0;
  double keep_probability = 1.0;
  std::vector<Matrix<T>> inputs;           // layer inputs after dropout
  std::vector<std::vector<std::uint8_t>> keep_masks;  // empty when dropout inactive
  std::vector<Matrix<T>> pre_activations;  // A_hat * input * W, per layer
  Matrix<T> outputs;                       // last pre-activation (logits)
  Matrix<T> log_probs;
};

/// Full forward pass over the graph behind `adjacency`. Dropout (inverted
/// scaling) is applied to every layer input only when `training` is set.
/// Throws ShapeMismatch or NonFiniteActivation. The cache keeps a pointer
/// to `adjacency`, which must outlive it.
template <class T>
ForwardCache<T> gcn_forward(const GcnModel<T>& model, const NormalizedAdjacency& adjacency,
                            const Matrix<T>& features, bool training, RngStream& rng);

/// Final-layer representations without log-softmax, dropout off.
template <class T>
Matrix<T> gcn_propagate(const GcnModel<T>& model, const NormalizedAdjacency& adjacency,
                        const Matrix<T>& features);

/// Same values as gcn_propagate, computed layer by layer over blocks of
/// `block_rows` output nodes.
template <class T>
Matrix<T> gcn_propagate_blockwise(const GcnModel<T>& model, const NormalizedAdjacency& adjacency,
                                  const Matrix<T>& features, std::size_t block_rows);

template <class T>
Matrix<T> log_softmax(const Matrix<T>& logits);

/// Mean of -log_probs[i, y_i] over `subset`. Throws EmptySubset.
template <class T>
double cross_entropy_loss(const Matrix<T>& log_probs, const Labels& y,
                          std::span<const NodeId> subset);

/// Reverse-mode gradient of cross_entropy_loss with respect to every
/// weight matrix. Throws StaleCache if the model changed since the forward.
template <class T>
Gradients<T> gcn_backward(const GcnModel<T>& model, const ForwardCache<T>& cache,
                          const Labels& y, std::span<const NodeId> subset);

template <class T>
struct AdamState {
  std::vector<Matrix<T>> first_moment;
  std::vector<Matrix<T>> second_moment;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState zeros_like(const GcnModel<T>& model);
};

/// One bias-corrected Adam update. Weight decay is coupled: lambda * W is
/// added to the gradient before the moment update.
template <class T>
void adam_step(GcnModel<T>& model, const Gradients<T>& grads, AdamState<T>& state, double lr,
               double weight_decay);

/// Index of the largest entry per row (lowest index on ties).
template <class T>
std::vector<std::int32_t> argmax_rows(const Matrix<T>& m);

/// Binary checkpoint: "GERNCKPT", u32 version, u32 layer count, u64 dims
/// (layers + 1), f64 dropout, then each layer's row-major f32 weights.
/// All little-endian.
void save_checkpoint(const GcnModel<float>& model, const std::filesystem::path& path);
GcnModel<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace gern
