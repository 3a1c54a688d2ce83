#include "gern/gcn.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include "gern/error.hpp"

namespace gern {

template <class T>
std::vector<std::size_t> GcnModel<T>::dims() const {
  std::vector<std::size_t> out;
  if (weights.empty()) return out;
  out.push_back(weights.front().rows());
  for (const auto& w : weights) out.push_back(w.cols());
  return out;
}

template <class T>
GcnModel<T> glorot_init(std::span<const std::size_t> dims, double dropout, RngStream& rng) {
  if (dims.size() < 2) throw Error(ErrorKind::InvalidDims, "need at least two layer sizes");
  for (std::size_t d : dims) {
    if (d == 0) throw Error(ErrorKind::InvalidDims, "layer sizes must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "dropout must lie in [0, 1)");
  }
  GcnModel<T> model;
  model.dropout = dropout;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const double bound = std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
    Matrix<T> w(dims[l], dims[l + 1]);
    for (T& v : w.values()) v = static_cast<T>(bound * (2.0 * rng.uniform01() - 1.0));
    model.weights.push_back(std::move(w));
  }
  return model;
}

namespace {

template <class T>
void require_shapes(const GcnModel<T>& model, const NormalizedAdjacency& adjacency,
                    const Matrix<T>& features) {
  if (model.weights.empty()) throw Error(ErrorKind::InvalidDims, "model has no layers");
  if (features.rows() != adjacency.node_count()) {
    throw Error(ErrorKind::ShapeMismatch, "feature rows " + std::to_string(features.rows()) +
                                              " != graph nodes " +
                                              std::to_string(adjacency.node_count()));
  }
  if (features.cols() != model.weights.front().rows()) {
    throw Error(ErrorKind::ShapeMismatch, "feature width " + std::to_string(features.cols()) +
                                              " != input width " +
                                              std::to_string(model.weights.front().rows()));
  }
}

template <class T>
void relu_in_place(Matrix<T>& m) {
  for (T& v : m.values()) v = v > T{0} ? v : T{0};
}

template <class T>
void require_finite(const Matrix<T>& m, std::size_t layer) {
  if (!m.all_finite()) {
    throw Error(ErrorKind::NonFiniteActivation,
                "non-finite activation in layer " + std::to_string(layer));
  }
}

}  // namespace

template <class T>
Matrix<T> log_softmax(const Matrix<T>& logits) {
  Matrix<T> out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    const T peak = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (T v : row) sum += std::exp(static_cast<double>(v - peak));
    const double log_norm = static_cast<double>(peak) + std::log(sum);
    auto dst = out.row(i);
    for (std::size_t c = 0; c < row.size(); ++c) {
      dst[c] = static_cast<T>(static_cast<double>(row[c]) - log_norm);
    }
  }
  return out;
}

template <class T>
ForwardCache<T> gcn_forward(const GcnModel<T>& model, const NormalizedAdjacency& adjacency,
                            const Matrix<T>& features, bool training, RngStream& rng) {
  require_shapes(model, adjacency, features);
  ForwardCache<T> cache;
  cache.adjacency = &adjacency;
  cache.model_version = model.version;
  const bool use_dropout = training && model.dropout > 0.0;
  cache.keep_probability = use_dropout ? 1.0 - model.dropout : 1.0;
  const T inv_keep = static_cast<T>(1.0 / cache.keep_probability);

  Matrix<T> h = features;
  const std::size_t layers = model.layer_count();
  for (std::size_t l = 0; l < layers; ++l) {
    if (use_dropout) {
      std::vector<std::uint8_t> mask(h.size());
      auto values = h.values();
      for (std::size_t k = 0; k < values.size(); ++k) {
        mask[k] = rng.bernoulli(cache.keep_probability) ? 1 : 0;
        values[k] = mask[k] ? values[k] * inv_keep : T{0};
      }
      cache.keep_masks.push_back(std::move(mask));
    }
    Matrix<T> projected;
    kernels::gemm(h, model.weights[l], projected);
    Matrix<T> z;
    kernels::spmm(adjacency, projected, z);
    require_finite(z, l);
    cache.inputs.push_back(std::move(h));
    if (l + 1 < layers) {
      h = z;
      relu_in_place(h);
    }
    cache.pre_activations.push_back(std::move(z));
  }
  cache.outputs = cache.pre_activations.back();
  cache.log_probs = log_softmax(cache.outputs);
  return cache;
}

template <class T>
Matrix<T> gcn_propagate(const GcnModel<T>& model, const NormalizedAdjacency& adjacency,
                        const Matrix<T>& features) {
  require_shapes(model, adjacency, features);
  Matrix<T> h = features;
  Matrix<T> projected;
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    kernels::gemm(h, model.weights[l], projected);
    kernels::spmm(adjacency, projected, h);
    require_finite(h, l);
    if (l + 1 < model.layer_count()) relu_in_place(h);
  }
  return h;
}

template <class T>
Matrix<T> gcn_propagate_blockwise(const GcnModel<T>& model, const NormalizedAdjacency& adjacency,
                                  const Matrix<T>& features, std::size_t block_rows) {
  require_shapes(model, adjacency, features);
  if (block_rows == 0) throw Error(ErrorKind::InvalidArgument, "block size must be positive");
  const std::size_t n = features.rows();
  Matrix<T> h = features;
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    const Matrix<T>& w = model.weights[l];
    Matrix<T> projected(n, w.cols());
    for (std::size_t b = 0; b < n; b += block_rows) {
      kernels::gemm_rows(h, w, projected, b, std::min(n, b + block_rows));
    }
    Matrix<T> next(n, w.cols());
    for (std::size_t b = 0; b < n; b += block_rows) {
      const std::size_t e = std::min(n, b + block_rows);
      kernels::spmm_rows(adjacency, projected, next, b, e);
      if (l + 1 < model.layer_count()) {
        for (std::size_t i = b; i < e; ++i) {
          for (T& v : next.row(i)) v = v > T{0} ? v : T{0};
        }
      }
    }
    require_finite(next, l);
    h = std::move(next);
  }
  return h;
}

template <class T>
double cross_entropy_loss(const Matrix<T>& log_probs, const Labels& y,
                          std::span<const NodeId> subset) {
  if (subset.empty()) throw Error(ErrorKind::EmptySubset, "loss over an empty node set");
  if (y.size() != log_probs.rows()) {
    throw Error(ErrorKind::LengthMismatch, "labels and log-probability rows differ");
  }
  double total = 0.0;
  for (NodeId i : subset) total -= static_cast<double>(log_probs(i, y[i]));
  return total / static_cast<double>(subset.size());
}

template <class T>
Gradients<T> gcn_backward(const GcnModel<T>& model, const ForwardCache<T>& cache,
                          const Labels& y, std::span<const NodeId> subset) {
  if (cache.adjacency == nullptr || cache.model_version != model.version ||
      cache.inputs.size() != model.layer_count()) {
    throw Error(ErrorKind::StaleCache, "forward cache does not belong to the current model");
  }
  if (subset.empty()) throw Error(ErrorKind::EmptySubset, "gradient over an empty node set");
  const Matrix<T>& log_probs = cache.log_probs;
  if (y.size() != log_probs.rows()) {
    throw Error(ErrorKind::LengthMismatch, "labels and log-probability rows differ");
  }

  const double scale = 1.0 / static_cast<double>(subset.size());
  Matrix<T> delta(log_probs.rows(), log_probs.cols(), T{0});
  for (NodeId i : subset) {
    auto row = delta.row(i);
    const auto lp = log_probs.row(i);
    for (std::size_t c = 0; c < row.size(); ++c) {
      row[c] += static_cast<T>(std::exp(static_cast<double>(lp[c])) * scale);
    }
    row[static_cast<std::size_t>(y[i])] -= static_cast<T>(scale);
  }

  const std::size_t layers = model.layer_count();
  Gradients<T> grads(layers);
  const T inv_keep = static_cast<T>(1.0 / cache.keep_probability);
  Matrix<T> aggregated;
  Matrix<T> upstream;
  for (std::size_t l = layers; l-- > 0;) {
    // A_hat is symmetric, so A_hat^T * delta == A_hat * delta.
    kernels::spmm(*cache.adjacency, delta, aggregated);
    kernels::gemm_tn(cache.inputs[l], aggregated, grads[l]);
    if (l == 0) break;
    kernels::gemm_nt(aggregated, model.weights[l], upstream);
    auto up = upstream.values();
    if (!cache.keep_masks.empty()) {
      const auto& mask = cache.keep_masks[l];
      for (std::size_t k = 0; k < up.size(); ++k) up[k] = mask[k] ? up[k] * inv_keep : T{0};
    }
    const auto pre = cache.pre_activations[l - 1].values();
    for (std::size_t k = 0; k < up.size(); ++k) {
      if (!(pre[k] > T{0})) up[k] = T{0};
    }
    delta = std::move(upstream);
    upstream = Matrix<T>();
  }
  return grads;
}

template <class T>
AdamState<T> AdamState<T>::zeros_like(const GcnModel<T>& model) {
  AdamState<T> s;
  for (const auto& w : model.weights) {
    s.first_moment.emplace_back(w.rows(), w.cols(), T{0});
    s.second_moment.emplace_back(w.rows(), w.cols(), T{0});
  }
  return s;
}

template <class T>
void adam_step(GcnModel<T>& model, const Gradients<T>& grads, AdamState<T>& state, double lr,
               double weight_decay) {
  const std::size_t layers = model.layer_count();
  if (grads.size() != layers || state.first_moment.size() != layers ||
      state.second_moment.size() != layers) {
    throw Error(ErrorKind::ShapeMismatch, "gradient / optimizer layer count mismatch");
  }
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& w = model.weights[l];
    const std::array<const Matrix<T>*, 3> shaped{&grads[l], &state.first_moment[l],
                                                 &state.second_moment[l]};
    for (const Matrix<T>* m : shaped) {
      if (m->rows() != w.rows() || m->cols() != w.cols()) {
        throw Error(ErrorKind::ShapeMismatch, "gradient shape differs from layer " +
                                                  std::to_string(l));
      }
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t l = 0; l < layers; ++l) {
    auto w = model.weights[l].values();
    const auto g = grads[l].values();
    auto m = state.first_moment[l].values();
    auto v = state.second_moment[l].values();
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double grad = static_cast<double>(g[k]) + weight_decay * static_cast<double>(w[k]);
      const double mk = state.beta1 * static_cast<double>(m[k]) + (1.0 - state.beta1) * grad;
      const double vk =
          state.beta2 * static_cast<double>(v[k]) + (1.0 - state.beta2) * grad * grad;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double m_hat = mk / correction1;
      const double v_hat = vk / correction2;
      w[k] = static_cast<T>(static_cast<double>(w[k]) -
                            lr * m_hat / (std::sqrt(v_hat) + state.epsilon));
    }
  }
  ++model.version;
}

template <class T>
std::vector<std::int32_t> argmax_rows(const Matrix<T>& m) {
  std::vector<std::int32_t> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto row = m.row(i);
    out[i] = static_cast<std::int32_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

namespace {

constexpr std::array<char, 8> kCheckpointMagic{'G', 'E', 'R', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <class V>
void write_pod(std::ostream& out, V value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(V));
}

template <class V>
V read_pod(std::istream& in) {
  V value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(V));
  if (!in) throw Error(ErrorKind::ParseError, "truncated checkpoint");
  return value;
}

}  // namespace

void save_checkpoint(const GcnModel<float>& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  write_pod<std::uint32_t>(out, kCheckpointVersion);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(model.layer_count()));
  for (std::size_t d : model.dims()) write_pod<std::uint64_t>(out, d);
  write_pod<double>(out, model.dropout);
  for (const auto& w : model.weights) {
    out.write(reinterpret_cast<const char*>(w.data()),
              static_cast<std::streamsize>(w.size() * sizeof(float)));
  }
  if (!out) throw Error(ErrorKind::IoError, "failed writing " + path.string());
}

GcnModel<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingFile, path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kCheckpointMagic) {
    throw Error(ErrorKind::ParseError, path.string() + " is not a checkpoint");
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::ParseError, "unsupported checkpoint version " + std::to_string(version));
  }
  const auto layers = read_pod<std::uint32_t>(in);
  if (layers == 0 || layers > 1024) throw Error(ErrorKind::ParseError, "bad layer count");
  std::vector<std::size_t> dims;
  for (std::uint32_t l = 0; l <= layers; ++l) dims.push_back(read_pod<std::uint64_t>(in));
  GcnModel<float> model;
  model.dropout = read_pod<double>(in);
  for (std::uint32_t l = 0; l < layers; ++l) {
    Matrix<float> w(dims[l], dims[l + 1]);
    in.read(reinterpret_cast<char*>(w.data()), static_cast<std::streamsize>(w.size() * sizeof(float)));
    if (!in) throw Error(ErrorKind::ParseError, "truncated checkpoint weights");
    model.weights.push_back(std::move(w));
  }
  return model;
}

#define GERN_INSTANTIATE(T)                                                                     \
  template struct GcnModel<T>;                                                                  \
  template struct AdamState<T>;                                                                 \
  template GcnModel<T> glorot_init<T>(std::span<const std::size_t>, double, RngStream&);       \
  template ForwardCache<T> gcn_forward<T>(const GcnModel<T>&, const NormalizedAdjacency&,      \
                                          const Matrix<T>&, bool, RngStream&);                 \
  template Matrix<T> gcn_propagate<T>(const GcnModel<T>&, const NormalizedAdjacency&,          \
                                      const Matrix<T>&);                                       \
  template Matrix<T> gcn_propagate_blockwise<T>(const GcnModel<T>&, const NormalizedAdjacency&, \
                                                const Matrix<T>&, std::size_t);                \
  template Matrix<T> log_softmax<T>(const Matrix<T>&);                                          \
  template double cross_entropy_loss<T>(const Matrix<T>&, const Labels&,                       \
                                        std::span<const NodeId>);                              \
  template Gradients<T> gcn_backward<T>(const GcnModel<T>&, const ForwardCache<T>&,            \
                                        const Labels&, std::span<const NodeId>);               \
  template void adam_step<T>(GcnModel<T>&, const Gradients<T>&, AdamState<T>&, double, double); \
  template std::vector<std::int32_t> argmax_rows<T>(const Matrix<T>&);

GERN_INSTANTIATE(float)
GERN_INSTANTIATE(double)
#undef GERN_INSTANTIATE

}  // namespace gern
