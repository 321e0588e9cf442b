#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sonarcount/raster.hpp"
#include "sonarcount/seed_stream.hpp"
#include "sonarcount/tensor.hpp"

namespace sonarcount {

enum class HeadMode { regression, classification };

inline const char* to_string(HeadMode m) { return m == HeadMode::regression ? "regression" : "classification"; }

inline HeadMode head_mode_from_string(const std::string& s) {
  if (s == "regression") return HeadMode::regression;
  if (s == "classification") return HeadMode::classification;
  throw std::invalid_argument("unknown head mode '" + s + "'");
}

/// Shape of the counter: a stack of (conv 3x3 -> ReLU -> maxpool 2) blocks,
/// one hidden dense layer, and the fish and dolphin heads.
struct Architecture {
  int input_size = 224;
  std::vector<int> conv_channels{16, 32, 64};
  int dense_units = 128;
  int max_fish = 34;
  int max_dolphin = 3;
  HeadMode head_mode = HeadMode::regression;

  int fish_outputs() const { return head_mode == HeadMode::regression ? 1 : max_fish + 1; }
  int dolphin_outputs() const { return head_mode == HeadMode::regression ? 1 : max_dolphin + 1; }
  int final_spatial() const { return input_size >> conv_channels.size(); }
  int flat_size() const { return final_spatial() * final_spatial() * conv_channels.back(); }

  std::string validate() const {
    if (conv_channels.empty()) return "at least one conv block is required";
    for (int c : conv_channels) {
      if (c < 1) return "conv channel counts must be >= 1";
    }
    if (input_size < 1 || input_size % (1 << conv_channels.size()) != 0) {
      return "input size must be a positive multiple of 2^(number of conv blocks)";
    }
    if (dense_units < 1) return "dense units must be >= 1";
    if (max_fish < 1 || max_dolphin < 1) return "count maxima must be >= 1";
    return {};
  }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// Uniform Glorot draw in [-b, b], b = sqrt(6 / (fan_in + fan_out)). The
/// last two dimensions are (in, out); leading dimensions form the receptive
/// field.
template <typename T>
Tensor<T> xavier_init(const Shape& shape, SeedStream stream) {
  if (shape.empty()) throw std::invalid_argument("xavier_init: empty shape");
  if (shape.size() < 2) throw std::invalid_argument("xavier_init: weight tensors need >= 2 dimensions");
  std::size_t receptive = 1;
  for (std::size_t i = 0; i + 2 < shape.size(); ++i) receptive *= shape[i];
  const double fan_in = static_cast<double>(receptive * shape[shape.size() - 2]);
  const double fan_out = static_cast<double>(receptive * shape.back());
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  Tensor<T> t(shape);
  for (auto& v : t.values) v = static_cast<T>(stream.uniform(-bound, bound));
  return t;
}

inline double xavier_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

struct CountLabel {
  int fish = 0;
  int dolphin = 0;
  friend bool operator==(const CountLabel&, const CountLabel&) = default;
};

struct CountEstimate {
  double fish = 0.0;
  double dolphin = 0.0;
};

template <typename T>
struct HeadOutputs {
  // Regression: N x 1 raw values. Classification: N x K softmax rows.
  Tensor<T> fish;
  Tensor<T> dolphin;
};

template <typename T>
struct LossValue {
  T fish = 0;
  T dolphin = 0;
  T total() const { return fish + dolphin; }
};

/// Parameter layout, in order: for each conv block (weight [3,3,in,out],
/// bias [out]); dense (weight [flat,units], bias); fish head; dolphin head.
template <typename T>
class CensusModel {
 public:
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatMap = Eigen::Map<Matrix>;
  using ConstMatMap = Eigen::Map<const Matrix>;
  using RowVecMap = Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>;
  // Fixed summation order, independent of buffer alignment.
  static void column_sums(const T* m, std::size_t rows, std::size_t cols, T* out) {
    std::fill(out, out + cols, T(0));
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) out[c] += m[r * cols + c];
  }

  CensusModel() = default;

  /// All tensors zero; see initialized() for Xavier-initialized weights.
  explicit CensusModel(Architecture arch) : arch_(std::move(arch)) {
    if (auto err = arch_.validate(); !err.empty()) throw std::invalid_argument("architecture: " + err);
    int in = 3;
    for (int out : arch_.conv_channels) {
      params_.emplace_back(Shape{3, 3, static_cast<std::size_t>(in), static_cast<std::size_t>(out)});
      params_.emplace_back(Shape{static_cast<std::size_t>(out)});
      in = out;
    }
    const auto units = static_cast<std::size_t>(arch_.dense_units);
    params_.emplace_back(Shape{static_cast<std::size_t>(arch_.flat_size()), units});
    params_.emplace_back(Shape{units});
    params_.emplace_back(Shape{units, static_cast<std::size_t>(arch_.fish_outputs())});
    params_.emplace_back(Shape{static_cast<std::size_t>(arch_.fish_outputs())});
    params_.emplace_back(Shape{units, static_cast<std::size_t>(arch_.dolphin_outputs())});
    params_.emplace_back(Shape{static_cast<std::size_t>(arch_.dolphin_outputs())});
  }

  /// Weights Xavier-uniform from stream.child(parameter index); biases zero.
  static CensusModel initialized(Architecture arch, const SeedStream& stream) {
    CensusModel m(std::move(arch));
    for (std::size_t i = 0; i < m.params_.size(); ++i) {
      if (m.params_[i].shape.size() >= 2) m.params_[i] = xavier_init<T>(m.params_[i].shape, stream.child(i));
    }
    return m;
  }

  const Architecture& architecture() const { return arch_; }
  std::vector<Tensor<T>>& parameters() { return params_; }
  const std::vector<Tensor<T>>& parameters() const { return params_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.size();
    return n;
  }

  std::size_t conv_blocks() const { return arch_.conv_channels.size(); }
  std::size_t dense_index() const { return 2 * conv_blocks(); }
  std::size_t fish_index() const { return dense_index() + 2; }
  std::size_t dolphin_index() const { return dense_index() + 4; }

  template <typename U>
  CensusModel<U> cast() const {
    CensusModel<U> m(arch_);
    for (std::size_t i = 0; i < params_.size(); ++i) m.parameters()[i] = params_[i].template cast<U>();
    return m;
  }

  friend bool operator==(const CensusModel&, const CensusModel&) = default;

  // -------------------------------------------------------------------------
  // Forward / backward
  // -------------------------------------------------------------------------

  struct ConvCache {
    int size = 0;  // spatial size of the block input
    int in_channels = 0;
    int out_channels = 0;
    std::vector<T> cols;    // (N*S*S) x (9*in)
    std::vector<T> act;     // post-ReLU (N*S*S) x out
    std::vector<std::uint32_t> argmax;  // per pooled output, flat index into act
    std::vector<T> pooled;  // N x S/2 x S/2 x out
  };

  struct Cache {
    std::size_t batch = 0;
    std::vector<ConvCache> conv;
    std::vector<T> hidden;  // post-ReLU N x units
    HeadOutputs<T> heads;
  };

  void check_batch(const Tensor<T>& batch) const {
    const auto s = static_cast<std::size_t>(arch_.input_size);
    if (batch.shape.size() != 4 || batch.shape[1] != s || batch.shape[2] != s || batch.shape[3] != 3) {
      throw std::invalid_argument("forward: expected batch [N x " + std::to_string(s) + " x " + std::to_string(s) +
                                  " x 3], got " + shape_string(batch.shape));
    }
    if (batch.shape[0] == 0) throw std::invalid_argument("forward: empty batch");
  }

  HeadOutputs<T> forward(const Tensor<T>& batch) const {
    Cache cache;
    run_forward(batch, cache, false);
    return std::move(cache.heads);
  }

  void run_forward(const Tensor<T>& batch, Cache& cache, bool keep) const {
    check_batch(batch);
    const std::size_t n = batch.shape[0];
    cache.batch = n;
    cache.conv.clear();
    std::vector<T> x = batch.values;
    int size = arch_.input_size;
    int in = 3;
    for (std::size_t b = 0; b < conv_blocks(); ++b) {
      ConvCache cc;
      cc.size = size;
      cc.in_channels = in;
      cc.out_channels = arch_.conv_channels[b];
      conv_forward(x, n, params_[2 * b], params_[2 * b + 1], cc);
      x = cc.pooled;
      if (!keep) {
        cc.cols.clear();
        cc.cols.shrink_to_fit();
        cc.act.clear();
        cc.act.shrink_to_fit();
      }
      cache.conv.push_back(std::move(cc));
      size /= 2;
      in = arch_.conv_channels[b];
    }
    // After the last block x is N x flat (NHWC flattening).
    const auto flat = static_cast<Eigen::Index>(arch_.flat_size());
    const auto units = static_cast<Eigen::Index>(arch_.dense_units);
    const auto rows = static_cast<Eigen::Index>(n);
    cache.hidden.assign(n * static_cast<std::size_t>(units), T(0));
    {
      ConstMatMap X(x.data(), rows, flat);
      ConstMatMap W(params_[dense_index()].data(), flat, units);
      MatMap H(cache.hidden.data(), rows, units);
      H.noalias() = X * W;
      H.rowwise() += RowVecMap(params_[dense_index() + 1].data(), units);
      H = H.cwiseMax(T(0));
    }
    cache.heads.fish = head_forward(cache.hidden, n, fish_index());
    cache.heads.dolphin = head_forward(cache.hidden, n, dolphin_index());
  }

  /// Mean over the batch of (fish-task loss + dolphin-task loss).
  LossValue<T> loss(const Tensor<T>& batch, const std::vector<CountLabel>& labels) const {
    return loss_from_heads(forward(batch), labels);
  }

  LossValue<T> loss_from_heads(const HeadOutputs<T>& h, const std::vector<CountLabel>& labels) const {
    check_labels(labels, h.fish.shape[0]);
    const std::size_t n = labels.size();
    LossValue<T> out;
    if (arch_.head_mode == HeadMode::regression) {
      for (std::size_t i = 0; i < n; ++i) {
        const T df = h.fish[i] - static_cast<T>(labels[i].fish) / static_cast<T>(arch_.max_fish);
        const T dd = h.dolphin[i] - static_cast<T>(labels[i].dolphin) / static_cast<T>(arch_.max_dolphin);
        out.fish += df * df;
        out.dolphin += dd * dd;
      }
    } else {
      const std::size_t kf = h.fish.shape[1], kd = h.dolphin.shape[1];
      for (std::size_t i = 0; i < n; ++i) {
        out.fish -= std::log(std::max(h.fish[i * kf + static_cast<std::size_t>(labels[i].fish)],
                                      std::numeric_limits<T>::min()));
        out.dolphin -= std::log(std::max(h.dolphin[i * kd + static_cast<std::size_t>(labels[i].dolphin)],
                                         std::numeric_limits<T>::min()));
      }
    }
    out.fish /= static_cast<T>(n);
    out.dolphin /= static_cast<T>(n);
    return out;
  }

  struct Gradients {
    LossValue<T> loss;
    std::vector<Tensor<T>> grads;
  };

  /// Loss and d(loss)/d(parameter) for every parameter tensor.
  Gradients backward(const Tensor<T>& batch, const std::vector<CountLabel>& labels) const {
    Cache cache;
    run_forward(batch, cache, true);
    Gradients g;
    g.loss = loss_from_heads(cache.heads, labels);
    for (const auto& p : params_) g.grads.emplace_back(p.shape);

    const std::size_t n = cache.batch;
    const T inv_n = T(1) / static_cast<T>(n);
    // dL/d(head pre-activation).
    Tensor<T> dfish = cache.heads.fish, ddolphin = cache.heads.dolphin;
    if (arch_.head_mode == HeadMode::regression) {
      for (std::size_t i = 0; i < n; ++i) {
        dfish[i] = T(2) * inv_n * (dfish[i] - static_cast<T>(labels[i].fish) / static_cast<T>(arch_.max_fish));
        ddolphin[i] =
            T(2) * inv_n * (ddolphin[i] - static_cast<T>(labels[i].dolphin) / static_cast<T>(arch_.max_dolphin));
      }
    } else {
      const std::size_t kf = dfish.shape[1], kd = ddolphin.shape[1];
      for (std::size_t i = 0; i < n; ++i) {
        dfish[i * kf + static_cast<std::size_t>(labels[i].fish)] -= T(1);
        ddolphin[i * kd + static_cast<std::size_t>(labels[i].dolphin)] -= T(1);
      }
      for (auto& v : dfish.values) v *= inv_n;
      for (auto& v : ddolphin.values) v *= inv_n;
    }

    const auto units = static_cast<Eigen::Index>(arch_.dense_units);
    const auto rows = static_cast<Eigen::Index>(n);
    std::vector<T> dhidden(n * static_cast<std::size_t>(units), T(0));
    head_backward(cache.hidden, dfish, fish_index(), g.grads, dhidden);
    head_backward(cache.hidden, ddolphin, dolphin_index(), g.grads, dhidden);

    // Dense layer (ReLU applied to its output).
    for (std::size_t i = 0; i < dhidden.size(); ++i) {
      if (cache.hidden[i] <= T(0)) dhidden[i] = T(0);
    }
    const auto flat = static_cast<Eigen::Index>(arch_.flat_size());
    const auto& last = cache.conv.back();
    std::vector<T> dx(n * static_cast<std::size_t>(flat), T(0));
    {
      ConstMatMap X(last.pooled.data(), rows, flat);
      ConstMatMap dH(dhidden.data(), rows, units);
      MatMap dW(g.grads[dense_index()].data(), flat, units);
      dW.noalias() = X.transpose() * dH;
      column_sums(dhidden.data(), n, static_cast<std::size_t>(units), g.grads[dense_index() + 1].data());
      ConstMatMap W(params_[dense_index()].data(), flat, units);
      MatMap dX(dx.data(), rows, flat);
      dX.noalias() = dH * W.transpose();
    }

    for (std::size_t b = conv_blocks(); b-- > 0;) {
      dx = conv_backward(dx, n, cache.conv[b], params_[2 * b], g.grads[2 * b], g.grads[2 * b + 1], b > 0);
    }
    return g;
  }

  // -------------------------------------------------------------------------
  // Inference
  // -------------------------------------------------------------------------

  /// Regression: denormalize by the count maximum and clamp to [0, max].
  /// Classification: argmax, ties going to the smaller index.
  std::vector<CountEstimate> estimates(const HeadOutputs<T>& h) const {
    const std::size_t n = h.fish.shape[0];
    std::vector<CountEstimate> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (arch_.head_mode == HeadMode::regression) {
        out[i].fish = std::clamp(static_cast<double>(h.fish[i]) * arch_.max_fish, 0.0, double(arch_.max_fish));
        out[i].dolphin =
            std::clamp(static_cast<double>(h.dolphin[i]) * arch_.max_dolphin, 0.0, double(arch_.max_dolphin));
      } else {
        out[i].fish = static_cast<double>(argmax_row(h.fish, i));
        out[i].dolphin = static_cast<double>(argmax_row(h.dolphin, i));
      }
    }
    return out;
  }

  CountEstimate predict_counts(const Raster& image) const {
    if (image.width() != arch_.input_size || image.height() != arch_.input_size || image.channels() != 3) {
      throw std::invalid_argument("predict_counts: image must be preprocessed to " +
                                  std::to_string(arch_.input_size) + "x" + std::to_string(arch_.input_size) + "x3");
    }
    Tensor<T> batch(Shape{1, static_cast<std::size_t>(arch_.input_size), static_cast<std::size_t>(arch_.input_size), 3});
    std::copy(image.pixels().begin(), image.pixels().end(), batch.values.begin());
    return estimates(forward(batch)).front();
  }

  static std::size_t argmax_row(const Tensor<T>& t, std::size_t row) {
    const std::size_t k = t.shape[1];
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j) {
      if (t[row * k + j] > t[row * k + best]) best = j;
    }
    return best;
  }

 private:
  void check_labels(const std::vector<CountLabel>& labels, std::size_t n) const {
    if (labels.size() != n) throw std::invalid_argument("loss: label count does not match batch");
    for (const auto& l : labels) {
      if (l.fish < 0 || l.fish > arch_.max_fish || l.dolphin < 0 || l.dolphin > arch_.max_dolphin) {
        throw std::invalid_argument("loss: label (" + std::to_string(l.fish) + ", " + std::to_string(l.dolphin) +
                                    ") outside [0," + std::to_string(arch_.max_fish) + "]x[0," +
                                    std::to_string(arch_.max_dolphin) + "]");
      }
    }
  }

  void conv_forward(const std::vector<T>& x, std::size_t n, const Tensor<T>& w, const Tensor<T>& bias,
                    ConvCache& cc) const {
    const int s = cc.size, cin = cc.in_channels, cout = cc.out_channels;
    const std::size_t pixels = n * static_cast<std::size_t>(s) * s;
    const std::size_t k = 9 * static_cast<std::size_t>(cin);
    cc.cols.assign(pixels * k, T(0));
    for (std::size_t img = 0; img < n; ++img) {
      for (int y = 0; y < s; ++y) {
        for (int xx = 0; xx < s; ++xx) {
          T* row = cc.cols.data() + ((img * s + y) * s + xx) * k;
          for (int ky = 0; ky < 3; ++ky) {
            const int sy = y + ky - 1;
            if (sy < 0 || sy >= s) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int sx = xx + kx - 1;
              if (sx < 0 || sx >= s) continue;
              const T* src = x.data() + ((img * s + sy) * s + sx) * cin;
              std::copy(src, src + cin, row + (ky * 3 + kx) * cin);
            }
          }
        }
      }
    }
    cc.act.assign(pixels * cout, T(0));
    {
      ConstMatMap C(cc.cols.data(), static_cast<Eigen::Index>(pixels), static_cast<Eigen::Index>(k));
      ConstMatMap W(w.data(), static_cast<Eigen::Index>(k), cout);
      MatMap A(cc.act.data(), static_cast<Eigen::Index>(pixels), cout);
      A.noalias() = C * W;
      A.rowwise() += RowVecMap(bias.data(), cout);
      A = A.cwiseMax(T(0));
    }
    const int half = s / 2;
    cc.pooled.assign(n * static_cast<std::size_t>(half) * half * cout, T(0));
    cc.argmax.assign(cc.pooled.size(), 0);
    for (std::size_t img = 0; img < n; ++img) {
      for (int y = 0; y < half; ++y) {
        for (int xx = 0; xx < half; ++xx) {
          const std::size_t o = ((img * half + y) * half + xx) * cout;
          for (int c = 0; c < cout; ++c) {
            std::size_t best = ((img * s + 2 * y) * s + 2 * xx) * cout + c;
            for (int dy = 0; dy < 2; ++dy) {
              for (int dx = 0; dx < 2; ++dx) {
                const std::size_t idx = ((img * s + 2 * y + dy) * s + 2 * xx + dx) * cout + c;
                if (cc.act[idx] > cc.act[best]) best = idx;
              }
            }
            cc.pooled[o + c] = cc.act[best];
            cc.argmax[o + c] = static_cast<std::uint32_t>(best);
          }
        }
      }
    }
  }

  // Returns dL/d(block input) when need_input_grad, else an empty vector.
  std::vector<T> conv_backward(const std::vector<T>& dpooled, std::size_t n, const ConvCache& cc,
                               const Tensor<T>& w, Tensor<T>& dw, Tensor<T>& db, bool need_input_grad) const {
    const int s = cc.size, cin = cc.in_channels, cout = cc.out_channels;
    const std::size_t pixels = n * static_cast<std::size_t>(s) * s;
    const std::size_t k = 9 * static_cast<std::size_t>(cin);
    std::vector<T> dact(pixels * cout, T(0));
    for (std::size_t i = 0; i < dpooled.size(); ++i) {
      // Max-pool routes the gradient to the winner; ReLU blocks it at zero.
      const auto idx = cc.argmax[i];
      if (cc.act[idx] > T(0)) dact[idx] += dpooled[i];
    }
    ConstMatMap C(cc.cols.data(), static_cast<Eigen::Index>(pixels), static_cast<Eigen::Index>(k));
    ConstMatMap dA(dact.data(), static_cast<Eigen::Index>(pixels), cout);
    MatMap(dw.data(), static_cast<Eigen::Index>(k), cout).noalias() = C.transpose() * dA;
    column_sums(dact.data(), pixels, static_cast<std::size_t>(cout), db.data());
    if (!need_input_grad) return {};

    std::vector<T> dcols(pixels * k, T(0));
    {
      ConstMatMap W(w.data(), static_cast<Eigen::Index>(k), cout);
      MatMap dC(dcols.data(), static_cast<Eigen::Index>(pixels), static_cast<Eigen::Index>(k));
      dC.noalias() = dA * W.transpose();
    }
    std::vector<T> dx(pixels * cin, T(0));
    for (std::size_t img = 0; img < n; ++img) {
      for (int y = 0; y < s; ++y) {
        for (int xx = 0; xx < s; ++xx) {
          const T* row = dcols.data() + ((img * s + y) * s + xx) * k;
          for (int ky = 0; ky < 3; ++ky) {
            const int sy = y + ky - 1;
            if (sy < 0 || sy >= s) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int sx = xx + kx - 1;
              if (sx < 0 || sx >= s) continue;
              T* dst = dx.data() + ((img * s + sy) * s + sx) * cin;
              const T* src = row + (ky * 3 + kx) * cin;
              for (int c = 0; c < cin; ++c) dst[c] += src[c];
            }
          }
        }
      }
    }
    return dx;
  }

  Tensor<T> head_forward(const std::vector<T>& hidden, std::size_t n, std::size_t index) const {
    const auto units = static_cast<Eigen::Index>(arch_.dense_units);
    const auto k = static_cast<Eigen::Index>(params_[index].shape[1]);
    Tensor<T> out(Shape{n, static_cast<std::size_t>(k)});
    ConstMatMap H(hidden.data(), static_cast<Eigen::Index>(n), units);
    ConstMatMap W(params_[index].data(), units, k);
    MatMap Z(out.data(), static_cast<Eigen::Index>(n), k);
    Z.noalias() = H * W;
    Z.rowwise() += RowVecMap(params_[index + 1].data(), k);
    if (arch_.head_mode == HeadMode::classification) {
      for (std::size_t i = 0; i < n; ++i) {
        T* row = out.data() + i * static_cast<std::size_t>(k);
        const T mx = *std::max_element(row, row + k);
        T sum = 0;
        for (Eigen::Index j = 0; j < k; ++j) sum += (row[j] = std::exp(row[j] - mx));
        for (Eigen::Index j = 0; j < k; ++j) row[j] /= sum;
      }
    }
    return out;
  }

  void head_backward(const std::vector<T>& hidden, const Tensor<T>& dz, std::size_t index,
                     std::vector<Tensor<T>>& grads, std::vector<T>& dhidden) const {
    const auto n = static_cast<Eigen::Index>(dz.shape[0]);
    const auto k = static_cast<Eigen::Index>(dz.shape[1]);
    const auto units = static_cast<Eigen::Index>(arch_.dense_units);
    ConstMatMap H(hidden.data(), n, units);
    ConstMatMap dZ(dz.data(), n, k);
    MatMap(grads[index].data(), units, k).noalias() = H.transpose() * dZ;
    column_sums(dz.data(), static_cast<std::size_t>(n), static_cast<std::size_t>(k), grads[index + 1].data());
    ConstMatMap W(params_[index].data(), units, k);
    MatMap(dhidden.data(), n, units).noalias() += dZ * W.transpose();
  }

  Architecture arch_;
  std::vector<Tensor<T>> params_;
};

/// Packs preprocessed rasters into an N x S x S x 3 batch.
template <typename T>
Tensor<T> make_batch(const std::vector<const Raster*>& images) {
  if (images.empty()) throw std::invalid_argument("make_batch: no images");
  const auto s = static_cast<std::size_t>(images.front()->width());
  Tensor<T> batch(Shape{images.size(), s, s, 3});
  std::size_t off = 0;
  for (const auto* r : images) {
    if (static_cast<std::size_t>(r->width()) != s || static_cast<std::size_t>(r->height()) != s || r->channels() != 3) {
      throw std::invalid_argument("make_batch: images must share a square 3-channel size");
    }
    std::copy(r->pixels().begin(), r->pixels().end(), batch.values.begin() + static_cast<std::ptrdiff_t>(off));
    off += r->size();
  }
  return batch;
}

}  // namespace sonarcount
