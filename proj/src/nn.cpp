// src/nn.cpp

// Copyright 2026  Xpress Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "xpress/error.hpp"
#include "xpress/nn.hpp"

namespace xpress {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void init_uniform(Tensor &t, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> dist(-0.05, 0.05);
  for (double &v : t.values) v = dist(rng);
}

Matrix as_matrix(const Tensor &t) {
  Matrix m;
  if (t.shape.size() == 2) {
    m.rows = t.shape[0];
    m.cols = t.shape[1];
  } else {
    m.rows = static_cast<int>(t.size());
    m.cols = 1;
  }
  m.data = t.values;
  return m;
}

// y += W^T x for row-major W (m x n), x of length m, y of length n.
void gemv_t_acc(const Tensor &w, const double *x, double *y) {
  int m = w.shape[0], n = w.shape[1];
  for (int r = 0; r < m; ++r) {
    double xr = x[r];
    if (xr == 0.0) continue;
    const double *row = w.values.data() + static_cast<size_t>(r) * n;
    for (int c = 0; c < n; ++c) y[c] += xr * row[c];
  }
}

// y += W x.
void gemv_acc(const Tensor &w, const double *x, double *y) {
  int m = w.shape[0], n = w.shape[1];
  for (int r = 0; r < m; ++r)
    y[r] += dot(w.values.data() + static_cast<size_t>(r) * n, x, n);
}

// W += outer(a, b).
void outer_acc(Tensor &w, const double *a, const double *b) {
  int m = w.shape[0], n = w.shape[1];
  for (int r = 0; r < m; ++r) {
    double ar = a[r];
    if (ar == 0.0) continue;
    double *row = w.values.data() + static_cast<size_t>(r) * n;
    for (int c = 0; c < n; ++c) row[c] += ar * b[c];
  }
}

void put_u32le(std::string &out, uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

uint32_t get_u32le(const uint8_t *p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

}  // namespace

const Tensor *Checkpoint::find(const std::string &name) const {
  for (const auto &[n, t] : tensors)
    if (n == name) return &t;
  return nullptr;
}

void save_checkpoint(const std::string &path, const Checkpoint &ckpt) {
  nlohmann::json manifest = nlohmann::json::array();
  for (const auto &[name, t] : ckpt.tensors)
    manifest.push_back({{"name", name}, {"shape", t.shape}});
  nlohmann::json header = {{"kind", ckpt.kind},
                           {"arch", ckpt.arch},
                           {"tensors", manifest},
                           {"provenance", ckpt.provenance}};
  std::string header_str = header.dump();

  std::string out;
  out.append("XPRS");
  out.push_back(1);
  put_u32le(out, static_cast<uint32_t>(header_str.size()));
  out.append(header_str);
  for (const auto &[name, t] : ckpt.tensors) {
    for (double v : t.values) {
      float fv = static_cast<float>(v);
      char buf[4];
      std::memcpy(buf, &fv, 4);
      out.append(buf, 4);
    }
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) Throw(ErrorCode::IoError, "cannot write " + path);
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) Throw(ErrorCode::IoError, "short write to " + path);
}

Checkpoint load_checkpoint(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) Throw(ErrorCode::IoError, "cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(is)),
                    std::istreambuf_iterator<char>());
  const uint8_t *p = reinterpret_cast<const uint8_t *>(bytes.data());
  size_t n = bytes.size();
  if (n < 9 || std::memcmp(p, "XPRS", 4) != 0)
    Throw(ErrorCode::IoError, path + " is not a checkpoint file");
  if (p[4] != 1) Throw(ErrorCode::IoError, "unsupported checkpoint version");
  uint32_t header_len = get_u32le(p + 5);
  if (9 + static_cast<size_t>(header_len) > n)
    Throw(ErrorCode::TruncatedFile, path + " header is truncated");
  auto header = nlohmann::json::parse(
      std::string(bytes.data() + 9, header_len));

  Checkpoint ckpt;
  ckpt.kind = header.at("kind").get<std::string>();
  ckpt.arch = header.at("arch");
  ckpt.provenance = header.at("provenance");
  size_t off = 9 + header_len;
  for (const auto &entry : header.at("tensors")) {
    Tensor t(entry.at("shape").get<std::vector<int>>());
    size_t need = off + t.size() * 4;
    if (need > n) Throw(ErrorCode::TruncatedFile, path + " data is truncated");
    for (size_t i = 0; i < t.size(); ++i) {
      float fv;
      std::memcpy(&fv, p + off + i * 4, 4);
      t.values[i] = static_cast<double>(fv);
    }
    off = need;
    ckpt.tensors.emplace_back(entry.at("name").get<std::string>(),
                              std::move(t));
  }
  return ckpt;
}

std::vector<double> softmax(const std::vector<double> &logits) {
  double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (double &v : p) v /= sum;
  return p;
}

double softmax_cross_entropy(const std::vector<double> &logits,
                             const std::vector<double> &onehot,
                             std::vector<double> *dlogits) {
  if (logits.size() != onehot.size())
    Throw(ErrorCode::ShapeMismatch, "logits/target size mismatch");
  double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - mx);
  double lse = mx + std::log(sum);
  double loss = lse;
  for (size_t i = 0; i < logits.size(); ++i) loss -= onehot[i] * logits[i];
  if (dlogits) {
    dlogits->resize(logits.size());
    for (size_t i = 0; i < logits.size(); ++i)
      (*dlogits)[i] = std::exp(logits[i] - lse) - onehot[i];
  }
  return loss;
}

// ---------------------------------------------------------------------------
// LSTM

LstmModel::LstmModel(const LstmConfig &config, uint64_t seed)
    : config_(config) {
  if (config.input_dim < 1 || config.hidden_dim < 1 || config.output_dim < 1 ||
      (config.readout != Readout::PerFrameLinear && config.embedding_dim < 1))
    Throw(ErrorCode::DimMismatch, "all model dimensions must be >= 1");
  int d = config.input_dim, h = config.hidden_dim;
  int e = config.readout == Readout::PerFrameLinear ? 0 : config.embedding_dim;
  wx_ = Tensor({4 * h, d});
  wh_ = Tensor({4 * h, h});
  b_ = Tensor({4 * h});
  if (e > 0) {
    we_ = Tensor({e, h});
    be_ = Tensor({e});
    wo_ = Tensor({config.output_dim, e});
  } else {
    wo_ = Tensor({config.output_dim, h});
  }
  bo_ = Tensor({config.output_dim});

  std::mt19937_64 rng(seed);
  init_uniform(wx_, rng);
  init_uniform(wh_, rng);
  init_uniform(b_, rng);
  if (e > 0) {
    init_uniform(we_, rng);
    init_uniform(be_, rng);
  }
  init_uniform(wo_, rng);
  init_uniform(bo_, rng);
  for (int i = h; i < 2 * h; ++i) b_.values[i] = 1.0;  // forget-gate bias
}

LstmConfig LstmModel::config_from_arch(const nlohmann::json &arch) {
  LstmConfig c;
  c.input_dim = arch.at("input_dim").get<int>();
  c.hidden_dim = arch.at("hidden_dim").get<int>();
  c.embedding_dim = arch.at("embedding_dim").get<int>();
  c.output_dim = arch.at("output_dim").get<int>();
  std::string ok = arch.at("output_kind").get<std::string>();
  c.output_kind = ok == "softmax" ? OutputKind::SoftmaxClasses
                                  : OutputKind::LinearRegression;
  std::string ro = arch.at("readout").get<std::string>();
  c.readout = ro == "per_frame"        ? Readout::PerFrameLinear
              : ro == "mean_embedding" ? Readout::MeanEmbedding
                                       : Readout::FinalEmbedding;
  return c;
}

LstmModel::LstmModel(const Checkpoint &ckpt)
    : LstmModel(config_from_arch(ckpt.arch), 0) {
  if (ckpt.kind != "lstm")
    Throw(ErrorCode::WrongModelKind, "checkpoint is not an lstm");
  auto names = param_names();
  auto ps = params();
  for (size_t i = 0; i < names.size(); ++i) {
    const Tensor *t = ckpt.find(names[i]);
    if (!t || t->shape != ps[i]->shape)
      Throw(ErrorCode::ShapeMismatch, "checkpoint tensor " + names[i] +
                                          " missing or of wrong shape");
    *ps[i] = *t;
  }
}

std::vector<Tensor *> LstmModel::params() {
  if (config_.readout == Readout::PerFrameLinear)
    return {&wx_, &wh_, &b_, &wo_, &bo_};
  return {&wx_, &wh_, &b_, &we_, &be_, &wo_, &bo_};
}

std::vector<const Tensor *> LstmModel::params() const {
  if (config_.readout == Readout::PerFrameLinear)
    return {&wx_, &wh_, &b_, &wo_, &bo_};
  return {&wx_, &wh_, &b_, &we_, &be_, &wo_, &bo_};
}

std::vector<std::string> LstmModel::param_names() const {
  if (config_.readout == Readout::PerFrameLinear)
    return {"Wx", "Wh", "b", "Wo", "bo"};
  return {"Wx", "Wh", "b", "We", "be", "Wo", "bo"};
}

namespace {

// Everything the backward pass needs from one forward run.
struct LstmCache {
  Matrix gates;   // T x 4H, post-activation (i, f, g, o)
  Matrix cell;    // T x H
  Matrix tanh_c;  // T x H
  Matrix hidden;  // T x H
  std::vector<double> emb_pre;   // E, pre-tanh
  std::vector<double> embedding;  // E
  std::vector<double> logits;     // O (final readout)
  Matrix frame_logits;            // T x O (per-frame)
};

}  // namespace

LstmActivations LstmModel::forward(const Matrix &sequence) const {
  LstmActivations acts;
  int t_len = sequence.rows;
  if (t_len == 0) Throw(ErrorCode::EmptySequence, "empty input sequence");
  if (sequence.cols != config_.input_dim)
    Throw(ErrorCode::DimMismatch,
          "input has " + std::to_string(sequence.cols) + " dims, model wants " +
              std::to_string(config_.input_dim));
  int h = config_.hidden_dim;

  acts.hidden = Matrix(t_len, h);
  std::vector<double> c(h, 0.0), hprev(h, 0.0);
  std::vector<double> a(4 * h);
  for (int t = 0; t < t_len; ++t) {
    std::copy(b_.values.begin(), b_.values.end(), a.begin());
    gemv_acc(wx_, sequence.row(t), a.data());
    gemv_acc(wh_, hprev.data(), a.data());
    double *hrow = acts.hidden.row(t);
    for (int j = 0; j < h; ++j) {
      double gi = sigmoid(a[j]);
      double gf = sigmoid(a[h + j]);
      double gg = std::tanh(a[2 * h + j]);
      double go = sigmoid(a[3 * h + j]);
      c[j] = gf * c[j] + gi * gg;
      hrow[j] = go * std::tanh(c[j]);
    }
    std::copy(hrow, hrow + h, hprev.begin());
  }

  if (config_.readout == Readout::PerFrameLinear) {
    acts.frame_outputs = Matrix(t_len, config_.output_dim);
    for (int t = 0; t < t_len; ++t) {
      double *o = acts.frame_outputs.row(t);
      std::copy(bo_.values.begin(), bo_.values.end(), o);
      gemv_acc(wo_, acts.hidden.row(t), o);
    }
    return acts;
  }

  std::vector<double> pooled(h, 0.0);
  if (config_.readout == Readout::MeanEmbedding) {
    for (int t = 0; t < t_len; ++t)
      for (int j = 0; j < h; ++j) pooled[j] += acts.hidden.at(t, j) / t_len;
  } else {
    std::copy(acts.hidden.row(t_len - 1), acts.hidden.row(t_len - 1) + h,
              pooled.begin());
  }
  acts.embedding.assign(config_.embedding_dim, 0.0);
  std::copy(be_.values.begin(), be_.values.end(), acts.embedding.begin());
  gemv_acc(we_, pooled.data(), acts.embedding.data());
  for (double &v : acts.embedding) v = std::tanh(v);

  acts.output.assign(config_.output_dim, 0.0);
  std::copy(bo_.values.begin(), bo_.values.end(), acts.output.begin());
  gemv_acc(wo_, acts.embedding.data(), acts.output.data());
  if (config_.output_kind == OutputKind::SoftmaxClasses)
    acts.output = softmax(acts.output);
  return acts;
}

double LstmModel::sample_loss(const Sample &s, Loss loss) const {
  int t_len = s.x.rows;
  if (t_len == 0) Throw(ErrorCode::EmptySequence, "empty input sequence");
  LstmActivations acts = forward(s.x);
  if (config_.readout == Readout::PerFrameLinear) {
    if (loss != Loss::MSE)
      Throw(ErrorCode::BadConfig, "per-frame readout requires MSE");
    size_t need = static_cast<size_t>(t_len) * config_.output_dim;
    if (s.target.size() != need)
      Throw(ErrorCode::ShapeMismatch, "per-frame target size mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < need; ++i) {
      double d = acts.frame_outputs.data[i] - s.target[i];
      acc += d * d;
    }
    return acc / static_cast<double>(need);
  }
  if (s.target.size() != static_cast<size_t>(config_.output_dim))
    Throw(ErrorCode::ShapeMismatch, "target size mismatch");
  if (loss == Loss::CrossEntropy) {
    double ce = 0.0;
    for (int i = 0; i < config_.output_dim; ++i)
      if (s.target[i] != 0.0)
        ce -= s.target[i] * std::log(std::max(acts.output[i], 1e-300));
    return ce;
  }
  double acc = 0.0;
  for (int i = 0; i < config_.output_dim; ++i) {
    double d = acts.output[i] - s.target[i];
    acc += d * d;
  }
  return acc / config_.output_dim;
}

double LstmModel::accumulate_gradients(const Sample &s, Loss loss,
                                       std::vector<Tensor> &grads) const {
  int t_len = s.x.rows;
  if (t_len == 0) Throw(ErrorCode::EmptySequence, "empty input sequence");
  if (s.x.cols != config_.input_dim)
    Throw(ErrorCode::DimMismatch, "input dim mismatch");
  int h = config_.hidden_dim;
  int o_dim = config_.output_dim;
  bool per_frame = config_.readout == Readout::PerFrameLinear;
  int e_dim = per_frame ? 0 : config_.embedding_dim;

  // Forward with full cache.
  LstmCache cache;
  cache.gates = Matrix(t_len, 4 * h);
  cache.cell = Matrix(t_len, h);
  cache.tanh_c = Matrix(t_len, h);
  cache.hidden = Matrix(t_len, h);
  {
    std::vector<double> c(h, 0.0), hprev(h, 0.0), a(4 * h);
    for (int t = 0; t < t_len; ++t) {
      std::copy(b_.values.begin(), b_.values.end(), a.begin());
      gemv_acc(wx_, s.x.row(t), a.data());
      gemv_acc(wh_, hprev.data(), a.data());
      double *g = cache.gates.row(t);
      double *crow = cache.cell.row(t);
      double *tcrow = cache.tanh_c.row(t);
      double *hrow = cache.hidden.row(t);
      for (int j = 0; j < h; ++j) {
        double gi = sigmoid(a[j]);
        double gf = sigmoid(a[h + j]);
        double gg = std::tanh(a[2 * h + j]);
        double go = sigmoid(a[3 * h + j]);
        g[j] = gi;
        g[h + j] = gf;
        g[2 * h + j] = gg;
        g[3 * h + j] = go;
        c[j] = gf * c[j] + gi * gg;
        crow[j] = c[j];
        tcrow[j] = std::tanh(c[j]);
        hrow[j] = go * tcrow[j];
      }
      std::copy(hrow, hrow + h, hprev.begin());
    }
  }

  double loss_value = 0.0;
  Tensor &g_wx = grads[0];
  Tensor &g_wh = grads[1];
  Tensor &g_b = grads[2];
  Tensor *g_we = per_frame ? nullptr : &grads[3];
  Tensor *g_be = per_frame ? nullptr : &grads[4];
  Tensor &g_wo = grads[per_frame ? 3 : 5];
  Tensor &g_bo = grads[per_frame ? 4 : 6];

  Matrix dh(t_len, h);  // dL/dh_t accumulated from readouts
  if (per_frame) {
    if (loss != Loss::MSE)
      Throw(ErrorCode::BadConfig, "per-frame readout requires MSE");
    size_t need = static_cast<size_t>(t_len) * o_dim;
    if (s.target.size() != need)
      Throw(ErrorCode::ShapeMismatch, "per-frame target size mismatch");
    std::vector<double> z(o_dim), dz(o_dim);
    double denom = static_cast<double>(need);
    for (int t = 0; t < t_len; ++t) {
      std::copy(bo_.values.begin(), bo_.values.end(), z.begin());
      gemv_acc(wo_, cache.hidden.row(t), z.data());
      for (int i = 0; i < o_dim; ++i) {
        double diff = z[i] - s.target[static_cast<size_t>(t) * o_dim + i];
        loss_value += diff * diff;
        dz[i] = 2.0 * diff / denom;
      }
      outer_acc(g_wo, dz.data(), cache.hidden.row(t));
      for (int i = 0; i < o_dim; ++i) g_bo.values[i] += dz[i];
      gemv_t_acc(wo_, dz.data(), dh.row(t));
    }
    loss_value /= denom;
  } else {
    if (s.target.size() != static_cast<size_t>(o_dim))
      Throw(ErrorCode::ShapeMismatch, "target size mismatch");
    // Readout forward.
    std::vector<double> pooled(h, 0.0);
    if (config_.readout == Readout::MeanEmbedding) {
      for (int t = 0; t < t_len; ++t)
        for (int j = 0; j < h; ++j) pooled[j] += cache.hidden.at(t, j) / t_len;
    } else {
      std::copy(cache.hidden.row(t_len - 1), cache.hidden.row(t_len - 1) + h,
                pooled.begin());
    }
    std::vector<double> emb(e_dim);
    std::copy(be_.values.begin(), be_.values.end(), emb.begin());
    gemv_acc(we_, pooled.data(), emb.data());
    for (double &v : emb) v = std::tanh(v);
    std::vector<double> z(o_dim);
    std::copy(bo_.values.begin(), bo_.values.end(), z.begin());
    gemv_acc(wo_, emb.data(), z.data());

    std::vector<double> dz(o_dim);
    if (loss == Loss::CrossEntropy) {
      if (config_.output_kind != OutputKind::SoftmaxClasses)
        Throw(ErrorCode::BadConfig, "cross-entropy requires softmax output");
      loss_value = softmax_cross_entropy(z, s.target, &dz);
    } else {
      loss_value = 0.0;
      for (int i = 0; i < o_dim; ++i) {
        double diff = z[i] - s.target[i];
        loss_value += diff * diff;
        dz[i] = 2.0 * diff / o_dim;
      }
      loss_value /= o_dim;
    }

    outer_acc(g_wo, dz.data(), emb.data());
    for (int i = 0; i < o_dim; ++i) g_bo.values[i] += dz[i];
    std::vector<double> demb(e_dim, 0.0);
    gemv_t_acc(wo_, dz.data(), demb.data());
    for (int i = 0; i < e_dim; ++i) demb[i] *= 1.0 - emb[i] * emb[i];
    outer_acc(*g_we, demb.data(), pooled.data());
    for (int i = 0; i < e_dim; ++i) g_be->values[i] += demb[i];
    std::vector<double> dpooled(h, 0.0);
    gemv_t_acc(we_, demb.data(), dpooled.data());
    if (config_.readout == Readout::MeanEmbedding) {
      for (int t = 0; t < t_len; ++t)
        for (int j = 0; j < h; ++j) dh.at(t, j) += dpooled[j] / t_len;
    } else {
      for (int j = 0; j < h; ++j) dh.at(t_len - 1, j) += dpooled[j];
    }
  }

  // Backpropagation through time.
  std::vector<double> dc(h, 0.0), dhact(h), dpre(4 * h);
  for (int t = t_len - 1; t >= 0; --t) {
    const double *g = cache.gates.row(t);
    const double *tc = cache.tanh_c.row(t);
    const double *cprev = t > 0 ? cache.cell.row(t - 1) : nullptr;
    std::copy(dh.row(t), dh.row(t) + h, dhact.begin());
    for (int j = 0; j < h; ++j) {
      double gi = g[j], gf = g[h + j], gg = g[2 * h + j], go = g[3 * h + j];
      double dct = dc[j] + dhact[j] * go * (1.0 - tc[j] * tc[j]);
      double dgo = dhact[j] * tc[j];
      double dgi = dct * gg;
      double dgg = dct * gi;
      double dgf = dct * (cprev ? cprev[j] : 0.0);
      dpre[j] = dgi * gi * (1.0 - gi);
      dpre[h + j] = dgf * gf * (1.0 - gf);
      dpre[2 * h + j] = dgg * (1.0 - gg * gg);
      dpre[3 * h + j] = dgo * go * (1.0 - go);
      dc[j] = dct * gf;
    }
    outer_acc(g_wx, dpre.data(), s.x.row(t));
    if (t > 0) {
      outer_acc(g_wh, dpre.data(), cache.hidden.row(t - 1));
      gemv_t_acc(wh_, dpre.data(), dh.row(t - 1));
    }
    for (int j = 0; j < 4 * h; ++j) g_b.values[j] += dpre[j];
  }
  return loss_value;
}

Checkpoint LstmModel::to_checkpoint(nlohmann::json provenance) const {
  Checkpoint ckpt;
  ckpt.kind = "lstm";
  ckpt.arch = {
      {"input_dim", config_.input_dim},
      {"hidden_dim", config_.hidden_dim},
      {"embedding_dim", config_.embedding_dim},
      {"output_dim", config_.output_dim},
      {"output_kind", config_.output_kind == OutputKind::SoftmaxClasses
                          ? "softmax"
                          : "linear"},
      {"readout", config_.readout == Readout::PerFrameLinear ? "per_frame"
                  : config_.readout == Readout::MeanEmbedding
                      ? "mean_embedding"
                      : "final_embedding"},
  };
  auto names = param_names();
  auto ps = params();
  for (size_t i = 0; i < names.size(); ++i)
    ckpt.tensors.emplace_back(names[i], *ps[i]);
  ckpt.provenance = std::move(provenance);
  return ckpt;
}

// ---------------------------------------------------------------------------
// FFN

FfnModel::FfnModel(const FfnConfig &config, uint64_t seed) : config_(config) {
  if (config.input_dim < 1 || config.output_dim < 1)
    Throw(ErrorCode::DimMismatch, "all model dimensions must be >= 1");
  for (int hd : config.hidden_dims)
    if (hd < 1) Throw(ErrorCode::DimMismatch, "hidden dims must be >= 1");
  std::mt19937_64 rng(seed);
  int in = config.input_dim;
  for (int hd : config.hidden_dims) {
    weights_.emplace_back(std::vector<int>{hd, in});
    biases_.emplace_back(std::vector<int>{hd});
    init_uniform(weights_.back(), rng);
    init_uniform(biases_.back(), rng);
    in = hd;
  }
  weights_.emplace_back(std::vector<int>{config.output_dim, in});
  biases_.emplace_back(std::vector<int>{config.output_dim});
  init_uniform(weights_.back(), rng);
  init_uniform(biases_.back(), rng);
}

FfnConfig FfnModel::config_from_arch(const nlohmann::json &arch) {
  FfnConfig c;
  c.input_dim = arch.at("input_dim").get<int>();
  c.hidden_dims = arch.at("hidden_dims").get<std::vector<int>>();
  c.output_dim = arch.at("output_dim").get<int>();
  c.output_kind = arch.at("output_kind").get<std::string>() == "softmax"
                      ? OutputKind::SoftmaxClasses
                      : OutputKind::LinearRegression;
  return c;
}

FfnModel::FfnModel(const Checkpoint &ckpt)
    : FfnModel(config_from_arch(ckpt.arch), 0) {
  if (ckpt.kind != "ffn")
    Throw(ErrorCode::WrongModelKind, "checkpoint is not an ffn");
  auto names = param_names();
  auto ps = params();
  for (size_t i = 0; i < names.size(); ++i) {
    const Tensor *t = ckpt.find(names[i]);
    if (!t || t->shape != ps[i]->shape)
      Throw(ErrorCode::ShapeMismatch, "checkpoint tensor " + names[i] +
                                          " missing or of wrong shape");
    *ps[i] = *t;
  }
}

std::vector<Tensor *> FfnModel::params() {
  std::vector<Tensor *> out;
  for (size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

std::vector<const Tensor *> FfnModel::params() const {
  std::vector<const Tensor *> out;
  for (size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

std::vector<std::string> FfnModel::param_names() const {
  std::vector<std::string> out;
  for (size_t l = 0; l < weights_.size(); ++l) {
    out.push_back("W" + std::to_string(l));
    out.push_back("b" + std::to_string(l));
  }
  return out;
}

std::vector<double> FfnModel::forward(const std::vector<double> &x) const {
  if (x.size() != static_cast<size_t>(config_.input_dim))
    Throw(ErrorCode::DimMismatch, "input dim mismatch");
  std::vector<double> act = x;
  for (size_t l = 0; l < weights_.size(); ++l) {
    std::vector<double> next(biases_[l].values);
    gemv_acc(weights_[l], act.data(), next.data());
    if (l + 1 < weights_.size())
      for (double &v : next) v = std::tanh(v);
    act = std::move(next);
  }
  if (config_.output_kind == OutputKind::SoftmaxClasses) act = softmax(act);
  return act;
}

double FfnModel::sample_loss(const Sample &s, Loss loss) const {
  if (s.x.rows != 1)
    Throw(ErrorCode::DimMismatch, "ffn samples must have exactly one row");
  std::vector<double> x(s.x.row(0), s.x.row(0) + s.x.cols);
  std::vector<double> out = forward(x);
  if (s.target.size() != out.size())
    Throw(ErrorCode::ShapeMismatch, "target size mismatch");
  if (loss == Loss::CrossEntropy) {
    double ce = 0.0;
    for (size_t i = 0; i < out.size(); ++i)
      if (s.target[i] != 0.0)
        ce -= s.target[i] * std::log(std::max(out[i], 1e-300));
    return ce;
  }
  double acc = 0.0;
  for (size_t i = 0; i < out.size(); ++i) {
    double d = out[i] - s.target[i];
    acc += d * d;
  }
  return acc / static_cast<double>(out.size());
}

double FfnModel::accumulate_gradients(const Sample &s, Loss loss,
                                      std::vector<Tensor> &grads) const {
  if (s.x.rows != 1)
    Throw(ErrorCode::DimMismatch, "ffn samples must have exactly one row");
  if (s.x.cols != config_.input_dim)
    Throw(ErrorCode::DimMismatch, "input dim mismatch");

  size_t n_layers = weights_.size();
  std::vector<std::vector<double>> acts(n_layers + 1);
  acts[0].assign(s.x.row(0), s.x.row(0) + s.x.cols);
  for (size_t l = 0; l < n_layers; ++l) {
    acts[l + 1] = biases_[l].values;
    gemv_acc(weights_[l], acts[l].data(), acts[l + 1].data());
    if (l + 1 < n_layers)
      for (double &v : acts[l + 1]) v = std::tanh(v);
  }
  std::vector<double> &z = acts[n_layers];
  if (s.target.size() != z.size())
    Throw(ErrorCode::ShapeMismatch, "target size mismatch");

  double loss_value;
  std::vector<double> dz(z.size());
  if (loss == Loss::CrossEntropy) {
    if (config_.output_kind != OutputKind::SoftmaxClasses)
      Throw(ErrorCode::BadConfig, "cross-entropy requires softmax output");
    loss_value = softmax_cross_entropy(z, s.target, &dz);
  } else {
    loss_value = 0.0;
    for (size_t i = 0; i < z.size(); ++i) {
      double diff = z[i] - s.target[i];
      loss_value += diff * diff;
      dz[i] = 2.0 * diff / static_cast<double>(z.size());
    }
    loss_value /= static_cast<double>(z.size());
  }

  for (int l = static_cast<int>(n_layers) - 1; l >= 0; --l) {
    outer_acc(grads[2 * l], dz.data(), acts[l].data());
    for (size_t i = 0; i < dz.size(); ++i) grads[2 * l + 1].values[i] += dz[i];
    if (l > 0) {
      std::vector<double> dprev(acts[l].size(), 0.0);
      gemv_t_acc(weights_[l], dz.data(), dprev.data());
      for (size_t i = 0; i < dprev.size(); ++i)
        dprev[i] *= 1.0 - acts[l][i] * acts[l][i];
      dz = std::move(dprev);
    }
  }
  return loss_value;
}

Checkpoint FfnModel::to_checkpoint(nlohmann::json provenance) const {
  Checkpoint ckpt;
  ckpt.kind = "ffn";
  ckpt.arch = {{"input_dim", config_.input_dim},
               {"hidden_dims", config_.hidden_dims},
               {"output_dim", config_.output_dim},
               {"output_kind", config_.output_kind == OutputKind::SoftmaxClasses
                                   ? "softmax"
                                   : "linear"}};
  auto names = param_names();
  auto ps = params();
  for (size_t i = 0; i < names.size(); ++i)
    ckpt.tensors.emplace_back(names[i], *ps[i]);
  ckpt.provenance = std::move(provenance);
  return ckpt;
}

// ---------------------------------------------------------------------------
// Optimizer and trainer

void adam_step(std::vector<Tensor *> &params, const std::vector<Tensor> &grads,
               AdamState &state, double learning_rate, double beta1,
               double beta2, double epsilon) {
  if (params.size() != grads.size())
    Throw(ErrorCode::ShapeMismatch, "params/grads count mismatch");
  if (state.m.empty()) {
    for (const Tensor *p : params) {
      state.m.emplace_back(p->shape);
      state.v.emplace_back(p->shape);
    }
  }
  state.t += 1;
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor &p = *params[i];
    const Tensor &g = grads[i];
    if (p.shape != g.shape || p.shape != state.m[i].shape)
      Throw(ErrorCode::ShapeMismatch, "gradient shape mismatch");
    double *mv = state.m[i].values.data();
    double *vv = state.v[i].values.data();
    const double *gv = g.values.data();
    double *pv = p.values.data();
    for (size_t k = 0; k < p.size(); ++k) {
      mv[k] = beta1 * mv[k] + (1.0 - beta1) * gv[k];
      vv[k] = beta2 * vv[k] + (1.0 - beta2) * gv[k] * gv[k];
      double mhat = mv[k] / bc1;
      double vhat = vv[k] / bc2;
      pv[k] -= learning_rate * mhat / (std::sqrt(vhat) + epsilon);
    }
  }
}

double mean_loss(const SequenceModel &model, const Dataset &set, Loss loss) {
  if (set.empty()) Throw(ErrorCode::EmptyDataset, "empty dataset");
  double acc = 0.0;
  for (const Sample &s : set) acc += model.sample_loss(s, loss);
  return acc / static_cast<double>(set.size());
}

namespace {

std::vector<Tensor> snapshot(const SequenceModel &model) {
  std::vector<Tensor> out;
  for (const Tensor *p : model.params()) out.push_back(*p);
  return out;
}

void restore(SequenceModel &model, const std::vector<Tensor> &snap) {
  auto ps = model.params();
  for (size_t i = 0; i < ps.size(); ++i) *ps[i] = snap[i];
}

bool params_finite(SequenceModel &model) {
  for (const Tensor *p : model.params())
    for (double v : p->values)
      if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace

TrainResult train_model(SequenceModel &model, const Dataset &train_set,
                        const Dataset &cv_set, const TrainConfig &config) {
  if (train_set.empty() || cv_set.empty())
    Throw(ErrorCode::EmptyDataset, "train and CV sets must be non-empty");
  if (config.batch_size < 1 || config.learning_rate <= 0.0 ||
      config.lr_decay_on_backoff <= 0.0 || config.lr_decay_on_backoff >= 1.0)
    Throw(ErrorCode::BadConfig, "invalid training configuration");

  TrainResult result;
  double lr = config.learning_rate;
  result.lr_history.push_back(lr);

  std::mt19937_64 rng(config.seed);
  std::vector<size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), size_t{0});

  auto param_ptrs = model.params();
  std::vector<Tensor> grads;
  for (const Tensor *p : param_ptrs) grads.emplace_back(p->shape);

  AdamState adam;
  std::vector<Tensor> best;
  double best_cv = std::numeric_limits<double>::infinity();
  bool have_prev = false;
  double prev_cv = 0.0;
  int streak = 0;
  int backoffs = 0;
  bool new_best_since_backoff = false;
  int segment_epoch = 0;
  int total_epoch = 0;

  while (segment_epoch < config.max_epochs) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    size_t pos = 0;
    while (pos < order.size()) {
      size_t end = std::min(pos + static_cast<size_t>(config.batch_size),
                            order.size());
      for (Tensor &g : grads) std::fill(g.values.begin(), g.values.end(), 0.0);
      double batch_loss = 0.0;
      for (size_t i = pos; i < end; ++i)
        batch_loss +=
            model.accumulate_gradients(train_set[order[i]], config.loss, grads);
      double inv = 1.0 / static_cast<double>(end - pos);
      for (Tensor &g : grads)
        for (double &v : g.values) v *= inv;
      loss_sum += batch_loss;
      if (!std::isfinite(batch_loss))
        Throw(ErrorCode::NumericalDivergence,
              "non-finite training loss at epoch " +
                  std::to_string(total_epoch + 1));
      adam_step(param_ptrs, grads, adam, lr, config.beta1, config.beta2,
                config.epsilon);
      pos = end;
    }
    if (!params_finite(model))
      Throw(ErrorCode::NumericalDivergence,
            "non-finite parameters after epoch " +
                std::to_string(total_epoch + 1));

    double train_loss = loss_sum / static_cast<double>(train_set.size());
    double cv = mean_loss(model, cv_set, config.loss);
    if (!std::isfinite(cv))
      Throw(ErrorCode::NumericalDivergence, "non-finite CV error");
    ++total_epoch;
    ++segment_epoch;
    result.epochs.push_back({total_epoch, train_loss, cv, lr});

    if (cv < best_cv) {
      best_cv = cv;
      best = snapshot(model);
      result.best_epoch = total_epoch;
      new_best_since_backoff = true;
    }

    // Ties break the consecutive-increase streak.
    if (have_prev && cv > prev_cv)
      ++streak;
    else
      streak = 0;
    prev_cv = cv;
    have_prev = true;

    if (streak >= config.patience) {
      bool failed = backoffs >= config.max_backoffs ||
                    (backoffs > 0 && !new_best_since_backoff);
      if (failed) break;
      restore(model, best);
      lr *= config.lr_decay_on_backoff;
      result.lr_history.push_back(lr);
      adam = AdamState();
      ++backoffs;
      streak = 0;
      have_prev = false;
      new_best_since_backoff = false;
      segment_epoch = 0;
    }
  }

  if (!best.empty()) restore(model, best);
  result.best_cv_error = best_cv;
  result.backoffs = backoffs;
  return result;
}

std::vector<std::pair<std::string, GradCheckResult>> standard_gradchecks(
    uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 1);

  auto make_batch = [&](int t_len, int in_dim, int out_dim, bool classes,
                        bool per_frame) {
    Dataset batch;
    for (int s = 0; s < 3; ++s) {
      Sample sample;
      sample.x = Matrix(t_len, in_dim);
      for (double &v : sample.x.data) v = g(rng);
      if (per_frame) {
        sample.target.resize(static_cast<size_t>(t_len) * out_dim);
        for (double &v : sample.target) v = g(rng);
      } else if (classes) {
        sample.target.assign(out_dim, 0.0);
        sample.target[coin(rng)] = 1.0;
      } else {
        sample.target.resize(out_dim);
        for (double &v : sample.target) v = g(rng);
      }
      batch.push_back(std::move(sample));
    }
    return batch;
  };

  std::vector<std::pair<std::string, GradCheckResult>> results;

  {
    LstmConfig c{6, 8, 4, 2, OutputKind::SoftmaxClasses,
                 Readout::FinalEmbedding};
    LstmModel m(c, seed + 1);
    results.emplace_back(
        "expression_lstm",
        gradient_check(m, make_batch(5, 6, 2, true, false), Loss::CrossEntropy));
  }
  {
    LstmConfig c{6, 8, 4, 2, OutputKind::LinearRegression,
                 Readout::FinalEmbedding};
    LstmModel m(c, seed + 2);
    results.emplace_back(
        "emotion_lstm",
        gradient_check(m, make_batch(5, 6, 2, false, false), Loss::MSE));
  }
  {
    LstmConfig c{10, 8, 0, 8, OutputKind::LinearRegression,
                 Readout::PerFrameLinear};
    LstmModel m(c, seed + 3);
    results.emplace_back(
        "inversion_lstm",
        gradient_check(m, make_batch(5, 10, 8, false, true), Loss::MSE));
  }
  {
    FfnConfig c{12, {16}, 2, OutputKind::SoftmaxClasses};
    FfnModel m(c, seed + 4);
    results.emplace_back(
        "fusion_ffn",
        gradient_check(m, make_batch(1, 12, 2, true, false), Loss::CrossEntropy));
  }
  {
    FfnConfig c{30, {16, 16}, 2, OutputKind::SoftmaxClasses};
    FfnModel m(c, seed + 5);
    results.emplace_back(
        "bow_dnn",
        gradient_check(m, make_batch(1, 30, 2, true, false), Loss::CrossEntropy));
  }
  return results;
}

GradCheckResult gradient_check(SequenceModel &model, const Dataset &batch,
                               Loss loss, double h) {
  if (batch.empty()) Throw(ErrorCode::EmptyDataset, "empty gradcheck batch");
  auto param_ptrs = model.params();
  auto names = model.param_names();
  std::vector<Tensor> grads;
  for (const Tensor *p : param_ptrs) grads.emplace_back(p->shape);
  for (const Sample &s : batch) model.accumulate_gradients(s, loss, grads);
  double inv = 1.0 / static_cast<double>(batch.size());
  for (Tensor &g : grads)
    for (double &v : g.values) v *= inv;

  GradCheckResult result;
  for (size_t ti = 0; ti < param_ptrs.size(); ++ti) {
    Tensor &p = *param_ptrs[ti];
    for (size_t k = 0; k < p.size(); ++k) {
      double orig = p.values[k];
      p.values[k] = orig + h;
      double lp = mean_loss(model, batch, loss);
      p.values[k] = orig - h;
      double lm = mean_loss(model, batch, loss);
      p.values[k] = orig;
      double numeric = (lp - lm) / (2.0 * h);
      double analytic = grads[ti].values[k];
      double rel = std::abs(analytic - numeric) /
                   std::max(1e-3, std::abs(analytic) + std::abs(numeric));
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_tensor = names[ti];
      }
    }
  }
  return result;
}

}  // namespace xpress
