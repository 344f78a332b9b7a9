// SPDX-License-Identifier: Apache-2.0
#include "chemrl/model/gru_kernels.hpp"

#include <algorithm>

#include "chemrl/common/error.hpp"
#include "chemrl/lang/vocabulary.hpp"

namespace chemrl::model {
namespace {

Matrix sigmoid(const Matrix& a) { return (1.0 + (-a.array()).exp()).inverse().matrix(); }

Matrix gather_embedding(const PolicyParams& p, std::span<const int> ids) {
  Matrix x(p.shape.embedding, static_cast<Eigen::Index>(ids.size()));
  for (std::size_t j = 0; j < ids.size(); ++j) {
    const int id = ids[j];
    if (id < 0 || id >= p.shape.vocab_size) throw Error("ShapeMismatch", "input id out of range");
    x.col(static_cast<Eigen::Index>(j)) = p.embedding.row(id).transpose();
  }
  return x;
}

struct CellOut {
  Matrix z, r, n, g, h;
};

void cell_forward(const GruLayer& p, const Matrix& x, const Matrix& h_prev, CellOut& o) {
  Matrix az = p.w_z * x;
  az.noalias() += p.u_z * h_prev;
  az.colwise() += p.b_z.col(0);
  Matrix ar = p.w_r * x;
  ar.noalias() += p.u_r * h_prev;
  ar.colwise() += p.b_r.col(0);
  o.z = sigmoid(az);
  o.r = sigmoid(ar);
  o.g = p.u_n * h_prev;
  Matrix an = p.w_n * x;
  an.colwise() += p.b_n.col(0);
  an.array() += o.r.array() * o.g.array();
  o.n = an.array().tanh().matrix();
  o.h = ((1.0 - o.z.array()) * o.n.array() + o.z.array() * h_prev.array()).matrix();
}

template <class F>
void for_chunks(std::size_t n, Exec exec, F&& f) {
  const auto count = static_cast<long>(n);
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < count; ++i) f(static_cast<std::size_t>(i));
  } else {
    for (long i = 0; i < count; ++i) f(static_cast<std::size_t>(i));
  }
}

}  // namespace

Matrix::ConstColXpr Forward::logits(std::size_t b, int t) const {
  const auto& c = chunks_[b / kChunk];
  return c.logits[t].col(static_cast<Eigen::Index>(b % kChunk));
}

double Forward::value(std::size_t b, int t) const {
  if (!has_values_) throw Error("CriticAbsent", "model has no critic head");
  const auto& c = chunks_[b / kChunk];
  return c.values[t](0, static_cast<Eigen::Index>(b % kChunk));
}

LogitGrads::LogitGrads(const Forward& fwd) {
  d_logits.resize(fwd.batch_size());
  d_values.resize(fwd.batch_size());
  for (std::size_t b = 0; b < fwd.batch_size(); ++b) {
    d_logits[b] = Matrix::Zero(fwd.action_count(), fwd.length(b));
    d_values[b] = Matrix::Zero(1, fwd.length(b));
  }
}

LogitGrads& LogitGrads::operator+=(const LogitGrads& o) {
  for (std::size_t b = 0; b < d_logits.size(); ++b) {
    d_logits[b] += o.d_logits[b];
    d_values[b] += o.d_values[b];
  }
  return *this;
}

LogitGrads& LogitGrads::operator*=(double s) {
  for (auto& m : d_logits) m *= s;
  for (auto& m : d_values) m *= s;
  return *this;
}

Forward forward(const PolicyParams& params, const SequenceBatch& batch, Exec exec) {
  const auto& s = params.shape;
  Forward out;
  out.actions_ = s.action_count();
  out.has_values_ = s.critic;
  const std::size_t n = batch.inputs.size();
  out.lengths_.resize(n);
  for (std::size_t b = 0; b < n; ++b) out.lengths_[b] = static_cast<int>(batch.inputs[b].size());
  const std::size_t nchunks = (n + kChunk - 1) / kChunk;
  out.chunks_.resize(nchunks);
  for (std::size_t c = 0; c < nchunks; ++c) {
    auto& ch = out.chunks_[c];
    ch.begin = c * kChunk;
    ch.count = static_cast<int>(std::min<std::size_t>(kChunk, n - ch.begin));
    for (int j = 0; j < ch.count; ++j) ch.steps = std::max(ch.steps, out.lengths_[ch.begin + j]);
  }
  for_chunks(nchunks, exec, [&](std::size_t c) {
    auto& ch = out.chunks_[c];
    const int L = s.layers;
    ch.ids.assign(ch.steps, std::vector<int>(ch.count, lang::kPadId));
    for (int j = 0; j < ch.count; ++j) {
      const auto& seq = batch.inputs[ch.begin + j];
      for (std::size_t t = 0; t < seq.size(); ++t) ch.ids[t][j] = seq[t];
    }
    for (auto* v : {&ch.x, &ch.z, &ch.r, &ch.n, &ch.g, &ch.h}) v->assign(L, std::vector<Matrix>(ch.steps));
    ch.logits.resize(ch.steps);
    if (s.critic) ch.values.resize(ch.steps);
    std::vector<Matrix> h_prev(L, Matrix::Zero(s.hidden, ch.count));
    CellOut o;
    for (int t = 0; t < ch.steps; ++t) {
      ch.x[0][t] = gather_embedding(params, ch.ids[t]);
      for (int l = 0; l < L; ++l) {
        if (l > 0) ch.x[l][t] = ch.h[l - 1][t];
        cell_forward(params.layers[l], ch.x[l][t], h_prev[l], o);
        ch.z[l][t] = std::move(o.z);
        ch.r[l][t] = std::move(o.r);
        ch.n[l][t] = std::move(o.n);
        ch.g[l][t] = std::move(o.g);
        ch.h[l][t] = std::move(o.h);
        h_prev[l] = ch.h[l][t];
      }
      const Matrix& top = ch.h[L - 1][t];
      ch.logits[t] = params.out_w * top;
      ch.logits[t].colwise() += params.out_b.col(0);
      if (s.critic) {
        ch.values[t] = params.critic_w * top;
        ch.values[t].array() += params.critic_b(0, 0);
      }
    }
  });
  return out;
}

Gradients backward(const PolicyParams& params, const Forward& fwd, const LogitGrads& grads, Exec exec,
                   bool value_into_trunk) {
  const auto& s = params.shape;
  if (grads.d_logits.size() != fwd.batch_size()) throw Error("ShapeMismatch", "gradient batch size");
  const auto& chunks = fwd.chunks();
  std::vector<Gradients> partial(chunks.size());
  for_chunks(chunks.size(), exec, [&](std::size_t c) {
    const auto& ch = chunks[c];
    Gradients gr = zero_gradients(s);
    const int L = s.layers;
    std::vector<Matrix> dh_next(L, Matrix::Zero(s.hidden, ch.count));
    const Matrix zero_h = Matrix::Zero(s.hidden, ch.count);
    for (int t = ch.steps - 1; t >= 0; --t) {
      Matrix dlog = Matrix::Zero(s.action_count(), ch.count);
      Matrix dval = Matrix::Zero(1, ch.count);
      bool any_value = false;
      for (int j = 0; j < ch.count; ++j) {
        const std::size_t b = ch.begin + j;
        if (t < fwd.length(b)) {
          dlog.col(j) = grads.d_logits[b].col(t);
          if (s.critic && grads.d_values[b].size() > 0) {
            dval(0, j) = grads.d_values[b](0, t);
            any_value = any_value || dval(0, j) != 0.0;
          }
        }
      }
      const Matrix& top = ch.h[L - 1][t];
      gr.out_w.noalias() += dlog * top.transpose();
      gr.out_b += dlog.rowwise().sum();
      Matrix dh = params.out_w.transpose() * dlog;
      if (s.critic && any_value) {
        gr.critic_w.noalias() += dval * top.transpose();
        gr.critic_b(0, 0) += dval.sum();
        if (value_into_trunk) dh.noalias() += params.critic_w.transpose() * dval;
      }
      for (int l = L - 1; l >= 0; --l) {
        const auto& p = params.layers[l];
        auto& g = gr.layers[l];
        dh += dh_next[l];
        const Matrix& h_prev = t > 0 ? ch.h[l][t - 1] : zero_h;
        const auto z = ch.z[l][t].array();
        const auto r = ch.r[l][t].array();
        const auto n = ch.n[l][t].array();
        const Matrix dn = (dh.array() * (1.0 - z)).matrix();
        const Matrix dz = (dh.array() * (h_prev.array() - n)).matrix();
        const Matrix da_n = (dn.array() * (1.0 - n * n)).matrix();
        const Matrix dgate = (da_n.array() * r).matrix();
        const Matrix da_r = (da_n.array() * ch.g[l][t].array() * r * (1.0 - r)).matrix();
        const Matrix da_z = (dz.array() * z * (1.0 - z)).matrix();
        const Matrix& x = ch.x[l][t];
        g.w_z.noalias() += da_z * x.transpose();
        g.w_r.noalias() += da_r * x.transpose();
        g.w_n.noalias() += da_n * x.transpose();
        g.u_z.noalias() += da_z * h_prev.transpose();
        g.u_r.noalias() += da_r * h_prev.transpose();
        g.u_n.noalias() += dgate * h_prev.transpose();
        g.b_z += da_z.rowwise().sum();
        g.b_r += da_r.rowwise().sum();
        g.b_n += da_n.rowwise().sum();
        Matrix dx = p.w_z.transpose() * da_z;
        dx.noalias() += p.w_r.transpose() * da_r;
        dx.noalias() += p.w_n.transpose() * da_n;
        Matrix dprev = (dh.array() * z).matrix();
        dprev.noalias() += p.u_z.transpose() * da_z;
        dprev.noalias() += p.u_r.transpose() * da_r;
        dprev.noalias() += p.u_n.transpose() * dgate;
        dh_next[l] = std::move(dprev);
        if (l > 0) {
          dh = std::move(dx);
        } else {
          for (int j = 0; j < ch.count; ++j) gr.embedding.row(ch.ids[t][j]) += dx.col(j).transpose();
        }
      }
    }
    partial[c] = std::move(gr);
  });
  Gradients total = zero_gradients(s);
  for (const auto& p : partial) total += p;
  return total;
}

StepState::StepState(const PolicyParams& params, std::size_t batch) : batch_(batch) {
  const std::size_t nchunks = (batch + kChunk - 1) / kChunk;
  h_.resize(nchunks);
  for (std::size_t c = 0; c < nchunks; ++c) {
    const auto count = static_cast<Eigen::Index>(std::min<std::size_t>(kChunk, batch - c * kChunk));
    h_[c].assign(params.shape.layers, Matrix::Zero(params.shape.hidden, count));
  }
}

Matrix step(const PolicyParams& params, std::span<const int> ids, StepState& state, Exec exec) {
  if (ids.size() != state.batch_) throw Error("ShapeMismatch", "step batch size");
  const auto& s = params.shape;
  Matrix logits(s.action_count(), static_cast<Eigen::Index>(ids.size()));
  for_chunks(state.h_.size(), exec, [&](std::size_t c) {
    auto& hs = state.h_[c];
    const auto begin = c * kChunk;
    const auto count = static_cast<std::size_t>(hs[0].cols());
    Matrix x = gather_embedding(params, ids.subspan(begin, count));
    CellOut o;
    for (int l = 0; l < s.layers; ++l) {
      cell_forward(params.layers[l], x, hs[l], o);
      hs[l] = o.h;
      x = std::move(o.h);
    }
    Matrix out = params.out_w * x;
    out.colwise() += params.out_b.col(0);
    logits.middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count)) = out;
  });
  return logits;
}

}  // namespace chemrl::model
