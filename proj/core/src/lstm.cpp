#include "jace/lstm.hpp"

#include <cmath>

#include "jace/errors.hpp"

namespace jace {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Tensor reverse_rows(const Tensor& m) {
  Tensor out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double* src = m.row(m.rows() - 1 - r);
    double* dst = out.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) dst[c] = src[c];
  }
  return out;
}

}  // namespace

LstmCell::LstmCell(const std::string& name, std::size_t input_dim, std::size_t hidden_dim,
                   Rng& rng)
    : wx(name + ".wx", 4 * hidden_dim, input_dim),
      wh(name + ".wh", 4 * hidden_dim, hidden_dim),
      b(name + ".b", 1, 4 * hidden_dim) {
  wx.init_uniform_fan_in(input_dim, rng);
  wh.init_uniform_fan_in(hidden_dim, rng);
  for (std::size_t j = hidden_dim; j < 2 * hidden_dim; ++j) b.value(0, j) = 1.0;
}

Tensor LstmCell::forward(const Tensor& input, Cache* cache) const {
  const std::size_t T = input.rows();
  const std::size_t d = input_dim();
  const std::size_t h = hidden_dim();
  if (T == 0) throw UserError("LSTM forward requires at least one time step");
  if (input.cols() != d) {
    throw UserError("LSTM '" + wx.name + "': input dim " + std::to_string(input.cols()) +
                    " != " + std::to_string(d));
  }

  Tensor hidden(T + 1, h);
  Tensor cell(T + 1, h);
  Tensor gates(T, 4 * h);
  std::vector<double> z(4 * h);

  for (std::size_t t = 0; t < T; ++t) {
    const double* x = input.row(t);
    const double* h_prev = hidden.row(t);
    const double* c_prev = cell.row(t);
    for (std::size_t r = 0; r < 4 * h; ++r) {
      const double* wxr = wx.value.row(r);
      const double* whr = wh.value.row(r);
      double acc = b.value(0, r);
      for (std::size_t c = 0; c < d; ++c) acc += wxr[c] * x[c];
      for (std::size_t c = 0; c < h; ++c) acc += whr[c] * h_prev[c];
      z[r] = acc;
    }
    double* g = gates.row(t);
    double* h_t = hidden.row(t + 1);
    double* c_t = cell.row(t + 1);
    for (std::size_t j = 0; j < h; ++j) {
      const double gi = sigmoid(z[j]);
      const double gf = sigmoid(z[h + j]);
      const double gg = std::tanh(z[2 * h + j]);
      const double go = sigmoid(z[3 * h + j]);
      g[j] = gi;
      g[h + j] = gf;
      g[2 * h + j] = gg;
      g[3 * h + j] = go;
      c_t[j] = gf * c_prev[j] + gi * gg;
      h_t[j] = go * std::tanh(c_t[j]);
    }
  }

  Tensor out(T, h);
  for (std::size_t t = 0; t < T; ++t) {
    const double* src = hidden.row(t + 1);
    double* dst = out.row(t);
    for (std::size_t j = 0; j < h; ++j) dst[j] = src[j];
  }
  if (cache) {
    cache->input = input;
    cache->hidden = std::move(hidden);
    cache->cell = std::move(cell);
    cache->gates = std::move(gates);
  }
  return out;
}

Tensor LstmCell::backward(const Cache& cache, const Tensor& d_hidden) {
  const std::size_t T = cache.input.rows();
  const std::size_t d = input_dim();
  const std::size_t h = hidden_dim();
  if (d_hidden.rows() != T || d_hidden.cols() != h) {
    throw UserError("LSTM '" + wx.name + "': gradient shape mismatch");
  }

  Tensor dx(T, d);
  std::vector<double> dh_next(h, 0.0);
  std::vector<double> dc_next(h, 0.0);
  std::vector<double> dz(4 * h);

  for (std::size_t t = T; t-- > 0;) {
    const double* g = cache.gates.row(t);
    const double* c_t = cache.cell.row(t + 1);
    const double* c_prev = cache.cell.row(t);
    const double* h_prev = cache.hidden.row(t);
    const double* x = cache.input.row(t);
    const double* dh_out = d_hidden.row(t);

    for (std::size_t j = 0; j < h; ++j) {
      const double gi = g[j];
      const double gf = g[h + j];
      const double gg = g[2 * h + j];
      const double go = g[3 * h + j];
      const double tc = std::tanh(c_t[j]);
      const double dh = dh_out[j] + dh_next[j];
      const double dgo = dh * tc;
      const double dc = dh * go * (1.0 - tc * tc) + dc_next[j];
      const double dgi = dc * gg;
      const double dgg = dc * gi;
      const double dgf = dc * c_prev[j];
      dc_next[j] = dc * gf;
      dz[j] = dgi * gi * (1.0 - gi);
      dz[h + j] = dgf * gf * (1.0 - gf);
      dz[2 * h + j] = dgg * (1.0 - gg * gg);
      dz[3 * h + j] = dgo * go * (1.0 - go);
    }

    double* dxt = dx.row(t);
    for (std::size_t j = 0; j < h; ++j) dh_next[j] = 0.0;
    for (std::size_t r = 0; r < 4 * h; ++r) {
      const double gz = dz[r];
      if (gz == 0.0) continue;
      double* dwx = wx.grad.row(r);
      double* dwh = wh.grad.row(r);
      const double* wxr = wx.value.row(r);
      const double* whr = wh.value.row(r);
      for (std::size_t c = 0; c < d; ++c) {
        dwx[c] += gz * x[c];
        dxt[c] += gz * wxr[c];
      }
      for (std::size_t c = 0; c < h; ++c) {
        dwh[c] += gz * h_prev[c];
        dh_next[c] += gz * whr[c];
      }
      b.grad(0, r) += gz;
    }
  }
  return dx;
}

BiLstmEncoder::BiLstmEncoder(const std::string& name, std::size_t input_dim,
                             std::size_t hidden_dim, Rng& rng)
    : fwd_(name + ".fwd", input_dim, hidden_dim, rng),
      bwd_(name + ".bwd", input_dim, hidden_dim, rng) {}

Tensor BiLstmEncoder::forward(const Tensor& input, Cache* cache) const {
  const std::size_t T = input.rows();
  const std::size_t h = hidden_dim();
  Cache local;
  Cache* c = cache ? cache : &local;
  Tensor hf = fwd_.forward(input, &c->fwd);
  Tensor hb_rev = bwd_.forward(reverse_rows(input), &c->bwd);
  Tensor out(T, 2 * h);
  for (std::size_t t = 0; t < T; ++t) {
    const double* f = hf.row(t);
    const double* bk = hb_rev.row(T - 1 - t);
    double* o = out.row(t);
    for (std::size_t j = 0; j < h; ++j) {
      o[j] = f[j];
      o[h + j] = bk[j];
    }
  }
  return out;
}

Tensor BiLstmEncoder::backward(const Cache& cache, const Tensor& d_output) {
  const std::size_t T = d_output.rows();
  const std::size_t h = hidden_dim();
  if (d_output.cols() != 2 * h) {
    throw UserError("BiLSTM: gradient dim " + std::to_string(d_output.cols()) + " != " +
                    std::to_string(2 * h));
  }
  Tensor df(T, h);
  Tensor db_rev(T, h);
  for (std::size_t t = 0; t < T; ++t) {
    const double* g = d_output.row(t);
    double* f = df.row(t);
    double* bk = db_rev.row(T - 1 - t);
    for (std::size_t j = 0; j < h; ++j) {
      f[j] = g[j];
      bk[j] = g[h + j];
    }
  }
  Tensor dx = fwd_.backward(cache.fwd, df);
  Tensor dx_rev = bwd_.backward(cache.bwd, db_rev);
  for (std::size_t t = 0; t < T; ++t) {
    const double* src = dx_rev.row(T - 1 - t);
    double* dst = dx.row(t);
    for (std::size_t c = 0; c < dx.cols(); ++c) dst[c] += src[c];
  }
  return dx;
}

std::vector<Parameter*> BiLstmEncoder::parameters() {
  std::vector<Parameter*> ps = fwd_.parameters();
  for (Parameter* p : bwd_.parameters()) ps.push_back(p);
  return ps;
}

}  // namespace jace
