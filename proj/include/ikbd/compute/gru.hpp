#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "ikbd/compute/ops.hpp"

namespace ikbd::compute {

/// Time-major layout of a padded batch of sequences: row `t * batch + b`
/// holds step t of sequence b. Steps at or beyond lengths[b] are padding.
struct SequenceLayout {
  int steps = 0;
  int batch = 0;
  std::vector<int> lengths;

  static SequenceLayout single(int n) { return {n, 1, {n}}; }

  Eigen::Index rows() const { return Eigen::Index(steps) * batch; }
  Eigen::Index row(int t, int b) const { return Eigen::Index(t) * batch + b; }
  bool valid(int t, int b) const { return t < lengths[std::size_t(b)]; }

  void check() const {
    if (steps < 1 || batch < 1 || int(lengths.size()) != batch) throw ShapeError("bad sequence layout");
    for (int n : lengths) {
      if (n < 1 || n > steps) throw ShapeError("sequence length out of range");
    }
  }
};

/// Reverses each sequence within its own length; padding rows are copied
/// unchanged. The map is its own inverse and its own adjoint.
template <typename T>
Matrix<T> reverse_within_lengths(const Matrix<T>& x, const SequenceLayout& layout) {
  Matrix<T> y = x;
  for (int b = 0; b < layout.batch; ++b) {
    const int n = layout.lengths[std::size_t(b)];
    for (int t = 0; t < n; ++t) y.row(layout.row(t, b)) = x.row(layout.row(n - 1 - t, b));
  }
  return y;
}

/// GRU weights with gates packed as [reset | update | candidate].
///
///   r = sigmoid(x W_r + h U_r + b_r)
///   z = sigmoid(x W_z + h U_z + b_z)
///   c = tanh(x W_c + (r * h) U_c + b_c)
///   h' = (1 - z) * h + z * c
template <typename T>
struct GruParams {
  Parameter<T> input;      // in x 3U
  Parameter<T> recurrent;  // U x 3U
  Parameter<T> bias;       // 3U

  GruParams() = default;
  GruParams(const std::string& name, std::size_t in, std::size_t units)
      : input(name + ".input", {in, 3 * units}),
        recurrent(name + ".recurrent", {units, 3 * units}),
        bias(name + ".bias", {3 * units}) {}

  Eigen::Index in_dim() const { return input.w().rows(); }
  Eigen::Index units() const { return recurrent.w().rows(); }

  void init(std::mt19937_64& rng) {
    init_uniform(input, std::size_t(in_dim()), rng);
    init_uniform(recurrent, std::size_t(units()), rng);
    bias.value.set_zero();
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    f(input);
    f(recurrent);
    f(bias);
  }
  template <typename F>
  void for_each_parameter(F&& f) const {
    f(input);
    f(recurrent);
    f(bias);
  }
};

/// One GRU step for a batch of rows: x is B x in, h_prev is B x U.
template <typename T>
Matrix<T> gru_cell(const Matrix<T>& x, const Matrix<T>& h_prev, const GruParams<T>& p) {
  const Eigen::Index u = p.units();
  if (x.cols() != p.in_dim() || h_prev.cols() != u || x.rows() != h_prev.rows()) {
    throw ShapeError("gru_cell: operand shapes do not match parameters");
  }
  Matrix<T> xw = add_bias(matmul(x, p.input.w()), p.bias.w());
  Matrix<T> rz_pre = xw.leftCols(2 * u) + h_prev * p.recurrent.w().leftCols(2 * u);
  Matrix<T> rz = sigmoid(rz_pre);
  Matrix<T> rh = (rz.leftCols(u).array() * h_prev.array()).matrix();
  Matrix<T> c = tanh(Matrix<T>(xw.rightCols(u) + rh * p.recurrent.w().rightCols(u)));
  Matrix<T> h = (h_prev.array() + rz.rightCols(u).array() * (c.array() - h_prev.array())).matrix();
  check_finite(h, "gru_cell");
  return h;
}

template <typename T>
struct GruCache {
  Matrix<T> x;       // inputs, rows x in
  Matrix<T> h_prev;  // state entering each step
  Matrix<T> gates;   // post-activation [r | z | c]
  Matrix<T> rh;      // r * h_prev
  Matrix<T> h;       // outputs
};

/// Runs a GRU over a padded batch from a zero initial state.
template <typename T>
GruCache<T> gru_forward(const GruParams<T>& p, const Matrix<T>& x, const SequenceLayout& layout) {
  const Eigen::Index u = p.units();
  const Eigen::Index batch = layout.batch;
  if (x.rows() != layout.rows() || x.cols() != p.in_dim()) throw ShapeError("gru: input shape mismatch");

  GruCache<T> c;
  c.x = x;
  Matrix<T> xw(x.rows(), 3 * u);
  xw.noalias() = x * p.input.w();
  xw.rowwise() += p.bias.w().row(0);
  c.h_prev.resize(x.rows(), u);
  c.gates.resize(x.rows(), 3 * u);
  c.rh.resize(x.rows(), u);
  c.h.resize(x.rows(), u);

  const auto u_rz = p.recurrent.w().leftCols(2 * u);
  const auto u_c = p.recurrent.w().rightCols(u);
  Matrix<T> pre(batch, 2 * u);
  Matrix<T> cand(batch, u);
  for (int t = 0; t < layout.steps; ++t) {
    const Eigen::Index r0 = Eigen::Index(t) * batch;
    auto h_prev = c.h_prev.middleRows(r0, batch);
    if (t == 0) {
      h_prev.setZero();
    } else {
      h_prev = c.h.middleRows(r0 - batch, batch);
    }
    auto gates = c.gates.middleRows(r0, batch);
    pre.noalias() = h_prev * u_rz;
    pre += xw.middleRows(r0, batch).leftCols(2 * u);
    gates.leftCols(2 * u) = (T(1) / (T(1) + (-pre.array()).exp())).matrix();

    auto rh = c.rh.middleRows(r0, batch);
    rh = (gates.leftCols(u).array() * h_prev.array()).matrix();
    cand.noalias() = rh * u_c;
    cand += xw.middleRows(r0, batch).rightCols(u);
    gates.rightCols(u) = cand.array().tanh().matrix();

    c.h.middleRows(r0, batch) =
        (h_prev.array() + gates.middleCols(u, u).array() * (gates.rightCols(u).array() - h_prev.array()))
            .matrix();
  }
  check_finite(c.h, "gru sequence");
  return c;
}

/// Backpropagates dh (gradient w.r.t. every output row) through the scan.
/// Accumulates into the parameter gradients and returns dx.
template <typename T>
Matrix<T> gru_backward(GruParams<T>& p, const GruCache<T>& c, const Matrix<T>& dh_out,
                       const SequenceLayout& layout) {
  const Eigen::Index u = p.units();
  const Eigen::Index batch = layout.batch;
  Matrix<T> dxw(c.x.rows(), 3 * u);
  Matrix<T> dh_next = Matrix<T>::Zero(batch, u);
  Matrix<T> dh(batch, u);
  Matrix<T> drh(batch, u);

  const auto u_rz = p.recurrent.w().leftCols(2 * u);
  const auto u_c = p.recurrent.w().rightCols(u);
  for (int t = layout.steps - 1; t >= 0; --t) {
    const Eigen::Index r0 = Eigen::Index(t) * batch;
    const auto h_prev = c.h_prev.middleRows(r0, batch).array();
    const auto r = c.gates.middleRows(r0, batch).leftCols(u).array();
    const auto z = c.gates.middleRows(r0, batch).middleCols(u, u).array();
    const auto cand = c.gates.middleRows(r0, batch).rightCols(u).array();
    auto d = dxw.middleRows(r0, batch);

    dh = dh_out.middleRows(r0, batch) + dh_next;
    d.rightCols(u) = (dh.array() * z * (T(1) - cand.square())).matrix();
    d.middleCols(u, u) = (dh.array() * (cand - h_prev) * z * (T(1) - z)).matrix();
    drh.noalias() = d.rightCols(u) * u_c.transpose();
    d.leftCols(u) = (drh.array() * h_prev * r * (T(1) - r)).matrix();

    dh_next = (dh.array() * (T(1) - z) + drh.array() * r).matrix();
    dh_next.noalias() += d.leftCols(2 * u) * u_rz.transpose();
  }

  p.recurrent.g().leftCols(2 * u).noalias() += c.h_prev.transpose() * dxw.leftCols(2 * u);
  p.recurrent.g().rightCols(u).noalias() += c.rh.transpose() * dxw.rightCols(u);
  p.input.g().noalias() += c.x.transpose() * dxw;
  p.bias.g().row(0) += dxw.colwise().sum();
  Matrix<T> dx(c.x.rows(), c.x.cols());
  dx.noalias() = dxw * p.input.w().transpose();
  return dx;
}

/// A forward-direction GRU and a backward-direction GRU over the same input;
/// output row i is [forward state after step i | backward state at step i].
template <typename T>
struct BiGru {
  GruParams<T> fwd;
  GruParams<T> bwd;

  struct Cache {
    GruCache<T> fwd;
    GruCache<T> bwd;
    Matrix<T> out;
  };

  BiGru() = default;
  BiGru(const std::string& name, std::size_t in, std::size_t units)
      : fwd(name + ".fwd", in, units), bwd(name + ".bwd", in, units) {}

  Eigen::Index out_dim() const { return 2 * fwd.units(); }

  void init(std::mt19937_64& rng) {
    fwd.init(rng);
    bwd.init(rng);
  }

  Cache forward(const Matrix<T>& x, const SequenceLayout& layout) const {
    Cache c;
    c.fwd = gru_forward(fwd, x, layout);
    c.bwd = gru_forward(bwd, reverse_within_lengths(x, layout), layout);
    c.out = concat(c.fwd.h, reverse_within_lengths(c.bwd.h, layout));
    return c;
  }

  Matrix<T> backward(const Cache& c, const Matrix<T>& dy, const SequenceLayout& layout) {
    auto [df, db] = concat_backward(dy, fwd.units());
    Matrix<T> dx = gru_backward(fwd, c.fwd, df, layout);
    dx += reverse_within_lengths(gru_backward(bwd, c.bwd, reverse_within_lengths(db, layout), layout),
                                 layout);
    return dx;
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    fwd.for_each_parameter(f);
    bwd.for_each_parameter(f);
  }
  template <typename F>
  void for_each_parameter(F&& f) const {
    fwd.for_each_parameter(f);
    bwd.for_each_parameter(f);
  }
};

/// Convenience wrapper for a single unpadded sequence (n x in -> n x 2U).
template <typename T>
Matrix<T> bidirectional_scan(const GruParams<T>& fwd, const GruParams<T>& bwd, const Matrix<T>& inputs) {
  if (inputs.rows() < 1) throw ShapeError("bidirectional_scan needs at least one step");
  const auto layout = SequenceLayout::single(int(inputs.rows()));
  const auto f = gru_forward(fwd, inputs, layout);
  const auto b = gru_forward(bwd, reverse_within_lengths(inputs, layout), layout);
  return concat(f.h, reverse_within_lengths(b.h, layout));
}

}  // namespace ikbd::compute
