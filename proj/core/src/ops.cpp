#include "dspp/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dspp {

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("softmax: empty attention set");
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

namespace ops {
namespace {

Graph& graph_of(Var a) {
  if (!a.valid()) throw std::invalid_argument("ops: null Var");
  return *a.graph();
}

void require_same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()));
  }
}

void require_vector(Var a, const char* op) {
  if (a.rows() != 1 && a.cols() != 1) {
    throw std::invalid_argument(std::string(op) + ": expected a vector");
  }
}

}  // namespace

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  Graph& g = graph_of(a);
  return g.record(a.value() + b.value(), {a, b}, [a, b](Graph& g, const Matrix& d) {
    g.accumulate(a, d);
    g.accumulate(b, d);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  Graph& g = graph_of(a);
  return g.record(a.value() - b.value(), {a, b}, [a, b](Graph& g, const Matrix& d) {
    g.accumulate(a, d);
    g.accumulate(b, -d);
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  Graph& g = graph_of(a);
  return g.record(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Graph& g, const Matrix& d) {
    if (g.requires_grad(a)) g.accumulate(a, d.cwiseProduct(b.value()));
    if (g.requires_grad(b)) g.accumulate(b, d.cwiseProduct(a.value()));
  });
}

Var scale(Var a, double c) {
  Graph& g = graph_of(a);
  return g.record(a.value() * c, {a}, [a, c](Graph& g, const Matrix& d) { g.accumulate(a, d * c); });
}

Var affine(Var a, double c, double b) {
  Graph& g = graph_of(a);
  Matrix out = (a.value() * c).array() + b;
  return g.record(std::move(out), {a}, [a, c](Graph& g, const Matrix& d) { g.accumulate(a, d * c); });
}

Var add_row(Var a, Var r) {
  if (r.rows() != 1 || r.cols() != a.cols()) throw std::invalid_argument("add_row: shape mismatch");
  Graph& g = graph_of(a);
  Matrix out = a.value().rowwise() + r.value().row(0);
  return g.record(std::move(out), {a, r}, [a, r](Graph& g, const Matrix& d) {
    g.accumulate(a, d);
    if (g.requires_grad(r)) g.accumulate(r, d.colwise().sum());
  });
}

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
  Graph& g = graph_of(a);
  return g.record(a.value() * b.value(), {a, b}, [a, b](Graph& g, const Matrix& d) {
    if (g.requires_grad(a)) g.accumulate(a, d * b.value().transpose());
    if (g.requires_grad(b)) g.accumulate(b, a.value().transpose() * d);
  });
}

Var transpose(Var a) {
  Graph& g = graph_of(a);
  return g.record(a.value().transpose(), {a},
                  [a](Graph& g, const Matrix& d) { g.accumulate(a, d.transpose()); });
}

Var linear(Var x, Var w) {
  if (x.cols() != w.cols()) {
    throw std::invalid_argument("linear: input width " + std::to_string(x.cols()) +
                                " does not match weight " + std::to_string(w.rows()) + "x" +
                                std::to_string(w.cols()));
  }
  Graph& g = graph_of(x);
  return g.record(x.value() * w.value().transpose(), {x, w}, [x, w](Graph& g, const Matrix& d) {
    if (g.requires_grad(x)) g.accumulate(x, d * w.value());
    if (g.requires_grad(w)) g.accumulate(w, d.transpose() * x.value());
  });
}

Var linear(Var x, Var w, Var b) { return add_row(linear(x, w), b); }

Var relu(Var a) {
  Graph& g = graph_of(a);
  return g.record(a.value().cwiseMax(0.0), {a}, [a](Graph& g, const Matrix& d) {
    g.accumulate(a, (a.value().array() > 0.0).select(d, 0.0));
  });
}

Var sigmoid(Var a) {
  Graph& g = graph_of(a);
  Matrix out = a.value().unaryExpr([](double v) { return dspp::sigmoid(v); });
  return g.record(std::move(out), {a}, [a](Graph& g, const Matrix& d) {
    const Matrix s = a.value().unaryExpr([](double v) { return dspp::sigmoid(v); });
    g.accumulate(a, d.cwiseProduct(s.cwiseProduct((1.0 - s.array()).matrix())));
  });
}

Var tanh(Var a) {
  Graph& g = graph_of(a);
  return g.record(a.value().array().tanh().matrix(), {a}, [a](Graph& g, const Matrix& d) {
    const Matrix t = a.value().array().tanh().matrix();
    g.accumulate(a, d.cwiseProduct((1.0 - t.array().square()).matrix()));
  });
}

Var softplus(Var a) {
  Graph& g = graph_of(a);
  Matrix out = a.value().unaryExpr([](double v) { return dspp::softplus(v); });
  return g.record(std::move(out), {a}, [a](Graph& g, const Matrix& d) {
    g.accumulate(a, d.cwiseProduct(a.value().unaryExpr([](double v) { return dspp::sigmoid(v); })));
  });
}

Var exp(Var a) {
  Graph& g = graph_of(a);
  return g.record(a.value().array().exp().matrix(), {a}, [a](Graph& g, const Matrix& d) {
    g.accumulate(a, d.cwiseProduct(a.value().array().exp().matrix()));
  });
}

Var log(Var a) {
  Graph& g = graph_of(a);
  return g.record(a.value().array().log().matrix(), {a}, [a](Graph& g, const Matrix& d) {
    g.accumulate(a, d.cwiseQuotient(a.value()));
  });
}

Var sum(Var a) {
  Graph& g = graph_of(a);
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return g.record(std::move(out), {a}, [a](Graph& g, const Matrix& d) {
    g.accumulate(a, Matrix::Constant(a.rows(), a.cols(), d(0, 0)));
  });
}

Var dot(Var a, Var b) {
  require_same_shape(a, b, "dot");
  Graph& g = graph_of(a);
  Matrix out(1, 1);
  out(0, 0) = a.value().cwiseProduct(b.value()).sum();
  return g.record(std::move(out), {a, b}, [a, b](Graph& g, const Matrix& d) {
    if (g.requires_grad(a)) g.accumulate(a, b.value() * d(0, 0));
    if (g.requires_grad(b)) g.accumulate(b, a.value() * d(0, 0));
  });
}

Var concat_cols(Var a, Var b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("concat_cols: row count mismatch");
  Graph& g = graph_of(a);
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a.value(), b.value();
  const Index ca = a.cols();
  const Index cb = b.cols();
  return g.record(std::move(out), {a, b}, [a, b, ca, cb](Graph& g, const Matrix& d) {
    if (g.requires_grad(a)) g.accumulate(a, d.leftCols(ca));
    if (g.requires_grad(b)) g.accumulate(b, d.rightCols(cb));
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no parts");
  Graph& g = graph_of(parts.front());
  const Index cols = parts.front().cols();
  Index rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) throw std::invalid_argument("concat_rows: column count mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Index at = 0;
  for (const Var& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return g.record(std::move(out), parts, [inputs](Graph& g, const Matrix& d) {
    Index at = 0;
    for (const Var& p : inputs) {
      const Index r = p.rows();
      if (g.requires_grad(p)) g.accumulate(p, d.middleRows(at, r));
      at += r;
    }
  });
}

Var slice_cols(Var a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw std::invalid_argument("slice_cols: range out of bounds");
  }
  Graph& g = graph_of(a);
  return g.record(a.value().middleCols(start, count), {a},
                  [a, start, count](Graph& g, const Matrix& d) {
                    Matrix full = Matrix::Zero(a.rows(), a.cols());
                    full.middleCols(start, count) = d;
                    g.accumulate(a, full);
                  });
}

Var slice_rows(Var a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw std::invalid_argument("slice_rows: range out of bounds");
  }
  Graph& g = graph_of(a);
  return g.record(a.value().middleRows(start, count), {a},
                  [a, start, count](Graph& g, const Matrix& d) {
                    Matrix full = Matrix::Zero(a.rows(), a.cols());
                    full.middleRows(start, count) = d;
                    g.accumulate(a, full);
                  });
}

Var row(Var a, Index r) { return slice_rows(a, r, 1); }

Var softmax(Var a) {
  require_vector(a, "softmax");
  if (a.value().size() == 0) throw std::invalid_argument("softmax: empty attention set");
  Graph& g = graph_of(a);
  const Matrix& x = a.value();
  auto normalized = [](const Matrix& x) {
    Matrix y = (x.array() - x.maxCoeff()).exp().matrix();
    return Matrix(y / y.sum());
  };
  return g.record(normalized(x), {a}, [a, normalized](Graph& g, const Matrix& d) {
    const Matrix s = normalized(a.value());
    const double inner = d.cwiseProduct(s).sum();
    g.accumulate(a, s.cwiseProduct((d.array() - inner).matrix()));
  });
}

Var neighbor_mean(Var x, const SegmentIndex& seg) {
  Graph& g = graph_of(x);
  const Index n = seg.segments();
  Matrix out = Matrix::Zero(n, x.cols());
  const Matrix& xv = x.value();
  for (Index r = 0; r < n; ++r) {
    const Index deg = seg.degree(r);
    if (deg == 0) continue;
    for (Index e = seg.offsets[r]; e < seg.offsets[r + 1]; ++e) out.row(r) += xv.row(seg.targets[e]);
    out.row(r) /= static_cast<double>(deg);
  }
  return g.record(std::move(out), {x}, [x, &seg](Graph& g, const Matrix& d) {
    Matrix dx = Matrix::Zero(x.rows(), x.cols());
    for (Index r = 0; r < seg.segments(); ++r) {
      const Index deg = seg.degree(r);
      if (deg == 0) continue;
      const double w = 1.0 / static_cast<double>(deg);
      for (Index e = seg.offsets[r]; e < seg.offsets[r + 1]; ++e) dx.row(seg.targets[e]) += w * d.row(r);
    }
    g.accumulate(x, dx);
  });
}

Var edge_scores(Var q, Var v, const SegmentIndex& seg) {
  if (q.cols() != v.cols()) throw std::invalid_argument("edge_scores: width mismatch");
  if (q.rows() != seg.segments()) throw std::invalid_argument("edge_scores: row count mismatch");
  Graph& g = graph_of(q);
  Matrix out(seg.size(), 1);
  const Matrix& qv = q.value();
  const Matrix& vv = v.value();
  for (Index r = 0; r < seg.segments(); ++r) {
    for (Index e = seg.offsets[r]; e < seg.offsets[r + 1]; ++e) {
      out(e, 0) = qv.row(r).dot(vv.row(seg.targets[e]));
    }
  }
  return g.record(std::move(out), {q, v}, [q, v, &seg](Graph& g, const Matrix& d) {
    Matrix dq = Matrix::Zero(q.rows(), q.cols());
    Matrix dv = Matrix::Zero(v.rows(), v.cols());
    const Matrix& qv = q.value();
    const Matrix& vv = v.value();
    for (Index r = 0; r < seg.segments(); ++r) {
      for (Index e = seg.offsets[r]; e < seg.offsets[r + 1]; ++e) {
        const Index c = seg.targets[e];
        dq.row(r) += d(e, 0) * vv.row(c);
        dv.row(c) += d(e, 0) * qv.row(r);
      }
    }
    g.accumulate(q, dq);
    g.accumulate(v, dv);
  });
}

Var segment_softmax(Var scores, const SegmentIndex& seg) {
  if (scores.rows() != seg.size() || scores.cols() != 1) {
    throw std::invalid_argument("segment_softmax: expected one score per edge");
  }
  Graph& g = graph_of(scores);
  auto normalized = [&seg](const Matrix& s) {
    Matrix out(seg.size(), 1);
    for (Index r = 0; r < seg.segments(); ++r) {
      const Index b = seg.offsets[r];
      const Index n = seg.degree(r);
      if (n == 0) continue;
      const double m = s.middleRows(b, n).maxCoeff();
      out.middleRows(b, n) = (s.middleRows(b, n).array() - m).exp().matrix();
      out.middleRows(b, n) /= out.middleRows(b, n).sum();
    }
    return out;
  };
  return g.record(normalized(scores.value()), {scores},
                  [scores, normalized, &seg](Graph& g, const Matrix& d) {
                    const Matrix a = normalized(scores.value());
                    Matrix ds(a.rows(), 1);
                    for (Index r = 0; r < seg.segments(); ++r) {
                      const Index b = seg.offsets[r];
                      const Index n = seg.degree(r);
                      if (n == 0) continue;
                      const double inner = d.middleRows(b, n).cwiseProduct(a.middleRows(b, n)).sum();
                      ds.middleRows(b, n) =
                          a.middleRows(b, n).cwiseProduct((d.middleRows(b, n).array() - inner).matrix());
                    }
                    g.accumulate(scores, ds);
                  });
}

Var segment_weighted_sum(Var weights, Var v, const SegmentIndex& seg) {
  if (weights.rows() != seg.size() || weights.cols() != 1) {
    throw std::invalid_argument("segment_weighted_sum: expected one weight per edge");
  }
  Graph& g = graph_of(weights);
  const Matrix& w = weights.value();
  const Matrix& vv = v.value();
  Matrix out = Matrix::Zero(seg.segments(), v.cols());
  for (Index r = 0; r < seg.segments(); ++r) {
    for (Index e = seg.offsets[r]; e < seg.offsets[r + 1]; ++e) out.row(r) += w(e, 0) * vv.row(seg.targets[e]);
  }
  return g.record(std::move(out), {weights, v}, [weights, v, &seg](Graph& g, const Matrix& d) {
    const Matrix& w = weights.value();
    const Matrix& vv = v.value();
    Matrix dw(w.rows(), 1);
    Matrix dv = Matrix::Zero(vv.rows(), vv.cols());
    for (Index r = 0; r < seg.segments(); ++r) {
      for (Index e = seg.offsets[r]; e < seg.offsets[r + 1]; ++e) {
        const Index c = seg.targets[e];
        dw(e, 0) = d.row(r).dot(vv.row(c));
        dv.row(c) += w(e, 0) * d.row(r);
      }
    }
    g.accumulate(weights, dw);
    g.accumulate(v, dv);
  });
}

Var select_rows(const std::vector<bool>& take_a, Var a, Var b) {
  require_same_shape(a, b, "select_rows");
  if (static_cast<Index>(take_a.size()) != a.rows()) {
    throw std::invalid_argument("select_rows: mask length mismatch");
  }
  Graph& g = graph_of(a);
  Matrix out = b.value();
  for (Index r = 0; r < a.rows(); ++r) {
    if (take_a[static_cast<std::size_t>(r)]) out.row(r) = a.value().row(r);
  }
  return g.record(std::move(out), {a, b}, [take_a, a, b](Graph& g, const Matrix& d) {
    Matrix da = Matrix::Zero(d.rows(), d.cols());
    Matrix db = d;
    for (Index r = 0; r < d.rows(); ++r) {
      if (take_a[static_cast<std::size_t>(r)]) {
        da.row(r) = d.row(r);
        db.row(r).setZero();
      }
    }
    g.accumulate(a, da);
    g.accumulate(b, db);
  });
}

}  // namespace ops
}  // namespace dspp
