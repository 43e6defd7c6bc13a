#pragma once

// Differentiable primitives on Graph nodes. Node matrices are row-major in
// meaning: a set of n embeddings of width D is an n x D matrix, a single
// embedding is 1 x D.

#include "dspp/graph.hpp"

#include <span>
#include <vector>

namespace dspp {

/// ln(1 + e^x), overflow-safe.
double softplus(double x);
double sigmoid(double x);
/// Max-subtracted softmax. Throws std::invalid_argument on an empty input.
std::vector<double> softmax(std::span<const double> logits);

/// Compressed rows: segment r owns targets[offsets[r] .. offsets[r+1]).
/// Used for neighbor lists (row = node, targets = neighbor ids).
struct SegmentIndex {
  std::vector<Index> offsets{0};
  std::vector<Index> targets;

  Index segments() const { return static_cast<Index>(offsets.size()) - 1; }
  Index size() const { return static_cast<Index>(targets.size()); }
  Index degree(Index r) const { return offsets[r + 1] - offsets[r]; }
};

namespace ops {

Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Element-wise product.
Var mul(Var a, Var b);
Var scale(Var a, double c);
/// c * a + b element-wise with scalar constants.
Var affine(Var a, double c, double b);
/// Adds a 1 x k row to every row of an n x k matrix.
Var add_row(Var a, Var row);

Var matmul(Var a, Var b);
Var transpose(Var a);
/// x * w^T: applies w (out x in) to every row of x (n x in).
Var linear(Var x, Var w);
/// x * w^T + b with b a 1 x out row.
Var linear(Var x, Var w, Var b);

Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var softplus(Var a);
Var exp(Var a);
Var log(Var a);

/// Sum of all entries, 1 x 1.
Var sum(Var a);
/// Frobenius inner product of equal shapes, 1 x 1.
Var dot(Var a, Var b);

Var concat_cols(Var a, Var b);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(Var a, Index start, Index count);
Var slice_rows(Var a, Index start, Index count);
Var row(Var a, Index r);

/// Softmax over all entries of a vector-shaped node.
Var softmax(Var a);

// The segment-based ops below keep a reference to `segments`; it must outlive
// the graph's backward pass.

/// Row r of the result is the mean of x's rows listed in segment r; empty
/// segments give a zero row.
Var neighbor_mean(Var x, const SegmentIndex& segments);
/// One score per segment entry (r, c): q.row(r) . v.row(c). Shape size x 1.
Var edge_scores(Var q, Var v, const SegmentIndex& segments);
/// Softmax within each segment of an edge-valued column.
Var segment_softmax(Var scores, const SegmentIndex& segments);
/// Row r = sum over segment r of weight(e) * v.row(target(e)).
Var segment_weighted_sum(Var weights, Var v, const SegmentIndex& segments);
/// Row r = a.row(r) if take_a[r] else b.row(r).
Var select_rows(const std::vector<bool>& take_a, Var a, Var b);

}  // namespace ops
}  // namespace dspp
