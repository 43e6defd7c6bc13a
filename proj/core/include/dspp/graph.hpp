#pragma once

// Reverse-mode differentiation over dense matrices.
//
// A Graph is a tape: every operation appends a node holding its value and a
// closure that pushes the node's gradient back to its inputs. Creation order
// is a topological order, so backward() is a single reverse sweep.
//
// Learnable tensors live in Parameter objects owned by a ParameterStore. A
// graph reads them through parameter()/parameter_row() leaves. On backward the
// leaf gradients go either straight into Parameter::grad() or, when the graph
// was built with a GradientBuffer, into that buffer so several graphs can run
// on different workers and be merged later in a fixed order.

#include <Eigen/Dense>

#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <map>
#include <vector>

namespace dspp {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

class Parameter {
 public:
  Parameter(std::string name, Matrix value);

  const std::string& name() const { return name_; }
  const Matrix& value() const { return value_; }
  Matrix& value() { return value_; }
  const Matrix& grad() const { return grad_; }
  Matrix& grad() { return grad_; }
  Index rows() const { return value_.rows(); }
  Index cols() const { return value_.cols(); }

  void zero_grad() { grad_.setZero(); }

 private:
  std::string name_;
  Matrix value_;
  Matrix grad_;
};

/// Owns parameters with stable addresses, in registration order.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;

  Parameter& add(std::string name, Matrix value);
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }

  void zero_grad();
  std::vector<Matrix> values() const;
  void set_values(const std::vector<Matrix>& values);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, std::size_t> by_name_;
};

/// Deferred parameter gradients from one or more graphs.
class GradientBuffer {
 public:
  void add(Parameter& p, const Matrix& g);
  void add_row(Parameter& p, Index row, const RowVector& g);
  /// Adds everything into the parameters' own accumulators.
  void apply() const;
  void clear() { entries_.clear(); }
  bool empty() const { return entries_.empty(); }

 private:
  struct Entry {
    Matrix dense;
    std::map<Index, RowVector> rows;
  };
  // Insertion-ordered so apply() is deterministic.
  std::vector<std::pair<Parameter*, Entry>> entries_;
  std::unordered_map<Parameter*, std::size_t> slot_;

  Entry& entry(Parameter& p);
};

class Graph;

/// Handle to a node of a Graph. Cheap to copy; only valid while the graph lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  /// Gradient after backward(); zeros if nothing reached this node.
  Matrix grad() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  double item() const;

  Graph* graph() const { return graph_; }
  int id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* g, int id) : graph_(g), id_(id) {}
  Graph* graph_ = nullptr;
  int id_ = -1;
};

class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, const Matrix& out_grad)>;

  struct Seed {
    Var var;
    Matrix grad;
  };

  /// With a null sink, parameter gradients accumulate into Parameter::grad().
  explicit Graph(GradientBuffer* sink = nullptr) : sink_(sink) {}

  /// A graph that only evaluates: leaves never require gradients, so no
  /// backward closures are kept.
  static Graph inference() {
    Graph g;
    g.track_ = false;
    return g;
  }
  Graph(Graph&&) = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Matrix value);
  /// Differentiable leaf that is not a parameter; read its grad() after backward.
  Var input(Matrix value);
  Var parameter(Parameter& p);
  /// Single row of a parameter as a 1 x cols leaf (embedding lookup).
  Var parameter_row(Parameter& p, Index row);

  /// Appends an operation node. `inputs` only decide whether the node needs a
  /// gradient; the closure is responsible for routing it.
  Var record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(Matrix value, std::span<const Var> inputs, BackwardFn backward);

  const Matrix& value(Var v) const;
  bool requires_grad(Var v) const;
  /// Adds `g` into the gradient of `v` (no-op for constants).
  void accumulate(Var v, const Matrix& g);

  /// Reverse sweep from a scalar root with seed 1.
  void backward(Var root);
  /// Reverse sweep from arbitrary seeds (e.g. gradients collected elsewhere).
  void backward(std::span<const Seed> seeds);

  std::size_t size() const { return nodes_.size(); }

 private:
  friend class Var;

  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    bool requires_grad = false;
  };

  Var push(Node node);
  void sweep(int last);
  void check_owned(Var v) const;

  std::deque<Node> nodes_;
  GradientBuffer* sink_;
  bool track_ = true;
};

}  // namespace dspp
