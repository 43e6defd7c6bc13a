#include "dspp/graph.hpp"

#include <stdexcept>
#include <utility>

namespace dspp {

Parameter::Parameter(std::string name, Matrix value)
    : name_(std::move(name)), value_(std::move(value)) {
  grad_ = Matrix::Zero(value_.rows(), value_.cols());
}

Parameter& ParameterStore::add(std::string name, Matrix value) {
  if (by_name_.count(name) != 0) {
    throw std::invalid_argument("duplicate parameter name: " + name);
  }
  by_name_.emplace(name, params_.size());
  params_.push_back(std::make_unique<Parameter>(std::move(name), std::move(value)));
  return *params_.back();
}

Parameter& ParameterStore::at(const std::string& name) {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw std::out_of_range("unknown parameter: " + name);
  return *params_[it->second];
}

const Parameter& ParameterStore::at(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw std::out_of_range("unknown parameter: " + name);
  return *params_[it->second];
}

bool ParameterStore::contains(const std::string& name) const {
  return by_name_.count(name) != 0;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

std::vector<Matrix> ParameterStore::values() const {
  std::vector<Matrix> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p->value());
  return out;
}

void ParameterStore::set_values(const std::vector<Matrix>& values) {
  if (values.size() != params_.size()) {
    throw std::invalid_argument("set_values: parameter count mismatch");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].rows() != params_[i]->rows() || values[i].cols() != params_[i]->cols()) {
      throw std::invalid_argument("set_values: shape mismatch for " + params_[i]->name());
    }
    params_[i]->value() = values[i];
  }
}

GradientBuffer::Entry& GradientBuffer::entry(Parameter& p) {
  auto it = slot_.find(&p);
  if (it != slot_.end()) return entries_[it->second].second;
  slot_.emplace(&p, entries_.size());
  entries_.emplace_back(&p, Entry{});
  return entries_.back().second;
}

void GradientBuffer::add(Parameter& p, const Matrix& g) {
  Entry& e = entry(p);
  if (e.dense.size() == 0) {
    e.dense = g;
  } else {
    e.dense += g;
  }
}

void GradientBuffer::add_row(Parameter& p, Index row, const RowVector& g) {
  Entry& e = entry(p);
  auto [it, inserted] = e.rows.try_emplace(row, g);
  if (!inserted) it->second += g;
}

void GradientBuffer::apply() const {
  for (const auto& [param, e] : entries_) {
    if (e.dense.size() != 0) param->grad() += e.dense;
    for (const auto& [row, g] : e.rows) param->grad().row(row) += g;
  }
}

const Matrix& Var::value() const {
  if (graph_ == nullptr) throw std::logic_error("Var: null handle");
  return graph_->nodes_[static_cast<std::size_t>(id_)].value;
}

Matrix Var::grad() const {
  if (graph_ == nullptr) throw std::logic_error("Var: null handle");
  const auto& node = graph_->nodes_[static_cast<std::size_t>(id_)];
  if (node.grad.size() == 0) return Matrix::Zero(node.value.rows(), node.value.cols());
  return node.grad;
}

double Var::item() const {
  const Matrix& v = value();
  if (v.size() != 1) throw std::invalid_argument("Var::item: value is not 1x1");
  return v(0, 0);
}

Var Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Graph::check_owned(Var v) const {
  if (v.graph_ != this || v.id_ < 0 || static_cast<std::size_t>(v.id_) >= nodes_.size()) {
    throw std::invalid_argument("Var does not belong to this graph");
  }
}

Var Graph::constant(Matrix value) {
  return push(Node{std::move(value), Matrix(), nullptr, false});
}

Var Graph::input(Matrix value) {
  return push(Node{std::move(value), Matrix(), nullptr, track_});
}

Var Graph::parameter(Parameter& p) {
  if (!track_) return constant(p.value());
  GradientBuffer* sink = sink_;
  BackwardFn fn = [&p, sink](Graph&, const Matrix& g) {
    if (sink != nullptr) {
      sink->add(p, g);
    } else {
      p.grad() += g;
    }
  };
  return push(Node{p.value(), Matrix(), std::move(fn), true});
}

Var Graph::parameter_row(Parameter& p, Index row) {
  if (row < 0 || row >= p.rows()) {
    throw std::out_of_range("parameter_row: row " + std::to_string(row) + " out of range for " +
                            p.name());
  }
  if (!track_) return constant(p.value().row(row));
  GradientBuffer* sink = sink_;
  BackwardFn fn = [&p, row, sink](Graph&, const Matrix& g) {
    if (sink != nullptr) {
      sink->add_row(p, row, g.row(0));
    } else {
      p.grad().row(row) += g.row(0);
    }
  };
  return push(Node{p.value().row(row), Matrix(), std::move(fn), true});
}

Var Graph::record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(backward));
}

Var Graph::record(Matrix value, std::span<const Var> inputs, BackwardFn backward) {
  bool needs = false;
  for (const Var& v : inputs) {
    check_owned(v);
    needs = needs || nodes_[static_cast<std::size_t>(v.id_)].requires_grad;
  }
  if (!needs) backward = nullptr;
  return push(Node{std::move(value), Matrix(), std::move(backward), needs});
}

const Matrix& Graph::value(Var v) const {
  check_owned(v);
  return nodes_[static_cast<std::size_t>(v.id_)].value;
}

bool Graph::requires_grad(Var v) const {
  check_owned(v);
  return nodes_[static_cast<std::size_t>(v.id_)].requires_grad;
}

void Graph::accumulate(Var v, const Matrix& g) {
  Node& node = nodes_[static_cast<std::size_t>(v.id_)];
  if (!node.requires_grad) return;
  if (g.rows() != node.value.rows() || g.cols() != node.value.cols()) {
    throw std::logic_error("Graph::accumulate: gradient shape mismatch");
  }
  if (node.grad.size() == 0) {
    node.grad = g;
  } else {
    node.grad += g;
  }
}

void Graph::backward(Var root) {
  check_owned(root);
  const Matrix& v = value(root);
  if (v.rows() != 1 || v.cols() != 1) {
    throw std::invalid_argument("backward: root must be a scalar (1x1) value");
  }
  Seed seed{root, Matrix::Ones(1, 1)};
  backward(std::span<const Seed>(&seed, 1));
}

void Graph::backward(std::span<const Seed> seeds) {
  int last = -1;
  for (const Seed& s : seeds) {
    check_owned(s.var);
    last = std::max(last, s.var.id_);
  }
  if (last < 0) return;
  for (int i = 0; i <= last; ++i) nodes_[static_cast<std::size_t>(i)].grad.resize(0, 0);
  for (const Seed& s : seeds) accumulate(s.var, s.grad);
  sweep(last);
}

void Graph::sweep(int last) {
  for (int i = last; i >= 0; --i) {
    Node& node = nodes_[static_cast<std::size_t>(i)];
    if (!node.requires_grad || node.grad.size() == 0 || !node.backward) continue;
    node.backward(*this, node.grad);
  }
}

}  // namespace dspp
