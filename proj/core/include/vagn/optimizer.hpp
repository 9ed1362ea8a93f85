#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vagn/tensor.hpp"

namespace vagn::ad {

// Named, ordered collection of parameter tensors. Order is the serialization
// and optimizer-state order.
class ParamSet {
  public:
    int add(const std::string& name, Tensor value);
    int index_of(const std::string& name) const;  // -1 when absent
    Tensor& operator[](int i) { return values_[static_cast<std::size_t>(i)]; }
    const Tensor& operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    const std::string& name(int i) const { return names_[static_cast<std::size_t>(i)]; }
    int count() const { return static_cast<int>(values_.size()); }
    std::int64_t total_size() const;

  private:
    std::vector<std::string> names_;
    std::vector<Tensor> values_;
};

struct OptimizerConfig {
    enum class Mode { adam, sgd };
    Mode mode = Mode::adam;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction, or plain gradient descent in sgd mode.
class Optimizer {
  public:
    explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {}

    // Applies one update in place. grads[i] pairs with params[i].
    void step(ParamSet& params, const std::vector<Tensor>& grads);

    int step_count() const { return step_; }
    const OptimizerConfig& config() const { return cfg_; }

  private:
    OptimizerConfig cfg_;
    int step_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

}  // namespace vagn::ad
