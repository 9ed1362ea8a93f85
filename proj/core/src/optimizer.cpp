#include "vagn/optimizer.hpp"

#include <cmath>

#include "vagn/errors.hpp"

namespace vagn::ad {

int ParamSet::add(const std::string& name, Tensor value) {
    if (index_of(name) >= 0) {
        throw SchemaError("duplicate parameter name: " + name);
    }
    names_.push_back(name);
    values_.push_back(std::move(value));
    return count() - 1;
}

int ParamSet::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

Tensor& ParamSet::at(const std::string& name) {
    const int i = index_of(name);
    if (i < 0) {
        throw SchemaError("unknown parameter: " + name);
    }
    return values_[static_cast<std::size_t>(i)];
}

const Tensor& ParamSet::at(const std::string& name) const {
    const int i = index_of(name);
    if (i < 0) {
        throw SchemaError("unknown parameter: " + name);
    }
    return values_[static_cast<std::size_t>(i)];
}

std::int64_t ParamSet::total_size() const {
    std::int64_t n = 0;
    for (const Tensor& t : values_) {
        n += t.size();
    }
    return n;
}

void Optimizer::step(ParamSet& params, const std::vector<Tensor>& grads) {
    if (static_cast<int>(grads.size()) != params.count()) {
        throw SchemaError("optimizer step: gradient count does not match parameter count");
    }
    if (m_.empty() && cfg_.mode == OptimizerConfig::Mode::adam) {
        m_.reserve(grads.size());
        v_.reserve(grads.size());
        for (int i = 0; i < params.count(); ++i) {
            m_.push_back(Tensor::zeros(params[i].shape));
            v_.push_back(Tensor::zeros(params[i].shape));
        }
    }
    for (int i = 0; i < params.count(); ++i) {
        if (grads[static_cast<std::size_t>(i)].shape != params[i].shape) {
            throw SchemaError("optimizer step: gradient shape mismatch for " + params.name(i));
        }
        if (!all_finite(grads[static_cast<std::size_t>(i)])) {
            throw NumericError("optimizer step: non-finite gradient for " + params.name(i));
        }
    }
    ++step_;
    if (cfg_.mode == OptimizerConfig::Mode::sgd) {
        for (int i = 0; i < params.count(); ++i) {
            Tensor& p = params[i];
            const Tensor& g = grads[static_cast<std::size_t>(i)];
            for (int k = 0; k < p.size(); ++k) {
                p.data[static_cast<std::size_t>(k)] -= cfg_.lr * g.data[static_cast<std::size_t>(k)];
            }
        }
        return;
    }
    const double bc1 = 1.0 - std::pow(cfg_.beta1, step_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, step_);
    for (int i = 0; i < params.count(); ++i) {
        Tensor& p = params[i];
        Tensor& m = m_[static_cast<std::size_t>(i)];
        Tensor& v = v_[static_cast<std::size_t>(i)];
        const Tensor& g = grads[static_cast<std::size_t>(i)];
        for (int k = 0; k < p.size(); ++k) {
            const std::size_t u = static_cast<std::size_t>(k);
            m.data[u] = cfg_.beta1 * m.data[u] + (1.0 - cfg_.beta1) * g.data[u];
            v.data[u] = cfg_.beta2 * v.data[u] + (1.0 - cfg_.beta2) * g.data[u] * g.data[u];
            const double mhat = m.data[u] / bc1;
            const double vhat = v.data[u] / bc2;
            p.data[u] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

}  // namespace vagn::ad
