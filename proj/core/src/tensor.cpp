#include "vagn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "vagn/errors.hpp"

namespace vagn::ad {

namespace {

std::size_t idx(int i) { return static_cast<std::size_t>(i); }

void require(bool ok, const std::string& msg) {
    if (!ok) {
        throw SchemaError(msg);
    }
}

void check_finite(const Tensor& t, const char* op) {
    if (!all_finite(t)) {
        throw NumericError(std::string("non-finite value produced by ") + op);
    }
}

}  // namespace

int shape_size(const std::vector<int>& shape) {
    int n = 1;
    for (int d : shape) {
        n *= d;
    }
    return n;
}

std::string shape_str(const std::vector<int>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) {
            s += "x";
        }
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

bool all_finite(const Tensor& t) {
    for (double v : t.data) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

Tensor::Tensor(std::vector<int> shape_, std::vector<double> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
    if (shape_size(shape) != static_cast<int>(data.size())) {
        throw SchemaError("tensor data length " + std::to_string(data.size()) +
                          " does not match shape " + shape_str(shape));
    }
}

Tensor Tensor::zeros(std::vector<int> shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(std::vector<int> shape, double value) {
    const int n = shape_size(shape);
    return Tensor(std::move(shape), std::vector<double>(idx(n), value));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::vector(std::vector<double> values) {
    const int n = static_cast<int>(values.size());
    return Tensor({n}, std::move(values));
}

double Tensor::item() const {
    if (size() != 1) {
        throw SchemaError("item() requires a single-element tensor, got " + shape_str(shape));
    }
    return data[0];
}

Tensor Tensor::detached() const {
    Tensor t = *this;
    t.node = -1;
    return t;
}

int Tape::push(std::vector<int> inputs, BackwardFn backward, const std::vector<int>& out_shape) {
    nodes_.push_back(Node{std::move(inputs), std::move(backward)});
    shapes_.push_back(out_shape);
    return static_cast<int>(nodes_.size()) - 1;
}

Tensor Tape::leaf(const Tensor& value) {
    Tensor out = value;
    check_finite(out, "leaf");
    out.node = push({}, nullptr, out.shape);
    return out;
}

Tensor Tape::attach(Tensor output, const std::vector<const Tensor*>& inputs, BackwardFn backward) {
    check_finite(output, "attach");
    std::vector<int> in_ids;
    in_ids.reserve(inputs.size());
    bool any = false;
    for (const Tensor* t : inputs) {
        in_ids.push_back(t->node);
        any = any || t->node >= 0;
    }
    if (!any) {
        output.node = -1;  // constant expression, nothing to record
        return output;
    }
    output.node = push(std::move(in_ids), std::move(backward), output.shape);
    return output;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
    require(a.shape == b.shape, "add: shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
    Tensor out = a;
    for (int i = 0; i < out.size(); ++i) {
        out.data[idx(i)] += b.data[idx(i)];
    }
    return attach(std::move(out), {&a, &b},
                  [](const Tensor& g) { return std::vector<Tensor>{g, g}; });
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
    require(a.shape == b.shape, "sub: shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
    Tensor out = a;
    for (int i = 0; i < out.size(); ++i) {
        out.data[idx(i)] -= b.data[idx(i)];
    }
    return attach(std::move(out), {&a, &b}, [](const Tensor& g) {
        Tensor gb = g;
        for (auto& v : gb.data) {
            v = -v;
        }
        return std::vector<Tensor>{g, gb};
    });
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
    require(a.shape == b.shape, "mul: shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
    Tensor out = a;
    for (int i = 0; i < out.size(); ++i) {
        out.data[idx(i)] *= b.data[idx(i)];
    }
    return attach(std::move(out), {&a, &b}, [av = a.data, bv = b.data](const Tensor& g) {
        Tensor ga = g;
        Tensor gb = g;
        for (std::size_t i = 0; i < g.data.size(); ++i) {
            ga.data[i] = g.data[i] * bv[i];
            gb.data[i] = g.data[i] * av[i];
        }
        return std::vector<Tensor>{ga, gb};
    });
}

Tensor Tape::div(const Tensor& a, const Tensor& b) {
    require(a.shape == b.shape, "div: shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
    Tensor out = a;
    for (int i = 0; i < out.size(); ++i) {
        out.data[idx(i)] /= b.data[idx(i)];
    }
    return attach(std::move(out), {&a, &b}, [av = a.data, bv = b.data](const Tensor& g) {
        Tensor ga = g;
        Tensor gb = g;
        for (std::size_t i = 0; i < g.data.size(); ++i) {
            ga.data[i] = g.data[i] / bv[i];
            gb.data[i] = -g.data[i] * av[i] / (bv[i] * bv[i]);
        }
        return std::vector<Tensor>{ga, gb};
    });
}

Tensor Tape::neg(const Tensor& a) { return scale(a, -1.0); }

Tensor Tape::scale(const Tensor& a, double c) {
    Tensor out = a;
    for (auto& v : out.data) {
        v *= c;
    }
    return attach(std::move(out), {&a}, [c](const Tensor& g) {
        Tensor ga = g;
        for (auto& v : ga.data) {
            v *= c;
        }
        return std::vector<Tensor>{ga};
    });
}

Tensor Tape::add_scalar(const Tensor& a, double c) {
    Tensor out = a;
    for (auto& v : out.data) {
        v += c;
    }
    return attach(std::move(out), {&a}, [](const Tensor& g) { return std::vector<Tensor>{g}; });
}

Tensor Tape::sum(const Tensor& a) {
    double s = std::accumulate(a.data.begin(), a.data.end(), 0.0);
    Tensor out = Tensor::scalar(s);
    return attach(std::move(out), {&a}, [shape = a.shape](const Tensor& g) {
        return std::vector<Tensor>{Tensor::full(shape, g.data[0])};
    });
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
    require(a.rank() == 2 && b.rank() == 2, "matmul: expects rank-2 tensors");
    const int m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
    require(k == k2, "matmul: inner dimensions disagree, " + shape_str(a.shape) + " * " + shape_str(b.shape));
    Tensor out = Tensor::zeros({m, n});
    for (int i = 0; i < m; ++i) {
        for (int p = 0; p < k; ++p) {
            const double av = a.data[idx(i * k + p)];
            const double* brow = b.data.data() + idx(p * n);
            double* orow = out.data.data() + idx(i * n);
            for (int j = 0; j < n; ++j) {
                orow[j] += av * brow[j];
            }
        }
    }
    check_finite(out, "matmul");
    return attach(std::move(out), {&a, &b}, [av = a.data, bv = b.data, m, k, n](const Tensor& g) {
        // dA = dC * B^T, dB = A^T * dC
        Tensor ga = Tensor::zeros({m, k});
        Tensor gb = Tensor::zeros({k, n});
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) {
                const double gv = g.data[idx(i * n + j)];
                for (int p = 0; p < k; ++p) {
                    ga.data[idx(i * k + p)] += gv * bv[idx(p * n + j)];
                    gb.data[idx(p * n + j)] += av[idx(i * k + p)] * gv;
                }
            }
        }
        return std::vector<Tensor>{ga, gb};
    });
}

Tensor Tape::matvec(const Tensor& a, const Tensor& x) {
    require(a.rank() == 2 && x.rank() == 1, "matvec: expects matrix and vector");
    const int m = a.dim(0), n = a.dim(1);
    require(n == x.dim(0), "matvec: dimension mismatch " + shape_str(a.shape) + " * " + shape_str(x.shape));
    Tensor out = Tensor::zeros({m});
    for (int i = 0; i < m; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) {
            s += a.data[idx(i * n + j)] * x.data[idx(j)];
        }
        out.data[idx(i)] = s;
    }
    check_finite(out, "matvec");
    return attach(std::move(out), {&a, &x}, [av = a.data, xv = x.data, m, n](const Tensor& g) {
        Tensor ga = Tensor::zeros({m, n});
        Tensor gx = Tensor::zeros({n});
        for (int i = 0; i < m; ++i) {
            const double gv = g.data[idx(i)];
            for (int j = 0; j < n; ++j) {
                ga.data[idx(i * n + j)] = gv * xv[idx(j)];
                gx.data[idx(j)] += av[idx(i * n + j)] * gv;
            }
        }
        return std::vector<Tensor>{ga, gx};
    });
}

Tensor Tape::reshape(const Tensor& a, std::vector<int> shape) {
    require(shape_size(shape) == a.size(), "reshape: size mismatch");
    Tensor out = a;
    out.shape = shape;
    return attach(std::move(out), {&a}, [orig = a.shape](const Tensor& g) {
        Tensor ga = g;
        ga.shape = orig;
        return std::vector<Tensor>{ga};
    });
}

Tensor Tape::slice(const Tensor& a, int begin, int count) {
    require(begin >= 0 && count >= 0 && begin + count <= a.size(), "slice: range out of bounds");
    Tensor out = Tensor::zeros({count});
    std::copy(a.data.begin() + begin, a.data.begin() + begin + count, out.data.begin());
    return attach(std::move(out), {&a}, [shape = a.shape, n = a.size(), begin](const Tensor& g) {
        Tensor ga(shape, std::vector<double>(idx(n), 0.0));
        std::copy(g.data.begin(), g.data.end(), ga.data.begin() + begin);
        return std::vector<Tensor>{ga};
    });
}

Tensor Tape::concat(const std::vector<Tensor>& parts) {
    require(!parts.empty(), "concat: empty input");
    int total = 0;
    for (const Tensor& p : parts) {
        total += p.size();
    }
    Tensor out = Tensor::zeros({total});
    int off = 0;
    std::vector<const Tensor*> in_ptrs;
    std::vector<int> sizes;
    in_ptrs.reserve(parts.size());
    for (const Tensor& p : parts) {
        std::copy(p.data.begin(), p.data.end(), out.data.begin() + off);
        off += p.size();
        in_ptrs.push_back(&p);
        sizes.push_back(p.size());
    }
    std::vector<std::vector<int>> shapes;
    shapes.reserve(parts.size());
    for (const Tensor& p : parts) {
        shapes.push_back(p.shape);
    }
    return attach(std::move(out), in_ptrs, [sizes, shapes](const Tensor& g) {
        std::vector<Tensor> gs;
        gs.reserve(sizes.size());
        int off2 = 0;
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            Tensor gi(shapes[i], std::vector<double>(g.data.begin() + off2, g.data.begin() + off2 + sizes[i]));
            off2 += sizes[i];
            gs.push_back(std::move(gi));
        }
        return gs;
    });
}

Tensor Tape::relu(const Tensor& x) {
    Tensor out = x;
    for (auto& v : out.data) {
        v = v > 0.0 ? v : 0.0;  // subgradient 0 at x == 0
    }
    return attach(std::move(out), {&x}, [xv = x.data](const Tensor& g) {
        Tensor gx = g;
        for (std::size_t i = 0; i < gx.data.size(); ++i) {
            gx.data[i] = xv[i] > 0.0 ? g.data[i] : 0.0;
        }
        return std::vector<Tensor>{gx};
    });
}

Tensor Tape::sigmoid(const Tensor& x) {
    Tensor out = x;
    for (auto& v : out.data) {
        v = 1.0 / (1.0 + std::exp(-v));
    }
    const std::vector<double> ov = out.data;
    return attach(std::move(out), {&x}, [ov](const Tensor& g) {
        Tensor gx = g;
        for (std::size_t i = 0; i < gx.data.size(); ++i) {
            gx.data[i] = g.data[i] * ov[i] * (1.0 - ov[i]);
        }
        return std::vector<Tensor>{gx};
    });
}

Tensor Tape::sqrt(const Tensor& x) {
    Tensor out = x;
    for (auto& v : out.data) {
        v = std::sqrt(v);
    }
    const std::vector<double> ov = out.data;
    return attach(std::move(out), {&x}, [ov](const Tensor& g) {
        Tensor gx = g;
        for (std::size_t i = 0; i < gx.data.size(); ++i) {
            gx.data[i] = g.data[i] * 0.5 / ov[i];
        }
        return std::vector<Tensor>{gx};
    });
}

Tensor Tape::softmax_columns(const Tensor& m) {
    require(m.rank() == 2 && m.dim(0) == m.dim(1), "softmax_columns: expects a square matrix");
    const int n = m.dim(0);
    Tensor out = Tensor::zeros({n, n});
    for (int j = 0; j < n; ++j) {
        double mx = m.data[idx(j)];
        for (int i = 1; i < n; ++i) {
            mx = std::max(mx, m.data[idx(i * n + j)]);
        }
        double denom = 0.0;
        for (int i = 0; i < n; ++i) {
            const double e = std::exp(m.data[idx(i * n + j)] - mx);
            out.data[idx(i * n + j)] = e;
            denom += e;
        }
        for (int i = 0; i < n; ++i) {
            out.data[idx(i * n + j)] /= denom;
        }
    }
    const std::vector<double> sv = out.data;
    return attach(std::move(out), {&m}, [sv, n](const Tensor& g) {
        // Per column j: dX_j = s_j ∘ (dY_j - <s_j, dY_j>)
        Tensor gm = Tensor::zeros({n, n});
        for (int j = 0; j < n; ++j) {
            double dot = 0.0;
            for (int i = 0; i < n; ++i) {
                dot += sv[idx(i * n + j)] * g.data[idx(i * n + j)];
            }
            for (int i = 0; i < n; ++i) {
                gm.data[idx(i * n + j)] = sv[idx(i * n + j)] * (g.data[idx(i * n + j)] - dot);
            }
        }
        return std::vector<Tensor>{gm};
    });
}

Tensor Tape::conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias,
                    int stride, int padding) {
    require(input.rank() == 3, "conv2d: input must be [C,H,W]");
    require(kernels.rank() == 4, "conv2d: kernels must be [C_out,C_in,k,k]");
    const int c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
    const int c_out = kernels.dim(0), kc = kernels.dim(1), kh = kernels.dim(2), kw = kernels.dim(3);
    require(kc == c_in, "conv2d: channel mismatch");
    require(stride >= 1 && padding >= 0, "conv2d: stride must be >=1 and padding >=0");
    require(kh <= h + 2 * padding && kw <= w + 2 * padding, "conv2d: kernel larger than padded input");
    if (!bias.empty()) {
        require(bias.rank() == 1 && bias.dim(0) == c_out, "conv2d: bias must be [C_out]");
    }
    const int ho = (h + 2 * padding - kh) / stride + 1;
    const int wo = (w + 2 * padding - kw) / stride + 1;
    require(ho > 0 && wo > 0, "conv2d: non-positive output size");

    // Cross-correlation over a zero-padded copy of the input.
    const int hp = h + 2 * padding, wp = w + 2 * padding;
    std::vector<double> xp(idx(c_in * hp * wp), 0.0);
    for (int c = 0; c < c_in; ++c) {
        for (int r = 0; r < h; ++r) {
            std::copy(input.data.begin() + idx((c * h + r) * w),
                      input.data.begin() + idx((c * h + r + 1) * w),
                      xp.begin() + idx((c * hp + r + padding) * wp + padding));
        }
    }

    Tensor out = Tensor::zeros({c_out, ho, wo});
    for (int co = 0; co < c_out; ++co) {
        const double b = bias.empty() ? 0.0 : bias.data[idx(co)];
        for (int r = 0; r < ho; ++r) {
            for (int q = 0; q < wo; ++q) {
                double acc = b;
                const int r0 = r * stride, q0 = q * stride;
                for (int c = 0; c < c_in; ++c) {
                    const double* kker = kernels.data.data() + idx(((co * c_in + c) * kh) * kw);
                    const double* xc = xp.data() + idx(c * hp * wp);
                    for (int u = 0; u < kh; ++u) {
                        const double* xrow = xc + idx((r0 + u) * wp + q0);
                        const double* krow = kker + idx(u * kw);
                        for (int v = 0; v < kw; ++v) {
                            acc += xrow[v] * krow[v];
                        }
                    }
                }
                out.data[idx((co * ho + r) * wo + q)] = acc;
            }
        }
    }
    check_finite(out, "conv2d");

    std::vector<const Tensor*> ins{&input, &kernels};
    if (!bias.empty()) {
        ins.push_back(&bias);
    }
    const bool has_bias = !bias.empty();
    return attach(std::move(out), ins,
                  [xp = std::move(xp), kv = kernels.data, c_in, h, w, c_out, kh, kw, ho, wo,
                   stride, padding, hp, wp, has_bias](const Tensor& g) {
        std::vector<double> dxp(xp.size(), 0.0);
        Tensor dk = Tensor::zeros({c_out, c_in, kh, kw});
        Tensor db = Tensor::zeros({c_out});
        for (int co = 0; co < c_out; ++co) {
            for (int r = 0; r < ho; ++r) {
                for (int q = 0; q < wo; ++q) {
                    const double gv = g.data[idx((co * ho + r) * wo + q)];
                    if (gv == 0.0) {
                        continue;
                    }
                    db.data[idx(co)] += gv;
                    const int r0 = r * stride, q0 = q * stride;
                    for (int c = 0; c < c_in; ++c) {
                        const double* xc = xp.data() + idx(c * hp * wp);
                        double* dxc = dxp.data() + idx(c * hp * wp);
                        for (int u = 0; u < kh; ++u) {
                            const double* xrow = xc + idx((r0 + u) * wp + q0);
                            double* dxrow = dxc + idx((r0 + u) * wp + q0);
                            const std::size_t kbase = idx(((co * c_in + c) * kh + u) * kw);
                            for (int v = 0; v < kw; ++v) {
                                dk.data[kbase + idx(v)] += gv * xrow[v];
                                dxrow[v] += gv * kv[kbase + idx(v)];
                            }
                        }
                    }
                }
            }
        }
        // Strip the padding border back off.
        Tensor dx = Tensor::zeros({c_in, h, w});
        for (int c = 0; c < c_in; ++c) {
            for (int r = 0; r < h; ++r) {
                std::copy(dxp.begin() + idx((c * hp + r + padding) * wp + padding),
                          dxp.begin() + idx((c * hp + r + padding) * wp + padding + w),
                          dx.data.begin() + idx((c * h + r) * w));
            }
        }
        std::vector<Tensor> gs{std::move(dx), std::move(dk)};
        if (has_bias) {
            gs.push_back(std::move(db));
        }
        return gs;
    });
}

Tensor Tape::global_avg_pool(const Tensor& f) {
    require(f.rank() == 3, "global_avg_pool: expects [C,H,W]");
    const int c = f.dim(0), h = f.dim(1), w = f.dim(2);
    require(h >= 1 && w >= 1, "global_avg_pool: empty spatial extent");
    Tensor out = Tensor::zeros({c});
    const double inv = 1.0 / (h * w);
    for (int k = 0; k < c; ++k) {
        double s = 0.0;
        for (int i = 0; i < h * w; ++i) {
            s += f.data[idx(k * h * w + i)];
        }
        out.data[idx(k)] = s * inv;
    }
    return attach(std::move(out), {&f}, [c, h, w, inv](const Tensor& g) {
        Tensor gf = Tensor::zeros({c, h, w});
        for (int k = 0; k < c; ++k) {
            const double gv = g.data[idx(k)] * inv;
            for (int i = 0; i < h * w; ++i) {
                gf.data[idx(k * h * w + i)] = gv;
            }
        }
        return std::vector<Tensor>{gf};
    });
}

Tensor Tape::mse_loss(const Tensor& pred, const Tensor& target) {
    require(pred.shape == target.shape, "mse_loss: shape mismatch " + shape_str(pred.shape) +
                                            " vs " + shape_str(target.shape));
    const int n = pred.size();
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = pred.data[idx(i)] - target.data[idx(i)];
        s += d * d;
    }
    Tensor out = Tensor::scalar(s / n);
    return attach(std::move(out), {&pred, &target},
                  [pv = pred.data, tv = target.data, shape = pred.shape, n](const Tensor& g) {
        Tensor gpred(shape, std::vector<double>(idx(n), 0.0));
        Tensor gtgt(shape, std::vector<double>(idx(n), 0.0));
        const double c = 2.0 * g.data[0] / n;
        for (int i = 0; i < n; ++i) {
            const double d = c * (pv[idx(i)] - tv[idx(i)]);
            gpred.data[idx(i)] = d;
            gtgt.data[idx(i)] = -d;
        }
        return std::vector<Tensor>{gpred, gtgt};
    });
}

void Tape::backward(const Tensor& loss) {
    if (loss.size() != 1) {
        throw SchemaError("backward: loss must be scalar, got " + shape_str(loss.shape));
    }
    if (loss.node < 0 || loss.node >= static_cast<int>(nodes_.size())) {
        throw SchemaError("backward: loss does not live on this tape");
    }
    grads_.assign(nodes_.size(), Tensor{});
    grads_[idx(loss.node)] = Tensor(loss.shape, {1.0});
    for (int i = loss.node; i >= 0; --i) {
        const Node& node = nodes_[idx(i)];
        if (grads_[idx(i)].empty() || !node.backward) {
            continue;
        }
        std::vector<Tensor> gs = node.backward(grads_[idx(i)]);
        if (gs.size() != node.inputs.size()) {
            throw SchemaError("backward: node produced wrong gradient count");
        }
        for (std::size_t j = 0; j < gs.size(); ++j) {
            const int id = node.inputs[j];
            if (id < 0) {
                continue;  // constant input
            }
            Tensor& acc = grads_[idx(id)];
            if (acc.empty()) {
                acc = std::move(gs[j]);
            } else {
                for (std::size_t k = 0; k < acc.data.size(); ++k) {
                    acc.data[k] += gs[j].data[k];
                }
            }
        }
    }
}

bool Tape::has_grad(const Tensor& t) const {
    return t.node >= 0 && t.node < static_cast<int>(grads_.size()) && !grads_[idx(t.node)].empty();
}

Tensor Tape::grad(const Tensor& t) const {
    if (t.node < 0 || t.node >= static_cast<int>(shapes_.size())) {
        throw SchemaError("grad: tensor does not live on this tape");
    }
    if (has_grad(t)) {
        return grads_[idx(t.node)];
    }
    return Tensor::zeros(t.shape);
}

void Tape::reset() {
    nodes_.clear();
    grads_.clear();
    shapes_.clear();
}

}  // namespace vagn::ad
