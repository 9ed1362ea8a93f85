#include "vagn/perception.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "vagn/errors.hpp"

namespace vagn::vision {

namespace {

std::size_t idx(int i) { return static_cast<std::size_t>(i); }

ad::Tensor min_max_normalize(ad::Tensor m) {
    const auto [lo_it, hi_it] = std::minmax_element(m.data.begin(), m.data.end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi - lo < 1e-12) {
        std::fill(m.data.begin(), m.data.end(), 0.0);
        return m;
    }
    for (double& v : m.data) {
        v = (v - lo) / (hi - lo);
    }
    return m;
}

}  // namespace

EncoderOut extract_predicates(ad::Tape& tape, const BevRaster& raster,
                              const EncoderWeights& weights) {
    const ad::Tensor& x = raster.channels;
    if (x.rank() != 3 || x.dim(0) != weights.conv1_w.dim(1)) {
        throw SchemaError("extract_predicates: raster shape " + ad::shape_str(x.shape) +
                          " does not match encoder input channels");
    }
    EncoderOut out;
    ad::Tensor h = tape.relu(tape.conv2d(x, weights.conv1_w, weights.conv1_b, 2, 1));
    h = tape.relu(tape.conv2d(h, weights.conv2_w, weights.conv2_b, 2, 1));
    out.features = tape.relu(tape.conv2d(h, weights.conv3_w, weights.conv3_b, 2, 1));
    out.pooled = tape.global_avg_pool(out.features);
    out.pv = tape.add(tape.matvec(weights.pred_w, out.pooled), weights.pred_b);
    return out;
}

ad::Tensor predicate_activation_map(const ad::Tensor& features, const ad::Tensor& linear_w,
                                    int m) {
    if (features.rank() != 3) {
        throw SchemaError("predicate_activation_map: features must be [K,H,W]");
    }
    if (m < 0 || m >= linear_w.dim(0)) {
        throw SchemaError("predicate_activation_map: predicate index out of range");
    }
    const int k = features.dim(0), h = features.dim(1), w = features.dim(2);
    if (linear_w.dim(1) != k) {
        throw SchemaError("predicate_activation_map: weight/feature channel mismatch");
    }
    ad::Tensor map = ad::Tensor::zeros({h, w});
    for (int c = 0; c < k; ++c) {
        const double lw = linear_w.data[idx(m * k + c)];
        const double* f = features.data.data() + idx(c * h * w);
        for (int i = 0; i < h * w; ++i) {
            map.data[idx(i)] += lw * f[i];
        }
    }
    return min_max_normalize(std::move(map));
}

ad::Tensor qstate_saliency(const ad::Tensor& features, const ad::Tensor& linear_w,
                           const ad::Tensor& W, const ad::Tensor& pv, int n, int out_size) {
    if (W.rank() != 3) {
        throw SchemaError("qstate_saliency: W must be [M,N,N]");
    }
    const int m_count = W.dim(0);
    const int n_count = W.dim(1);
    if (n < 0 || n >= n_count) {
        throw SchemaError("qstate_saliency: q-state index out of range");
    }
    const int h = features.dim(1), w = features.dim(2);
    ad::Tensor acc = ad::Tensor::zeros({h, w});
    for (int m = 0; m < m_count; ++m) {
        // Positive inflow of predicate m into state n: sum over source states.
        double inflow = 0.0;
        for (int j = 0; j < n_count; ++j) {
            inflow += std::max(W.data[idx((m * n_count + n) * n_count + j)], 0.0);
        }
        const double c = std::abs(pv.data[idx(m)]) * inflow;
        if (c == 0.0) {
            continue;
        }
        const ad::Tensor am = predicate_activation_map(features, linear_w, m);
        for (int i = 0; i < h * w; ++i) {
            acc.data[idx(i)] += c * am.data[idx(i)];
        }
    }
    return bilinear_upsample(min_max_normalize(std::move(acc)), out_size, out_size);
}

ad::Tensor bilinear_upsample(const ad::Tensor& map, int out_h, int out_w) {
    const int h = map.dim(0), w = map.dim(1);
    if (h == out_h && w == out_w) {
        return map;
    }
    ad::Tensor out = ad::Tensor::zeros({out_h, out_w});
    const double sy = static_cast<double>(h) / out_h;
    const double sx = static_cast<double>(w) / out_w;
    for (int r = 0; r < out_h; ++r) {
        // Sample at pixel centers of the source grid.
        const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, h - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, h - 1);
        const double wy = fy - y0;
        for (int c = 0; c < out_w; ++c) {
            const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, w - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, w - 1);
            const double wx = fx - x0;
            const double v00 = map.data[idx(y0 * w + x0)];
            const double v01 = map.data[idx(y0 * w + x1)];
            const double v10 = map.data[idx(y1 * w + x0)];
            const double v11 = map.data[idx(y1 * w + x1)];
            out.data[idx(r * out_w + c)] = (1.0 - wy) * ((1.0 - wx) * v00 + wx * v01) +
                                           wy * ((1.0 - wx) * v10 + wx * v11);
        }
    }
    return out;
}

void write_pgm(const std::filesystem::path& path, const ad::Tensor& map01) {
    if (map01.rank() != 2) {
        throw SchemaError("write_pgm: expects a 2-D map");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path.string());
    }
    const int h = map01.dim(0), w = map01.dim(1);
    out << "P5\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(w));
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double v = std::clamp(map01.data[idx(r * w + c)], 0.0, 1.0);
            row[static_cast<std::size_t>(c)] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
        out.write(reinterpret_cast<const char*>(row.data()), w);
    }
}

}  // namespace vagn::vision
