#pragma once

#include <filesystem>

#include "vagn/tensor.hpp"

namespace vagn::vision {

// Ego-centric multichannel semantic raster: [C,H,W] with binary values,
// ego heading pointing up, ego footprint centered.
struct BevRaster {
    ad::Tensor channels;
    double resolution = 0.5;  // m/pixel
};

// Tape-bound encoder weights: three stride-2 conv layers plus the predicate
// projection applied after global average pooling.
struct EncoderWeights {
    ad::Tensor conv1_w, conv1_b;
    ad::Tensor conv2_w, conv2_b;
    ad::Tensor conv3_w, conv3_b;
    ad::Tensor pred_w, pred_b;  // [M,K], [M]
};

struct EncoderOut {
    ad::Tensor pv;        // [M]
    ad::Tensor features;  // pre-pooling feature maps [K,H',W']
    ad::Tensor pooled;    // [K]
};

// ConvEncoder -> GlobalAveragePooling -> Linear. Returns the predicate
// vector together with the feature maps used by the saliency exports.
EncoderOut extract_predicates(ad::Tape& tape, const BevRaster& raster,
                              const EncoderWeights& weights);

// Activation map for predicate m: A_m(x,y) = sum_k L[m,k] * f_k(x,y),
// min-max normalized to [0,1] (all-zero when the map is constant).
ad::Tensor predicate_activation_map(const ad::Tensor& features, const ad::Tensor& linear_w,
                                    int m);

// Per-q-state attention: S_n = sum_m c_{m,n} A_m with
// c_{m,n} = |pv_m| * sum_j max(W_m[n,j], 0), normalized to [0,1] and
// bilinearly upsampled to out_size x out_size.
ad::Tensor qstate_saliency(const ad::Tensor& features, const ad::Tensor& linear_w,
                           const ad::Tensor& W, const ad::Tensor& pv, int n, int out_size);

ad::Tensor bilinear_upsample(const ad::Tensor& map, int out_h, int out_w);

// 8-bit binary PGM, values scaled from [0,1].
void write_pgm(const std::filesystem::path& path, const ad::Tensor& map01);

}  // namespace vagn::vision
