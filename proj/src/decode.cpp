#include "markerlab/decode.hpp"

#include <cmath>

#include "markerlab/error.hpp"

namespace markerlab {

namespace {

constexpr int kRectSize = 32;

Quad inset_quad(const Quad& quad, double inset) {
    // Shrink in the marker plane: corner k of the unit square moves to the
    // matching corner of [inset, 1-inset]^2, carried back through H^-1.
    const Quad unit = rect_quad({0, 0, 1, 1});
    const Homography to_image = invert(homography_from_quad(quad, unit));
    const Quad inner_unit = rect_quad({inset, inset, 1 - 2 * inset, 1 - 2 * inset});
    Quad out;
    for (std::size_t k = 0; k < 4; ++k)
        out[k] = apply_homography(to_image, inner_unit[k]);
    return out;
}

}  // namespace

GrayImage rectify(const Image& img, const Quad& quad, double inset) {
    if (inset < 0.0 || inset >= 0.5)
        throw ValidationError("rectify: inset must be in [0, 0.5)");
    const Quad payload = inset > 0.0 ? inset_quad(quad, inset) : quad;
    return normalize_minmax(to_luma(warp_crop(img, payload, kRectSize, kRectSize)));
}

BitGrid extract_bits(const GrayImage& rectified) {
    if (rectified.width != kRectSize || rectified.height != kRectSize)
        throw ValidationError("extract_bits: expected a 32x32 input");
    BitGrid bits;
    const double cell = static_cast<double>(kRectSize) / BitGrid::kSide;
    for (int r = 0; r < BitGrid::kSide; ++r)
        for (int c = 0; c < BitGrid::kSide; ++c) {
            // Central 50% window of the cell, pixel centers inside it.
            const double cx = (c + 0.5) * cell;
            const double cy = (r + 0.5) * cell;
            const double half = 0.25 * cell;
            const int x0 = static_cast<int>(std::ceil(cx - half - 0.5));
            const int x1 = static_cast<int>(std::floor(cx + half - 0.5));
            const int y0 = static_cast<int>(std::ceil(cy - half - 0.5));
            const int y1 = static_cast<int>(std::floor(cy + half - 0.5));
            double sum = 0.0;
            int count = 0;
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    sum += rectified.at(x, y);
                    ++count;
                }
            if (count > 0 && sum / count >= 0.5) bits.set(r, c, 1);
        }
    return bits;
}

DecodeOutcome identify(const Dictionary& dict, BitGrid bits, int max_hamming) {
    DecodeOutcome out;
    out.bits = bits;
    out.match = dict.match(bits);
    out.accepted = out.match.distance <= max_hamming;
    return out;
}

DecodeOutcome decode_at(const Image& img, const Quad& quad,
                        const Dictionary& dict, int max_hamming, double inset) {
    return identify(dict, extract_bits(rectify(img, quad, inset)), max_hamming);
}

}  // namespace markerlab
