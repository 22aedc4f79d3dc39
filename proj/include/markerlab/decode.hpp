#pragma once

#include "markerlab/dictionary.hpp"
#include "markerlab/geometry.hpp"
#include "markerlab/imaging.hpp"

namespace markerlab {

struct DecodeOutcome {
    BitGrid bits;
    MatchResult match;
    bool accepted = false;  // match.distance <= threshold
};

/// Fraction of the annotated (black-ring outer boundary) square covered by
/// the ring on each side: the payload spans the inner 6 of 8 cells.
inline constexpr double kRingInset = 1.0 / 8.0;

/// Rectifies the payload under `quad` to a 32x32 luma crop normalized to
/// [0,1]. The quad is inset by `inset` per side (in its own plane, via the
/// unit-square homography) so the 6x6 payload spans the full output.
GrayImage rectify(const Image& img, const Quad& quad, double inset = kRingInset);

/// Reference bit reader: averages the central 50% window of each payload
/// cell of the rectified crop; bit = 1 when the mean is >= 0.5. Requires a
/// 32x32 input where the payload fills the frame.
BitGrid extract_bits(const GrayImage& rectified);

/// match_code plus the paper's Hamming acceptance threshold.
DecodeOutcome identify(const Dictionary& dict, BitGrid bits, int max_hamming);

/// rectify -> extract_bits -> identify.
DecodeOutcome decode_at(const Image& img, const Quad& quad,
                        const Dictionary& dict, int max_hamming,
                        double inset = kRingInset);

}  // namespace markerlab
