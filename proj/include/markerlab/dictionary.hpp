#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace markerlab {

/// 6x6 payload bits of a marker, row-major (left to right, top to bottom),
/// 0 = black cell, 1 = white cell. Packed into the low 36 bits.
struct BitGrid {
    std::uint64_t bits = 0;

    static constexpr int kSide = 6;
    static constexpr int kBits = 36;

    int get(int row, int col) const {
        return static_cast<int>((bits >> (row * kSide + col)) & 1u);
    }
    void set(int row, int col, int value) {
        const std::uint64_t mask = 1ull << (row * kSide + col);
        bits = value ? (bits | mask) : (bits & ~mask);
    }

    /// Parses a 36-character string of '0'/'1'. Throws ParseError otherwise.
    static BitGrid from_string(const std::string& s);
    std::string to_string() const;

    BitGrid complement() const {
        return {~bits & ((1ull << kBits) - 1)};
    }

    bool operator==(const BitGrid&) const = default;
};

/// Rotates the payload `quarter_turns` quarter-turns clockwise
/// (taken modulo 4). Cell (r,c) moves to (c, 5-r).
BitGrid rotate_bits(BitGrid code, int quarter_turns);

/// Number of differing cells, 0..36.
int hamming(BitGrid a, BitGrid b);

struct MatchResult {
    int id = -1;
    int distance = BitGrid::kBits + 1;
    int rotation = 0;  // quarter-turns CW applied to the observed code
};

/// Ordered marker code book. Immutable after load; all queries are pure and
/// safe for concurrent readers.
class Dictionary {
public:
    struct Entry {
        int id;
        BitGrid code;
    };

    Dictionary(std::string name, std::vector<BitGrid> codes);

    const std::string& name() const { return name_; }
    std::size_t size() const { return entries_.size(); }
    const Entry& entry(int id) const { return entries_[static_cast<std::size_t>(id)]; }
    const std::vector<Entry>& entries() const { return entries_; }

    /// Nearest entry over all (entry, rotation) pairs; `rotation` is the
    /// number of clockwise quarter-turns that aligns the observed code with
    /// the stored one. Ties break on lower distance, then lower id, then
    /// lower rotation. Throws ValidationError on an empty dictionary.
    MatchResult match(BitGrid observed) const;

private:
    std::string name_;
    std::vector<Entry> entries_;
};

/// Loads the dictionary file format: UTF-8 text, one marker per line,
/// exactly 36 chars of '0'/'1' (row-major), line order = id; '#' lines are
/// comments. Validates uniqueness of every code under all four rotations.
Dictionary load_dictionary(const std::string& path);

}  // namespace markerlab
