#include "markerlab/dictionary.hpp"

#include <bit>
#include <filesystem>
#include <fstream>
#include <unordered_map>

#include "markerlab/error.hpp"

namespace markerlab {

BitGrid BitGrid::from_string(const std::string& s) {
    if (s.size() != kBits)
        throw ParseError("BitGrid: expected 36 characters, got " + std::to_string(s.size()));
    BitGrid g;
    for (int i = 0; i < kBits; ++i) {
        const char c = s[static_cast<std::size_t>(i)];
        if (c == '1') g.bits |= 1ull << i;
        else if (c != '0') throw ParseError(std::string("BitGrid: invalid character '") + c + "'");
    }
    return g;
}

std::string BitGrid::to_string() const {
    std::string s(kBits, '0');
    for (int i = 0; i < kBits; ++i)
        if ((bits >> i) & 1u) s[static_cast<std::size_t>(i)] = '1';
    return s;
}

BitGrid rotate_bits(BitGrid code, int quarter_turns) {
    int t = quarter_turns % 4;
    if (t < 0) t += 4;
    BitGrid out = code;
    for (int k = 0; k < t; ++k) {
        BitGrid r;
        for (int row = 0; row < BitGrid::kSide; ++row)
            for (int col = 0; col < BitGrid::kSide; ++col)
                if (out.get(row, col)) r.set(col, BitGrid::kSide - 1 - row, 1);
        out = r;
    }
    return out;
}

int hamming(BitGrid a, BitGrid b) {
    return std::popcount(a.bits ^ b.bits);
}

namespace {

// `where` labels each code in error messages (file line or plain id).
void validate_rotation_unique(const std::vector<BitGrid>& codes,
                              const std::vector<std::string>& where) {
    std::unordered_map<std::uint64_t, std::size_t> seen;
    for (std::size_t i = 0; i < codes.size(); ++i) {
        BitGrid rot = codes[i];
        for (int r = 0; r < 4; ++r) {
            auto [it, inserted] = seen.emplace(rot.bits, i);
            if (!inserted)
                throw ValidationError("dictionary: " + where[i] + " duplicates " +
                                      where[it->second] + " under rotation " +
                                      std::to_string(r));
            rot = rotate_bits(rot, 1);
        }
    }
}

}  // namespace

Dictionary::Dictionary(std::string name, std::vector<BitGrid> codes)
    : name_(std::move(name)) {
    std::vector<std::string> where(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i)
        where[i] = "code " + std::to_string(i);
    validate_rotation_unique(codes, where);
    entries_.reserve(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i)
        entries_.push_back({static_cast<int>(i), codes[i]});
}

MatchResult Dictionary::match(BitGrid observed) const {
    if (entries_.empty()) throw ValidationError("match: empty dictionary");
    MatchResult best;
    BitGrid rotated[4];
    rotated[0] = observed;
    for (int r = 1; r < 4; ++r) rotated[r] = rotate_bits(rotated[r - 1], 1);
    for (const Entry& e : entries_) {
        for (int r = 0; r < 4; ++r) {
            const int d = hamming(rotated[r], e.code);
            // Strict < keeps the first (lowest id, lowest rotation) hit on ties.
            if (d < best.distance) best = {e.id, d, r};
        }
    }
    return best;
}

Dictionary load_dictionary(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_dictionary: cannot open " + path);
    std::vector<BitGrid> codes;
    std::vector<std::string> where;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        try {
            codes.push_back(BitGrid::from_string(line));
        } catch (const ParseError& e) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        where.push_back("line " + std::to_string(lineno) + " (id " +
                        std::to_string(codes.size() - 1) + ")");
    }
    if (codes.empty())
        throw ParseError("load_dictionary: no codes in " + path);
    validate_rotation_unique(codes, where);
    return Dictionary(std::filesystem::path(path).stem().string(), std::move(codes));
}

}  // namespace markerlab
