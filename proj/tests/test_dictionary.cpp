#include <doctest.h>

#include <algorithm>
#include <bit>
#include <fstream>

#include "markerlab/dictionary.hpp"
#include "markerlab/error.hpp"
#include "markerlab/rng.hpp"
#include "test_support.hpp"

using namespace markerlab;

TEST_CASE("bitgrid string round trip and indexing") {
    const std::string s = "100000000000000000000000000000000001";
    const BitGrid g = BitGrid::from_string(s);
    CHECK(g.get(0, 0) == 1);
    CHECK(g.get(5, 5) == 1);
    CHECK(g.get(0, 1) == 0);
    CHECK(g.to_string() == s);
}

TEST_CASE("bitgrid parse errors") {
    CHECK_THROWS_AS(BitGrid::from_string("01"), ParseError);
    CHECK_THROWS_AS(BitGrid::from_string(std::string(36, '2')), ParseError);
}

TEST_CASE("rotate_bits identity and group property") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const BitGrid g{rng.next_u64() & ((1ull << 36) - 1)};
        CHECK(rotate_bits(g, 0) == g);
        CHECK(rotate_bits(g, 4) == g);
        BitGrid r = g;
        for (int k = 0; k < 4; ++k) r = rotate_bits(r, 1);
        CHECK(r == g);
        CHECK(rotate_bits(rotate_bits(g, 1), 3) == g);
    }
}

TEST_CASE("rotate_bits index map: (0,0) moves to (0,5) clockwise") {
    BitGrid g;
    g.set(0, 0, 1);
    const BitGrid r = rotate_bits(g, 1);
    CHECK(r.get(0, 5) == 1);
    CHECK(std::popcount(r.bits) == 1);
}

TEST_CASE("hamming basics") {
    Rng rng(11);
    const BitGrid b{rng.next_u64() & ((1ull << 36) - 1)};
    CHECK(hamming(b, b) == 0);
    CHECK(hamming(b, b.complement()) == 36);
    BitGrid flipped = b;
    flipped.bits ^= 0b10101;  // 3 set bits
    CHECK(hamming(b, flipped) == 3);
    CHECK(hamming(flipped, b) == 3);
}

TEST_CASE("load_dictionary: full 250-code family") {
    const Dictionary& dict = testsupport::aruco_dict();
    CHECK(dict.size() == 250);
    for (int i = 0; i < 250; ++i) CHECK(dict.entry(i).id == i);
}

TEST_CASE("load_dictionary: malformed line reports its number") {
    testsupport::TempDir tmp("dict_badline");
    {
        std::ofstream f(tmp.str("bad.txt"));
        f << "# comment\n";
        f << std::string(36, '0') << "\n";
        f << std::string(35, '1') << "\n";  // line 3: too short
    }
    try {
        load_dictionary(tmp.str("bad.txt"));
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
}

TEST_CASE("load_dictionary: rotation duplicate rejected") {
    testsupport::TempDir tmp("dict_rotdup");
    const BitGrid a = BitGrid::from_string("110000000000000000000000000000000000");
    {
        std::ofstream f(tmp.str("dup.txt"));
        f << a.to_string() << "\n";
        f << rotate_bits(a, 1).to_string() << "\n";
    }
    CHECK_THROWS_AS(load_dictionary(tmp.str("dup.txt")), ValidationError);
}

TEST_CASE("match_code: exact, rotated, one-bit-flipped") {
    const Dictionary& dict = testsupport::aruco_dict();
    const BitGrid code7 = dict.entry(7).code;

    MatchResult m = dict.match(code7);
    CHECK(m.id == 7);
    CHECK(m.distance == 0);
    CHECK(m.rotation == 0);

    // Observed = entry rotated one turn CW; aligning needs 3 more turns.
    m = dict.match(rotate_bits(code7, 1));
    CHECK(m.id == 7);
    CHECK(m.distance == 0);
    CHECK(m.rotation == 3);

    BitGrid flipped = code7;
    flipped.bits ^= 1ull << 17;
    m = dict.match(flipped);
    CHECK(m.id == 7);
    CHECK(m.distance == 1);

    // Brute force: no other (entry, rotation) candidate within distance 1.
    int best_other = 99;
    for (const auto& e : dict.entries()) {
        if (e.id == 7) continue;
        for (int r = 0; r < 4; ++r)
            best_other = std::min(best_other, hamming(rotate_bits(flipped, r), e.code));
    }
    CHECK(best_other > 1);
}

TEST_CASE("match_code: exhaustive identity over entries x rotations") {
    const Dictionary& dict = testsupport::aruco_dict();
    for (const auto& e : dict.entries()) {
        for (int r = 0; r < 4; ++r) {
            const MatchResult m = dict.match(rotate_bits(e.code, r));
            CHECK(m.id == e.id);
            CHECK(m.distance == 0);
        }
    }
}

TEST_CASE("match_code distance never exceeds rotation-0 hamming") {
    const Dictionary& dict = testsupport::aruco_dict();
    Rng rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        const BitGrid probe{rng.next_u64() & ((1ull << 36) - 1)};
        const MatchResult m = dict.match(probe);
        for (const auto& e : dict.entries())
            CHECK(m.distance <= hamming(probe, e.code));
    }
}

TEST_CASE("match_code determinism") {
    const Dictionary& dict = testsupport::aruco_dict();
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const BitGrid probe{rng.next_u64() & ((1ull << 36) - 1)};
        const MatchResult a = dict.match(probe);
        const MatchResult b = dict.match(probe);
        CHECK(a.id == b.id);
        CHECK(a.distance == b.distance);
        CHECK(a.rotation == b.rotation);
    }
}

TEST_CASE("empty dictionary match throws") {
    CHECK_THROWS_AS([] {
        const Dictionary empty("empty", {});
        return empty.match(BitGrid{});
    }(), ValidationError);
}

TEST_CASE("rotation-symmetric code rejected even alone") {
    // The all-zero grid equals its own rotation: ambiguous by definition.
    CHECK_THROWS_AS(Dictionary("bad", {BitGrid::from_string(std::string(36, '0'))}),
                    ValidationError);
}
