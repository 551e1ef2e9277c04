#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "geowalk/common.hpp"

namespace geowalk {

// Letter of a free group: +i encodes the i-th generator (1-based), -i its
// inverse.  Generator i prints as the letter 'a'+i-1; an inverse carries a
// trailing apostrophe, so a*b'*a prints as "ab'a".  The identity prints "1".
using Letter = std::int8_t;

inline constexpr int MAX_RANK = 26;

// Freely reduced word.  The letter vector never contains an adjacent pair
// (x, -x); all mutation goes through push_cancel or the FreeGroup operations.
struct ReducedWord {
    std::vector<Letter> letters;

    ReducedWord() = default;
    explicit ReducedWord(std::vector<Letter> ls) : letters(std::move(ls)) {}

    bool empty() const { return letters.empty(); }
    std::size_t size() const { return letters.size(); }

    // Appends one letter, cancelling against the current last letter.
    void push_cancel(Letter x) {
        if (!letters.empty() && letters.back() == static_cast<Letter>(-x))
            letters.pop_back();
        else
            letters.push_back(x);
    }

    ReducedWord prefix(std::size_t len) const {
        return ReducedWord(std::vector<Letter>(letters.begin(), letters.begin() + len));
    }

    bool operator==(const ReducedWord& o) const { return letters == o.letters; }
    bool operator!=(const ReducedWord& o) const { return !(*this == o); }
};

// Length of the longest common prefix of two reduced words.
std::size_t common_prefix_length(const ReducedWord& u, const ReducedWord& v);

// Shortlex order (length first, then letter-wise).  Used wherever a
// deterministic ordering of words is needed.
bool shortlex_less(const ReducedWord& u, const ReducedWord& v);

// Letter-wise lexicographic order with the letter ranking a < a' < b < b' ...
// This is the child ordering of the rooted Cayley tree.
bool tree_lex_less(const ReducedWord& u, const ReducedWord& v);
int letter_rank(Letter x);

struct WordHash {
    std::size_t operator()(const ReducedWord& w) const {
        std::uint64_t h = 1469598103934665603ULL;
        for (Letter l : w.letters) {
            h ^= static_cast<std::uint8_t>(l);
            h *= 1099511628211ULL;
        }
        return static_cast<std::size_t>(h);
    }
};

std::string word_to_string(const ReducedWord& w);
// Parses "ab'a" style literals; "1" (or "") is the identity.  Rejects letters
// beyond the given rank.
ReducedWord parse_word(const std::string& text, int rank);

// Free group of the given rank together with its Cayley-tree geometry
// (basepoint the identity, distance the word metric).  Elements and points
// share the ReducedWord representation.
struct FreeGroup {
    int rank = 2;

    using Element = ReducedWord;
    using Point = ReducedWord;

    explicit FreeGroup(int k = 2);

    Element identity() const { return ReducedWord{}; }
    Element compose(const Element& u, const Element& v) const;
    Element inverse(const Element& u) const;
    Point basepoint() const { return ReducedWord{}; }
    Point act(const Element& g, const Point& p) const { return compose(g, p); }
    double distance(const Point& p, const Point& q) const;

    // a1, a1^-1, a2, a2^-1, ...
    std::vector<Element> generators() const;

    std::string element_literal(const Element& g) const { return word_to_string(g); }
    Element parse_element(const std::string& text) const { return parse_word(text, rank); }
    std::size_t element_size(const Element& g) const { return g.size(); }
};

// Exact word-metric distance d(u, v) = |u^-1 v|.
std::int64_t word_distance(const ReducedWord& u, const ReducedWord& v);

} // namespace geowalk
