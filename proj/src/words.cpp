#include "geowalk/words.hpp"

#include <algorithm>

namespace geowalk {

std::size_t common_prefix_length(const ReducedWord& u, const ReducedWord& v) {
    const std::size_t n = std::min(u.size(), v.size());
    std::size_t i = 0;
    while (i < n && u.letters[i] == v.letters[i]) ++i;
    return i;
}

int letter_rank(Letter x) {
    // a=0, a'=1, b=2, b'=3, ...
    const int idx = (x > 0 ? x : -x) - 1;
    return 2 * idx + (x > 0 ? 0 : 1);
}

bool tree_lex_less(const ReducedWord& u, const ReducedWord& v) {
    const std::size_t n = std::min(u.size(), v.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (u.letters[i] != v.letters[i])
            return letter_rank(u.letters[i]) < letter_rank(v.letters[i]);
    }
    return u.size() < v.size();
}

bool shortlex_less(const ReducedWord& u, const ReducedWord& v) {
    if (u.size() != v.size()) return u.size() < v.size();
    return tree_lex_less(u, v);
}

std::string word_to_string(const ReducedWord& w) {
    if (w.empty()) return "1";
    std::string out;
    out.reserve(w.size() * 2);
    for (Letter l : w.letters) {
        const int idx = (l > 0 ? l : -l) - 1;
        out.push_back(static_cast<char>('a' + idx));
        if (l < 0) out.push_back('\'');
    }
    return out;
}

ReducedWord parse_word(const std::string& text, int rank) {
    ReducedWord w;
    if (text == "1" || text.empty()) return w;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c < 'a' || c > 'z')
            throw ConfigError("bad word literal '" + text + "': unexpected character '" +
                              std::string(1, c) + "'");
        const int idx = c - 'a' + 1;
        if (idx > rank)
            throw ConfigError("bad word literal '" + text + "': generator '" +
                              std::string(1, c) + "' exceeds rank " + std::to_string(rank));
        Letter l = static_cast<Letter>(idx);
        if (i + 1 < text.size() && text[i + 1] == '\'') {
            l = static_cast<Letter>(-idx);
            ++i;
        }
        w.push_cancel(l); // tolerate unreduced input; result is reduced
    }
    return w;
}

FreeGroup::FreeGroup(int k) : rank(k) {
    if (k < 1 || k > MAX_RANK)
        throw ConfigError("free group rank must be in [1, " + std::to_string(MAX_RANK) +
                          "], got " + std::to_string(k));
}

FreeGroup::Element FreeGroup::compose(const Element& u, const Element& v) const {
    // Cancellation happens only at the seam, so count it first and splice.
    std::size_t cut = 0;
    const std::size_t limit = std::min(u.size(), v.size());
    while (cut < limit &&
           u.letters[u.size() - 1 - cut] == static_cast<Letter>(-v.letters[cut]))
        ++cut;
    ReducedWord out;
    out.letters.reserve(u.size() + v.size() - 2 * cut);
    out.letters.assign(u.letters.begin(), u.letters.end() - static_cast<std::ptrdiff_t>(cut));
    out.letters.insert(out.letters.end(), v.letters.begin() + static_cast<std::ptrdiff_t>(cut),
                       v.letters.end());
    return out;
}

FreeGroup::Element FreeGroup::inverse(const Element& u) const {
    ReducedWord out;
    out.letters.reserve(u.size());
    for (auto it = u.letters.rbegin(); it != u.letters.rend(); ++it)
        out.letters.push_back(static_cast<Letter>(-*it));
    return out;
}

double FreeGroup::distance(const Point& p, const Point& q) const {
    return static_cast<double>(word_distance(p, q));
}

std::vector<FreeGroup::Element> FreeGroup::generators() const {
    std::vector<Element> gens;
    gens.reserve(2 * static_cast<std::size_t>(rank));
    for (int i = 1; i <= rank; ++i) {
        gens.push_back(ReducedWord({static_cast<Letter>(i)}));
        gens.push_back(ReducedWord({static_cast<Letter>(-i)}));
    }
    return gens;
}

std::int64_t word_distance(const ReducedWord& u, const ReducedWord& v) {
    // Both reduced, so u^-1 v reduces exactly by the common prefix.
    const std::size_t p = common_prefix_length(u, v);
    return static_cast<std::int64_t>(u.size() + v.size() - 2 * p);
}

} // namespace geowalk
