#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "geowalk/common.hpp"
#include "geowalk/rng.hpp"

namespace geowalk {

// Finitely supported step distribution on a group.  Atoms carry strictly
// positive weights summing to one (checked to 1e-12); the support contains
// no repeated element.  Sampling is a cdf lookup, so a fixed draw sequence
// always yields the same steps.
template <class GroupT>
struct FiniteMeasure {
    using Element = typename GroupT::Element;

    std::vector<std::pair<Element, double>> atoms;
    std::vector<double> cdf;

    // Consumes exactly one variate, so a walk can be replayed by re-deriving
    // the stream or by recording the indices.
    std::size_t sample_index(RngStream& rng) const {
        const double u = rng.next_double();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()),
                                     atoms.size() - 1);
    }

    const Element& sample(RngStream& rng) const { return atoms[sample_index(rng)].first; }
};

namespace detail {

template <class GroupT>
void finalize_measure(const GroupT& G, FiniteMeasure<GroupT>& mu) {
    if (mu.atoms.empty()) throw ConfigError("measure: empty support");
    double total = 0.0;
    for (const auto& [g, w] : mu.atoms) {
        (void)g;
        if (!(w > 0.0) || !std::isfinite(w))
            throw ConfigError("measure: weights must be strictly positive and finite");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw ConfigError("measure: weights sum to " + std::to_string(total) +
                          ", expected 1 within 1e-12");
    // Duplicate atoms would make sampling probabilities ambiguous.
    std::vector<std::string> keys;
    keys.reserve(mu.atoms.size());
    for (const auto& [g, w] : mu.atoms) {
        (void)w;
        keys.push_back(G.element_literal(g));
    }
    std::sort(keys.begin(), keys.end());
    if (std::adjacent_find(keys.begin(), keys.end()) != keys.end())
        throw ConfigError("measure: duplicate element in support");
    mu.cdf.clear();
    mu.cdf.reserve(mu.atoms.size());
    double acc = 0.0;
    for (const auto& [g, w] : mu.atoms) {
        (void)g;
        acc += w;
        mu.cdf.push_back(acc);
    }
    mu.cdf.back() = 1.0;
}

} // namespace detail

// Validates weights as given (must already sum to one).
template <class GroupT>
FiniteMeasure<GroupT> make_measure(const GroupT& G,
                                   std::vector<std::pair<typename GroupT::Element, double>> atoms) {
    FiniteMeasure<GroupT> mu;
    mu.atoms = std::move(atoms);
    detail::finalize_measure(G, mu);
    return mu;
}

// Rescales positive weights to total one, then validates.
template <class GroupT>
FiniteMeasure<GroupT> normalized_measure(
    const GroupT& G, std::vector<std::pair<typename GroupT::Element, double>> atoms) {
    double total = 0.0;
    for (auto& [g, w] : atoms) {
        (void)g;
        total += w;
    }
    if (!(total > 0.0)) throw ConfigError("measure: total weight must be positive");
    for (auto& [g, w] : atoms) {
        (void)g;
        w /= total;
    }
    FiniteMeasure<GroupT> mu;
    mu.atoms = std::move(atoms);
    detail::finalize_measure(G, mu);
    return mu;
}

template <class GroupT>
FiniteMeasure<GroupT> uniform_measure(const GroupT& G,
                                      std::vector<typename GroupT::Element> support) {
    std::vector<std::pair<typename GroupT::Element, double>> atoms;
    atoms.reserve(support.size());
    for (auto& g : support) atoms.emplace_back(std::move(g), 1.0);
    return normalized_measure(G, std::move(atoms));
}

template <class GroupT>
FiniteMeasure<GroupT> dirac_measure(const GroupT& G, typename GroupT::Element g) {
    return make_measure(G, {{std::move(g), 1.0}});
}

// Reflected measure: the pushforward under g -> g^-1.  An involution.
template <class GroupT>
FiniteMeasure<GroupT> reflect(const GroupT& G, const FiniteMeasure<GroupT>& mu) {
    std::vector<std::pair<typename GroupT::Element, double>> atoms;
    atoms.reserve(mu.atoms.size());
    for (const auto& [g, w] : mu.atoms) atoms.emplace_back(G.inverse(g), w);
    return make_measure(G, std::move(atoms));
}

// Expected one-step displacement of the basepoint.
template <class SpaceT>
double first_moment(const SpaceT& space, const FiniteMeasure<SpaceT>& mu) {
    const auto x = space.basepoint();
    double sum = 0.0;
    for (const auto& [g, w] : mu.atoms) sum += w * space.distance(x, space.act(g, x));
    return sum;
}

namespace detail {

inline double parse_weight(const std::string& tok) {
    const auto slash = tok.find('/');
    try {
        if (slash != std::string::npos) {
            const double num = std::stod(tok.substr(0, slash));
            const double den = std::stod(tok.substr(slash + 1));
            if (den == 0.0) throw ConfigError("measure: zero denominator in weight");
            return num / den;
        }
        return std::stod(tok);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("measure: bad weight literal '" + tok + "'");
    }
}

} // namespace detail

// One atom per line: "<element-literal> <weight>".  The literal may contain
// spaces (matrix entries do), so the weight is the last whitespace-separated
// token.  Blank lines and '#' comments are skipped.
template <class GroupT>
FiniteMeasure<GroupT> parse_measure(const GroupT& G, const std::string& text) {
    std::vector<std::pair<typename GroupT::Element, double>> atoms;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // trim
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        const auto split = line.find_last_of(" \t");
        if (split == std::string::npos)
            throw ConfigError("measure: line '" + line + "' lacks a weight");
        const std::string lit = line.substr(0, line.find_last_not_of(" \t", split) + 1);
        const std::string wtok = line.substr(split + 1);
        atoms.emplace_back(G.parse_element(lit), detail::parse_weight(wtok));
    }
    return make_measure(G, std::move(atoms));
}

template <class GroupT>
std::string measure_to_text(const GroupT& G, const FiniteMeasure<GroupT>& mu) {
    std::ostringstream out;
    out.precision(17);
    for (const auto& [g, w] : mu.atoms) out << G.element_literal(g) << " " << w << "\n";
    return out.str();
}

} // namespace geowalk
