#include "geowalk/lamplighter.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <stdexcept>
#include <utility>

namespace geowalk {

LampConfig::LampConfig(int m) : modulus(m) {
    if (m < 2) throw ConfigError("lamp modulus must be >= 2, got " + std::to_string(m));
}

int LampConfig::value_at(const ReducedWord& v) const {
    const auto it = entries.find(v);
    return it == entries.end() ? 0 : it->second;
}

void LampConfig::add_at(const ReducedWord& v, int delta) {
    const int next = ((value_at(v) + delta) % modulus + modulus) % modulus;
    if (next == 0)
        entries.erase(v);
    else
        entries[v] = next;
}

std::int64_t steiner_edge_count(std::vector<ReducedWord> vertices) {
    // Every edge of the subtree spanned from the root corresponds to one
    // distinct nonempty prefix; in lexicographic order a shared prefix is
    // shared with the immediate predecessor.
    std::sort(vertices.begin(), vertices.end(), tree_lex_less);
    std::int64_t edges = 0;
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const std::size_t shared =
            i == 0 ? 0 : common_prefix_length(vertices[i - 1], vertices[i]);
        edges += static_cast<std::int64_t>(vertices[i].size() - shared);
    }
    return edges;
}

LampGroup::LampGroup(int m, int k) : modulus(m), rank(k), tree(k) {
    if (m < 2) throw ConfigError("lamp modulus must be >= 2, got " + std::to_string(m));
}

LampGroup::Element LampGroup::compose(const Element& u, const Element& v) const {
    if (u.lamps.modulus != v.lamps.modulus)
        throw std::invalid_argument("lamp compose: modulus mismatch");
    Element out;
    out.pos = tree.compose(u.pos, v.pos);
    out.lamps = u.lamps;
    for (const auto& [w, val] : v.lamps.entries)
        out.lamps.add_at(tree.compose(u.pos, w), val);
    return out;
}

LampGroup::Element LampGroup::inverse(const Element& u) const {
    Element out;
    out.pos = tree.inverse(u.pos);
    out.lamps = LampConfig(u.lamps.modulus);
    for (const auto& [w, val] : u.lamps.entries)
        out.lamps.add_at(tree.compose(out.pos, w), u.lamps.modulus - val);
    return out;
}

std::int64_t LampGroup::word_length(const Element& g) const {
    const int m = g.lamps.modulus;
    std::int64_t presses = 0;
    std::vector<ReducedWord> covered;
    covered.reserve(g.lamps.entries.size() + 1);
    covered.push_back(g.pos);
    for (const auto& [w, val] : g.lamps.entries) {
        presses += std::min(val, m - val);
        covered.push_back(w);
    }
    return presses + 2 * steiner_edge_count(std::move(covered)) -
           static_cast<std::int64_t>(g.pos.size());
}

double LampGroup::distance(const Point& u, const Point& v) const {
    return static_cast<double>(lamp_word_distance(*this, u, v));
}

std::int64_t lamp_word_distance(const LampGroup& G, const LampState& u, const LampState& v) {
    return G.word_length(G.compose(G.inverse(u), v));
}

std::vector<LampGroup::Element> LampGroup::generators() const {
    std::vector<Element> out;
    out.reserve(2 * static_cast<std::size_t>(rank) + 2);
    for (const auto& t : tree.generators())
        out.push_back(Element{t, LampConfig(modulus)});
    Element up{ReducedWord{}, LampConfig(modulus)};
    up.lamps.add_at(ReducedWord{}, 1);
    out.push_back(std::move(up));
    if (modulus > 2) {
        Element down{ReducedWord{}, LampConfig(modulus)};
        down.lamps.add_at(ReducedWord{}, modulus - 1);
        out.push_back(std::move(down));
    }
    return out;
}

std::string LampGroup::element_literal(const Element& g) const {
    std::string out = "pos=" + word_to_string(g.pos) + "; lamps=";
    bool first = true;
    for (const auto& [w, val] : g.lamps.entries) {
        if (!first) out.push_back(',');
        out += word_to_string(w) + ":" + std::to_string(val);
        first = false;
    }
    return out;
}

namespace {

std::string trimmed(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

} // namespace

LampGroup::Element LampGroup::parse_element(const std::string& text) const {
    const auto semi = text.find(';');
    if (semi == std::string::npos)
        throw ConfigError("bad lamp state '" + text + "': expected 'pos=...; lamps=...'");
    const std::string pos_part = trimmed(text.substr(0, semi));
    const std::string lamps_part = trimmed(text.substr(semi + 1));
    if (pos_part.rfind("pos=", 0) != 0 || lamps_part.rfind("lamps=", 0) != 0)
        throw ConfigError("bad lamp state '" + text + "': expected 'pos=...; lamps=...'");

    Element out{parse_word(trimmed(pos_part.substr(4)), rank), LampConfig(modulus)};
    const std::string body = trimmed(lamps_part.substr(6));
    std::size_t at = 0;
    while (at < body.size()) {
        auto comma = body.find(',', at);
        if (comma == std::string::npos) comma = body.size();
        const std::string entry = trimmed(body.substr(at, comma - at));
        at = comma + 1;
        if (entry.empty()) continue;
        const auto colon = entry.find(':');
        if (colon == std::string::npos)
            throw ConfigError("bad lamp entry '" + entry + "': expected '<word>:<value>'");
        const ReducedWord vertex = parse_word(trimmed(entry.substr(0, colon)), rank);
        const std::string value_text = trimmed(entry.substr(colon + 1));
        char* end = nullptr;
        const long value = std::strtol(value_text.c_str(), &end, 10);
        if (value_text.empty() || end != value_text.c_str() + value_text.size())
            throw ConfigError("bad lamp value '" + value_text + "' in '" + entry + "'");
        out.lamps.add_at(vertex, static_cast<int>(value % modulus));
    }
    return out;
}

std::size_t LampGroup::element_size(const Element& g) const {
    std::size_t total = g.pos.size();
    for (const auto& [w, val] : g.lamps.entries) total += w.size() + 1;
    return total;
}

namespace {

Letter rank_letter(int r) {
    const int idx = r / 2 + 1;
    return static_cast<Letter>(r % 2 == 0 ? idx : -idx);
}

// Steiner subtree of the difference element, rooted at the walker's start.
// Nodes carry the target lamp value and whether they lie on the direct path
// to the final position.
struct SteinerTrie {
    int degree;
    std::vector<std::int32_t> child; // node * degree + rank, -1 when absent
    std::vector<int> press;
    std::vector<char> on_path;

    explicit SteinerTrie(int deg) : degree(deg) { add_node(); }

    std::int32_t add_node() {
        child.insert(child.end(), static_cast<std::size_t>(degree), -1);
        press.push_back(0);
        on_path.push_back(0);
        return static_cast<std::int32_t>(press.size() - 1);
    }

    std::int32_t insert(const ReducedWord& w, bool mark_path) {
        std::int32_t node = 0;
        if (mark_path) on_path[0] = 1;
        for (Letter l : w.letters) {
            // add_node() grows child, so the slot is addressed by index.
            const std::size_t at = static_cast<std::size_t>(node) * degree +
                                   static_cast<std::size_t>(letter_rank(l));
            if (child[at] < 0) {
                const std::int32_t fresh = add_node();
                child[at] = fresh;
            }
            node = child[at];
            if (mark_path) on_path[static_cast<std::size_t>(node)] = 1;
        }
        return node;
    }
};

void emit_presses(std::vector<RouteOp>& ops, int target, int modulus) {
    if (target == 0) return;
    const int ups = target, downs = modulus - target;
    const std::int8_t delta = ups <= downs ? 1 : -1;
    const int count = std::min(ups, downs);
    for (int i = 0; i < count; ++i) ops.push_back(RouteOp{0, delta});
}

} // namespace

std::vector<RouteOp> lamp_route(const LampGroup& G, const LampState& u, const LampState& v) {
    const LampState diff = G.compose(G.inverse(u), v);
    SteinerTrie trie(2 * G.rank);
    trie.insert(diff.pos, true);
    for (const auto& [w, val] : diff.lamps.entries)
        trie.press[static_cast<std::size_t>(trie.insert(w, false))] = val;

    std::vector<RouteOp> ops;
    struct Frame {
        std::int32_t node;
        std::int8_t next_rank;
        Letter back;      // move emitted when the frame finishes, 0 for none
        std::int8_t path_rank; // deferred on-path child, -1 for none
    };
    std::vector<Frame> stack;
    stack.push_back(Frame{0, 0, 0, -1});
    emit_presses(ops, trie.press[0], G.modulus);
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_rank < trie.degree) {
            const int r = f.next_rank++;
            const std::int32_t c =
                trie.child[static_cast<std::size_t>(f.node) * trie.degree + r];
            if (c < 0) continue;
            if (trie.on_path[static_cast<std::size_t>(c)]) {
                f.path_rank = static_cast<std::int8_t>(r);
                continue;
            }
            ops.push_back(RouteOp{rank_letter(r), 0});
            emit_presses(ops, trie.press[static_cast<std::size_t>(c)], G.modulus);
            stack.push_back(
                Frame{c, 0, static_cast<Letter>(-rank_letter(r)), -1});
        } else if (f.path_rank >= 0) {
            // All side branches served; cross the path edge for good.
            const int r = f.path_rank;
            const std::int32_t c =
                trie.child[static_cast<std::size_t>(f.node) * trie.degree + r];
            ops.push_back(RouteOp{rank_letter(r), 0});
            emit_presses(ops, trie.press[static_cast<std::size_t>(c)], G.modulus);
            stack.back() = Frame{c, 0, 0, -1};
        } else {
            const Letter back = f.back;
            stack.pop_back();
            if (back != 0) ops.push_back(RouteOp{back, 0});
        }
    }
    return ops;
}

CayleyPath lamp_geodesic(const LampGroup& G, const LampState& u, const LampState& v) {
    const std::vector<RouteOp> ops = lamp_route(G, u, v);
    CayleyPath path;
    path.states.reserve(ops.size() + 1);
    path.states.push_back(u);
    LampState cur = u;
    for (const RouteOp& op : ops) {
        if (op.move != 0)
            cur.pos.push_cancel(op.move);
        else
            cur.lamps.add_at(cur.pos, op.press);
        path.states.push_back(cur);
    }
    if (!(path.states.back() == v))
        throw std::logic_error("lamp_geodesic: route does not land on the target state");
    return path;
}

RouteCursor::RouteCursor(const LampGroup& G, LampState start, const std::vector<RouteOp>& ops)
    : group_(&G), ops_(&ops), state_(std::move(start)) {}

const LampState& RouteCursor::at(std::size_t t) {
    if (t < consumed_)
        throw std::invalid_argument("RouteCursor::at: cursor only moves forward");
    if (t > ops_->size())
        throw std::invalid_argument("RouteCursor::at: past the end of the route");
    while (consumed_ < t) {
        const RouteOp& op = (*ops_)[consumed_++];
        if (op.move != 0)
            state_.pos.push_cancel(op.move);
        else
            state_.lamps.add_at(state_.pos, op.press);
    }
    return state_;
}

std::vector<int> path_edge_crossings(const CayleyPath& path, const ReducedWord& x,
                                     const ReducedWord& y) {
    const TreeGeodesic geo = tree_geodesic(x, y);
    std::vector<int> counts(geo.length(), 0);
    for (std::size_t i = 1; i < path.states.size(); ++i) {
        const ReducedWord& a = path.states[i - 1].pos;
        const ReducedWord& b = path.states[i].pos;
        if (a == b) continue;
        for (std::size_t j = 0; j + 1 < geo.vertices.size(); ++j) {
            if ((geo.vertices[j] == a && geo.vertices[j + 1] == b) ||
                (geo.vertices[j] == b && geo.vertices[j + 1] == a)) {
                ++counts[j];
                break;
            }
        }
    }
    return counts;
}

LimitConfiguration limit_estimate(const std::vector<LampState>& images) {
    if (images.size() < 4)
        throw std::invalid_argument("limit_estimate: need at least 4 states");
    const std::size_t n = images.size();
    const std::size_t window = (n + 3) / 4; // same window as end_estimate

    std::vector<ReducedWord> positions;
    positions.reserve(n);
    for (const LampState& s : images) positions.push_back(s.pos);

    const LampState& last = images.back();
    LimitConfiguration out(last.lamps.modulus);
    out.end = end_estimate(positions);

    // An entry constant over the window is nonzero throughout, so the last
    // state's support already contains every candidate.
    const ReducedWord cone = out.end.certified();
    for (const auto& [v, val] : last.lamps.entries) {
        bool stable = true;
        for (std::size_t i = n - window; i + 1 < n && stable; ++i)
            stable = images[i].lamps.value_at(v) == val;
        if (!stable) continue;
        if (out.end.stable_length >= 1 && v.size() >= cone.size() &&
            common_prefix_length(v, cone) == cone.size())
            continue; // inside the certified cone, may keep drifting
        out.lamps.entries.emplace(v, val);
        out.stabilization_radius =
            std::max(out.stabilization_radius, static_cast<std::int64_t>(v.size()));
    }
    return out;
}

std::optional<std::int64_t> LampBallTable::lookup(const LampGroup& G, const LampState& g) const {
    const auto it = dist.find(G.element_literal(g));
    if (it == dist.end()) return std::nullopt;
    return it->second;
}

LampBallTable lamp_ball_table(const LampGroup& G, std::int64_t radius, std::size_t budget) {
    LampBallTable table;
    table.radius = radius;
    const auto gens = G.generators();
    std::vector<LampState> frontier{G.identity()};
    table.dist.emplace(G.element_literal(frontier.front()), 0);
    for (std::int64_t d = 0; d < radius && !frontier.empty(); ++d) {
        std::vector<LampState> next;
        for (const LampState& g : frontier) {
            for (const LampState& s : gens) {
                LampState h = G.compose(g, s);
                std::string key = G.element_literal(h);
                if (!table.dist.emplace(std::move(key), d + 1).second) continue;
                if (table.dist.size() > budget)
                    throw ResourceError("lamp_ball_table: ball of radius " +
                                        std::to_string(radius) + " exceeds budget of " +
                                        std::to_string(budget) + " states");
                next.push_back(std::move(h));
            }
        }
        frontier = std::move(next);
    }
    return table;
}

} // namespace geowalk
