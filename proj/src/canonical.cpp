#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "chemrag/smiles.hpp"

namespace chemrag::chem {

namespace {

using Adjacency = std::vector<std::vector<std::pair<int, int>>>;

struct InitialKey {
    std::string element;
    int charge;
    int degree;
    int hcount;
    bool aromatic;
    auto tie() const { return std::tie(element, charge, degree, hcount, aromatic); }
    bool operator<(const InitialKey& o) const { return tie() < o.tie(); }
    bool operator==(const InitialKey& o) const { return tie() == o.tie(); }
};

int bond_code(BondOrder order) { return static_cast<int>(order); }

// Dense 0-based ranks for any ordered key type.
template <typename Key>
std::vector<int> dense_ranks(const std::vector<Key>& keys) {
    std::vector<Key> sorted(keys);
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<int> ranks(keys.size());
    for (size_t i = 0; i < keys.size(); ++i)
        ranks[i] = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), keys[i]) -
                                    sorted.begin());
    return ranks;
}

int distinct_count(const std::vector<int>& ranks) {
    return ranks.empty() ? 0 : *std::max_element(ranks.begin(), ranks.end()) + 1;
}

// Iterative neighborhood refinement over one connected component.
// `local` maps component position -> atom index; ranks are per-position.
void refine(const MolGraph& m, const Adjacency& adj, const std::vector<int>& local,
            const std::vector<int>& pos_of_atom, std::vector<int>& ranks) {
    int distinct = distinct_count(ranks);
    while (distinct < static_cast<int>(local.size())) {
        std::vector<std::vector<long long>> keys(local.size());
        for (size_t p = 0; p < local.size(); ++p) {
            std::vector<long long> key;
            key.push_back(ranks[p]);
            std::vector<std::pair<int, int>> env;
            for (auto [nb, bond_idx] : adj[local[p]])
                env.emplace_back(bond_code(m.bonds[bond_idx].order), ranks[pos_of_atom[nb]]);
            std::sort(env.begin(), env.end());
            for (auto [code, r] : env) {
                key.push_back(code);
                key.push_back(r);
            }
            keys[p] = std::move(key);
        }
        std::vector<int> next = dense_ranks(keys);
        int next_distinct = distinct_count(next);
        if (next_distinct == distinct) break;
        ranks = std::move(next);
        distinct = next_distinct;
    }
}

std::string format_charge(int charge) {
    if (charge == 0) return "";
    std::string sign = charge > 0 ? "+" : "-";
    int magnitude = charge > 0 ? charge : -charge;
    return magnitude == 1 ? sign : sign + std::to_string(magnitude);
}

std::string atom_token(const MolGraph& m, int atom) {
    const Atom& a = m.atoms[atom];
    bool organic = a.isotope == 0 && a.charge == 0 &&
                   (a.aromatic ? (a.element == "B" || a.element == "C" || a.element == "N" ||
                                  a.element == "O" || a.element == "P" || a.element == "S")
                               : true) &&
                   implied_hcount(m, atom) == a.hcount;
    std::string symbol = a.element;
    if (a.aromatic)
        for (char& c : symbol) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (organic) return symbol;
    std::string out = "[";
    if (a.isotope > 0) out += std::to_string(a.isotope);
    out += symbol;
    if (a.hcount == 1)
        out += "H";
    else if (a.hcount > 1)
        out += "H" + std::to_string(a.hcount);
    out += format_charge(a.charge);
    out += "]";
    return out;
}

std::string bond_token(const MolGraph& m, int bond_idx) {
    const Bond& bond = m.bonds[bond_idx];
    switch (bond.order) {
        case BondOrder::Single:
            // explicit '-' keeps a single bond between aromatic atoms from
            // reparsing as aromatic
            return (m.atoms[bond.a].aromatic && m.atoms[bond.b].aromatic) ? "-" : "";
        case BondOrder::Double: return "=";
        case BondOrder::Triple: return "#";
        case BondOrder::Aromatic: return "";
    }
    return "";
}

std::string ring_digit(int number) {
    return number < 10 ? std::to_string(number) : "%" + std::to_string(number);
}

// Emits one component given a complete (all-distinct) ranking.
class Emitter {
public:
    Emitter(const MolGraph& m, const Adjacency& adj, const std::vector<int>& local,
            const std::vector<int>& pos_of_atom, const std::vector<int>& ranks)
        : m_(m), adj_(adj), local_(local), pos_of_atom_(pos_of_atom), ranks_(ranks) {}

    std::string run() {
        int start = local_[0];
        for (size_t p = 0; p < local_.size(); ++p)
            if (ranks_[p] < ranks_[pos_of_atom_[start]]) start = local_[p];
        traverse(start);
        assign_ring_digits();
        std::string out;
        emit(start, out);
        return out;
    }

private:
    // Pass 1: DFS in rank order; classify tree vs ring bonds, record visit order.
    void traverse(int start) {
        visit_order_.assign(m_.atoms.size(), -1);
        tree_children_.assign(m_.atoms.size(), {});
        int clock = 0;
        std::vector<std::tuple<int, int>> stack; // atom, incoming bond
        stack.emplace_back(start, -1);
        visit_order_[start] = clock++;
        std::vector<size_t> cursor(m_.atoms.size(), 0);
        std::vector<std::vector<std::pair<int, int>>> ordered(m_.atoms.size());
        while (!stack.empty()) {
            auto [u, in_bond] = stack.back();
            if (cursor[u] == 0) {
                // neighbors in ascending canonical rank
                ordered[u] = adj_[u];
                std::sort(ordered[u].begin(), ordered[u].end(), [&](auto x, auto y) {
                    return ranks_[pos_of_atom_[x.first]] < ranks_[pos_of_atom_[y.first]];
                });
            }
            if (cursor[u] < ordered[u].size()) {
                auto [v, bond_idx] = ordered[u][cursor[u]++];
                if (bond_idx == in_bond) continue;
                if (visit_order_[v] == -1) {
                    visit_order_[v] = clock++;
                    tree_children_[u].emplace_back(v, bond_idx);
                    stack.emplace_back(v, bond_idx);
                } else if (!ring_bond_.count(bond_idx)) {
                    ring_bond_.insert(bond_idx); // opener = earlier-visited endpoint
                }
            } else {
                stack.pop_back();
            }
        }
    }

    // Pass 2: give every ring bond a digit; openings claim the smallest digit
    // free at the opener, closings release it.
    void assign_ring_digits() {
        struct RingEvent {
            int bond_idx;
            int opener;
            int closer;
        };
        std::vector<RingEvent> events;
        for (int bond_idx : ring_bond_) {
            const Bond& bond = m_.bonds[bond_idx];
            int opener = visit_order_[bond.a] < visit_order_[bond.b] ? bond.a : bond.b;
            int closer = opener == bond.a ? bond.b : bond.a;
            events.push_back({bond_idx, opener, closer});
        }
        // per-atom opening order follows the closer's visit order so the
        // digit sequence is a pure function of the canonical ranks
        std::sort(events.begin(), events.end(), [&](const RingEvent& x, const RingEvent& y) {
            return std::make_pair(visit_order_[x.opener], visit_order_[x.closer]) <
                   std::make_pair(visit_order_[y.opener], visit_order_[y.closer]);
        });
        std::set<int> free_digits;
        for (int d = 1; d < 100; ++d) free_digits.insert(d);
        // digits are claimed at the opener and released at the closer, so walk
        // open/close events in output position order
        std::vector<std::pair<int, size_t>> timeline; // (position, event index)
        for (size_t e = 0; e < events.size(); ++e) {
            timeline.emplace_back(visit_order_[events[e].opener] * 2, e);
            timeline.emplace_back(visit_order_[events[e].closer] * 2 + 1, e);
        }
        std::sort(timeline.begin(), timeline.end());
        for (auto& [pos, e] : timeline) {
            const RingEvent& ev = events[e];
            if (pos % 2 == 0) {
                if (free_digits.empty()) throw Error("ring closure digits exhausted");
                int d = *free_digits.begin();
                free_digits.erase(free_digits.begin());
                digit_[ev.bond_idx] = d;
                openings_[ev.opener].push_back(ev.bond_idx);
            } else {
                free_digits.insert(digit_[ev.bond_idx]);
                closings_[ev.closer].push_back(ev.bond_idx);
            }
        }
    }

    void emit(int u, std::string& out) {
        out += atom_token(m_, u);
        if (auto it = closings_.find(u); it != closings_.end()) {
            auto bonds = it->second;
            std::sort(bonds.begin(), bonds.end(),
                      [&](int x, int y) { return digit_[x] < digit_[y]; });
            for (int bond_idx : bonds) out += bond_token(m_, bond_idx) + ring_digit(digit_[bond_idx]);
        }
        if (auto it = openings_.find(u); it != openings_.end())
            for (int bond_idx : it->second) out += ring_digit(digit_[bond_idx]);
        const auto& children = tree_children_[u];
        for (size_t i = 0; i < children.size(); ++i) {
            auto [child, bond_idx] = children[i];
            bool last = i + 1 == children.size();
            if (!last) out += "(";
            out += bond_token(m_, bond_idx);
            emit(child, out);
            if (!last) out += ")";
        }
    }

    const MolGraph& m_;
    const Adjacency& adj_;
    const std::vector<int>& local_;
    const std::vector<int>& pos_of_atom_;
    const std::vector<int>& ranks_;
    std::vector<int> visit_order_;
    std::vector<std::vector<std::pair<int, int>>> tree_children_;
    std::set<int> ring_bond_;
    std::map<int, int> digit_;
    std::map<int, std::vector<int>> openings_;
    std::map<int, std::vector<int>> closings_;
};

// Canonical string for one component; breaks residual ties by trying every
// member of the lowest tied class and keeping the smallest emission.
std::string canon_component(const MolGraph& m, const Adjacency& adj, const std::vector<int>& local,
                            const std::vector<int>& pos_of_atom, std::vector<int> ranks) {
    refine(m, adj, local, pos_of_atom, ranks);
    int n = static_cast<int>(local.size());
    if (distinct_count(ranks) == n)
        return Emitter(m, adj, local, pos_of_atom, ranks).run();

    // lowest rank that still names a class of >= 2 atoms
    std::vector<int> class_size(n, 0);
    for (int r : ranks) class_size[r]++;
    int target = 0;
    while (class_size[target] < 2) ++target;

    std::string best;
    for (int p = 0; p < n; ++p) {
        if (ranks[p] != target) continue;
        std::vector<int> promoted(ranks.size());
        for (size_t q = 0; q < ranks.size(); ++q)
            promoted[q] = ranks[q] * 2 + (static_cast<int>(q) == p ? 0 : 1);
        promoted = dense_ranks(promoted);
        std::string candidate = canon_component(m, adj, local, pos_of_atom, std::move(promoted));
        if (best.empty() || candidate < best) best = std::move(candidate);
    }
    return best;
}

}  // namespace

std::string canonical_smiles(const MolGraph& m) {
    if (m.atoms.empty()) throw Error("cannot canonicalize an empty molecule");
    Adjacency adj = m.adjacency();

    // connected components
    int n = static_cast<int>(m.atoms.size());
    std::vector<int> component(n, -1);
    int components = 0;
    for (int i = 0; i < n; ++i) {
        if (component[i] != -1) continue;
        std::vector<int> queue{i};
        component[i] = components;
        while (!queue.empty()) {
            int u = queue.back();
            queue.pop_back();
            for (auto [v, bond] : adj[u]) {
                if (component[v] == -1) {
                    component[v] = components;
                    queue.push_back(v);
                }
            }
        }
        ++components;
    }

    std::vector<std::string> parts;
    for (int c = 0; c < components; ++c) {
        std::vector<int> local;
        for (int i = 0; i < n; ++i)
            if (component[i] == c) local.push_back(i);
        std::vector<int> pos_of_atom(n, -1);
        for (size_t p = 0; p < local.size(); ++p) pos_of_atom[local[p]] = static_cast<int>(p);

        std::vector<InitialKey> keys;
        keys.reserve(local.size());
        for (int atom : local)
            keys.push_back(InitialKey{m.atoms[atom].element, m.atoms[atom].charge,
                                      static_cast<int>(adj[atom].size()), m.atoms[atom].hcount,
                                      m.atoms[atom].aromatic});
        parts.push_back(canon_component(m, adj, local, pos_of_atom, dense_ranks(keys)));
    }
    std::sort(parts.begin(), parts.end());
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += ".";
        out += parts[i];
    }
    return out;
}

}  // namespace chemrag::chem
