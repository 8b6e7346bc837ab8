#include "chemrag/fingerprints.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>

#include <nlohmann/json.hpp>

#include "chemrag/util.hpp"

namespace chemrag::chem {

namespace {

bool power_of_two(size_t x) { return x != 0 && (x & (x - 1)) == 0; }

int bond_code(BondOrder order) { return static_cast<int>(order); }

std::string atom_symbol(const Atom& a) {
    std::string s = a.element;
    if (a.aromatic)
        for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

char bond_symbol(BondOrder order) {
    switch (order) {
        case BondOrder::Single: return '-';
        case BondOrder::Double: return '=';
        case BondOrder::Triple: return '#';
        case BondOrder::Aromatic: return ':';
    }
    return '-';
}

}  // namespace

const char* to_string(FingerprintKind kind) {
    switch (kind) {
        case FingerprintKind::morgan: return "morgan";
        case FingerprintKind::path: return "path";
        case FingerprintKind::structural_keys: return "structural_keys";
    }
    return "unknown";
}

Fingerprint morgan_fingerprint(const MolGraph& m, int radius, size_t nbits) {
    if (radius < 0) throw ValidationError("morgan radius must be >= 0");
    if (!power_of_two(nbits) || nbits < 64)
        throw ValidationError("morgan nbits must be a power of two >= 64");

    auto adj = m.adjacency();
    std::vector<uint64_t> inv(m.atoms.size());
    for (size_t i = 0; i < m.atoms.size(); ++i) {
        const Atom& a = m.atoms[i];
        std::string buf = a.element;
        buf += '\x1f';
        buf += std::to_string(a.charge);
        buf += '\x1f';
        buf += std::to_string(adj[i].size());
        buf += '\x1f';
        buf += std::to_string(a.hcount);
        buf += '\x1f';
        buf += a.aromatic ? '1' : '0';
        buf += a.in_ring ? '1' : '0';
        inv[i] = hash64(buf);
    }

    Fingerprint fp{FingerprintKind::morgan, nbits, {}};
    for (uint64_t h : inv) fp.bits.insert(static_cast<uint32_t>(h % nbits));
    for (int round = 1; round <= radius; ++round) {
        std::vector<uint64_t> next(inv.size());
        for (size_t i = 0; i < inv.size(); ++i) {
            std::vector<std::pair<int, uint64_t>> env;
            for (auto [nb, bond_idx] : adj[i])
                env.emplace_back(bond_code(m.bonds[bond_idx].order), inv[nb]);
            std::sort(env.begin(), env.end());
            uint64_t h = hash_combine64(0x6d6f7267616eULL, inv[i]);
            for (auto [code, nb_inv] : env) {
                h = hash_combine64(h, static_cast<uint64_t>(code));
                h = hash_combine64(h, nb_inv);
            }
            next[i] = h;
        }
        inv = std::move(next);
        for (uint64_t h : inv) fp.bits.insert(static_cast<uint32_t>(h % nbits));
    }
    return fp;
}

Fingerprint path_fingerprint(const MolGraph& m, int max_len, size_t nbits) {
    if (max_len < 1) throw ValidationError("path max_len must be >= 1");
    if (nbits < 1) throw ValidationError("path nbits must be >= 1");

    auto adj = m.adjacency();
    Fingerprint fp{FingerprintKind::path, nbits, {}};

    // DFS over simple paths starting at every atom; paths shorter than two
    // atoms carry no bond and are skipped.
    std::vector<int> atom_path;
    std::vector<int> bond_path;
    std::vector<char> used(m.atoms.size(), 0);

    auto record = [&]() {
        std::string forward;
        std::string backward;
        size_t n = atom_path.size();
        for (size_t i = 0; i < n; ++i) {
            forward += atom_symbol(m.atoms[atom_path[i]]);
            if (i + 1 < n) forward += bond_symbol(m.bonds[bond_path[i]].order);
        }
        for (size_t i = n; i-- > 0;) {
            backward += atom_symbol(m.atoms[atom_path[i]]);
            if (i > 0) backward += bond_symbol(m.bonds[bond_path[i - 1]].order);
        }
        const std::string& canon = forward <= backward ? forward : backward;
        fp.bits.insert(static_cast<uint32_t>(hash64(canon) % nbits));
    };

    std::function<void(int)> extend = [&](int u) {
        if (static_cast<int>(bond_path.size()) >= 1) record();
        if (static_cast<int>(bond_path.size()) == max_len) return;
        for (auto [v, bond_idx] : adj[u]) {
            if (used[v]) continue;
            used[v] = 1;
            atom_path.push_back(v);
            bond_path.push_back(bond_idx);
            extend(v);
            bond_path.pop_back();
            atom_path.pop_back();
            used[v] = 0;
        }
    };

    for (size_t start = 0; start < m.atoms.size(); ++start) {
        used[start] = 1;
        atom_path.push_back(static_cast<int>(start));
        extend(static_cast<int>(start));
        atom_path.pop_back();
        used[start] = 0;
    }
    return fp;
}

namespace {

// Backtracking subgraph isomorphism; patterns are capped at 12 atoms so the
// worst case stays bounded.
class SubgraphMatcher {
public:
    SubgraphMatcher(const MolGraph& pattern, const MolGraph& target)
        : pattern_(pattern),
          target_(target),
          pattern_adj_(pattern.adjacency()),
          target_adj_(target.adjacency()) {}

    bool match() {
        order_ = connected_order();
        assignment_.assign(pattern_.atoms.size(), -1);
        used_.assign(target_.atoms.size(), 0);
        return place(0);
    }

private:
    // pattern atoms in a connected visiting order so each new atom (after the
    // first) has at least one already-placed neighbor
    std::vector<int> connected_order() {
        std::vector<int> order;
        std::vector<char> seen(pattern_.atoms.size(), 0);
        order.push_back(0);
        seen[0] = 1;
        while (order.size() < pattern_.atoms.size()) {
            bool grew = false;
            for (size_t i = 0; i < order.size() && !grew; ++i) {
                for (auto [nb, bond] : pattern_adj_[order[i]]) {
                    if (!seen[nb]) {
                        order.push_back(nb);
                        seen[nb] = 1;
                        grew = true;
                        break;
                    }
                }
            }
            if (!grew) throw ValidationError("structural key pattern must be connected");
        }
        return order;
    }

    bool atom_compatible(int p, int t) const {
        const Atom& pa = pattern_.atoms[p];
        const Atom& ta = target_.atoms[t];
        return pa.element == ta.element && pa.aromatic == ta.aromatic &&
               target_adj_[t].size() >= pattern_adj_[p].size();
    }

    bool place(size_t step) {
        if (step == order_.size()) return true;
        int p = order_[step];
        for (int t = 0; t < static_cast<int>(target_.atoms.size()); ++t) {
            if (used_[t] || !atom_compatible(p, t)) continue;
            bool consistent = true;
            for (auto [pnb, pbond] : pattern_adj_[p]) {
                if (assignment_[pnb] < 0) continue;
                bool found = false;
                for (auto [tnb, tbond] : target_adj_[t]) {
                    if (tnb == assignment_[pnb] &&
                        target_.bonds[tbond].order == pattern_.bonds[pbond].order) {
                        found = true;
                        break;
                    }
                }
                if (!found) {
                    consistent = false;
                    break;
                }
            }
            if (!consistent) continue;
            assignment_[p] = t;
            used_[t] = 1;
            if (place(step + 1)) return true;
            assignment_[p] = -1;
            used_[t] = 0;
        }
        return false;
    }

    const MolGraph& pattern_;
    const MolGraph& target_;
    std::vector<std::vector<std::pair<int, int>>> pattern_adj_;
    std::vector<std::vector<std::pair<int, int>>> target_adj_;
    std::vector<int> order_;
    std::vector<int> assignment_;
    std::vector<char> used_;
};

}  // namespace

Fingerprint structural_keys(const MolGraph& m, const KeySet& keys) {
    Fingerprint fp{FingerprintKind::structural_keys, keys.keys.size(), {}};
    for (size_t i = 0; i < keys.keys.size(); ++i) {
        MolGraph pattern = parse_smiles(keys.keys[i].smiles_fragment);
        if (pattern.atoms.size() > 12)
            throw ConfigError("structural key '" + keys.keys[i].id + "' exceeds 12 atoms");
        if (SubgraphMatcher(pattern, m).match()) fp.bits.insert(static_cast<uint32_t>(i));
    }
    return fp;
}

double tanimoto(const Fingerprint& a, const Fingerprint& b) {
    if (a.kind != b.kind || a.nbits != b.nbits)
        throw ValidationError("tanimoto requires matching fingerprint kind and width");
    if (a.bits.empty() && b.bits.empty()) return 1.0;
    if (a.bits.empty() || b.bits.empty()) return 0.0;
    size_t intersection = 0;
    for (uint32_t bit : a.bits)
        if (b.bits.count(bit)) ++intersection;
    size_t unions = a.bits.size() + b.bits.size() - intersection;
    return static_cast<double>(intersection) / static_cast<double>(unions);
}

const KeySet& default_key_set() {
    static const KeySet keys = {{
        {"k01", "O", "aliphatic oxygen"},
        {"k02", "N", "aliphatic nitrogen"},
        {"k03", "S", "aliphatic sulfur"},
        {"k04", "F", "fluorine"},
        {"k05", "Cl", "chlorine"},
        {"k06", "Br", "bromine"},
        {"k07", "I", "iodine"},
        {"k08", "P", "phosphorus"},
        {"k09", "C=O", "carbonyl"},
        {"k10", "C(=O)O", "carboxyl"},
        {"k11", "C(=O)N", "amide"},
        {"k12", "C#N", "nitrile"},
        {"k13", "C=C", "alkene"},
        {"k14", "C#C", "alkyne"},
        {"k15", "c1ccccc1", "benzene ring"},
        {"k16", "n", "aromatic nitrogen"},
        {"k17", "o", "aromatic oxygen"},
        {"k18", "s", "aromatic sulfur"},
        {"k19", "COC", "ether"},
        {"k20", "O=S=O", "sulfonyl"},
    }};
    return keys;
}

KeySet load_key_set(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open key set: " + path.string());
    KeySet out;
    std::string line;
    size_t line_no = 0;
    std::set<std::string> ids;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json row;
        try {
            row = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("key set line " + std::to_string(line_no) + ": " + e.what());
        }
        StructuralKey key;
        key.id = row.at("id").get<std::string>();
        key.smiles_fragment = row.at("smiles_fragment").get<std::string>();
        key.description = row.value("description", "");
        if (!ids.insert(key.id).second)
            throw ValidationError("key set line " + std::to_string(line_no) + ": duplicate id " +
                                  key.id);
        if (!validity(key.smiles_fragment))
            throw ValidationError("key set line " + std::to_string(line_no) +
                                  ": fragment does not parse: " + key.smiles_fragment);
        out.keys.push_back(std::move(key));
    }
    return out;
}

}  // namespace chemrag::chem
