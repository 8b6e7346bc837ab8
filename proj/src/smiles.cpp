#include "chemrag/smiles.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <set>
#include <unordered_set>

namespace chemrag::chem {

namespace {

const std::unordered_set<std::string>& element_table() {
    static const std::unordered_set<std::string> table = {
        "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg", "Al", "Si",
        "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr", "Mn", "Fe", "Co", "Ni",
        "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo",
        "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba",
        "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb",
        "Lu", "Hf", "Ta", "W",  "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po",
        "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U",  "Np", "Pu", "Am", "Cm", "Bk", "Cf",
        "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn",
        "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
    };
    return table;
}

// Aromatic symbols permitted inside brackets, lowercase form -> element.
const std::map<std::string, std::string>& bracket_aromatic_table() {
    static const std::map<std::string, std::string> table = {
        {"b", "B"},   {"c", "C"},   {"n", "N"},  {"o", "O"},  {"p", "P"},
        {"s", "S"},   {"se", "Se"}, {"as", "As"}, {"si", "Si"}, {"te", "Te"},
    };
    return table;
}

// Default valences for bare (non-bracket) organic-subset atoms. Nitrogen is
// capped at 3; hypervalent forms must be written bracketed or charge-separated.
const std::vector<int>* default_valences(const std::string& element) {
    static const std::map<std::string, std::vector<int>> table = {
        {"B", {3}}, {"C", {4}}, {"N", {3}},       {"O", {2}},  {"P", {3, 5}},
        {"S", {2, 4, 6}},       {"F", {1}},       {"Cl", {1}}, {"Br", {1}},
        {"I", {1}},
    };
    auto it = table.find(element);
    return it == table.end() ? nullptr : &it->second;
}

bool organic_subset_bare(const std::string& element, bool aromatic) {
    if (aromatic) {
        return element == "B" || element == "C" || element == "N" || element == "O" ||
               element == "P" || element == "S";
    }
    return default_valences(element) != nullptr;
}

int bond_units(BondOrder order) {
    return order == BondOrder::Aromatic ? 1 : static_cast<int>(order);
}

struct RingOpen {
    int atom = -1;
    int order = 0; // 0 = unspecified
    size_t offset = 0;
};

class Parser {
public:
    Parser(std::string_view s, ParseWarnings* warnings) : s_(s), warnings_(warnings) {}

    MolGraph run() {
        if (s_.empty()) fail(SmilesErrorCode::empty_input, 0, "empty SMILES");
        while (pos_ < s_.size()) step();
        if (pending_order_ != 0)
            fail(SmilesErrorCode::unexpected_character, pending_offset_, "dangling bond symbol");
        if (!branch_stack_.empty())
            fail(SmilesErrorCode::unclosed_branch, branch_stack_.back().second, "unclosed branch");
        if (!rings_.empty())
            fail(SmilesErrorCode::unmatched_ring_bond, rings_.begin()->second.offset,
                 "ring bond " + std::to_string(rings_.begin()->first) + " never closed");
        if (mol_.atoms.empty()) fail(SmilesErrorCode::empty_input, 0, "no atoms");
        if (prev_ < 0)
            fail(SmilesErrorCode::unexpected_character, s_.size() - 1, "trailing dot");
        resolve_hydrogens();
        derive_rings();
        return std::move(mol_);
    }

private:
    void step() {
        char c = s_[pos_];
        switch (c) {
            case '(': {
                if (prev_ < 0)
                    fail(SmilesErrorCode::unexpected_character, pos_, "branch before any atom");
                if (pending_order_ != 0)
                    fail(SmilesErrorCode::unexpected_character, pos_, "bond before branch open");
                branch_stack_.emplace_back(prev_, pos_);
                ++pos_;
                return;
            }
            case ')': {
                if (branch_stack_.empty())
                    fail(SmilesErrorCode::unmatched_branch_close, pos_, "no branch to close");
                if (pending_order_ != 0)
                    fail(SmilesErrorCode::unexpected_character, pos_, "dangling bond before ')'");
                prev_ = branch_stack_.back().first;
                branch_stack_.pop_back();
                ++pos_;
                return;
            }
            case '-': set_pending(1); return;
            case '=': set_pending(2); return;
            case '#': set_pending(3); return;
            case ':': set_pending(4); return;
            case '/':
            case '\\':
                // up/down stereo bonds degrade to plain single bonds
                if (warnings_) warnings_->stereo_discarded++;
                set_pending(1);
                return;
            case '.': {
                if (pending_order_ != 0)
                    fail(SmilesErrorCode::unexpected_character, pos_, "bond before '.'");
                if (prev_ < 0)
                    fail(SmilesErrorCode::unexpected_character, pos_, "dot before any atom");
                if (!branch_stack_.empty())
                    fail(SmilesErrorCode::unexpected_character, pos_, "dot inside branch");
                prev_ = -1;
                ++pos_;
                return;
            }
            case '%': {
                if (pos_ + 2 >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])) ||
                    !std::isdigit(static_cast<unsigned char>(s_[pos_ + 2])))
                    fail(SmilesErrorCode::unexpected_character, pos_, "%% needs two digits");
                ring_closure((s_[pos_ + 1] - '0') * 10 + (s_[pos_ + 2] - '0'), pos_);
                pos_ += 3;
                return;
            }
            case '[': parse_bracket_atom(); return;
            default: break;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            ring_closure(c - '0', pos_);
            ++pos_;
            return;
        }
        parse_bare_atom();
    }

    void set_pending(int order) {
        if (pending_order_ != 0)
            fail(SmilesErrorCode::unexpected_character, pos_, "two bond symbols in a row");
        if (prev_ < 0)
            fail(SmilesErrorCode::unexpected_character, pos_, "bond before any atom");
        pending_order_ = order;
        pending_offset_ = pos_;
        ++pos_;
    }

    void parse_bare_atom() {
        size_t off = pos_;
        char c = s_[pos_];
        Atom atom;
        if (c == 'C' && pos_ + 1 < s_.size() && s_[pos_ + 1] == 'l') {
            atom.element = "Cl";
            pos_ += 2;
        } else if (c == 'B' && pos_ + 1 < s_.size() && s_[pos_ + 1] == 'r') {
            atom.element = "Br";
            pos_ += 2;
        } else if (c == 'B' || c == 'C' || c == 'N' || c == 'O' || c == 'P' || c == 'S' ||
                   c == 'F' || c == 'I') {
            atom.element = std::string(1, c);
            ++pos_;
        } else if (c == 'b' || c == 'c' || c == 'n' || c == 'o' || c == 'p' || c == 's') {
            atom.element = std::string(1, static_cast<char>(std::toupper(c)));
            atom.aromatic = true;
            ++pos_;
        } else {
            fail(SmilesErrorCode::unexpected_character, pos_,
                 std::string("unexpected character '") + c + "'");
        }
        add_atom(std::move(atom), off);
    }

    void parse_bracket_atom() {
        size_t open = pos_;
        ++pos_; // '['
        Atom atom;
        atom.bracket = true;

        // isotope
        size_t digits = 0;
        int isotope = 0;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
            isotope = isotope * 10 + (s_[pos_] - '0');
            ++pos_;
            ++digits;
            if (digits > 3) fail(SmilesErrorCode::bad_bracket, pos_, "isotope too long");
        }
        atom.isotope = isotope;

        // element symbol
        if (pos_ >= s_.size()) fail(SmilesErrorCode::bad_bracket, open, "unterminated bracket");
        size_t sym_off = pos_;
        char c = s_[pos_];
        if (std::islower(static_cast<unsigned char>(c))) {
            std::string two = s_.size() - pos_ >= 2 ? std::string(s_.substr(pos_, 2)) : "";
            const auto& arom = bracket_aromatic_table();
            if (auto it = arom.find(two); it != arom.end()) {
                atom.element = it->second;
                pos_ += 2;
            } else if (auto it1 = arom.find(std::string(1, c)); it1 != arom.end()) {
                atom.element = it1->second;
                ++pos_;
            } else {
                fail(SmilesErrorCode::unknown_element, sym_off,
                     std::string("unknown aromatic symbol '") + c + "'");
            }
            atom.aromatic = true;
        } else if (std::isupper(static_cast<unsigned char>(c))) {
            std::string two = s_.size() - pos_ >= 2 && std::islower(static_cast<unsigned char>(s_[pos_ + 1]))
                                  ? std::string(s_.substr(pos_, 2))
                                  : "";
            if (!two.empty() && element_table().count(two)) {
                atom.element = two;
                pos_ += 2;
            } else if (element_table().count(std::string(1, c))) {
                atom.element = std::string(1, c);
                ++pos_;
            } else {
                fail(SmilesErrorCode::unknown_element, sym_off,
                     "unknown element '" + (two.empty() ? std::string(1, c) : two) + "'");
            }
        } else {
            fail(SmilesErrorCode::bad_bracket, pos_, "element symbol expected");
        }

        // chirality markers, discarded
        if (pos_ < s_.size() && s_[pos_] == '@') {
            ++pos_;
            if (pos_ < s_.size() && s_[pos_] == '@') ++pos_;
            if (warnings_) warnings_->stereo_discarded++;
        }

        // explicit hydrogen count
        if (pos_ < s_.size() && s_[pos_] == 'H') {
            ++pos_;
            int h = 1;
            if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                h = 0;
                while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                    h = h * 10 + (s_[pos_] - '0');
                    ++pos_;
                }
            }
            atom.hcount = h;
        }

        // charge
        if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) {
            char sign = s_[pos_];
            ++pos_;
            int magnitude = 1;
            if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                magnitude = 0;
                while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                    magnitude = magnitude * 10 + (s_[pos_] - '0');
                    ++pos_;
                }
            } else {
                while (pos_ < s_.size() && s_[pos_] == sign) {
                    ++magnitude;
                    ++pos_;
                }
            }
            atom.charge = sign == '+' ? magnitude : -magnitude;
        }

        // atom class, parsed and discarded
        if (pos_ < s_.size() && s_[pos_] == ':') {
            ++pos_;
            if (pos_ >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_])))
                fail(SmilesErrorCode::bad_bracket, pos_, "atom class digits expected");
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        }

        if (pos_ >= s_.size() || s_[pos_] != ']')
            fail(SmilesErrorCode::bad_bracket, open, "unterminated bracket");
        ++pos_;
        add_atom(std::move(atom), open);
    }

    void add_atom(Atom atom, size_t off) {
        mol_.atoms.push_back(std::move(atom));
        atom_offsets_.push_back(off);
        int idx = static_cast<int>(mol_.atoms.size()) - 1;
        if (prev_ >= 0) {
            int order = pending_order_;
            if (order == 0)
                order = (mol_.atoms[prev_].aromatic && mol_.atoms[idx].aromatic) ? 4 : 1;
            add_bond(prev_, idx, order, off);
        }
        pending_order_ = 0;
        prev_ = idx;
    }

    void ring_closure(int number, size_t off) {
        if (prev_ < 0)
            fail(SmilesErrorCode::unexpected_character, off, "ring closure before any atom");
        auto it = rings_.find(number);
        if (it == rings_.end()) {
            rings_[number] = RingOpen{prev_, pending_order_, off};
            pending_order_ = 0;
            return;
        }
        RingOpen other = it->second;
        rings_.erase(it);
        if (other.atom == prev_)
            fail(SmilesErrorCode::ring_bond_conflict, off, "ring closure joins an atom to itself");
        int order = 0;
        if (other.order != 0 && pending_order_ != 0 && other.order != pending_order_)
            fail(SmilesErrorCode::ring_bond_conflict, off, "ring bond orders disagree");
        order = other.order != 0 ? other.order : pending_order_;
        if (order == 0)
            order = (mol_.atoms[other.atom].aromatic && mol_.atoms[prev_].aromatic) ? 4 : 1;
        add_bond(other.atom, prev_, order, off);
        pending_order_ = 0;
    }

    void add_bond(int a, int b, int order, size_t off) {
        auto key = std::minmax(a, b);
        if (!bond_pairs_.insert(key).second)
            fail(SmilesErrorCode::duplicate_bond, off, "duplicate bond between one atom pair");
        if (order == 4 && !(mol_.atoms[a].aromatic && mol_.atoms[b].aromatic))
            fail(SmilesErrorCode::aromatic_bond_mismatch, off,
                 "aromatic bond requires aromatic atoms on both ends");
        Bond bond;
        bond.a = a;
        bond.b = b;
        bond.order = static_cast<BondOrder>(order);
        mol_.bonds.push_back(bond);
    }

    void resolve_hydrogens() {
        std::vector<int> units(mol_.atoms.size(), 0);
        for (const Bond& bond : mol_.bonds) {
            units[bond.a] += bond_units(bond.order);
            units[bond.b] += bond_units(bond.order);
        }
        for (size_t i = 0; i < mol_.atoms.size(); ++i) {
            Atom& atom = mol_.atoms[i];
            if (atom.bracket) continue; // explicit H only, no valence enforcement
            const std::vector<int>* allowed = default_valences(atom.element);
            if (allowed == nullptr)
                fail(SmilesErrorCode::unknown_element, atom_offsets_[i],
                     "element '" + atom.element + "' requires brackets");
            int h = -1;
            for (int v : *allowed) {
                if (v >= units[i]) {
                    h = v - units[i];
                    break;
                }
            }
            if (h < 0)
                fail(SmilesErrorCode::valence_violation, atom_offsets_[i],
                     atom.element + " with valence " + std::to_string(units[i]));
            // one hydrogen is absorbed by the aromatic system
            if (atom.aromatic && h > 0) h -= 1;
            atom.hcount = h;
        }
    }

    // Tarjan bridge detection; every non-bridge bond lies on a cycle.
    void derive_rings() {
        size_t n = mol_.atoms.size();
        auto adj = mol_.adjacency();
        std::vector<int> disc(n, -1), low(n, 0);
        int timer = 0;
        std::vector<std::tuple<int, int, size_t>> stack; // atom, incoming bond, next neighbor pos
        for (size_t root = 0; root < n; ++root) {
            if (disc[root] != -1) continue;
            stack.emplace_back(static_cast<int>(root), -1, 0);
            disc[root] = low[root] = timer++;
            while (!stack.empty()) {
                auto& [u, in_bond, next] = stack.back();
                if (next < adj[u].size()) {
                    auto [v, bond_idx] = adj[u][next++];
                    if (bond_idx == in_bond) continue;
                    if (disc[v] == -1) {
                        disc[v] = low[v] = timer++;
                        stack.emplace_back(v, bond_idx, 0);
                    } else {
                        low[u] = std::min(low[u], disc[v]);
                        mol_.bonds[bond_idx].in_ring = true; // back edge
                    }
                } else {
                    int done = u;
                    int done_bond = in_bond;
                    stack.pop_back();
                    if (!stack.empty()) {
                        int parent = std::get<0>(stack.back());
                        low[parent] = std::min(low[parent], low[done]);
                        if (low[done] <= disc[parent]) mol_.bonds[done_bond].in_ring = true;
                    }
                }
            }
        }
        for (const Bond& bond : mol_.bonds) {
            if (bond.in_ring) {
                mol_.atoms[bond.a].in_ring = true;
                mol_.atoms[bond.b].in_ring = true;
            }
        }
    }

    [[noreturn]] void fail(SmilesErrorCode code, size_t offset, const std::string& detail) {
        throw SmilesParseError(code, offset, detail);
    }

    std::string_view s_;
    ParseWarnings* warnings_;
    size_t pos_ = 0;
    MolGraph mol_;
    std::vector<size_t> atom_offsets_;
    int prev_ = -1;
    int pending_order_ = 0;
    size_t pending_offset_ = 0;
    std::vector<std::pair<int, size_t>> branch_stack_;
    std::map<int, RingOpen> rings_;
    std::set<std::pair<int, int>> bond_pairs_;
};

}  // namespace

std::vector<std::vector<std::pair<int, int>>> MolGraph::adjacency() const {
    std::vector<std::vector<std::pair<int, int>>> adj(atoms.size());
    for (size_t i = 0; i < bonds.size(); ++i) {
        adj[bonds[i].a].emplace_back(bonds[i].b, static_cast<int>(i));
        adj[bonds[i].b].emplace_back(bonds[i].a, static_cast<int>(i));
    }
    for (auto& neighbors : adj) std::sort(neighbors.begin(), neighbors.end());
    return adj;
}

size_t MolGraph::degree(int atom) const {
    size_t d = 0;
    for (const Bond& bond : bonds)
        if (bond.a == atom || bond.b == atom) ++d;
    return d;
}

const char* to_string(SmilesErrorCode code) {
    switch (code) {
        case SmilesErrorCode::empty_input: return "empty input";
        case SmilesErrorCode::unexpected_character: return "unexpected character";
        case SmilesErrorCode::unclosed_branch: return "unclosed branch";
        case SmilesErrorCode::unmatched_branch_close: return "unmatched branch close";
        case SmilesErrorCode::unmatched_ring_bond: return "unmatched ring bond";
        case SmilesErrorCode::ring_bond_conflict: return "ring bond conflict";
        case SmilesErrorCode::duplicate_bond: return "duplicate bond";
        case SmilesErrorCode::unknown_element: return "unknown element";
        case SmilesErrorCode::bad_bracket: return "bad bracket atom";
        case SmilesErrorCode::valence_violation: return "valence violation";
        case SmilesErrorCode::aromatic_bond_mismatch: return "aromatic bond mismatch";
    }
    return "parse error";
}

SmilesParseError::SmilesParseError(SmilesErrorCode code, size_t offset, const std::string& detail)
    : Error(std::string(to_string(code)) + " at offset " + std::to_string(offset) + ": " + detail),
      code_(code),
      offset_(offset) {}

MolGraph parse_smiles(std::string_view smiles, ParseWarnings* warnings) {
    return Parser(smiles, warnings).run();
}

bool validity(std::string_view smiles) noexcept {
    try {
        parse_smiles(smiles);
        return true;
    } catch (...) {
        return false;
    }
}

int implied_hcount(const MolGraph& m, int atom) {
    const Atom& a = m.atoms[atom];
    const std::vector<int>* allowed = default_valences(a.element);
    if (allowed == nullptr) return -1;
    int units = 0;
    for (const Bond& bond : m.bonds)
        if (bond.a == atom || bond.b == atom) units += bond_units(bond.order);
    for (int v : *allowed) {
        if (v >= units) {
            int h = v - units;
            if (a.aromatic && h > 0) h -= 1;
            return h;
        }
    }
    return -1;
}

bool exact_match(std::string_view pred, std::string_view gold) noexcept {
    try {
        return canonical_smiles(pred) == canonical_smiles(gold);
    } catch (...) {
        return false;
    }
}

std::string canonical_smiles(std::string_view smiles) {
    return canonical_smiles(parse_smiles(smiles));
}

}  // namespace chemrag::chem
