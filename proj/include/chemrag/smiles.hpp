#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "chemrag/errors.hpp"

namespace chemrag::chem {

enum class BondOrder : uint8_t { Single = 1, Double = 2, Triple = 3, Aromatic = 4 };

struct Atom {
    std::string element;  // canonical capitalization ("C", "Cl", ...)
    int charge = 0;
    int hcount = 0;       // resolved: implicit for organic-subset atoms, explicit for brackets
    bool aromatic = false;
    bool bracket = false;
    int isotope = 0;      // 0 = unspecified
    bool in_ring = false; // derived
};

struct Bond {
    int a = 0;
    int b = 0;
    BondOrder order = BondOrder::Single;
    bool in_ring = false; // derived
};

struct MolGraph {
    std::vector<Atom> atoms;
    std::vector<Bond> bonds;

    // neighbor list as (neighbor atom index, bond index), sorted by neighbor
    std::vector<std::vector<std::pair<int, int>>> adjacency() const;
    size_t degree(int atom) const;
};

enum class SmilesErrorCode {
    empty_input,
    unexpected_character,
    unclosed_branch,
    unmatched_branch_close,
    unmatched_ring_bond,
    ring_bond_conflict,
    duplicate_bond,
    unknown_element,
    bad_bracket,
    valence_violation,
    aromatic_bond_mismatch,
};

const char* to_string(SmilesErrorCode code);

class SmilesParseError : public Error {
public:
    SmilesParseError(SmilesErrorCode code, size_t offset, const std::string& detail);
    SmilesErrorCode code() const { return code_; }
    size_t offset() const { return offset_; }

private:
    SmilesErrorCode code_;
    size_t offset_;
};

struct ParseWarnings {
    int stereo_discarded = 0; // count of /, \, @, @@ markers dropped
};

// Parses a SMILES string into a molecular graph. Grammar: organic-subset
// atoms, bracket atoms (isotope, charge, explicit H), bonds - = # :, branches,
// ring closures (digits and %nn), aromatic lowercase atoms, dot-separated
// components. Stereo markers are accepted and discarded (warning counted).
MolGraph parse_smiles(std::string_view smiles, ParseWarnings* warnings = nullptr);

// True iff parse_smiles succeeds. Never throws.
bool validity(std::string_view smiles) noexcept;

// Deterministic canonical SMILES, invariant under input atom ordering.
// Ranking by iterative neighborhood refinement with tie-breaking on
// (element, charge, degree, H count, aromaticity); emission is
// lowest-rank-first DFS; components sorted lexicographically.
std::string canonical_smiles(const MolGraph& m);

// Canonical form of a SMILES string (parse + canonicalize).
std::string canonical_smiles(std::string_view smiles);

// True iff both strings parse and share one canonical form. Never throws.
bool exact_match(std::string_view pred, std::string_view gold) noexcept;

// Hydrogen count the parser would infer for this atom if written bare
// (no brackets). Returns -1 when no organic-subset default valence fits.
int implied_hcount(const MolGraph& m, int atom);

}  // namespace chemrag::chem
