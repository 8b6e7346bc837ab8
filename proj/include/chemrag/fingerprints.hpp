#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "chemrag/smiles.hpp"

namespace chemrag::chem {

enum class FingerprintKind { morgan, path, structural_keys };

const char* to_string(FingerprintKind kind);

struct Fingerprint {
    FingerprintKind kind;
    size_t nbits = 0;
    std::set<uint32_t> bits;
};

struct StructuralKey {
    std::string id;
    std::string smiles_fragment;
    std::string description;
};

struct KeySet {
    std::vector<StructuralKey> keys;
};

// ECFP-style circular fingerprint. Initial atom invariant hashes
// (element, charge, degree, H count, aromatic, in-ring); each round folds in
// the sorted (bond order, neighbor invariant) environment.
Fingerprint morgan_fingerprint(const MolGraph& m, int radius = 2, size_t nbits = 2048);

// Linear-path fingerprint: all simple paths of 1..max_len bonds, hashed on
// the lexicographically smaller of the two traversal strings.
Fingerprint path_fingerprint(const MolGraph& m, int max_len = 7, size_t nbits = 2048);

// Substructure-key fingerprint: bit i set iff keys[i] is subgraph-isomorphic
// to m (element + aromaticity + bond order matched, charge wildcarded).
Fingerprint structural_keys(const MolGraph& m, const KeySet& keys);

// |A∩B| / |A∪B|; 1.0 when both empty, 0.0 when exactly one is.
double tanimoto(const Fingerprint& a, const Fingerprint& b);

// The 20 default functional-group keys (mirrors data/structural_keys.jsonl).
const KeySet& default_key_set();

// Loads a key set from JSONL rows {id, smiles_fragment, description}.
KeySet load_key_set(const std::filesystem::path& path);

}  // namespace chemrag::chem
