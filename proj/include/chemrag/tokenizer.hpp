#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace chemrag {

// Retrieval tokenizer: lowercased terms split on Unicode non-alphanumerics,
// plus the raw case-preserved form of any whitespace token that looks like a
// chemistry identifier, so SMILES strings and formulas survive indexing.
std::vector<std::string> tokenize(std::string_view text);

// A whitespace token is chemistry-like when it contains SMILES-indicative
// punctuation ( ) [ ] = # @ + %, a digit adjacent to a letter, or consists
// solely of SMILES atom letters with at least one uppercase (e.g. "CCO").
bool chemistry_like_token(std::string_view raw);

}  // namespace chemrag
