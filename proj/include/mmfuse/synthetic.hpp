#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace mmfuse {

// Small generated datasets with known structure.
//  cross_modal_xor: binary label = tab_bit XOR emb_bit. The tabular table
//    carries tab_bit plus noise columns (some missing), the embedding "emb"
//    carries emb_bit in e0 plus noise. Either modality alone is at chance.
//  ambiguous_half: four classes. Tabular features separate {A,B} from {C,D}
//    and A from B; only the embedding separates C from D.
//  exchangeable: three classes with priors 0.5 / 0.3 / 0.2 and
//    x | y ~ N(mu_y, I), so a logistic model is well specified. Tabular only.
enum class SyntheticKind { cross_modal_xor, ambiguous_half, exchangeable };

std::string to_string(SyntheticKind k);
SyntheticKind synthetic_from_string(const std::string& s);

// Writes tabular.csv, the embedding CSVs and manifest.json into `dir` and
// returns the manifest path. Requires n >= 40.
std::filesystem::path make_synthetic(SyntheticKind kind, std::size_t n, std::uint64_t seed,
                                     const std::filesystem::path& dir);

}  // namespace mmfuse
