#pragma once

#include <filesystem>

#include "eerm/models.hpp"

namespace eerm {

/// Checkpoint directory:
///
///   manifest.json   backbone, hidden_dim, layers, standardize, and for each
///                   weight matrix {file, rows, cols}; "eval_stats" names a
///                   2-row CSV (mean, inv_std) when present
///   w<i>.csv        one matrix per file, features.csv format
void save_checkpoint(const ModelParams& p, const std::filesystem::path& dir);
ModelParams load_checkpoint(const std::filesystem::path& dir);

}  // namespace eerm
