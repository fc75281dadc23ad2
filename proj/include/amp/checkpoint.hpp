#pragma once

// Parameter checkpoints: named flat arrays with shape headers, one versioned
// format for every learner kind.  A checkpoint holds the parameter store and
// optionally the Adam state and batch-norm running statistics, plus free-form
// metadata (seeds, config hash, model card fields).

#include <map>
#include <string>
#include <vector>

#include "amp/autodiff.hpp"

namespace amp::ckpt {

using Meta = std::map<std::string, std::string>;

// Text header (version, entry names and shapes, metadata) followed by a raw
// little-endian float32 blob: entry values, then Adam m/v per entry, then
// batch-norm mean/var per layer.
void save(const std::string& path, const ad::ParamStore<float>& params,
          const ad::AdamState<float>* adam, const std::vector<ad::BnStats<float>>* bn,
          const Meta& meta);

// An empty store takes the checkpoint's entries; a populated one must match
// shapes exactly.  adam/bn may be null to skip those sections.  Throws Error
// on malformed files or shape mismatches.
Meta load(const std::string& path, ad::ParamStore<float>& params, ad::AdamState<float>* adam,
          std::vector<ad::BnStats<float>>* bn);

}  // namespace amp::ckpt
