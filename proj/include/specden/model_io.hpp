#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "specden/model.hpp"

namespace specden {

/// Builds a model from a named constructor: marchenko-pastur {p, n},
/// fig2/fig3/fig4 {p?, n?} (fig2 also uses the seed), fig5 {p?, n?, tau?}
/// (the interference model of the uplink SINR setup).
ModelSpec build_constructor(const std::string& name, const std::map<std::string, double>& params,
                            std::optional<std::uint64_t> seed);

/// Parses a model document. Errors are StructuralError with the offending
/// field path, or line and column for syntax errors. Unknown keys are rejected.
ModelSpec parse_model(const std::string& text);
ModelSpec load_model(const std::string& path);

/// Serializes a model; models that came from a named constructor are written
/// in constructor form unless `explicit_form` is set.
std::string model_to_json(const ModelSpec& model, bool explicit_form = false);

} // namespace specden
