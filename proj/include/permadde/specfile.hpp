#pragma once

// JSON spec files (schema version 1) for systems, exact solutions and
// initial segments.
//
// {
//   "version": 1, "name": "...", "n": 2, "tau": 1, "domain_start": 0,
//   "d": [expr, ...],
//   "L": [[null | term | [term, ...], ...], ...],      term = {"a": expr, "kernel": kernel}
//   "f": [{"scale": 1, "terms": [birth, ...]} | [birth, ...] | null, ...],
//   "K": [null | {"kappa": expr, "g": scalar}, ...],
//   "exact": {"components": [expr, ...], "valid_from": 0},   (optional)
//   "initial": [expr, ...]                                   (optional)
// }
//
// Declared bounds live inline on each expression as "bounds": [lo, hi, from].

#include <iosfwd>
#include <optional>
#include <string>

#include "json.hpp"
#include "permadde/experiments.hpp"
#include "permadde/integrator.hpp"
#include "permadde/system.hpp"

namespace permadde {

inline constexpr int kSpecVersion = 1;

struct SpecDocument {
    SystemSpec spec;
    std::optional<ExactSolution> exact;
    std::optional<InitialSegment> initial;
};

nlohmann::json to_json(const DelayKernel& k);
DelayKernel kernel_from_json(const nlohmann::json& j, const std::string& path);
nlohmann::json to_json(const BirthTerm& b);
BirthTerm birth_from_json(const nlohmann::json& j, const std::string& path);

nlohmann::json to_json(const SystemSpec& sys);
nlohmann::json to_json(const SpecDocument& doc);

/// Parses and validates; SpecError names the offending JSON path.
SpecDocument spec_from_json(const nlohmann::json& j);
SpecDocument load_spec_file(const std::string& path);
SpecDocument parse_spec_text(const std::string& text);
void write_spec_file(const std::string& path, const SpecDocument& doc);

}  // namespace permadde
