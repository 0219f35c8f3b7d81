#pragma once

// Trace serialization and the JSON tree builder.
//
// Trace document:
//   {"format": "combkit-trace", "version": 1, "class": "B", "root": 0,
//    "stream": "9e3779b97f4a7c15", "variables": ["z"], "size": [3],
//    "decisions": [[node, outcome, "hex prefix", prefix bits], ...]}

#include <nlohmann/json.hpp>

#include <string>

#include "combkit/sampler.hpp"

namespace combkit {

inline constexpr int kTraceVersion = 1;

nlohmann::json trace_to_json(const ChoiceTrace& trace, const ClassSystem& system);
/// Throws InvalidTrace on a malformed document or one that does not replay
/// against `system`.
ChoiceTrace trace_from_json(const nlohmann::json& doc, const ClassSystem& system);

std::string format_trace(const ChoiceTrace& trace, const ClassSystem& system);
ChoiceTrace parse_trace(const std::string& text, const ClassSystem& system);

/// JSON trees: atoms become their key, products {"prod": [...]},
/// sequences {"seq": [...]}.
class JsonBuilder final : public Builder<nlohmann::json> {
 public:
  nlohmann::json atom(const AtomDescriptor& atom) override { return atom.key; }
  nlohmann::json product(const ConstructorDescriptor&, std::vector<nlohmann::json> children) override;
  nlohmann::json sequence(const ConstructorDescriptor&, std::vector<nlohmann::json> children) override;
};

nlohmann::json build_json(const ChoiceTrace& trace, const ClassSystem& system);

}  // namespace combkit
