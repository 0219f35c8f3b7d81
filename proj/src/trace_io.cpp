#include "combkit/trace_io.hpp"

#include <cstdio>

#include "combkit/error.hpp"

namespace combkit {

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidTrace, what); }

}  // namespace

nlohmann::json trace_to_json(const ChoiceTrace& trace, const ClassSystem& system) {
  nlohmann::json decisions = nlohmann::json::array();
  for (const auto& d : trace.decisions) decisions.push_back({d.node, d.outcome, d.real.hex(), d.real.bits});
  return {{"format", "combkit-trace"},
          {"version", kTraceVersion},
          {"class", trace.class_name},
          {"root", trace.root},
          {"stream", hex64(trace.stream)},
          {"variables", system.variables()},
          {"size", trace.size.values()},
          {"decisions", std::move(decisions)}};
}

ChoiceTrace trace_from_json(const nlohmann::json& doc, const ClassSystem& system) {
  ChoiceTrace t;
  try {
    if (!doc.is_object() || doc.value("format", "") != "combkit-trace") invalid("not a combkit trace document");
    if (doc.at("version").get<int>() != kTraceVersion)
      invalid("unsupported trace version " + doc.at("version").dump());
    t.class_name = doc.at("class").get<std::string>();
    const auto c = system.find_class(t.class_name);
    if (!c) invalid("trace class '" + t.class_name + "' is not defined");
    t.root = doc.at("root").get<std::int32_t>();
    if (t.root != system.class_root(*c)) invalid("trace root does not match its class");
    const std::string stream = doc.at("stream").get<std::string>();
    if (stream.size() != 16 || stream.find_first_not_of("0123456789abcdef") != std::string::npos)
      invalid("stream must be 16 lowercase hex digits");
    t.stream = std::stoull(stream, nullptr, 16);
    if (doc.at("variables").get<std::vector<std::string>>() != system.variables())
      invalid("trace variables do not match the system");
    t.size = SizeVector(doc.at("size").get<std::vector<std::int64_t>>());
    if (t.size.size() != system.variable_count()) invalid("size has the wrong number of entries");
    for (const auto& d : doc.at("decisions")) {
      if (!d.is_array() || d.size() != 4) invalid("each decision is [node, outcome, hex, bits]");
      Decision dec;
      dec.node = d[0].get<std::int32_t>();
      dec.outcome = d[1].get<std::uint32_t>();
      dec.real = RandomReal::from_hex(d[2].get<std::string>(), d[3].get<std::uint32_t>());
      t.decisions.push_back(std::move(dec));
    }
  } catch (const nlohmann::json::exception& e) {
    invalid(std::string("malformed trace: ") + e.what());
  }
  // The decisions must rebuild an object of the recorded size.
  SizeVector size(system.variable_count(), 0);
  walk_trace(system, t, [&](const BuildEvent& ev) {
    if (ev.kind == BuildEvent::Atom) size += system.node(ev.node).atom_size;
  });
  if (!(size == t.size)) invalid("recorded size does not match the replayed object");
  return t;
}

std::string format_trace(const ChoiceTrace& trace, const ClassSystem& system) {
  return trace_to_json(trace, system).dump();
}

ChoiceTrace parse_trace(const std::string& text, const ClassSystem& system) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    invalid(std::string("trace is not valid JSON: ") + e.what());
  }
  return trace_from_json(doc, system);
}

nlohmann::json JsonBuilder::product(const ConstructorDescriptor&, std::vector<nlohmann::json> children) {
  return {{"prod", std::move(children)}};
}

nlohmann::json JsonBuilder::sequence(const ConstructorDescriptor&, std::vector<nlohmann::json> children) {
  nlohmann::json arr = nlohmann::json::array();
  for (auto& c : children) arr.push_back(std::move(c));
  return {{"seq", std::move(arr)}};
}

nlohmann::json build_json(const ChoiceTrace& trace, const ClassSystem& system) {
  JsonBuilder b;
  return build(trace, system, b);
}

}  // namespace combkit
