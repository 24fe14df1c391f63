#pragma once

#include <string>
#include <vector>

#include "factorml/relation.hpp"

namespace factorml {

/// Loads a header-first comma-separated file into the catalog's relation.
/// The header must match the registered schema names in order. Duplicate
/// rows accumulate multiplicity; categorical values extend the shared
/// dictionaries in first-occurrence order.
Relation &load_csv(Catalog &catalog, const std::string &rel_name, const std::string &path);

/// Parses an update stream: one event per line, `+|-,RelName,v1,...,vk`
/// with values in schema order. Unseen categorical strings extend the
/// dictionary. Events are returned in file order.
std::vector<UpdateEvent> parse_update_stream(Catalog &catalog, const std::string &path);

/// Renders events back to the stream format (doubles with round-trip
/// precision, categorical codes decoded through the catalog).
std::string serialize_update_stream(const Catalog &catalog, const std::vector<UpdateEvent> &events);

/// Parses one value string according to the attribute declaration.
/// Continuous values must be finite; categorical strings are encoded
/// (extending the dictionary when extend_dictionary is true).
Value parse_value(Catalog &catalog, const AttributeDecl &attr, const std::string &text,
                  bool extend_dictionary, const std::string &context);

/// Formats a cell for output: continuous with round-trip precision,
/// categorical decoded to its string.
std::string format_value(const Catalog &catalog, const AttributeDecl &attr, Value v);

}  // namespace factorml
