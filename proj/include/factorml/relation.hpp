#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "factorml/error.hpp"

namespace factorml {

enum class AttrKind { Continuous, Categorical };

inline const char *attr_kind_name(AttrKind k) {
    return k == AttrKind::Continuous ? "continuous" : "categorical";
}

struct AttributeDecl {
    std::string name;
    AttrKind kind = AttrKind::Continuous;

    bool operator==(const AttributeDecl &) const = default;
};

using Schema = std::vector<AttributeDecl>;

/// A tuple cell. Continuous attributes hold the parsed double; categorical
/// attributes hold the dictionary code stored as an exact small integer.
/// -0.0 is canonicalized to +0.0 at ingestion so value equality is bitwise.
using Value = double;
using Tuple = std::vector<Value>;

inline Value canonical(Value v) { return v == 0.0 ? 0.0 : v; }

/// Append-only per-attribute dictionary. Codes are dense 0..n-1 in first
/// occurrence order and are never reassigned.
class Dictionary {
  public:
    uint32_t encode(const std::string &s) {
        auto it = index_.find(s);
        if (it != index_.end()) return it->second;
        uint32_t code = static_cast<uint32_t>(entries_.size());
        entries_.push_back(s);
        index_.emplace(s, code);
        return code;
    }

    std::optional<uint32_t> lookup(const std::string &s) const {
        auto it = index_.find(s);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    const std::string &decode(uint32_t code) const {
        if (code >= entries_.size())
            throw Error(ErrorKind::Internal, "dictionary code out of range");
        return entries_[code];
    }

    size_t size() const { return entries_.size(); }
    const std::vector<std::string> &entries() const { return entries_; }

  private:
    std::vector<std::string> entries_;
    std::unordered_map<std::string, uint32_t> index_;
};

/// Multiset relation: tuple -> integer multiplicity. Ordered map so every
/// scan sees tuples in sorted order; this fixes floating-point summation
/// order independently of insertion order.
struct Relation {
    std::string name;
    Schema schema;
    std::map<Tuple, int64_t> data;

    size_t arity() const { return schema.size(); }
    size_t distinct_tuples() const { return data.size(); }

    int64_t total_multiplicity() const {
        int64_t n = 0;
        for (const auto &[t, m] : data) n += m;
        return n;
    }

    int attr_index(const std::string &attr) const {
        for (size_t i = 0; i < schema.size(); ++i)
            if (schema[i].name == attr) return static_cast<int>(i);
        return -1;
    }

    bool has_attr(const std::string &attr) const { return attr_index(attr) >= 0; }

    /// Adds delta to a tuple's multiplicity; erases the entry when it
    /// reaches exactly zero.
    void add(const Tuple &t, int64_t delta) {
        auto [it, inserted] = data.try_emplace(t, 0);
        it->second += delta;
        if (it->second == 0) data.erase(it);
    }
};

struct UpdateEvent {
    int sign = +1;  // +1 insert, -1 delete
    std::string relation;
    Tuple tuple;

    bool operator==(const UpdateEvent &) const = default;
};

/// Registered schemas, shared dictionaries, and loaded relations.
/// Immutable once loading is done; evaluation only reads it.
class Catalog {
  public:
    /// Registers a schema, enforcing that an attribute name carries the same
    /// kind everywhere it appears.
    void register_schema(const std::string &rel_name, const Schema &schema) {
        for (size_t i = 0; i < schema.size(); ++i) {
            for (size_t j = i + 1; j < schema.size(); ++j)
                if (schema[i].name == schema[j].name)
                    throw Error(ErrorKind::Config,
                                "duplicate attribute '" + schema[i].name + "' in schema of " + rel_name);
            auto [it, inserted] = attr_kinds_.emplace(schema[i].name, schema[i].kind);
            if (!inserted && it->second != schema[i].kind)
                throw Error(ErrorKind::Type, "attribute '" + schema[i].name +
                                                 "' registered with conflicting kinds");
            if (schema[i].kind == AttrKind::Categorical) dictionaries_[schema[i].name];
        }
        Relation rel;
        rel.name = rel_name;
        rel.schema = schema;
        relations_[rel_name] = std::move(rel);
    }

    /// Registers a standalone attribute (derived columns such as bins).
    void register_attribute(const std::string &name, AttrKind kind) {
        auto [it, inserted] = attr_kinds_.emplace(name, kind);
        if (!inserted && it->second != kind)
            throw Error(ErrorKind::Type,
                        "attribute '" + name + "' registered with conflicting kinds");
        if (kind == AttrKind::Categorical) dictionaries_[name];
    }

    bool has_relation(const std::string &name) const { return relations_.count(name) > 0; }

    Relation &relation(const std::string &name) {
        auto it = relations_.find(name);
        if (it == relations_.end())
            throw Error(ErrorKind::UnsupportedQuery, "unknown relation '" + name + "'");
        return it->second;
    }
    const Relation &relation(const std::string &name) const {
        return const_cast<Catalog *>(this)->relation(name);
    }

    const std::map<std::string, Relation> &relations() const { return relations_; }

    std::optional<AttrKind> attr_kind(const std::string &attr) const {
        auto it = attr_kinds_.find(attr);
        if (it == attr_kinds_.end()) return std::nullopt;
        return it->second;
    }

    Dictionary &dictionary(const std::string &attr) {
        auto it = dictionaries_.find(attr);
        if (it == dictionaries_.end())
            throw Error(ErrorKind::Type, "attribute '" + attr + "' has no dictionary (not categorical)");
        return it->second;
    }
    const Dictionary &dictionary(const std::string &attr) const {
        return const_cast<Catalog *>(this)->dictionary(attr);
    }

  private:
    std::map<std::string, AttrKind> attr_kinds_;
    std::map<std::string, Dictionary> dictionaries_;
    std::map<std::string, Relation> relations_;
};

/// Natural-join feature extraction query over registered relations.
struct QuerySpec {
    std::vector<std::string> relations;
    std::vector<std::string> features;
    std::optional<std::string> response;
    bool intercept = false;
};

/// Validates a query against a catalog: relations exist, every feature and
/// the response appear in at least one of the query's relations, and the
/// response is not also listed as a feature.
void validate_query(const QuerySpec &query, const Catalog &catalog);

}  // namespace factorml
