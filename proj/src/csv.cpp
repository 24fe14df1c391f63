#include "factorml/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace factorml {

namespace {

std::vector<std::string> split_commas(const std::string &line) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

std::string format_double(double v) {
    if (v == static_cast<double>(static_cast<long long>(v)) && std::abs(v) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
        return buf;
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // shorten when a lower precision already round-trips
    for (int prec = 1; prec < 17; ++prec) {
        char trial[40];
        std::snprintf(trial, sizeof(trial), "%.*g", prec, v);
        if (std::strtod(trial, nullptr) == v) return trial;
    }
    return buf;
}

}  // namespace

Value parse_value(Catalog &catalog, const AttributeDecl &attr, const std::string &text,
                  bool extend_dictionary, const std::string &context) {
    if (attr.kind == AttrKind::Continuous) {
        const char *begin = text.c_str();
        char *end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin || *end != '\0' || !std::isfinite(v))
            throw Error(ErrorKind::Ingestion,
                        context + ": cannot parse '" + text + "' as a number for attribute '" +
                            attr.name + "'");
        return canonical(v);
    }
    Dictionary &dict = catalog.dictionary(attr.name);
    if (extend_dictionary) return static_cast<Value>(dict.encode(text));
    auto code = dict.lookup(text);
    if (!code)
        throw Error(ErrorKind::Ingestion,
                    context + ": unknown category '" + text + "' for attribute '" + attr.name + "'");
    return static_cast<Value>(*code);
}

std::string format_value(const Catalog &catalog, const AttributeDecl &attr, Value v) {
    if (attr.kind == AttrKind::Continuous) return format_double(v);
    return catalog.dictionary(attr.name).decode(static_cast<uint32_t>(v));
}

Relation &load_csv(Catalog &catalog, const std::string &rel_name, const std::string &path) {
    Relation &rel = catalog.relation(rel_name);
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Ingestion, "cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line))
        throw Error(ErrorKind::Ingestion, path + ": empty file, expected a header row");
    auto header = split_commas(strip_cr(line));
    if (header.size() != rel.schema.size())
        throw Error(ErrorKind::Ingestion, path + ": header has " + std::to_string(header.size()) +
                                              " columns, schema of " + rel_name + " has " +
                                              std::to_string(rel.schema.size()));
    for (size_t i = 0; i < header.size(); ++i)
        if (header[i] != rel.schema[i].name)
            throw Error(ErrorKind::Ingestion, path + ": header column '" + header[i] +
                                                  "' does not match schema attribute '" +
                                                  rel.schema[i].name + "'");

    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto fields = split_commas(line);
        std::string context = path + ":" + std::to_string(line_no);
        if (fields.size() != rel.schema.size())
            throw Error(ErrorKind::Ingestion, context + ": expected " +
                                                  std::to_string(rel.schema.size()) + " values, got " +
                                                  std::to_string(fields.size()));
        Tuple t(rel.schema.size());
        for (size_t i = 0; i < fields.size(); ++i)
            t[i] = parse_value(catalog, rel.schema[i], fields[i], /*extend=*/true, context);
        rel.add(t, +1);
    }
    return rel;
}

std::vector<UpdateEvent> parse_update_stream(Catalog &catalog, const std::string &path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Ingestion, "cannot open '" + path + "'");

    std::vector<UpdateEvent> events;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        std::string context = path + ":" + std::to_string(line_no);
        auto fields = split_commas(line);
        if (fields.size() < 2)
            throw Error(ErrorKind::Ingestion, context + ": expected `+|-,RelName,v1,...,vk`");
        UpdateEvent ev;
        if (fields[0] == "+")
            ev.sign = +1;
        else if (fields[0] == "-")
            ev.sign = -1;
        else
            throw Error(ErrorKind::Ingestion, context + ": sign must be '+' or '-', got '" +
                                                  fields[0] + "'");
        ev.relation = fields[1];
        if (!catalog.has_relation(ev.relation))
            throw Error(ErrorKind::Ingestion, context + ": unknown relation '" + ev.relation + "'");
        const Relation &rel = catalog.relation(ev.relation);
        if (fields.size() - 2 != rel.arity())
            throw Error(ErrorKind::Ingestion, context + ": relation " + ev.relation + " has arity " +
                                                  std::to_string(rel.arity()) + ", got " +
                                                  std::to_string(fields.size() - 2) + " values");
        ev.tuple.resize(rel.arity());
        for (size_t i = 0; i < rel.arity(); ++i)
            ev.tuple[i] = parse_value(catalog, rel.schema[i], fields[i + 2], /*extend=*/true, context);
        events.push_back(std::move(ev));
    }
    return events;
}

std::string serialize_update_stream(const Catalog &catalog, const std::vector<UpdateEvent> &events) {
    std::ostringstream out;
    for (const auto &ev : events) {
        const Relation &rel = catalog.relation(ev.relation);
        out << (ev.sign > 0 ? '+' : '-') << ',' << ev.relation;
        for (size_t i = 0; i < ev.tuple.size(); ++i)
            out << ',' << format_value(catalog, rel.schema[i], ev.tuple[i]);
        out << '\n';
    }
    return out.str();
}

void validate_query(const QuerySpec &query, const Catalog &catalog) {
    if (query.relations.empty())
        throw Error(ErrorKind::UnsupportedQuery, "query names no relations");
    for (const auto &r : query.relations) catalog.relation(r);  // throws if unknown

    auto appears = [&](const std::string &attr) {
        for (const auto &r : query.relations)
            if (catalog.relation(r).has_attr(attr)) return true;
        return false;
    };
    for (size_t i = 0; i < query.features.size(); ++i) {
        if (!appears(query.features[i]))
            throw Error(ErrorKind::UnsupportedQuery,
                        "feature '" + query.features[i] + "' appears in no query relation");
        for (size_t j = i + 1; j < query.features.size(); ++j)
            if (query.features[i] == query.features[j])
                throw Error(ErrorKind::UnsupportedQuery,
                            "feature '" + query.features[i] + "' listed twice");
    }
    if (query.response) {
        if (!appears(*query.response))
            throw Error(ErrorKind::UnsupportedQuery,
                        "response '" + *query.response + "' appears in no query relation");
        for (const auto &f : query.features)
            if (f == *query.response)
                throw Error(ErrorKind::UnsupportedQuery,
                            "response '" + f + "' must not also be a feature");
    }
}

}  // namespace factorml
