#include "factorml/model_json.hpp"

#include "factorml/csv.hpp"

namespace factorml {

json feature_key_json(const FeatureKey &key, const LiftSpec &spec, const Catalog &catalog) {
    const LiftFeature &f = spec.features[key.feature];
    json out;
    out["attr"] = f.is_intercept ? "intercept" : f.source_attr;
    if (key.category >= 0)
        out["category"] = catalog.dictionary(f.source_attr).decode(static_cast<uint32_t>(key.category));
    else
        out["category"] = nullptr;
    return out;
}

json sigma_json(const CovariancePayload &payload, const LiftSpec &spec, const Catalog &catalog) {
    json out;
    out["count"] = payload.c;
    json s = json::object();
    for (const auto &[key, v] : payload.s) s[spec.key_name(key, catalog)] = v;
    json q = json::object();
    for (const auto &[pair, v] : payload.q)
        q[spec.key_name(pair.a, catalog) + "," + spec.key_name(pair.b, catalog)] = v;
    out["s"] = std::move(s);
    out["q"] = std::move(q);
    return out;
}

json group_counts_json(const GroupCounts &counts, const std::vector<std::string> &attrs,
                       const Catalog &catalog) {
    json body = json::object();
    for (const auto &[key, n] : counts) {
        std::string name;
        for (size_t i = 0; i < key.size(); ++i)
            name += (i ? "," : "") + catalog.dictionary(attrs[i]).decode(key[i]);
        body[name] = n;
    }
    json out;
    out["group_by"] = attrs;
    out["counts"] = std::move(body);
    return out;
}

json ridge_model_json(const RidgeModel &model, const Catalog &catalog) {
    json out;
    out["type"] = "ridge";
    out["lambda"] = model.lambda;
    json feats = json::array();
    for (const auto &key : model.keys) feats.push_back(feature_key_json(key, model.spec, catalog));
    out["features"] = std::move(feats);
    json theta = json::array();
    for (Eigen::Index i = 0; i < model.theta.size(); ++i) theta.push_back(model.theta(i));
    out["theta"] = std::move(theta);
    out["gradient_norm"] = model.gradient_norm;
    out["iterations"] = model.iterations;
    return out;
}

namespace {

json tree_node_json(const DecisionTreeNode &node, bool classification, const Catalog &catalog,
                    const std::string &response) {
    json out;
    out["count"] = node.count;
    if (node.is_leaf()) {
        if (classification)
            out["class"] = catalog.dictionary(response).decode(static_cast<uint32_t>(node.label));
        else
            out["value"] = node.value;
        return out;
    }
    const Predicate &p = *node.split;
    out["attr"] = p.attr;
    out["op"] = predicate_op_name(p.op);
    if (p.op == Predicate::Op::LE || p.op == Predicate::Op::GT) {
        out["threshold"] = p.threshold;
    } else {
        json cats = json::array();
        for (int32_t c : p.categories)
            cats.push_back(catalog.dictionary(p.attr).decode(static_cast<uint32_t>(c)));
        out["categories"] = std::move(cats);
    }
    out["left"] = tree_node_json(*node.left, classification, catalog, response);
    out["right"] = tree_node_json(*node.right, classification, catalog, response);
    return out;
}

}  // namespace

json decision_tree_json(const DecisionTree &tree, const Catalog &catalog) {
    json out;
    out["type"] = "cart";
    out["task"] = tree.classification ? "classification" : "regression";
    out["response"] = tree.response;
    out["max_depth"] = tree.params.max_depth;
    out["min_leaf"] = tree.params.min_leaf;
    out["n_thresholds"] = tree.params.n_thresholds;
    out["root"] = tree_node_json(*tree.root, tree.classification, catalog, tree.response);
    return out;
}

json chow_liu_json(const ChowLiuTree &tree) {
    json out;
    out["type"] = "chowliu";
    out["vertices"] = tree.attrs;
    json edges = json::array();
    for (const auto &e : tree.edges) {
        json edge;
        edge["a"] = e.a;
        edge["b"] = e.b;
        edge["mi"] = e.mi;
        edges.push_back(std::move(edge));
    }
    out["edges"] = std::move(edges);
    out["total_mi"] = tree.total_weight();
    return out;
}

QuerySpec query_spec_from_json(const json &j) {
    QuerySpec q;
    if (!j.contains("relations") || !j["relations"].is_array())
        throw Error(ErrorKind::Config, "query spec needs a 'relations' array");
    for (const auto &r : j["relations"]) q.relations.push_back(r.get<std::string>());
    if (j.contains("features"))
        for (const auto &f : j["features"]) q.features.push_back(f.get<std::string>());
    if (j.contains("response") && !j["response"].is_null())
        q.response = j["response"].get<std::string>();
    if (j.contains("intercept")) q.intercept = j["intercept"].get<bool>();
    return q;
}

}  // namespace factorml
