#include "factorml/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "factorml/bench.hpp"
#include "factorml/cart.hpp"
#include "factorml/chow_liu.hpp"
#include "factorml/csv.hpp"
#include "factorml/model_json.hpp"
#include "factorml/plan.hpp"
#include "factorml/ridge.hpp"

namespace factorml {

namespace {

std::string dir_of(const std::string &path) {
    auto pos = path.find_last_of('/');
    return pos == std::string::npos ? std::string(".") : path.substr(0, pos);
}

std::string join_path(const std::string &base, const std::string &rel) {
    if (rel.empty() || rel.front() == '/') return rel;
    return base.empty() ? rel : base + "/" + rel;
}

AttrKind parse_kind(const std::string &s, const std::string &context) {
    if (s == "continuous") return AttrKind::Continuous;
    if (s == "categorical") return AttrKind::Categorical;
    throw Error(ErrorKind::Config, context + ": kind must be 'continuous' or 'categorical'");
}

void write_text_file(const std::string &path, const std::string &body) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Config, "cannot write '" + path + "'");
    out << body;
}

std::vector<std::string> split_list(const std::string &s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

}  // namespace

ProjectConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Config, "cannot open config '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception &e) {
        throw Error(ErrorKind::Config, "config '" + path + "': " + e.what());
    }

    ProjectConfig cfg;
    cfg.base_dir = dir_of(path);
    cfg.data_dir = j.value("data_dir", std::string("."));
    if (j.contains("relations")) {
        for (const auto &r : j["relations"]) {
            ProjectConfig::RelationConfig rc;
            rc.name = r.at("name").get<std::string>();
            rc.file = r.value("file", rc.name + ".csv");
            for (const auto &a : r.at("attributes"))
                rc.schema.push_back({a.at("name").get<std::string>(),
                                     parse_kind(a.at("kind").get<std::string>(), rc.name)});
            cfg.relations.push_back(std::move(rc));
        }
    }
    if (j.contains("queries"))
        for (const auto &[name, q] : j["queries"].items())
            cfg.queries[name] = query_spec_from_json(q);
    if (j.contains("trainer")) {
        const auto &t = j["trainer"];
        cfg.trainer.lambda = t.value("lambda", cfg.trainer.lambda);
        cfg.trainer.tol = t.value("tol", cfg.trainer.tol);
        cfg.trainer.max_iters = t.value("max_iters", cfg.trainer.max_iters);
        cfg.trainer.max_depth = t.value("max_depth", cfg.trainer.max_depth);
        cfg.trainer.min_leaf = t.value("min_leaf", cfg.trainer.min_leaf);
        cfg.trainer.n_thresholds = t.value("n_thresholds", cfg.trainer.n_thresholds);
        cfg.trainer.bins = t.value("bins", cfg.trainer.bins);
    }
    const auto &t = cfg.trainer;
    if (t.lambda < 0 || t.tol <= 0 || t.max_iters < 1 || t.max_depth < 0 || t.min_leaf < 1 ||
        t.n_thresholds < 1 || t.bins < 2)
        throw Error(ErrorKind::Config, "trainer defaults out of range");
    return cfg;
}

Catalog build_catalog(const ProjectConfig &config, bool with_data) {
    Catalog db;
    for (const auto &rc : config.relations) db.register_schema(rc.name, rc.schema);
    if (with_data) {
        std::string dir = join_path(config.base_dir, config.data_dir);
        for (const auto &rc : config.relations) load_csv(db, rc.name, join_path(dir, rc.file));
    }
    return db;
}

Catalog bin_attribute(const Catalog &db, const std::string &attr, int bins,
                      std::string *bin_name_out) {
    auto kind = db.attr_kind(attr);
    if (!kind) throw Error(ErrorKind::UnsupportedQuery, "unknown attribute '" + attr + "'");
    if (*kind != AttrKind::Continuous)
        throw Error(ErrorKind::Type, "attribute '" + attr + "' is already categorical");
    if (bins < 2) throw Error(ErrorKind::Config, "bins must be at least 2");

    std::string owner;
    for (const auto &[name, rel] : db.relations()) {
        if (!rel.has_attr(attr)) continue;
        if (!owner.empty())
            throw Error(ErrorKind::UnsupportedQuery,
                        "attribute '" + attr + "' appears in several relations; binning is only "
                        "supported for single-relation attributes");
        owner = name;
    }
    if (owner.empty())
        throw Error(ErrorKind::UnsupportedQuery, "attribute '" + attr + "' is in no relation");

    Catalog out = db;
    Relation &rel = out.relation(owner);
    int cell = rel.attr_index(attr);

    double lo = 0, hi = 0;
    bool first = true;
    for (const auto &[t, m] : rel.data) {
        lo = first ? t[cell] : std::min(lo, t[cell]);
        hi = first ? t[cell] : std::max(hi, t[cell]);
        first = false;
    }
    double width = (hi - lo) / bins;

    std::string bin_name = attr + "_bin";
    out.register_attribute(bin_name, AttrKind::Categorical);
    Dictionary &dict = out.dictionary(bin_name);
    for (int b = 0; b < bins; ++b) {
        // the "b<i>" prefix keeps labels unique even when %g rounds both
        // endpoints to the same text
        char label[112];
        std::snprintf(label, sizeof(label), "b%d[%g,%g%c", b, lo + b * width,
                      b + 1 == bins ? hi : lo + (b + 1) * width, b + 1 == bins ? ']' : ')');
        dict.encode(label);
    }
    rel.schema.push_back({bin_name, AttrKind::Categorical});

    std::map<Tuple, int64_t> old = std::move(rel.data);
    rel.data.clear();
    for (const auto &[t, m] : old) {
        int bin = width <= 0 ? 0
                             : std::min<int>(bins - 1, static_cast<int>((t[cell] - lo) / width));
        Tuple t2 = t;
        t2.push_back(static_cast<Value>(bin));
        rel.add(t2, m);
    }
    if (bin_name_out) *bin_name_out = bin_name;
    return out;
}

namespace {

const QuerySpec &query_or_throw(const ProjectConfig &cfg, const std::string &name) {
    auto it = cfg.queries.find(name);
    if (it == cfg.queries.end())
        throw Error(ErrorKind::Config, "query '" + name + "' not in config");
    return it->second;
}

GdParams gd_params(const TrainerDefaults &t, double tol_override) {
    GdParams p;
    p.tol = tol_override > 0 ? tol_override : t.tol;
    p.max_iters = t.max_iters;
    return p;
}

int dispatch(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    try {
        return dispatch(args, out, err);
    } catch (const Error &e) {
        err << "error: " << error_kind_name(e.kind()) << ": " << e.what() << "\n";
        return e.kind() == ErrorKind::Internal ? 2 : 1;
    } catch (const std::exception &e) {
        err << "error: internal: " << e.what() << "\n";
        return 2;
    }
}

namespace {

int dispatch(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"aggregate-driven learning over relational data"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("-c,--config", config_path, "project config (JSON)")
        ->envname("FACTORML_CONFIG");

    std::string query_name, out_path, log_path, stream_path, group_by_arg, attrs_arg;
    double lambda = -1, tol = -1;
    int max_depth = -1, n_thresholds = -1, bins = -1;
    int64_t min_leaf = -1;
    std::string sizes_arg = "100,1000,10000";
    uint64_t cap = kDefaultMaterializeCap;

    auto *load_cmd = app.add_subcommand("load", "ingest the configured CSV files");

    auto *explain_cmd = app.add_subcommand("explain", "print the view plan of a query");
    explain_cmd->add_option("-q,--query", query_name, "query name")->required();

    auto *agg_cmd = app.add_subcommand("aggregate", "print sigma or group-by counts as JSON");
    agg_cmd->add_option("-q,--query", query_name)->required();
    agg_cmd->add_option("--group-by", group_by_arg, "1 or 2 categorical attributes");

    auto *train_cmd = app.add_subcommand("train", "train a model from aggregates");
    train_cmd->require_subcommand(1);
    auto *ridge_cmd = train_cmd->add_subcommand("ridge");
    ridge_cmd->add_option("-q,--query", query_name)->required();
    ridge_cmd->add_option("-o,--out", out_path)->required();
    ridge_cmd->add_option("--lambda", lambda);
    ridge_cmd->add_option("--tol", tol);
    auto *cart_cmd = train_cmd->add_subcommand("cart");
    cart_cmd->add_option("-q,--query", query_name)->required();
    cart_cmd->add_option("-o,--out", out_path)->required();
    cart_cmd->add_option("--max-depth", max_depth);
    cart_cmd->add_option("--min-leaf", min_leaf);
    cart_cmd->add_option("--thresholds", n_thresholds);
    auto *chow_cmd = train_cmd->add_subcommand("chowliu");
    chow_cmd->add_option("-q,--query", query_name)->required();
    chow_cmd->add_option("-o,--out", out_path)->required();
    chow_cmd->add_option("--attrs", attrs_arg, "comma-separated categorical attributes")
        ->required();
    chow_cmd->add_option("--bins", bins, "equi-width bin continuous attributes first");

    auto *maintain_cmd =
        app.add_subcommand("maintain", "replay an update stream and refresh the ridge model");
    maintain_cmd->add_option("-q,--query", query_name)->required();
    maintain_cmd->add_option("-s,--stream", stream_path)->required();
    maintain_cmd->add_option("-o,--out", out_path)->required();
    maintain_cmd->add_option("--log", log_path, "maintenance log (one line per event)");
    maintain_cmd->add_option("--lambda", lambda);
    maintain_cmd->add_option("--tol", tol);

    auto *bench_cmd = app.add_subcommand("bench", "structure-aware vs structure-agnostic scaling");
    bench_cmd->add_option("--sizes", sizes_arg, "comma-separated per-relation sizes");
    bench_cmd->add_option("--cap", cap, "materialization cap for the baseline");
    bench_cmd->add_option("-o,--out", out_path, "CSV report path (default: stdout)");

    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    try {
        app.parse(argv_rev);
    } catch (const CLI::ParseError &e) {
        if (e.get_exit_code() == 0) {  // --help
            out << app.help();
            return 0;
        }
        throw Error(ErrorKind::Config, e.what());
    }

    if (bench_cmd->parsed()) {
        std::vector<int64_t> sizes;
        for (const auto &s : split_list(sizes_arg)) {
            try {
                sizes.push_back(std::stoll(s));
            } catch (const std::exception &) {
                throw Error(ErrorKind::Config, "bad size '" + s + "' in --sizes");
            }
        }
        if (sizes.empty()) throw Error(ErrorKind::Config, "--sizes is empty");
        BenchReport report = bench_scaling(sizes, cap);
        if (out_path.empty())
            out << report.to_csv();
        else
            write_text_file(out_path, report.to_csv());
        out << "factorized log-log slope: " << report.factorized_slope() << "\n"
            << "naive log-log slope: " << report.naive_slope() << "\n";
        return 0;
    }

    if (config_path.empty())
        throw Error(ErrorKind::Config, "no config given (use --config or FACTORML_CONFIG)");
    ProjectConfig cfg = load_config(config_path);

    if (load_cmd->parsed()) {
        Catalog db = build_catalog(cfg, /*with_data=*/true);
        json summary = json::object();
        for (const auto &[name, rel] : db.relations()) {
            json r;
            r["rows"] = rel.total_multiplicity();
            r["distinct"] = rel.distinct_tuples();
            summary[name] = std::move(r);
        }
        out << summary.dump(2) << "\n";
        return 0;
    }

    if (explain_cmd->parsed()) {
        Catalog db = build_catalog(cfg, /*with_data=*/false);
        const QuerySpec &query = query_or_throw(cfg, query_name);
        JoinTree tree = gyo_join_tree(query, db);
        ViewPlan plan = compile_view_plan(tree, db, {});
        out << explain(plan);
        return 0;
    }

    if (agg_cmd->parsed()) {
        Catalog db = build_catalog(cfg, /*with_data=*/true);
        const QuerySpec &query = query_or_throw(cfg, query_name);
        if (group_by_arg.empty()) {
            SigmaResult result = sigma(db, query);
            out << sigma_json(result.payload, result.spec, db).dump(2) << "\n";
        } else {
            auto attrs = split_list(group_by_arg);
            GroupCounts counts = group_by_counts(db, query, attrs);
            out << group_counts_json(counts, attrs, db).dump(2) << "\n";
        }
        return 0;
    }

    if (ridge_cmd->parsed()) {
        Catalog db = build_catalog(cfg, /*with_data=*/true);
        const QuerySpec &query = query_or_throw(cfg, query_name);
        double lam = lambda >= 0 ? lambda : cfg.trainer.lambda;
        SigmaResult result = sigma(db, query);
        SigmaSystem sys = build_sigma_system(result.payload, result.spec);
        RidgeModel model = train_ridge_gd(sys, lam, gd_params(cfg.trainer, tol));
        std::string body = ridge_model_json(model, db).dump(2) + "\n";
        write_text_file(out_path, body);
        out << body;
        return 0;
    }

    if (cart_cmd->parsed()) {
        Catalog db = build_catalog(cfg, /*with_data=*/true);
        const QuerySpec &query = query_or_throw(cfg, query_name);
        if (!query.response) throw Error(ErrorKind::Config, "cart needs a query with a response");
        CartParams params;
        params.max_depth = max_depth >= 0 ? max_depth : cfg.trainer.max_depth;
        params.min_leaf = min_leaf >= 1 ? min_leaf : cfg.trainer.min_leaf;
        params.n_thresholds = n_thresholds >= 1 ? n_thresholds : cfg.trainer.n_thresholds;
        DecisionTree tree = train_cart(db, query, *query.response, params);
        std::string body = decision_tree_json(tree, db).dump(2) + "\n";
        write_text_file(out_path, body);
        out << body;
        return 0;
    }

    if (chow_cmd->parsed()) {
        Catalog db = build_catalog(cfg, /*with_data=*/true);
        QuerySpec query = query_or_throw(cfg, query_name);
        auto attrs = split_list(attrs_arg);
        if (bins >= 2) {
            for (auto &a : attrs) {
                auto kind = db.attr_kind(a);
                if (kind && *kind == AttrKind::Continuous) {
                    std::string bin_name;
                    db = bin_attribute(db, a, bins, &bin_name);
                    a = bin_name;
                }
            }
        }
        ChowLiuTree tree = train_chow_liu(db, query, attrs);
        std::string body = chow_liu_json(tree).dump(2) + "\n";
        write_text_file(out_path, body);
        out << body;
        return 0;
    }

    if (maintain_cmd->parsed()) {
        Catalog db = build_catalog(cfg, /*with_data=*/true);
        const QuerySpec &query = query_or_throw(cfg, query_name);
        double lam = lambda >= 0 ? lambda : cfg.trainer.lambda;
        GdParams params = gd_params(cfg.trainer, tol);

        LiftSpec spec = make_lift_spec(query, db);
        MaterializedState<CovarianceRing> state(db, query, CovarianceRing{spec});
        SigmaSystem sys0 = build_sigma_system(state_sigma(state), spec);
        RidgeModel initial = train_ridge_gd(sys0, lam, params);

        std::vector<UpdateEvent> events = parse_update_stream(db, stream_path);
        std::ostringstream log;
        size_t i = 0;
        RidgeModel refreshed = maintain_ridge(
            state, initial, events, params,
            [&](const UpdateEvent &ev, const CovariancePayload &delta) {
                log << "event " << ++i << " " << (ev.sign > 0 ? "+" : "-") << ev.relation
                    << " root_delta " << to_debug_string(delta, spec, db) << "\n";
            });
        for (const auto &w : state.warnings()) err << "warning: " << w << "\n";
        if (!log_path.empty()) write_text_file(log_path, log.str());
        std::string body = ridge_model_json(refreshed, db).dump(2) + "\n";
        write_text_file(out_path, body);
        out << body;
        return 0;
    }

    throw Error(ErrorKind::Config, "no subcommand given");
}

}  // namespace

}  // namespace factorml
