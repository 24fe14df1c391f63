#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "factorml/relation.hpp"

namespace factorml {

struct TrainerDefaults {
    double lambda = 1e-3;
    double tol = 1e-8;
    int max_iters = 50'000;
    int max_depth = 4;
    int64_t min_leaf = 2;
    int n_thresholds = 16;
    int bins = 8;
};

struct ProjectConfig {
    std::string base_dir;  // directory of the config file; data paths resolve against it
    std::string data_dir;
    struct RelationConfig {
        std::string name;
        std::string file;
        Schema schema;
    };
    std::vector<RelationConfig> relations;
    std::map<std::string, QuerySpec> queries;
    TrainerDefaults trainer;
};

ProjectConfig load_config(const std::string &path);

/// Registers all schemas; reads the CSV files too when with_data is set.
Catalog build_catalog(const ProjectConfig &config, bool with_data);

/// Returns a catalog extended with an equi-width binned categorical copy
/// (named `<attr>_bin`) of a continuous attribute, added to the single
/// relation owning it.
Catalog bin_attribute(const Catalog &db, const std::string &attr, int bins,
                      std::string *bin_name = nullptr);

/// Entry point behind the `factorml` binary; streams injected for tests.
/// Exit status: 0 success, 1 user error, 2 internal error.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace factorml
