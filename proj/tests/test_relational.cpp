#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "factorml/csv.hpp"
#include "factorml/join_tree.hpp"
#include "support/test_support.hpp"

using namespace factorml;
using factorml::testing::TempDir;

namespace {

Catalog two_col_catalog(const std::string &rel, AttrKind ka, AttrKind kb) {
    Catalog db;
    db.register_schema(rel, {{"a", ka}, {"b", kb}});
    return db;
}

}  // namespace

TEST_CASE("load_csv: header-only file yields an empty relation") {
    TempDir tmp;
    Catalog db = two_col_catalog("R", AttrKind::Continuous, AttrKind::Continuous);
    auto path = tmp.file("r.csv", "a,b\n");
    const Relation &rel = load_csv(db, "R", path);
    CHECK(rel.data.empty());
    CHECK(rel.total_multiplicity() == 0);
}

TEST_CASE("load_csv: duplicate rows accumulate multiplicity") {
    TempDir tmp;
    Catalog db = two_col_catalog("R", AttrKind::Continuous, AttrKind::Continuous);
    auto path = tmp.file("r.csv", "a,b\n1,2\n1,2\n3,4\n");
    const Relation &rel = load_csv(db, "R", path);
    CHECK(rel.data.size() == 2);
    CHECK(rel.data.at({1, 2}) == 2);
    CHECK(rel.data.at({3, 4}) == 1);
    CHECK(rel.total_multiplicity() == 3);  // sum of multiplicities = row count
}

TEST_CASE("load_csv: dictionary codes follow first occurrence") {
    TempDir tmp;
    Catalog db;
    db.register_schema("R", {{"g", AttrKind::Categorical}});
    load_csv(db, "R", tmp.file("r.csv", "g\nx\nx\ny\n"));
    const Dictionary &dict = db.dictionary("g");
    CHECK(dict.size() == 2);
    CHECK(*dict.lookup("x") == 0);
    CHECK(*dict.lookup("y") == 1);
    CHECK(dict.decode(0) == "x");
    CHECK(dict.decode(1) == "y");
}

TEST_CASE("load_csv: malformed rows report the line number") {
    TempDir tmp;
    Catalog db = two_col_catalog("R", AttrKind::Continuous, AttrKind::Continuous);

    SUBCASE("wrong arity") {
        auto path = tmp.file("r.csv", "a,b\n1,2\n3\n");
        CHECK_THROWS_WITH_AS(load_csv(db, "R", path),
                             doctest::Contains(":3"), Error);
    }
    SUBCASE("unparseable float") {
        auto path = tmp.file("r.csv", "a,b\n1,2\nfoo,4\n");
        try {
            load_csv(db, "R", path);
            FAIL("expected ingestion error");
        } catch (const Error &e) {
            CHECK(e.kind() == ErrorKind::Ingestion);
            CHECK(std::string(e.what()).find(":3") != std::string::npos);
        }
    }
    SUBCASE("header mismatch") {
        auto path = tmp.file("r.csv", "a,c\n1,2\n");
        CHECK_THROWS_AS(load_csv(db, "R", path), Error);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_csv(db, "R", tmp.path() + "/absent.csv"), Error);
    }
}

TEST_CASE("catalog rejects conflicting attribute kinds across relations") {
    Catalog db;
    db.register_schema("R", {{"a", AttrKind::Continuous}});
    CHECK_THROWS_AS(db.register_schema("S", {{"a", AttrKind::Categorical}}), Error);
}

TEST_CASE("parse_update_stream: signed events in file order") {
    TempDir tmp;
    Catalog db = two_col_catalog("S", AttrKind::Continuous, AttrKind::Continuous);
    auto path = tmp.file("updates.txt", "+,S,4,8\n-,S,4,8\n");
    auto events = parse_update_stream(db, path);
    REQUIRE(events.size() == 2);
    CHECK(events[0] == UpdateEvent{+1, "S", {4, 8}});
    CHECK(events[1] == UpdateEvent{-1, "S", {4, 8}});
}

TEST_CASE("parse_update_stream: arity mismatch names the line") {
    TempDir tmp;
    Catalog db = two_col_catalog("S", AttrKind::Continuous, AttrKind::Continuous);
    auto path = tmp.file("updates.txt", "+,S,4,8\n+,S,4\n");
    try {
        parse_update_stream(db, path);
        FAIL("expected ingestion error");
    } catch (const Error &e) {
        CHECK(e.kind() == ErrorKind::Ingestion);
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
}

TEST_CASE("parse_update_stream: unknown relation and bad sign rejected") {
    TempDir tmp;
    Catalog db = two_col_catalog("S", AttrKind::Continuous, AttrKind::Continuous);
    CHECK_THROWS_AS(parse_update_stream(db, tmp.file("u1.txt", "+,T,1,2\n")), Error);
    CHECK_THROWS_AS(parse_update_stream(db, tmp.file("u2.txt", "*,S,1,2\n")), Error);
}

TEST_CASE("parse_update_stream: unseen categories extend the dictionary") {
    TempDir tmp;
    Catalog db;
    db.register_schema("S", {{"g", AttrKind::Categorical}});
    load_csv(db, "S", tmp.file("s.csv", "g\nx\n"));
    auto events = parse_update_stream(db, tmp.file("u.txt", "+,S,z\n"));
    CHECK(db.dictionary("g").size() == 2);
    CHECK(events[0].tuple[0] == 1.0);
}

TEST_CASE("update stream round-trips through serialization") {
    TempDir tmp;
    Catalog db;
    db.register_schema("S", {{"g", AttrKind::Categorical}, {"x", AttrKind::Continuous}});
    auto path = tmp.file("u.txt", "+,S,red,0.25\n-,S,blue,3.75\n+,S,red,1e-3\n");
    auto events = parse_update_stream(db, path);
    std::string text = serialize_update_stream(db, events);
    auto reparsed = parse_update_stream(db, tmp.file("u2.txt", text));
    CHECK(events == reparsed);
    CHECK(serialize_update_stream(db, reparsed) == text);
}

TEST_CASE("gyo_join_tree: two-relation path roots at R with edge label {B}") {
    Catalog db;
    db.register_schema("R", {{"A", AttrKind::Continuous}, {"B", AttrKind::Continuous}});
    db.register_schema("S", {{"B", AttrKind::Continuous}, {"C", AttrKind::Continuous}});
    QuerySpec q;
    q.relations = {"R", "S"};
    q.features = {"A"};
    JoinTree tree = gyo_join_tree(q, db);
    REQUIRE(tree.nodes.size() == 2);
    CHECK(tree.nodes[tree.root].relation == "R");
    int child = tree.nodes[tree.root].children.at(0);
    CHECK(tree.nodes[child].relation == "S");
    CHECK(tree.nodes[child].edge_label == std::set<std::string>{"B"});
    CHECK(satisfies_running_intersection(tree, db));
}

TEST_CASE("gyo_join_tree: triangle query is rejected as cyclic") {
    Catalog db;
    db.register_schema("R", {{"A", AttrKind::Continuous}, {"B", AttrKind::Continuous}});
    db.register_schema("S", {{"B", AttrKind::Continuous}, {"C", AttrKind::Continuous}});
    db.register_schema("T", {{"C", AttrKind::Continuous}, {"A", AttrKind::Continuous}});
    QuerySpec q;
    q.relations = {"R", "S", "T"};
    q.features = {"A"};
    try {
        gyo_join_tree(q, db);
        FAIL("expected unsupported-query error");
    } catch (const Error &e) {
        CHECK(e.kind() == ErrorKind::UnsupportedQuery);
        // names the residual relations
        std::string msg = e.what();
        CHECK(msg.find("R") != std::string::npos);
        CHECK(msg.find("S") != std::string::npos);
        CHECK(msg.find("T") != std::string::npos);
    }
}

TEST_CASE("gyo_join_tree: single relation gives a one-node tree") {
    Catalog db;
    db.register_schema("R", {{"A", AttrKind::Continuous}, {"B", AttrKind::Continuous}});
    QuerySpec q;
    q.relations = {"R"};
    q.features = {"A"};
    JoinTree tree = gyo_join_tree(q, db);
    CHECK(tree.nodes.size() == 1);
    CHECK(tree.nodes[tree.root].children.empty());
    CHECK(tree.nodes[tree.root].edge_label.empty());
}

TEST_CASE("gyo_join_tree: four-relation chain roots at R1") {
    Catalog db;
    auto cont = [](const std::string &n) { return AttributeDecl{n, AttrKind::Continuous}; };
    db.register_schema("R1", {cont("A0"), cont("A1")});
    db.register_schema("R2", {cont("A1"), cont("A2")});
    db.register_schema("R3", {cont("A2"), cont("A3")});
    db.register_schema("R4", {cont("A3"), cont("A4")});
    QuerySpec q;
    q.relations = {"R1", "R2", "R3", "R4"};
    q.features = {"A0"};
    JoinTree tree = gyo_join_tree(q, db);
    CHECK(tree.nodes[tree.root].relation == "R1");
    CHECK(satisfies_running_intersection(tree, db));
    // chain: R1 -> R2 -> R3 -> R4
    int n = tree.root;
    std::vector<std::string> path;
    while (true) {
        path.push_back(tree.nodes[n].relation);
        if (tree.nodes[n].children.empty()) break;
        REQUIRE(tree.nodes[n].children.size() == 1);
        n = tree.nodes[n].children[0];
    }
    CHECK(path == std::vector<std::string>{"R1", "R2", "R3", "R4"});
}

TEST_CASE("gyo_join_tree satisfies running intersection on random acyclic schemas") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        auto rdb = factorml::testing::make_random_db(rng);
        JoinTree tree = gyo_join_tree(rdb.query, rdb.db);
        CHECK(satisfies_running_intersection(tree, rdb.db));
        CHECK(tree.nodes.size() == rdb.query.relations.size());
    }
}

TEST_CASE("validate_query rejects unknown attributes and response-as-feature") {
    Catalog db = two_col_catalog("R", AttrKind::Continuous, AttrKind::Continuous);
    QuerySpec q;
    q.relations = {"R"};
    q.features = {"missing"};
    CHECK_THROWS_AS(validate_query(q, db), Error);
    q.features = {"a"};
    q.response = "a";
    CHECK_THROWS_AS(validate_query(q, db), Error);
    q.response = "b";
    CHECK_NOTHROW(validate_query(q, db));
}

TEST_CASE("dictionary round-trips every ingested string") {
    TempDir tmp;
    Catalog db;
    db.register_schema("R", {{"g", AttrKind::Categorical}});
    load_csv(db, "R", tmp.file("r.csv", "g\nred\ngreen\nred\nblue\n"));
    const Dictionary &dict = db.dictionary("g");
    for (const auto &entry : dict.entries()) {
        auto code = dict.lookup(entry);
        REQUIRE(code.has_value());
        CHECK(dict.decode(*code) == entry);
    }
}

TEST_CASE("duplicate features are rejected") {
    Catalog db = two_col_catalog("R", AttrKind::Continuous, AttrKind::Continuous);
    QuerySpec q;
    q.relations = {"R"};
    q.features = {"a", "a"};
    CHECK_THROWS_AS(validate_query(q, db), Error);
}
