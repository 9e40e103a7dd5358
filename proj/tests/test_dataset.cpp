#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "dregn/dataset.hpp"

using namespace dregn;
namespace fs = std::filesystem;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    auto path = (fs::temp_directory_path() / name).string();
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("adjacency-text read-back") {
    auto path = write_temp("ds_basic.txt", "0 1 2\n1 0\n");
    auto ds = load_interactions(path, LogFormat::adjacency_text);
    CHECK(ds.num_users == 2);
    CHECK(ds.num_items == 3);
    CHECK(ds.positives[0] == std::vector<int>{1, 2});
    CHECK(ds.positives[1] == std::vector<int>{0});
    CHECK(ds.item_popularity[0] == 1);
    CHECK(ds.item_popularity[1] == 1);
    CHECK(ds.user_prior[0] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("empty file") {
    auto path = write_temp("ds_empty.txt", "");
    auto ds = load_interactions(path, LogFormat::adjacency_text);
    CHECK(ds.num_users == 0);
    CHECK(ds.num_items == 0);
}

TEST_CASE("duplicates collapse and id gaps are kept") {
    auto path = write_temp("ds_dup.txt", "0 5 5 5\n3 1\n");
    auto ds = load_interactions(path, LogFormat::adjacency_text);
    CHECK(ds.num_users == 4);   // max id + 1, gap users retained
    CHECK(ds.num_items == 6);
    CHECK(ds.positives[0] == std::vector<int>{5});
    CHECK(ds.positives[1].empty());  // flagged empty, not dropped
    CHECK(ds.eligible_users() == std::vector<int>{0, 3});
}

TEST_CASE("malformed line reports line number") {
    auto path = write_temp("ds_bad.txt", "0 1\n1 x\n");
    CHECK_THROWS_WITH_AS(load_interactions(path, LogFormat::adjacency_text),
                         doctest::Contains("line 2"), std::runtime_error);
}

TEST_CASE("triple-csv with header") {
    auto path = write_temp("ds_csv.txt", "user,item\n0,1\n0,2\n1,0\n");
    auto ds = load_interactions(path, LogFormat::triple_csv);
    CHECK(ds.num_users == 2);
    CHECK(ds.positives[0] == std::vector<int>{1, 2});
}

TEST_CASE("split_holdout moves ceil(fraction*n) per user") {
    auto path = write_temp("ds_split.txt", "0 0 1 2 3 4 5 6 7 8 9\n1 0\n");
    auto ds = load_interactions(path, LogFormat::adjacency_text);
    split_holdout(ds, 0.1, 42);
    CHECK(ds.positives[0].size() == 9);
    CHECK(ds.val_positives[0].size() == 1);
    // single-positive user keeps it in train
    CHECK(ds.positives[1] == std::vector<int>{0});
    CHECK(ds.val_positives[1].empty());

    SUBCASE("determinism") {
        auto ds2 = load_interactions(path, LogFormat::adjacency_text);
        split_holdout(ds2, 0.1, 42);
        CHECK(ds2.positives == ds.positives);
        CHECK(ds2.val_positives == ds.val_positives);
    }
    SUBCASE("fraction zero is a no-op") {
        auto ds3 = load_interactions(path, LogFormat::adjacency_text);
        split_holdout(ds3, 0.0, 42);
        CHECK(ds3.positives[0].size() == 10);
        CHECK(ds3.val_positives[0].empty());
    }
    SUBCASE("splits are disjoint per user") {
        for (std::size_t u = 0; u < ds.num_users; ++u)
            for (int i : ds.val_positives[u]) CHECK_FALSE(ds.has_positive(static_cast<int>(u), i));
    }
}

TEST_CASE("stats density") {
    auto path = write_temp("ds_stats.txt", "0 1\n1 0\n");
    auto ds = load_interactions(path, LogFormat::adjacency_text);
    auto s = stats(ds);
    CHECK(s.interactions == 2);
    CHECK(s.density == doctest::Approx(0.5));

    auto path2 = write_temp("ds_stats2.txt", "0 1\n1 1\n");  // 2 users x 2 items, but 1 item used
    auto ds2 = load_interactions(path2, LogFormat::adjacency_text);
    CHECK(stats(ds2).density == doctest::Approx(2.0 / 4.0));
}

TEST_CASE("write-then-load round trip") {
    std::mt19937_64 rng(7);
    InteractionDataset ds;
    ds.num_users = 20;
    ds.num_items = 15;
    ds.positives.assign(20, {});
    ds.val_positives.assign(20, {});
    ds.test_positives.assign(20, {});
    for (std::size_t u = 0; u < 20; ++u) {
        std::uniform_int_distribution<int> d(0, 14);
        for (int k = 0; k < 5; ++k) ds.positives[u].push_back(d(rng));
        std::sort(ds.positives[u].begin(), ds.positives[u].end());
        ds.positives[u].erase(std::unique(ds.positives[u].begin(), ds.positives[u].end()),
                              ds.positives[u].end());
    }
    recompute_derived(ds);
    auto path = (fs::temp_directory_path() / "ds_roundtrip.txt").string();
    write_adjacency(ds, Split::train, path);
    auto loaded = load_interactions(path, LogFormat::adjacency_text);
    CHECK(loaded.positives == ds.positives);
    CHECK(loaded.item_popularity == ds.item_popularity);
}

TEST_CASE("popularity and prior invariants") {
    auto path = write_temp("ds_inv.txt", "0 1 2 3\n1 2 3\n2 3\n");
    auto ds = load_interactions(path, LogFormat::adjacency_text);
    auto total = std::accumulate(ds.item_popularity.begin(), ds.item_popularity.end(),
                                 std::int64_t{0});
    CHECK(total == ds.train_interactions());
    for (std::size_t u = 0; u < ds.num_users; ++u)
        CHECK(ds.user_prior[static_cast<Eigen::Index>(u)] * static_cast<double>(ds.num_items) ==
              doctest::Approx(static_cast<double>(ds.positives[u].size())).epsilon(1e-15));
}

TEST_CASE("compact_ids densifies") {
    auto path = write_temp("ds_compact.txt", "0 5\n7 9\n");
    auto ds = load_interactions(path, LogFormat::adjacency_text);
    CHECK(ds.num_users == 8);
    compact_ids(ds);
    CHECK(ds.num_users == 2);
    CHECK(ds.num_items == 2);
    CHECK(ds.positives[0] == std::vector<int>{0});
    CHECK(ds.positives[1] == std::vector<int>{1});
}

TEST_CASE("load_dataset_dir merges test split") {
    auto dir = fs::temp_directory_path() / "ds_dir";
    fs::create_directories(dir);
    {
        std::ofstream(dir / "train.txt") << "0 1 2\n1 0\n";
        std::ofstream(dir / "test.txt") << "0 3\n";
    }
    auto ds = load_dataset_dir(dir.string());
    CHECK(ds.num_items == 4);
    CHECK(ds.test_positives[0] == std::vector<int>{3});
    CHECK(ds.positives[0] == std::vector<int>{1, 2});
}
