#include "dregn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace dregn {

namespace {

void sort_unique(std::vector<int>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

std::vector<std::vector<int>>& split_of(InteractionDataset& ds, Split s) {
    switch (s) {
        case Split::train: return ds.positives;
        case Split::validation: return ds.val_positives;
        default: return ds.test_positives;
    }
}

}  // namespace

std::int64_t InteractionDataset::train_interactions() const {
    std::int64_t n = 0;
    for (const auto& p : positives) n += static_cast<std::int64_t>(p.size());
    return n;
}

double InteractionDataset::density() const {
    if (num_users == 0 || num_items == 0) return 0.0;
    return static_cast<double>(train_interactions()) /
           (static_cast<double>(num_users) * static_cast<double>(num_items));
}

std::vector<int> InteractionDataset::eligible_users() const {
    std::vector<int> out;
    for (std::size_t u = 0; u < positives.size(); ++u)
        if (!positives[u].empty()) out.push_back(static_cast<int>(u));
    return out;
}

bool InteractionDataset::has_positive(int user, int item) const {
    const auto& p = positives[static_cast<std::size_t>(user)];
    return std::binary_search(p.begin(), p.end(), item);
}

void recompute_derived(InteractionDataset& ds) {
    ds.val_positives.resize(ds.num_users);
    ds.test_positives.resize(ds.num_users);
    ds.item_popularity.assign(ds.num_items, 0);
    ds.user_prior = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ds.num_users));
    for (std::size_t u = 0; u < ds.num_users; ++u) {
        for (int i : ds.positives[u]) ds.item_popularity[static_cast<std::size_t>(i)]++;
        if (ds.num_items > 0)
            ds.user_prior[static_cast<Eigen::Index>(u)] =
                static_cast<double>(ds.positives[u].size()) / static_cast<double>(ds.num_items);
    }
}

namespace {

struct RawPairs {
    std::vector<std::pair<int, int>> pairs;
    int max_user = -1;
    int max_item = -1;

    void add(int u, int i, std::size_t line_no) {
        if (u < 0 || i < 0)
            throw std::runtime_error("negative id at line " + std::to_string(line_no));
        pairs.emplace_back(u, i);
        max_user = std::max(max_user, u);
        max_item = std::max(max_item, i);
    }
};

bool parse_int(const std::string& tok, int& out) {
    if (tok.empty()) return false;
    std::size_t pos = 0;
    try {
        long v = std::stol(tok, &pos);
        if (pos != tok.size()) return false;
        out = static_cast<int>(v);
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

}  // namespace

InteractionDataset load_interactions(const std::string& path, LogFormat format) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    RawPairs raw;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (format == LogFormat::adjacency_text) {
            std::istringstream ss(line);
            std::string tok;
            int user = -1;
            bool first = true;
            while (ss >> tok) {
                int v;
                if (!parse_int(tok, v))
                    throw std::runtime_error("malformed token '" + tok + "' at line " +
                                             std::to_string(line_no));
                if (first) {
                    user = v;
                    first = false;
                    // a lone user id still defines the user
                    raw.max_user = std::max(raw.max_user, user);
                    if (user < 0)
                        throw std::runtime_error("negative id at line " + std::to_string(line_no));
                } else {
                    raw.add(user, v, line_no);
                }
            }
        } else {
            // triple-csv: "user,item", header optional
            std::string a = line, b;
            auto comma = a.find(',');
            if (comma == std::string::npos)
                throw std::runtime_error("missing comma at line " + std::to_string(line_no));
            b = a.substr(comma + 1);
            a = a.substr(0, comma);
            // strip whitespace / CR
            auto strip = [](std::string& s) {
                while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t'))
                    s.pop_back();
                std::size_t k = s.find_first_not_of(" \t");
                if (k != std::string::npos) s = s.substr(k);
            };
            strip(a);
            strip(b);
            int u, i;
            if (!parse_int(a, u) || !parse_int(b, i)) {
                if (line_no == 1) continue;  // header row
                throw std::runtime_error("malformed row at line " + std::to_string(line_no));
            }
            raw.add(u, i, line_no);
        }
    }

    InteractionDataset ds;
    ds.num_users = static_cast<std::size_t>(raw.max_user + 1);
    ds.num_items = static_cast<std::size_t>(raw.max_item + 1);
    ds.positives.assign(ds.num_users, {});
    ds.val_positives.assign(ds.num_users, {});
    ds.test_positives.assign(ds.num_users, {});
    for (auto [u, i] : raw.pairs) ds.positives[static_cast<std::size_t>(u)].push_back(i);
    for (auto& p : ds.positives) sort_unique(p);
    recompute_derived(ds);
    return ds;
}

InteractionDataset load_dataset_dir(const std::string& dir) {
    InteractionDataset ds = load_interactions(dir + "/train.txt", LogFormat::adjacency_text);
    auto merge_split = [&ds](const std::string& path, Split target) {
        std::ifstream probe(path);
        if (!probe) return;
        probe.close();
        InteractionDataset other = load_interactions(path, LogFormat::adjacency_text);
        std::size_t nu = std::max(ds.num_users, other.num_users);
        std::size_t ni = std::max(ds.num_items, other.num_items);
        ds.num_users = nu;
        ds.num_items = ni;
        ds.positives.resize(nu);
        ds.val_positives.resize(nu);
        ds.test_positives.resize(nu);
        for (std::size_t u = 0; u < other.num_users; ++u) {
            auto& dst = (target == Split::validation) ? ds.val_positives[u] : ds.test_positives[u];
            dst = other.positives[u];
        }
    };
    merge_split(dir + "/val.txt", Split::validation);
    merge_split(dir + "/test.txt", Split::test);
    recompute_derived(ds);
    return ds;
}

void write_adjacency(const InteractionDataset& ds, Split split, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    const auto& sets = (split == Split::train)        ? ds.positives
                       : (split == Split::validation) ? ds.val_positives
                                                      : ds.test_positives;
    for (std::size_t u = 0; u < sets.size(); ++u) {
        if (sets[u].empty()) continue;
        out << u;
        for (int i : sets[u]) out << ' ' << i;
        out << '\n';
    }
}

void split_holdout(InteractionDataset& ds, double val_fraction, std::uint64_t seed, Split target) {
    if (val_fraction < 0.0 || val_fraction >= 1.0)
        throw std::invalid_argument("val_fraction must be in [0,1)");
    std::mt19937_64 rng(seed);
    auto& dst_all = split_of(ds, target);
    for (std::size_t u = 0; u < ds.num_users; ++u) {
        auto& pos = ds.positives[u];
        if (pos.size() <= 1) continue;
        auto k = static_cast<std::size_t>(
            std::ceil(val_fraction * static_cast<double>(pos.size())));
        if (k == 0) continue;
        k = std::min(k, pos.size() - 1);
        std::vector<int> shuffled = pos;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        std::vector<int> moved(shuffled.begin(), shuffled.begin() + static_cast<long>(k));
        sort_unique(moved);
        std::vector<int> kept;
        std::set_difference(pos.begin(), pos.end(), moved.begin(), moved.end(),
                            std::back_inserter(kept));
        pos = std::move(kept);
        auto& dst = dst_all[u];
        dst.insert(dst.end(), moved.begin(), moved.end());
        sort_unique(dst);
    }
    recompute_derived(ds);
}

void compact_ids(InteractionDataset& ds) {
    std::vector<int> user_map(ds.num_users, -1), item_map(ds.num_items, -1);
    int nu = 0, ni = 0;
    auto touch = [&](const std::vector<std::vector<int>>& sets) {
        for (std::size_t u = 0; u < sets.size(); ++u) {
            if (sets[u].empty()) continue;
            if (user_map[u] < 0) user_map[u] = nu++;
            for (int i : sets[u])
                if (item_map[static_cast<std::size_t>(i)] < 0)
                    item_map[static_cast<std::size_t>(i)] = ni++;
        }
    };
    touch(ds.positives);
    touch(ds.val_positives);
    touch(ds.test_positives);

    auto remap = [&](std::vector<std::vector<int>>& sets) {
        std::vector<std::vector<int>> out(static_cast<std::size_t>(nu));
        for (std::size_t u = 0; u < sets.size(); ++u) {
            if (sets[u].empty()) continue;
            auto& dst = out[static_cast<std::size_t>(user_map[u])];
            for (int i : sets[u]) dst.push_back(item_map[static_cast<std::size_t>(i)]);
            sort_unique(dst);
        }
        sets = std::move(out);
    };
    remap(ds.positives);
    remap(ds.val_positives);
    remap(ds.test_positives);
    ds.num_users = static_cast<std::size_t>(nu);
    ds.num_items = static_cast<std::size_t>(ni);
    recompute_derived(ds);
}

DatasetStats stats(const InteractionDataset& ds) {
    DatasetStats s;
    s.num_users = ds.num_users;
    s.num_items = ds.num_items;
    s.interactions = ds.train_interactions();
    s.density = ds.density();
    return s;
}

}  // namespace dregn
