#include "fpv/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace fpv {

namespace {

constexpr const char* kStructureNames[kNumStructures] = {"RC", "S",  "SRC", "LS", "ALC",
                                                         "W",  "PC", "O",   "HPC"};

const std::array<std::string, 10> kCsvColumns = {"id",         "rent",       "area",
                                                 "distance",   "f_building", "f_dwelling",
                                                 "land_price", "passenger",  "year",
                                                 "structure"};

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    fields.push_back(field);
    return fields;
}

std::optional<std::string> record_violation(const PropertyRecord& r) {
    if (!(r.rent > 0)) return "rent must be positive";
    if (!(r.area > 0)) return "area must be positive";
    if (r.year < 1900 || r.year > 2100) return "year outside [1900, 2100]";
    return std::nullopt;
}

}  // namespace

const char* to_string(Structure s) { return kStructureNames[static_cast<int>(s)]; }

std::optional<Structure> parse_structure(std::string_view code) {
    for (int i = 0; i < kNumStructures; ++i)
        if (code == kStructureNames[i]) return static_cast<Structure>(i);
    return std::nullopt;
}

const std::array<std::string, kNumContinuous>& continuous_column_names() {
    static const std::array<std::string, kNumContinuous> names = {
        "land_price", "area", "year", "f_building", "f_dwelling", "distance", "passenger"};
    return names;
}

std::vector<std::string> feature_column_names() {
    std::vector<std::string> names(continuous_column_names().begin(),
                                   continuous_column_names().end());
    for (int i = 0; i < kNumStructures; ++i)
        names.push_back(std::string("structure_") + kStructureNames[i]);
    return names;
}

namespace {

std::array<double, kNumContinuous> continuous_values(const PropertyRecord& r) {
    return {r.land_price, r.area, r.year, r.f_building, r.f_dwelling, r.distance, r.passenger};
}

}  // namespace

Scaler Scaler::fit(const std::vector<PropertyRecord>& records) {
    if (records.empty()) throw Error("EmptyDataset", "cannot fit a scaler on no records");
    Scaler s;
    for (const auto& r : records) {
        auto v = continuous_values(r);
        for (int c = 0; c < kNumContinuous; ++c) s.mean[c] += v[c];
    }
    for (int c = 0; c < kNumContinuous; ++c) s.mean[c] /= static_cast<double>(records.size());
    for (const auto& r : records) {
        auto v = continuous_values(r);
        for (int c = 0; c < kNumContinuous; ++c) {
            double d = v[c] - s.mean[c];
            s.sd[c] += d * d;
        }
    }
    for (int c = 0; c < kNumContinuous; ++c) {
        s.sd[c] = std::sqrt(s.sd[c] / static_cast<double>(records.size()));
        if (s.sd[c] == 0.0) s.sd[c] = 1.0;  // constant column: leave centered values at 0
    }
    return s;
}

std::vector<double> encode_features(const PropertyRecord& r, const Scaler* scaler) {
    std::vector<double> out;
    out.reserve(kNumContinuous + kNumStructures);
    auto v = continuous_values(r);
    for (int c = 0; c < kNumContinuous; ++c)
        out.push_back(scaler ? (v[c] - scaler->mean[c]) / scaler->sd[c] : v[c]);
    for (int i = 0; i < kNumStructures; ++i)
        out.push_back(static_cast<int>(r.structure) == i ? 1.0 : 0.0);
    return out;
}

std::vector<double> decode_continuous(const std::vector<double>& encoded, const Scaler& scaler) {
    std::vector<double> out(kNumContinuous);
    for (int c = 0; c < kNumContinuous; ++c) out[c] = encoded[c] * scaler.sd[c] + scaler.mean[c];
    return out;
}

std::vector<PropertyRecord> load_tabular(const std::string& path, LoadReport* report) {
    std::ifstream in(path);
    if (!in) throw Error("FileNotFound", "cannot open tabular file " + path);
    std::string line;
    if (!std::getline(in, line)) throw Error("EmptyFile", "tabular file " + path + " has no header");
    auto header = split_csv_line(line);
    std::array<int, 10> col{};
    for (size_t c = 0; c < kCsvColumns.size(); ++c) {
        auto it = std::find(header.begin(), header.end(), kCsvColumns[c]);
        if (it == header.end())
            throw Error("MissingColumn", "tabular file missing column '" + kCsvColumns[c] + "'");
        col[c] = static_cast<int>(it - header.begin());
    }

    LoadReport local;
    std::vector<PropertyRecord> records;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        local.rows_read++;
        auto fields = split_csv_line(line);
        auto drop = [&](const std::string& why) {
            local.dropped.push_back("line " + std::to_string(lineno) + ": " + why);
        };
        if (fields.size() < header.size()) {
            drop("expected " + std::to_string(header.size()) + " fields");
            continue;
        }
        PropertyRecord r;
        r.id = fields[col[0]];
        bool numeric_ok = true;
        auto num = [&](int c) {
            try {
                size_t pos = 0;
                double v = std::stod(fields[col[c]], &pos);
                if (pos != fields[col[c]].size()) numeric_ok = false;
                return v;
            } catch (...) {
                numeric_ok = false;
                return 0.0;
            }
        };
        r.rent = num(1);
        r.area = num(2);
        r.distance = num(3);
        r.f_building = num(4);
        r.f_dwelling = num(5);
        r.land_price = num(6);
        r.passenger = num(7);
        r.year = num(8);
        if (!numeric_ok) {
            drop("unparseable numeric field");
            continue;
        }
        auto st = parse_structure(fields[col[9]]);
        if (!st) {
            drop("structure '" + fields[col[9]] + "' unknown");
            continue;
        }
        r.structure = *st;
        if (auto why = record_violation(r)) {
            drop(*why);
            continue;
        }
        local.rows_kept++;
        records.push_back(std::move(r));
    }
    if (report) *report = std::move(local);
    return records;
}

void save_tabular(const std::string& path, const std::vector<PropertyRecord>& records) {
    std::ofstream out(path);
    if (!out) throw Error("FileWriteError", "cannot write tabular file " + path);
    for (size_t c = 0; c < kCsvColumns.size(); ++c) out << (c ? "," : "") << kCsvColumns[c];
    out << "\n";
    char buf[40];
    for (const auto& r : records) {
        out << r.id;
        for (double v : {r.rent, r.area, r.distance, r.f_building, r.f_dwelling, r.land_price,
                         r.passenger, r.year}) {
            std::snprintf(buf, sizeof(buf), "%.10g", v);
            out << "," << buf;
        }
        out << "," << to_string(r.structure) << "\n";
    }
}

Dataset join(const std::vector<AccessGraph>& graphs, const std::vector<PropertyRecord>& tabular,
             JoinReport* report, std::optional<double> max_rent) {
    std::unordered_map<std::string, const PropertyRecord*> by_id;
    for (const auto& r : tabular) {
        if (!by_id.emplace(r.id, &r).second)
            throw Error("DuplicateId", "duplicate tabular id " + r.id);
    }
    std::unordered_set<std::string> graph_ids;
    for (const auto& g : graphs) {
        if (!graph_ids.insert(g.id).second)
            throw Error("DuplicateId", "duplicate graph id " + g.id);
    }

    JoinReport local;
    Dataset ds;
    std::unordered_set<std::string> used;
    for (const auto& g : graphs) {
        auto it = by_id.find(g.id);
        if (it == by_id.end()) {
            local.unmatched_graphs++;
            continue;
        }
        if (max_rent && it->second->rent > *max_rent) {
            local.outlier_dropped++;
            used.insert(g.id);
            continue;
        }
        ds.graphs.push_back(g);
        ds.records.push_back(*it->second);
        used.insert(g.id);
        local.matched++;
    }
    for (const auto& r : tabular)
        if (!used.count(r.id)) local.unmatched_tabular++;
    if (report) *report = local;
    return ds;
}

std::vector<std::vector<int>> split_kfold(std::size_t n, int k, std::uint64_t seed) {
    if (k < 2) throw Error("BadFoldCount", "k-fold split needs k >= 2");
    if (static_cast<std::size_t>(k) > n)
        throw Error("BadFoldCount", "k exceeds dataset size");
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<int>> folds(k);
    for (std::size_t i = 0; i < n; ++i) folds[i % k].push_back(order[i]);
    for (auto& fold : folds) std::sort(fold.begin(), fold.end());
    return folds;
}

std::string folds_to_json(const Dataset& ds, const std::vector<std::vector<int>>& folds,
                          std::uint64_t seed) {
    nlohmann::json out;
    out["seed"] = seed;
    auto arr = nlohmann::json::array();
    for (const auto& fold : folds) {
        auto ids = nlohmann::json::array();
        for (int i : fold) ids.push_back(ds.records[i].id);
        arr.push_back(std::move(ids));
    }
    out["folds"] = std::move(arr);
    return out.dump(2);
}

std::vector<std::vector<int>> folds_from_json(const Dataset& ds, const std::string& json_text,
                                              std::uint64_t* seed_out) {
    nlohmann::json in = nlohmann::json::parse(json_text);
    if (seed_out) *seed_out = in.value("seed", 0ull);
    std::unordered_map<std::string, int> index;
    for (size_t i = 0; i < ds.records.size(); ++i) index[ds.records[i].id] = static_cast<int>(i);
    std::vector<std::vector<int>> folds;
    for (const auto& ids : in.at("folds")) {
        std::vector<int> fold;
        for (const auto& id : ids) {
            auto it = index.find(id.get<std::string>());
            if (it == index.end())
                throw Error("UnknownId", "fold manifest id not present in dataset");
            fold.push_back(it->second);
        }
        folds.push_back(std::move(fold));
    }
    return folds;
}

}  // namespace fpv
