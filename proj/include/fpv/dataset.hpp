#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "fpv/graph.hpp"

namespace fpv {

enum class Structure : std::uint8_t { RC, S, SRC, LS, ALC, W, PC, O, HPC };

inline constexpr int kNumStructures = 9;

const char* to_string(Structure s);
std::optional<Structure> parse_structure(std::string_view code);

/// Tabular attributes of one listing. `id` joins against AccessGraph.id.
struct PropertyRecord {
    std::string id;
    double rent = 0;        // Yen/month, without common expenses
    double area = 0;        // m^2
    double distance = 0;    // m to nearest station/bus stop
    double f_building = 0;  // building floor count
    double f_dwelling = 0;  // dwelling floor number
    double land_price = 0;  // Yen/m^2, zip-code average
    double passenger = 0;   // daily passengers at nearest station
    double year = 0;        // completion year
    Structure structure = Structure::RC;
};

/// Continuous feature block, in the fixed column order used everywhere.
inline constexpr int kNumContinuous = 7;
const std::array<std::string, kNumContinuous>& continuous_column_names();

/// Full feature column order: 7 continuous columns then 9 structure one-hots.
std::vector<std::string> feature_column_names();

/// Per-column mean/SD for the continuous block; one-hot columns untouched.
struct Scaler {
    std::array<double, kNumContinuous> mean{};
    std::array<double, kNumContinuous> sd{};

    static Scaler fit(const std::vector<PropertyRecord>& records);
};

/// Encodes [land_price, area, year, f_building, f_dwelling, distance,
/// passenger, structure one-hot x9]; continuous columns are z-scored when a
/// scaler is given.
std::vector<double> encode_features(const PropertyRecord& r, const Scaler* scaler = nullptr);

/// Inverse of encode_features on the continuous block (for round-trip checks).
std::vector<double> decode_continuous(const std::vector<double>& encoded, const Scaler& scaler);

struct LoadReport {
    std::size_t rows_read = 0;
    std::size_t rows_kept = 0;
    std::vector<std::string> dropped;  // "line 12: structure 'XX' unknown"
};

/// Loads the tabular CSV (columns: id, rent, area, distance, f_building,
/// f_dwelling, land_price, passenger, year, structure). Rows violating
/// record invariants are dropped and reported, not fatal.
/// Throws on missing columns or an unreadable file.
std::vector<PropertyRecord> load_tabular(const std::string& path, LoadReport* report = nullptr);

void save_tabular(const std::string& path, const std::vector<PropertyRecord>& records);

/// Graphs and tabular records joined 1:1 on id, index-aligned.
struct Dataset {
    std::vector<AccessGraph> graphs;
    std::vector<PropertyRecord> records;

    std::size_t size() const { return records.size(); }
};

struct JoinReport {
    std::size_t matched = 0;
    std::size_t unmatched_graphs = 0;
    std::size_t unmatched_tabular = 0;
    std::size_t outlier_dropped = 0;
};

/// Inner join on id. Order follows the graph corpus. Duplicate ids on either
/// side are an error (DuplicateId). `max_rent` optionally drops rent
/// outliers above the threshold (default: no filtering).
Dataset join(const std::vector<AccessGraph>& graphs,
             const std::vector<PropertyRecord>& tabular,
             JoinReport* report = nullptr,
             std::optional<double> max_rent = std::nullopt);

/// Seeded k-fold split: returns fold -> record indices. Folds partition
/// 0..n-1, sizes differ by at most one, deterministic given the seed.
std::vector<std::vector<int>> split_kfold(std::size_t n, int k, std::uint64_t seed);

/// Split manifest (seed + fold id lists) for exact reruns.
std::string folds_to_json(const Dataset& ds, const std::vector<std::vector<int>>& folds,
                          std::uint64_t seed);
std::vector<std::vector<int>> folds_from_json(const Dataset& ds, const std::string& json_text,
                                              std::uint64_t* seed_out = nullptr);

}  // namespace fpv
