#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fpv/dataset.hpp"

namespace fpv {

/// Synthetic corpus settings. The planted table maps motifs to rent deltas:
/// a bare label ("bl") pays per node of that type, a sorted label pair
/// ("ja-ja") per edge of that type. Tabular moments default to realistic
/// family-apartment values.
struct SynthConfig {
    int n_records = 2000;
    int n_templates = 60;
    std::uint64_t seed = 1;
    double noise_sd = 3000.0;
    std::map<std::string, double> planted = {{"bl", 6000.0}, {"ja-ja", -5000.0}};

    double area_mean = 65.2;
    double area_sd = 7.3;

    static SynthConfig from_json(const std::string& text);
    std::string to_json() const;
};

/// Per-record decomposition of the generated rent:
/// rent = tabular_contribution + graph_utility + N(0, noise_sd).
struct GroundTruth {
    std::vector<double> graph_utility;
    std::vector<double> tabular_contribution;
    std::map<std::string, double> planted;
    double noise_sd = 0.0;

    std::string to_json(const Dataset& ds) const;
};

/// Motif counts of one graph: node labels ("bl") and sorted edge label pairs
/// ("dk-ja"). Isomorphism-invariant.
std::map<std::string, int> motif_counts(const AccessGraph& g);

double planted_utility(const AccessGraph& g, const std::map<std::string, double>& planted);

/// Generates graphs from a seeded template grammar (entrance-hallway spine,
/// dk hub, three habitable rooms, water cluster, closet/balcony attachments)
/// with per-record node permutations, plus tabular rows with a known linear
/// rent model. Deterministic in cfg.seed; every graph passes validation.
std::pair<Dataset, GroundTruth> generate_corpus(const SynthConfig& cfg);

/// Scorecard comparing pipeline outputs against the generator's ground truth.
struct EffectScorecard {
    double sign_agreement = 0.0;  // planted motifs whose group mean matches in sign
    int motifs_checked = 0;
    double spearman = 0.0;  // rank correlation of true utility vs FPV over unique graphs
};

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

struct AnomResult;  // attribution.hpp

/// Sign agreement between planted motif deltas and their ANOM group means,
/// plus Spearman of true graph utility vs FPV over unique graphs.
EffectScorecard planted_effect_report(const std::map<std::string, double>& planted,
                                      const AnomResult& anom_result,
                                      const std::vector<double>& true_utility_unique,
                                      const std::vector<double>& fpv_unique);

}  // namespace fpv
