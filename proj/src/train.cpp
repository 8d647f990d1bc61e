#include "fpv/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "fpv/kernels.hpp"

namespace fpv {

TrainConfig TrainConfig::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    TrainConfig cfg;
    cfg.lr = j.value("lr", cfg.lr);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.checkpoint_interval = j.value("checkpoint_interval", cfg.checkpoint_interval);
    cfg.hidden_dim = j.value("hidden_dim", cfg.hidden_dim);
    cfg.num_layers = j.value("num_layers", cfg.num_layers);
    cfg.pooling = j.value("pooling", cfg.pooling);
    cfg.seed = j.value("seed", cfg.seed);
    return cfg;
}

std::string TrainConfig::to_json() const {
    nlohmann::json j;
    j["lr"] = lr;
    j["batch_size"] = batch_size;
    j["epochs"] = epochs;
    j["checkpoint_interval"] = checkpoint_interval;
    j["hidden_dim"] = hidden_dim;
    j["num_layers"] = num_layers;
    j["pooling"] = pooling;
    j["seed"] = seed;
    return j.dump(2);
}

AdamState AdamState::like(const GcnModel& model) {
    AdamState state;
    for (const Tensor* t : model.parameters()) {
        state.m.emplace_back(t->rows, t->cols);
        state.v.emplace_back(t->rows, t->cols);
    }
    return state;
}

namespace {

constexpr char kMagic[8] = {'F', 'P', 'V', 'C', 'K', 'P', 'T', '1'};
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;

void write_raw(std::ostream& out, const Tensor& t) {
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(sizeof(double) * t.data.size()));
}

void read_raw(std::istream& in, Tensor& t) {
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(sizeof(double) * t.data.size()));
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
    nlohmann::json header;
    header["version"] = 1;
    header["epoch"] = epoch;
    header["hidden_dim"] = model.cfg.hidden_dim;
    header["num_layers"] = model.cfg.num_layers;
    header["pooling"] = to_string(model.cfg.pooling);
    header["tab_dim"] = model.cfg.tab_dim;
    header["adam_step"] = adam.step;
    header["shuffle_rng"] = shuffle_rng;
    header["x_mean"] = x_scaler.mean;
    header["x_sd"] = x_scaler.sd;
    header["y_mean"] = y_mean;
    header["y_sd"] = y_sd;
    auto names = model.parameter_names();
    auto params = model.parameters();
    auto shapes = nlohmann::json::array();
    for (size_t i = 0; i < params.size(); ++i)
        shapes.push_back({{"name", names[i]}, {"rows", params[i]->rows}, {"cols", params[i]->cols}});
    header["params"] = std::move(shapes);
    std::string header_text = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("FileWriteError", "cannot write checkpoint " + path);
    out.write(kMagic, sizeof(kMagic));
    std::uint64_t len = header_text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(header_text.data(), static_cast<std::streamsize>(len));
    for (const Tensor* t : params) write_raw(out, *t);
    for (const Tensor& t : adam.m) write_raw(out, t);
    for (const Tensor& t : adam.v) write_raw(out, t);
    if (!out) throw Error("FileWriteError", "short write on checkpoint " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("FileNotFound", "cannot open checkpoint " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw Error("BadCheckpoint", path + " is not a checkpoint file");
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string header_text(len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(len));
    nlohmann::json header = nlohmann::json::parse(header_text);

    Checkpoint ckpt;
    ckpt.epoch = header.at("epoch").get<int>();
    ckpt.model.cfg.hidden_dim = header.at("hidden_dim").get<int>();
    ckpt.model.cfg.num_layers = header.at("num_layers").get<int>();
    ckpt.model.cfg.pooling = parse_pooling(header.at("pooling").get<std::string>());
    ckpt.model.cfg.tab_dim = header.at("tab_dim").get<int>();
    ckpt.model.init(0);  // shapes only; bytes overwritten below
    ckpt.adam = AdamState::like(ckpt.model);
    ckpt.adam.step = header.at("adam_step").get<long>();
    ckpt.shuffle_rng = header.at("shuffle_rng").get<std::string>();
    for (int c = 0; c < kNumContinuous; ++c) {
        ckpt.x_scaler.mean[c] = header.at("x_mean").at(c).get<double>();
        ckpt.x_scaler.sd[c] = header.at("x_sd").at(c).get<double>();
    }
    ckpt.y_mean = header.at("y_mean").get<double>();
    ckpt.y_sd = header.at("y_sd").get<double>();

    auto params = ckpt.model.parameters();
    const auto& shapes = header.at("params");
    if (shapes.size() != params.size())
        throw Error("BadCheckpoint", "parameter count mismatch in " + path);
    for (size_t i = 0; i < params.size(); ++i) {
        if (shapes[i].at("rows").get<int>() != params[i]->rows ||
            shapes[i].at("cols").get<int>() != params[i]->cols)
            throw Error("BadCheckpoint", "parameter shape mismatch in " + path);
    }
    for (Tensor* t : params) read_raw(in, *t);
    for (Tensor& t : ckpt.adam.m) read_raw(in, t);
    for (Tensor& t : ckpt.adam.v) read_raw(in, t);
    if (!in) throw Error("BadCheckpoint", "truncated checkpoint " + path);
    return ckpt;
}

namespace {

struct PreparedData {
    std::vector<const AccessGraph*> graphs;
    std::vector<std::vector<double>> tab_rows;  // z-scored
    std::vector<double> y_z;
};

PreparedData prepare(const Dataset& ds, const Scaler& scaler, double y_mean, double y_sd) {
    PreparedData data;
    data.graphs.reserve(ds.size());
    data.tab_rows.reserve(ds.size());
    data.y_z.reserve(ds.size());
    for (size_t i = 0; i < ds.size(); ++i) {
        data.graphs.push_back(&ds.graphs[i]);
        data.tab_rows.push_back(encode_features(ds.records[i], &scaler));
        data.y_z.push_back((ds.records[i].rent - y_mean) / y_sd);
    }
    return data;
}

std::string serialize_rng(const std::mt19937_64& rng) {
    std::ostringstream out;
    out << rng;
    return out.str();
}

std::mt19937_64 deserialize_rng(const std::string& state) {
    std::mt19937_64 rng;
    std::istringstream in(state);
    in >> rng;
    if (!in) throw Error("BadCheckpoint", "cannot restore RNG state");
    return rng;
}

Checkpoint snapshot(int epoch, const GcnModel& model, const AdamState& adam,
                    const std::mt19937_64& rng, const Scaler& scaler, double y_mean, double y_sd) {
    Checkpoint ckpt;
    ckpt.epoch = epoch;
    ckpt.model = model;
    ckpt.adam = adam;
    ckpt.shuffle_rng = serialize_rng(rng);
    ckpt.x_scaler = scaler;
    ckpt.y_mean = y_mean;
    ckpt.y_sd = y_sd;
    return ckpt;
}

TrainResult run_epochs(GcnModel& model, AdamState& adam, std::mt19937_64& rng, int first_epoch,
                       const Dataset& ds, const TrainConfig& cfg, const Scaler& scaler,
                       double y_mean, double y_sd,
                       const std::function<void(const Checkpoint&)>& on_checkpoint) {
    PreparedData data = prepare(ds, scaler, y_mean, y_sd);
    const int n = static_cast<int>(ds.size());
    const int batch_size = std::max(1, cfg.batch_size);

    TrainResult result;
    std::vector<int> order(n);

    Tape tape;
    std::vector<double> seed;
    for (int epoch = first_epoch; epoch <= cfg.epochs; ++epoch) {
        // Shuffle from identity each epoch so the permutation is a pure
        // function of the RNG state, which checkpoints capture.
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        double sse = 0.0;
        for (int start = 0; start < n; start += batch_size) {
            int stop = std::min(n, start + batch_size);
            int bsz = stop - start;
            std::vector<const AccessGraph*> graphs(bsz);
            std::vector<std::vector<double>> tabs(bsz);
            std::vector<double> targets(bsz);
            for (int i = 0; i < bsz; ++i) {
                int rec = order[start + i];
                graphs[i] = data.graphs[rec];
                tabs[i] = data.tab_rows[rec];
                targets[i] = data.y_z[rec];
            }
            GraphBatch batch = GraphBatch::build(graphs, &tabs);
            tape.reset();
            JointNodes nodes = joint_forward(tape, model, batch, false, true);

            auto pred = tape.value(nodes.pred);
            seed.resize(bsz);
            for (int i = 0; i < bsz; ++i) {
                double r = pred[i] - targets[i];
                sse += r * r;
                seed[i] = 2.0 * r / bsz;
            }
            tape.backward(nodes.pred, seed);

            adam.step++;
            double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(adam.step));
            double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(adam.step));
            auto params = model.parameters();
            for (size_t p = 0; p < params.size(); ++p) {
                auto grad = tape.grad(nodes.param_leaves[p]);
                kernels::active().adam_step(params[p]->size(), params[p]->ptr(),
                                            adam.m[p].ptr(), adam.v[p].ptr(), grad.data(), cfg.lr,
                                            kBeta1, kBeta2, kEps, bc1, bc2);
            }
        }
        if (!std::isfinite(sse))
            throw Error("TrainingDiverged",
                        "non-finite loss at epoch " + std::to_string(epoch));
        double rmse_yen = std::sqrt(sse / n) * y_sd;
        result.log.push_back({epoch, rmse_yen});

        bool at_interval = cfg.checkpoint_interval > 0 && epoch % cfg.checkpoint_interval == 0;
        if (at_interval || epoch == cfg.epochs) {
            Checkpoint ckpt = snapshot(epoch, model, adam, rng, scaler, y_mean, y_sd);
            if (on_checkpoint) on_checkpoint(ckpt);
            if (epoch == cfg.epochs) result.final = std::move(ckpt);
        }
    }
    if (cfg.epochs < first_epoch)
        result.final = snapshot(first_epoch - 1, model, adam, rng, scaler, y_mean, y_sd);
    return result;
}

}  // namespace

TrainResult train(const Dataset& ds, const TrainConfig& cfg,
                  const std::function<void(const Checkpoint&)>& on_checkpoint) {
    if (ds.size() == 0) throw Error("EmptyDataset", "cannot train on an empty dataset");

    Scaler scaler = Scaler::fit(ds.records);
    double y_mean = 0.0;
    for (const auto& r : ds.records) y_mean += r.rent;
    y_mean /= static_cast<double>(ds.size());
    double y_var = 0.0;
    for (const auto& r : ds.records) y_var += (r.rent - y_mean) * (r.rent - y_mean);
    double y_sd = std::sqrt(y_var / static_cast<double>(ds.size()));
    if (y_sd == 0.0) y_sd = 1.0;

    GcnModel model;
    model.cfg.hidden_dim = cfg.hidden_dim;
    model.cfg.num_layers = cfg.num_layers;
    model.cfg.pooling = parse_pooling(cfg.pooling);
    model.cfg.tab_dim = kNumContinuous + kNumStructures;
    model.init(cfg.seed);
    AdamState adam = AdamState::like(model);
    std::mt19937_64 rng(cfg.seed ^ 0xD1B54A32D192ED03ull);

    return run_epochs(model, adam, rng, 1, ds, cfg, scaler, y_mean, y_sd, on_checkpoint);
}

TrainResult resume(const Checkpoint& from, const Dataset& ds, const TrainConfig& cfg,
                   const std::function<void(const Checkpoint&)>& on_checkpoint) {
    GcnModel model = from.model;
    AdamState adam = from.adam;
    std::mt19937_64 rng = deserialize_rng(from.shuffle_rng);
    return run_epochs(model, adam, rng, from.epoch + 1, ds, cfg, from.x_scaler, from.y_mean,
                      from.y_sd, on_checkpoint);
}

}  // namespace fpv
