// vtirt command-line driver: simulate, train, infer, eval, grid, bench.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vtirt/evaluation.hpp"
#include "vtirt/io.hpp"
#include "vtirt/synthgen.hpp"
#include "vtirt/training.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace vtirt;

namespace {

enum Exit { kOk = 0, kUsage = 2, kData = 3, kNumerical = 4 };

struct Ingest {
    bool first_attempt_only = false;
    int min_interactions = 0;

    void add_to(CLI::App* app) {
        app->add_flag("--first-attempt-only", first_attempt_only, "Keep only the first attempt per (learner, item)");
        app->add_option("--min-interactions", min_interactions, "Drop learners with fewer interactions")
            ->check(CLI::NonNegativeNumber);
    }
    io::LoadOptions options() const { return {first_attempt_only, min_interactions}; }
};

struct FoldArgs {
    int folds = 0;
    int fold = -1;
    std::uint64_t seed = 0;

    void add_to(CLI::App* app) {
        app->add_option("--folds", folds, "Number of learner-level folds (>= 2)");
        app->add_option("--fold", fold, "Fold index in [0, folds)");
        app->add_option("--fold-seed", seed, "Seed of the fold assignment");
    }
    // Training uses the learners outside the fold, evaluation those inside.
    std::vector<InteractionRecord> apply(const std::vector<InteractionRecord>& records, bool in_fold) const {
        if (folds == 0 && fold < 0) {
            return records;
        }
        if (folds < 2 || fold < 0) {
            throw UsageError("--folds K (K >= 2) and --fold i must be given together");
        }
        return select_fold(records, folds, fold, seed, in_fold);
    }
};

std::vector<InteractionRecord> load(const std::string& path, const Ingest& ingest) {
    return io::load_dataset(path, ingest.options());
}

std::ofstream open_output(const fs::path& path, std::ios::openmode mode = std::ios::out) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, mode);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    return out;
}

Aggregation parse_aggregation(const std::string& s) {
    if (s == "native") {
        return Aggregation::native;
    }
    if (s == "lgm") {
        return Aggregation::lgm;
    }
    throw UsageError("aggregation must be 'native' or 'lgm'");
}

json optional_number(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

void warn_unknown(bool unknown) {
    if (unknown) {
        std::cerr << "warning: items outside the model vocabulary were scored with prior means (a=1, d=0)\n";
    }
}

// ---- simulate

struct SimulateArgs {
    std::string config;
    std::string out;
    bool force = false;
    std::optional<std::uint64_t> seed;
};

int run_simulate(const SimulateArgs& a) {
    io::ConfigFile cfg = a.config.empty() ? io::ConfigFile{} : io::load_config(a.config);
    if (a.seed) {
        cfg.synth.seed = *a.seed;
    }
    const fs::path dir(a.out);
    for (const char* name : {"dataset.jsonl", "items.json", "abilities.json"}) {
        if (fs::exists(dir / name) && !a.force) {
            throw UsageError((dir / name).string() + " exists; pass --force to overwrite");
        }
    }
    const SynthDataset data = simulate(cfg.synth);
    io::save_synthetic(dir, data);
    std::cerr << "wrote " << data.records.size() << " records for " << data.true_abilities.size()
              << " learners to " << dir.string() << "\n";
    return kOk;
}

// ---- train

struct TrainArgs {
    std::string data;
    std::string config;
    std::string out;
    std::string log;
    std::string resume;
    std::optional<std::string> variant;
    std::optional<int> epochs;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
    Ingest ingest;
    FoldArgs fold;
};

int run_train(const TrainArgs& a) {
    io::ConfigFile file = a.config.empty() ? io::ConfigFile{} : io::load_config(a.config);
    TrainConfig cfg = file.train;
    std::optional<io::Checkpoint> resumed;
    if (!a.resume.empty()) {
        resumed = io::load_checkpoint(a.resume);
        if (!resumed->state || !resumed->train_config) {
            throw DataError(a.resume + " carries no training state to resume from");
        }
        const int target_epochs = cfg.epochs;
        cfg = *resumed->train_config;
        if (!a.config.empty()) {
            cfg.epochs = target_epochs;
        }
    }
    if (a.variant) {
        cfg.variant = parse_variant(*a.variant);
    }
    if (a.epochs) {
        cfg.epochs = *a.epochs;
    }
    if (a.seed) {
        cfg.seed = *a.seed;
    }
    if (resumed && (cfg.variant != resumed->model.variant || cfg.seed != resumed->train_config->seed)) {
        throw UsageError("a resumed run must keep the checkpoint's variant and seed");
    }
    cfg.validate();

    const auto records = a.fold.apply(load(a.data, a.ingest), false);
    if (records.empty()) {
        throw DataError("no training records");
    }

    std::optional<std::ofstream> log;
    if (!a.log.empty()) {
        log = open_output(a.log, resumed ? std::ios::app : std::ios::trunc);
    }
    FitOptions options;
    if (resumed) {
        options.resume = &*resumed->state;
    }
    options.on_epoch = [&](const EpochLog& e) {
        json j = {{"epoch", e.epoch},
                  {"train_elbo", e.train_elbo},
                  {"val_elbo", optional_number(e.val_elbo)},
                  {"wall_time", e.wall_seconds}};
        if (log) {
            *log << j.dump() << '\n';
            log->flush();
        }
        if (!a.quiet) {
            std::cerr << j.dump() << '\n';
        }
    };
    const FitResult result = fit_with_state(records, cfg, options);
    io::save_checkpoint(a.out, result.model, &result.state, &cfg);
    return kOk;
}

// ---- infer

struct InferArgs {
    std::string model;
    std::string data;
    std::string out;
    std::string aggregation = "native";
    Ingest ingest;
};

int run_infer(const InferArgs& a) {
    const io::Checkpoint ck = io::load_checkpoint(a.model);
    const Aggregation agg = parse_aggregation(a.aggregation);
    const auto records = load(a.data, a.ingest);
    const std::vector<Sequence> seqs = build_sequences(records, ck.model.items);
    std::vector<Marginals> marginals;
    bool unknown = false;
    for (const auto& s : seqs) {
        marginals.push_back(agg == Aggregation::lgm ? lgm_marginals(ck.model, s, &unknown)
                                                    : native_marginals(ck.model, s, &unknown));
    }
    warn_unknown(unknown);
    auto out = open_output(a.out);
    io::write_marginals_csv(out, seqs, marginals);
    return kOk;
}

// ---- eval

struct EvalArgs {
    std::string model;
    std::string data;
    std::string truth_dir;
    std::string items;
    std::string abilities;
    std::string out;
    std::string summary_csv;
    std::string predictions_csv;
    std::string aggregation = "native";
    Ingest ingest;
    FoldArgs fold;
};

int run_eval(const EvalArgs& a) {
    const io::Checkpoint ck = io::load_checkpoint(a.model);
    const Aggregation agg = parse_aggregation(a.aggregation);
    const auto records = a.fold.apply(load(a.data, a.ingest), true);

    const auto started = std::chrono::steady_clock::now();
    const PredictionSet preds = next_step_predictions(ck.model, records, agg);
    const double pred_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    warn_unknown(preds.unknown_items);
    const auto roc = prediction_auroc(preds);

    std::set<std::string> learners;
    for (const auto& r : records) {
        learners.insert(r.learner_id);
    }
    json metrics = {{"variant", to_string(ck.model.variant)},
                    {"aggregation", a.aggregation},
                    {"n_records", records.size()},
                    {"n_learners", learners.size()},
                    {"auroc", optional_number(roc)},
                    {"unknown_items", preds.unknown_items},
                    {"prediction_seconds", pred_seconds}};

    std::string items = a.items;
    std::string abilities = a.abilities;
    if (!a.truth_dir.empty()) {
        items = (fs::path(a.truth_dir) / "items.json").string();
        abilities = (fs::path(a.truth_dir) / "abilities.json").string();
    }
    std::optional<RecoveryReport> rec;
    if (!items.empty() || !abilities.empty()) {
        if (items.empty() || abilities.empty()) {
            throw UsageError("ground truth needs both items and abilities sidecars");
        }
        const SynthDataset truth = io::load_truth(records, items, abilities);
        rec = recovery_report(ck.model, truth, agg);
        metrics["ability_r"] = optional_number(rec->ability_r);
        metrics["discrimination_r"] = optional_number(rec->discrimination_r);
        metrics["difficulty_r"] = optional_number(rec->difficulty_r);
        metrics["inference_seconds"] = rec->inference_seconds;
    }

    auto out = open_output(a.out);
    out << metrics.dump(2) << '\n';

    if (!a.summary_csv.empty()) {
        auto csv = open_output(a.summary_csv);
        auto cell = [](const std::optional<double>& x) { return x ? io::format_double(*x) : std::string(); };
        csv << "variant,aggregation,n_records,auroc,ability_r,discrimination_r,difficulty_r\n";
        csv << to_string(ck.model.variant) << ',' << a.aggregation << ',' << records.size() << ',' << cell(roc)
            << ',' << cell(rec ? rec->ability_r : std::nullopt) << ','
            << cell(rec ? rec->discrimination_r : std::nullopt) << ','
            << cell(rec ? rec->difficulty_r : std::nullopt) << '\n';
    }
    if (!a.predictions_csv.empty()) {
        auto csv = open_output(a.predictions_csv);
        io::write_predictions_csv(csv, preds);
    }
    return kOk;
}

// ---- grid

struct GridArgs {
    std::string model;
    std::string out;
    GridSpec spec;
};

int run_grid(const GridArgs& a) {
    const io::Checkpoint ck = io::load_checkpoint(a.model);
    if (ck.model.net_layout().n_out != 2) {
        throw UsageError("potential grids need a model with ability potentials (vtirt or vibo_poe)");
    }
    const PotentialNet net = ck.model.net();
    const std::vector<PotentialGrid> grids{potential_grid(net, 1, a.spec), potential_grid(net, 0, a.spec)};
    auto out = open_output(a.out);
    io::write_grid_csv(out, grids);
    return kOk;
}

// ---- bench

struct BenchArgs {
    std::string model;
    std::string out;
    std::size_t trajectories = 10000;
    std::vector<std::size_t> lengths{50, 100};
    int repeats = 3;
    std::uint64_t seed = 0;
};

int run_bench(const BenchArgs& a) {
    const io::Checkpoint ck = io::load_checkpoint(a.model);
    const auto rows = bench_inference(ck.model, a.trajectories, a.lengths, a.repeats, a.seed);
    std::ostringstream csv;
    csv << "length,trajectories,seconds,seconds_stddev,trajectories_per_second\n";
    for (const auto& r : rows) {
        csv << r.length << ',' << r.trajectories << ',' << io::format_double(r.seconds) << ','
            << io::format_double(r.seconds_stddev) << ',' << io::format_double(r.trajectories_per_second) << '\n';
    }
    if (a.out.empty()) {
        std::cout << csv.str();
    } else {
        auto out = open_output(a.out);
        out << csv.str();
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Variational temporal IRT: simulate, train, infer and evaluate"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "vtirt 0.1.0");

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Draw a synthetic dataset with ground truth");
    s->add_option("--config", sim.config, "TOML config ([synth], [model])")->check(CLI::ExistingFile);
    s->add_option("--out", sim.out, "Output directory")->required();
    s->add_option("--seed", sim.seed, "Override [synth].seed");
    s->add_flag("--force", sim.force, "Overwrite existing files");

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "Fit a model and write a checkpoint");
    t->add_option("--data", tr.data, "Dataset (JSON lines)")->required();
    t->add_option("--config", tr.config, "TOML config ([train], [model])");
    t->add_option("--out", tr.out, "Checkpoint path")->required();
    t->add_option("--log", tr.log, "JSON-lines training log");
    t->add_option("--resume", tr.resume, "Continue from a checkpoint written by train");
    t->add_option("--variant", tr.variant, "vtirt | dir_loc | vibo_poe");
    t->add_option("--epochs", tr.epochs, "Override [train].epochs");
    t->add_option("--seed", tr.seed, "Override [train].seed");
    t->add_flag("--quiet", tr.quiet, "Do not echo epoch records to stderr");
    tr.ingest.add_to(t);
    tr.fold.add_to(t);

    InferArgs inf;
    auto* i = app.add_subcommand("infer", "Write per-step ability marginals");
    i->add_option("--model", inf.model, "Checkpoint")->required();
    i->add_option("--data", inf.data, "Dataset (JSON lines)")->required();
    i->add_option("--out", inf.out, "CSV output")->required();
    i->add_option("--aggregation", inf.aggregation, "native | lgm");
    inf.ingest.add_to(i);

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Next-step AUROC and ground-truth recovery");
    e->add_option("--model", ev.model, "Checkpoint")->required();
    e->add_option("--data", ev.data, "Dataset (JSON lines)")->required();
    e->add_option("--truth-dir", ev.truth_dir, "Directory with items.json and abilities.json");
    e->add_option("--items", ev.items, "Ground-truth item sidecar");
    e->add_option("--abilities", ev.abilities, "Ground-truth ability sidecar");
    e->add_option("--out", ev.out, "Metrics JSON")->required();
    e->add_option("--summary-csv", ev.summary_csv, "One-row CSV summary");
    e->add_option("--predictions-csv", ev.predictions_csv, "Per-record predictions");
    e->add_option("--aggregation", ev.aggregation, "native | lgm");
    ev.ingest.add_to(e);
    ev.fold.add_to(e);

    GridArgs gr;
    auto* g = app.add_subcommand("grid", "Export potential means and log-variances over an (a, d) grid");
    g->add_option("--model", gr.model, "Checkpoint")->required();
    g->add_option("--out", gr.out, "CSV output")->required();
    g->add_option("--a-min", gr.spec.a_min);
    g->add_option("--a-max", gr.spec.a_max);
    g->add_option("--a-steps", gr.spec.a_steps)->check(CLI::PositiveNumber);
    g->add_option("--d-min", gr.spec.d_min);
    g->add_option("--d-max", gr.spec.d_max);
    g->add_option("--d-steps", gr.spec.d_steps)->check(CLI::PositiveNumber);

    BenchArgs be;
    auto* b = app.add_subcommand("bench", "Time amortized inference at several trajectory lengths");
    b->add_option("--model", be.model, "Checkpoint")->required();
    b->add_option("--out", be.out, "CSV output (stdout when omitted)");
    b->add_option("--trajectories", be.trajectories);
    b->add_option("--lengths", be.lengths)->delimiter(',');
    b->add_option("--repeats", be.repeats)->check(CLI::PositiveNumber);
    b->add_option("--seed", be.seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*s) return run_simulate(sim);
        if (*t) return run_train(tr);
        if (*i) return run_infer(inf);
        if (*e) return run_eval(ev);
        if (*g) return run_grid(gr);
        if (*b) return run_bench(be);
    } catch (const UsageError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kUsage;
    } catch (const DataError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kData;
    } catch (const NumericalError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kNumerical;
    } catch (const fs::filesystem_error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kData;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return kUsage;
}
