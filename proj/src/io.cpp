#include "vtirt/io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>
#include <toml.hpp>

namespace vtirt::io {

using nlohmann::json;

std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc()) {
        throw std::runtime_error("failed to format double");
    }
    return std::string(buf, ptr);
}

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    return out;
}

[[noreturn]] void line_error(const std::string& source, std::size_t line, const std::string& what) {
    throw DataError(source + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

std::vector<InteractionRecord> read_dataset(std::istream& in, const LoadOptions& options,
                                            const std::string& source) {
    std::vector<InteractionRecord> records;
    std::map<std::pair<std::string, std::int64_t>, std::size_t> seen;
    std::string text;
    std::size_t line_no = 0;
    while (std::getline(in, text)) {
        ++line_no;
        if (text.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        json j;
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            line_error(source, line_no, std::string("invalid JSON: ") + e.what());
        }
        if (!j.is_object()) {
            line_error(source, line_no, "expected a JSON object");
        }
        InteractionRecord r;
        auto field = [&](const char* key) -> const json& {
            auto it = j.find(key);
            if (it == j.end()) {
                line_error(source, line_no, std::string("missing field '") + key + "'");
            }
            return *it;
        };
        const json& learner = field("learner");
        const json& item = field("item");
        const json& correct = field("correct");
        const json& step = field("step");
        if (!learner.is_string() || !item.is_string()) {
            line_error(source, line_no, "'learner' and 'item' must be strings");
        }
        if (!correct.is_number_integer() || (correct.get<std::int64_t>() != 0 && correct.get<std::int64_t>() != 1)) {
            line_error(source, line_no, "'correct' must be 0 or 1");
        }
        if (!step.is_number_integer() || step.get<std::int64_t>() < 0) {
            line_error(source, line_no, "'step' must be a nonnegative integer");
        }
        r.learner_id = learner.get<std::string>();
        r.item_id = item.get<std::string>();
        r.correct = static_cast<int>(correct.get<std::int64_t>());
        r.step = step.get<std::int64_t>();
        if (auto kc = j.find("kc"); kc != j.end() && !kc->is_null()) {
            if (!kc->is_array()) {
                line_error(source, line_no, "'kc' must be an array of strings");
            }
            std::set<std::string> unique;
            for (const auto& tag : *kc) {
                if (!tag.is_string()) {
                    line_error(source, line_no, "'kc' must be an array of strings");
                }
                if (unique.insert(tag.get<std::string>()).second) {
                    r.kcs.push_back(tag.get<std::string>());
                }
            }
        }
        if (!seen.emplace(std::make_pair(r.learner_id, r.step), line_no).second) {
            line_error(source, line_no,
                       "duplicate step " + std::to_string(r.step) + " for learner " + r.learner_id +
                           " (first seen on line " + std::to_string(seen.at({r.learner_id, r.step})) + ")");
        }
        records.push_back(std::move(r));
    }

    std::stable_sort(records.begin(), records.end(), [](const auto& x, const auto& y) {
        return std::tie(x.learner_id, x.step) < std::tie(y.learner_id, y.step);
    });
    if (options.first_attempt_only) {
        std::set<std::pair<std::string, std::string>> attempted;
        std::erase_if(records, [&](const InteractionRecord& r) {
            return !attempted.emplace(r.learner_id, r.item_id).second;
        });
    }
    if (options.min_interactions > 0) {
        std::map<std::string, int> counts;
        for (const auto& r : records) {
            ++counts[r.learner_id];
        }
        std::erase_if(records, [&](const InteractionRecord& r) {
            return counts[r.learner_id] < options.min_interactions;
        });
    }
    return records;
}

std::vector<InteractionRecord> load_dataset(const std::filesystem::path& path, const LoadOptions& options) {
    auto in = open_in(path);
    return read_dataset(in, options, path.string());
}

void write_dataset(std::ostream& out, std::span<const InteractionRecord> records) {
    for (const auto& r : records) {
        json j = {{"learner", r.learner_id}, {"item", r.item_id}, {"correct", r.correct}, {"step", r.step}};
        if (!r.kcs.empty()) {
            j["kc"] = r.kcs;
        }
        out << j.dump() << '\n';
    }
}

void save_dataset(const std::filesystem::path& path, std::span<const InteractionRecord> records) {
    auto out = open_out(path);
    write_dataset(out, records);
}

void save_synthetic(const std::filesystem::path& dir, const SynthDataset& data) {
    std::filesystem::create_directories(dir);
    save_dataset(dir / "dataset.jsonl", data.records);

    json items = json::object();
    for (const auto& [id, p] : data.true_items) {
        items[id] = {{"a", p.a}, {"d", p.d}};
    }
    auto items_out = open_out(dir / "items.json");
    items_out << items.dump(1) << '\n';

    json abilities = json::object();
    for (const auto& [id, traj] : data.true_abilities) {
        abilities[id] = traj.theta;
    }
    auto abilities_out = open_out(dir / "abilities.json");
    abilities_out << abilities.dump() << '\n';
}

SynthDataset load_truth(std::vector<InteractionRecord> records, const std::filesystem::path& items_path,
                        const std::filesystem::path& abilities_path) {
    SynthDataset out;
    out.records = std::move(records);
    try {
        auto in_items = open_in(items_path);
        const json items = json::parse(in_items);
        for (const auto& [id, p] : items.items()) {
            out.true_items.emplace(id, ItemParams{id, p.at("a").get<double>(), p.at("d").get<double>()});
        }
        auto in_ab = open_in(abilities_path);
        const json abilities = json::parse(in_ab);
        for (const auto& [id, theta] : abilities.items()) {
            out.true_abilities.emplace(id, Trajectory{id, theta.get<std::vector<double>>()});
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed ground-truth sidecar: ") + e.what());
    }
    return out;
}

namespace {

json params_to_json(const ParamStore& store) {
    json arr = json::array();
    for (const auto& a : store) {
        arr.push_back({{"name", a.name}, {"values", a.value}});
    }
    return arr;
}

ParamStore params_from_json(const json& arr) {
    ParamStore store;
    for (const auto& entry : arr) {
        store.add(entry.at("name").get<std::string>(), entry.at("values").get<std::vector<double>>());
    }
    store.check_finite_values();
    return store;
}

json model_config_json(const ModelConfig& m) {
    return {{"sigma_theta", m.sigma_theta}, {"sigma_a", m.sigma_a}, {"sigma_d", m.sigma_d}};
}

ModelConfig model_config_from(const json& j) {
    ModelConfig m;
    m.sigma_theta = j.at("sigma_theta").get<double>();
    m.sigma_a = j.at("sigma_a").get<double>();
    m.sigma_d = j.at("sigma_d").get<double>();
    return m;
}

json train_config_json(const TrainConfig& c) {
    return {{"variant", to_string(c.variant)}, {"batch_size", c.batch_size},
            {"epochs", c.epochs},              {"seed", c.seed},
            {"val_fraction", c.val_fraction},  {"patience", c.patience},
            {"n_samples", c.n_samples},        {"learning_rate", c.learning_rate},
            {"beta1", c.beta1},                {"beta2", c.beta2},
            {"epsilon", c.epsilon},            {"sign_init", c.sign_init},
            {"model", model_config_json(c.model)}};
}

TrainConfig train_config_from(const json& j) {
    TrainConfig c;
    c.variant = parse_variant(j.at("variant").get<std::string>());
    c.batch_size = j.at("batch_size").get<int>();
    c.epochs = j.at("epochs").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.val_fraction = j.at("val_fraction").get<double>();
    c.patience = j.at("patience").get<int>();
    c.n_samples = j.at("n_samples").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.epsilon = j.at("epsilon").get<double>();
    c.sign_init = j.value("sign_init", true);
    c.model = model_config_from(j.at("model"));
    return c;
}

}  // namespace

void write_checkpoint(std::ostream& out, const TrainedModel& model, const TrainState* state,
                      const TrainConfig* cfg) {
    json j;
    j["format"] = "vtirt-checkpoint";
    j["format_version"] = kCheckpointVersion;
    j["variant"] = to_string(model.variant);
    j["model"] = model_config_json(model.model);
    j["items"] = model.items.ids();
    j["params"] = params_to_json(model.params);
    if (cfg != nullptr) {
        j["train_config"] = train_config_json(*cfg);
    }
    if (state != nullptr) {
        const OptimizerState& o = state->optimizer;
        j["train_state"] = {
            {"epochs_done", state->epochs_done},
            {"bad_epochs", state->bad_epochs},
            {"stopped", state->stopped},
            {"best_val", state->best_val ? json(*state->best_val) : json(nullptr)},
            {"current", params_to_json(state->current)},
            {"optimizer",
             {{"learning_rate", o.learning_rate},
              {"beta1", o.beta1},
              {"beta2", o.beta2},
              {"epsilon", o.epsilon},
              {"step", o.step},
              {"m", o.m},
              {"v", o.v}}}};
    }
    out << j.dump() << '\n';
}

void save_checkpoint(const std::filesystem::path& path, const TrainedModel& model, const TrainState* state,
                     const TrainConfig* cfg) {
    auto out = open_out(path);
    write_checkpoint(out, model, state, cfg);
}

Checkpoint read_checkpoint(std::istream& in) {
    try {
        const json j = json::parse(in);
        if (j.at("format").get<std::string>() != "vtirt-checkpoint") {
            throw DataError("not a vtirt checkpoint");
        }
        const int version = j.at("format_version").get<int>();
        if (version != kCheckpointVersion) {
            throw DataError("unsupported checkpoint version " + std::to_string(version));
        }
        Checkpoint c;
        c.model.variant = parse_variant(j.at("variant").get<std::string>());
        c.model.model = model_config_from(j.at("model"));
        c.model.model.validate();
        c.model.items = ItemVocabulary(j.at("items").get<std::vector<std::string>>());
        c.model.params = params_from_json(j.at("params"));
        // Validates shapes.
        const NetLayout net = c.model.net_layout();
        const ItemLayout items = c.model.item_layout();
        if (c.model.params[items.mean_a].value.size() != c.model.items.size()) {
            throw DataError("item posterior size does not match the vocabulary");
        }
        if (net.n_out != (c.model.variant == Variant::dir_loc ? 3 : 2)) {
            throw DataError("network output size does not match the variant");
        }
        if (auto it = j.find("train_config"); it != j.end()) {
            c.train_config = train_config_from(*it);
        }
        if (auto it = j.find("train_state"); it != j.end()) {
            const json& s = *it;
            TrainState st;
            st.epochs_done = s.at("epochs_done").get<int>();
            st.bad_epochs = s.at("bad_epochs").get<int>();
            st.stopped = s.at("stopped").get<bool>();
            if (!s.at("best_val").is_null()) {
                st.best_val = s.at("best_val").get<double>();
            }
            st.current = params_from_json(s.at("current"));
            st.best = c.model.params;
            const json& o = s.at("optimizer");
            st.optimizer.learning_rate = o.at("learning_rate").get<double>();
            st.optimizer.beta1 = o.at("beta1").get<double>();
            st.optimizer.beta2 = o.at("beta2").get<double>();
            st.optimizer.epsilon = o.at("epsilon").get<double>();
            st.optimizer.step = o.at("step").get<long long>();
            st.optimizer.m = o.at("m").get<std::vector<std::vector<double>>>();
            st.optimizer.v = o.at("v").get<std::vector<std::vector<double>>>();
            c.state = std::move(st);
        }
        return c;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed checkpoint: ") + e.what());
    } catch (const std::out_of_range& e) {
        throw DataError(std::string("malformed checkpoint: ") + e.what());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_checkpoint(in);
}

namespace {

double number_of(const toml::node& node, const std::string& key) {
    if (auto v = node.value<double>()) {
        return *v;
    }
    throw UsageError("config key '" + key + "' must be a number");
}

std::int64_t integer_of(const toml::node& node, const std::string& key) {
    if (auto v = node.as_integer()) {
        return v->get();
    }
    throw UsageError("config key '" + key + "' must be an integer");
}

int int_of(const toml::node& node, const std::string& key) {
    const std::int64_t v = integer_of(node, key);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
        throw UsageError("config key '" + key + "' out of range");
    }
    return static_cast<int>(v);
}

std::uint64_t seed_of(const toml::node& node, const std::string& key) {
    const std::int64_t v = integer_of(node, key);
    if (v < 0) {
        throw UsageError("config key '" + key + "' must be nonnegative");
    }
    return static_cast<std::uint64_t>(v);
}

}  // namespace

ConfigFile parse_config(const std::string& text, const std::string& source) {
    toml::table root;
    try {
        root = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << source << ": " << e.description() << " (line " << e.source().begin.line << ")";
        throw UsageError(msg.str());
    }
    ConfigFile cfg;
    for (auto&& [name, node] : root) {
        const std::string section(name.str());
        const toml::table* tbl = node.as_table();
        if (tbl == nullptr) {
            throw UsageError(source + ": top-level key '" + section + "' must be a table");
        }
        for (auto&& [k, v] : *tbl) {
            const std::string key(k.str());
            const std::string full = section + "." + key;
            if (section == "model") {
                if (key == "sigma_theta") {
                    cfg.model.sigma_theta = number_of(v, full);
                } else if (key == "sigma_a") {
                    cfg.model.sigma_a = number_of(v, full);
                } else if (key == "sigma_d") {
                    cfg.model.sigma_d = number_of(v, full);
                } else {
                    throw UsageError(source + ": unknown config key '" + full + "'");
                }
            } else if (section == "train") {
                TrainConfig& t = cfg.train;
                if (key == "variant") {
                    auto s = v.value<std::string>();
                    if (!s) {
                        throw UsageError("config key '" + full + "' must be a string");
                    }
                    t.variant = parse_variant(*s);
                } else if (key == "batch_size") {
                    t.batch_size = int_of(v, full);
                } else if (key == "epochs") {
                    t.epochs = int_of(v, full);
                } else if (key == "seed") {
                    t.seed = seed_of(v, full);
                } else if (key == "val_fraction") {
                    t.val_fraction = number_of(v, full);
                } else if (key == "patience") {
                    t.patience = int_of(v, full);
                } else if (key == "n_samples") {
                    t.n_samples = int_of(v, full);
                } else if (key == "learning_rate") {
                    t.learning_rate = number_of(v, full);
                } else if (key == "beta1") {
                    t.beta1 = number_of(v, full);
                } else if (key == "beta2") {
                    t.beta2 = number_of(v, full);
                } else if (key == "epsilon") {
                    t.epsilon = number_of(v, full);
                } else if (key == "sign_init") {
                    auto b = v.value<bool>();
                    if (!v.is_boolean() || !b) {
                        throw UsageError("config key '" + full + "' must be a boolean");
                    }
                    t.sign_init = *b;
                } else {
                    throw UsageError(source + ": unknown config key '" + full + "'");
                }
            } else if (section == "synth") {
                if (key == "n_learners") {
                    cfg.synth.n_learners = int_of(v, full);
                } else if (key == "n_items") {
                    cfg.synth.n_items = int_of(v, full);
                } else if (key == "seed") {
                    cfg.synth.seed = seed_of(v, full);
                } else {
                    throw UsageError(source + ": unknown config key '" + full + "'");
                }
            } else {
                throw UsageError(source + ": unknown config table '" + section + "'");
            }
        }
    }
    cfg.train.model = cfg.model;
    cfg.synth.model = cfg.model;
    return cfg;
}

ConfigFile load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw UsageError("cannot open config " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

void write_marginals_csv(std::ostream& out, std::span<const Sequence> sequences,
                         std::span<const Marginals> marginals) {
    bool with_kc = false;
    for (const auto& s : sequences) {
        with_kc = with_kc || !s.kc.empty();
    }
    out << "learner,step,mean,variance" << (with_kc ? ",kc" : "") << '\n';
    for (std::size_t k = 0; k < sequences.size(); ++k) {
        const Sequence& s = sequences[k];
        for (std::size_t t = 0; t < s.steps.size(); ++t) {
            out << s.learner << ',' << s.steps[t].step << ',' << format_double(marginals[k].mean[t]) << ','
                << format_double(marginals[k].variance[t]);
            if (with_kc) {
                out << ',' << s.kc;
            }
            out << '\n';
        }
    }
}

void write_grid_csv(std::ostream& out, std::span<const PotentialGrid> grids) {
    out << "correct,d,a,mu,logvar\n";
    for (const auto& g : grids) {
        for (std::size_t i = 0; i < g.d.size(); ++i) {
            for (std::size_t j = 0; j < g.a.size(); ++j) {
                out << g.correct << ',' << format_double(g.d[i]) << ',' << format_double(g.a[j]) << ','
                    << format_double(g.mu[i][j]) << ',' << format_double(g.logvar[i][j]) << '\n';
            }
        }
    }
}

void write_predictions_csv(std::ostream& out, const PredictionSet& set) {
    out << "learner,step,item,predicted,actual\n";
    for (const auto& p : set.predictions) {
        out << p.learner_id << ',' << p.step << ',' << p.item_id << ',' << format_double(p.predicted) << ','
            << p.actual << '\n';
    }
}

}  // namespace vtirt::io
