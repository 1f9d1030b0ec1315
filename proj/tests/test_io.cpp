#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "vtirt/io.hpp"

using namespace vtirt;
namespace fs = std::filesystem;

namespace {

std::vector<InteractionRecord> parse(const std::string& text, const io::LoadOptions& opt = {}) {
    std::istringstream in(text);
    return io::read_dataset(in, opt, "data.jsonl");
}

std::string error_of(const std::string& text) {
    try {
        parse(text);
    } catch (const DataError& e) {
        return e.what();
    }
    return "";
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("vtirt_io_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("format_double round-trips") {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> n(0.0, 100.0);
    for (int k = 0; k < 1000; ++k) {
        const double x = n(gen) * std::pow(10.0, static_cast<int>(gen() % 40) - 20);
        CHECK(std::stod(io::format_double(x)) == x);
    }
    CHECK(io::format_double(0.5) == "0.5");
}

TEST_CASE("dataset parsing") {
    const auto recs = parse(
        "{\"learner\":\"b\",\"item\":\"q1\",\"correct\":1,\"step\":2}\n"
        "\n"
        "{\"learner\":\"a\",\"item\":\"q2\",\"correct\":0,\"step\":7,\"kc\":[\"k1\",\"k2\",\"k1\"]}\n"
        "{\"learner\":\"b\",\"item\":\"q2\",\"correct\":0,\"step\":1}\n");
    REQUIRE(recs.size() == 3);
    CHECK(recs[0].learner_id == "a");
    CHECK(recs[0].kcs == std::vector<std::string>{"k1", "k2"});
    CHECK(recs[1].learner_id == "b");
    CHECK(recs[1].step == 1);
    CHECK(recs[2].step == 2);
    CHECK(recs[2].correct == 1);
}

TEST_CASE("dataset errors carry line numbers") {
    CHECK(error_of("{\"learner\":\"a\",\"item\":\"q\",\"correct\":2,\"step\":1}\n").find("data.jsonl:1:") !=
          std::string::npos);
    const std::string dup =
        "{\"learner\":\"a\",\"item\":\"q\",\"correct\":1,\"step\":1}\n"
        "{\"learner\":\"a\",\"item\":\"r\",\"correct\":0,\"step\":1}\n";
    CHECK(error_of(dup).find("data.jsonl:2:") != std::string::npos);
    CHECK(error_of(dup).find("duplicate") != std::string::npos);
    CHECK(error_of("{\"learner\":\"a\",\"item\":\"q\",\"step\":1}\n").find("correct") != std::string::npos);
    CHECK(error_of("not json\n").find(":1:") != std::string::npos);
    CHECK(error_of("{\"learner\":\"a\",\"item\":\"q\",\"correct\":true,\"step\":1}\n") != "");
    CHECK(error_of("{\"learner\":1,\"item\":\"q\",\"correct\":1,\"step\":1}\n") != "");
    CHECK(error_of("{\"learner\":\"a\",\"item\":\"q\",\"correct\":1,\"step\":1.5}\n") != "");
    CHECK(error_of("{\"learner\":\"a\",\"item\":\"q\",\"correct\":1,\"step\":1,\"kc\":\"k\"}\n") != "");
    CHECK(error_of("[1,2]\n") != "");
    CHECK_THROWS_AS(io::load_dataset("/nonexistent/file.jsonl"), DataError);
}

TEST_CASE("ingestion filters") {
    const std::string text =
        "{\"learner\":\"a\",\"item\":\"q\",\"correct\":0,\"step\":1}\n"
        "{\"learner\":\"a\",\"item\":\"q\",\"correct\":1,\"step\":2}\n"
        "{\"learner\":\"a\",\"item\":\"r\",\"correct\":1,\"step\":3}\n"
        "{\"learner\":\"b\",\"item\":\"q\",\"correct\":1,\"step\":1}\n";
    io::LoadOptions first;
    first.first_attempt_only = true;
    const auto f = parse(text, first);
    CHECK(f.size() == 3);
    CHECK(f[1].item_id == "r");
    io::LoadOptions min;
    min.min_interactions = 2;
    const auto m = parse(text, min);
    CHECK(m.size() == 3);
    for (const auto& r : m) {
        CHECK(r.learner_id == "a");
    }
}

TEST_CASE("dataset round-trip") {
    SynthConfig s;
    s.n_learners = 7;
    s.n_items = 5;
    const SynthDataset data = simulate(s);
    std::vector<InteractionRecord> recs = data.records;
    recs[3].kcs = {"x", "y"};
    std::ostringstream out;
    io::write_dataset(out, recs);
    const auto back = parse(out.str());
    REQUIRE(back.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        CHECK(back[i].learner_id == recs[i].learner_id);
        CHECK(back[i].item_id == recs[i].item_id);
        CHECK(back[i].correct == recs[i].correct);
        CHECK(back[i].step == recs[i].step);
        CHECK(back[i].kcs == recs[i].kcs);
    }
}

TEST_CASE("synthetic sidecars round-trip") {
    SynthConfig s;
    s.n_learners = 4;
    s.n_items = 6;
    const SynthDataset data = simulate(s);
    const fs::path dir = scratch("synth");
    io::save_synthetic(dir, data);
    const SynthDataset back =
        io::load_truth(io::load_dataset(dir / "dataset.jsonl"), dir / "items.json", dir / "abilities.json");
    CHECK(back.records.size() == data.records.size());
    for (const auto& [id, p] : data.true_items) {
        CHECK(back.true_items.at(id).a == p.a);
        CHECK(back.true_items.at(id).d == p.d);
    }
    for (const auto& [id, t] : data.true_abilities) {
        CHECK(back.true_abilities.at(id).theta == t.theta);
    }
    fs::remove_all(dir);
}

TEST_CASE("checkpoint round-trip evaluates identically") {
    const std::vector<InteractionRecord> records{
        {"L0", "i0", 1, 1, {}}, {"L0", "i1", 0, 2, {}}, {"L1", "i1", 1, 1, {}}, {"L1", "i2", 0, 2, {}}};
    for (Variant v : {Variant::vtirt, Variant::dir_loc, Variant::vibo_poe}) {
        TrainedModel m = make_model(v, collect_items(records), ModelConfig{0.3, 0.9, 1.1}, 2);
        oracle::randomize(m.params, 31);
        TrainState state;
        state.epochs_done = 4;
        state.optimizer.step = 17;
        state.optimizer.m = {{0.1, 1e-300}, {std::nextafter(1.0, 2.0)}};
        state.optimizer.v = {{0.2, 0.3}, {0.4}};
        state.current = m.params;
        state.best = m.params;
        state.best_val = -0.6931471805599453;
        state.bad_epochs = 2;
        TrainConfig cfg;
        cfg.variant = v;
        cfg.seed = 77;
        cfg.learning_rate = 3e-3;

        std::stringstream buf;
        io::write_checkpoint(buf, m, &state, &cfg);
        const io::Checkpoint ck = io::read_checkpoint(buf);
        CHECK(ck.model.variant == v);
        CHECK(ck.model.model.sigma_theta == 0.3);
        CHECK(ck.model.items.ids() == m.items.ids());
        for (std::size_t k = 0; k < m.params.size(); ++k) {
            CHECK(ck.model.params[k].name == m.params[k].name);
            CHECK(ck.model.params[k].value == m.params[k].value);
        }
        REQUIRE(ck.state.has_value());
        CHECK(ck.state->epochs_done == 4);
        CHECK(ck.state->optimizer.step == 17);
        CHECK(ck.state->optimizer.m == state.optimizer.m);
        CHECK(ck.state->best_val == state.best_val);
        REQUIRE(ck.train_config.has_value());
        CHECK(ck.train_config->seed == 77);
        CHECK(ck.train_config->learning_rate == 3e-3);

        const auto seqs = build_sequences(records, m.items);
        const Batch batch = full_batch(seqs);
        Rng rng(1);
        const ElboNoise noise = draw_noise(batch, m.items.size(), rng);
        CHECK(batch_elbo(ck.model, batch, noise) == batch_elbo(m, batch, noise));

        std::stringstream again;
        io::write_checkpoint(again, ck.model, &*ck.state, &*ck.train_config);
        std::stringstream first;
        io::write_checkpoint(first, m, &state, &cfg);
        CHECK(again.str() == first.str());
    }
}

TEST_CASE("malformed checkpoints") {
    std::stringstream a("{\"format\":\"other\"}");
    CHECK_THROWS_AS(io::read_checkpoint(a), DataError);
    std::stringstream b("not json");
    CHECK_THROWS_AS(io::read_checkpoint(b), DataError);
    CHECK_THROWS_AS(io::load_checkpoint("/nonexistent/model.json"), DataError);

    TrainedModel m = make_model(Variant::vtirt, {"i0", "i1"}, ModelConfig{}, 0);
    std::stringstream ok;
    io::write_checkpoint(ok, m);
    std::string text = ok.str();
    const auto pos = text.find("\"format_version\":1");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 18, "\"format_version\":9");
    std::stringstream bad(text);
    CHECK_THROWS_AS(io::read_checkpoint(bad), DataError);
}

TEST_CASE("config parsing") {
    const io::ConfigFile cfg = io::parse_config(
        "[model]\nsigma_theta = 0.5\nsigma_a = 2\n"
        "[train]\nvariant = \"dir_loc\"\nbatch_size = 16\nepochs = 3\nseed = 5\nlearning_rate = 0.01\n"
        "[synth]\nn_learners = 12\nn_items = 4\nseed = 9\n");
    CHECK(cfg.model.sigma_theta == 0.5);
    CHECK(cfg.model.sigma_a == 2.0);
    CHECK(cfg.train.variant == Variant::dir_loc);
    CHECK(cfg.train.batch_size == 16);
    CHECK(cfg.train.model.sigma_theta == 0.5);
    CHECK(cfg.synth.model.sigma_a == 2.0);
    CHECK(cfg.synth.n_learners == 12);
    CHECK(cfg.synth.seed == 9);
    CHECK(cfg.train.learning_rate == 0.01);
    CHECK(cfg.train.sign_init);
    CHECK_FALSE(io::parse_config("[train]\nsign_init = false\n").train.sign_init);
    CHECK_THROWS_AS(io::parse_config("[train]\nsign_init = 1\n"), UsageError);

    const io::ConfigFile empty = io::parse_config("");
    CHECK(empty.train.batch_size == TrainConfig{}.batch_size);

    CHECK_THROWS_AS(io::parse_config("[model]\nsigma = 1.0\n"), UsageError);
    CHECK_THROWS_AS(io::parse_config("[extra]\nx = 1\n"), UsageError);
    CHECK_THROWS_AS(io::parse_config("seed = 1\n"), UsageError);
    CHECK_THROWS_AS(io::parse_config("[train]\nepochs = \"ten\"\n"), UsageError);
    CHECK_THROWS_AS(io::parse_config("[train]\nvariant = \"hmc\"\n"), UsageError);
    CHECK_THROWS_AS(io::parse_config("[synth]\nseed = -1\n"), UsageError);
    CHECK_THROWS_AS(io::parse_config("[model\n"), UsageError);
    CHECK_THROWS_AS(io::load_config("/nonexistent/cfg.toml"), UsageError);
}

TEST_CASE("CSV writers") {
    SUBCASE("marginals") {
        std::vector<Sequence> seqs(1);
        seqs[0].learner = "L";
        seqs[0].steps = {{0, 1, 1, 0}, {1, 0, 4, 1}};
        const std::vector<Marginals> m{{{0.25, -0.5}, {0.1, 0.2}}};
        std::ostringstream out;
        io::write_marginals_csv(out, seqs, m);
        CHECK(out.str() == "learner,step,mean,variance\nL,1,0.25,0.1\nL,4,-0.5,0.2\n");
        seqs[0].kc = "k";
        std::ostringstream with_kc;
        io::write_marginals_csv(with_kc, seqs, m);
        CHECK(with_kc.str().rfind("learner,step,mean,variance,kc\nL,1,0.25,0.1,k\n", 0) == 0);
        std::ostringstream empty;
        io::write_marginals_csv(empty, {}, {});
        CHECK(empty.str() == "learner,step,mean,variance\n");
    }
    SUBCASE("grid") {
        PotentialGrid g;
        g.correct = 1;
        g.a = {0.5, 1.0};
        g.d = {0.0};
        g.mu = {{0.1, 0.2}};
        g.logvar = {{-1.0, -2.0}};
        std::ostringstream out;
        io::write_grid_csv(out, std::vector<PotentialGrid>{g});
        CHECK(out.str() == "correct,d,a,mu,logvar\n1,0,0.5,0.1,-1\n1,0,1,0.2,-2\n");
    }
}
