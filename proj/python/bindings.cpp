#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "vtirt/evaluation.hpp"
#include "vtirt/io.hpp"
#include "vtirt/lgm.hpp"
#include "vtirt/recognition.hpp"
#include "vtirt/synthgen.hpp"
#include "vtirt/training.hpp"

namespace py = pybind11;
using namespace vtirt;

namespace {

Aggregation parse_aggregation(const std::string& s) {
    if (s == "native") {
        return Aggregation::native;
    }
    if (s == "lgm") {
        return Aggregation::lgm;
    }
    throw UsageError("aggregation must be 'native' or 'lgm'");
}

py::dict optional_fields(const RecoveryReport& r) {
    py::dict out;
    out["ability_r"] = r.ability_r ? py::cast(*r.ability_r) : py::none();
    out["discrimination_r"] = r.discrimination_r ? py::cast(*r.discrimination_r) : py::none();
    out["difficulty_r"] = r.difficulty_r ? py::cast(*r.difficulty_r) : py::none();
    out["inference_seconds"] = r.inference_seconds;
    return out;
}

// (learner, kc, step, mean, variance) per trajectory step
std::vector<py::tuple> marginals(const TrainedModel& model, const std::vector<InteractionRecord>& records,
                                 const std::string& aggregation) {
    const Aggregation agg = parse_aggregation(aggregation);
    std::vector<py::tuple> rows;
    for (const Sequence& seq : build_sequences(records, model.items)) {
        const Marginals m = agg == Aggregation::lgm ? lgm_marginals(model, seq) : native_marginals(model, seq);
        for (std::size_t t = 0; t < seq.steps.size(); ++t) {
            rows.push_back(py::make_tuple(seq.learner, seq.kc, seq.steps[t].step, m.mean[t], m.variance[t]));
        }
    }
    return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Variational temporal IRT";

    py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    py::class_<ModelConfig>(m, "ModelConfig")
        .def(py::init([](double sigma_theta, double sigma_a, double sigma_d) {
                 ModelConfig c{sigma_theta, sigma_a, sigma_d};
                 c.validate();
                 return c;
             }),
             py::arg("sigma_theta") = 0.25, py::arg("sigma_a") = 1.0, py::arg("sigma_d") = 1.0)
        .def_readwrite("sigma_theta", &ModelConfig::sigma_theta)
        .def_readwrite("sigma_a", &ModelConfig::sigma_a)
        .def_readwrite("sigma_d", &ModelConfig::sigma_d);

    py::class_<InteractionRecord>(m, "Record")
        .def(py::init([](std::string learner, std::string item, int correct, std::int64_t step,
                         std::vector<std::string> kcs) {
                 return InteractionRecord{std::move(learner), std::move(item), correct, step, std::move(kcs)};
             }),
             py::arg("learner"), py::arg("item"), py::arg("correct"), py::arg("step"),
             py::arg("kcs") = std::vector<std::string>{})
        .def_readwrite("learner", &InteractionRecord::learner_id)
        .def_readwrite("item", &InteractionRecord::item_id)
        .def_readwrite("correct", &InteractionRecord::correct)
        .def_readwrite("step", &InteractionRecord::step)
        .def_readwrite("kcs", &InteractionRecord::kcs)
        .def("__repr__", [](const InteractionRecord& r) {
            return "Record(" + r.learner_id + ", " + r.item_id + ", " + std::to_string(r.correct) + ", " +
                   std::to_string(r.step) + ")";
        });

    py::class_<SynthDataset>(m, "SynthDataset")
        .def_readonly("records", &SynthDataset::records)
        .def_property_readonly("true_items",
                               [](const SynthDataset& d) {
                                   std::map<std::string, std::pair<double, double>> out;
                                   for (const auto& [id, p] : d.true_items) {
                                       out[id] = {p.a, p.d};
                                   }
                                   return out;
                               })
        .def_property_readonly("true_abilities", [](const SynthDataset& d) {
            std::map<std::string, std::vector<double>> out;
            for (const auto& [id, t] : d.true_abilities) {
                out[id] = t.theta;
            }
            return out;
        });

    m.def(
        "simulate",
        [](int n_learners, int n_items, const ModelConfig& model, std::uint64_t seed) {
            SynthConfig s;
            s.n_learners = n_learners;
            s.n_items = n_items;
            s.model = model;
            s.seed = seed;
            return simulate(s);
        },
        py::arg("n_learners") = 1000, py::arg("n_items") = 50, py::arg("model") = ModelConfig{},
        py::arg("seed") = 0);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_property(
            "variant", [](const TrainConfig& c) { return to_string(c.variant); },
            [](TrainConfig& c, const std::string& v) { c.variant = parse_variant(v); })
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("val_fraction", &TrainConfig::val_fraction)
        .def_readwrite("patience", &TrainConfig::patience)
        .def_readwrite("n_samples", &TrainConfig::n_samples)
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("sign_init", &TrainConfig::sign_init)
        .def_readwrite("model", &TrainConfig::model)
        .def("validate", &TrainConfig::validate);

    py::class_<TrainedModel>(m, "Model")
        .def_property_readonly("variant", [](const TrainedModel& t) { return to_string(t.variant); })
        .def_property_readonly("config", [](const TrainedModel& t) { return t.model; })
        .def_property_readonly("items", [](const TrainedModel& t) { return t.items.ids(); })
        .def_property_readonly("item_means",
                               [](const TrainedModel& t) {
                                   const ItemPosterior post = t.item_posterior();
                                   std::map<std::string, std::pair<double, double>> out;
                                   for (std::size_t q = 0; q < t.items.size(); ++q) {
                                       const ItemParams p = post.mean(q);
                                       out[t.items.ids()[q]] = {p.a, p.d};
                                   }
                                   return out;
                               })
        .def(
            "potential",
            [](const TrainedModel& t, double a, double d, int correct) {
                const AbilityPotential p = potential_forward(a, d, correct, t.net());
                return std::make_pair(p.mu, p.sigma);
            },
            py::arg("a"), py::arg("d"), py::arg("correct"))
        .def("save", [](const TrainedModel& t, const std::filesystem::path& p) { io::save_checkpoint(p, t); });

    m.def(
        "make_model",
        [](const std::string& variant, std::vector<std::string> items, const ModelConfig& model,
           std::uint64_t seed) { return make_model(parse_variant(variant), std::move(items), model, seed); },
        py::arg("variant"), py::arg("items"), py::arg("model") = ModelConfig{}, py::arg("seed") = 0);
    m.def(
        "fit",
        [](const std::vector<InteractionRecord>& records, const TrainConfig& cfg) {
            py::gil_scoped_release release;
            return fit(records, cfg);
        },
        py::arg("records"), py::arg("config") = TrainConfig{});
    m.def("load_model", [](const std::filesystem::path& p) { return io::load_checkpoint(p).model; });

    m.def(
        "load_dataset",
        [](const std::filesystem::path& p, bool first_attempt_only, int min_interactions) {
            return io::load_dataset(p, io::LoadOptions{first_attempt_only, min_interactions});
        },
        py::arg("path"), py::arg("first_attempt_only") = false, py::arg("min_interactions") = 0);
    m.def("save_dataset", [](const std::filesystem::path& p, const std::vector<InteractionRecord>& records) {
        io::save_dataset(p, records);
    });

    m.def("marginals", &marginals, py::arg("model"), py::arg("records"), py::arg("aggregation") = "native");
    m.def(
        "predict",
        [](const TrainedModel& model, const std::vector<InteractionRecord>& records, const std::string& aggregation) {
            const PredictionSet set = next_step_predictions(model, records, parse_aggregation(aggregation));
            std::vector<double> out;
            out.reserve(set.predictions.size());
            for (const auto& p : set.predictions) {
                out.push_back(p.predicted);
            }
            return out;
        },
        py::arg("model"), py::arg("records"), py::arg("aggregation") = "native");
    m.def(
        "next_step_auroc",
        [](const TrainedModel& model, const std::vector<InteractionRecord>& records, const std::string& aggregation) {
            return prediction_auroc(next_step_predictions(model, records, parse_aggregation(aggregation)));
        },
        py::arg("model"), py::arg("records"), py::arg("aggregation") = "native");
    m.def(
        "recovery",
        [](const TrainedModel& model, const SynthDataset& truth, const std::string& aggregation) {
            return optional_fields(recovery_report(model, truth, parse_aggregation(aggregation)));
        },
        py::arg("model"), py::arg("truth"), py::arg("aggregation") = "native");
    m.def(
        "select_fold",
        [](const std::vector<InteractionRecord>& records, int k, int fold, std::uint64_t seed, bool in_fold) {
            return select_fold(records, k, fold, seed, in_fold);
        },
        py::arg("records"), py::arg("k"), py::arg("fold"), py::arg("seed") = 0, py::arg("in_fold") = true);
    m.def("auroc", [](const std::vector<int>& labels, const std::vector<double>& scores) {
        return auroc(labels, scores);
    });
    m.def("pearson", [](const std::vector<double>& x, const std::vector<double>& y) { return pearson(x, y); });

    m.def(
        "potential_grid",
        [](const TrainedModel& model, int correct, double a_min, double a_max, int a_steps, double d_min,
           double d_max, int d_steps) {
            const PotentialGrid g =
                potential_grid(model.net(), correct, GridSpec{a_min, a_max, a_steps, d_min, d_max, d_steps});
            py::dict out;
            out["a"] = g.a;
            out["d"] = g.d;
            out["mu"] = g.mu;
            out["logvar"] = g.logvar;
            return out;
        },
        py::arg("model"), py::arg("correct"), py::arg("a_min") = 0.5, py::arg("a_max") = 2.0,
        py::arg("a_steps") = 16, py::arg("d_min") = -2.0, py::arg("d_max") = 2.0, py::arg("d_steps") = 17);

    m.def(
        "smooth",
        [](const std::vector<double>& mu, const std::vector<double>& sigma, const ModelConfig& model) {
            if (mu.size() != sigma.size()) {
                throw UsageError("mu and sigma must have the same length");
            }
            std::vector<AbilityPotential> pots(mu.size());
            for (std::size_t t = 0; t < mu.size(); ++t) {
                pots[t] = {mu[t], sigma[t]};
            }
            const Marginals mg = rollout_marginals(LgmPosterior(model, pots));
            return std::make_pair(mg.mean, mg.variance);
        },
        py::arg("mu"), py::arg("sigma"), py::arg("model") = ModelConfig{},
        "Posterior marginals of a Wiener path given Gaussian potentials (sigma = inf is vacuous).");
}
