#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "attrprobe/contextualizer.hpp"
#include "attrprobe/data_selector.hpp"
#include "attrprobe/downstream.hpp"
#include "attrprobe/embedding_store.hpp"
#include "attrprobe/error.hpp"
#include "attrprobe/fusion.hpp"
#include "attrprobe/kg_store.hpp"
#include "attrprobe/logistic.hpp"
#include "attrprobe/norm_data.hpp"
#include "attrprobe/probe.hpp"
#include "attrprobe/stemmer.hpp"
#include "attrprobe/text.hpp"

namespace py = pybind11;
using namespace attrprobe;

namespace {

std::vector<std::string> attribute_tokens(const py::object& attribute) {
  if (py::isinstance<py::str>(attribute)) return split_words(normalize(attribute.cast<std::string>()));
  return attribute.cast<std::vector<std::string>>();
}

ContextualizerConfig contextualizer_config(const py::object& config) {
  if (config.is_none()) return {};
  auto json_module = py::module_::import("json");
  return ContextualizerConfig::from_json(
      nlohmann::json::parse(json_module.attr("dumps")(config).cast<std::string>()));
}

py::dict match_dict(const KgStore& store, const RelationMatch& m) {
  const auto& t = store.triples()[m.triple];
  py::dict d;
  d["position"] = m.word_position;
  d["relation_id"] = m.relation_id;
  d["kb"] = store.relations().kbs()[t.kb];
  d["relation"] = t.relation;
  d["start"] = join(t.start);
  d["end"] = join(t.end);
  d["reverse"] = m.direction == Direction::Reverse;
  return d;
}

py::dict report_dict(const FitReport& report) {
  py::list rows;
  for (const auto& fit : report.per_attribute) {
    py::dict row;
    row["id"] = fit.id;
    row["attribute"] = fit.name;
    row["category"] = std::string(to_string(fit.category));
    row["f1"] = fit.f1;
    row["n_pos"] = fit.n_pos;
    rows.append(row);
  }
  py::dict medians;
  for (const auto& [category, value] : report.medians) medians[py::str(std::string(to_string(category)))] = value;
  py::dict out;
  out["per_attribute"] = rows;
  out["medians"] = medians;
  out["overall_median"] = report.overall_median;
  out["csv"] = fit_csv(report);
  return out;
}

QADatum datum_from(const py::dict& d) {
  QADatum datum;
  datum.id = d.contains("id") ? py::str(d["id"]).cast<std::string>() : "";
  datum.passage = d.contains("passage") ? d["passage"].cast<std::string>() : "";
  datum.question = d.contains("question") ? d["question"].cast<std::string>() : "";
  if (d.contains("answers")) datum.answers = d["answers"].cast<std::vector<std::string>>();
  return datum;
}

Attribute attribute_from(const std::string& name, std::size_t id) {
  return Attribute{split_words(normalize(name)), Category::Visual, id};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "attrprobe core bindings";
  m.attr("__version__") = ATTRPROBE_VERSION;

  static py::exception<Error> error(m, "AttrprobeError", PyExc_RuntimeError);
  static py::exception<ParseError> parse_error(m, "ParseError", error.ptr());
  static py::exception<ConfigError> config_error(m, "ConfigError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ParseError& e) {
      py::set_error(parse_error, e.what());
    } catch (const ConfigError& e) {
      py::set_error(config_error, e.what());
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  // text
  m.def("normalize", &normalize);
  m.def("tokenize", &tokenize);
  m.def("split_words", &split_words);
  m.def("stem", &stem, "Porter2 stem, repeated to a fixpoint");
  m.def("porter2_stem", &porter2_stem);

  // contextualizer
  m.def("pluralize", &pluralize);
  m.def(
      "contextualize",
      [](const std::string& object, const py::object& attribute, const py::object& config) {
        return contextualize(object, attribute_tokens(attribute), contextualizer_config(config));
      },
      py::arg("object"), py::arg("attribute"), py::arg("config") = py::none(),
      "Sentence for an (object, attribute) pair; attribute is a string or token list.");

  // norm data
  py::class_<Attribute>(m, "Attribute")
      .def_readonly("tokens", &Attribute::tokens)
      .def_readonly("id", &Attribute::id)
      .def_property_readonly("name", &Attribute::name)
      .def_property_readonly("category", [](const Attribute& a) { return std::string(to_string(a.category)); })
      .def("__repr__", [](const Attribute& a) { return "<Attribute " + std::to_string(a.id) + " '" + a.name() + "'>"; });

  py::class_<NormDataset>(m, "NormDataset")
      .def_property_readonly("objects", &NormDataset::objects)
      .def_property_readonly("attributes", &NormDataset::attributes)
      .def_property_readonly("n_objects", &NormDataset::n_objects)
      .def_property_readonly("n_attributes", &NormDataset::n_attributes)
      .def("has", &NormDataset::has)
      .def("labels", &NormDataset::labels)
      .def("positive_count", &NormDataset::positive_count)
      .def("find_attribute", &NormDataset::find_attribute)
      .def("find_object", &NormDataset::find_object)
      .def("__eq__", [](const NormDataset& a, const NormDataset& b) { return a == b; });

  m.def(
      "load_norms",
      [](const std::filesystem::path& path, double min_freq) {
        LoadOptions options;
        options.min_production_frequency = min_freq;
        return load_norms(path, options);
      },
      py::arg("path"), py::arg("min_freq") = 2.0);
  m.def(
      "parse_norms",
      [](const std::string& text, double min_freq) {
        LoadOptions options;
        options.min_production_frequency = min_freq;
        std::istringstream in(text);
        return parse_norms(in, "<string>", options);
      },
      py::arg("text"), py::arg("min_freq") = 2.0);
  m.def(
      "filter_attributes",
      [](const NormDataset& dataset, const std::unordered_set<std::string>& vocab,
         const std::vector<std::string>& exclusions, bool strict) {
        FilterOptions options{exclusions, strict};
        return filter_attributes(dataset, vocab, options);
      },
      py::arg("dataset"), py::arg("vocab"), py::arg("exclusions") = std::vector<std::string>{},
      py::arg("strict") = false);

  // probe
  m.def(
      "f1_score",
      [](const std::vector<std::uint8_t>& predictions, const std::vector<std::uint8_t>& labels) {
        return f1_score(predictions, labels);
      },
      py::arg("predictions"), py::arg("labels"));
  m.def(
      "train_logistic",
      [](const Eigen::MatrixXd& x, const std::vector<std::uint8_t>& y, double c) {
        LogisticOptions options;
        options.inverse_regularization = c;
        const auto fit = train_logistic(x, y, options);
        py::dict out;
        out["weights"] = fit.model.weights;
        out["bias"] = fit.model.bias;
        out["constant_label"] = fit.model.constant_label;
        out["iterations"] = fit.report.iterations;
        out["converged"] = fit.report.converged;
        out["gradient_norm"] = fit.report.gradient_norm;
        out["objective_trace"] = fit.report.objective_trace;
        return out;
      },
      py::arg("x"), py::arg("y"), py::arg("C") = 1.0);
  m.def(
      "loo_predictions",
      [](const Eigen::MatrixXd& x, const std::vector<std::uint8_t>& y, double c) {
        LogisticOptions options;
        options.inverse_regularization = c;
        return loo_predictions(x, y, options);
      },
      py::arg("x"), py::arg("y"), py::arg("C") = 1.0);
  m.def(
      "loo_fit_score",
      [](const NormDataset& dataset, std::size_t attribute, const Eigen::MatrixXd& x) {
        return loo_fit_score(dataset, attribute, x);
      },
      py::arg("dataset"), py::arg("attribute"), py::arg("features"));
  m.def("median", &median);

  py::class_<KgStore>(m, "KgStore")
      .def_static("load", &KgStore::load, py::arg("paths"))
      .def_static(
          "parse",
          [](const std::string& text) {
            std::istringstream in(text);
            return KgStore::parse(in, "<string>");
          },
          py::arg("text"))
      .def_property_readonly("n_triples", [](const KgStore& s) { return s.triples().size(); })
      .def_property_readonly("n_relations", [](const KgStore& s) { return s.relations().size(); })
      .def_property_readonly("warnings", &KgStore::warnings)
      .def("describe", [](const KgStore& s, std::size_t id) { return s.relations().describe(id); })
      .def(
          "query_pair",
          [](const KgStore& s, const std::string& object, const py::object& attribute) {
            py::list out;
            for (const auto& match : s.query_pair(object, attribute_tokens(attribute))) {
              out.append(match_dict(s, match));
            }
            return out;
          },
          py::arg("object"), py::arg("attribute"))
      .def(
          "query_prompt",
          [](const KgStore& s, const py::object& prompt) {
            const auto tokens = py::isinstance<py::str>(prompt) ? tokenize(prompt.cast<std::string>())
                                                                : prompt.cast<std::vector<std::string>>();
            py::list out;
            for (const auto& word : s.query_prompt(tokens)) {
              py::list matches;
              for (const auto& match : word) matches.append(match_dict(s, match));
              out.append(matches);
            }
            return out;
          },
          py::arg("prompt"), "Per-word matches; a string prompt is tokenized first.");

  m.def(
      "run_probe",
      [](const NormDataset& dataset, const Eigen::MatrixXd& features, const KgStore* kg, std::uint64_t kg_seed,
         std::size_t kg_dim, double kg_init_range, bool kg_only, std::size_t threads) {
        if (features.rows() != static_cast<Eigen::Index>(dataset.n_objects())) {
          throw Error("features need one row per object");
        }
        std::optional<KgAugmentation> augmentation;
        if (kg) augmentation = KgAugmentation{kg, kg_seed, kg_dim, kg_init_range, kg_only};
        ProbeOptions options;
        options.threads = threads;
        FitReport report;
        {
          py::gil_scoped_release release;
          report = run_probe(dataset, [&](std::size_t) { return features; },
                             static_cast<std::size_t>(features.cols()), augmentation, options);
        }
        return report_dict(report);
      },
      py::arg("dataset"), py::arg("features"), py::arg("kg") = nullptr, py::arg("kg_seed") = 0,
      py::arg("kg_dim") = 10, py::arg("kg_init_range") = 1.0, py::arg("kg_only") = false, py::arg("threads") = 1,
      "Fit scores with one feature row per object shared by every attribute.");
  m.def(
      "parse_fit_csv", [](const std::string& text) { return report_dict(parse_fit_csv(text, "<string>")); },
      py::arg("text"));

  // data selection
  m.def(
      "is_related",
      [](const py::dict& datum, const std::string& attribute) {
        return is_related(datum_from(datum), attribute_from(attribute, 0));
      },
      py::arg("datum"), py::arg("attribute"));
  m.def(
      "select_subset",
      [](const py::list& corpus, const std::vector<std::string>& attributes, std::size_t threads) {
        std::vector<QADatum> data;
        for (const auto& item : corpus) data.push_back(datum_from(item.cast<py::dict>()));
        DeficiencySpec spec;
        for (std::size_t i = 0; i < attributes.size(); ++i) spec.attributes.push_back(attribute_from(attributes[i], i));
        const auto selection = select_subset(data, spec, {}, threads);
        py::dict out;
        out["kept"] = selection.kept;
        out["provenance"] = selection.provenance;
        out["unusable"] = selection.unusable;
        return out;
      },
      py::arg("corpus"), py::arg("attributes"), py::arg("threads") = 1,
      "Indices of corpus items related to any of the named attributes.");

  // downstream
  m.def(
      "bootstrap_linreg",
      [](const std::vector<double>& x, const std::vector<double>& y, std::uint64_t seed, std::size_t n_boot,
         double ci, std::size_t grid, const std::optional<std::vector<double>>& weights) {
        if (x.size() != y.size()) throw Error("x and y differ in length");
        if (weights && weights->size() != x.size()) throw Error("weights and x differ in length");
        std::vector<RegressionPoint> points;
        for (std::size_t i = 0; i < x.size(); ++i) points.push_back({x[i], y[i], weights ? (*weights)[i] : 1.0});
        BootstrapOptions options{n_boot, ci, grid, weights.has_value()};
        Rng rng(seed);
        const auto fit = bootstrap_linreg(points, rng, options);
        py::dict out;
        out["slope"] = fit.slope;
        out["intercept"] = fit.intercept;
        out["grid"] = fit.grid;
        out["lower"] = fit.lower;
        out["upper"] = fit.upper;
        return out;
      },
      py::arg("x"), py::arg("y"), py::arg("seed") = 0, py::arg("n_boot") = 1000, py::arg("ci") = 0.90,
      py::arg("grid") = 101, py::arg("weights") = std::nullopt);
  m.def(
      "per_attribute_accuracy",
      [](const std::string& links_jsonl) {
        const auto links = parse_links(links_jsonl, "<string>");
        std::map<std::size_t, double> out;
        for (const auto& [id, acc] : per_attribute_accuracy(links, outcomes_from_links(links))) out[id] = acc.accuracy;
        return out;
      },
      py::arg("links_jsonl"));

  m.def(
      "fusion_train",
      [](const std::string& train_jsonl, const std::string& dev_jsonl, std::size_t relations,
         std::size_t relation_dim, std::size_t hidden, std::size_t epochs, std::size_t batch_size, double lr,
         std::uint64_t seed) {
        const auto train = parse_fusion_data(train_jsonl, "<train>");
        const auto dev = parse_fusion_data(dev_jsonl, "<dev>");
        if (train.empty()) throw Error("no training examples");
        FusionConfig config{relations, relation_dim, hidden,
                            static_cast<std::size_t>(train.front().answers[0].sequence.size())};
        FusionTrainOptions options{epochs, batch_size, lr, seed};
        std::vector<EpochLog> log;
        {
          py::gil_scoped_release release;
          log = fusion_train(config, train, dev, options).epochs;
        }
        py::list out;
        for (const auto& e : log) out.append(py::make_tuple(e.epoch, e.train_loss, e.dev_accuracy));
        return out;
      },
      py::arg("train_jsonl"), py::arg("dev_jsonl"), py::arg("relations"), py::arg("relation_dim") = 30,
      py::arg("hidden") = 32, py::arg("epochs") = 4, py::arg("batch_size") = 32, py::arg("lr") = 1e-3,
      py::arg("seed") = 0, "Trains the fusion head; returns (epoch, train_loss, dev_accuracy) rows.");

  // embedding service client
  py::class_<EmbeddingClient>(m, "EmbeddingClient")
      .def(py::init([](const std::string& url, std::size_t max_batch) {
             ClientOptions options;
             options.max_batch = max_batch;
             return EmbeddingClient(url, options);
           }),
           py::arg("url"), py::arg("max_batch") = 64)
      .def(
          "embed",
          [](const EmbeddingClient& c, const std::vector<std::string>& texts) {
            py::gil_scoped_release release;
            return c.embed(texts);
          },
          py::arg("texts"))
      .def("healthy", &EmbeddingClient::healthy, py::call_guard<py::gil_scoped_release>())
      .def_property_readonly("url", &EmbeddingClient::url);
}
