#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"
#include "logforge/checkpoint.hpp"
#include "logforge/corpus.hpp"
#include "logforge/harness.hpp"
#include "logforge/log_entry.hpp"
#include "logforge/nets.hpp"
#include "logforge/staticgen.hpp"
#include "logforge/validator.hpp"

namespace py = pybind11;
using namespace logforge;

namespace {

py::object json_to_py(const std::string& text) {
  return py::module_::import("json").attr("loads")(text);
}

CoherenceRuleSet rules_from_tuples(
    const std::vector<std::tuple<std::string, std::string, std::size_t>>& tuples) {
  CoherenceRuleSet rules;
  for (const auto& [pre, dep, support] : tuples) rules.rules.push_back({pre, dep, support});
  return rules;
}

std::vector<std::tuple<std::string, std::string, std::size_t>> rules_to_tuples(
    const CoherenceRuleSet& rules) {
  std::vector<std::tuple<std::string, std::string, std::size_t>> out;
  for (const CoherenceRule& r : rules.rules) {
    out.emplace_back(r.precondition_code, r.dependent_code, r.support);
  }
  return out;
}

LogFile file_of(const std::vector<LogEntry>& entries, const std::string& order) {
  FileOrder declared = FileOrder::kUnknown;
  if (order == "asc") declared = FileOrder::kAscending;
  if (order == "desc") declared = FileOrder::kDescending;
  return LogFile{entries, declared};
}

OrderPolicy order_policy(const std::string& order) {
  if (order == "asc") return OrderPolicy::kAscending;
  if (order == "desc") return OrderPolicy::kDescending;
  return OrderPolicy::kAuto;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Fake-log generation, validation, and detection toolkit";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InvalidTimestamp>(m, "InvalidTimestampError", PyExc_ValueError);
  py::register_exception<MissingField>(m, "MissingFieldError", PyExc_ValueError);
  py::register_exception<InsufficientData>(m, "InsufficientDataError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_FloatingPointError);
  py::register_exception<StageFailure>(m, "StageFailureError", PyExc_RuntimeError);
  py::register_exception<BaselineViolation>(m, "BaselineViolationError", PyExc_RuntimeError);

  py::class_<Timestamp>(m, "Timestamp")
      .def(py::init<>())
      .def_readwrite("year", &Timestamp::year)
      .def_readwrite("month", &Timestamp::month)
      .def_readwrite("day", &Timestamp::day)
      .def_readwrite("hour", &Timestamp::hour)
      .def_readwrite("minute", &Timestamp::minute)
      .def_readwrite("second", &Timestamp::second)
      .def("__eq__", [](const Timestamp& a, const Timestamp& b) { return a == b; })
      .def("__str__", [](const Timestamp& t) { return format_timestamp(t); })
      .def("__repr__", [](const Timestamp& t) { return "Timestamp(" + format_timestamp(t) + ")"; });

  py::class_<LogEntry>(m, "LogEntry")
      .def(py::init<>())
      .def_readwrite("timestamp", &LogEntry::timestamp)
      .def_readwrite("event_code", &LogEntry::event_code)
      .def_readwrite("description", &LogEntry::description)
      .def("__eq__", [](const LogEntry& a, const LogEntry& b) { return a == b; })
      .def("__repr__", [](const LogEntry& e) {
        return "LogEntry(" + serialize_entry(e, FieldSchema{}) + ")";
      });

  py::class_<FieldSchema>(m, "FieldSchema")
      .def(py::init<>())
      .def_readwrite("field_count", &FieldSchema::field_count)
      .def_static("load", &FieldSchema::load, py::arg("path"));

  py::class_<Vocabulary>(m, "Vocabulary")
      .def_static(
          "build",
          [](const std::vector<std::string>& lines, const std::string& mode, std::size_t min_freq) {
            return Vocabulary::build_from_lines(
                lines, mode == "char" ? TokenMode::kChar : TokenMode::kWord, min_freq);
          },
          py::arg("lines"), py::arg("mode") = "word", py::arg("min_freq") = 2)
      .def("__len__", &Vocabulary::size)
      .def("id_of", &Vocabulary::id_of, py::arg("token"))
      .def("token_of", &Vocabulary::token_of, py::arg("token_id"))
      .def(
          "encode",
          [](const Vocabulary& v, const std::string& line, std::size_t max_len) {
            const std::size_t limit = max_len ? max_len : default_max_seq_len(v.mode());
            return v.encode(line, limit).ids;
          },
          py::arg("line"), py::arg("max_len") = 0)
      .def(
          "decode",
          [](const Vocabulary& v, const std::vector<std::int32_t>& ids) {
            return v.decode(TokenSequence{ids});
          },
          py::arg("token_ids"));

  py::class_<GenTemplate>(m, "GenTemplate")
      .def_static("load", &GenTemplate::load, py::arg("path"))
      .def_static("default", &default_template)
      .def_static(
          "mine",
          [](const std::vector<LogEntry>& entries, std::size_t max_patterns,
             std::size_t code_min_count) {
            return mine_template(entries, max_patterns, code_min_count);
          },
          py::arg("entries"), py::arg("max_patterns") = 20, py::arg("code_min_count") = 5);

  m.def(
      "parse_timestamp",
      [](const std::string& text, const FieldSchema& schema) {
        return parse_timestamp(text, schema);
      },
      py::arg("text"), py::arg("schema") = FieldSchema{});
  m.def(
      "parse_entry",
      [](const std::string& line, const FieldSchema& schema) { return parse_entry(line, schema); },
      py::arg("line"), py::arg("schema") = FieldSchema{});
  m.def(
      "serialize_entry",
      [](const LogEntry& entry, const FieldSchema& schema) {
        return serialize_entry(entry, schema);
      },
      py::arg("entry"), py::arg("schema") = FieldSchema{});
  m.def("cleanse_whitespace", &cleanse_whitespace, py::arg("line"));

  m.def(
      "parse_lines",
      [](const std::vector<std::string>& lines, const FieldSchema& schema) {
        ParsedLines parsed = parse_lines(lines, schema);
        py::dict out;
        out["entries"] = parsed.entries;
        out["entry_lines"] = parsed.entry_lines;
        py::list failures;
        for (const auto& f : parsed.failures) {
          failures.append(py::make_tuple(f.line, f.reason));
        }
        out["failures"] = failures;
        return out;
      },
      py::arg("lines"), py::arg("schema") = FieldSchema{});

  m.def(
      "sample_split",
      [](const std::vector<std::string>& lines, std::size_t n_train, std::size_t n_test,
         std::uint64_t seed, const FieldSchema& schema) {
        const CorpusSplit split = sample_split(lines, schema, n_train, n_test, seed);
        py::dict out;
        out["train"] = split.train;
        out["test"] = split.test;
        out["train_lines"] = split.train_lines;
        out["test_lines"] = split.test_lines;
        return out;
      },
      py::arg("lines"), py::arg("n_train"), py::arg("n_test"), py::arg("seed") = 1,
      py::arg("schema") = FieldSchema{});

  m.def(
      "check_syntactic",
      [](const std::vector<std::string>& lines, const FieldSchema& schema) {
        return json_to_py(check_syntactic(lines, schema).to_json());
      },
      py::arg("lines"), py::arg("schema") = FieldSchema{});
  m.def(
      "check_chronology",
      [](const std::vector<LogEntry>& entries, const std::string& order) {
        const ChronologyResult r = check_chronology(file_of(entries, "unknown"), order_policy(order));
        py::dict out;
        out["ok"] = r.ok;
        out["direction"] = std::string(to_string(r.direction));
        py::list violations;
        for (const Violation& v : r.violations) violations.append(py::make_tuple(v.index, v.reason));
        out["violations"] = violations;
        return out;
      },
      py::arg("entries"), py::arg("order") = "auto");
  m.def(
      "check_coherence",
      [](const std::vector<LogEntry>& entries,
         const std::vector<std::tuple<std::string, std::string, std::size_t>>& rules,
         const std::string& order) {
        const CoherenceResult r = check_coherence(file_of(entries, order), rules_from_tuples(rules));
        py::dict out;
        out["ok"] = r.ok;
        py::list violations;
        for (const Violation& v : r.violations) violations.append(py::make_tuple(v.index, v.reason));
        out["violations"] = violations;
        return out;
      },
      py::arg("entries"), py::arg("rules"), py::arg("order") = "unknown");
  m.def(
      "mine_rules",
      [](const std::vector<std::vector<LogEntry>>& files, std::size_t min_support) {
        std::vector<LogFile> corpus;
        for (const auto& entries : files) corpus.push_back(file_of(entries, "unknown"));
        return rules_to_tuples(mine_rules(corpus, min_support));
      },
      py::arg("files"), py::arg("min_support") = 1);
  m.def(
      "validate_lines",
      [](const std::vector<std::string>& lines, const FieldSchema& schema,
         const std::string& order,
         const std::vector<std::tuple<std::string, std::string, std::size_t>>& rules) {
        return json_to_py(
            validate_lines(lines, schema, order_policy(order), rules_from_tuples(rules)).to_json());
      },
      py::arg("lines"), py::arg("schema") = FieldSchema{}, py::arg("order") = "auto",
      py::arg("rules") = std::vector<std::tuple<std::string, std::string, std::size_t>>{});

  m.def(
      "generate_static",
      [](std::size_t n, std::uint64_t seed, const std::string& order,
         const std::optional<GenTemplate>& tmpl,
         const std::vector<std::tuple<std::string, std::string, std::size_t>>& rules) {
        const LogFile file =
            generate_static(tmpl ? *tmpl : default_template(), n, seed,
                            order == "desc" ? FileOrder::kDescending : FileOrder::kAscending,
                            rules_from_tuples(rules));
        std::vector<std::string> lines;
        const FieldSchema schema;
        for (const LogEntry& e : file.entries) lines.push_back(serialize_entry(e, schema));
        return lines;
      },
      py::arg("n"), py::arg("seed") = 1, py::arg("order") = "asc",
      py::arg("template") = std::nullopt,
      py::arg("rules") = std::vector<std::tuple<std::string, std::string, std::size_t>>{});

  m.def("value_function", &value_function, py::arg("d_real"), py::arg("d_fake"));

  m.def(
      "sample_from_checkpoint",
      [](const std::string& path, std::size_t n, std::uint64_t seed, double temperature) {
        const LoadedCheckpoint loaded = load_checkpoint(path);
        if (!loaded.sequence_model) {
          throw std::runtime_error("checkpoint is a " + loaded.kind + ", need a sequence model");
        }
        NoiseSource noise(seed);
        SampleOptions opts;
        opts.max_len = default_max_seq_len(loaded.vocab.mode());
        opts.temperature = temperature;
        const auto seqs = sample_sequences(*loaded.sequence_model, noise, n, opts);
        std::vector<std::string> lines;
        for (const TokenSequence& s : seqs) lines.push_back(loaded.vocab.decode(s));
        return lines;
      },
      py::arg("path"), py::arg("n"), py::arg("seed") = 1, py::arg("temperature") = 1.0);

  m.def(
      "discriminator_scores",
      [](const std::string& path, const std::vector<std::string>& lines) {
        const LoadedCheckpoint loaded = load_checkpoint(path);
        if (!loaded.discriminator) {
          throw std::runtime_error("checkpoint is a " + loaded.kind + ", need a discriminator");
        }
        std::vector<TokenSequence> seqs;
        for (const std::string& line : lines) {
          seqs.push_back(loaded.vocab.encode(line, default_max_seq_len(loaded.vocab.mode())));
        }
        return discriminate_batch(*loaded.discriminator, seqs);
      },
      py::arg("path"), py::arg("lines"));

  m.def(
      "run_experiment",
      [](const std::string& config_path) {
        const ExperimentReport report = run_experiment(ExperimentSpec::load(config_path));
        return json_to_py(report.to_json());
      },
      py::arg("config_path"));
  m.def(
      "load_report",
      [](const std::string& out_dir) { return json_to_py(load_report(out_dir).to_json()); },
      py::arg("out_dir"));
}
