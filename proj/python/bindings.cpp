#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "greater/connect.hpp"
#include "greater/contextual.hpp"
#include "greater/csv.hpp"
#include "greater/error.hpp"
#include "greater/fidelity.hpp"
#include "greater/pipeline.hpp"
#include "greater/textual.hpp"

namespace py = pybind11;
using namespace greater;

namespace {

using Columns = std::vector<std::string>;

// Column specs from names: the subject column first when given, then payloads;
// names listed in `numerical` get the numerical modality.
Schema make_schema(const Columns& columns, const std::optional<std::string>& subject, const Columns& numerical) {
  Schema schema;
  for (const auto& name : columns) {
    ColumnSpec spec{name};
    if (subject && name == *subject) spec.role = Role::subject_id;
    if (std::find(numerical.begin(), numerical.end(), name) != numerical.end()) spec.modality = Modality::numerical;
    schema.push_back(spec);
  }
  return schema;
}

Schema payload_schema(const Columns& columns) { return make_schema(columns, std::nullopt, {}); }

py::dict partition_dict(const IndependencePartition& p) {
  py::dict d;
  d["independent"] = p.independent_cols;
  d["core"] = p.core_cols;
  d["method"] = p.method;
  d["resolved"] = p.resolved;
  return d;
}

Threshold parse_threshold(const py::object& value) {
  if (py::isinstance<py::str>(value)) {
    const auto s = value.cast<std::string>();
    if (s == "mean") return Threshold::mean();
    if (s == "median") return Threshold::median();
    fail(ErrorKind::parse, "threshold must be 'mean', 'median' or a number, got '" + s + "'");
  }
  return Threshold::fixed(value.cast<double>());
}

py::object json_loads(const std::string& text) { return py::module_::import("json").attr("loads")(text); }

CategoricalDistribution dist(const Columns& samples) { return CategoricalDistribution::from_samples(samples); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Relational table synthesis: parent extraction, column connection, textual encoding, fidelity.";
  m.attr("__version__") = std::string(kToolVersion);

  static py::exception<Error> error_type(m, "GreaterError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object instance = py::handle(error_type.ptr())(std::string(e.what()));
      instance.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(error_type.ptr(), instance.ptr());
    }
  });

  py::class_<Table>(m, "Table")
      .def(py::init([](const Columns& columns, const std::vector<Row>& rows, std::optional<std::string> subject,
                       const Columns& numerical) {
             return Table(make_schema(columns, subject, numerical), rows);
           }),
           py::arg("columns"), py::arg("rows"), py::arg("subject") = py::none(), py::arg("numerical") = Columns{})
      .def_property_readonly("columns", &Table::column_names)
      .def_property_readonly("payload_columns", &Table::payload_names)
      .def_property_readonly("rows", &Table::rows)
      .def_property_readonly("subject_column",
                             [](const Table& t) -> std::optional<std::string> {
                               if (auto c = t.subject_column()) return t.schema()[*c].name;
                               return std::nullopt;
                             })
      .def("column", [](const Table& t, const std::string& name) { return t.column_values(t.column_index(name)); })
      .def("__len__", &Table::num_rows)
      .def("__eq__", [](const Table& a, const Table& b) { return a == b; })
      .def("to_csv", [](const Table& t, char separator) { return format_table(t, {separator}); },
           py::arg("separator") = ',')
      .def("__repr__", [](const Table& t) {
        return "<Table " + std::to_string(t.num_rows()) + " rows x " + std::to_string(t.num_columns()) + " columns>";
      });

  m.def("read_csv",
        [](const std::filesystem::path& path, const Columns& columns, std::optional<std::string> subject,
           const Columns& numerical, char separator) {
          return load_csv(path, make_schema(columns, subject, numerical), {separator});
        },
        py::arg("path"), py::arg("columns"), py::arg("subject") = py::none(), py::arg("numerical") = Columns{},
        py::arg("separator") = ',');
  m.def("write_csv", [](const Table& t, const std::filesystem::path& path, char separator) { write_csv(t, path, {separator}); },
        py::arg("table"), py::arg("path"), py::arg("separator") = ',');
  m.def("flatten_join", &flatten_join, py::arg("a"), py::arg("b"));
  m.def("attach_parent", &attach_parent, py::arg("child"), py::arg("parent"));

  m.def("detect_contextual",
        [](const Table& child, double threshold) {
          std::map<std::string, std::pair<double, bool>> out;
          for (const auto& c : detect_contextual(child, threshold).columns) out[c.column] = {c.fraction, c.is_contextual};
          return out;
        },
        py::arg("child"), py::arg("threshold") = kDefaultContextualThreshold,
        "Per payload column: (fraction of subjects with a constant value, is_contextual).");
  m.def("extract_parent",
        [](const Table& child, const Columns& contextual) {
          auto r = extract_parent(child, contextual);
          return py::make_tuple(r.parent, r.residual_child);
        },
        py::arg("child"), py::arg("contextual"), "Returns (parent, residual_child).");

  m.def("cramers_v",
        [](const Columns& a, const Columns& b, bool bias_corrected) { return cramers_v(a, b, {bias_corrected}); },
        py::arg("a"), py::arg("b"), py::arg("bias_corrected") = false);
  m.def("association_matrix",
        [](const Table& t, const Columns& cols, bool bias_corrected) {
          auto mat = association_matrix(t, cols, {bias_corrected});
          std::vector<std::vector<double>> values;
          for (std::size_t i = 0; i < mat.size(); ++i) values.emplace_back(mat.row(i).begin(), mat.row(i).end());
          return py::make_tuple(mat.labels(), values);
        },
        py::arg("table"), py::arg("columns"), py::arg("bias_corrected") = false, "Returns (labels, rows of V).");
  m.def("threshold_independent",
        [](const Table& t, const Columns& cols, const py::object& threshold) {
          return partition_dict(threshold_independent(association_matrix(t, cols), parse_threshold(threshold)));
        },
        py::arg("table"), py::arg("columns"), py::arg("threshold") = "mean");
  m.def("hierarchical_independent",
        [](const Table& t, const Columns& cols, std::optional<std::size_t> clusters, std::optional<double> distance) {
          Cut cut = clusters ? Cut::into_clusters(*clusters) : distance ? Cut::at_distance(*distance) : Cut::at_median_height();
          return partition_dict(hierarchical_independent(association_matrix(t, cols), cut));
        },
        py::arg("table"), py::arg("columns"), py::arg("clusters") = py::none(), py::arg("distance") = py::none());

  m.def("encode_row",
        [](const Row& values, const Columns& columns, std::optional<std::uint64_t> permute_seed, std::size_t row_index) {
          auto order = permute_seed ? OrderPolicy::permuted(*permute_seed) : OrderPolicy::natural();
          return encode_row(values, payload_schema(columns), order, row_index);
        },
        py::arg("values"), py::arg("columns"), py::arg("permute_seed") = py::none(), py::arg("row_index") = 0);
  m.def("decode_sentence",
        [](const std::string& sentence, const Columns& columns) -> Row {
          auto r = decode_sentence(sentence, payload_schema(columns));
          if (auto* rej = std::get_if<Rejection>(&r))
            throw py::value_error(std::string(to_string(rej->reason)) + ": " + rej->detail);
          return std::get<Row>(r);
        },
        py::arg("sentence"), py::arg("columns"), "Values in column order; ValueError names the rejection reason.");
  m.def("encode_table",
        [](const Table& t, std::optional<std::uint64_t> permute_seed) {
          return encode_table(t, permute_seed ? OrderPolicy::permuted(*permute_seed) : OrderPolicy::natural()).sentences;
        },
        py::arg("table"), py::arg("permute_seed") = py::none());

  m.def("ks_statistic", [](const Columns& a, const Columns& b) { return ks_statistic(dist(a), dist(b)); });
  m.def("ks_p", [](const Columns& a, const Columns& b) { return ks_p(dist(a), dist(b)); });
  m.def("w_dist", [](const Columns& a, const Columns& b) { return w_dist(dist(a), dist(b)); });
  m.def("fidelity_report",
        [](const Table& orig, const Table& syn, const std::vector<std::pair<std::string, std::string>>& pairs,
           std::size_t min_condition_rows) {
          return json_loads(to_json(fidelity_report(orig, syn, pairs, {min_condition_rows})));
        },
        py::arg("original"), py::arg("synthetic"), py::arg("pairs") = std::vector<std::pair<std::string, std::string>>{},
        py::arg("min_condition_rows") = 0, "Report as a dict; all ordered pairs when none are given.");

  py::class_<pipeline::PipelineConfig>(m, "Config")
      .def_property(
          "output_dir", [](const pipeline::PipelineConfig& c) { return c.output_dir; },
          [](pipeline::PipelineConfig& c, const std::filesystem::path& p) { c.output_dir = p; })
      .def_readwrite("seed", &pipeline::PipelineConfig::seed)
      .def("validate", &pipeline::PipelineConfig::validate)
      .def("to_dict", [](const pipeline::PipelineConfig& c) { return json_loads(pipeline::config_to_json(c)); });
  m.def("load_config", &pipeline::load_config, py::arg("path"));
  m.def("parse_config",
        [](const std::string& text, const std::filesystem::path& base) { return pipeline::parse_config(text, base); },
        py::arg("text"), py::arg("base_dir") = std::filesystem::path("."));
  m.def("run", &pipeline::run, py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def("run_stage",
        [](const pipeline::PipelineConfig& c, const std::string& stage) {
          const auto s = pipeline::parse_stage(stage);
          py::gil_scoped_release release;
          pipeline::run_stage(c, s);
        },
        py::arg("config"), py::arg("stage"));
  m.attr("STAGES") = [] {
    std::vector<std::string> names;
    for (auto s : pipeline::kStages) names.emplace_back(to_string(s));
    return names;
  }();
}
