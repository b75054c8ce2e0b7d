#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>
#include <string>
#include <vector>

#include "foal/analytic_classifier.hpp"
#include "foal/cli.hpp"
#include "foal/errors.hpp"
#include "foal/feature_pipeline.hpp"
#include "foal/io_formats.hpp"
#include "foal/metrics.hpp"
#include "foal/stream_harness.hpp"
#include "foal/synthetic.hpp"

namespace py = pybind11;
using namespace foal;

namespace {

std::vector<BlockFeatureSet> to_samples(const std::vector<RowMatrixF>& blocks) {
  std::vector<BlockFeatureSet> out;
  out.reserve(blocks.size());
  for (const auto& b : blocks) out.emplace_back(b);
  return out;
}

EncoderConfig encoder_from(bool fusion, std::shared_ptr<const ProjectionSpec> projection) {
  EncoderConfig c;
  c.fusion_enabled = fusion;
  c.smooth_projection_enabled = projection != nullptr;
  c.projection = std::move(projection);
  return c;
}

py::dict header_dict(const FeatureHeader& h) {
  py::dict d;
  d["sample_count"] = h.sample_count;
  d["block_count"] = h.block_count;
  d["block_dim"] = h.block_dim;
  d["labeled"] = h.labeled;
  return d;
}

}  // namespace

PYBIND11_MODULE(_foal, m) {
  m.doc() = "Forward-only online analytic learning: frozen encoder, recursive least-squares classifier, OCIL metrics.";

  auto base = py::register_exception<Error>(m, "FoalError", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<ManifestError>(m, "ManifestError", base.ptr());

  // -- feature pipeline
  py::class_<ProjectionSpec, std::shared_ptr<ProjectionSpec>>(m, "ProjectionSpec")
      .def_property_readonly("seed", &ProjectionSpec::seed)
      .def_property_readonly("input_dim", &ProjectionSpec::input_dim)
      .def_property_readonly("output_dim", &ProjectionSpec::output_dim)
      .def_property_readonly("weights", [](const ProjectionSpec& p) { return p.weights(); })
      .def_static("from_weights", [](RowMatrixF w) { return std::make_shared<ProjectionSpec>(ProjectionSpec::from_weights(std::move(w))); });

  m.def("init_projection",
        [](std::uint64_t seed, Eigen::Index e, Eigen::Index d) {
          return std::make_shared<ProjectionSpec>(init_projection(seed, e, d));
        },
        py::arg("seed"), py::arg("input_dim"), py::arg("output_dim"));

  m.def("fuse_blocks",
        [](RowMatrixF blocks, bool fusion) {
          return Eigen::VectorXf(fuse_blocks(BlockFeatureSet(std::move(blocks)), encoder_from(fusion, nullptr)));
        },
        py::arg("blocks"), py::arg("fusion") = true);

  m.def("smooth_project",
        [](const Eigen::VectorXf& fused, std::shared_ptr<const ProjectionSpec> spec, bool enabled) {
          return Eigen::VectorXf(smooth_project(fused, spec.get(), enabled));
        },
        py::arg("fused"), py::arg("projection"), py::arg("enabled") = true);

  m.def("encode_batch",
        [](const std::vector<RowMatrixF>& samples, bool fusion, std::shared_ptr<const ProjectionSpec> projection) {
          const auto s = to_samples(samples);
          return encode_batch(s, encoder_from(fusion, std::move(projection)));
        },
        py::arg("samples"), py::arg("fusion") = true, py::arg("projection") = nullptr,
        "Encode a list of (n, E) block arrays. Passing projection=None disables smooth projection.");

  // -- analytic classifier
  py::class_<AnalyticClassifier>(m, "AnalyticClassifier")
      .def(py::init<Eigen::Index, double>(), py::arg("dim"), py::arg("gamma") = 1.0)
      .def("expand_classes", [](AnalyticClassifier& c, const std::vector<ClassId>& ids) { c.expand_classes(ids); })
      .def("update",
           [](AnalyticClassifier& c, const Eigen::MatrixXd& x, const std::vector<ClassId>& labels) {
             c.update(x, labels);
           },
           py::arg("x"), py::arg("labels"))
      .def("predict",
           [](const AnalyticClassifier& c, const Eigen::MatrixXd& x) {
             auto p = c.predict(x);
             return py::make_tuple(p.labels, p.logits);
           })
      .def("weight_column_norms",
           [](const AnalyticClassifier& c) {
             std::vector<std::pair<ClassId, double>> out;
             for (const auto& n : c.weight_column_norms()) out.emplace_back(n.class_id, n.norm);
             return out;
           })
      .def("canonical_weights", &AnalyticClassifier::canonical_weights)
      .def("copy", [](const AnalyticClassifier& c) { return c; })
      .def("save", [](const AnalyticClassifier& c, const std::filesystem::path& p) { save_classifier(c, p); })
      .def_static("load", &load_classifier)
      .def_property_readonly("dim", &AnalyticClassifier::dim)
      .def_property_readonly("gamma", &AnalyticClassifier::gamma)
      .def_property_readonly("class_ids", &AnalyticClassifier::class_ids)
      .def_property_readonly("samples_seen", &AnalyticClassifier::samples_seen)
      .def_property_readonly("weights", &AnalyticClassifier::weights)
      .def_property_readonly("autocorrelation", &AnalyticClassifier::autocorrelation);

  m.def("closed_form",
        [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double gamma) { return closed_form(x, y, gamma); },
        py::arg("x"), py::arg("y"), py::arg("gamma"));
  m.def("one_hot", [](const std::vector<ClassId>& labels, const std::vector<ClassId>& ids) { return one_hot(labels, ids); });

  // -- metrics
  py::class_<AccuracyMatrix>(m, "AccuracyMatrix")
      .def(py::init<std::size_t>())
      .def_property_readonly("tasks", &AccuracyMatrix::tasks)
      .def("set", &AccuracyMatrix::set)
      .def("at", &AccuracyMatrix::at)
      .def("row", &AccuracyMatrix::row);
  m.def("average_accuracy", &average_accuracy, py::arg("acc"), py::arg("i"));
  m.def("forgetting",
        [](const AccuracyMatrix& acc, std::size_t i) {
          auto f = forgetting(acc, i);
          return py::make_tuple(f.mean, f.per_task);
        },
        py::arg("acc"), py::arg("i"));

  // -- io
  m.def("write_features",
        [](const std::filesystem::path& path, const std::vector<std::pair<ClassId, RowMatrixF>>& samples,
           std::uint32_t n, std::uint32_t e, bool labeled) {
          FeatureWriter w(path, n, e, labeled);
          for (const auto& [label, blocks] : samples) w.write(label, BlockFeatureSet(blocks));
          w.finish();
        },
        py::arg("path"), py::arg("samples"), py::arg("block_count"), py::arg("block_dim"), py::arg("labeled") = true);
  m.def("read_feature_header", [](const std::filesystem::path& p) { return header_dict(read_feature_header(p)); });
  m.def("read_features",
        [](const std::filesystem::path& p) {
          FeatureReader r(p);
          py::list out;
          while (auto s = r.next()) out.append(py::make_tuple(s->label, s->features.blocks()));
          return py::make_tuple(header_dict(r.header()), out);
        },
        "Read a whole feature file: (header, [(label, blocks)]).");
  m.def("validate_manifest", [](const std::filesystem::path& p) { return parse_manifest(p).tasks.size(); },
        "Parse and validate a manifest; returns the task count.");

  // -- harness
  m.def("run_experiment",
        [](const std::filesystem::path& manifest, double gamma, std::uint32_t proj_dim, std::uint64_t seed,
           std::uint32_t batch_size, bool fusion, bool smooth_projection) {
          RunConfig c;
          c.gamma = gamma;
          c.projection_dim = proj_dim;
          c.seed = seed;
          c.batch_size = batch_size;
          c.fusion_enabled = fusion;
          c.smooth_projection_enabled = smooth_projection;
          py::gil_scoped_release release;
          auto r = run_experiment(parse_manifest(manifest), c);
          return std::make_pair(serialize_results({r.report, r.accuracy}), std::move(r.classifier));
        },
        py::arg("manifest"), py::arg("gamma") = 1.0, py::arg("proj_dim") = 1000, py::arg("seed") = 0,
        py::arg("batch_size") = 10, py::arg("fusion") = true, py::arg("smooth_projection") = true,
        "Returns (results JSON text, trained classifier).");

  m.def("make_synthetic",
        [](const std::filesystem::path& out_dir, std::uint32_t tasks, std::uint32_t classes_per_task,
           std::uint32_t samples_per_class, std::uint32_t test_samples_per_class, std::uint32_t block_count,
           std::uint32_t block_dim, std::uint64_t seed) {
          SyntheticSpec s{tasks, classes_per_task, samples_per_class, test_samples_per_class, block_count, block_dim, seed};
          make_synthetic(s, out_dir);
          return out_dir / "manifest.json";
        },
        py::arg("out_dir"), py::arg("tasks") = 5, py::arg("classes_per_task") = 4, py::arg("samples_per_class") = 50,
        py::arg("test_samples_per_class") = 20, py::arg("block_count") = 4, py::arg("block_dim") = 32,
        py::arg("seed") = 0);

  m.def("cli",
        [](std::vector<std::string> args) {
          args.insert(args.begin(), "foal");
          std::vector<const char*> argv;
          for (const auto& a : args) argv.push_back(a.c_str());
          std::ostringstream out, err;
          const int code = foal::cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
          return py::make_tuple(code, out.str(), err.str());
        },
        "Run a foal subcommand in-process: returns (exit_code, stdout, stderr).");
}
