#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cli.hpp"
#include "encmap/distance.hpp"
#include "encmap/embedding_io.hpp"
#include "encmap/error.hpp"
#include "encmap/projection.hpp"
#include "encmap/qre.hpp"
#include "encmap/spectral.hpp"
#include "encmap/synthetic.hpp"

namespace py = pybind11;
using namespace encmap;

PYBIND11_MODULE(_encmap, m) {
  m.doc() = "Spectral QRE features, distances and maps for sentence encoders";

  // Leaked on purpose: the type must outlive every translated exception.
  static PyObject* error_type = py::exception<Error>(m, "EncmapError", PyExc_RuntimeError).inc_ref().ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object instance = py::reinterpret_borrow<py::object>(error_type)(e.what());
      instance.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(error_type, instance.ptr());
    }
  });

  m.attr("DEFAULT_EPSILON") = kDefaultEpsilon;
  m.attr("DEFAULT_RANK_TOLERANCE") = kDefaultRankTolerance;

  py::class_<EmbeddingMatrix>(m, "EmbeddingMatrix")
      .def(py::init<std::string, Eigen::MatrixXd, bool>(), py::arg("encoder_id"), py::arg("values"),
           py::arg("normalized") = false)
      .def_property_readonly("encoder_id", &EmbeddingMatrix::encoder_id)
      .def_property_readonly("values", &EmbeddingMatrix::values)
      .def_property_readonly("normalized", &EmbeddingMatrix::normalized)
      .def_property_readonly("shape", [](const EmbeddingMatrix& e) { return py::make_tuple(e.n_rows(), e.n_cols()); });

  py::class_<DensitySpectrum>(m, "DensitySpectrum")
      .def_readonly("encoder_id", &DensitySpectrum::encoder_id)
      .def_readonly("eigenvalues", &DensitySpectrum::eigenvalues)
      .def_readonly("eigenvectors", &DensitySpectrum::eigenvectors)
      .def_readonly("rank_tolerance", &DensitySpectrum::rank_tolerance)
      .def_readonly("normalized", &DensitySpectrum::normalized)
      .def_property_readonly("rank", &DensitySpectrum::rank)
      .def_property_readonly("ambient_dim", &DensitySpectrum::ambient_dim);

  py::class_<FeatureVector>(m, "FeatureVector")
      .def_readonly("encoder_id", &FeatureVector::encoder_id)
      .def_readonly("values", &FeatureVector::values)
      .def_readonly("qre_total", &FeatureVector::qre_total)
      .def_property_readonly("epsilon", &FeatureVector::epsilon)
      .def_property_readonly("normalized", [](const FeatureVector& f) { return f.provenance.normalized; });

  py::class_<DistanceMatrix>(m, "DistanceMatrix")
      .def(py::init<std::vector<std::string>, Eigen::MatrixXd>(), py::arg("ids"), py::arg("values"))
      .def_property_readonly("ids", &DistanceMatrix::ids)
      .def_property_readonly("values", &DistanceMatrix::values);

  py::class_<Dendrogram>(m, "Dendrogram")
      .def("leaf_order", &Dendrogram::leaf_order)
      .def("cut", &Dendrogram::cut, py::arg("clusters"))
      .def("to_newick", &Dendrogram::to_newick);

  py::class_<MapLayout>(m, "MapLayout")
      .def_readonly("ids", &MapLayout::ids)
      .def_readonly("coords", &MapLayout::coords)
      .def_readonly("kl_divergence", &MapLayout::kl_divergence)
      .def_readonly("kl_history", &MapLayout::kl_history);

  m.def("read_embedding_matrix", &read_embedding_matrix, py::arg("path"));
  m.def("write_embedding_matrix", &write_embedding_matrix, py::arg("matrix"), py::arg("path"));
  m.def("l2_normalize_rows", &l2_normalize_rows, py::arg("matrix"));

  m.def("compute_spectrum", &compute_spectrum, py::arg("matrix"), py::arg("rank_tol") = kDefaultRankTolerance);
  m.def("read_spectrum", &read_spectrum, py::arg("path"));
  m.def("write_spectrum", &write_spectrum, py::arg("spectrum"), py::arg("path"));
  m.def("von_neumann_entropy", &von_neumann_entropy, py::arg("spectrum"));

  m.def(
      "qre", [](const DensitySpectrum& rho, const DensitySpectrum& sigma, double eps) { return qre(rho, sigma, eps).total; },
      py::arg("rho"), py::arg("sigma"), py::arg("epsilon") = kDefaultEpsilon);
  m.def("unit_base_spectrum", &unit_base_spectrum, py::arg("n"));
  m.def("feature_vector", &feature_vector, py::arg("sigma"), py::arg("epsilon") = kDefaultEpsilon);
  m.def("closed_form_qre_total", &closed_form_qre_total, py::arg("sigma"), py::arg("epsilon") = kDefaultEpsilon);
  m.def("read_feature_vector", &read_feature_vector, py::arg("path"));
  m.def("write_feature_vector", &write_feature_vector, py::arg("features"), py::arg("path"));

  m.def(
      "pairwise_distances",
      [](const std::vector<FeatureVector>& v, bool force) { return pairwise_distances(v, force); },
      py::arg("vectors"), py::arg("allow_mixed_provenance") = false);
  m.def(
      "nearest_neighbors",
      [](const DistanceMatrix& d, const std::string& target, Eigen::Index k) {
        std::vector<std::pair<std::string, double>> out;
        for (const auto& n : nearest_neighbors(d, target, k)) out.emplace_back(n.encoder_id, n.distance);
        return out;
      },
      py::arg("distances"), py::arg("target"), py::arg("k") = 5);
  m.def(
      "hierarchical_cluster",
      [](const DistanceMatrix& d, const std::string& linkage) { return hierarchical_cluster(d, parse_linkage(linkage)); },
      py::arg("distances"), py::arg("linkage") = "average");

  m.def(
      "tsne",
      [](const DistanceMatrix& d, double perplexity, int iterations, double learning_rate, std::uint64_t seed) {
        TsneParams p;
        p.perplexity = perplexity;
        p.iterations = iterations;
        p.learning_rate = learning_rate;
        p.seed = seed;
        return tsne(d, p);
      },
      py::arg("distances"), py::arg("perplexity") = 30.0, py::arg("iterations") = 1000,
      py::arg("learning_rate") = 200.0, py::arg("seed") = 0);

  m.def("base_matrix", &base_matrix, py::arg("n"));
  m.def("perturb", &perturb, py::arg("matrix"), py::arg("sigma2"), py::arg("noise_scale") = 0.5, py::arg("seed") = 0);

  m.def(
      "run_cli", [](const std::vector<std::string>& args) { return cli::run(args); }, py::arg("args"),
      "Run the encmap command line with the given arguments; returns the exit code.");
}
