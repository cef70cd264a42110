#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "psnis/psnis.hpp"

namespace py = pybind11;
using namespace psnis;

namespace {

using ImageArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

ImageGrid to_grid(const ImageArray& a) {
  if (a.ndim() != 2) throw InvalidArgument("expected a 2-D image array");
  const auto h = static_cast<int>(a.shape(0));
  const auto w = static_cast<int>(a.shape(1));
  return ImageGrid(w, h, std::vector<double>(a.data(), a.data() + a.size()));
}

py::array_t<double> to_array(const ImageGrid& g) {
  py::array_t<double> out({g.height(), g.width()});
  std::copy(g.pixels().begin(), g.pixels().end(), out.mutable_data());
  return out;
}

std::vector<std::int64_t> to_counts(const py::array_t<double, py::array::forcecast>& y) {
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(y.size()));
  for (py::ssize_t i = 0; i < y.size(); ++i) {
    const double v = y.data()[i];
    if (v != std::floor(v) || v < 0.0) throw InvalidArgument("counts must be nonnegative integers");
    out.push_back(static_cast<std::int64_t>(v));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_psnis, m) {
  m.doc() = "Poisson denoising with a clustered patch prior and self-normalized importance sampling";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_OSError);
  py::register_exception<ModelFormatError>(m, "ModelFormatError", PyExc_ValueError);
  py::register_exception<ModelDegenerate>(m, "ModelDegenerate", PyExc_RuntimeError);

  py::class_<PriorModel>(m, "PriorModel")
      .def_property_readonly("patch_size", &PriorModel::patch_size)
      .def_property_readonly("k", &PriorModel::k_count)
      .def_property_readonly("dim", &PriorModel::dim)
      .def_property_readonly("training_seed", &PriorModel::training_seed)
      .def_property_readonly("epsilon_ridge", &PriorModel::epsilon_ridge)
      .def_property_readonly("cluster_sizes",
                             [](const PriorModel& p) {
                               std::vector<Eigen::Index> out;
                               for (const auto& c : p.clusters()) out.push_back(c.size());
                               return out;
                             })
      .def("mean", [](const PriorModel& p, int k) { return Vector(p.cluster(k).mean()); })
      .def("covariance", [](const PriorModel& p, int k) { return Matrix(p.cluster(k).covariance()); })
      .def(
          "members",
          [](const PriorModel& p, int k) { return RowMatrix(p.cluster(k).members().transpose()); },
          "Member patches of cluster k, one per row.")
      .def("save", [](const PriorModel& p, const std::filesystem::path& path) { save_model(path, p); })
      .def_static("load", &load_model)
      .def("to_bytes",
           [](const PriorModel& p) {
             const auto b = serialize_model(p);
             return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
           })
      .def_static("from_bytes", [](const py::bytes& b) {
        const std::string s = b;
        return deserialize_model(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
      });

  m.def(
      "poisson_loglik",
      [](const py::array_t<double, py::array::forcecast>& y, const Vector& x, double floor) {
        return poisson_loglik(to_counts(y), x, floor);
      },
      py::arg("counts"), py::arg("intensities"), py::arg("epsilon_floor") = kDefaultEpsilonFloor,
      "ln P(counts | intensities) for independent Poisson pixels.");

  m.def(
      "normalize_weights",
      [](const std::vector<double>& lw) { return normalize_weights(lw); }, py::arg("log_weights"));
  m.def(
      "effective_sample_size",
      [](const std::vector<double>& lw) { return effective_sample_size(lw); }, py::arg("log_weights"));
  m.def(
      "snis_estimate",
      [](const std::vector<double>& lw, const RowMatrix& payloads) {
        return snis_estimate_columns(lw, payloads.transpose());
      },
      py::arg("log_weights"), py::arg("payloads"),
      "Self-normalized weighted mean of the payload rows.");

  m.def(
      "scale_to_peak", [](const ImageArray& img, double peak) { return to_array(scale_to_peak(to_grid(img), peak)); },
      py::arg("image"), py::arg("peak"));
  m.def(
      "sample_poisson_image",
      [](const ImageArray& img, std::uint64_t seed) { return to_array(sample_poisson_image(to_grid(img), seed)); },
      py::arg("image"), py::arg("seed"));
  m.def(
      "extract_patches",
      [](const ImageArray& img, int patch_size, int stride) {
        const auto patches = extract_patches(to_grid(img), patch_size, stride);
        RowMatrix values(static_cast<Eigen::Index>(patches.size()), patch_size * patch_size);
        Eigen::Matrix<int, Eigen::Dynamic, 2, Eigen::RowMajor> pos(static_cast<Eigen::Index>(patches.size()), 2);
        for (std::size_t i = 0; i < patches.size(); ++i) {
          values.row(static_cast<Eigen::Index>(i)) = patches[i].values.transpose();
          pos(static_cast<Eigen::Index>(i), 0) = patches[i].row;
          pos(static_cast<Eigen::Index>(i), 1) = patches[i].col;
        }
        return py::make_tuple(values, pos);
      },
      py::arg("image"), py::arg("patch_size"), py::arg("stride"),
      "Returns (patches, positions): one flattened patch per row and its top-left (row, col).");

  m.def(
      "learn_prior",
      [](const RowMatrix& patches, int patch_size, int k, int cem_iters, std::uint64_t seed,
         double epsilon_ridge, int workers) {
        TrainingSet train;
        train.patch_size = patch_size;
        train.source_count = 1;
        train.patches = patches.transpose();
        LearnOptions opt;
        opt.k = k;
        opt.cem_iters = cem_iters;
        opt.seed = seed;
        opt.epsilon_ridge = epsilon_ridge;
        opt.workers = workers;
        py::gil_scoped_release release;
        return learn_prior(train, opt);
      },
      py::arg("patches"), py::arg("patch_size"), py::arg("k") = 20, py::arg("cem_iters") = 10,
      py::arg("seed") = 0, py::arg("epsilon_ridge") = kDefaultRidgeScale, py::arg("workers") = 1,
      "Clean training patches, one flattened patch per row, at the target peak scale.");

  m.def(
      "denoise_image",
      [](const ImageArray& noisy, const PriorModel& model, double peak, int n1, int n2, int iters,
         int stride, std::uint64_t seed, double epsilon_floor, int workers) {
        DenoiseConfig cfg;
        cfg.patch_size = model.patch_size();
        cfg.k_count = model.k_count();
        cfg.peak = peak;
        cfg.n1 = n1;
        cfg.n2 = n2;
        cfg.outer_iters = iters;
        cfg.stride = stride;
        cfg.seed = seed;
        cfg.epsilon_floor = epsilon_floor;
        cfg.workers = workers;
        const ImageGrid grid = to_grid(noisy);
        ImageGrid out;
        {
          py::gil_scoped_release release;
          out = denoise_image(grid, model, cfg);
        }
        return to_array(out);
      },
      py::arg("noisy"), py::arg("model"), py::arg("peak"), py::arg("n1") = 300, py::arg("n2") = 30,
      py::arg("iters") = 2, py::arg("stride") = 2, py::arg("seed") = 0,
      py::arg("epsilon_floor") = kDefaultEpsilonFloor, py::arg("workers") = 1,
      "Denoised intensities at the count scale (multiply by 255/peak for display).");

  m.def(
      "psnr",
      [](const ImageArray& est, const ImageArray& ref, double data_max) {
        return psnr(to_grid(est), to_grid(ref), data_max);
      },
      py::arg("estimate"), py::arg("reference"), py::arg("data_max"));
  m.def(
      "read_image", [](const std::filesystem::path& p) { return to_array(read_image(p)); }, py::arg("path"));
}
