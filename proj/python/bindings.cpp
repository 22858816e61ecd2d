#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "dmn/architectures.hpp"
#include "dmn/datasets.hpp"
#include "dmn/framework.hpp"
#include "dmn/morphology.hpp"
#include "dmn/nn.hpp"

namespace py = pybind11;
using namespace dmn;
using classical::CenterPolicy;
using classical::ReconstructionKind;
using classical::StructuringElement;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// 2-D arrays are single-channel images; 3-D arrays are (channels, height, width).
Tensor to_tensor(const Array& a) {
  if (a.ndim() != 2 && a.ndim() != 3) throw py::value_error("expected a 2-D or 3-D array");
  const bool planar = a.ndim() == 2;
  const Shape shape{planar ? 1 : static_cast<std::size_t>(a.shape(0)),
                    static_cast<std::size_t>(a.shape(planar ? 0 : 1)),
                    static_cast<std::size_t>(a.shape(planar ? 1 : 2))};
  if (shape.size() == 0) throw py::value_error("array must be non-empty");
  return Tensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t, bool planar) {
  std::vector<py::ssize_t> shape;
  if (!planar || t.channels() != 1) shape.push_back(static_cast<py::ssize_t>(t.channels()));
  shape.push_back(static_cast<py::ssize_t>(t.height()));
  shape.push_back(static_cast<py::ssize_t>(t.width()));
  Array out(shape);
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

template <typename Op>
auto image_op(Op op) {
  return [op](const Array& image, const StructuringElement& se, CenterPolicy policy) {
    return to_array(op(to_tensor(image), se, policy), image.ndim() == 2);
  };
}

py::list samples_to_list(const std::vector<Sample>& samples) {
  py::list out;
  for (const auto& s : samples) out.append(py::make_tuple(to_array(s.image, true), s.label));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Learnable mathematical morphology on a small C++ core";

  py::enum_<CenterPolicy>(m, "CenterPolicy")
      .value("include_center", CenterPolicy::include_center)
      .value("mask_only", CenterPolicy::mask_only);
  py::enum_<ReconstructionKind>(m, "ReconstructionKind")
      .value("by_erosion", ReconstructionKind::by_erosion)
      .value("by_dilation", ReconstructionKind::by_dilation);
  py::enum_<MorphDirection>(m, "MorphDirection")
      .value("erosion", MorphDirection::erosion)
      .value("dilation", MorphDirection::dilation);

  py::class_<StructuringElement>(m, "StructuringElement")
      .def(py::init([](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& mask) {
             if (mask.ndim() != 2) throw py::value_error("expected a 2-D mask");
             return StructuringElement(static_cast<std::size_t>(mask.shape(0)),
                                       static_cast<std::size_t>(mask.shape(1)),
                                       std::vector<std::uint8_t>(mask.data(), mask.data() + mask.size()));
           }),
           py::arg("mask"))
      .def_property_readonly("rows", &StructuringElement::rows)
      .def_property_readonly("cols", &StructuringElement::cols)
      .def_property_readonly("count", &StructuringElement::count)
      .def_property_readonly("mask",
                             [](const StructuringElement& se) {
                               py::array_t<std::uint8_t> out({se.rows(), se.cols()});
                               auto w = out.mutable_unchecked<2>();
                               for (std::size_t r = 0; r < se.rows(); ++r)
                                 for (std::size_t c = 0; c < se.cols(); ++c)
                                   w(r, c) = se.active(r, c) ? 1 : 0;
                               return out;
                             })
      .def("to_ascii", &StructuringElement::to_ascii)
      .def("__repr__", [](const StructuringElement& se) {
        return "<StructuringElement " + std::to_string(se.rows()) + "x" +
               std::to_string(se.cols()) + ", " + std::to_string(se.count()) + " cells>";
      });

  m.def("make_se",
        [](const std::string& shape, std::size_t size) {
          return classical::make_se(classical::parse_se_shape(shape), size);
        },
        py::arg("shape"), py::arg("size"));
  m.def("make_rectangle", &classical::make_rectangle, py::arg("rows"), py::arg("cols"));
  m.def("parse_se_ascii", [](const std::string& text) { return classical::parse_se_ascii(text); },
        py::arg("text"));

  const auto policy = py::arg("policy") = CenterPolicy::include_center;
  m.def("erode", image_op([](const Tensor& x, const StructuringElement& se, CenterPolicy p) {
          return classical::erode(x, se, p);
        }), py::arg("image"), py::arg("se"), policy);
  m.def("dilate", image_op([](const Tensor& x, const StructuringElement& se, CenterPolicy p) {
          return classical::dilate(x, se, p);
        }), py::arg("image"), py::arg("se"), policy);
  m.def("opening", image_op([](const Tensor& x, const StructuringElement& se, CenterPolicy p) {
          return classical::opening(x, se, p);
        }), py::arg("image"), py::arg("se"), policy);
  m.def("closing", image_op([](const Tensor& x, const StructuringElement& se, CenterPolicy p) {
          return classical::closing(x, se, p);
        }), py::arg("image"), py::arg("se"), policy);
  m.def("white_tophat", image_op([](const Tensor& x, const StructuringElement& se, CenterPolicy p) {
          return classical::white_tophat(x, se, p);
        }), py::arg("image"), py::arg("se"), policy);
  m.def("black_tophat", image_op([](const Tensor& x, const StructuringElement& se, CenterPolicy p) {
          return classical::black_tophat(x, se, p);
        }), py::arg("image"), py::arg("se"), policy);
  m.def(
      "reconstruct",
      [](ReconstructionKind kind, const Array& image, const StructuringElement& se,
         const StructuringElement& elementary, CenterPolicy p) {
        return to_array(classical::reconstruct(kind, to_tensor(image), se, elementary, p),
                        image.ndim() == 2);
      },
      py::arg("kind"), py::arg("image"), py::arg("se"),
      py::arg("elementary") = classical::make_se(classical::SeShape::cross, 3), policy);
  m.def(
      "reconstruct_approx",
      [](ReconstructionKind kind, const Array& image, const StructuringElement& se,
         const StructuringElement& se_prime, CenterPolicy p) {
        return to_array(classical::reconstruct_approx(kind, to_tensor(image), se, se_prime, p),
                        image.ndim() == 2);
      },
      py::arg("kind"), py::arg("image"), py::arg("se"), py::arg("se_prime"), policy);

  m.def(
      "framework_morph",
      [](MorphDirection direction, const std::vector<std::uint32_t>& active, std::size_t side,
         const Array& image, std::size_t stride, std::size_t padding) {
        const auto r = framework_morph(direction, BinaryBank(side, active), stride, padding,
                                       to_tensor(image));
        return to_array(r.output, image.ndim() == 2);
      },
      py::arg("direction"), py::arg("active"), py::arg("side"), py::arg("image"),
      py::arg("stride") = 1, py::arg("padding") = 0,
      "Binarized depthwise morphology; active[f] is the one-hot cell of filter f.");
  m.def(
      "recover_se",
      [](const std::vector<std::uint32_t>& active, std::size_t side) {
        return recover_se(BinaryBank(side, active));
      },
      py::arg("active"), py::arg("side"));
  m.def(
      "binarize_bank",
      [](const Array& weights, std::size_t side) {
        return binarize_bank(std::span<const double>(weights.data(), weights.size()), side).active();
      },
      py::arg("weights"), py::arg("side"));
  m.def("dilate_se_for_reconstruction", &dilate_se_for_reconstruction, py::arg("se"));

  py::class_<Network>(m, "Network")
      .def_property_readonly("name", &Network::name)
      .def_property_readonly("classes", &Network::classes)
      .def_property_readonly("input_shape",
                             [](const Network& n) {
                               const Shape s = n.input_shape();
                               return py::make_tuple(s.channels, s.height, s.width);
                             })
      .def("initialize", &Network::initialize, py::arg("seed"))
      .def("parameter_count", &Network::parameter_count)
      .def("forward",
           [](Network& n, const Array& image) {
             Tensor x = to_tensor(image);
             if (x.shape() != n.input_shape()) {
               throw py::value_error("input shape " + x.shape().str() + " does not match " +
                                     n.input_shape().str());
             }
             return n.forward(x);
           },
           py::arg("image"))
      .def("gradcheck",
           [](Network& n, const Array& image, std::size_t label, double epsilon,
              std::size_t max_entries, std::uint64_t seed) {
             const auto r = gradcheck(n, to_tensor(image), label, epsilon, max_entries, seed);
             py::dict groups;
             for (const auto& g : r.groups) groups[py::str(g.name)] = g.max_rel_error;
             return groups;
           },
           py::arg("image"), py::arg("label"), py::arg("epsilon") = 1e-5,
           py::arg("max_entries") = 16, py::arg("seed") = 0,
           "Worst finite-difference relative error per parameter.");

  m.def("architecture_names", &architecture_names);
  m.def(
      "build_network",
      [](const std::string& name, std::size_t classes, std::size_t in_channels,
         std::size_t input_size) {
        BuildOptions o;
        o.classes = classes;
        o.in_channels = in_channels;
        o.input_size = input_size;
        return build_network(name, o);
      },
      py::arg("name"), py::arg("classes") = 2, py::arg("in_channels") = 1,
      py::arg("input_size") = 224);

  m.def("gen_squares", [](std::uint64_t seed, std::size_t size) {
    return samples_to_list(gen_squares(seed, size));
  }, py::arg("seed"), py::arg("size") = 224, "List of (image, label) pairs.");
  m.def("gen_rectangles", [](std::uint64_t seed, std::size_t size) {
    return samples_to_list(gen_rectangles(seed, size));
  }, py::arg("seed"), py::arg("size") = 224, "List of (image, label) pairs.");
  m.def("decode_netpbm", [](const py::bytes& data) {
    return to_array(decode_netpbm(std::string(data), "<bytes>"), true);
  }, py::arg("data"));
  m.def("encode_netpbm", [](const Array& image, unsigned maxval) {
    return py::bytes(encode_netpbm(to_tensor(image), maxval));
  }, py::arg("image"), py::arg("maxval") = 255);
}
