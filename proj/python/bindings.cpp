#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "semirend/annotations.hpp"
#include "semirend/error.hpp"
#include "semirend/evaluation.hpp"
#include "semirend/grid.hpp"
#include "semirend/mask.hpp"
#include "semirend/pipeline.hpp"
#include "semirend/point_head.hpp"
#include "semirend/renderer.hpp"
#include "semirend/sampling.hpp"
#include "semirend/stats.hpp"
#include "semirend/synthetic.hpp"

namespace py = pybind11;
using namespace semirend;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

// (H, W) or (H, W, C) float array to a grid.
Grid2D to_grid(const DoubleArray& a) {
    if (a.ndim() != 2 && a.ndim() != 3) throw InvalidInput("grid arrays must have shape (H, W) or (H, W, C)");
    const auto h = static_cast<std::size_t>(a.shape(0)), w = static_cast<std::size_t>(a.shape(1));
    const std::size_t c = a.ndim() == 3 ? static_cast<std::size_t>(a.shape(2)) : 1;
    return Grid2D(h, w, c, std::vector<double>(a.data(), a.data() + a.size()));
}

// Single-channel grids come back as (H, W).
py::array_t<double> from_grid(const Grid2D& g) {
    std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(g.height()), static_cast<py::ssize_t>(g.width())};
    if (g.channels() != 1) shape.push_back(static_cast<py::ssize_t>(g.channels()));
    py::array_t<double> out(shape);
    std::memcpy(out.mutable_data(), g.values().data(), g.values().size() * sizeof(double));
    return out;
}

DenseMask to_dense(const ByteArray& a) {
    if (a.ndim() != 2) throw InvalidInput("masks must have shape (H, W)");
    DenseMask m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    for (std::size_t k = 0; k < m.pixels.size(); ++k) m.pixels[k] = a.data()[k] != 0;
    return m;
}

py::array_t<std::uint8_t> from_dense(const DenseMask& m) {
    py::array_t<std::uint8_t> out({static_cast<py::ssize_t>(m.height), static_cast<py::ssize_t>(m.width)});
    std::memcpy(out.mutable_data(), m.pixels.data(), m.pixels.size());
    return out;
}

py::dict rle_dict(const BinaryMask& m) {
    py::dict d;
    d["size"] = py::make_tuple(m.height(), m.width());
    d["counts"] = m.counts();
    return d;
}

BinaryMask rle_from_dict(const py::dict& d) {
    const auto size = d["size"].cast<std::vector<std::size_t>>();
    if (size.size() != 2) throw InvalidInput("RLE size must be [height, width]");
    return BinaryMask::from_counts(size[0], size[1], d["counts"].cast<std::vector<std::uint32_t>>());
}

// Instances cross the boundary in the prediction-file JSON layout.
std::vector<MaskInstance> instances_from_py(const py::object& obj, const char* where) {
    const std::string text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
    return predictions_from_json(nlohmann::json::parse(text), where);
}

py::object json_to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Adaptive point-based mask refinement and COCO-style evaluation";

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

    // Grids and sampling.
    m.def("upsample2x", [](const DoubleArray& g) { return from_grid(upsample2x(to_grid(g))); }, py::arg("grid"),
          "Bilinear 2x upsampling (align_corners=False, border clamp).");
    m.def("upsample_repeated", [](const DoubleArray& g, std::size_t steps) {
              return from_grid(upsample_repeated(to_grid(g), steps));
          },
          py::arg("grid"), py::arg("steps"));
    m.def("bilinear_sample", [](const DoubleArray& g, const DoubleArray& points) {
              if (points.ndim() != 2 || points.shape(1) != 2) throw InvalidInput("points must have shape (N, 2)");
              PointSet ps;
              for (py::ssize_t k = 0; k < points.shape(0); ++k) ps.push_back({points.at(k, 0), points.at(k, 1)});
              const ChannelVectors v = bilinear_sample(to_grid(g), ps);
              py::array_t<double> out({points.shape(0), static_cast<py::ssize_t>(v.empty() ? 0 : v[0].size())});
              for (std::size_t k = 0; k < v.size(); ++k) {
                  std::memcpy(out.mutable_data(static_cast<py::ssize_t>(k), 0), v[k].data(), v[k].size() * sizeof(double));
              }
              return out;
          },
          py::arg("grid"), py::arg("points"), "Samples at normalized (x, y) points in [0, 1]^2; returns (N, C).");
    m.def("top_uncertain_cells", [](const DoubleArray& logits, std::size_t n) {
              std::vector<std::pair<std::size_t, std::size_t>> out;
              for (const CellIndex& c : select_top_uncertain_cells(uncertainty_from_logits(to_grid(logits)), n)) {
                  out.emplace_back(c.row, c.col);
              }
              return out;
          },
          py::arg("logits"), py::arg("n"), "(row, col) of the n most uncertain cells.");

    // Point head.
    py::class_<PointHeadParams>(m, "PointHead")
        .def(py::init([](std::size_t coarse_dim, std::size_t fine_dim, std::vector<std::size_t> hidden,
                         bool reconcat_coarse, std::uint64_t seed) {
                 return PointHeadParams::initialize({coarse_dim, fine_dim, std::move(hidden), reconcat_coarse}, seed);
             }),
             py::arg("coarse_dim") = 1, py::arg("fine_dim") = 3, py::arg("hidden") = std::vector<std::size_t>{64, 64, 64},
             py::arg("reconcat_coarse") = true, py::arg("seed") = 0)
        .def_property_readonly("parameter_count", &PointHeadParams::parameter_count)
        .def_property_readonly("hidden", [](const PointHeadParams& p) { return p.layout().hidden; })
        .def("forward",
             [](const PointHeadParams& p, std::vector<double> coarse, std::vector<double> fine) {
                 return forward(p, PointFeature{std::move(coarse), std::move(fine)});
             },
             py::arg("coarse"), py::arg("fine"), "Logit for one point.")
        .def("save", [](const PointHeadParams& p, const std::string& path) { save_point_head(p, path); })
        .def_static("load", [](const std::string& path) { return load_point_head(path); })
        .def("__eq__", [](const PointHeadParams& a, const PointHeadParams& b) { return a == b; });

    m.def("train_head",
          [](const std::vector<DoubleArray>& coarse, const std::vector<DoubleArray>& features,
             const std::vector<ByteArray>& masks, std::vector<std::size_t> hidden, std::size_t points_per_instance,
             double learning_rate, std::size_t batch_size, std::size_t steps, std::size_t trajectory_rounds,
             std::size_t subdivision_steps, std::optional<std::size_t> points_per_step, std::uint64_t seed) {
              if (coarse.size() != features.size() || coarse.size() != masks.size()) {
                  throw InvalidInput("coarse, features and masks must have the same length");
              }
              std::vector<Grid2D> cg, fg;
              std::vector<DenseMask> gt;
              for (std::size_t k = 0; k < coarse.size(); ++k) {
                  cg.push_back(to_grid(coarse[k]));
                  fg.push_back(to_grid(features[k]));
                  gt.push_back(to_dense(masks[k]));
              }
              std::vector<TrainingInstance> inst;
              for (std::size_t k = 0; k < cg.size(); ++k) inst.push_back({&cg[k], &fg[k], &gt[k]});
              HeadTrainingConfig cfg;
              cfg.layout.fine_dim = fg.empty() ? 3 : fg.front().channels();
              cfg.layout.hidden = std::move(hidden);
              cfg.points_per_instance = points_per_instance;
              cfg.train = {learning_rate, batch_size, steps, seed};
              cfg.trajectory_rounds = trajectory_rounds;
              cfg.render.subdivision_steps = subdivision_steps;
              cfg.render.points_per_step = points_per_step;
              cfg.rng_seed = seed;
              std::optional<HeadTrainingResult> r;
              {
                  py::gil_scoped_release release;
                  r = train_point_head(inst, cfg);
              }
              return py::make_tuple(r->head, r->losses);
          },
          py::arg("coarse"), py::arg("features"), py::arg("masks"), py::arg("hidden") = std::vector<std::size_t>{64, 64, 64},
          py::arg("points_per_instance") = 196, py::arg("learning_rate") = 0.00025, py::arg("batch_size") = 2,
          py::arg("steps") = 5000, py::arg("trajectory_rounds") = 0, py::arg("subdivision_steps") = 5,
          py::arg("points_per_step") = py::none(), py::arg("seed") = 0,
          "Trains a point head on boundary-biased samples; returns (head, per-step losses).");

    // Rendering.
    m.def("refine",
          [](const DoubleArray& coarse, const DoubleArray& features, const PointHeadParams& head,
             std::size_t subdivision_steps, std::optional<std::size_t> points_per_step) {
              RenderTrace trace;
              const Grid2D c = to_grid(coarse), f = to_grid(features);
              Grid2D out{1, 1, 1};
              {
                  py::gil_scoped_release release;
                  out = refine(c, f, head, {subdivision_steps, points_per_step, 0.5}, &trace);
              }
              return py::make_tuple(from_grid(out), trace.head_evaluations);
          },
          py::arg("coarse"), py::arg("features"), py::arg("head"), py::arg("subdivision_steps") = 5,
          py::arg("points_per_step") = py::none(), "Adaptive subdivision; returns (logits, head evaluations).");
    m.def("binarize", [](const DoubleArray& logits, double threshold) {
              return from_dense(binarize(to_grid(logits), threshold));
          },
          py::arg("logits"), py::arg("threshold") = 0.5);

    // Mask geometry.
    m.def("rle_encode", [](const ByteArray& mask) { return rle_dict(rle_encode(to_dense(mask))); }, py::arg("mask"),
          "Column-major COCO RLE as {'size': (H, W), 'counts': [...]}.");
    m.def("rle_decode", [](const py::dict& rle) { return from_dense(rle_decode(rle_from_dict(rle))); }, py::arg("rle"));
    m.def("mask_iou", [](const ByteArray& a, const ByteArray& b) {
              return mask_iou(rle_encode(to_dense(a)), rle_encode(to_dense(b)));
          },
          py::arg("a"), py::arg("b"));
    m.def("rasterize_polygon", [](std::vector<double> xs, std::vector<double> ys, std::size_t h, std::size_t w) {
              return from_dense(rasterize_polygon(xs, ys, h, w));
          },
          py::arg("xs"), py::arg("ys"), py::arg("height"), py::arg("width"),
          "Pixels whose centers lie inside or on the polygon.");

    // Evaluation and statistics.
    m.def("evaluate",
          [](const py::object& preds, const py::object& gts, const std::string& mode,
             std::optional<std::size_t> max_detections) {
              EvalConfig cfg;
              const auto parsed = parse_mode(mode);
              if (!parsed) throw InvalidInput("mode must be 'bbox' or 'segm'");
              cfg.mode = *parsed;
              cfg.max_detections = max_detections;
              const auto p = instances_from_py(preds, "predictions"), g = instances_from_py(gts, "ground truth");
              return json_to_py(report_to_json(evaluate(p, g, cfg)));
          },
          py::arg("predictions"), py::arg("ground_truth"), py::arg("mode") = "segm",
          py::arg("max_detections") = py::none(),
          "COCO-style AP. Instances use the prediction-file layout; returns the report as a dict.");
    m.def("relative_improvement", &relative_improvement, py::arg("baseline"), py::arg("improved"));
    m.def("area_statistics", [](const py::object& instances) {
              const auto inst = instances_from_py(instances, "instances");
              return json_to_py(stats_to_json(area_statistics(inst)));
          },
          py::arg("instances"));

    // Synthetic data.
    m.def("generate_synthetic",
          [](std::size_t total, std::size_t image_size, std::size_t line_pitch, std::size_t line_width,
             double noise_sigma, std::size_t coarse_steps, std::uint64_t seed) {
              SynthConfig cfg;
              cfg.class_counts = proportional_class_counts(total);
              cfg.image_size = image_size;
              cfg.line_pitch = line_pitch;
              cfg.line_width = line_width;
              cfg.noise_sigma = noise_sigma;
              cfg.coarse_steps = coarse_steps;
              cfg.rng_seed = seed;
              const SyntheticDataset ds = generate_synthetic(cfg);
              py::list out;
              for (const SyntheticSample& s : ds.samples) {
                  py::dict d;
                  d["image_id"] = s.image_id;
                  d["class"] = std::string(class_id(s.class_id));
                  d["split"] = std::string(split_name(s.split));
                  py::array_t<std::uint16_t> img(
                      {static_cast<py::ssize_t>(s.image.height), static_cast<py::ssize_t>(s.image.width)});
                  std::memcpy(img.mutable_data(), s.image.pixels.data(), s.image.pixels.size() * sizeof(std::uint16_t));
                  d["image"] = img;
                  d["features"] = from_grid(s.features);
                  d["coarse"] = from_grid(s.coarse_logits);
                  d["mask"] = from_dense(rle_decode(s.instance.mask));
                  d["instance"] = json_to_py(predictions_to_json(std::span<const MaskInstance>(&s.instance, 1))[0]);
                  out.append(d);
              }
              return out;
          },
          py::arg("total") = 116, py::arg("image_size") = 480, py::arg("line_pitch") = 24, py::arg("line_width") = 12,
          py::arg("noise_sigma") = 0.05, py::arg("coarse_steps") = 3, py::arg("seed") = 0,
          "Seeded line-space images with one labelled defect each.");
    m.def("defect_classes", [] {
        std::vector<std::string> out;
        for (DefectClass c : kAllDefectClasses) out.emplace_back(class_id(c));
        return out;
    });
}
