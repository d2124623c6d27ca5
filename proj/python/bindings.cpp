#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "stereoloc/association.hpp"
#include "stereoloc/error.hpp"
#include "stereoloc/frontend.hpp"
#include "stereoloc/io.hpp"
#include "stereoloc/latency.hpp"
#include "stereoloc/pipeline.hpp"
#include "stereoloc/profiler.hpp"
#include "stereoloc/synthetic.hpp"

namespace py = pybind11;
using namespace stereoloc;

namespace {

using ImageArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

GrayImage to_image(const ImageArray& a) {
  if (a.ndim() != 2) throw Error(ErrorCode::kInvalidInput, "image must be a 2-D uint8 array");
  const auto h = static_cast<int>(a.shape(0));
  const auto w = static_cast<int>(a.shape(1));
  return GrayImage(w, h, std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
}

ImageArray to_array(const GrayImage& img) {
  ImageArray out({img.height(), img.width()});
  std::copy(img.pixels().begin(), img.pixels().end(), out.mutable_data());
  return out;
}

// Poses as (R, t) with x_cam = R x_world + t.
py::tuple pose_tuple(const Pose& p) { return py::make_tuple(p.rotation.matrix(), Vec3(p.translation)); }

Pose pose_from(const Mat3& r, const Vec3& t) { return {Rotation::from_matrix(r), t}; }

}  // namespace

PYBIND11_MODULE(_stereoloc, m) {
  m.doc() = "Stereo visual localization core";
  m.attr("__version__") = "0.1.0";

  py::register_exception<Error>(m, "StereolocError", PyExc_RuntimeError);

  m.def("se3_exp", [](const Vec6& xi) { return pose_tuple(se3_exp(xi)); }, py::arg("xi"),
        "Tangent (omega, v) to (R, t).");
  m.def("se3_log", [](const Mat3& r, const Vec3& t) { return Vec6(se3_log(pose_from(r, t))); }, py::arg("R"),
        py::arg("t"));

  py::class_<Intrinsics>(m, "Intrinsics")
      .def(py::init([](double fx, double fy, double cx, double cy, int w, int h) {
             Intrinsics k{fx, fy, cx, cy, w, h};
             k.validate();
             return k;
           }),
           py::arg("fx"), py::arg("fy"), py::arg("cx"), py::arg("cy"), py::arg("width"), py::arg("height"))
      .def_readonly("fx", &Intrinsics::fx)
      .def_readonly("fy", &Intrinsics::fy)
      .def_readonly("cx", &Intrinsics::cx)
      .def_readonly("cy", &Intrinsics::cy)
      .def_readonly("width", &Intrinsics::width)
      .def_readonly("height", &Intrinsics::height);

  py::class_<StereoRig>(m, "StereoRig")
      .def_static("rectified", &StereoRig::rectified, py::arg("intrinsics"), py::arg("baseline"))
      .def_property_readonly("baseline", &StereoRig::baseline)
      .def_readonly("left", &StereoRig::left)
      .def_readonly("right", &StereoRig::right);

  m.def(
      "project",
      [](const Mat3& r, const Vec3& t, const Intrinsics& k, const Vec3& p) -> std::optional<Vec2> {
        return project(p, pose_from(r, t), k);
      },
      py::arg("R"), py::arg("t"), py::arg("intrinsics"), py::arg("point"));
  m.def("triangulate_rectified", &triangulate_rectified, py::arg("u_left"), py::arg("u_right"), py::arg("v"),
        py::arg("rig"), py::arg("min_disparity") = 0.5);

  py::class_<FrontendConfig>(m, "FrontendConfig")
      .def(py::init<>())
      .def_readwrite("levels", &FrontendConfig::levels)
      .def_readwrite("scale_factor", &FrontendConfig::scale_factor)
      .def_readwrite("fast_threshold", &FrontendConfig::fast_threshold)
      .def_readwrite("max_features_per_level", &FrontendConfig::max_features_per_level)
      .def_readwrite("blur_sigma", &FrontendConfig::blur_sigma)
      .def_readwrite("border", &FrontendConfig::border);

  py::class_<Feature>(m, "Feature")
      .def_property_readonly("x", [](const Feature& f) { return f.keypoint.x; })
      .def_property_readonly("y", [](const Feature& f) { return f.keypoint.y; })
      .def_property_readonly("level", [](const Feature& f) { return f.keypoint.level; })
      .def_property_readonly("response", [](const Feature& f) { return f.keypoint.response; })
      .def_property_readonly("angle", [](const Feature& f) { return f.keypoint.angle; })
      .def_property_readonly("descriptor", [](const Feature& f) { return f.descriptor.hex(); });

  m.def(
      "extract_features", [](const ImageArray& img, const FrontendConfig& c) { return extract_features(to_image(img), c); },
      py::arg("image"), py::arg("config") = FrontendConfig{});
  m.def("hamming_distance", [](const std::string& a, const std::string& b) {
    return hamming_distance(Descriptor256::from_hex(a), Descriptor256::from_hex(b));
  });
  m.def("fast_candidates", [](const ImageArray& img, int threshold) {
    std::vector<std::tuple<int, int, int>> out;
    for (const auto& kp : fast_candidates(to_image(img), threshold))
      out.emplace_back(static_cast<int>(kp.x), static_cast<int>(kp.y), kp.response);
    return out;
  }, py::arg("image"), py::arg("threshold"), "(x, y, score) of every segment-test corner before suppression.");

  m.def(
      "match_stereo",
      [](const ImageArray& left, const ImageArray& right, const StereoRig& rig, const FrontendConfig& fc) {
        const auto l = extract_frame(to_image(left), fc);
        const auto r = extract_frame(to_image(right), fc);
        std::vector<py::dict> out;
        for (const auto& mp : match_stereo(l, r, rig)) {
          const auto& a = l.features[static_cast<std::size_t>(mp.index_a)].keypoint;
          const auto& b = r.features[static_cast<std::size_t>(mp.index_b)].keypoint;
          py::dict d;
          d["left"] = Vec2(a.x, a.y);
          d["right"] = Vec2(b.x, b.y);
          d["hamming"] = mp.hamming;
          d["sad"] = mp.sad;
          d["disparity"] = mp.disparity;
          out.push_back(d);
        }
        return out;
      },
      py::arg("left"), py::arg("right"), py::arg("rig"), py::arg("config") = FrontendConfig{});

  py::class_<BAProblem>(m, "BAProblem")
      .def_property_readonly("num_poses", [](const BAProblem& p) { return p.poses.size(); })
      .def_property_readonly("num_landmarks", [](const BAProblem& p) { return p.landmarks.size(); })
      .def_property_readonly("num_observations", [](const BAProblem& p) { return p.observations.size(); })
      .def("to_snapshot", [](const BAProblem& p) {
        std::ostringstream s;
        write_snapshot(s, p);
        return s.str();
      });
  m.def("read_snapshot", [](const std::string& text) {
    std::istringstream s(text);
    return read_snapshot(s);
  }, py::arg("text"));
  m.def("load_snapshot", py::overload_cast<const std::filesystem::path&>(&read_snapshot), py::arg("path"));

  py::class_<LmConfig>(m, "LmConfig")
      .def(py::init<>())
      .def_readwrite("max_iterations", &LmConfig::max_iterations)
      .def_readwrite("initial_lambda", &LmConfig::initial_lambda);

  m.def(
      "lm_optimize",
      [](const BAProblem& problem, const LmConfig& cfg) {
        const LmResult r = lm_optimize(problem, cfg);
        py::dict d;
        std::vector<py::tuple> poses;
        for (const auto& p : r.poses) poses.push_back(pose_tuple(p));
        d["poses"] = poses;
        d["landmarks"] = r.landmarks;
        d["initial_cost"] = r.report.initial_cost;
        d["final_cost"] = r.report.final_cost;
        d["iterations"] = r.report.iterations;
        d["termination"] = std::string(to_string(r.report.termination));
        d["rms_px"] = rms_reprojection(problem, r.poses, r.landmarks);
        py::dict t;
        t["JU"] = r.report.times.ju;
        t["SE"] = r.report.times.se;
        t["CFS"] = r.report.times.cfs;
        t["CC"] = r.report.times.cc;
        t["GRE"] = r.report.times.gre;
        d["times"] = t;
        return d;
      },
      py::arg("problem"), py::arg("config") = LmConfig{});

  py::class_<SceneConfig>(m, "SceneConfig")
      .def(py::init<>())
      .def_readwrite("seed", &SceneConfig::seed)
      .def_readwrite("frames", &SceneConfig::frames)
      .def_readwrite("frame_rate", &SceneConfig::frame_rate)
      .def_readwrite("landmarks", &SceneConfig::landmarks)
      .def_readwrite("baseline", &SceneConfig::baseline)
      .def_readwrite("speed", &SceneConfig::speed)
      .def_readwrite("pixel_noise", &SceneConfig::pixel_noise)
      .def_readwrite("gyro_noise", &SceneConfig::gyro_noise)
      .def_property(
          "sideways", [](const SceneConfig& c) { return c.shape == TrajectoryShape::kSideways; },
          [](SceneConfig& c, bool s) { c.shape = s ? TrajectoryShape::kSideways : TrajectoryShape::kForward; });

  py::class_<SyntheticScene>(m, "SyntheticScene")
      .def_readonly("rig", &SyntheticScene::rig)
      .def_readonly("landmarks", &SyntheticScene::landmarks)
      .def_readonly("timestamps", &SyntheticScene::timestamps)
      .def_property_readonly("poses",
                             [](const SyntheticScene& s) {
                               std::vector<py::tuple> out;
                               for (const auto& p : s.poses) out.push_back(pose_tuple(p));
                               return out;
                             })
      .def_property_readonly("num_observations", [](const SyntheticScene& s) { return s.observations.size(); })
      .def("render", [](const SyntheticScene& s, int frame, int camera) { return to_array(render_view(s, frame, camera)); },
           py::arg("frame"), py::arg("camera") = 0)
      .def("window_problem", [](const SyntheticScene& s, int first, int count) {
        return make_window_problem(s, first, count).problem;
      }, py::arg("first"), py::arg("count"));
  m.def("generate_scene", &generate_scene, py::arg("config") = SceneConfig{});
  m.def(
      "perturb",
      [](BAProblem problem, double fraction, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        perturb(problem, fraction, rng);
        return problem;
      },
      py::arg("problem"), py::arg("fraction"), py::arg("seed") = 1);

  m.def(
      "run_pipeline",
      [](const SyntheticScene& scene, bool ground_truth_tracks) {
        PipelineConfig cfg;
        cfg.initial_pose = scene.poses.front();
        const PipelineResult r = run_pipeline(
            scene, cfg, ground_truth_tracks ? FrontEndMode::kGroundTruthTracks : FrontEndMode::kImages);
        std::ostringstream traj, report;
        write_trajectory(traj, r.trajectory);
        write_stage_report(report, r.report);
        return py::make_tuple(traj.str(), report.str());
      },
      py::arg("scene"), py::arg("ground_truth_tracks") = false,
      "Returns (trajectory text, stage report text).");

  m.def(
      "perception_latency",
      [](const std::string& graph_text) {
        std::istringstream s(graph_text);
        const LatencyResult r = perception_latency(parse_task_graph(s));
        return py::make_tuple(r.latency_ms, r.critical_path);
      },
      py::arg("graph_text"), "Returns (latency_ms, critical_path).");

  m.def(
      "profile_backend",
      [](const std::vector<int>& sizes) {
        std::vector<py::dict> out;
        for (const auto& row : profile_backend(sizes)) {
          py::dict d;
          d["poses"] = row.window_poses;
          d["landmarks"] = row.landmarks;
          d["observations"] = row.observations;
          d["JU"] = row.times.ju;
          d["SE"] = row.times.se;
          d["CFS"] = row.times.cfs;
          d["CC"] = row.times.cc;
          d["GRE"] = row.times.gre;
          d["wall_time"] = row.wall_time;
          out.push_back(d);
        }
        return out;
      },
      py::arg("sizes"));
}
