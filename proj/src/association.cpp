#include "stereoloc/association.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include "stereoloc/error.hpp"

namespace stereoloc {

Rotation integrate_gyro(const std::vector<ImuSample>& samples, double t0, double t1) {
  if (!(t1 >= t0)) throw Error(ErrorCode::kInvalidInput, "integration interval is reversed");
  if (samples.empty() || samples.front().timestamp > t0 || samples.back().timestamp < t1) {
    throw Error(ErrorCode::kInsufficientData, "gyro samples do not cover the interval");
  }
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (!(samples[i].timestamp > samples[i - 1].timestamp)) {
      throw Error(ErrorCode::kInvalidInput, "gyro timestamps must be strictly increasing");
    }
  }

  auto rate_at = [&](double t) -> Vec3 {
    auto it = std::upper_bound(samples.begin(), samples.end(), t,
                               [](double v, const ImuSample& s) { return v < s.timestamp; });
    if (it == samples.begin()) return samples.front().angular_velocity;
    if (it == samples.end()) return samples.back().angular_velocity;
    const ImuSample& a = *(it - 1);
    const ImuSample& b = *it;
    const double alpha = (t - a.timestamp) / (b.timestamp - a.timestamp);
    return (1 - alpha) * a.angular_velocity + alpha * b.angular_velocity;
  };

  std::vector<double> knots{t0};
  for (const auto& s : samples) {
    if (s.timestamp > t0 && s.timestamp < t1) knots.push_back(s.timestamp);
  }
  knots.push_back(t1);

  Rotation r;
  for (std::size_t i = 1; i < knots.size(); ++i) {
    const double dt = knots[i] - knots[i - 1];
    if (dt <= 0) continue;
    r = r * Rotation::exp(rate_at(0.5 * (knots[i] + knots[i - 1])) * dt);
  }
  return r;
}

bool BandRegion::contains(const Vec2& q) const {
  if (empty) return false;
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0 ? (q - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (q - (a + t * ab)).norm() <= half_width + 1e-9;
}

BandRegion band_region(const Vec2& src_pixel, const Pose& dst_from_src, const Intrinsics& k_src,
                       const Intrinsics& k_dst, double depth_min, double depth_max, double half_width) {
  if (!(depth_min > 0) || !(depth_max >= depth_min)) {
    throw Error(ErrorCode::kInvalidInput, "depth range must satisfy 0 < min <= max");
  }
  const Vec3 ray = k_src.unproject(src_pixel);
  const Vec3 dir = dst_from_src.rotation * ray;
  const Vec3& t = dst_from_src.translation;

  // Destination depth along the ray is affine in source depth: z * dir.z + t.z.
  double lo = depth_min, hi = depth_max;
  const double floor_depth = 2 * kMinProjectionDepth;
  if (std::abs(dir.z()) < 1e-15) {
    if (!(t.z() > floor_depth)) return {};
  } else {
    const double z_cross = (floor_depth - t.z()) / dir.z();
    if (dir.z() > 0)
      lo = std::max(lo, z_cross);
    else
      hi = std::min(hi, z_cross);
    if (lo > hi) return {};
  }

  const auto pa = project_camera(lo * dir + t, k_dst);
  const auto pb = project_camera(hi * dir + t, k_dst);
  if (!pa || !pb) return {};
  BandRegion region;
  region.empty = false;
  region.a = *pa;
  region.b = *pb;
  region.half_width = half_width;
  return region;
}

int patch_sad(const GrayImage& a, const Vec2& pa, const GrayImage& b, const Vec2& pb, int window) {
  const int half = window / 2;
  const int ax = static_cast<int>(std::lround(pa.x())), ay = static_cast<int>(std::lround(pa.y()));
  const int bx = static_cast<int>(std::lround(pb.x())), by = static_cast<int>(std::lround(pb.y()));
  if (!a.inside(ax - half, ay - half) || !a.inside(ax + half, ay + half) ||
      !b.inside(bx - half, by - half) || !b.inside(bx + half, by + half)) {
    return -1;
  }
  int sad = 0;
  for (int dy = -half; dy <= half; ++dy)
    for (int dx = -half; dx <= half; ++dx) sad += std::abs(a(ax + dx, ay + dy) - b(bx + dx, by + dy));
  return sad;
}

namespace {

Vec2 position(const Feature& f) { return {f.keypoint.x, f.keypoint.y}; }

struct Best {
  int index = -1;
  int distance = std::numeric_limits<int>::max();
  int second = std::numeric_limits<int>::max();

  void offer(int idx, int d) {
    if (d < distance) {
      second = distance;
      distance = d;
      index = idx;
    } else if (d < second) {
      second = d;
    }
  }
};

}  // namespace

namespace {

// Row-wise SAD slide around `pb`. Returns the subpixel column shift and the
// SAD at the integer minimum, or nullopt if the minimum is on the slide edge
// or a window leaves the image.
std::optional<std::pair<double, int>> refine_row(const GrayImage& a, const Vec2& pa, const GrayImage& b,
                                                 const Vec2& pb, int window, int radius) {
  std::vector<int> sad(static_cast<std::size_t>(2 * radius + 1));
  for (int dx = -radius; dx <= radius; ++dx) {
    const int v = patch_sad(a, pa, b, pb + Vec2(dx, 0), window);
    if (v < 0) return std::nullopt;
    sad[static_cast<std::size_t>(dx + radius)] = v;
  }
  // Ties go to the smallest shift, then the leftmost.
  int best = radius;
  for (int i = 0; i < static_cast<int>(sad.size()); ++i) {
    const auto si = static_cast<std::size_t>(i), sb = static_cast<std::size_t>(best);
    if (sad[si] < sad[sb] || (sad[si] == sad[sb] && std::abs(i - radius) < std::abs(best - radius))) best = i;
  }
  if (radius > 0 && (best == 0 || best == 2 * radius)) return std::nullopt;
  double delta = 0;
  if (radius > 0) {
    const double l = sad[static_cast<std::size_t>(best - 1)], c = sad[static_cast<std::size_t>(best)],
                 r = sad[static_cast<std::size_t>(best + 1)];
    const double curvature = l - 2 * c + r;
    if (curvature > 0) delta = std::clamp((l - r) / (2 * curvature), -0.5, 0.5);
  }
  return std::pair{best - radius + delta, sad[static_cast<std::size_t>(best)]};
}

std::vector<MatchPair> match_impl(const FrameFeatures& src, const FrameFeatures& dst, const Pose& dst_from_src,
                                  const Intrinsics& k_src, const Intrinsics& k_dst, const MatchConfig& cfg,
                                  double half_width, bool refine) {
  const auto& sf = src.features;
  const auto& df = dst.features;
  std::vector<Best> forward(sf.size());
  std::vector<Best> reverse(df.size());

  for (std::size_t s = 0; s < sf.size(); ++s) {
    const BandRegion band = band_region(sf[s], dst_from_src, k_src, k_dst, cfg.depth_min,
                                        cfg.depth_max, half_width);
    if (band.empty) continue;
    const Vec2 lo = band.a.cwiseMin(band.b).array() - half_width;
    const Vec2 hi = band.a.cwiseMax(band.b).array() + half_width;
    for (std::size_t d = 0; d < df.size(); ++d) {
      const Vec2 q = position(df[d]);
      if (q.x() < lo.x() || q.y() < lo.y() || q.x() > hi.x() || q.y() > hi.y()) continue;
      if (std::abs(df[d].keypoint.level - sf[s].keypoint.level) > cfg.max_level_difference) continue;
      if (!band.contains(q)) continue;
      const int h = hamming_distance(sf[s].descriptor, df[d].descriptor);
      forward[s].offer(static_cast<int>(d), h);
      reverse[d].offer(static_cast<int>(s), h);
    }
  }

  std::vector<MatchPair> out;
  for (std::size_t s = 0; s < sf.size(); ++s) {
    const Best& fb = forward[s];
    if (fb.index < 0 || fb.distance >= cfg.hamming_threshold) continue;
    if (fb.second != std::numeric_limits<int>::max() && !(fb.distance < cfg.ratio * fb.second)) continue;
    if (reverse[static_cast<std::size_t>(fb.index)].index != static_cast<int>(s)) continue;
    // patch_sad centres on whole pixels; the slide and the disparity use the same grid.
    const Vec2 pa = position(sf[s]).array().round();
    const Vec2 pb = position(df[static_cast<std::size_t>(fb.index)]).array().round();
    const auto r = refine_row(src.blurred, pa, dst.blurred, pb, cfg.sad_window, refine ? cfg.sad_search_radius : 0);
    if (!r || r->second > cfg.sad_threshold) continue;
    out.push_back({static_cast<int>(s), fb.index, fb.distance, r->second, pa.x() - (pb.x() + r->first)});
  }
  return out;
}

}  // namespace

std::vector<MatchPair> match_features(const FrameFeatures& src, const FrameFeatures& dst,
                                      const Pose& dst_from_src, const Intrinsics& k_src,
                                      const Intrinsics& k_dst, const MatchConfig& cfg,
                                      double half_width) {
  return match_impl(src, dst, dst_from_src, k_src, k_dst, cfg, half_width, false);
}

std::vector<MatchPair> match_stereo(const FrameFeatures& left, const FrameFeatures& right,
                                    const StereoRig& rig, const MatchConfig& cfg) {
  if (cfg.sad_search_radius < 0) throw Error(ErrorCode::kInvalidInput, "SAD search radius must be non-negative");
  return match_impl(left, right, rig.right_from_left, rig.left, rig.right, cfg, cfg.stereo_half_width, true);
}

std::vector<MatchPair> match_temporal(const FrameFeatures& prev, const FrameFeatures& curr,
                                      const Rotation& gyro_rotation, const Intrinsics& k,
                                      const MatchConfig& cfg) {
  if (prev.features.empty() || curr.features.empty()) return {};
  Pose curr_from_prev;
  curr_from_prev.rotation = gyro_rotation.inverse();
  return match_features(prev, curr, curr_from_prev, k, k, cfg, cfg.temporal_half_width);
}

std::vector<ImuSample> read_imu_csv(std::istream& in) {
  std::vector<ImuSample> out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    ImuSample s;
    if (!(ss >> s.timestamp >> s.angular_velocity.x() >> s.angular_velocity.y() >>
          s.angular_velocity.z())) {
      if (first) {
        first = false;
        continue;
      }
      throw Error(ErrorCode::kParse, "malformed IMU line: " + line);
    }
    first = false;
    out.push_back(s);
  }
  return out;
}

std::vector<ImuSample> read_imu_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return read_imu_csv(in);
}

void write_imu_csv(std::ostream& out, const std::vector<ImuSample>& samples) {
  char buf[160];
  out << "timestamp,wx,wy,wz\n";
  for (const auto& s : samples) {
    std::snprintf(buf, sizeof buf, "%.9f,%.17g,%.17g,%.17g\n", s.timestamp, s.angular_velocity.x(),
                  s.angular_velocity.y(), s.angular_velocity.z());
    out << buf;
  }
}

void write_matches(std::ostream& out, const std::vector<MatchPair>& matches) {
  for (const auto& m : matches) out << m.index_a << ' ' << m.index_b << ' ' << m.hamming << ' ' << m.sad << '\n';
}

}  // namespace stereoloc
