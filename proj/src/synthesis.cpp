#include "gips/synthesis.hpp"

#include "gips/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <numeric>

namespace gips {
namespace {

struct Moments {
  double mean;
  double stddev;
};

Moments moments(std::span<const float> values) {
  double sum = 0.0;
  for (float v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (float v : values) {
    const double d = v - mean;
    sq += d * d;
  }
  return {mean, std::sqrt(sq / static_cast<double>(values.size()))};
}

class IdentityEncoder final : public Encoder {
 public:
  EncodedView encode(const Projection& image) const override {
    image.validate();
    EncodedView out;
    out.geometry = Projection(image.rows, image.cols, 1, image.angle_deg);
    const auto src = image.channel(0);
    std::copy(src.begin(), src.end(), out.geometry.data.begin());
    const Moments m = moments(src);
    out.texture.values = {m.mean, m.stddev};
    return out;
  }
  std::size_t texture_length() const override { return 2; }
  std::string name() const override { return "identity"; }
};

class PassthroughGenerator final : public Generator {
 public:
  Projection generate(const FeatureProjection& geometry,
                      const FeatureVector& texture) const override {
    geometry.validate();
    require(texture.values.size() >= 2, Errc::shape_mismatch,
            "passthrough generator needs a [mean, std] texture code");
    const double t_mean = texture.values[0];
    const double t_std = texture.values[1];
    Projection out(geometry.rows, geometry.cols, 1, geometry.angle_deg);
    const auto src = geometry.channel(0);
    const Moments m = moments(src);
    for (std::size_t i = 0; i < src.size(); ++i) {
      const double v = m.stddev > 0.0 ? (src[i] - m.mean) / m.stddev * t_std + t_mean : t_mean;
      out.data[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
    return out;
  }
  std::string name() const override { return "passthrough"; }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

EncoderPtr identity_encoder() { return std::make_shared<IdentityEncoder>(); }
GeneratorPtr passthrough_generator() { return std::make_shared<PassthroughGenerator>(); }

EncoderPtr make_encoder(const std::string& key) {
  if (key == "identity") return identity_encoder();
  fail(Errc::invalid_argument, "unknown encoder '" + key + "'");
}

RefinerPtr make_refiner(const std::string& key) {
  if (key == "identity") return identity_refiner();
  const std::string prefix = "smoothing:";
  if (key.rfind(prefix, 0) == 0) {
    const std::string arg = key.substr(prefix.size());
    char* end = nullptr;
    const double sigma = std::strtod(arg.c_str(), &end);
    require(!arg.empty() && end == arg.c_str() + arg.size(), Errc::invalid_argument,
            "bad smoothing sigma in refiner key '" + key + "'");
    return smoothing_refiner(sigma);
  }
  fail(Errc::invalid_argument, "unknown refiner '" + key + "'");
}

GeneratorPtr make_generator(const std::string& key) {
  if (key == "passthrough") return passthrough_generator();
  fail(Errc::invalid_argument, "unknown generator '" + key + "'");
}

EncodedView encode_checked(const Encoder& encoder, const Projection& image) {
  EncodedView out = encoder.encode(image);
  require(out.geometry.rows == image.rows && out.geometry.cols == image.cols, Errc::contract,
          "encoder '" + encoder.name() + "' changed the detector dims");
  require(out.texture.values.size() == encoder.texture_length(), Errc::contract,
          "encoder '" + encoder.name() + "' produced a texture code of the wrong length");
  require(std::all_of(out.texture.values.begin(), out.texture.values.end(),
                      [](double v) { return std::isfinite(v); }),
          Errc::contract, "encoder '" + encoder.name() + "' produced non-finite texture");
  try {
    out.geometry.validate();
  } catch (const Error& e) {
    fail(Errc::contract, "encoder '" + encoder.name() + "': " + e.what());
  }
  out.geometry.angle_deg = image.angle_deg;
  return out;
}

Projection generate_checked(const Generator& generator, const FeatureProjection& geometry,
                            const FeatureVector& texture) {
  Projection out = generator.generate(geometry, texture);
  require(out.rows == geometry.rows && out.cols == geometry.cols, Errc::contract,
          "generator '" + generator.name() + "' changed the detector dims");
  try {
    out.validate();
  } catch (const Error& e) {
    fail(Errc::contract, "generator '" + generator.name() + "': " + e.what());
  }
  out.angle_deg = geometry.angle_deg;
  return out;
}

FeatureVector fuse_textures(const std::vector<FeatureVector>& textures) {
  require(!textures.empty(), Errc::invalid_argument, "no texture codes to fuse");
  FeatureVector out;
  out.values.assign(textures.front().values.size(), 0.0);
  for (const auto& t : textures) {
    require(t.values.size() == out.values.size(), Errc::shape_mismatch,
            "texture codes differ in length");
    for (std::size_t i = 0; i < t.values.size(); ++i) out.values[i] += t.values[i];
  }
  for (double& v : out.values) v /= static_cast<double>(textures.size());
  return out;
}

SynthesisResult synthesize(const SynthesisRequest& request, StageTimings* timings) {
  require(!request.sources.empty(), Errc::invalid_argument, "synthesis needs source views");
  require(!request.target_angles.empty(), Errc::invalid_argument, "synthesis needs target angles");
  require(request.encoder && request.refiner && request.generator, Errc::invalid_argument,
          "synthesis needs encoder, refiner and generator stages");
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  StageTimings local;

  SynthesisResult result;
  auto t0 = clock::now();
  for (const Projection& src : request.sources) {
    check_detector_shape(src, request.geometry);
    result.encoded.push_back(encode_checked(*request.encoder, src));
  }
  // Fuse in ascending-angle order so listing order cannot change the result.
  std::vector<std::size_t> order(request.sources.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return request.sources[a].angle_deg < request.sources[b].angle_deg;
  });
  std::vector<FeatureVector> textures;
  for (std::size_t i : order) textures.push_back(result.encoded[i].texture);
  result.texture = fuse_textures(textures);
  local.encode = seconds_since(t0);

  TransformPlan plan;
  for (const EncodedView& e : result.encoded) plan.sources.push_back(e.geometry);
  plan.target_angles = request.target_angles;
  plan.refiner = request.refiner;
  plan.geometry = request.geometry;
  plan.grid = request.grid;
  plan.step = request.step;
  TransformTimings tt;
  const TransformResult transformed = transform_projections(plan, &tt);
  local.back_project = tt.back_project;
  local.refine = tt.refine;
  local.forward_project = tt.forward_project;

  t0 = clock::now();
  auto generate = [&](const FeatureProjection& f) {
    Projection out = generate_checked(*request.generator, f, result.texture);
    for (float& v : out.data) v = std::clamp(v, 0.0f, 1.0f);
    return out;
  };
  for (const auto& f : transformed.source_views) result.source_views.push_back(generate(f));
  for (const auto& f : transformed.target_views) result.target_views.push_back(generate(f));
  local.generate = seconds_since(t0);
  local.total = seconds_since(start);

  if (timings) *timings = local;
  return result;
}

}  // namespace gips
