#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gips/projection.hpp"
#include "gips/transform.hpp"

namespace gips {

// Texture code f^t.
struct FeatureVector {
  std::vector<double> values;
  bool operator==(const FeatureVector&) const = default;
};

struct EncodedView {
  FeatureProjection geometry;  // f^g, same detector dims as the input
  FeatureVector texture;       // f^t
};

class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual EncodedView encode(const Projection& image) const = 0;
  virtual std::size_t texture_length() const = 0;
  virtual std::string name() const = 0;
};

class Generator {
 public:
  virtual ~Generator() = default;
  virtual Projection generate(const FeatureProjection& geometry,
                              const FeatureVector& texture) const = 0;
  virtual std::string name() const = 0;
};

using EncoderPtr = std::shared_ptr<const Encoder>;
using GeneratorPtr = std::shared_ptr<const Generator>;

// f^g = the image itself (channel 0, one channel); f^t = [mean, std]
// (population std) of that channel.
EncoderPtr identity_encoder();

// Standardizes channel 0 of f^g and re-scales it to the texture's mean/std:
// clamp((F - mean F) / std F * t[1] + t[0], 0, 1). A constant F yields the
// constant t[0] (clamped).
GeneratorPtr passthrough_generator();

// Registry keys: encoder "identity"; refiner "identity" | "smoothing:<sigma mm>";
// generator "passthrough". Unknown keys raise Errc::invalid_argument.
EncoderPtr make_encoder(const std::string& key);
RefinerPtr make_refiner(const std::string& key);
GeneratorPtr make_generator(const std::string& key);

// Runs an encoder and checks its contract (Errc::contract on violation).
EncodedView encode_checked(const Encoder& encoder, const Projection& image);
Projection generate_checked(const Generator& generator, const FeatureProjection& geometry,
                            const FeatureVector& texture);

// Element-wise arithmetic mean of texture codes.
FeatureVector fuse_textures(const std::vector<FeatureVector>& textures);

struct SynthesisRequest {
  std::vector<Projection> sources;  // angle_deg set per view
  std::vector<double> target_angles;
  EncoderPtr encoder = identity_encoder();
  RefinerPtr refiner = identity_refiner();
  GeneratorPtr generator = passthrough_generator();
  ConeBeamGeometry geometry;
  GridSpec grid;
  double step = 0.0;  // <= 0 selects default_step(grid)
};

struct SynthesisResult {
  std::vector<Projection> source_views;  // I'_src, one per source, same order
  std::vector<Projection> target_views;  // I'_tgt, one per target angle
  std::vector<EncodedView> encoded;      // per source
  FeatureVector texture;                 // fused f^t
};

struct StageTimings {
  double encode = 0.0;  // seconds
  double back_project = 0.0;
  double refine = 0.0;
  double forward_project = 0.0;
  double generate = 0.0;
  double total = 0.0;
};

// Encode every source, fuse the texture codes, transform the geometry
// features to all source and target angles, generate every view. Outputs
// are clamped to [0, 1].
SynthesisResult synthesize(const SynthesisRequest& request, StageTimings* timings = nullptr);

}  // namespace gips
