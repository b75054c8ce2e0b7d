#include "foal/synthetic.hpp"

#include <cmath>
#include <set>
#include <string>
#include <utility>

#include "foal/errors.hpp"
#include "foal/io_formats.hpp"
#include "foal/philox.hpp"

namespace foal {

namespace fs = std::filesystem;

namespace {

enum Stream : std::uint32_t {
  kPrototypes = 1,
  kCodes = 2,
  kShuffle = 3,
  kNoise = 4,
  kActivations = 5,
  kLabels = 6,
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) { return splitmix64(seed ^ splitmix64(stream)); }

std::uint32_t uniform_u32(std::uint64_t seed, std::uint32_t stream, std::uint64_t index) {
  const auto out = Philox4x32::block(
      {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), stream, 0u},
      {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  return out[0];
}

template <typename T>
void shuffle(std::vector<T>& v, std::uint64_t seed, std::uint32_t stream) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = uniform_u32(seed, stream, i) % i;
    std::swap(v[i - 1], v[j]);
  }
}

std::uint32_t code_levels(std::uint32_t classes, std::uint32_t blocks) {
  std::uint32_t g = 2;
  while (std::pow(static_cast<double>(g), static_cast<double>(blocks)) < classes) ++g;
  return g;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (tasks == 0 || classes_per_task == 0 || samples_per_class == 0 || test_samples_per_class == 0 ||
      block_count == 0 || block_dim == 0)
    throw ConfigError("synthetic stream sizes must be positive");
  if (!(prototype_scale > 0.0) || !(noise >= 0.0)) throw ConfigError("synthetic scales must be positive");
}

StreamManifest make_synthetic(const SyntheticSpec& spec, const fs::path& out_dir) {
  spec.validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError(out_dir.string() + ": cannot create directory: " + ec.message());

  const std::uint32_t n = spec.block_count;
  const std::uint32_t e = spec.block_dim;
  const std::uint32_t classes = spec.tasks * spec.classes_per_task;
  const std::uint32_t g = code_levels(classes, n);

  // Block prototypes P[b][level], each ~ N(0, scale^2 / E) per entry.
  const NormalStream proto_rng(derive(spec.seed, kPrototypes));
  const float proto_sd = static_cast<float>(spec.prototype_scale / std::sqrt(static_cast<double>(e)));
  std::vector<RowMatrixF> prototypes(n, RowMatrixF(g, e));
  for (std::uint32_t b = 0; b < n; ++b)
    for (std::uint32_t l = 0; l < g; ++l)
      for (std::uint32_t k = 0; k < e; ++k)
        prototypes[b](l, k) = proto_sd * static_cast<float>(proto_rng.at((std::uint64_t{b} * g + l) * e + k));

  // Distinct codes per class, digits base g over the blocks.
  std::uint64_t combos = 1;
  for (std::uint32_t b = 0; b < n && combos < (1ull << 40); ++b) combos *= g;
  std::vector<std::uint64_t> codes;
  std::set<std::uint64_t> taken;
  for (std::uint64_t draw = 0; codes.size() < classes; ++draw) {
    const std::uint64_t r = (std::uint64_t{uniform_u32(spec.seed, kCodes, 2 * draw)} << 32) |
                            uniform_u32(spec.seed, kCodes, 2 * draw + 1);
    if (taken.insert(r % combos).second) codes.push_back(r % combos);
  }
  const auto digit = [&](ClassId c, std::uint32_t b) {
    std::uint64_t code = codes[c];
    for (std::uint32_t i = 0; i < b; ++i) code /= g;
    return static_cast<std::uint32_t>(code % g);
  };

  const NormalStream noise_rng(derive(spec.seed, kNoise));
  const float noise_sd = static_cast<float>(spec.noise / std::sqrt(static_cast<double>(e)));
  std::uint64_t noise_counter = 0;

  StreamManifest manifest;
  manifest.dataset = "synthetic";
  manifest.block_count = n;
  manifest.block_dim = e;
  manifest.metadata = {{"generator", "foal-synthetic/1"},
                       {"seed", std::to_string(spec.seed)},
                       {"code_levels", std::to_string(g)},
                       {"prototype_scale", std::to_string(spec.prototype_scale)},
                       {"noise", std::to_string(spec.noise)}};

  const auto emit = [&](const fs::path& path, const std::vector<ClassId>& task_classes, std::uint32_t per_class,
                        std::uint32_t shuffle_stream) {
    std::vector<ClassId> order;
    for (const auto c : task_classes)
      for (std::uint32_t s = 0; s < per_class; ++s) order.push_back(c);
    shuffle(order, spec.seed, shuffle_stream);
    FeatureWriter writer(path, n, e);
    RowMatrixF blocks(n, e);
    for (const auto c : order) {
      for (std::uint32_t b = 0; b < n; ++b) {
        blocks.row(b) = prototypes[b].row(digit(c, b));
        for (std::uint32_t k = 0; k < e; ++k)
          blocks(b, k) += noise_sd * static_cast<float>(noise_rng.at(noise_counter++));
      }
      writer.write(c, BlockFeatureSet(blocks));
    }
    writer.finish();
  };

  for (std::uint32_t t = 0; t < spec.tasks; ++t) {
    TaskSpec task;
    task.index = t + 1;
    for (std::uint32_t i = 0; i < spec.classes_per_task; ++i) task.classes.push_back(t * spec.classes_per_task + i);
    task.train = out_dir / ("task_" + std::to_string(task.index) + "_train.foal");
    task.test = out_dir / ("task_" + std::to_string(task.index) + "_test.foal");
    emit(task.train, task.classes, spec.samples_per_class, kShuffle + 16 * (2 * t));
    emit(task.test, task.classes, spec.test_samples_per_class, kShuffle + 16 * (2 * t + 1));
    manifest.tasks.push_back(std::move(task));
  }
  write_manifest(manifest, out_dir / "manifest.json");
  return manifest;
}

ActivationStream make_activation_stream(Eigen::Index dim, std::uint32_t tasks, std::uint32_t samples_per_task,
                                        std::uint32_t classes_per_task, std::uint64_t seed) {
  if (dim < 1 || tasks == 0 || samples_per_task == 0 || classes_per_task == 0)
    throw ConfigError("activation stream sizes must be positive");
  const NormalStream rng(derive(seed, kActivations));
  const std::uint64_t label_key = derive(seed, kLabels);
  const auto total = static_cast<Eigen::Index>(tasks) * samples_per_task;
  ActivationStream s;
  s.activations.resize(total, dim);
  s.labels.reserve(static_cast<std::size_t>(total));
  for (Eigen::Index i = 0; i < total; ++i) {
    for (Eigen::Index d = 0; d < dim; ++d)
      s.activations(i, d) = 1.0 / (1.0 + std::exp(-rng.at(static_cast<std::uint64_t>(i * dim + d))));
    const auto task = static_cast<std::uint32_t>(i / samples_per_task);
    s.labels.push_back(task * classes_per_task +
                       uniform_u32(label_key, kLabels, static_cast<std::uint64_t>(i)) % classes_per_task);
  }
  for (std::uint32_t t = 0; t <= tasks; ++t) s.task_begin.push_back(static_cast<std::size_t>(t) * samples_per_task);
  return s;
}

}  // namespace foal
