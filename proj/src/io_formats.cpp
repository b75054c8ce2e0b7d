#include "foal/io_formats.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "foal/errors.hpp"

namespace foal {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(ManifestViolation v) noexcept {
  switch (v) {
    case ManifestViolation::kSchema: return "schema violation";
    case ManifestViolation::kDisjointClasses: return "disjoint classes violation";
    case ManifestViolation::kTaskIndices: return "task index violation";
    case ManifestViolation::kMissingFile: return "missing file";
    case ManifestViolation::kDimensionMismatch: return "dimension mismatch";
    case ManifestViolation::kUnlabeledFile: return "unlabeled feature file";
    case ManifestViolation::kLabelOutsideTask: return "label outside task";
  }
  return "manifest violation";
}

namespace {

// Little-endian codecs. Values are assembled bytewise so host order never leaks.
template <typename U>
void put_le(char* dst, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) dst[i] = static_cast<char>((v >> (8 * i)) & 0xff);
}

template <typename U>
U get_le(const char* src) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i)
    v |= static_cast<U>(static_cast<unsigned char>(src[i])) << (8 * i);
  return v;
}

void put_f32(char* dst, float f) { put_le<std::uint32_t>(dst, std::bit_cast<std::uint32_t>(f)); }
float get_f32(const char* src) { return std::bit_cast<float>(get_le<std::uint32_t>(src)); }
void put_f64(char* dst, double f) { put_le<std::uint64_t>(dst, std::bit_cast<std::uint64_t>(f)); }
double get_f64(const char* src) { return std::bit_cast<double>(get_le<std::uint64_t>(src)); }

std::array<char, kFeatureHeaderBytes> encode_header(const FeatureHeader& h) {
  std::array<char, kFeatureHeaderBytes> b{};
  std::memcpy(b.data(), kFeatureMagic, 4);
  put_le<std::uint32_t>(b.data() + 4, kFeatureVersion);
  put_le<std::uint64_t>(b.data() + 8, h.sample_count);
  put_le<std::uint32_t>(b.data() + 16, h.block_count);
  put_le<std::uint32_t>(b.data() + 20, h.block_dim);
  put_le<std::uint32_t>(b.data() + 24, h.labeled ? 1u : 0u);
  put_le<std::uint32_t>(b.data() + 28, 0u);
  return b;
}

FeatureHeader decode_header(const std::string& path, std::ifstream& in) {
  std::error_code ec;
  const auto size = fs::file_size(path, ec);
  if (ec) throw IoError(path + ": cannot stat file: " + ec.message());
  std::array<char, kFeatureHeaderBytes> b{};
  in.read(b.data(), static_cast<std::streamsize>(std::min<std::uintmax_t>(size, b.size())));
  if (size < 4 || std::memcmp(b.data(), kFeatureMagic, 4) != 0)
    throw FormatError(path, 0, std::nullopt, "bad magic, expected \"FOAL\"");
  if (size < kFeatureHeaderBytes) throw FormatError(path, size, std::nullopt, "truncated header");
  const auto version = get_le<std::uint32_t>(b.data() + 4);
  if (version != kFeatureVersion)
    throw FormatError(path, 4, std::nullopt, "unsupported version " + std::to_string(version));
  FeatureHeader h;
  h.sample_count = get_le<std::uint64_t>(b.data() + 8);
  h.block_count = get_le<std::uint32_t>(b.data() + 16);
  h.block_dim = get_le<std::uint32_t>(b.data() + 20);
  const auto flags = get_le<std::uint32_t>(b.data() + 24);
  if (h.block_count == 0) throw FormatError(path, 16, std::nullopt, "block count must be positive");
  if (h.block_dim == 0) throw FormatError(path, 20, std::nullopt, "block dimension must be positive");
  if ((flags & ~1u) != 0) throw FormatError(path, 24, std::nullopt, "unknown flag bits");
  if (get_le<std::uint32_t>(b.data() + 28) != 0)
    throw FormatError(path, 28, std::nullopt, "reserved field must be zero");
  h.labeled = (flags & 1u) != 0;

  const std::uint64_t expected = h.file_bytes();
  if (size < expected) {
    const std::uint64_t sample = (size - kFeatureHeaderBytes) / h.record_bytes();
    throw FormatError(path, kFeatureHeaderBytes + sample * h.record_bytes(), sample,
                      "truncated: file has " + std::to_string(size) + " bytes, header implies " +
                          std::to_string(expected));
  }
  if (size > expected)
    throw FormatError(path, expected, std::nullopt,
                      "trailing bytes after " + std::to_string(h.sample_count) + " samples");
  return h;
}

}  // namespace

// ---------------------------------------------------------------------------
// Feature files

FeatureWriter::FeatureWriter(const fs::path& path, std::uint32_t block_count, std::uint32_t block_dim,
                             bool labeled)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (block_count == 0 || block_dim == 0) throw ConfigError("feature file dimensions must be positive");
  if (!out_) throw IoError(path.string() + ": cannot open for writing");
  header_ = {0, block_count, block_dim, labeled};
  const auto h = encode_header(header_);
  out_.write(h.data(), static_cast<std::streamsize>(h.size()));
  if (!out_) throw IoError(path.string() + ": write failed");
}

FeatureWriter::~FeatureWriter() {
  if (!finished_) {
    try {
      finish();
    } catch (...) {
    }
  }
}

void FeatureWriter::write(ClassId label, const BlockFeatureSet& sample) {
  if (finished_) throw IoError(path_.string() + ": writer already finished");
  if (sample.block_count() != header_.block_count || sample.block_dim() != header_.block_dim) {
    throw DimensionError(path_.string() + ": sample " + std::to_string(count_) + " has shape " +
                         std::to_string(sample.block_count()) + "x" + std::to_string(sample.block_dim()) +
                         ", file shape is " + std::to_string(header_.block_count) + "x" +
                         std::to_string(header_.block_dim));
  }
  std::vector<char> rec(header_.record_bytes());
  char* p = rec.data();
  if (header_.labeled) {
    put_le<std::uint32_t>(p, label);
    p += 4;
  }
  const auto& b = sample.blocks();  // row-major: block 0, block 1, ...
  for (Eigen::Index i = 0; i < b.size(); ++i, p += 4) put_f32(p, b.data()[i]);
  out_.write(rec.data(), static_cast<std::streamsize>(rec.size()));
  if (!out_) throw IoError(path_.string() + ": write failed at sample " + std::to_string(count_));
  ++count_;
}

void FeatureWriter::finish() {
  if (finished_) return;
  finished_ = true;
  header_.sample_count = count_;
  const auto h = encode_header(header_);
  out_.seekp(0);
  out_.write(h.data(), static_cast<std::streamsize>(h.size()));
  out_.close();
  if (!out_) throw IoError(path_.string() + ": write failed while finalizing header");
}

void write_features(const fs::path& path, std::span<const LabeledSample> samples,
                    std::uint32_t block_count, std::uint32_t block_dim, bool labeled) {
  FeatureWriter w(path, block_count, block_dim, labeled);
  for (const auto& s : samples) w.write(s.label, s.features);
  w.finish();
}

FeatureReader::FeatureReader(const fs::path& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw IoError(path.string() + ": cannot open for reading");
  header_ = decode_header(path.string(), in_);
  buffer_.resize(header_.record_bytes());
}

std::optional<LabeledSample> FeatureReader::next() {
  if (next_ >= header_.sample_count) return std::nullopt;
  const std::uint64_t offset = kFeatureHeaderBytes + next_ * header_.record_bytes();
  in_.read(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
  if (in_.gcount() != static_cast<std::streamsize>(buffer_.size()))
    throw FormatError(path_.string(), offset + static_cast<std::uint64_t>(in_.gcount()), next_,
                      "unexpected end of file");
  const char* p = buffer_.data();
  LabeledSample s;
  if (header_.labeled) {
    s.label = get_le<std::uint32_t>(p);
    p += 4;
  }
  RowMatrixF m(header_.block_count, header_.block_dim);
  for (Eigen::Index i = 0; i < m.size(); ++i, p += 4) {
    const float v = get_f32(p);
    if (!std::isfinite(v))
      throw FormatError(path_.string(), static_cast<std::uint64_t>(p - buffer_.data()) + offset, next_,
                        "non-finite feature value");
    m.data()[i] = v;
  }
  s.features = BlockFeatureSet(std::move(m));
  ++next_;
  return s;
}

FeatureHeader read_feature_header(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open for reading");
  return decode_header(path.string(), in);
}

// ---------------------------------------------------------------------------
// Manifests

void validate_manifest(const StreamManifest& m) {
  using V = ManifestViolation;
  if (m.block_count == 0 || m.block_dim == 0) throw ManifestError(V::kSchema, "n and E must be positive");
  if (m.tasks.empty()) throw ManifestError(V::kSchema, "manifest declares no tasks");
  for (std::size_t t = 0; t < m.tasks.size(); ++t) {
    if (m.tasks[t].index != t + 1) {
      throw ManifestError(V::kTaskIndices, "task at position " + std::to_string(t + 1) + " has index " +
                                               std::to_string(m.tasks[t].index) + "; indices must be 1..m in order");
    }
    if (m.tasks[t].classes.empty())
      throw ManifestError(V::kSchema, "task " + std::to_string(t + 1) + " lists no classes");
  }
  std::map<ClassId, std::uint32_t> owner;
  for (const auto& task : m.tasks) {
    for (const auto c : task.classes) {
      const auto [it, fresh] = owner.emplace(c, task.index);
      if (!fresh) {
        throw ManifestError(V::kDisjointClasses, "class " + std::to_string(c) + " appears in task " +
                                                     std::to_string(it->second) + " and task " +
                                                     std::to_string(task.index));
      }
    }
  }
  for (const auto& task : m.tasks) {
    for (const auto* file : {&task.train, &task.test}) {
      if (!fs::is_regular_file(*file))
        throw ManifestError(V::kMissingFile, "task " + std::to_string(task.index) + ": " + file->string());
      FeatureHeader h;
      try {
        h = read_feature_header(*file);
      } catch (const FormatError& e) {
        throw ManifestError(V::kSchema, e.what());
      }
      if (h.block_count != m.block_count || h.block_dim != m.block_dim) {
        throw ManifestError(V::kDimensionMismatch,
                            file->string() + " has n=" + std::to_string(h.block_count) + ", E=" +
                                std::to_string(h.block_dim) + "; manifest declares n=" +
                                std::to_string(m.block_count) + ", E=" + std::to_string(m.block_dim));
      }
      if (!h.labeled) throw ManifestError(V::kUnlabeledFile, file->string());
    }
  }
}

StreamManifest parse_manifest(const fs::path& path) {
  using V = ManifestViolation;
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open manifest");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ManifestError(V::kSchema, path.string() + ": " + e.what());
  }
  const fs::path base = path.parent_path();
  const auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  StreamManifest m;
  try {
    if (j.contains("schema") && j.at("schema").get<std::string>() != kManifestSchema)
      throw ManifestError(V::kSchema, "unsupported schema " + j.at("schema").get<std::string>());
    m.dataset = j.at("dataset").get<std::string>();
    m.block_count = j.at("n").get<std::uint32_t>();
    m.block_dim = j.at("E").get<std::uint32_t>();
    if (j.contains("metadata")) m.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
    for (const auto& t : j.at("tasks")) {
      TaskSpec task;
      task.index = t.at("k").get<std::uint32_t>();
      task.classes = t.at("classes").get<std::vector<ClassId>>();
      task.train = resolve(t.at("train").get<std::string>());
      task.test = resolve(t.at("test").get<std::string>());
      m.tasks.push_back(std::move(task));
    }
  } catch (const json::exception& e) {
    throw ManifestError(V::kSchema, path.string() + ": " + e.what());
  }
  validate_manifest(m);
  return m;
}

void write_manifest(const StreamManifest& m, const fs::path& path) {
  const fs::path base = path.parent_path();
  const auto rel = [&](const fs::path& p) {
    if (base.empty()) return p.generic_string();
    const auto r = p.lexically_relative(base);
    return (r.empty() || *r.begin() == "..") ? p.generic_string() : r.generic_string();
  };
  json tasks = json::array();
  for (const auto& t : m.tasks)
    tasks.push_back({{"k", t.index}, {"classes", t.classes}, {"train", rel(t.train)}, {"test", rel(t.test)}});
  const json j = {{"schema", kManifestSchema}, {"dataset", m.dataset},   {"n", m.block_count},
                  {"E", m.block_dim},          {"metadata", m.metadata}, {"tasks", tasks}};
  std::ofstream out(path);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError(path.string() + ": write failed");
}

// ---------------------------------------------------------------------------
// Results documents

namespace {

json config_to_json(const RunConfig& c) {
  return {{"gamma", c.gamma},
          {"projection_dim", c.projection_dim},
          {"seed", c.seed},
          {"batch_size", c.batch_size},
          {"fusion_enabled", c.fusion_enabled},
          {"smooth_projection_enabled", c.smooth_projection_enabled},
          {"eval_every_batch", c.eval_every_batch},
          {"record_timing", c.record_timing}};
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  c.gamma = j.at("gamma").get<double>();
  c.projection_dim = j.at("projection_dim").get<std::uint32_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.batch_size = j.at("batch_size").get<std::uint32_t>();
  c.fusion_enabled = j.at("fusion_enabled").get<bool>();
  c.smooth_projection_enabled = j.at("smooth_projection_enabled").get<bool>();
  c.eval_every_batch = j.at("eval_every_batch").get<bool>();
  c.record_timing = j.at("record_timing").get<bool>();
  return c;
}

}  // namespace

std::string serialize_results(const ResultsDocument& doc) {
  const auto& r = doc.report;
  json forgetting = json::array();
  for (const auto& f : r.forgetting) forgetting.push_back(f ? json(*f) : json(nullptr));
  json norms = json::array();
  for (const auto& n : r.weight_norms) norms.push_back({{"class_id", n.class_id}, {"norm", n.norm}});
  json trace = json::array();
  for (const auto& b : r.batch_trace)
    trace.push_back({{"task", b.task}, {"batch", b.batch}, {"accuracy", b.accuracy}});
  json acc = json::array();
  for (std::size_t i = 1; i <= doc.accuracy.tasks(); ++i) {
    json row = json::array();
    for (std::size_t j = 1; j <= i; ++j)
      row.push_back(doc.accuracy.defined(i, j) ? json(doc.accuracy.at(i, j)) : json(nullptr));
    acc.push_back(std::move(row));
  }

  json j = {{"schema", kResultsSchema},
            {"dataset", r.dataset},
            {"config", config_to_json(r.config)},
            {"accuracy_matrix", acc},
            {"average_accuracy", r.average_accuracy},
            {"a_avg", r.a_avg},
            {"a_last", r.a_last},
            {"forgetting", forgetting},
            {"weight_norms", norms},
            {"weight_norm_cv", r.weight_norm_cv},
            {"samples_per_task", r.samples_per_task}};
  if (r.f_final) j["f_final"] = *r.f_final;
  if (r.config.record_timing) j["batch_seconds"] = r.batch_seconds;
  if (r.config.eval_every_batch) j["batch_trace"] = trace;
  return j.dump(2) + "\n";
}

ResultsDocument parse_results(const std::string& text) {
  ResultsDocument doc;
  try {
    const json j = json::parse(text);
    if (j.at("schema").get<std::string>() != kResultsSchema)
      throw ConfigError("unsupported results schema " + j.at("schema").get<std::string>());
    auto& r = doc.report;
    r.dataset = j.at("dataset").get<std::string>();
    r.config = config_from_json(j.at("config"));
    const auto& acc = j.at("accuracy_matrix");
    doc.accuracy = AccuracyMatrix(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) {
      for (std::size_t jj = 0; jj < acc[i].size(); ++jj) {
        if (!acc[i][jj].is_null()) doc.accuracy.set(i + 1, jj + 1, acc[i][jj].get<double>());
      }
    }
    r.average_accuracy = j.at("average_accuracy").get<std::vector<double>>();
    r.a_avg = j.at("a_avg").get<double>();
    r.a_last = j.at("a_last").get<double>();
    for (const auto& f : j.at("forgetting"))
      r.forgetting.push_back(f.is_null() ? std::nullopt : std::optional<double>(f.get<double>()));
    if (j.contains("f_final")) r.f_final = j.at("f_final").get<double>();
    for (const auto& n : j.at("weight_norms"))
      r.weight_norms.push_back({n.at("class_id").get<ClassId>(), n.at("norm").get<double>()});
    r.weight_norm_cv = j.at("weight_norm_cv").get<double>();
    r.samples_per_task = j.at("samples_per_task").get<std::vector<std::uint64_t>>();
    if (j.contains("batch_seconds")) r.batch_seconds = j.at("batch_seconds").get<std::vector<double>>();
    if (j.contains("batch_trace")) {
      for (const auto& b : j.at("batch_trace"))
        r.batch_trace.push_back(
            {b.at("task").get<std::uint32_t>(), b.at("batch").get<std::uint32_t>(), b.at("accuracy").get<double>()});
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed results document: ") + e.what());
  }
  return doc;
}

void write_results(const ResultsDocument& doc, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << serialize_results(doc);
  if (!out) throw IoError(path.string() + ": write failed");
}

ResultsDocument read_results(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_results(ss.str());
}

// ---------------------------------------------------------------------------
// Classifier state

namespace {
constexpr char kStateMagic[4] = {'F', 'O', 'S', 'T'};
constexpr std::uint32_t kStateVersion = 1;
constexpr std::size_t kStateHeaderBytes = 40;
}  // namespace

void save_classifier(const AnalyticClassifier& c, const fs::path& path) {
  const auto d = static_cast<std::uint64_t>(c.dim());
  const auto k = static_cast<std::uint64_t>(c.class_count());
  std::vector<char> buf(kStateHeaderBytes + 4 * k + 8 * (d * k + d * d));
  char* p = buf.data();
  std::memcpy(p, kStateMagic, 4);
  put_le<std::uint32_t>(p + 4, kStateVersion);
  put_le<std::uint64_t>(p + 8, d);
  put_le<std::uint64_t>(p + 16, k);
  put_f64(p + 24, c.gamma());
  put_le<std::uint64_t>(p + 32, c.samples_seen());
  p += kStateHeaderBytes;
  for (const auto id : c.class_ids()) {
    put_le<std::uint32_t>(p, id);
    p += 4;
  }
  for (Eigen::Index i = 0; i < c.weights().size(); ++i, p += 8) put_f64(p, c.weights().data()[i]);
  for (Eigen::Index i = 0; i < c.autocorrelation().size(); ++i, p += 8) put_f64(p, c.autocorrelation().data()[i]);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError(path.string() + ": write failed");
}

AnalyticClassifier load_classifier(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open for reading");
  const std::string ps = path.string();
  std::array<char, kStateHeaderBytes> h{};
  in.read(h.data(), h.size());
  if (in.gcount() < 4 || std::memcmp(h.data(), kStateMagic, 4) != 0)
    throw FormatError(ps, 0, std::nullopt, "bad magic, expected \"FOST\"");
  if (in.gcount() != static_cast<std::streamsize>(h.size()))
    throw FormatError(ps, static_cast<std::uint64_t>(in.gcount()), std::nullopt, "truncated header");
  if (get_le<std::uint32_t>(h.data() + 4) != kStateVersion)
    throw FormatError(ps, 4, std::nullopt, "unsupported state version");
  const auto d = get_le<std::uint64_t>(h.data() + 8);
  const auto k = get_le<std::uint64_t>(h.data() + 16);
  const double gamma = get_f64(h.data() + 24);
  const auto seen = get_le<std::uint64_t>(h.data() + 32);
  if (d == 0 || d > (1u << 20) || k > (1u << 24)) throw FormatError(ps, 8, std::nullopt, "implausible dimensions");

  std::vector<char> body(4 * k + 8 * (d * k + d * d));
  in.read(body.data(), static_cast<std::streamsize>(body.size()));
  if (in.gcount() != static_cast<std::streamsize>(body.size()))
    throw FormatError(ps, kStateHeaderBytes + static_cast<std::uint64_t>(in.gcount()), std::nullopt, "truncated body");
  const char* p = body.data();
  std::vector<ClassId> ids(k);
  for (auto& id : ids) {
    id = get_le<std::uint32_t>(p);
    p += 4;
  }
  const auto di = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd w(di, static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < w.size(); ++i, p += 8) w.data()[i] = get_f64(p);
  Eigen::MatrixXd r(di, di);
  for (Eigen::Index i = 0; i < r.size(); ++i, p += 8) r.data()[i] = get_f64(p);
  return AnalyticClassifier::from_state(gamma, std::move(ids), std::move(w), std::move(r), seen);
}

}  // namespace foal
