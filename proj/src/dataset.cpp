#include "bfscl/dataset.hpp"

#include <filesystem>
#include <random>

#include "bfscl/binary_io.hpp"
#include "bfscl/error.hpp"

namespace bfscl {

namespace fs = std::filesystem;

Tensor Dataset::batch(std::span<const std::uint64_t> ids) const {
  const std::size_t n = sample_size();
  Tensor out({ids.size(), height, width, channels});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= pixels.size()) throw ProtocolError("dataset: unknown sample id " + std::to_string(ids[i]));
    const auto& px = pixels[ids[i]];
    for (std::size_t k = 0; k < n; ++k) out.data[i * n + k] = px[k];
  }
  return out;
}

Dataset make_blobs(const BlobsConfig& cfg) {
  if (cfg.classes == 0 || cfg.height == 0 || cfg.width == 0 || cfg.channels == 0) {
    throw ConfigError("blobs: classes and image dims must be positive");
  }
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset ds;
  ds.height = cfg.height;
  ds.width = cfg.width;
  ds.channels = cfg.channels;
  const std::size_t n = ds.sample_size();
  std::vector<std::vector<double>> prototypes(cfg.classes, std::vector<double>(n));
  for (std::size_t c = 0; c < cfg.classes; ++c) {
    ds.index.class_names.push_back("class_" + std::to_string(c));
    for (double& v : prototypes[c]) v = normal(rng);
  }
  std::uint64_t id = 0;
  for (std::size_t c = 0; c < cfg.classes; ++c) {
    for (std::size_t i = 0; i < cfg.train_per_class + cfg.test_per_class; ++i) {
      std::vector<float> px(n);
      for (std::size_t k = 0; k < n; ++k) px[k] = static_cast<float>(prototypes[c][k] + cfg.noise * normal(rng));
      ds.index.samples.push_back({id++, static_cast<std::uint32_t>(c), i >= cfg.train_per_class});
      ds.pixels.push_back(std::move(px));
    }
  }
  return ds;
}

std::string join_manifest(std::span<const std::string> names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i].find('\n') != std::string::npos) throw FormatError("class name contains a newline: " + names[i]);
    if (i) out += '\n';
    out += names[i];
  }
  return out;
}

std::vector<std::string> split_manifest(std::string_view text, std::size_t expected) {
  std::vector<std::string> names;
  if (expected == 0) return names;
  std::size_t start = 0;
  for (;;) {
    const std::size_t nl = text.find('\n', start);
    names.emplace_back(text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start));
    if (nl == std::string_view::npos) break;
    start = nl + 1;
    if (start == text.size()) break;  // tolerate one trailing newline
  }
  if (names.size() != expected) {
    throw FormatError("manifest lists " + std::to_string(names.size()) + " class names, header says " +
                      std::to_string(expected));
  }
  return names;
}

namespace {

std::string encode_index(const Dataset& ds) {
  io::ByteWriter w;
  w.bytes("BFDS");
  w.u32(kDatasetVersion);
  w.u64(ds.index.samples.size());
  w.u32(static_cast<std::uint32_t>(ds.height));
  w.u32(static_cast<std::uint32_t>(ds.width));
  w.u32(static_cast<std::uint32_t>(ds.channels));
  w.u32(static_cast<std::uint32_t>(ds.index.class_names.size()));
  const std::string manifest = join_manifest(ds.index.class_names);
  w.u32(static_cast<std::uint32_t>(manifest.size()));
  w.bytes(manifest);
  for (const auto& s : ds.index.samples) {
    w.u64(s.id);
    w.u32(s.label);
    w.u8(s.test ? 1 : 0);
  }
  return w.str();
}

struct IndexHeader {
  std::size_t height, width, channels;
  DatasetIndex index;
};

IndexHeader decode_index(std::string_view bytes) {
  io::ByteReader r(bytes);
  if (r.bytes(4, "magic") != "BFDS") throw FormatError("dataset index: bad magic");
  const std::uint32_t version = r.u32("version");
  if (version != kDatasetVersion) throw FormatError("dataset index: unsupported version " + std::to_string(version));
  IndexHeader h;
  const std::uint64_t n = r.u64("n_samples");
  h.height = r.u32("height");
  h.width = r.u32("width");
  h.channels = r.u32("channels");
  const std::uint32_t classes = r.u32("n_classes");
  const std::uint32_t manifest_len = r.u32("manifest_len");
  h.index.class_names = split_manifest(r.bytes(manifest_len, "manifest"), classes);
  for (std::uint64_t i = 0; i < n; ++i) {
    SampleMeta s;
    s.id = r.u64("sample_id");
    s.label = r.u32("label");
    const std::uint8_t split = r.u8("split");
    if (s.id != i) throw FormatError("dataset index: sample ids must be dense, found " + std::to_string(s.id) +
                                     " at position " + std::to_string(i));
    if (s.label >= classes) throw FormatError("dataset index: sample " + std::to_string(s.id) + " has label " +
                                              std::to_string(s.label) + " outside " + std::to_string(classes) +
                                              " classes");
    if (split > 1) throw FormatError("dataset index: sample " + std::to_string(s.id) + " has invalid split");
    s.test = split == 1;
    h.index.samples.push_back(s);
  }
  if (!r.done()) throw FormatError("dataset index: trailing bytes after records");
  return h;
}

}  // namespace

void write_dataset(const Dataset& ds, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "images");
  io::write_file((fs::path(dir) / "index.bin").string(), encode_index(ds));
  for (const auto& s : ds.index.samples) {
    io::ByteWriter w;
    for (float v : ds.pixels[s.id]) w.f32(v);
    io::write_file((fs::path(dir) / "images" / (std::to_string(s.id) + ".f32")).string(), w.str());
  }
}

DatasetIndex load_dataset_index(const std::string& dir) {
  return decode_index(io::read_file((fs::path(dir) / "index.bin").string())).index;
}

Dataset load_dataset(const std::string& dir) {
  IndexHeader h = decode_index(io::read_file((fs::path(dir) / "index.bin").string()));
  Dataset ds;
  ds.height = h.height;
  ds.width = h.width;
  ds.channels = h.channels;
  ds.index = std::move(h.index);
  const std::size_t n = ds.sample_size();
  for (const auto& s : ds.index.samples) {
    const std::string path = (fs::path(dir) / "images" / (std::to_string(s.id) + ".f32")).string();
    const std::string bytes = io::read_file(path);
    if (bytes.size() != n * 4) {
      throw FormatError("dataset: " + path + " holds " + std::to_string(bytes.size()) + " bytes, expected " +
                        std::to_string(n * 4));
    }
    io::ByteReader r(bytes);
    std::vector<float> px(n);
    for (float& v : px) v = r.f32("pixels");
    ds.pixels.push_back(std::move(px));
  }
  return ds;
}

}  // namespace bfscl
