#include "dmn/datasets.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "dmn/rng.hpp"

namespace fs = std::filesystem;

namespace dmn {

std::string to_string(SyntheticKind kind) {
  return kind == SyntheticKind::squares ? "squares" : "rectangles";
}

std::optional<SyntheticKind> parse_synthetic_kind(const std::string& name) {
  if (name == "squares") return SyntheticKind::squares;
  if (name == "rectangles") return SyntheticKind::rectangles;
  return std::nullopt;
}

std::vector<Sample> gen_synthetic(SyntheticKind kind, std::uint64_t seed, std::size_t size,
                                  std::size_t count) {
  // (height, width) per class
  const std::size_t dims[2][2] = {
      {kind == SyntheticKind::squares ? 5u : 3u, kind == SyntheticKind::squares ? 5u : 7u},
      {kind == SyntheticKind::squares ? 9u : 7u, kind == SyntheticKind::squares ? 9u : 3u}};
  if (size < 11) throw std::invalid_argument("synthetic images need a side of at least 11");
  Rng rng(seed);
  std::vector<Sample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t label = i % 2;
    const std::size_t h = dims[label][0];
    const std::size_t w = dims[label][1];
    const std::size_t top = 1 + static_cast<std::size_t>(rng.below(size - h - 1));
    const std::size_t left = 1 + static_cast<std::size_t>(rng.below(size - w - 1));
    Tensor img(1, size, size);
    for (std::size_t r = top; r < top + h; ++r)
      for (std::size_t c = left; c < left + w; ++c) img.at(0, r, c) = 1.0;
    out.push_back(Sample{std::move(img), label, i});
  }
  return out;
}

std::vector<Sample> gen_squares(std::uint64_t seed, std::size_t size) {
  return gen_synthetic(SyntheticKind::squares, seed, size);
}

std::vector<Sample> gen_rectangles(std::uint64_t seed, std::size_t size) {
  return gen_synthetic(SyntheticKind::rectangles, seed, size);
}

SplitIds split_60_20_20(std::span<const Sample> samples, std::uint64_t seed) {
  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (const auto& s : samples) by_class[s.label].push_back(s.id);
  Rng rng(seed);
  SplitIds ids;
  for (auto& [label, members] : by_class) {
    rng.shuffle(std::span<std::size_t>(members));
    const std::size_t n = members.size();
    const auto n_train = static_cast<std::size_t>(std::llround(0.6 * static_cast<double>(n)));
    const auto n_val = std::min(
        n - n_train, static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n))));
    auto it = members.begin();
    ids.train.insert(ids.train.end(), it, it + static_cast<std::ptrdiff_t>(n_train));
    it += static_cast<std::ptrdiff_t>(n_train);
    ids.validation.insert(ids.validation.end(), it, it + static_cast<std::ptrdiff_t>(n_val));
    it += static_cast<std::ptrdiff_t>(n_val);
    ids.test.insert(ids.test.end(), it, members.end());
  }
  rng.shuffle(std::span<std::size_t>(ids.train));
  rng.shuffle(std::span<std::size_t>(ids.validation));
  rng.shuffle(std::span<std::size_t>(ids.test));
  return ids;
}

Split materialize(std::span<const Sample> samples, const SplitIds& ids) {
  std::map<std::size_t, const Sample*> index;
  for (const auto& s : samples) index[s.id] = &s;
  auto pick = [&](const std::vector<std::size_t>& list) {
    std::vector<Sample> out;
    out.reserve(list.size());
    for (auto id : list) {
      auto it = index.find(id);
      if (it == index.end()) throw std::out_of_range("split refers to unknown sample id " +
                                                     std::to_string(id));
      out.push_back(*it->second);
    }
    return out;
  };
  return Split{pick(ids.train), pick(ids.validation), pick(ids.test)};
}

// ---- netpbm ------------------------------------------------------------------

namespace {

struct HeaderReader {
  std::string_view bytes;
  std::size_t pos = 0;
  const std::string& source;

  [[noreturn]] void fail(const std::string& what) const {
    throw ImageFormatError(source + ": " + what);
  }

  void skip_space_and_comments() {
    while (pos < bytes.size()) {
      const char ch = bytes[pos];
      if (ch == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n' && bytes[pos] != '\r') ++pos;
      } else if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\v' ||
                 ch == '\f') {
        ++pos;
      } else {
        return;
      }
    }
  }

  unsigned long number(const char* field) {
    skip_space_and_comments();
    if (pos >= bytes.size() || bytes[pos] < '0' || bytes[pos] > '9') {
      fail(std::string("malformed header: expected ") + field);
    }
    unsigned long v = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
      v = v * 10 + static_cast<unsigned long>(bytes[pos] - '0');
      if (v > 0xFFFFFFFFul) fail(std::string("malformed header: ") + field + " too large");
      ++pos;
    }
    return v;
  }
};

}  // namespace

Tensor decode_netpbm(std::string_view bytes, const std::string& source) {
  HeaderReader rd{bytes, 0, source};
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    rd.fail("not a binary PGM (P5) or PPM (P6) file");
  }
  const std::size_t channels = bytes[1] == '5' ? 1 : 3;
  rd.pos = 2;
  const auto width = rd.number("width");
  const auto height = rd.number("height");
  const auto maxval = rd.number("maxval");
  if (width == 0 || height == 0) rd.fail("malformed header: zero image dimension");
  if (maxval == 0 || maxval > 65535) rd.fail("malformed header: maxval must be in 1..65535");
  if (rd.pos >= bytes.size()) rd.fail("truncated payload: missing pixel data");
  const char sep = bytes[rd.pos];
  if (sep != ' ' && sep != '\t' && sep != '\n' && sep != '\r') {
    rd.fail("malformed header: maxval must be followed by one whitespace byte");
  }
  ++rd.pos;
  const std::size_t bps = maxval > 255 ? 2 : 1;
  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() - rd.pos < count * bps) {
    rd.fail("truncated payload: expected " + std::to_string(count * bps) + " bytes, found " +
            std::to_string(bytes.size() - rd.pos));
  }
  Tensor img(channels, height, width);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + rd.pos);
  const auto denom = static_cast<double>(maxval);
  for (std::size_t k = 0; k < count; ++k) {
    unsigned v = bps == 2 ? (static_cast<unsigned>(p[2 * k]) << 8) | p[2 * k + 1] : p[k];
    if (v > maxval) v = static_cast<unsigned>(maxval);
    // interleaved on disk, planar in memory
    const std::size_t pixel = k / channels;
    const std::size_t c = k % channels;
    img.data()[c * (static_cast<std::size_t>(width) * height) + pixel] =
        static_cast<double>(v) / denom;
  }
  return img;
}

Tensor read_netpbm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageFormatError(path.string() + ": cannot open file");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_netpbm(bytes, path.string());
}

std::string encode_netpbm(const Tensor& image, unsigned maxval) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw ShapeError("netpbm encoding needs 1 or 3 channels, got " + image.shape().str());
  }
  if (maxval == 0 || maxval > 65535) throw std::invalid_argument("maxval must be in 1..65535");
  const std::size_t c = image.channels();
  const std::size_t plane = image.height() * image.width();
  std::string out = (c == 1 ? "P5\n" : "P6\n") + std::to_string(image.width()) + " " +
                    std::to_string(image.height()) + "\n" + std::to_string(maxval) + "\n";
  const std::size_t bps = maxval > 255 ? 2 : 1;
  out.reserve(out.size() + plane * c * bps);
  for (std::size_t k = 0; k < plane; ++k) {
    for (std::size_t l = 0; l < c; ++l) {
      const double v = std::clamp(image.data()[l * plane + k], 0.0, 1.0);
      const auto q = static_cast<unsigned>(std::lround(v * maxval));
      if (bps == 2) out.push_back(static_cast<char>(q >> 8));
      out.push_back(static_cast<char>(q & 0xFF));
    }
  }
  return out;
}

void write_netpbm(const fs::path& path, const Tensor& image, unsigned maxval) {
  const std::string bytes = encode_netpbm(image, maxval);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

Tensor resize_bilinear(const Tensor& image, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw ShapeError("resize target must be non-empty");
  if (image.height() == height && image.width() == width) return image;
  const double sy = static_cast<double>(image.height()) / static_cast<double>(height);
  const double sx = static_cast<double>(image.width()) / static_cast<double>(width);
  auto coord = [](std::size_t dst, double scale, std::size_t limit, std::size_t& i0,
                  std::size_t& i1, double& t) {
    double src = (static_cast<double>(dst) + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(limit - 1));
    i0 = static_cast<std::size_t>(std::floor(src));
    i1 = std::min(i0 + 1, limit - 1);
    t = src - static_cast<double>(i0);
  };
  Tensor out(image.channels(), height, width);
  for (std::size_t c = 0; c < image.channels(); ++c) {
    for (std::size_t i = 0; i < height; ++i) {
      std::size_t y0, y1;
      double ty;
      coord(i, sy, image.height(), y0, y1, ty);
      for (std::size_t j = 0; j < width; ++j) {
        std::size_t x0, x1;
        double tx;
        coord(j, sx, image.width(), x0, x1, tx);
        const double a = image.at(c, y0, x0);
        const double b = image.at(c, y0, x1);
        const double d = image.at(c, y1, x0);
        const double e = image.at(c, y1, x1);
        const double top = a + tx * (b - a);
        const double bottom = d + tx * (e - d);
        out.at(c, i, j) = top + ty * (bottom - top);
      }
    }
  }
  return out;
}

Tensor resize_nearest(const Tensor& image, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw ShapeError("resize target must be non-empty");
  Tensor out(image.channels(), height, width);
  for (std::size_t c = 0; c < image.channels(); ++c)
    for (std::size_t i = 0; i < height; ++i)
      for (std::size_t j = 0; j < width; ++j)
        out.at(c, i, j) = image.at(c, i * image.height() / height, j * image.width() / width);
  return out;
}

Tensor convert_channels(const Tensor& image, std::size_t channels) {
  if (image.channels() == channels) return image;
  if (image.channels() == 1 && channels == 3) {
    const std::vector<Tensor> parts{image, image, image};
    return concat_channels(parts);
  }
  if (image.channels() == 3 && channels == 1) {
    Tensor out(1, image.height(), image.width());
    for (std::size_t k = 0; k < out.size(); ++k) {
      out.data()[k] =
          (image.plane(0)[k] + image.plane(1)[k] + image.plane(2)[k]) / 3.0;
    }
    return out;
  }
  throw ShapeError("cannot convert " + image.shape().str() + " to " + std::to_string(channels) +
                   " channels");
}

namespace {

bool is_netpbm_file(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) {
    return static_cast<char>(std::tolower(ch));
  });
  return ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

Tensor prepare(const fs::path& file, std::size_t size, std::size_t& channels) {
  Tensor img = read_netpbm(file);
  if (channels == 0) channels = img.channels();
  return resize_bilinear(convert_channels(img, channels), size, size);
}

}  // namespace

FolderDataset load_image_folder(const fs::path& root, std::size_t size, std::size_t channels) {
  if (!fs::is_directory(root)) throw std::runtime_error(root.string() + ": not a directory");
  std::vector<fs::path> classes;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) classes.push_back(e.path());
  }
  std::sort(classes.begin(), classes.end());
  if (classes.empty()) throw std::runtime_error(root.string() + ": no class subdirectories");
  FolderDataset ds;
  ds.channels = channels;
  for (std::size_t label = 0; label < classes.size(); ++label) {
    ds.class_names.push_back(classes[label].filename().string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(classes[label])) {
      if (e.is_regular_file() && is_netpbm_file(e.path())) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      ds.samples.push_back(Sample{prepare(f, size, ds.channels), label, ds.samples.size()});
    }
  }
  if (ds.samples.empty()) throw std::runtime_error(root.string() + ": no PGM/PPM images found");
  return ds;
}

std::vector<ManifestRow> write_dataset(const fs::path& dir, std::span<const Sample> samples,
                                       const SplitIds& ids) {
  std::map<std::size_t, std::string> split_of;
  for (auto id : ids.train) split_of[id] = "train";
  for (auto id : ids.validation) split_of[id] = "validation";
  for (auto id : ids.test) split_of[id] = "test";
  fs::create_directories(dir);
  std::vector<ManifestRow> rows;
  for (const auto& s : samples) {
    const std::string sub = "class_" + std::to_string(s.label);
    fs::create_directories(dir / sub);
    char name[32];
    std::snprintf(name, sizeof name, "%04zu.pgm", s.id);
    const std::string file = sub + "/" + name;
    write_netpbm(dir / file, s.image);
    auto it = split_of.find(s.id);
    rows.push_back(ManifestRow{s.id, file, s.label, it == split_of.end() ? "" : it->second});
  }
  std::ofstream out(dir / "manifest.csv", std::ios::binary);
  if (!out) throw std::runtime_error((dir / "manifest.csv").string() + ": cannot open for writing");
  out << "id,file,label,split\n";
  for (const auto& r : rows) out << r.id << ',' << r.file << ',' << r.label << ',' << r.split << '\n';
  if (!out) throw std::runtime_error((dir / "manifest.csv").string() + ": write failed");
  return rows;
}

std::vector<ManifestRow> read_manifest(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw std::runtime_error(manifest.string() + ": cannot open");
  std::string line;
  std::vector<ManifestRow> rows;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      if (line != "id,file,label,split") {
        throw std::runtime_error(manifest.string() + ":1: expected header id,file,label,split");
      }
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (line.back() == ',') cols.emplace_back();
    if (cols.size() != 4) {
      throw std::runtime_error(manifest.string() + ":" + std::to_string(lineno) +
                               ": expected 4 columns");
    }
    try {
      rows.push_back(ManifestRow{std::stoul(cols[0]), cols[1], std::stoul(cols[2]), cols[3]});
    } catch (const std::logic_error&) {
      throw std::runtime_error(manifest.string() + ":" + std::to_string(lineno) +
                               ": id and label must be integers");
    }
  }
  return rows;
}

ManifestDataset load_manifest_dataset(const fs::path& dir, std::size_t size,
                                      std::size_t channels) {
  const auto rows = read_manifest(dir / "manifest.csv");
  ManifestDataset ds;
  ds.channels = channels;
  for (const auto& r : rows) {
    Sample s{prepare(dir / r.file, size, ds.channels), r.label, r.id};
    ds.classes = std::max(ds.classes, r.label + 1);
    if (r.split == "train") {
      ds.split.train.push_back(std::move(s));
    } else if (r.split == "validation") {
      ds.split.validation.push_back(std::move(s));
    } else if (r.split == "test") {
      ds.split.test.push_back(std::move(s));
    } else {
      throw std::runtime_error((dir / "manifest.csv").string() + ": sample " +
                               std::to_string(r.id) + " has unknown split '" + r.split + "'");
    }
  }
  return ds;
}

}  // namespace dmn
