#include "reckit/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "reckit/error.hpp"

namespace reckit {

static_assert(std::endian::native == std::endian::little, "model files assume a little-endian host");

void ModelArchive::put(const std::string& key, ArchiveArray data) {
  for (auto& [k, v] : arrays_) {
    if (k == key) {
      v = std::move(data);
      return;
    }
  }
  arrays_.emplace_back(key, std::move(data));
}

const ArchiveArray& ModelArchive::find(const std::string& key) const {
  for (const auto& [k, v] : arrays_)
    if (k == key) return v;
  throw ModelFormatError("model '" + algorithm + "' has no array '" + key + "'");
}

bool ModelArchive::has(const std::string& key) const {
  for (const auto& [k, v] : arrays_)
    if (k == key) return true;
  return false;
}

namespace {

template <typename T>
const std::vector<T>& typed(const ArchiveArray& a, const std::string& key) {
  if (const auto* p = std::get_if<std::vector<T>>(&a)) return *p;
  throw ModelFormatError("array '" + key + "' has the wrong element type");
}

}  // namespace

const std::vector<double>& ModelArchive::doubles(const std::string& key) const {
  return typed<double>(find(key), key);
}
const std::vector<std::int64_t>& ModelArchive::ints(const std::string& key) const {
  return typed<std::int64_t>(find(key), key);
}
const std::vector<std::string>& ModelArchive::strings(const std::string& key) const {
  return typed<std::string>(find(key), key);
}

void ModelArchive::put_index(const std::string& key, const Index& index) { put(key, index.ids()); }

Index ModelArchive::index(const std::string& key) const { return Index(strings(key)); }

void ModelArchive::put_csr(const std::string& key, const CsrMatrix& m) {
  put(key + ".shape", std::vector<std::int64_t>{m.n_rows, m.n_cols});
  put(key + ".row_ptr", m.row_ptr);
  put(key + ".col_idx", std::vector<std::int64_t>(m.col_idx.begin(), m.col_idx.end()));
  put(key + ".values", m.values);
}

CsrMatrix ModelArchive::csr(const std::string& key) const {
  const auto& shape = ints(key + ".shape");
  if (shape.size() != 2) throw ModelFormatError("bad matrix shape for '" + key + "'");
  CsrMatrix m;
  m.n_rows = static_cast<std::int32_t>(shape[0]);
  m.n_cols = static_cast<std::int32_t>(shape[1]);
  m.row_ptr = ints(key + ".row_ptr");
  const auto& cols = ints(key + ".col_idx");
  m.col_idx.assign(cols.begin(), cols.end());
  m.values = doubles(key + ".values");
  if (m.row_ptr.size() != static_cast<std::size_t>(m.n_rows) + 1 ||
      m.values.size() != m.col_idx.size() ||
      static_cast<std::size_t>(m.row_ptr.back()) != m.col_idx.size())
    throw ModelFormatError("inconsistent sparse matrix '" + key + "'");
  return m;
}

ModelArchive& ModelArchive::child(const std::string& key) {
  for (auto& [k, v] : children_)
    if (k == key) return v;
  children_.emplace_back(key, ModelArchive{});
  return children_.back().second;
}

const ModelArchive& ModelArchive::child(const std::string& key) const {
  for (const auto& [k, v] : children_)
    if (k == key) return v;
  throw ModelFormatError("model '" + algorithm + "' has no component '" + key + "'");
}

namespace {

template <typename T>
void put_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_str(std::ostream& out, const std::string& s) {
  put_raw(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void write_section(std::ostream& out, const ModelArchive& ar) {
  put_str(out, ar.algorithm);
  put_str(out, ar.params.dump());
  put_raw(out, static_cast<std::uint32_t>(ar.arrays().size()));
  for (const auto& [key, arr] : ar.arrays()) {
    put_str(out, key);
    put_raw(out, static_cast<std::uint8_t>(arr.index()));
    std::visit(
        [&](const auto& vec) {
          put_raw(out, static_cast<std::uint64_t>(vec.size()));
          using E = typename std::decay_t<decltype(vec)>::value_type;
          if constexpr (std::is_same_v<E, std::string>) {
            for (const auto& s : vec) put_str(out, s);
          } else {
            out.write(reinterpret_cast<const char*>(vec.data()),
                      static_cast<std::streamsize>(vec.size() * sizeof(E)));
          }
        },
        arr);
  }
  put_raw(out, static_cast<std::uint32_t>(ar.children().size()));
  for (const auto& [key, sub] : ar.children()) {
    put_str(out, key);
    write_section(out, sub);
  }
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  template <typename T>
  T raw() {
    T v;
    bytes(reinterpret_cast<char*>(&v), sizeof v);
    return v;
  }

  void bytes(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw ModelFormatError("model file is truncated");
  }

  std::string str() {
    const auto n = raw<std::uint32_t>();
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }

  ModelArchive section(int depth) {
    if (depth > 16) throw ModelFormatError("model nesting too deep");
    ModelArchive ar;
    ar.algorithm = str();
    try {
      ar.params = nlohmann::json::parse(str());
    } catch (const nlohmann::json::exception& e) {
      throw ModelFormatError(std::string("bad hyperparameter block: ") + e.what());
    }
    const auto n_arrays = raw<std::uint32_t>();
    for (std::uint32_t a = 0; a < n_arrays; ++a) {
      auto key = str();
      const auto type = raw<std::uint8_t>();
      const auto len = raw<std::uint64_t>();
      if (len > (std::uint64_t{1} << 40)) throw ModelFormatError("array length out of range");
      switch (type) {
        case 0: {
          std::vector<double> v(len);
          bytes(reinterpret_cast<char*>(v.data()), len * sizeof(double));
          ar.put(key, std::move(v));
          break;
        }
        case 1: {
          std::vector<std::int64_t> v(len);
          bytes(reinterpret_cast<char*>(v.data()), len * sizeof(std::int64_t));
          ar.put(key, std::move(v));
          break;
        }
        case 2: {
          std::vector<std::string> v;
          v.reserve(len);
          for (std::uint64_t k = 0; k < len; ++k) v.push_back(str());
          ar.put(key, std::move(v));
          break;
        }
        default: throw ModelFormatError("unknown array type " + std::to_string(type));
      }
    }
    const auto n_children = raw<std::uint32_t>();
    for (std::uint32_t c = 0; c < n_children; ++c) {
      auto key = str();
      ar.child(key) = section(depth + 1);
    }
    return ar;
  }

 private:
  std::istream& in_;
};

}  // namespace

void write_archive(std::ostream& out, const ModelArchive& archive) {
  out.write(kModelMagic, sizeof kModelMagic);
  put_raw(out, kModelFormatVersion);
  write_section(out, archive);
}

ModelArchive read_archive(std::istream& in) {
  Reader rd(in);
  char magic[sizeof kModelMagic];
  rd.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kModelMagic, sizeof magic) != 0) throw ModelFormatError("not a model file");
  const auto version = rd.raw<std::uint32_t>();
  if (version > kModelFormatVersion)
    throw ModelFormatError("model format version " + std::to_string(version) +
                           " is newer than supported version " +
                           std::to_string(kModelFormatVersion));
  if (version == 0) throw ModelFormatError("invalid model format version 0");
  return rd.section(0);
}

void write_archive(const std::filesystem::path& path, const ModelArchive& archive) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_archive(out, archive);
  if (!out) throw IoError("failed writing " + path.string());
}

ModelArchive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_archive(in);
}

}  // namespace reckit
