#include "hpotts/io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "hpotts/error.hpp"

namespace hpotts {

namespace {

// Whitespace tokenizer that remembers where each token came from.
class TokenReader {
 public:
  TokenReader(std::istream& in, std::string source)
      : in_(in), source_(std::move(source)) {}

  bool next(std::string& token) {
    while (pos_ >= line_.size() || !skip_space()) {
      if (!std::getline(in_, line_)) return false;
      ++line_no_;
      pos_ = 0;
    }
    const std::size_t start = pos_;
    while (pos_ < line_.size() && !std::isspace(static_cast<unsigned char>(line_[pos_]))) {
      ++pos_;
    }
    token = line_.substr(start, pos_ - start);
    ++token_no_;
    return true;
  }

  std::string require(const std::string& what) {
    std::string token;
    if (!next(token)) {
      throw ParseError(source_ + ": unexpected end of input after token " +
                       std::to_string(token_no_) + " (line " +
                       std::to_string(line_no_) + "), expected " + what);
    }
    return token;
  }

  [[noreturn]] void fail(const std::string& token, const std::string& why) const {
    throw ParseError(source_ + ": line " + std::to_string(line_no_) +
                     ", token " + std::to_string(token_no_) + " '" + token +
                     "': " + why);
  }

  void expect_end() {
    std::string token;
    if (next(token)) fail(token, "trailing data after the last value");
  }

 private:
  bool skip_space() {
    while (pos_ < line_.size() &&
           std::isspace(static_cast<unsigned char>(line_[pos_]))) {
      ++pos_;
    }
    return pos_ < line_.size();
  }

  std::istream& in_;
  std::string source_;
  std::string line_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
  std::size_t token_no_ = 0;
};

template <class T>
bool parse_number(const std::string& token, T& value) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last;
}

double read_real(TokenReader& r, const std::string& what) {
  const std::string token = r.require(what);
  double value = 0.0;
  if (!parse_number(token, value) || !std::isfinite(value)) {
    r.fail(token, "expected finite real " + what);
  }
  return value;
}

int read_positive(TokenReader& r, const std::string& what) {
  const std::string token = r.require(what);
  int value = 0;
  if (!parse_number(token, value) || value < 1) {
    r.fail(token, "expected positive integer " + what);
  }
  return value;
}

void read_magic(TokenReader& r, const std::string& magic) {
  const std::string token = r.require("header '" + magic + "'");
  if (token != magic) r.fail(token, "expected header '" + magic + "'");
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return in;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void write_lmap(std::ostream& out, const LabelField& field) {
  const GridDims& dims = field.dims();
  out << "LMAP " << dims.rows() << ' ' << dims.cols() << ' '
      << field.num_classes() << '\n';
  for (int r = 0; r < dims.rows(); ++r) {
    for (int c = 0; c < dims.cols(); ++c) {
      if (c) out << ' ';
      out << field[dims.index({r, c})];
    }
    out << '\n';
  }
}

LabelField read_lmap(std::istream& in, const std::string& source) {
  TokenReader r(in, source);
  read_magic(r, "LMAP");
  const int rows = read_positive(r, "row count");
  const int cols = read_positive(r, "column count");
  const std::string l_token = r.require("class count");
  int num_classes = 0;
  if (!parse_number(l_token, num_classes) || num_classes < 2) {
    r.fail(l_token, "expected class count >= 2");
  }
  const GridDims dims(rows, cols);
  std::vector<int> labels(dims.size());
  for (int& label : labels) {
    const std::string token = r.require("label");
    if (!parse_number(token, label)) r.fail(token, "expected integer label");
    if (label < 0 || label >= num_classes) {
      r.fail(token, "label outside [0, " + std::to_string(num_classes) + ")");
    }
  }
  r.expect_end();
  return LabelField(dims, num_classes, std::move(labels));
}

void write_rimg(std::ostream& out, const RadiometricImage& image) {
  const GridDims& dims = image.dims();
  out << "RIMG " << dims.rows() << ' ' << dims.cols() << '\n';
  for (int r = 0; r < dims.rows(); ++r) {
    for (int c = 0; c < dims.cols(); ++c) {
      if (c) out << ' ';
      out << format_double(image[dims.index({r, c})]);
    }
    out << '\n';
  }
}

RadiometricImage read_rimg(std::istream& in, const std::string& source) {
  TokenReader r(in, source);
  read_magic(r, "RIMG");
  const int rows = read_positive(r, "row count");
  const int cols = read_positive(r, "column count");
  const GridDims dims(rows, cols);
  std::vector<double> values(dims.size());
  for (double& v : values) v = read_real(r, "pixel value");
  r.expect_end();
  return RadiometricImage(dims, std::move(values));
}

void write_emit(std::ostream& out, const EmissionModel& model) {
  out << "EMIT " << model.num_classes() << ' ' << format_double(model.sigma())
      << '\n';
  for (int l = 0; l < model.num_classes(); ++l) {
    if (l) out << ' ';
    out << format_double(model.mean(l));
  }
  out << '\n';
}

EmissionModel read_emit(std::istream& in, const std::string& source) {
  TokenReader r(in, source);
  read_magic(r, "EMIT");
  const std::string l_token = r.require("class count");
  int num_classes = 0;
  if (!parse_number(l_token, num_classes) || num_classes < 2) {
    r.fail(l_token, "expected class count >= 2");
  }
  const std::string s_token = r.require("sigma");
  double sigma = 0.0;
  if (!parse_number(s_token, sigma) || !(sigma > 0.0) || !std::isfinite(sigma)) {
    r.fail(s_token, "expected positive sigma");
  }
  std::vector<double> means(num_classes);
  for (double& m : means) m = read_real(r, "class mean");
  r.expect_end();
  return EmissionModel(std::move(means), sigma);
}

void save_lmap(const std::filesystem::path& path, const LabelField& field) {
  auto out = open_out(path);
  write_lmap(out, field);
}

LabelField load_lmap(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_lmap(in, path.string());
}

void save_rimg(const std::filesystem::path& path,
               const RadiometricImage& image) {
  auto out = open_out(path);
  write_rimg(out, image);
}

RadiometricImage load_rimg(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_rimg(in, path.string());
}

void save_emit(const std::filesystem::path& path, const EmissionModel& model) {
  auto out = open_out(path);
  write_emit(out, model);
}

EmissionModel load_emit(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_emit(in, path.string());
}

void write_metadata(const std::filesystem::path& output, const Metadata& meta) {
  auto out = open_out(output.string() + ".meta");
  for (const auto& [key, value] : meta) out << key << '=' << value << '\n';
}

}  // namespace hpotts
