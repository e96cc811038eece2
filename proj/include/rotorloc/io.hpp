#pragma once

// File formats: CSV with full-precision doubles, 32-bit float WAV export,
// and little-endian binary checkpoints for models and datasets.

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "rotorloc/errors.hpp"
#include "rotorloc/localizer.hpp"
#include "rotorloc/waveform.hpp"

namespace rotorloc::io {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline bool needs_quoting(const std::string& s) {
  return s.find_first_of(",\"\n") != std::string::npos;
}

inline std::string quote(const std::string& s) {
  if (!needs_quoting(s)) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace detail

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline void write_csv(const std::string& path,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  auto write_row = [&out](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out << ',';
      out << detail::quote(row[i]);
    }
    out << '\n';
  };
  write_row(header);
  for (const auto& row : rows) write_row(row);
  if (!out) throw IoError("failed writing " + path);
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quoted) {
        if (c == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            cell += '"';
            ++i;
          } else {
            quoted = false;
          }
        } else {
          cell += c;
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        cells.push_back(std::move(cell));
        cell.clear();
      } else {
        cell += c;
      }
    }
    cells.push_back(std::move(cell));
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      table.rows.push_back(std::move(cells));
    }
  }
  return table;
}

// 32-bit float WAV, channels interleaved.
inline void write_wav(const std::string& path,
                      const std::vector<std::vector<double>>& channels,
                      double sample_rate) {
  if (channels.empty()) throw IoError("wav needs at least one channel");
  const std::size_t frames = channels.front().size();
  for (const auto& c : channels) {
    if (c.size() != frames) throw LengthMismatch("wav channels must align");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");

  const std::uint16_t num_channels = std::uint16_t(channels.size());
  const std::uint32_t rate = std::uint32_t(sample_rate);
  const std::uint16_t bits = 32;
  const std::uint16_t block = num_channels * (bits / 8);
  const std::uint32_t data_bytes = std::uint32_t(frames) * block;

  auto put_u16 = [&out](std::uint16_t v) {
    char b[2] = {char(v & 0xFF), char((v >> 8) & 0xFF)};
    out.write(b, 2);
  };
  auto put_u32 = [&out](std::uint32_t v) {
    char b[4] = {char(v & 0xFF), char((v >> 8) & 0xFF), char((v >> 16) & 0xFF),
                 char((v >> 24) & 0xFF)};
    out.write(b, 4);
  };

  out.write("RIFF", 4);
  put_u32(36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(16);
  put_u16(3);  // IEEE float
  put_u16(num_channels);
  put_u32(rate);
  put_u32(rate * block);
  put_u16(block);
  put_u16(bits);
  out.write("data", 4);
  put_u32(data_bytes);
  for (std::size_t t = 0; t < frames; ++t) {
    for (const auto& c : channels) {
      const float v = float(c[t]);
      std::uint32_t u;
      std::memcpy(&u, &v, 4);
      put_u32(u);
    }
  }
  if (!out) throw IoError("failed writing " + path);
}

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = char((v >> (8 * i)) & 0xFF);
  os.write(b, 8);
}

inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw IoError("unexpected end of file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}

inline void put_f64(std::ostream& os, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  put_u64(os, u);
}

inline double get_f64(std::istream& is) {
  const std::uint64_t u = get_u64(is);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

inline void put_array(std::ostream& os, const std::vector<double>& v) {
  put_u64(os, v.size());
  for (double x : v) put_f64(os, x);
}

inline std::vector<double> get_array(std::istream& is) {
  const std::uint64_t n = get_u64(is);
  std::vector<double> v(n);
  for (double& x : v) x = get_f64(is);
  return v;
}

inline void check_magic(std::istream& is, const char* magic) {
  char buf[8];
  is.read(buf, 8);
  if (!is || std::memcmp(buf, magic, 8) != 0) {
    throw IoError("bad file magic");
  }
}

}  // namespace detail

inline void save_model(const std::string& path, const LocalizerModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write("RLOCMDL1", 8);
  detail::put_u64(out, model.num_mics);
  detail::put_u64(out, model.samples_per_channel);
  detail::put_u64(out, model.subsample_dim);
  detail::put_u64(out, model.hidden_sizes.size());
  for (std::size_t h : model.hidden_sizes) detail::put_u64(out, h);
  detail::put_u64(out, model.zero_mean_input ? 1 : 0);
  detail::put_f64(out, model.input_scale);
  detail::put_array(out, model.input_offset);
  detail::put_array(out, model.subsample);
  detail::put_u64(out, model.weights.size());
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    detail::put_array(out, model.weights[l]);
    detail::put_array(out, model.biases[l]);
  }
  if (!out) throw IoError("failed writing " + path);
}

inline LocalizerModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  detail::check_magic(in, "RLOCMDL1");
  LocalizerModel model;
  model.num_mics = detail::get_u64(in);
  model.samples_per_channel = detail::get_u64(in);
  model.subsample_dim = detail::get_u64(in);
  const std::uint64_t hidden = detail::get_u64(in);
  for (std::uint64_t i = 0; i < hidden; ++i) {
    model.hidden_sizes.push_back(detail::get_u64(in));
  }
  model.zero_mean_input = detail::get_u64(in) != 0;
  model.input_scale = detail::get_f64(in);
  model.input_offset = detail::get_array(in);
  model.subsample = detail::get_array(in);
  const std::uint64_t layers = detail::get_u64(in);
  for (std::uint64_t l = 0; l < layers; ++l) {
    model.weights.push_back(detail::get_array(in));
    model.biases.push_back(detail::get_array(in));
  }
  if (model.input_offset.size() != model.input_size()) {
    throw IoError("model file is inconsistent");
  }
  if (model.subsample.size() !=
      model.subsample_dim * model.samples_per_channel) {
    throw IoError("model file is inconsistent");
  }
  const auto dims = model.layer_dims();
  if (model.weights.size() + 1 != dims.size()) {
    throw IoError("model file is inconsistent");
  }
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    if (model.weights[l].size() != dims[l] * dims[l + 1] ||
        model.biases[l].size() != dims[l + 1]) {
      throw IoError("model file is inconsistent");
    }
  }
  return model;
}

inline void save_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write("RLOCDAT1", 8);
  detail::put_u64(out, data.samples.size());
  detail::put_u64(out, data.num_mics);
  detail::put_u64(out, data.samples_per_channel);
  detail::put_f64(out, data.sample_rate);
  detail::put_f64(out, data.bounds.xmin);
  detail::put_f64(out, data.bounds.xmax);
  detail::put_f64(out, data.bounds.ymin);
  detail::put_f64(out, data.bounds.ymax);
  for (const Sample& s : data.samples) {
    detail::put_f64(out, s.location.x);
    detail::put_f64(out, s.location.y);
    detail::put_f64(out, s.heading);
    detail::put_array(out, s.waveforms);
  }
  if (!out) throw IoError("failed writing " + path);
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  detail::check_magic(in, "RLOCDAT1");
  Dataset data;
  const std::uint64_t n = detail::get_u64(in);
  data.num_mics = detail::get_u64(in);
  data.samples_per_channel = detail::get_u64(in);
  data.sample_rate = detail::get_f64(in);
  data.bounds.xmin = detail::get_f64(in);
  data.bounds.xmax = detail::get_f64(in);
  data.bounds.ymin = detail::get_f64(in);
  data.bounds.ymax = detail::get_f64(in);
  for (std::uint64_t i = 0; i < n; ++i) {
    Sample s;
    s.location.x = detail::get_f64(in);
    s.location.y = detail::get_f64(in);
    s.heading = detail::get_f64(in);
    s.waveforms = detail::get_array(in);
    if (s.waveforms.size() != data.input_size()) {
      throw IoError("dataset file is inconsistent");
    }
    data.samples.push_back(std::move(s));
  }
  return data;
}

}  // namespace rotorloc::io
