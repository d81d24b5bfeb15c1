#include "cpwres/trace_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cpwres/constants.hpp"
#include "cpwres/errors.hpp"

namespace cpwres {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::vector<std::string_view> split_char(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(std::string_view token, std::size_t line) {
  token = trim(token);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
    throw ParseError("invalid number '" + std::string(token) + "'", line);
  }
  if (!std::isfinite(value)) throw ParseError("non-finite value '" + std::string(token) + "'", line);
  return value;
}

// Visits each line with its 1-based number.
template <typename F>
void for_each_line(std::string_view text, F&& f) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto pos = text.find('\n', start);
    std::string_view line =
        text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    f(line, line_no);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
}

// Sorts by frequency and rejects repeats; `values` are permuted alongside.
template <typename... Columns>
void sort_by_frequency(std::vector<double>& freqs, std::vector<std::size_t>& lines,
                       Columns&... columns) {
  std::vector<std::size_t> order(freqs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return freqs[a] < freqs[b]; });
  auto permute = [&](auto& v) {
    auto copy = v;
    for (std::size_t i = 0; i < order.size(); ++i) v[i] = copy[order[i]];
  };
  permute(freqs);
  permute(lines);
  (permute(columns), ...);
  for (std::size_t i = 1; i < freqs.size(); ++i) {
    if (freqs[i] == freqs[i - 1]) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", freqs[i]);
      fail(ErrorKind::DuplicateFrequency, "frequency " + std::string(buf) +
                                              " Hz appears on lines " +
                                              std::to_string(std::min(lines[i - 1], lines[i])) +
                                              " and " +
                                              std::to_string(std::max(lines[i - 1], lines[i])));
    }
  }
}

Complex from_pair(double x, double y, const std::string& fmt) {
  if (fmt == "ri") return {x, y};
  const double angle = y * constants::pi / 180.0;
  const double mag = fmt == "db" ? std::pow(10.0, x / 20.0) : x;
  return std::polar(mag, angle);
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Config, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail(ErrorKind::Config, "write failed for " + path.string());
}

TouchstoneData parse_touchstone_text(std::string_view text) {
  TouchstoneData out;
  bool have_options = false;
  double unit = 1e9;
  std::string fmt = "ma";
  std::vector<std::size_t> lines;

  for_each_line(text, [&](std::string_view raw, std::size_t line_no) {
    std::string_view line = raw;
    if (const auto bang = line.find('!'); bang != std::string_view::npos) {
      const auto comment = trim(line.substr(bang + 1));
      if (!comment.empty()) out.comments.emplace_back(comment);
      line = line.substr(0, bang);
    }
    line = trim(line);
    if (line.empty()) return;
    if (line.front() == '[') {
      throw Error(ErrorKind::UnsupportedFormat,
                  "line " + std::to_string(line_no) + ": Touchstone v2 keyword '" +
                      std::string(line) + "' is not supported");
    }
    if (line.front() == '#') {
      if (have_options) throw ParseError("second option line", line_no);
      have_options = true;
      const auto tokens = split_whitespace(line.substr(1));
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::string t = lower(tokens[i]);
        if (t == "hz") unit = 1.0;
        else if (t == "khz") unit = 1e3;
        else if (t == "mhz") unit = 1e6;
        else if (t == "ghz") unit = 1e9;
        else if (t == "ri" || t == "ma" || t == "db") fmt = t;
        else if (t == "s") {}
        else if (t == "y" || t == "z" || t == "h" || t == "g") {
          throw Error(ErrorKind::UnsupportedFormat,
                      "line " + std::to_string(line_no) + ": parameter type '" +
                          std::string(tokens[i]) + "' is not S");
        } else if (t == "r") {
          if (i + 1 >= tokens.size()) throw ParseError("missing reference impedance", line_no);
          out.reference_ohm = parse_number(tokens[++i], line_no);
        } else {
          throw ParseError("unknown option '" + std::string(tokens[i]) + "'", line_no);
        }
      }
      return;
    }
    if (!have_options) throw ParseError("data before the '#' option line", line_no);
    const auto tokens = split_whitespace(line);
    if (tokens.size() == 3) {
      throw Error(ErrorKind::UnsupportedFormat,
                  "line " + std::to_string(line_no) + ": one-port data (3 columns)");
    }
    if (tokens.size() != 9) {
      throw Error(ErrorKind::UnsupportedFormat,
                  "line " + std::to_string(line_no) + ": expected 9 columns for a two-port, got " +
                      std::to_string(tokens.size()));
    }
    const double f = parse_number(tokens[0], line_no) * unit;
    if (f < 0.0) throw ParseError("negative frequency", line_no);
    out.frequencies.push_back(f);
    lines.push_back(line_no);
    for (std::size_t k = 0; k < 4; ++k) {
      out.s[k].push_back(from_pair(parse_number(tokens[1 + 2 * k], line_no),
                                   parse_number(tokens[2 + 2 * k], line_no), fmt));
    }
  });

  if (!have_options) throw ParseError("missing '#' option line", 0);
  if (out.frequencies.empty()) throw ParseError("no data rows", 0);
  sort_by_frequency(out.frequencies, lines, out.s[0], out.s[1], out.s[2], out.s[3]);
  return out;
}

TouchstoneData read_touchstone(const std::filesystem::path& path) {
  const std::string ext = lower(path.extension().string());
  if (ext.size() == 4 && ext[1] == 's' && ext[3] == 'p' && ext != ".s2p") {
    fail(ErrorKind::UnsupportedFormat, path.string() + ": only two-port (.s2p) files are supported");
  }
  return parse_touchstone_text(read_text_file(path));
}

FrequencySweep parse_touchstone(const std::filesystem::path& path) {
  TouchstoneData data = read_touchstone(path);
  FrequencySweep sweep;
  sweep.frequencies = std::move(data.frequencies);
  sweep.s21 = std::move(data.s[1]);
  sweep.meta.comments = std::move(data.comments);
  sweep.meta.label = path.stem().string();
  return sweep;
}

// ---------------------------------------------------------------------------

namespace {

enum class Role { Freq, Re, Im, Mag, Phase, Unknown };

Role column_role(std::string_view name) {
  const std::string n = lower(trim(name));
  if (n == "freq_hz" || n == "frequency_hz" || n == "freq" || n == "frequency" || n == "f")
    return Role::Freq;
  if (n == "re" || n == "real" || n == "s21_re" || n == "re_s21") return Role::Re;
  if (n == "im" || n == "imag" || n == "s21_im" || n == "im_s21") return Role::Im;
  if (n == "mag_db" || n == "s21_db" || n == "db") return Role::Mag;
  if (n == "phase_deg" || n == "s21_deg" || n == "phase") return Role::Phase;
  return Role::Unknown;
}

void apply_meta(SweepMeta& meta, std::string_view comment, std::size_t line_no) {
  const auto colon = comment.find(':');
  if (colon == std::string_view::npos) {
    meta.comments.emplace_back(comment);
    return;
  }
  const std::string key = lower(trim(comment.substr(0, colon)));
  const std::string_view value = trim(comment.substr(colon + 1));
  if (key == "vna_power_dbm") meta.vna_power_dBm = parse_number(value, line_no);
  else if (key == "temperature_k") meta.temperature_K = parse_number(value, line_no);
  else if (key == "label") meta.label = std::string(value);
  else meta.comments.emplace_back(comment);
}

}  // namespace

FrequencySweep parse_csv_trace_text(std::string_view text, CsvLayout layout) {
  FrequencySweep sweep;
  bool have_header = false;
  int i_freq = -1, i_a = -1, i_b = -1;
  std::size_t n_cols = 0;
  std::vector<double> a, b;
  std::vector<std::size_t> lines;

  for_each_line(text, [&](std::string_view raw, std::size_t line_no) {
    const std::string_view line = trim(raw);
    if (line.empty()) return;
    if (line.front() == '#') {
      apply_meta(sweep.meta, trim(line.substr(1)), line_no);
      return;
    }
    const auto cells = split_char(line, ',');
    if (!have_header) {
      have_header = true;
      n_cols = cells.size();
      int re = -1, im = -1, mag = -1, ph = -1;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        const int idx = static_cast<int>(i);
        switch (column_role(cells[i])) {
          case Role::Freq: if (i_freq < 0) i_freq = idx; break;
          case Role::Re: if (re < 0) re = idx; break;
          case Role::Im: if (im < 0) im = idx; break;
          case Role::Mag: if (mag < 0) mag = idx; break;
          case Role::Phase: if (ph < 0) ph = idx; break;
          case Role::Unknown: break;
        }
      }
      if (i_freq < 0) throw ParseError("header has no frequency column", line_no);
      const bool has_ri = re >= 0 && im >= 0;
      const bool has_mp = mag >= 0 && ph >= 0;
      if (layout == CsvLayout::Auto) {
        if (has_ri) layout = CsvLayout::ReIm;
        else if (has_mp) layout = CsvLayout::MagPhase;
        else throw ParseError("header needs re/im or mag_dB/phase_deg columns", line_no);
      }
      if (layout == CsvLayout::ReIm) {
        if (!has_ri) throw ParseError("header lacks re/im columns", line_no);
        i_a = re;
        i_b = im;
      } else {
        if (!has_mp) throw ParseError("header lacks mag_dB/phase_deg columns", line_no);
        i_a = mag;
        i_b = ph;
      }
      return;
    }
    if (cells.size() != n_cols) {
      throw ParseError("expected " + std::to_string(n_cols) + " fields, got " +
                           std::to_string(cells.size()),
                       line_no);
    }
    const double f = parse_number(cells[static_cast<std::size_t>(i_freq)], line_no);
    if (f < 0.0) throw ParseError("negative frequency", line_no);
    sweep.frequencies.push_back(f);
    a.push_back(parse_number(cells[static_cast<std::size_t>(i_a)], line_no));
    b.push_back(parse_number(cells[static_cast<std::size_t>(i_b)], line_no));
    lines.push_back(line_no);
  });

  if (!have_header) throw ParseError("missing header row", 0);
  if (sweep.frequencies.empty()) throw ParseError("no data rows", 0);
  sort_by_frequency(sweep.frequencies, lines, a, b);
  sweep.s21.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    sweep.s21.push_back(layout == CsvLayout::ReIm ? Complex(a[i], b[i])
                                                  : from_pair(a[i], b[i], "db"));
  }
  return sweep;
}

FrequencySweep parse_csv_trace(const std::filesystem::path& path, CsvLayout layout) {
  FrequencySweep sweep = parse_csv_trace_text(read_text_file(path), layout);
  if (sweep.meta.label.empty()) sweep.meta.label = path.stem().string();
  return sweep;
}

std::string format_csv_trace(const FrequencySweep& sweep, CsvLayout layout) {
  if (sweep.frequencies.size() != sweep.s21.size()) {
    fail(ErrorKind::InvalidSweep, "frequency and S21 lengths differ");
  }
  std::string out;
  char buf[160];
  auto comment = [&](const char* key, const std::string& value) {
    out += "# ";
    out += key;
    out += ": ";
    out += value;
    out += '\n';
  };
  std::snprintf(buf, sizeof buf, "%.17g", sweep.meta.vna_power_dBm);
  comment("vna_power_dBm", buf);
  std::snprintf(buf, sizeof buf, "%.17g", sweep.meta.temperature_K);
  comment("temperature_K", buf);
  if (!sweep.meta.label.empty()) comment("label", sweep.meta.label);
  for (const auto& c : sweep.meta.comments) {
    out += "# ";
    out += c;
    out += '\n';
  }
  const bool ri = layout != CsvLayout::MagPhase;
  out += ri ? "freq_hz,re,im\n" : "freq_hz,mag_dB,phase_deg\n";
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const Complex z = sweep.s21[i];
    const double x = ri ? z.real() : 20.0 * std::log10(std::abs(z));
    const double y = ri ? z.imag() : std::arg(z) * 180.0 / constants::pi;
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", sweep.frequencies[i], x, y);
    out += buf;
  }
  return out;
}

void write_csv_trace(const std::filesystem::path& path, const FrequencySweep& sweep,
                     CsvLayout layout) {
  write_text_file(path, format_csv_trace(sweep, layout));
}

FrequencySweep read_trace(const std::filesystem::path& path) {
  const std::string ext = lower(path.extension().string());
  if (ext == ".csv" || ext == ".txt") return parse_csv_trace(path);
  if (ext.size() == 4 && ext[1] == 's' && ext[3] == 'p') return parse_touchstone(path);
  fail(ErrorKind::UnsupportedFormat, path.string() + ": unknown trace extension '" + ext + "'");
}

}  // namespace cpwres
