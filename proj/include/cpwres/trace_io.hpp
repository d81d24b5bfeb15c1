#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cpwres/notch_model.hpp"

namespace cpwres {

/// Two-port S-parameters from a Touchstone v1 file, in linear complex form.
/// `s` holds S11, S21, S12, S22 in file order.
struct TouchstoneData {
  std::vector<double> frequencies;  // Hz, strictly increasing
  std::array<std::vector<Complex>, 4> s;
  double reference_ohm = 50.0;
  std::vector<std::string> comments;

  const std::vector<Complex>& s11() const { return s[0]; }
  const std::vector<Complex>& s21() const { return s[1]; }
};

/// Parses Touchstone v1 two-port text. Accepts the RI, MA and DB formats and
/// the Hz/kHz/MHz/GHz unit keywords. The option line ("# ...") is required.
/// Throws ParseError (with line number), UnsupportedFormat for anything that
/// is not a two-port S-parameter file, and DuplicateFrequency.
TouchstoneData parse_touchstone_text(std::string_view text);
TouchstoneData read_touchstone(const std::filesystem::path& path);

/// S21 of a Touchstone file as a sweep; "!" comment lines go to meta.comments.
FrequencySweep parse_touchstone(const std::filesystem::path& path);

enum class CsvLayout { Auto, ReIm, MagPhase };

/// CSV trace schema: optional "# key: value" comment lines, one header row,
/// then one row per frequency. The first column is frequency in Hz
/// (freq_hz, frequency_hz, freq, frequency or f). The other two are either
/// re, im (also real/imag, s21_re/s21_im) or mag_db, phase_deg
/// (also s21_db/s21_deg). Header names are case-insensitive. Rows are sorted
/// by frequency; repeated frequencies throw DuplicateFrequency. The comment
/// keys vna_power_dBm, temperature_K and label fill the sweep metadata.
FrequencySweep parse_csv_trace_text(std::string_view text, CsvLayout layout = CsvLayout::Auto);
FrequencySweep parse_csv_trace(const std::filesystem::path& path,
                               CsvLayout layout = CsvLayout::Auto);

/// Writes the schema above with 17 significant digits.
std::string format_csv_trace(const FrequencySweep& sweep, CsvLayout layout = CsvLayout::ReIm);
void write_csv_trace(const std::filesystem::path& path, const FrequencySweep& sweep,
                     CsvLayout layout = CsvLayout::ReIm);

/// Dispatches on extension: .s2p (and other .sNp, rejected) or .csv.
FrequencySweep read_trace(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace cpwres
