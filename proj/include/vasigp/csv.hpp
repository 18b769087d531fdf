#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vasigp/gpr.hpp"
#include "vasigp/params.hpp"
#include "vasigp/simulate.hpp"

namespace vasigp::io {

/// Formats a double with 17 significant digits, enough to round-trip.
std::string format_double(double v);

/// Parse error with a 1-based line number.
class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string& file, std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

  private:
    std::size_t line_ = 0;
};

// Series CSV: header "t,logP_zero[,logP_delta]".
void write_series_csv(const std::string& path, const sim::SimulatedSeries& series);
sim::SimulatedSeries read_series_csv(const std::string& path, double maturity);

// JSON sidecar with the simulation parameters and the seed.
void write_series_sidecar(const std::string& path, const MultiCurveParams& params,
                          bool multi, const sim::SimulatedSeries& series);

// Band CSV: header "t,curve,mean,lower,upper".
struct BandRow {
    double t;
    CurveId curve;
    double mean;
    double lower;
    double upper;
};
void write_band_csv(const std::string& path, const std::vector<BandRow>& rows);
std::vector<BandRow> read_band_csv(const std::string& path);

// Model parameters as JSON: {"model": "single"|"multi", ...}.
struct ParamsFile {
    bool multi = false;
    MultiCurveParams params;
};
std::string params_to_json(const ParamsFile& pf);
ParamsFile params_from_json_text(const std::string& text);
ParamsFile read_params_json(const std::string& path);
void write_params_json(const std::string& path, const ParamsFile& pf);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace vasigp::io
