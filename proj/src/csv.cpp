#include "vasigp/csv.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace vasigp::io {

using nlohmann::json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

ParseError::ParseError(const std::string& file, std::size_t line, const std::string& what)
    : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& file, std::size_t line_no, const std::string& cell) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ParseError(file, line_no, "not a number: '" + cell + "'");
    }
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

json params_json(const MultiCurveParams& p, bool multi) {
    json j;
    if (multi) {
        j["model"] = "multi";
        j["factor1"] = {{"r0", p.factor1.r0},
                        {"kappa", p.factor1.kappa},
                        {"theta", p.factor1.theta},
                        {"sigma", p.factor1.sigma}};
        j["factor2"] = {{"r0", p.factor2.r0},
                        {"kappa", p.factor2.kappa},
                        {"theta", p.factor2.theta},
                        {"sigma", p.factor2.sigma}};
        j["rho"] = p.rho;
    } else {
        j["model"] = "single";
        j["r0"] = p.factor1.r0;
        j["kappa"] = p.factor1.kappa;
        j["theta"] = p.factor1.theta;
        j["sigma"] = p.factor1.sigma;
    }
    return j;
}

SingleCurveParams factor_from_json(const json& j) {
    return SingleCurveParams{j.at("r0").get<double>(), j.at("kappa").get<double>(),
                             j.at("theta").get<double>(), j.at("sigma").get<double>()};
}

}  // namespace

void write_series_csv(const std::string& path, const sim::SimulatedSeries& series) {
    auto out = open_out(path);
    const bool has_zero = series.curves.count(CurveId::Zero) > 0;
    const bool has_delta = series.curves.count(CurveId::Delta) > 0;
    out << "t";
    if (has_zero) out << ",logP_zero";
    if (has_delta) out << ",logP_delta";
    out << '\n';
    for (std::size_t i = 0; i < series.grid.size(); ++i) {
        out << format_double(series.grid.points[i]);
        if (has_zero) out << ',' << format_double(series.curves.at(CurveId::Zero)[i]);
        if (has_delta) out << ',' << format_double(series.curves.at(CurveId::Delta)[i]);
        out << '\n';
    }
}

sim::SimulatedSeries read_series_csv(const std::string& path, double maturity) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    sim::SimulatedSeries series;
    series.grid.maturity.T = maturity;

    std::string line;
    std::size_t line_no = 0;
    std::vector<CurveId> columns;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_line(line);
        if (line_no == 1) {
            if (cells.empty() || cells[0] != "t") {
                throw ParseError(path, line_no, "expected header starting with 't'");
            }
            for (std::size_t c = 1; c < cells.size(); ++c) {
                if (cells[c] == "logP_zero") {
                    columns.push_back(CurveId::Zero);
                } else if (cells[c] == "logP_delta") {
                    columns.push_back(CurveId::Delta);
                } else {
                    throw ParseError(path, line_no, "unknown column '" + cells[c] + "'");
                }
            }
            if (columns.empty()) throw ParseError(path, line_no, "no value columns");
            for (CurveId c : columns) series.curves[c];
            continue;
        }
        if (cells.size() != columns.size() + 1) {
            throw ParseError(path, line_no, "expected " + std::to_string(columns.size() + 1) +
                                                " cells, got " + std::to_string(cells.size()));
        }
        series.grid.points.push_back(parse_double(path, line_no, cells[0]));
        for (std::size_t c = 0; c < columns.size(); ++c) {
            series.curves[columns[c]].push_back(parse_double(path, line_no, cells[c + 1]));
        }
    }
    if (series.grid.points.empty()) throw ParseError(path, line_no + 1, "no data rows");
    series.grid.validate();
    return series;
}

void write_series_sidecar(const std::string& path, const MultiCurveParams& params, bool multi,
                          const sim::SimulatedSeries& series) {
    json j;
    j["params"] = params_json(params, multi);
    j["seed"] = series.seed;
    j["maturity"] = series.grid.T();
    j["n_points"] = series.grid.size();
    write_text_file(path, j.dump(2) + "\n");
}

void write_band_csv(const std::string& path, const std::vector<BandRow>& rows) {
    auto out = open_out(path);
    out << "t,curve,mean,lower,upper\n";
    for (const auto& r : rows) {
        out << format_double(r.t) << ',' << to_string(r.curve) << ',' << format_double(r.mean)
            << ',' << format_double(r.lower) << ',' << format_double(r.upper) << '\n';
    }
}

std::vector<BandRow> read_band_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<BandRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "t,curve,mean,lower,upper") {
                throw ParseError(path, line_no, "unexpected band header");
            }
            continue;
        }
        const auto cells = split_line(line);
        if (cells.size() != 5) throw ParseError(path, line_no, "expected 5 cells");
        BandRow r;
        r.t = parse_double(path, line_no, cells[0]);
        try {
            r.curve = curve_from_string(cells[1]);
        } catch (const std::exception& e) {
            throw ParseError(path, line_no, e.what());
        }
        r.mean = parse_double(path, line_no, cells[2]);
        r.lower = parse_double(path, line_no, cells[3]);
        r.upper = parse_double(path, line_no, cells[4]);
        rows.push_back(r);
    }
    return rows;
}

std::string params_to_json(const ParamsFile& pf) {
    return params_json(pf.params, pf.multi).dump(2) + "\n";
}

ParamsFile params_from_json_text(const std::string& text) {
    json j = json::parse(text);
    if (!j.contains("model") && j.contains("params")) j = j.at("params");  // sidecar layout
    ParamsFile pf;
    const std::string model = j.at("model").get<std::string>();
    if (model == "multi") {
        pf.multi = true;
        pf.params.factor1 = factor_from_json(j.at("factor1"));
        pf.params.factor2 = factor_from_json(j.at("factor2"));
        pf.params.rho = j.value("rho", 0.0);
    } else if (model == "single") {
        pf.multi = false;
        pf.params.factor1 = factor_from_json(j);
        pf.params.factor2 = SingleCurveParams{0.0, 1.0, 0.0, 1.0};
        pf.params.rho = 0.0;
    } else {
        throw std::runtime_error("params: unknown model '" + model + "'");
    }
    return pf;
}

ParamsFile read_params_json(const std::string& path) {
    return params_from_json_text(read_text_file(path));
}

void write_params_json(const std::string& path, const ParamsFile& pf) {
    write_text_file(path, params_to_json(pf));
}

void write_text_file(const std::string& path, const std::string& content) {
    auto out = open_out(path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace vasigp::io
