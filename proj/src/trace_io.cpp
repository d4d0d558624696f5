#include "sbc/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

#include "sbc/errors.hpp"
#include "sbc/scenario.hpp"

namespace sbc {
namespace {

using nlohmann::json;

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void append_value(std::string& row, double v) {
    row.push_back(',');
    row += format_double(v);
}

std::string vehicle_header(int i) {
    const std::string p = "q" + std::to_string(i) + "_";
    std::string h;
    for (const char* field :
         {"x", "y", "z", "dx", "dy", "dz", "ddx", "ddy", "ddz", "dddx", "dddy", "dddz", "vhat_x",
          "vhat_y", "vhat_z", "vstar_x", "vstar_y", "vstar_z", "s", "ds", "tilt_deg",
          "thrust_ratio"}) {
        h.push_back(',');
        h += p + field;
    }
    return h;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << contents;
    if (!out) throw ValidationError("write failed: " + path.string());
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t begin = 0;
    while (true) {
        const std::size_t comma = line.find(',', begin);
        fields.push_back(line.substr(begin, comma - begin));
        if (comma == std::string::npos) break;
        begin = comma + 1;
    }
    return fields;
}

double parse_field(const std::string& field, const std::filesystem::path& file) {
    if (field == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (field == "inf") return std::numeric_limits<double>::infinity();
    if (field == "-inf") return -std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        const double v = std::stod(field, &used);
        if (used != field.size()) throw std::invalid_argument(field);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("corrupt numeric field '" + field + "' in " + file.string());
    }
}

std::vector<std::vector<double>> read_csv(const std::filesystem::path& file,
                                          std::vector<std::string>& header) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + file.string());
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty table: " + file.string());
    header = split_csv(line);

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv(line);
        if (fields.size() != header.size())
            throw ValidationError("ragged row in " + file.string());
        std::vector<double> row;
        row.reserve(fields.size());
        for (const std::string& f : fields) row.push_back(parse_field(f, file));
        rows.push_back(std::move(row));
    }
    return rows;
}

int column_index(const std::vector<std::string>& header, const std::string& name,
                 const std::filesystem::path& file) {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    throw ValidationError("missing column " + name + " in " + file.string());
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    const std::to_chars_result res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

nlohmann::json audit_to_json(const ScenarioResult& result) {
    const ScenarioConfig& config = result.config;
    json doc;
    doc["scenario"] = config.name;
    doc["dt"] = config.dt;
    doc["duration"] = config.duration;
    doc["steps"] = static_cast<int>(result.trace.steps.size());
    doc["vehicles"] = config.vehicle_count();
    doc["k_s_requested"] = config.k_s;
    doc["k_s_final"] = result.k_s_final;

    json audit;
    audit["pass"] = result.audit.pass;
    audit["max_tilt_deg"] = degrees(result.audit.max_tilt);
    audit["max_tilt_time"] = result.audit.max_tilt_time;
    audit["max_tilt_vehicle"] = result.audit.max_tilt_vehicle;
    audit["max_thrust_ratio"] = result.audit.max_thrust_ratio;
    audit["max_thrust_ratio_time"] = result.audit.max_thrust_ratio_time;
    audit["max_thrust_ratio_vehicle"] = result.audit.max_thrust_ratio_vehicle;
    audit["max_torque"] = result.audit.max_torque;
    audit["singular_vehicle"] = result.audit.singular_vehicle;
    audit["singular_index"] = result.audit.singular_index;
    audit["limits"] = {{"max_tilt_deg", degrees(config.limits.max_tilt)},
                       {"max_thrust_ratio", config.limits.max_thrust_ratio}};
    doc["audit"] = audit;

    json safety;
    safety["pass"] = result.trace.safety.pass;
    safety["min_h"] = finite_or_null(result.trace.safety.min_h);
    safety["min_h_time"] = result.trace.safety.min_h_time;
    safety["min_h_pair"] = json::array({result.trace.safety.min_h_i, result.trace.safety.min_h_j});
    safety["first_violation_step"] = result.trace.safety.first_violation_step;
    doc["safety"] = safety;

    doc["goal_errors"] = json::array();
    for (double e : result.goal_errors) doc["goal_errors"].push_back(e);

    doc["attempts"] = json::array();
    for (const AttemptReport& a : result.attempts) {
        json attempt;
        attempt["k_s"] = a.k_s;
        attempt["audit_pass"] = a.audit_pass;
        attempt["safety_pass"] = a.safety_pass;
        attempt["max_tilt_deg"] = degrees(a.max_tilt);
        attempt["max_thrust_ratio"] = a.max_thrust_ratio;
        attempt["min_h"] = finite_or_null(a.min_h);
        doc["attempts"].push_back(attempt);
    }
    return doc;
}

void write_archive(const std::filesystem::path& dir, const ScenarioResult& result) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ValidationError("cannot create output directory " + dir.string());

    const int m = result.config.vehicle_count();
    const double hover_thrust = result.config.vehicle.mass * result.config.vehicle.gravity;

    std::string trace_csv = "t";
    for (int i = 0; i < m; ++i) trace_csv += vehicle_header(i);
    trace_csv.push_back('\n');
    for (const StepRecord& rec : result.trace.steps) {
        std::string row = format_double(rec.t);
        for (int i = 0; i < m; ++i) {
            const std::size_t iu = static_cast<std::size_t>(i);
            const IntegratorState& q = rec.states[iu];
            for (const Eigen::Vector3d& block : {q.r, q.dr, q.ddr, q.dddr})
                for (int axis = 0; axis < 3; ++axis) append_value(row, block(axis));
            for (int axis = 0; axis < 3; ++axis) append_value(row, rec.nominal(3 * i + axis));
            for (int axis = 0; axis < 3; ++axis) append_value(row, rec.rectified(3 * i + axis));
            append_value(row, rec.clock_s[iu]);
            append_value(row, rec.clock_ds[iu]);
            const double nan = std::numeric_limits<double>::quiet_NaN();
            append_value(row, rec.full_states[iu] ? degrees(rec.full_states[iu]->tilt) : nan);
            append_value(row, rec.inputs[iu] ? rec.inputs[iu]->f_z / hover_thrust : nan);
        }
        row.push_back('\n');
        trace_csv += row;
    }
    write_file(dir / "trace.csv", trace_csv);

    std::string pairs_csv = "t,i,j,h,slack\n";
    for (const StepRecord& rec : result.trace.steps) {
        for (const PairSample& pair : rec.pairs) {
            std::string row = format_double(rec.t);
            row.push_back(',');
            row += std::to_string(pair.i);
            row.push_back(',');
            row += std::to_string(pair.j);
            append_value(row, pair.h);
            append_value(row, pair.slack);
            row.push_back('\n');
            pairs_csv += row;
        }
    }
    write_file(dir / "pairs.csv", pairs_csv);

    write_file(dir / "audit.json", audit_to_json(result).dump(2) + "\n");
    write_file(dir / "scenario.json", scenario_to_json(result.config).dump(2) + "\n");
}

ArchiveSummary read_archive(const std::filesystem::path& dir) {
    ArchiveSummary summary;

    for (const char* name : {"scenario.json", "audit.json"}) {
        std::ifstream in(dir / name, std::ios::binary);
        if (!in) throw ValidationError("cannot open " + (dir / name).string());
        try {
            json doc = json::parse(in);
            (name[0] == 's' ? summary.scenario : summary.audit) = std::move(doc);
        } catch (const json::parse_error& e) {
            throw ValidationError(std::string(name) + ": " + e.what());
        }
    }

    std::vector<std::string> header;
    const std::filesystem::path trace_file = dir / "trace.csv";
    const std::vector<std::vector<double>> rows = read_csv(trace_file, header);
    summary.steps = static_cast<int>(rows.size());

    int vehicles = 0;
    while (true) {
        const std::string probe = "q" + std::to_string(vehicles) + "_x";
        bool found = false;
        for (const std::string& h : header) found = found || h == probe;
        if (!found) break;
        ++vehicles;
    }
    if (vehicles == 0) throw ValidationError("no vehicle columns in " + trace_file.string());
    summary.vehicles = vehicles;

    const int t_col = column_index(header, "t", trace_file);
    for (int i = 0; i < vehicles; ++i) {
        const std::string prefix = "q" + std::to_string(i) + "_";
        const int tilt_col = column_index(header, prefix + "tilt_deg", trace_file);
        const int ratio_col = column_index(header, prefix + "thrust_ratio", trace_file);
        for (const std::vector<double>& row : rows) {
            const double tilt = radians(row[static_cast<std::size_t>(tilt_col)]);
            const double ratio = row[static_cast<std::size_t>(ratio_col)];
            if (std::isnan(tilt) || std::isnan(ratio)) {
                summary.has_nan_samples = true;
                continue;
            }
            if (tilt > summary.max_tilt) {
                summary.max_tilt = tilt;
                summary.max_tilt_time = row[static_cast<std::size_t>(t_col)];
                summary.max_tilt_vehicle = i;
            }
            if (ratio > summary.max_thrust_ratio) {
                summary.max_thrust_ratio = ratio;
                summary.max_thrust_ratio_time = row[static_cast<std::size_t>(t_col)];
                summary.max_thrust_ratio_vehicle = i;
            }
        }
    }

    std::vector<std::string> pair_header;
    const std::filesystem::path pairs_file = dir / "pairs.csv";
    const std::vector<std::vector<double>> pair_rows = read_csv(pairs_file, pair_header);
    const int pt = column_index(pair_header, "t", pairs_file);
    const int pi = column_index(pair_header, "i", pairs_file);
    const int pj = column_index(pair_header, "j", pairs_file);
    const int ph = column_index(pair_header, "h", pairs_file);
    for (const std::vector<double>& row : pair_rows) {
        const double h = row[static_cast<std::size_t>(ph)];
        if (h < summary.min_h) {
            summary.min_h = h;
            summary.min_h_time = row[static_cast<std::size_t>(pt)];
            summary.min_h_i = static_cast<int>(row[static_cast<std::size_t>(pi)]);
            summary.min_h_j = static_cast<int>(row[static_cast<std::size_t>(pj)]);
        }
    }
    return summary;
}

}  // namespace sbc
