#include "texbench/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "texbench/error.hpp"

namespace texbench {

namespace {

std::string fixed6(double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(6) << v;
    return s.str();
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos && (s.empty() || s[0] != '#')) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line, const std::string& source, int lineno) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    fields.back() += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else {
            fields.back() += c;
        }
    }
    if (quoted) throw ParseError(source, lineno, "unterminated quote");
    return fields;
}

double parse_number(const std::string& s, const std::string& source, int lineno) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) throw ParseError(source, lineno, "not a number: '" + s + "'");
    return v;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

constexpr const char* kHeader = "pipeline,mean_accuracy,std_accuracy,feature_dim,wall_time_s";

} // namespace

std::vector<CsvRow> to_rows(std::span<const ExperimentResult> results) {
    std::vector<CsvRow> rows;
    for (const auto& r : results)
        rows.push_back({r.label, r.mean_accuracy, r.std_accuracy, r.feature_dim, r.wall_time});
    return rows;
}

void write_csv(std::ostream& out, std::span<const ExperimentResult> results) {
    for (const auto& r : results) {
        out << "# pipeline=" << csv_field(r.label) << " folds=" << r.folds << " trials=" << r.trials
            << " std_defined=" << (r.std_defined ? "true" : "false") << " seeds=";
        for (std::size_t i = 0; i < r.seeds.size(); ++i) out << (i ? ";" : "") << r.seeds[i];
        out << " units=";
        for (std::size_t i = 0; i < r.unit_accuracies.size(); ++i) out << (i ? ";" : "") << fixed6(r.unit_accuracies[i]);
        out << '\n';
    }
    out << kHeader << '\n';
    for (const auto& r : results) {
        out << csv_field(r.label) << ',' << fixed6(r.mean_accuracy) << ',' << fixed6(r.std_accuracy) << ','
            << r.feature_dim << ',' << fixed6(r.wall_time) << '\n';
    }
}

std::string format_csv(std::span<const ExperimentResult> results) {
    std::ostringstream s;
    write_csv(s, results);
    return s.str();
}

std::vector<CsvRow> parse_csv(std::istream& in, const std::string& source) {
    std::vector<CsvRow> rows;
    std::string line;
    int lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line != kHeader) throw ParseError(source, lineno, "expected header '" + std::string(kHeader) + "'");
            header = true;
            continue;
        }
        const auto f = split_csv_line(line, source, lineno);
        if (f.size() != 5) throw ParseError(source, lineno, "expected 5 fields, got " + std::to_string(f.size()));
        CsvRow r;
        r.pipeline = f[0];
        r.mean_accuracy = parse_number(f[1], source, lineno);
        r.std_accuracy = parse_number(f[2], source, lineno);
        const double dim = parse_number(f[3], source, lineno);
        if (dim < 0 || dim != std::floor(dim)) throw ParseError(source, lineno, "feature_dim must be a count");
        r.feature_dim = static_cast<std::size_t>(dim);
        r.wall_time_s = parse_number(f[4], source, lineno);
        rows.push_back(std::move(r));
    }
    if (!header) throw ParseError(source, lineno, "missing header");
    return rows;
}

std::vector<CsvRow> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    return parse_csv(in, path.string());
}

std::string render_svg(std::span<const CsvRow> rows, const std::string& title) {
    const double bar_w = 40, gap = 20, left = 70, right = 80, top = 40, plot_h = 300, label_h = 120;
    const double n = static_cast<double>(rows.size());
    const double plot_w = std::max(1.0, n) * (bar_w + gap) + gap;
    const double width = left + plot_w + right, height = top + plot_h + label_h;
    const double base = top + plot_h;

    double max_dim = 1.0;
    for (const auto& r : rows) max_dim = std::max(max_dim, static_cast<double>(r.feature_dim));
    const double log_top = std::max(1.0, std::ceil(std::log10(max_dim)));
    auto y_acc = [&](double a) { return base - std::clamp(a, 0.0, 1.0) * plot_h; };
    auto y_dim = [&](std::size_t d) { return base - std::log10(std::max<double>(1.0, static_cast<double>(d))) / log_top * plot_h; };
    auto x_mid = [&](std::size_t i) { return left + gap + static_cast<double>(i) * (bar_w + gap) + bar_w / 2; };

    std::ostringstream s;
    s << std::fixed << std::setprecision(2);
    s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    s << "<style>.bar{fill:#7aa6d6;stroke:#2f5d8a}.err{stroke:#000;stroke-width:1.5}"
         ".dim{fill:none;stroke:#c0392b;stroke-width:2}.axis{stroke:#000}"
         "text{font-family:sans-serif;font-size:11px}</style>\n";
    if (!title.empty())
        s << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\">" << xml_escape(title) << "</text>\n";

    s << "<line class=\"axis\" x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << base << "\"/>\n";
    s << "<line class=\"axis\" x1=\"" << left << "\" y1=\"" << base << "\" x2=\"" << left + plot_w << "\" y2=\"" << base << "\"/>\n";
    s << "<line class=\"axis\" x1=\"" << left + plot_w << "\" y1=\"" << top << "\" x2=\"" << left + plot_w << "\" y2=\"" << base << "\"/>\n";
    for (int t = 0; t <= 10; t += 2) {
        const double y = y_acc(t / 10.0);
        s << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << t * 10 << "%</text>\n";
    }
    for (int e = 0; e <= static_cast<int>(log_top); ++e) {
        const double y = base - e / log_top * plot_h;
        s << "<text x=\"" << left + plot_w + 6 << "\" y=\"" << y + 4 << "\">1e" << e << "</text>\n";
    }
    s << "<text transform=\"translate(16," << top + plot_h / 2 << ") rotate(-90)\" text-anchor=\"middle\">accuracy</text>\n";
    s << "<text transform=\"translate(" << width - 12 << ',' << top + plot_h / 2
      << ") rotate(90)\" text-anchor=\"middle\">feature dimension (log)</text>\n";

    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const double x = x_mid(i) - bar_w / 2, y = y_acc(r.mean_accuracy);
        s << "<rect class=\"bar\" x=\"" << x << "\" y=\"" << y << "\" width=\"" << bar_w << "\" height=\"" << base - y
          << "\"><title>" << xml_escape(r.pipeline) << ": " << std::setprecision(4) << r.mean_accuracy << " +/- "
          << r.std_accuracy << std::setprecision(2) << "</title></rect>\n";
        const double lo = y_acc(r.mean_accuracy - r.std_accuracy), hi = y_acc(r.mean_accuracy + r.std_accuracy);
        const double cx = x_mid(i);
        s << "<line class=\"err\" x1=\"" << cx << "\" y1=\"" << lo << "\" x2=\"" << cx << "\" y2=\"" << hi << "\"/>\n";
        s << "<line class=\"err\" x1=\"" << cx - 6 << "\" y1=\"" << lo << "\" x2=\"" << cx + 6 << "\" y2=\"" << lo << "\"/>\n";
        s << "<line class=\"err\" x1=\"" << cx - 6 << "\" y1=\"" << hi << "\" x2=\"" << cx + 6 << "\" y2=\"" << hi << "\"/>\n";
        s << "<text transform=\"translate(" << cx + 4 << ',' << base + 8 << ") rotate(45)\">" << xml_escape(r.pipeline)
          << "</text>\n";
    }
    if (!rows.empty()) {
        s << "<polyline class=\"dim\" points=\"";
        for (std::size_t i = 0; i < rows.size(); ++i) s << (i ? " " : "") << x_mid(i) << ',' << y_dim(rows[i].feature_dim);
        s << "\"/>\n";
        for (std::size_t i = 0; i < rows.size(); ++i)
            s << "<circle cx=\"" << x_mid(i) << "\" cy=\"" << y_dim(rows[i].feature_dim) << "\" r=\"3\" fill=\"#c0392b\"/>\n";
    }
    s << "</svg>\n";
    return s.str();
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

} // namespace

void report(std::span<const ExperimentResult> results, const std::filesystem::path& csv_path,
            const std::filesystem::path& svg_path) {
    if (results.empty()) throw Error("report needs at least one result");
    {
        std::ofstream out = open_output(csv_path);
        write_csv(out, results);
        if (!out) throw Error("write failed: " + csv_path.string());
    }
    if (!svg_path.empty()) {
        std::ofstream out = open_output(svg_path);
        const auto rows = to_rows(results);
        out << render_svg(rows);
        if (!out) throw Error("write failed: " + svg_path.string());
    }
}

} // namespace texbench
