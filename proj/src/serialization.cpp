#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "moe/model.hpp"

namespace moe {

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spill(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

double parse_number(std::string_view tok, const std::string& context) {
    double v = 0.0;
    const auto* first = tok.data();
    const auto* last = tok.data() + tok.size();
    if (!tok.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw InvalidArgument(context + ": not a number: '" + std::string(tok) + "'");
    return v;
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        out.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

bool blank_or_comment(std::string_view line) {
    const auto toks = split_ws(line);
    return toks.empty() || toks.front().starts_with('#');
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string to_text(const MixingMeasure& G) {
    std::string out = "family=" + G.family().name() + " d=" + std::to_string(G.dim()) +
                      " k=" + std::to_string(G.order()) + "\n";
    for (const auto& c : G.components()) {
        std::string line = format_double(c.gate.beta0);
        for (double z : c.gate.beta1) line += " " + format_double(z);
        for (double z : c.expert.a) line += " " + format_double(z);
        line += " " + format_double(c.expert.b) + " " + format_double(c.expert.sigma);
        out += line + "\n";
    }
    return out;
}

MixingMeasure parse_measure(const std::string& text) {
    const auto lines = lines_of(text);
    std::size_t li = 0;
    while (li < lines.size() && blank_or_comment(lines[li])) ++li;
    if (li == lines.size()) throw InvalidArgument("measure document: missing header line");

    std::string family_name;
    long d = -1, k = -1;
    for (auto tok : split_ws(lines[li])) {
        const auto eq = tok.find('=');
        if (eq == std::string_view::npos) throw InvalidArgument("measure header: expected key=value, got '" + std::string(tok) + "'");
        const auto key = tok.substr(0, eq);
        const auto val = tok.substr(eq + 1);
        if (key == "family") family_name = std::string(val);
        else if (key == "d") d = static_cast<long>(parse_number(val, "measure header d"));
        else if (key == "k") k = static_cast<long>(parse_number(val, "measure header k"));
        else throw InvalidArgument("measure header: unknown key '" + std::string(key) + "'");
    }
    if (family_name.empty() || d < 1 || k < 1)
        throw InvalidArgument("measure header must define family=, d>=1 and k>=1");
    const Family family = Family::parse(family_name);
    ++li;

    std::vector<Component> comps;
    const std::size_t du = static_cast<std::size_t>(d);
    for (; li < lines.size(); ++li) {
        if (blank_or_comment(lines[li])) continue;
        const auto toks = split_ws(lines[li]);
        const std::string ctx = "measure component line " + std::to_string(comps.size());
        if (toks.size() != 2 * du + 3)
            throw InvalidArgument(ctx + ": expected " + std::to_string(2 * du + 3) + " fields, got " +
                                  std::to_string(toks.size()));
        Component c;
        std::size_t t = 0;
        c.gate.beta0 = parse_number(toks[t++], ctx);
        c.gate.beta1.resize(du);
        for (auto& z : c.gate.beta1) z = parse_number(toks[t++], ctx);
        c.expert.a.resize(du);
        for (auto& z : c.expert.a) z = parse_number(toks[t++], ctx);
        c.expert.b = parse_number(toks[t++], ctx);
        c.expert.sigma = parse_number(toks[t++], ctx);
        comps.push_back(std::move(c));
    }
    if (comps.size() != static_cast<std::size_t>(k))
        throw InvalidArgument("measure header says k=" + std::to_string(k) + " but found " +
                              std::to_string(comps.size()) + " components");
    return MixingMeasure(family, std::move(comps));
}

MixingMeasure read_measure(const std::string& path) {
    try {
        return parse_measure(slurp(path));
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(path + ": " + e.what());
    }
}

void write_measure(const MixingMeasure& G, const std::string& path) { spill(path, to_text(G)); }

std::string to_tsv(const Dataset& data) {
    std::string out;
    for (std::size_t j = 0; j < data.size(); ++j) {
        for (std::size_t p = 0; p < data.dim(); ++p) out += format_double(data.x(j, p)) + "\t";
        out += format_double(data.y()[j]) + "\n";
    }
    return out;
}

Dataset parse_tsv(const std::string& text, const Box* bounds) {
    std::vector<Vec> cols;
    Vec y;
    std::size_t row = 0;
    for (auto line : lines_of(text)) {
        if (blank_or_comment(line)) continue;
        const auto toks = split_ws(line);
        if (toks.size() < 2) throw InvalidArgument("dataset row " + std::to_string(row) + ": need x columns and y");
        if (cols.empty()) cols.resize(toks.size() - 1);
        if (toks.size() != cols.size() + 1)
            throw InvalidArgument("dataset row " + std::to_string(row) + ": inconsistent column count");
        const std::string ctx = "dataset row " + std::to_string(row);
        for (std::size_t p = 0; p < cols.size(); ++p) cols[p].push_back(parse_number(toks[p], ctx));
        y.push_back(parse_number(toks.back(), ctx));
        ++row;
    }
    if (y.empty()) throw InvalidArgument("dataset is empty");
    Box box;
    if (bounds != nullptr) {
        box = *bounds;
    } else {
        box.lo.resize(cols.size());
        box.hi.resize(cols.size());
        for (std::size_t p = 0; p < cols.size(); ++p) {
            box.lo[p] = *std::min_element(cols[p].begin(), cols[p].end());
            box.hi[p] = *std::max_element(cols[p].begin(), cols[p].end());
        }
    }
    Dataset data(std::move(cols), std::move(y), std::move(box));
    if (bounds != nullptr) validate_inputs(data);
    return data;
}

Dataset read_tsv(const std::string& path, const Box* bounds) {
    try {
        return parse_tsv(slurp(path), bounds);
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(path + ": " + e.what());
    }
}

}  // namespace moe
