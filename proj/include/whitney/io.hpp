#pragma once

// JSON datasets and CSV fields. Requires nlohmann/json.

#include "whitney/core.hpp"
#include "whitney/extend.hpp"
#include "whitney/geomset.hpp"
#include "whitney/jetfield.hpp"
#include "whitney/partition.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace whitney::io {

using nlohmann::json;

namespace detail {

/// Character iterator over a string that counts the newlines it has stepped past.
class LineCountingIterator {
public:
    using iterator_category = std::forward_iterator_tag;
    using value_type = char;
    using difference_type = std::ptrdiff_t;
    using pointer = const char*;
    using reference = const char&;

    LineCountingIterator() = default;
    LineCountingIterator(const char* p, std::size_t* lines) : p_(p), lines_(lines) {}

    reference operator*() const { return *p_; }
    LineCountingIterator& operator++()
    {
        if (lines_ && *p_ == '\n') ++*lines_;
        ++p_;
        return *this;
    }
    LineCountingIterator operator++(int)
    {
        auto tmp = *this;
        ++*this;
        return tmp;
    }
    bool operator==(const LineCountingIterator& o) const { return p_ == o.p_; }
    bool operator!=(const LineCountingIterator& o) const { return p_ != o.p_; }

private:
    const char* p_ = nullptr;
    std::size_t* lines_ = nullptr;
};

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string at_line(std::size_t line)
{
    return "line " + std::to_string(line) + ": ";
}

inline Vector to_vector(const json& j, std::size_t expected, const std::string& what)
{
    if (!j.is_array()) throw InputError(what + " must be an array of numbers");
    if (expected != 0 && j.size() != expected) {
        throw InputError(what + " must have " + std::to_string(expected) + " entries, got " + std::to_string(j.size()));
    }
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw InputError(what + " must contain only numbers");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    if (!v.allFinite()) throw InputError(what + " contains non-finite entries");
    return v;
}

} // namespace detail

/// A parsed dataset file: the set and, when present, its tabulated jets.
struct Dataset {
    int domain_dim = 0;
    int range_dim = 0;
    ClosedSet set;
    std::optional<JetField> jets;
};

/// Parses a closed-set descriptor: {"type": "points", "points": [...]}, {"type": "boxes",
/// "boxes": [{"lo": [...], "hi": [...]}]} or {"type": "balls", "balls": [{"center": [...], "radius": r}]}.
/// A points descriptor without "points" takes the base points of `jets`.
inline ClosedSet parse_set(const json& desc, int n, const json* jets = nullptr)
{
    if (!desc.is_object() || !desc.contains("type") || !desc["type"].is_string()) throw InputError("set descriptor needs a string \"type\"");
    const std::string type = desc["type"].get<std::string>();
    const auto un = static_cast<std::size_t>(n);
    if (type == "points") {
        std::vector<Vector> pts;
        if (desc.contains("points")) {
            for (std::size_t i = 0; i < desc["points"].size(); ++i) pts.push_back(detail::to_vector(desc["points"][i], un, "set point " + std::to_string(i)));
        } else if (jets && jets->is_array()) {
            for (std::size_t i = 0; i < jets->size(); ++i) {
                const json& jt = (*jets)[i];
                if (!jt.is_object() || !jt.contains("a")) throw InputError("jet " + std::to_string(i) + " lacks \"a\"");
                pts.push_back(detail::to_vector(jt["a"], un, "jet " + std::to_string(i) + " field a"));
            }
        } else {
            throw InputError("points set needs \"points\" or a jet list");
        }
        return ClosedSet::points(std::move(pts));
    }
    if (type == "boxes") {
        if (!desc.contains("boxes") || !desc["boxes"].is_array()) throw InputError("boxes set needs a \"boxes\" array");
        std::vector<AxisBox> bs;
        for (std::size_t i = 0; i < desc["boxes"].size(); ++i) {
            const json& b = desc["boxes"][i];
            if (!b.is_object() || !b.contains("lo") || !b.contains("hi")) throw InputError("box " + std::to_string(i) + " needs lo and hi");
            bs.push_back({detail::to_vector(b["lo"], un, "box lo"), detail::to_vector(b["hi"], un, "box hi")});
        }
        return ClosedSet::boxes(std::move(bs));
    }
    if (type == "balls") {
        if (!desc.contains("balls") || !desc["balls"].is_array()) throw InputError("balls set needs a \"balls\" array");
        std::vector<Ball> bs;
        for (std::size_t i = 0; i < desc["balls"].size(); ++i) {
            const json& b = desc["balls"][i];
            if (!b.is_object() || !b.contains("center") || !b.contains("radius") || !b["radius"].is_number()) {
                throw InputError("ball " + std::to_string(i) + " needs center and radius");
            }
            bs.push_back({detail::to_vector(b["center"], un, "ball center"), b["radius"].get<double>()});
        }
        return ClosedSet::balls(std::move(bs));
    }
    throw InputError("unknown set type '" + type + "' (expected points, boxes or balls)");
}

/// Parses a dataset; errors carry the line of the offending jet.
inline Dataset parse_dataset(const std::string& text, double on_set_tolerance = 1e-9)
{
    std::size_t lines = 0;
    std::vector<std::size_t> jet_lines;
    bool in_jets = false;
    int jets_depth = -1;
    const json::parser_callback_t cb = [&](int depth, json::parse_event_t event, json& parsed) {
        if (event == json::parse_event_t::key && depth == 1) {
            in_jets = parsed == "jets";
        } else if (event == json::parse_event_t::array_start && in_jets && jets_depth < 0 && depth == 1) {
            jets_depth = depth + 1;
        } else if (event == json::parse_event_t::object_start && jets_depth > 0 && depth == jets_depth) {
            jet_lines.push_back(lines + 1);
        } else if (event == json::parse_event_t::array_end && jets_depth > 0 && depth == jets_depth - 1) {
            jets_depth = -2;
            in_jets = false;
        }
        return true;
    };
    json doc;
    try {
        doc = json::parse(detail::LineCountingIterator(text.data(), &lines), detail::LineCountingIterator(text.data() + text.size(), nullptr), cb);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw InputError("dataset must be a JSON object");
    for (const char* key : {"dimension_domain", "set"}) {
        if (!doc.contains(key)) throw InputError(std::string("dataset lacks \"") + key + "\"");
    }
    if (!doc["dimension_domain"].is_number_integer() || doc["dimension_domain"].get<int>() < 1) throw InputError("dimension_domain must be a positive integer");
    const int n = doc["dimension_domain"].get<int>();
    const json* jets = doc.contains("jets") ? &doc["jets"] : nullptr;
    Dataset ds{n, 0, parse_set(doc["set"], n, jets), std::nullopt};
    if (!jets) return ds;

    if (!doc.contains("dimension_range") || !doc["dimension_range"].is_number_integer() || doc["dimension_range"].get<int>() < 1) {
        throw InputError("dimension_range must be a positive integer when jets are given");
    }
    ds.range_dim = doc["dimension_range"].get<int>();
    const int m = ds.range_dim;
    if (!jets->is_array() || jets->empty()) throw InputError("\"jets\" must be a nonempty array");
    if (!ds.set.is_finite_points()) throw InputError("jets can only be tabulated over a points set; box and ball sets need evaluation rules");
    std::vector<Jet> list;
    for (std::size_t i = 0; i < jets->size(); ++i) {
        const std::string where = (i < jet_lines.size() ? detail::at_line(jet_lines[i]) : std::string()) + "jet " + std::to_string(i) + ": ";
        const json& jt = (*jets)[i];
        try {
            if (!jt.is_object() || !jt.contains("a") || !jt.contains("f") || !jt.contains("L")) throw InputError("needs fields a, f and L");
            Jet j;
            j.a = detail::to_vector(jt["a"], static_cast<std::size_t>(n), "a");
            j.value = detail::to_vector(jt["f"], static_cast<std::size_t>(m), "f");
            const Vector flat = detail::to_vector(jt["L"], static_cast<std::size_t>(m * n), "L (row-major m x n)");
            j.op = Matrix(m, n);
            for (int r = 0; r < m; ++r)
                for (int c = 0; c < n; ++c) j.op(r, c) = flat[r * n + c];
            if (ds.set.distance(j.a) > on_set_tolerance) throw InputError("base point a does not lie in F");
            list.push_back(std::move(j));
        } catch (const InputError& e) {
            throw InputError(where + e.what());
        }
    }
    try {
        ds.jets = JetField::tabulated(ds.set, std::move(list), on_set_tolerance);
    } catch (const InputError& e) {
        const std::string msg = e.what();
        // "jet k: ..." messages from the table builder map back to a line
        if (msg.rfind("jet ", 0) == 0) {
            const std::size_t k = std::stoul(msg.substr(4));
            if (k < jet_lines.size()) throw InputError(detail::at_line(jet_lines[k]) + msg);
        }
        throw;
    }
    return ds;
}

inline Dataset load_dataset(const std::string& path, double on_set_tolerance = 1e-9)
{
    try {
        return parse_dataset(detail::read_file(path), on_set_tolerance);
    } catch (const InputError& e) {
        throw InputError(path + ": " + e.what());
    }
}

/// External A-field table: {"entries": [{"x": [...], "A": [... row-major m x n]}]}.
inline AField load_afield_table(const std::string& path, const JetField& jets)
{
    json doc;
    try {
        doc = json::parse(detail::read_file(path));
    } catch (const json::parse_error& e) {
        throw InputError(path + ": malformed JSON: " + e.what());
    }
    if (!doc.is_object() || !doc.contains("entries") || !doc["entries"].is_array()) throw InputError(path + ": needs an \"entries\" array");
    const int n = jets.domain_dim();
    const int m = jets.range_dim();
    std::vector<std::pair<Vector, Matrix>> entries;
    for (const auto& e : doc["entries"]) {
        if (!e.is_object() || !e.contains("x") || !e.contains("A")) throw InputError(path + ": entries need x and A");
        Vector x = detail::to_vector(e["x"], static_cast<std::size_t>(n), "x");
        const Vector flat = detail::to_vector(e["A"], static_cast<std::size_t>(m * n), "A");
        Matrix a(m, n);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < n; ++c) a(r, c) = flat[r * n + c];
        entries.emplace_back(std::move(x), std::move(a));
    }
    return AField::external_table(jets, entries);
}

inline std::string format_number(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// CSV: x1..xn, f1..fm, [J11..J1n, ..., Jm1..Jmn,] onset. Jacobian cells are empty on F.
inline void write_csv(std::ostream& out, const std::vector<FieldSample>& samples, int n, int m, bool with_jacobian)
{
    for (int i = 1; i <= n; ++i) out << 'x' << i << ',';
    for (int i = 1; i <= m; ++i) out << 'f' << i << ',';
    if (with_jacobian) {
        for (int r = 1; r <= m; ++r)
            for (int c = 1; c <= n; ++c) out << 'J' << r << c << ',';
    }
    out << "onset\n";
    for (const auto& s : samples) {
        for (int i = 0; i < n; ++i) out << format_number(s.x[i]) << ',';
        for (int i = 0; i < m; ++i) out << format_number(s.value[i]) << ',';
        if (with_jacobian) {
            for (int r = 0; r < m; ++r) {
                for (int c = 0; c < n; ++c) {
                    if (s.jacobian) out << format_number((*s.jacobian)(r, c));
                    out << ',';
                }
            }
        }
        out << (s.on_set ? 1 : 0) << '\n';
    }
}

inline json to_json(const Vector& v)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

inline json to_json(const PartitionReport& r)
{
    return json{{"samples", r.samples},
                {"C1_measured", r.c1_measured},
                {"C2_measured", r.c2_measured},
                {"max_sum_error", r.max_sum_error},
                {"max_grad_sum", r.max_grad_sum},
                {"P2_ratio_range", json::array({r.p2_ratio_min, r.p2_ratio_max})},
                {"min_weight", r.min_weight},
                {"max_nonzero", r.max_nonzero},
                {"violations", r.violations},
                {"passed", r.passed()}};
}

} // namespace whitney::io
