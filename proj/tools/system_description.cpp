#include "system_description.hpp"

#include "niaudit/builtin_systems.hpp"
#include "niaudit/errors.hpp"
#include "niaudit/interconnection.hpp"
#include "niaudit/msd_case_study.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

namespace niaudit::cli {
namespace {

[[noreturn]] void fail(int line, const std::string& what) {
    throw Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_number(const std::string& text, int line) {
    const std::string t = trim(text);
    if (t.empty()) fail(line, "missing number");
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || !std::isfinite(v)) fail(line, "bad number '" + t + "'");
    return v;
}

// [[a, b], [c, d]] ; every row must have the same length
Matrix parse_matrix(const std::string& text, int line) {
    std::size_t pos = 0;
    auto skip = [&] {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    };
    auto expect = [&](char ch) {
        skip();
        if (pos >= text.size() || text[pos] != ch) fail(line, std::string("expected '") + ch + "' in matrix");
        ++pos;
    };
    std::vector<std::vector<double>> rows;
    expect('[');
    skip();
    while (true) {
        expect('[');
        std::vector<double> row;
        while (true) {
            skip();
            const std::size_t start = pos;
            while (pos < text.size() && text[pos] != ',' && text[pos] != ']') ++pos;
            row.push_back(parse_number(text.substr(start, pos - start), line));
            skip();
            if (pos < text.size() && text[pos] == ',') {
                ++pos;
                continue;
            }
            expect(']');
            break;
        }
        rows.push_back(std::move(row));
        skip();
        if (pos < text.size() && text[pos] == ',') {
            ++pos;
            continue;
        }
        expect(']');
        break;
    }
    skip();
    if (pos != text.size()) fail(line, "trailing characters after matrix");
    const std::size_t cols = rows.front().size();
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols) fail(line, "ragged matrix rows");
        for (std::size_t j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
}

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_matrix(const Matrix& m) {
    std::string out = "[";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out += i ? ", [" : "[";
        for (Eigen::Index j = 0; j < m.cols(); ++j) out += (j ? ", " : "") + format_number(m(i, j));
        out += "]";
    }
    return out + "]";
}

const std::map<std::string, std::set<std::string>>& builtin_params() {
    static const std::map<std::string, std::set<std::string>> table{
        {"msd", {"m", "beta", "k"}},
        {"hamiltonian_oscillator", {}},
        {"hamiltonian_pendulum", {}},
        {"pendulum2", {}},
        {"irc", {"gamma", "phi"}},
        {"first_order_cascade", {"a", "b", "c"}},
        {"cubic_damped_cascade", {}},
        {"pr2_cascade", {}},
    };
    return table;
}

bool is_cascade_name(const std::string& name) {
    return name == "first_order_cascade" || name == "cubic_damped_cascade" || name == "pr2_cascade";
}

double param(const SystemDescription& d, const std::string& key, double fallback) {
    const auto it = d.params.find(key);
    return it == d.params.end() ? fallback : it->second;
}

}  // namespace

SystemDescription parse_description(std::istream& in) {
    SystemDescription d;
    std::set<std::string> seen;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (text.empty()) continue;
        const auto colon = text.find(':');
        if (colon == std::string::npos) fail(line, "expected 'key: value'");
        const std::string key = trim(text.substr(0, colon));
        const std::string value = trim(text.substr(colon + 1));
        if (!seen.insert(key).second) fail(line, "duplicate key '" + key + "'");
        if (key == "kind") {
            if (value == "lti") d.kind = SystemKind::Lti;
            else if (value == "builtin") d.kind = SystemKind::Builtin;
            else if (value == "cascade_integrator") d.kind = SystemKind::CascadeIntegrator;
            else fail(line, "unknown kind '" + value + "'");
        } else if (key == "name") {
            if (value.empty()) fail(line, "empty name");
            d.name = value;
        } else if (key == "A") {
            d.a = parse_matrix(value, line);
        } else if (key == "B") {
            d.b = parse_matrix(value, line);
        } else if (key == "C") {
            d.c = parse_matrix(value, line);
        } else if (key == "D") {
            d.d = parse_matrix(value, line);
        } else if (key.rfind("param ", 0) == 0) {
            const std::string name = trim(key.substr(6));
            if (name.empty()) fail(line, "empty parameter name");
            d.params[name] = parse_number(value, line);
        } else {
            fail(line, "unknown key '" + key + "'");
        }
    }
    if (!seen.count("kind")) fail(line, "missing 'kind'");
    if (d.kind == SystemKind::Lti) {
        if (!seen.count("A") || !seen.count("B") || !seen.count("C")) fail(line, "lti needs A, B and C");
        if (seen.count("name") || !d.params.empty()) fail(line, "lti takes no name or parameters");
        if (!seen.count("D")) d.d = Matrix::Zero(d.c.rows(), d.b.cols());
        StateSpace::make(d.a, d.b, d.c, d.d);  // dimension check
    } else {
        if (seen.count("A") || seen.count("B") || seen.count("C") || seen.count("D")) {
            fail(line, "matrices are only allowed for kind lti");
        }
        if (d.name.empty()) fail(line, "missing 'name'");
        const auto it = builtin_params().find(d.name);
        if (it == builtin_params().end()) fail(line, "unknown system '" + d.name + "'");
        if (d.kind == SystemKind::CascadeIntegrator && !is_cascade_name(d.name)) {
            fail(line, "'" + d.name + "' is not a cascade with an integrator");
        }
        for (const auto& [k, v] : d.params) {
            if (!it->second.count(k)) fail(line, "unknown parameter '" + k + "' for " + d.name);
        }
    }
    return d;
}

SystemDescription parse_description(const std::string& text) {
    std::istringstream in(text);
    return parse_description(in);
}

SystemDescription load_description(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::ParseError, "cannot open '" + path + "'");
    return parse_description(in);
}

std::string serialize(const SystemDescription& d) {
    std::string out = "kind: ";
    switch (d.kind) {
        case SystemKind::Lti:
            out += "lti\n";
            out += "A: " + format_matrix(d.a) + "\n";
            out += "B: " + format_matrix(d.b) + "\n";
            out += "C: " + format_matrix(d.c) + "\n";
            out += "D: " + format_matrix(d.d) + "\n";
            return out;
        case SystemKind::Builtin: out += "builtin\n"; break;
        case SystemKind::CascadeIntegrator: out += "cascade_integrator\n"; break;
    }
    out += "name: " + d.name + "\n";
    for (const auto& [k, v] : d.params) out += "param " + k + ": " + format_number(v) + "\n";
    return out;
}

ResolvedSystem resolve(const SystemDescription& d) {
    ResolvedSystem r;
    if (d.kind == SystemKind::Lti) {
        r.lti = StateSpace::make(d.a, d.b, d.c, d.d);
        r.system = to_nonlinear(*r.lti, "lti");
        return r;
    }
    auto take = [&r](SystemWithStorage s) {
        r.system = s.system.to_nonlinear();
        r.storage = std::move(s.storage);
        r.affine = std::move(s.system);
    };
    if (d.name == "msd") {
        take(make_msd(param(d, "m", kMsdMass), param(d, "beta", kMsdDamping), param(d, "k", kMsdStiffness)));
    } else if (d.name == "hamiltonian_oscillator") {
        take(make_harmonic_oscillator());
    } else if (d.name == "hamiltonian_pendulum") {
        take(make_hamiltonian_pendulum());
    } else if (d.name == "pendulum2") {
        take(make_euler_lagrange_pendulum2());
    } else if (d.name == "irc") {
        const IrcController c{param(d, "gamma", kIrcGamma), param(d, "phi", kIrcPhi)};
        r.lti = c.realization();
        r.system = c.system();
        r.storage = c.storage();
    } else {
        if (d.name == "first_order_cascade") {
            r.cascade = make_first_order_cascade(param(d, "a", -1.0), param(d, "b", 1.0), param(d, "c", 1.0));
        } else if (d.name == "cubic_damped_cascade") {
            r.cascade = make_cubic_damped_cascade();
        } else if (d.name == "pr2_cascade") {
            r.cascade = make_pr2_cascade();
        } else {
            throw Error(ErrorKind::ParseError, "unknown system '" + d.name + "'");
        }
        r.system = r.cascade->to_nonlinear();
    }
    return r;
}

}  // namespace niaudit::cli
