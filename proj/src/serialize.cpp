#include "osc/serialize.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace osc {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void require(bool ok, const std::string& what) {
    if (!ok) throw FormatError(what);
}

}  // namespace

void write_grid_csv(const GridFunction& u, const std::filesystem::path& path) {
    std::ofstream out(path);
    require(out.good(), "write_grid_csv: cannot open " + path.string());
    if (u.on_torus()) {
        const TorusGrid& g = u.torus();
        out << "# oscg-csv 1 kind=torus dim=" << g.dim << " resolution=" << g.resolution << "\n";
    } else {
        const BoxGrid& g = u.box();
        out << "# oscg-csv 1 kind=box dim=" << g.dim << " cells=" << g.cells[0] << ","
            << g.cells[1] << " lo=" << fmt(g.lo[0]) << "," << fmt(g.lo[1]) << " hi=" << fmt(g.hi[0])
            << "," << fmt(g.hi[1]) << "\n";
    }
    const int dim = u.dim();
    for (Index n = 0; n < u.size(); ++n) {
        const auto m = u.on_torus() ? u.torus().multi(n) : u.box().multi(n);
        out << m[0];
        if (dim == 2) out << "," << m[1];
        out << "," << fmt(u[n]) << "\n";
    }
}

GridFunction read_grid_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), "read_grid_csv: cannot open " + path.string());
    std::string header;
    std::getline(in, header);
    require(header.rfind("# oscg-csv 1", 0) == 0, "read_grid_csv: bad header");
    auto field = [&](const std::string& key) {
        const auto at = header.find(key + "=");
        require(at != std::string::npos, "read_grid_csv: missing " + key);
        const auto end = header.find(' ', at);
        return header.substr(at + key.size() + 1, end - at - key.size() - 1);
    };
    Grid grid{TorusGrid{1, 8}};
    if (field("kind") == "torus") {
        grid = TorusGrid(std::stoi(field("dim")), std::stoi(field("resolution")));
    } else {
        const std::string cells = field("cells"), lo = field("lo"), hi = field("hi");
        const int dim = std::stoi(field("dim"));
        auto split = [](const std::string& s) {
            const auto c = s.find(',');
            return std::make_pair(s.substr(0, c), s.substr(c + 1));
        };
        auto [c0, c1] = split(cells);
        auto [l0, l1] = split(lo);
        auto [h0, h1] = split(hi);
        BoxGrid b;
        b.dim = dim;
        b.lo = {std::stod(l0), std::stod(l1)};
        b.hi = {std::stod(h0), std::stod(h1)};
        b.cells = {std::stoi(c0), std::stoi(c1)};
        b.validate();
        grid = b;
    }
    GridFunction u{grid};
    std::string line;
    Index count = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        long long i = 0, j = 0;
        double v = 0;
        if (grid_dim(grid) == 2)
            row >> i >> j >> v;
        else
            row >> i >> v;
        require(static_cast<bool>(row), "read_grid_csv: bad row '" + line + "'");
        const Index node = u.on_torus() ? u.torus().node(i, j) : u.box().node(i, j);
        u[node] = v;
        ++count;
    }
    require(count == u.size(), "read_grid_csv: row count mismatch");
    return u;
}

namespace {

constexpr char kMagic[4] = {'O', 'S', 'C', 'G'};

}

void write_grid_binary(const GridFunction& u, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "write_grid_binary: cannot open " + path.string());
    std::int32_t dim = u.dim();
    std::int32_t resolution = u.on_torus() ? u.torus().resolution : u.box().cells[0];
    std::int32_t kind = u.on_torus() ? 0 : 1;
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(&dim), 4);
    out.write(reinterpret_cast<const char*>(&resolution), 4);
    out.write(reinterpret_cast<const char*>(&kind), 4);
    if (kind == 1) {
        const BoxGrid& g = u.box();
        const double bounds[4] = {g.lo[0], g.hi[0], g.lo[1], g.hi[1]};
        const std::int32_t extra[2] = {g.cells[1], 0};
        out.write(reinterpret_cast<const char*>(bounds), sizeof bounds);
        out.write(reinterpret_cast<const char*>(extra), sizeof extra);
    }
    out.write(reinterpret_cast<const char*>(u.values().data()),
              static_cast<std::streamsize>(u.values().size() * sizeof(double)));
}

GridFunction read_grid_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "read_grid_binary: cannot open " + path.string());
    char magic[4];
    std::int32_t dim = 0, resolution = 0, kind = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&dim), 4);
    in.read(reinterpret_cast<char*>(&resolution), 4);
    in.read(reinterpret_cast<char*>(&kind), 4);
    require(in.good() && std::memcmp(magic, kMagic, 4) == 0, "read_grid_binary: bad magic");
    Grid grid{TorusGrid{1, 8}};
    if (kind == 0) {
        grid = TorusGrid(dim, resolution);
    } else {
        double bounds[4];
        std::int32_t extra[2];
        in.read(reinterpret_cast<char*>(bounds), sizeof bounds);
        in.read(reinterpret_cast<char*>(extra), sizeof extra);
        require(in.good(), "read_grid_binary: truncated box header");
        BoxGrid b;
        b.dim = dim;
        b.lo = {bounds[0], bounds[2]};
        b.hi = {bounds[1], bounds[3]};
        b.cells = {resolution, extra[0]};
        b.validate();
        grid = b;
    }
    GridFunction u{grid};
    in.read(reinterpret_cast<char*>(u.values().data()),
            static_cast<std::streamsize>(u.values().size() * sizeof(double)));
    require(in.gcount() == static_cast<std::streamsize>(u.values().size() * sizeof(double)),
            "read_grid_binary: truncated payload");
    return u;
}

namespace {

void poly_to_text(const TrigPoly& p, std::ostream& out, int indent) {
    const std::string pad(indent, ' ');
    out << "{ const " << fmt(p.constant);
    for (const auto& t : p.terms)
        out << " term " << t.kx << " " << t.ky << " " << fmt(t.cos_w) << " " << fmt(t.sin_w);
    out << " }";
    (void)pad;
}

void node_to_text(const SpecNode& n, std::ostream& out, int indent) {
    const std::string pad(indent, ' ');
    switch (n.kind) {
        case NodeKind::Linear:
            out << pad << "linear {\n";
            out << pad << "  p11 ";
            poly_to_text(n.coef.p11, out, indent + 2);
            out << "\n";
            if (n.coef.dim == 2) {
                out << pad << "  p22 ";
                poly_to_text(n.coef.p22, out, indent + 2);
                out << "\n";
                out << pad << "  p12 ";
                poly_to_text(n.coef.p12, out, indent + 2);
                out << "\n";
            }
            out << pad << "}\n";
            break;
        case NodeKind::Min:
        case NodeKind::Max:
            out << pad << (n.kind == NodeKind::Min ? "min" : "max") << " {\n";
            for (const auto& c : n.children) node_to_text(c, out, indent + 2);
            out << pad << "}\n";
            break;
        case NodeKind::PucciMinus:
            out << pad << "pucci_minus " << fmt(n.pucci_lambda) << " " << fmt(n.pucci_Lambda)
                << "\n";
            break;
        case NodeKind::PucciPlus:
            out << pad << "pucci_plus " << fmt(n.pucci_lambda) << " " << fmt(n.pucci_Lambda)
                << "\n";
            break;
    }
}

struct Tokens {
    std::vector<std::string> items;
    std::vector<int> lines;
    size_t at = 0;

    bool done() const { return at >= items.size(); }
    const std::string& peek() const {
        static const std::string empty;
        return done() ? empty : items[at];
    }
    std::string next() {
        if (done()) throw FormatError("oscspec: unexpected end of input");
        return items[at++];
    }
    int line() const { return done() ? -1 : lines[at]; }
    void expect(const std::string& tok) {
        const std::string got = next();
        if (got != tok)
            throw FormatError("oscspec line " + std::to_string(lines[at - 1]) + ": expected '" +
                              tok + "', got '" + got + "'");
    }
    double number() {
        const std::string tok = next();
        try {
            size_t used = 0;
            const double v = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            return v;
        } catch (...) {
            throw FormatError("oscspec line " + std::to_string(lines[at - 1]) +
                              ": expected a number, got '" + tok + "'");
        }
    }
    int integer() { return static_cast<int>(number()); }
};

Tokens tokenize(const std::string& text) {
    Tokens t;
    int line = 1;
    std::string cur;
    auto flush = [&]() {
        if (!cur.empty()) {
            t.items.push_back(cur);
            t.lines.push_back(line);
            cur.clear();
        }
    };
    for (size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '\n') {
            flush();
            ++line;
        } else if (c == '#') {
            flush();
            while (i < text.size() && text[i] != '\n') ++i;
            ++line;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else if (c == '{' || c == '}') {
            flush();
            t.items.push_back(std::string(1, c));
            t.lines.push_back(line);
        } else {
            cur.push_back(c);
        }
    }
    flush();
    return t;
}

TrigPoly parse_poly(Tokens& t) {
    TrigPoly p;
    t.expect("{");
    while (t.peek() != "}") {
        const std::string key = t.next();
        if (key == "const") {
            p.constant = t.number();
        } else if (key == "term") {
            TrigPoly::Term term;
            term.kx = t.integer();
            term.ky = t.integer();
            term.cos_w = t.number();
            term.sin_w = t.number();
            p.terms.push_back(term);
        } else {
            throw FormatError("oscspec: unknown polynomial item '" + key + "'");
        }
    }
    t.expect("}");
    return p;
}

SpecNode parse_node(Tokens& t, int dim) {
    const std::string kind = t.next();
    if (kind == "linear") {
        t.expect("{");
        CoefficientField f;
        f.dim = dim;
        while (t.peek() != "}") {
            const std::string key = t.next();
            if (key == "p11")
                f.p11 = parse_poly(t);
            else if (key == "p22")
                f.p22 = parse_poly(t);
            else if (key == "p12")
                f.p12 = parse_poly(t);
            else
                throw FormatError("oscspec: unknown linear entry '" + key + "'");
        }
        t.expect("}");
        return SpecNode::linear(std::move(f));
    }
    if (kind == "min" || kind == "max") {
        t.expect("{");
        std::vector<SpecNode> children;
        while (t.peek() != "}") children.push_back(parse_node(t, dim));
        t.expect("}");
        return kind == "min" ? SpecNode::min_of(std::move(children))
                             : SpecNode::max_of(std::move(children));
    }
    if (kind == "pucci_minus" || kind == "pucci_plus") {
        const double lam = t.number();
        const double Lam = t.number();
        return kind == "pucci_minus" ? SpecNode::pucci_minus(lam, Lam)
                                     : SpecNode::pucci_plus(lam, Lam);
    }
    throw FormatError("oscspec: unknown node kind '" + kind + "'");
}

}  // namespace

std::string spec_to_text(const OperatorSpec& spec) {
    std::ostringstream out;
    out << "oscspec 1\n";
    out << "name " << spec.name() << "\n";
    out << "dim " << spec.dim() << "\n";
    out << "lambda " << fmt(spec.lambda()) << "\n";
    out << "Lambda " << fmt(spec.Lambda()) << "\n";
    out << "kappa " << fmt(spec.kappa()) << "\n";
    out << "gamma " << fmt(spec.gamma()) << "\n";
    out << "root {\n";
    node_to_text(spec.root(), out, 2);
    out << "}\n";
    return out.str();
}

SpecPtr spec_from_text(const std::string& text) {
    Tokens t = tokenize(text);
    t.expect("oscspec");
    if (t.integer() != 1) throw FormatError("oscspec: unsupported schema version");
    std::string name = "unnamed";
    int dim = 1;
    double lambda = 1.0, Lambda = 1.0, kappa = 0.0, gamma = 1.0;
    SpecNode root;
    bool have_root = false;
    while (!t.done()) {
        const std::string key = t.next();
        if (key == "name")
            name = t.next();
        else if (key == "dim")
            dim = t.integer();
        else if (key == "lambda")
            lambda = t.number();
        else if (key == "Lambda")
            Lambda = t.number();
        else if (key == "kappa")
            kappa = t.number();
        else if (key == "gamma")
            gamma = t.number();
        else if (key == "root") {
            t.expect("{");
            root = parse_node(t, dim);
            t.expect("}");
            have_root = true;
        } else {
            throw FormatError("oscspec line " + std::to_string(t.line()) + ": unknown key '" +
                              key + "'");
        }
    }
    if (!have_root) throw FormatError("oscspec: missing root");
    return make_spec(std::move(name), dim, lambda, Lambda, kappa, gamma, std::move(root));
}

void write_spec(const OperatorSpec& spec, const std::filesystem::path& path) {
    std::ofstream out(path);
    require(out.good(), "write_spec: cannot open " + path.string());
    out << spec_to_text(spec);
}

SpecPtr read_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), "read_spec: cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return spec_from_text(buf.str());
}

SpecPtr resolve_spec(const std::string& ref) {
    if (ref.rfind("builtin:", 0) == 0) return builtin_spec(ref.substr(8));
    return read_spec(ref);
}

void write_effective_csv(const EffectiveTable& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    require(out.good(), "write_effective_csv: cannot open " + path.string());
    out << (table.grid.dim == 1 ? "m,value,residual\n" : "m11,m22,m12,value,residual\n");
    for (Index i = 0; i < table.grid.size(); ++i) {
        const SymMatrix M = table.grid.anchor(i);
        if (table.grid.dim == 1)
            out << fmt(M.m11());
        else
            out << fmt(M.m11()) << "," << fmt(M.m22()) << "," << fmt(M.m12());
        out << "," << fmt(table.values[static_cast<size_t>(i)]) << ","
            << fmt(table.residuals[static_cast<size_t>(i)]) << "\n";
    }
}

void write_effective_json(const EffectiveTable& table, const std::filesystem::path& path) {
    nlohmann::json j;
    j["spec"] = table.spec_id;
    j["grid"] = {{"dim", table.grid.dim},
                 {"lo", table.grid.lo},
                 {"hi", table.grid.hi},
                 {"step", table.grid.step}};
    j["values"] = table.values;
    j["residuals"] = table.residuals;
    std::ofstream out(path);
    require(out.good(), "write_effective_json: cannot open " + path.string());
    out << j.dump(2) << "\n";
}

void write_decay_csv(const BoundaryLayerSolution& sol, const std::filesystem::path& path) {
    std::ofstream out(path);
    require(out.good(), "write_decay_csv: cannot open " + path.string());
    double lp4 = 0.0, lp8 = 0.0;
    for (const auto& [p, v] : sol.lp_hessian) (p == 4.0 ? lp4 : lp8) = v;
    out << "band,d_lo,d_mid,sup_hessian,reference,ratio,lp4,lp8\n";
    int k = 0;
    for (const auto& b : sol.bands) {
        out << k++ << "," << fmt(b.d_lo) << "," << fmt(b.d_mid) << "," << fmt(b.sup_hessian) << ","
            << fmt(b.reference) << "," << fmt(b.ratio) << "," << fmt(lp4) << "," << fmt(lp8)
            << "\n";
    }
}

namespace {

nlohmann::json report_to_json(const ExperimentReport& report) {
    nlohmann::json j;
    j["experiment"] = report.experiment;
    j["spec"] = report.spec_id;
    j["environment"] = {{"tool", "oscillate"}, {"format", 1}, {"seed", report.seed}};
    j["pass"] = report.pass;
    nlohmann::json flags = nlohmann::json::array();
    for (const auto& f : report.flags)
        flags.push_back({{"name", f.name}, {"pass", f.pass}, {"value", f.value}});
    j["flags"] = flags;
    j["scalars"] = report.scalars;
    j["notes"] = report.notes;
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : report.entries)
        entries.push_back({{"eps", e.eps},
                           {"cells", e.cells},
                           {"ok", e.ok},
                           {"raw", e.raw},
                           {"corrected", e.corrected},
                           {"log2_ratio", e.log2_ratio_from_prev},
                           {"note", e.note}});
    j["entries"] = entries;
    return j;
}

}  // namespace

void write_report_json(const ExperimentReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    require(out.good(), "write_report_json: cannot open " + path.string());
    out << report_to_json(report).dump(2) << "\n";
}

void write_sweep_csv(const ExperimentReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    require(out.good(), "write_sweep_csv: cannot open " + path.string());
    out << "eps,cells,ok,raw,corrected,log2_ratio\n";
    for (const auto& e : report.entries)
        out << fmt(e.eps) << "," << e.cells << "," << (e.ok ? 1 : 0) << "," << fmt(e.raw) << ","
            << fmt(e.corrected) << "," << fmt(e.log2_ratio_from_prev) << "\n";
}

void write_sweep_dat(const ExperimentReport& report, bool corrected,
                     const std::filesystem::path& path) {
    std::ofstream out(path);
    require(out.good(), "write_sweep_dat: cannot open " + path.string());
    out << "# eps " << (corrected ? "corrected" : "raw") << "\n";
    for (const auto& e : report.entries)
        if (e.ok) out << fmt(e.eps) << " " << fmt(corrected ? e.corrected : e.raw) << "\n";
}

std::string content_hash(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "content_hash: cannot open " + path.string());
    std::uint64_t h = 1469598103934665603ull;
    char buf[4096];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (!in) break;
    }
    char hex[20];
    std::snprintf(hex, sizeof hex, "fnv1a64:%016" PRIx64, h);
    return hex;
}

void write_manifest(const std::vector<std::filesystem::path>& files,
                    const std::filesystem::path& path) {
    nlohmann::json j;
    nlohmann::json list = nlohmann::json::array();
    for (const auto& f : files)
        list.push_back({{"file", f.filename().string()}, {"hash", content_hash(f)}});
    j["files"] = list;
    std::ofstream out(path);
    require(out.good(), "write_manifest: cannot open " + path.string());
    out << j.dump(2) << "\n";
}

}  // namespace osc
