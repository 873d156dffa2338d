#include "lista/io.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "dataset payload is little-endian float64; big-endian hosts are unsupported");

namespace lista {

using nlohmann::json;

std::string sidecar_path(const std::string& path) { return path + ".json"; }

namespace {

struct Section {
    std::string name;
    std::size_t rows = 0, cols = 0, offset = 0;
};

json gen_to_json(const GenConfig& g) {
    json j;
    j["m"] = g.m;
    j["n"] = g.n;
    j["sparsity_p"] = g.sparsity_p;
    j["magnitude_sigma"] = g.magnitude_sigma;
    if (g.snr_db)
        j["snr_db"] = *g.snr_db;
    else
        j["snr_db"] = "noiseless";
    j["nonzero_mode"] = g.nonzero_mode == NonzeroMode::constant ? "constant" : "gaussian";
    j["constant_value"] = g.constant_value;
    j["seed"] = g.seed;
    j["count"] = g.count;
    return j;
}

GenConfig gen_from_json(const json& j) {
    GenConfig g;
    g.m = j.at("m").get<std::size_t>();
    g.n = j.at("n").get<std::size_t>();
    g.sparsity_p = j.at("sparsity_p").get<double>();
    g.magnitude_sigma = j.at("magnitude_sigma").get<double>();
    if (j.at("snr_db").is_string())
        g.snr_db.reset();
    else
        g.snr_db = j.at("snr_db").get<double>();
    g.nonzero_mode = j.at("nonzero_mode").get<std::string>() == "constant"
                         ? NonzeroMode::constant
                         : NonzeroMode::gaussian;
    g.constant_value = j.at("constant_value").get<double>();
    g.seed = j.at("seed").get<std::uint64_t>();
    g.count = j.at("count").get<std::size_t>();
    return g;
}

void write_section(std::ofstream& out, const double* data, std::size_t count) {
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(count * sizeof(double)));
}

void read_section(std::ifstream& in, double* data, std::size_t count, const std::string& name) {
    in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(count * sizeof(double)))
        throw IoError(IoErrorCode::truncated_payload, "payload truncated in section " + name);
}

}  // namespace

void save_problem(const std::string& path, const Dataset& ds) {
    const auto& s = ds.setup;
    if (s.A.rows() != s.m || s.A.cols() != s.n)
        throw IoError(IoErrorCode::dimension_mismatch, "setup A dims inconsistent");
    const std::size_t count = ds.instances.size();

    std::vector<Section> sections;
    std::size_t offset = 0;
    auto add = [&](const std::string& name, std::size_t r, std::size_t c) {
        sections.push_back({name, r, c, offset});
        offset += r * c * sizeof(double);
    };
    add("A", s.m, s.n);
    const bool with_weights = s.has_weights();
    if (with_weights) {
        add("A_pinv", s.n, s.m);
        add("W", s.m, s.n);
        add("D", s.m, s.n);
        add("G", s.m, s.m);
    }
    add("x_star", count, s.n);
    add("epsilon", count, s.m);
    add("b", count, s.m);

    json side;
    side["format"] = "lista-dataset";
    side["version"] = 1;
    side["m"] = s.m;
    side["n"] = s.n;
    side["count"] = count;
    side["has_weights"] = with_weights;
    if (with_weights) side["mu"] = s.mu;
    side["gen"] = gen_to_json(ds.gen);
    side["payload_bytes"] = offset;
    json jsec = json::array();
    for (const auto& sec : sections) {
        jsec.push_back({{"name", sec.name},
                        {"rows", sec.rows},
                        {"cols", sec.cols},
                        {"offset", sec.offset},
                        {"bytes", sec.rows * sec.cols * sizeof(double)}});
    }
    side["sections"] = jsec;

    std::ofstream sf(sidecar_path(path));
    if (!sf) throw IoError(IoErrorCode::io_failure, "cannot write " + sidecar_path(path));
    sf << side.dump(2) << '\n';
    sf.close();
    if (!sf) throw IoError(IoErrorCode::io_failure, "write failed: " + sidecar_path(path));

    std::ofstream bf(path, std::ios::binary);
    if (!bf) throw IoError(IoErrorCode::io_failure, "cannot write " + path);
    write_section(bf, s.A.data(), s.A.size());
    if (with_weights) {
        write_section(bf, s.A_pinv.data(), s.A_pinv.size());
        write_section(bf, s.W.data(), s.W.size());
        write_section(bf, s.D.data(), s.D.size());
        write_section(bf, s.G.data(), s.G.size());
    }
    for (const auto& inst : ds.instances) write_section(bf, inst.x_star.data(), s.n);
    for (const auto& inst : ds.instances) write_section(bf, inst.epsilon.data(), s.m);
    for (const auto& inst : ds.instances) write_section(bf, inst.b.data(), s.m);
    bf.close();
    if (!bf) throw IoError(IoErrorCode::io_failure, "write failed: " + path);
}

Dataset load_problem(const std::string& path) {
    std::ifstream sf(sidecar_path(path));
    if (!sf) throw IoError(IoErrorCode::malformed_header, "missing sidecar " + sidecar_path(path));
    json side;
    try {
        sf >> side;
    } catch (const json::exception& e) {
        throw IoError(IoErrorCode::malformed_header, std::string("bad sidecar json: ") + e.what());
    }

    Dataset ds;
    std::size_t payload_bytes = 0;
    std::vector<Section> sections;
    bool with_weights = false;
    try {
        if (side.at("format").get<std::string>() != "lista-dataset")
            throw IoError(IoErrorCode::malformed_header, "not a lista-dataset file");
        ds.setup.m = side.at("m").get<std::size_t>();
        ds.setup.n = side.at("n").get<std::size_t>();
        with_weights = side.at("has_weights").get<bool>();
        if (with_weights) ds.setup.mu = side.at("mu").get<double>();
        ds.gen = gen_from_json(side.at("gen"));
        payload_bytes = side.at("payload_bytes").get<std::size_t>();
        for (const auto& js : side.at("sections")) {
            Section sec;
            sec.name = js.at("name").get<std::string>();
            sec.rows = js.at("rows").get<std::size_t>();
            sec.cols = js.at("cols").get<std::size_t>();
            sec.offset = js.at("offset").get<std::size_t>();
            if (js.at("bytes").get<std::size_t>() != sec.rows * sec.cols * sizeof(double))
                throw IoError(IoErrorCode::dimension_mismatch,
                              "section " + sec.name + " byte count does not match its dims");
            sections.push_back(sec);
        }
    } catch (const json::exception& e) {
        throw IoError(IoErrorCode::malformed_header, std::string("sidecar fields: ") + e.what());
    }

    const std::size_t m = ds.setup.m, n = ds.setup.n;
    std::size_t count = 0;
    std::size_t expect_offset = 0;
    auto expect = [&](const Section& sec, std::size_t r, std::size_t c) {
        if (sec.rows != r || sec.cols != c)
            throw IoError(IoErrorCode::dimension_mismatch,
                          "section " + sec.name + " dims do not match header m/n/count");
        if (sec.offset != expect_offset)
            throw IoError(IoErrorCode::dimension_mismatch,
                          "section " + sec.name + " offset is not contiguous");
        expect_offset += r * c * sizeof(double);
    };
    std::size_t idx = 0;
    auto next = [&](const std::string& name) -> const Section& {
        if (idx >= sections.size() || sections[idx].name != name)
            throw IoError(IoErrorCode::malformed_header, "missing section " + name);
        return sections[idx++];
    };
    expect(next("A"), m, n);
    if (with_weights) {
        expect(next("A_pinv"), n, m);
        expect(next("W"), m, n);
        expect(next("D"), m, n);
        expect(next("G"), m, m);
    }
    {
        const Section& xs = next("x_star");
        count = xs.rows;
        expect(xs, count, n);
        expect(next("epsilon"), count, m);
        expect(next("b"), count, m);
    }
    if (expect_offset != payload_bytes)
        throw IoError(IoErrorCode::dimension_mismatch, "payload_bytes does not match sections");

    std::ifstream bf(path, std::ios::binary);
    if (!bf) throw IoError(IoErrorCode::io_failure, "cannot open " + path);
    bf.seekg(0, std::ios::end);
    const auto file_size = static_cast<std::size_t>(bf.tellg());
    if (file_size != payload_bytes)
        throw IoError(IoErrorCode::truncated_payload,
                      "payload is " + std::to_string(file_size) + " bytes, expected " +
                          std::to_string(payload_bytes));
    bf.seekg(0, std::ios::beg);

    ds.setup.A = Matrix(m, n);
    read_section(bf, ds.setup.A.data(), m * n, "A");
    if (with_weights) {
        ds.setup.A_pinv = Matrix(n, m);
        ds.setup.W = Matrix(m, n);
        ds.setup.D = Matrix(m, n);
        ds.setup.G = Matrix(m, m);
        read_section(bf, ds.setup.A_pinv.data(), n * m, "A_pinv");
        read_section(bf, ds.setup.W.data(), m * n, "W");
        read_section(bf, ds.setup.D.data(), m * n, "D");
        read_section(bf, ds.setup.G.data(), m * m, "G");
    }
    ds.instances.resize(count);
    for (auto& inst : ds.instances) {
        inst.x_star.resize(n);
        read_section(bf, inst.x_star.data(), n, "x_star");
    }
    for (auto& inst : ds.instances) {
        inst.epsilon.resize(m);
        read_section(bf, inst.epsilon.data(), m, "epsilon");
    }
    for (auto& inst : ds.instances) {
        inst.b.resize(m);
        read_section(bf, inst.b.data(), m, "b");
    }
    return ds;
}

void export_instances_csv(const std::string& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw IoError(IoErrorCode::io_failure, "cannot write " + path);
    out << "instance,kind,values\n";
    char buf[32];
    auto row = [&](std::size_t i, const char* kind, const Vector& v) {
        out << i << ',' << kind;
        for (double x : v) {
            std::snprintf(buf, sizeof(buf), "%.17g", x);
            out << ',' << buf;
        }
        out << '\n';
    };
    for (std::size_t i = 0; i < ds.instances.size(); ++i) {
        row(i, "x_star", ds.instances[i].x_star);
        row(i, "epsilon", ds.instances[i].epsilon);
        row(i, "b", ds.instances[i].b);
    }
}

}  // namespace lista
