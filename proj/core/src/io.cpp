#include "lassotap/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace lassotap {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    return in;
}

std::vector<double> parse_csv_line(const std::string& line,
                                   const std::string& path) {
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
        std::size_t comma = line.find(',', pos);
        if (comma == std::string::npos) comma = line.size();
        const std::string cell = line.substr(pos, comma - pos);
        try {
            row.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw std::runtime_error("bad numeric cell '" + cell + "' in " + path);
        }
        pos = comma + 1;
        if (comma == line.size()) break;
    }
    return row;
}

}  // namespace

void write_vector_csv(const std::string& path, const Eigen::VectorXd& v) {
    auto out = open_out(path);
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out << format_double(v[i]) << '\n';
}

Eigen::VectorXd read_vector_csv(const std::string& path) {
    auto in = open_in(path);
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        values.push_back(parse_csv_line(line, path).at(0));
    }
    return Eigen::Map<Eigen::VectorXd>(values.data(),
                                       static_cast<Eigen::Index>(values.size()));
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
    auto out = open_out(path);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
    auto in = open_in(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        rows.push_back(parse_csv_line(line, path));
        if (rows.back().size() != rows.front().size())
            throw std::runtime_error("ragged matrix CSV: " + path);
    }
    if (rows.empty()) throw std::runtime_error("empty matrix CSV: " + path);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

void save_instance(const std::string& dir, const ProblemInstance& instance) {
    fs::create_directories(dir);
    write_matrix_csv(dir + "/A.csv", instance.A);
    write_vector_csv(dir + "/y.csv", instance.y);
    write_vector_csv(dir + "/x0.csv", instance.x0);
    write_vector_csv(dir + "/xi.csv", instance.xi);

    json side;
    side["ensemble"]["kind"] = to_string(instance.ensemble.kind);
    side["ensemble"]["gamma"] = instance.ensemble.gamma;
    if (instance.ensemble.kappa.has_value())
        side["ensemble"]["kappa"] = *instance.ensemble.kappa;
    side["seed"] = instance.seed;
    side["sigma2"] = instance.sigma2;
    side["rho"] = instance.rho;
    side["m"] = instance.A.rows();
    side["n"] = instance.A.cols();
    auto out = open_out(dir + "/instance.json");
    out << side.dump(2) << '\n';
}

ProblemInstance load_instance(const std::string& dir) {
    ProblemInstance inst;
    inst.A = read_matrix_csv(dir + "/A.csv");
    inst.y = read_vector_csv(dir + "/y.csv");
    inst.x0 = read_vector_csv(dir + "/x0.csv");
    inst.xi = read_vector_csv(dir + "/xi.csv");

    auto in = open_in(dir + "/instance.json");
    json side = json::parse(in);
    inst.ensemble.kind = ensemble_kind_from_string(side.at("ensemble").at("kind"));
    inst.ensemble.gamma = side.at("ensemble").at("gamma");
    if (side.at("ensemble").contains("kappa"))
        inst.ensemble.kappa = side.at("ensemble").at("kappa").get<double>();
    inst.seed = side.at("seed");
    inst.sigma2 = side.at("sigma2");
    inst.rho = side.at("rho");
    inst.ensemble.validate();
    if (inst.A.rows() != side.at("m").get<Eigen::Index>() ||
        inst.A.cols() != side.at("n").get<Eigen::Index>())
        throw std::runtime_error("instance sidecar disagrees with A.csv shape");
    return inst;
}

}  // namespace lassotap
