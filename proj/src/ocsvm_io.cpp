#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

#include "ledgerad/ocsvm.hpp"

namespace ledgerad {

namespace {

constexpr const char* kMagic = "ledgerad-ocsvm";
constexpr int kVersion = 1;

std::string exact(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <typename T>
void expect(std::istream& in, const std::string& key, T& value) {
    std::string got;
    if (!(in >> got) || got != key || !(in >> value)) throw std::runtime_error("ocsvm model: expected '" + key + "'");
}

}  // namespace

void write_ocsvm_model(std::ostream& out, const OcSvmModel<double>& model) {
    out << kMagic << ' ' << kVersion << '\n'
        << "gamma " << exact(model.gamma) << '\n'
        << "nu " << exact(model.nu) << '\n'
        << "rho " << exact(model.rho) << '\n'
        << "gap " << exact(model.max_violation) << '\n'
        << "m " << model.m << '\n'
        << "dim " << model.support_vectors.cols() << '\n'
        << "support " << model.support_vectors.rows() << '\n';
    for (Eigen::Index r = 0; r < model.support_vectors.rows(); ++r) {
        out << exact(model.alpha(r));
        for (Eigen::Index c = 0; c < model.support_vectors.cols(); ++c) out << ' ' << exact(model.support_vectors(r, c));
        out << '\n';
    }
}

OcSvmModel<double> read_ocsvm_model(std::istream& in) {
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != kMagic) throw std::runtime_error("not an ocsvm model file");
    if (version != kVersion) throw std::runtime_error("unsupported ocsvm model version " + std::to_string(version));
    OcSvmModel<double> model;
    Eigen::Index dim = 0;
    Eigen::Index support = 0;
    expect(in, "gamma", model.gamma);
    expect(in, "nu", model.nu);
    expect(in, "rho", model.rho);
    expect(in, "gap", model.max_violation);
    expect(in, "m", model.m);
    expect(in, "dim", dim);
    expect(in, "support", support);
    model.support_vectors.resize(support, dim);
    model.alpha.resize(support);
    for (Eigen::Index r = 0; r < support; ++r) {
        if (!(in >> model.alpha(r))) throw std::runtime_error("ocsvm model: truncated support vectors");
        for (Eigen::Index c = 0; c < dim; ++c)
            if (!(in >> model.support_vectors(r, c))) throw std::runtime_error("ocsvm model: truncated support vectors");
    }
    model.converged = true;
    return model;
}

}  // namespace ledgerad
