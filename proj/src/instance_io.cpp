#include "psksdr/instance_io.hpp"

#include <cmath>
#include <fstream>

#include "psksdr/error.hpp"

namespace psksdr {

namespace {

constexpr double kReceivedCheckTol = 1e-9;

nlohmann::json snr_to_json(double snr_db) {
  if (std::isinf(snr_db)) return "inf";
  return snr_db;
}

double snr_from_json(const nlohmann::json& v) {
  if (v.is_string()) {
    if (v.get<std::string>() == "inf") return kNoiselessSnr;
    throw Error(ErrorCode::invalid_parameter, "snr_db must be a number or \"inf\"");
  }
  return v.get<double>();
}

std::vector<double> read_array(const nlohmann::json& doc, const char* key, std::size_t expected) {
  if (!doc.contains(key)) throw Error(ErrorCode::invalid_parameter, std::string("missing field ") + key);
  auto values = doc.at(key).get<std::vector<double>>();
  if (values.size() != expected) {
    throw Error(ErrorCode::dimension_mismatch, std::string("field ") + key + " has wrong length");
  }
  return values;
}

}  // namespace

nlohmann::json instance_to_json(const MimoInstance& inst) {
  nlohmann::json doc;
  doc["m"] = inst.m;
  doc["n"] = inst.n;
  doc["M"] = inst.constellation.M;
  doc["snr_db"] = snr_to_json(inst.snr_db);
  doc["seed"] = inst.seed;
  std::vector<double> h_re, h_im;
  for (int row = 0; row < inst.m; ++row) {
    for (int col = 0; col < inst.n; ++col) {
      h_re.push_back(inst.H(row, col).real());
      h_im.push_back(inst.H(row, col).imag());
    }
  }
  doc["H_re"] = h_re;
  doc["H_im"] = h_im;
  std::vector<int> one_based(inst.x_index.begin(), inst.x_index.end());
  for (auto& j : one_based) ++j;
  doc["x_star_index"] = one_based;
  std::vector<double> nu_re(inst.m), nu_im(inst.m), r_re(inst.m), r_im(inst.m);
  for (int row = 0; row < inst.m; ++row) {
    nu_re[row] = inst.nu[row].real();
    nu_im[row] = inst.nu[row].imag();
    r_re[row] = inst.r[row].real();
    r_im[row] = inst.r[row].imag();
  }
  doc["nu_re"] = nu_re;
  doc["nu_im"] = nu_im;
  doc["r_re"] = r_re;
  doc["r_im"] = r_im;
  return doc;
}

MimoInstance instance_from_json(const nlohmann::json& doc) {
  try {
    const int m = doc.at("m").get<int>();
    const int n = doc.at("n").get<int>();
    const int M = doc.at("M").get<int>();
    if (n < 1 || m < n) throw Error(ErrorCode::invalid_parameter, "need m >= n >= 1");
    const double snr_db = snr_from_json(doc.at("snr_db"));
    const auto seed = doc.value("seed", std::uint64_t{0});

    const auto mn = static_cast<std::size_t>(m) * static_cast<std::size_t>(n);
    const auto h_re = read_array(doc, "H_re", mn);
    const auto h_im = read_array(doc, "H_im", mn);
    Eigen::MatrixXcd H(m, n);
    for (int row = 0; row < m; ++row)
      for (int col = 0; col < n; ++col) {
        const auto k = static_cast<std::size_t>(row) * n + col;
        H(row, col) = cplx(h_re[k], h_im[k]);
      }

    auto one_based = doc.at("x_star_index").get<std::vector<int>>();
    if (static_cast<int>(one_based.size()) != n) {
      throw Error(ErrorCode::dimension_mismatch, "x_star_index has wrong length");
    }
    std::vector<int> x_index(one_based.size());
    for (std::size_t i = 0; i < one_based.size(); ++i) {
      if (one_based[i] < 1 || one_based[i] > M) {
        throw Error(ErrorCode::invalid_parameter, "x_star_index entries must lie in 1..M");
      }
      x_index[i] = one_based[i] - 1;
    }

    const auto nu_re = read_array(doc, "nu_re", m);
    const auto nu_im = read_array(doc, "nu_im", m);
    Eigen::VectorXcd nu(m);
    for (int row = 0; row < m; ++row) nu[row] = cplx(nu_re[row], nu_im[row]);

    auto inst = make_instance(std::move(H), std::move(x_index), std::move(nu), M, snr_db, seed);

    if (doc.contains("r_re") && doc.contains("r_im")) {
      const auto r_re = read_array(doc, "r_re", m);
      const auto r_im = read_array(doc, "r_im", m);
      for (int row = 0; row < m; ++row) {
        if (std::abs(inst.r[row] - cplx(r_re[row], r_im[row])) > kReceivedCheckTol * (1.0 + std::abs(inst.r[row]))) {
          throw Error(ErrorCode::invalid_parameter, "stored r does not equal H x* + nu");
        }
      }
    }
    return inst;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_parameter, std::string("malformed instance: ") + e.what());
  }
}

void save_instance(const MimoInstance& instance, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot open " + path + " for writing");
  out << instance_to_json(instance).dump(2) << '\n';
  if (!out) throw Error(ErrorCode::io, "write failed: " + path);
}

MimoInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_parameter, "cannot parse " + path + ": " + e.what());
  }
  return instance_from_json(doc);
}

}  // namespace psksdr
