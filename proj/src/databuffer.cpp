#include "hotune/databuffer.hpp"

#include "hotune/signals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace hotune {

namespace {

constexpr double kMinRegressorNorm = 1e-12;

void require_nonempty(const DataBuffer& b, const char* op) {
    if (b.empty()) throw std::invalid_argument(std::string(op) + ": empty data buffer");
}

}  // namespace

DataBuffer::DataBuffer(int dimension, int capacity, double epsilon)
    : dim_(dimension), capacity_(capacity), epsilon_(epsilon) {
    if (dimension < 1) throw ConfigError("dimension", "must be at least 1");
    if (capacity < dimension) throw ConfigError("N_bar", "capacity must be at least the dimension");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon", "must be positive");
    samples_.reserve(static_cast<std::size_t>(capacity));
}

DataBuffer DataBuffer::from_samples(int dimension, std::vector<DataSample> samples) {
    DataBuffer b;
    b.dim_ = dimension;
    b.capacity_ = std::max(dimension, static_cast<int>(samples.size()));
    b.epsilon_ = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < samples.size(); ++k) {
        if (samples[k].phi.size() != dimension) {
            throw ConfigError("buffer", "sample dimension mismatch");
        }
        if (k > 0 && !(samples[k].t > samples[k - 1].t)) {
            throw ConfigError("buffer", "sample times must strictly increase");
        }
    }
    b.samples_ = std::move(samples);
    b.frozen_ = b.size() == b.capacity_;
    return b;
}

DataBuffer DataBuffer::prefix(int count) const {
    DataBuffer b = *this;
    count = std::clamp(count, 0, size());
    b.samples_.resize(static_cast<std::size_t>(count));
    b.frozen_ = count == capacity_;
    return b;
}

double DataBuffer::criterion(const Vec& phi) const {
    if (samples_.empty()) return std::numeric_limits<double>::infinity();
    const double norm = phi.norm();
    if (norm < kMinRegressorNorm) return 0.0;
    return (phi - samples_.back().phi).squaredNorm() / norm;
}

bool DataBuffer::try_record(double t, const Vec& phi, double y_star) {
    if (frozen_) return false;
    if (!samples_.empty() && !(t > samples_.back().t)) {
        throw std::invalid_argument("maybe_record: sample time does not increase");
    }
    if (!samples_.empty()) {
        if (phi.norm() < kMinRegressorNorm) return false;
        if (criterion(phi) < epsilon_) return false;
    }
    samples_.push_back(DataSample{t, phi, y_star});
    frozen_ = size() == capacity_;
    return true;
}

void DataBuffer::write_csv(std::ostream& os) const {
    os << "k,t_k";
    for (int i = 1; i <= dim_; ++i) os << ",phi_" << i;
    os << ",y_star_k\n";
    const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
    for (std::size_t k = 0; k < samples_.size(); ++k) {
        const auto& s = samples_[k];
        os << (k + 1) << ',' << s.t;
        for (int i = 0; i < dim_; ++i) os << ',' << s.phi[i];
        os << ',' << s.y_star << '\n';
    }
    os.precision(old_precision);
}

RecordResult maybe_record(const DataBuffer& buffer, double t, const Vec& phi, double y_star) {
    RecordResult r{buffer, false};
    r.recorded = r.buffer.try_record(t, phi, y_star);
    return r;
}

Mat p_matrix(const DataBuffer& buffer, double mu) {
    require_nonempty(buffer, "p_matrix");
    const int n = buffer.dimension();
    Mat p = Mat::Zero(n, n);
    for (const auto& s : buffer.samples()) {
        p.noalias() += (s.phi * s.phi.transpose()) / (1.0 + mu * s.phi.squaredNorm());
    }
    return 0.5 * (p + p.transpose());
}

Vec b_term(const DataBuffer& buffer, const Vec& theta, double mu) {
    require_nonempty(buffer, "b_term");
    Vec b = Vec::Zero(buffer.dimension());
    for (const auto& s : buffer.samples()) {
        b += s.phi * ((s.phi.dot(theta) - s.y_star) / (1.0 + mu * s.phi.squaredNorm()));
    }
    return b;
}

int numerical_rank(const Mat& m, double rel_tol) {
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<Mat> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv[0] == 0.0) return 0;
    const double cut = rel_tol * sv[0];
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv[i] > cut) ++rank;
    }
    return rank;
}

RichnessReport richness(const DataBuffer& buffer, double mu) {
    require_nonempty(buffer, "richness");
    const int n = buffer.dimension();
    Mat d(n, buffer.size());
    for (int k = 0; k < buffer.size(); ++k) d.col(k) = buffer.samples()[static_cast<std::size_t>(k)].phi;

    RichnessReport r;
    r.N = buffer.size();
    r.rank_D = numerical_rank(d);
    r.min_eig_P = min_eigenvalue(p_matrix(buffer, mu));
    r.delta_mu = std::max(r.min_eig_P, 0.0);
    r.sufficient = r.rank_D == n;
    return r;
}

}  // namespace hotune
