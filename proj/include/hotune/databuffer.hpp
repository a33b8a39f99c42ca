#pragma once

#include "hotune/types.hpp"

#include <iosfwd>
#include <vector>

namespace hotune {

struct DataSample {
    double t = 0.0;
    Vec phi;
    double y_star = 0.0;
};

/// Recorded regressor data for concurrent learning.
///
/// Samples are appended in strictly increasing time order until the count
/// reaches the capacity, after which the buffer is frozen and never changes.
/// New samples are admitted by the online criterion
///
///     |phi(t) - phi(t_last)|^2 / |phi(t)| >= epsilon
///
/// where t_last is the time of the most recently recorded sample. The first
/// sample is always recorded.
class DataBuffer {
public:
    DataBuffer() = default;
    DataBuffer(int dimension, int capacity, double epsilon);

    /// Buffer holding exactly `samples` (no criterion applied). Capacity is
    /// max(dimension, samples.size()); the buffer is frozen iff full.
    static DataBuffer from_samples(int dimension, std::vector<DataSample> samples);

    int dimension() const noexcept { return dim_; }
    int capacity() const noexcept { return capacity_; }
    double epsilon() const noexcept { return epsilon_; }
    bool frozen() const noexcept { return frozen_; }
    bool empty() const noexcept { return samples_.empty(); }
    int size() const noexcept { return static_cast<int>(samples_.size()); }
    const std::vector<DataSample>& samples() const noexcept { return samples_; }

    /// Buffer holding only the first `count` samples.
    DataBuffer prefix(int count) const;

    /// In-place form of maybe_record. Returns whether the sample was stored.
    bool try_record(double t, const Vec& phi, double y_star);

    /// Value of the recording criterion against the last sample, or +inf
    /// when the buffer is empty.
    double criterion(const Vec& phi) const;

    void write_csv(std::ostream& os) const;

private:
    int dim_ = 0;
    int capacity_ = 0;
    double epsilon_ = 0.0;
    bool frozen_ = false;
    std::vector<DataSample> samples_;
};

struct RecordResult {
    DataBuffer buffer;
    bool recorded = false;
};

RecordResult maybe_record(const DataBuffer& buffer, double t, const Vec& phi, double y_star);

/// sum_k phi_k phi_k^T / (1 + mu |phi_k|^2)
Mat p_matrix(const DataBuffer& buffer, double mu);

/// sum_k phi_k (phi_k^T theta - y*_k) / (1 + mu |phi_k|^2)
Vec b_term(const DataBuffer& buffer, const Vec& theta, double mu);

struct RichnessReport {
    int N = 0;
    int rank_D = 0;
    double min_eig_P = 0.0;
    double delta_mu = 0.0;
    bool sufficient = false;
};

/// Rank of the regressor matrix [phi_1 ... phi_N] (relative singular-value
/// threshold 1e-10) together with the smallest eigenvalue of P_mu.
RichnessReport richness(const DataBuffer& buffer, double mu);

/// Numerical rank: singular values above rel_tol * largest.
int numerical_rank(const Mat& m, double rel_tol = 1e-10);

}  // namespace hotune
