#pragma once

#include <istream>
#include <memory>
#include <string>
#include <vector>

#include "fhelab/bootstrap.hpp"
#include "fhelab/ckks.hpp"

namespace fhelab {

// sum_k x_k * y_k with one key switch and one ModDown (P and the top prime together) for the whole sum
Ciphertext inner_product(const Evaluator& ev, const std::vector<Ciphertext>& xs, const std::vector<Ciphertext>& ys,
                         const SwitchingKey& rk);

struct Dataset {
    std::vector<std::string> header;     // feature names
    std::vector<std::vector<double>> x;  // samples x features
    std::vector<double> y;               // labels in {-1, +1}
    std::size_t samples() const { return x.size(); }
    std::size_t features() const { return x.empty() ? 0 : x[0].size(); }
};

// header row, float cells; the label column (values 0/1 or -1/+1) is named by `label`
Dataset read_csv(std::istream& in, const std::string& label = "label");
Dataset read_csv_file(const std::string& path, const std::string& label = "label");
// two Gaussian blobs; column 0 is a constant bias feature
Dataset make_blobs(std::size_t samples, std::size_t features, std::uint64_t seed, double separation = 1.0);

struct LrConfig {
    double lr = 1.0;
    int iterations = 6;
    int bootstrap_period = 3;
    int sigmoid_degree = 3;
    double sigmoid_range = 8;  // least squares fit interval [-range, range]
};

// the degree-3 fit of sigma(-t) used by both trainers
Chebyshev sigmoid_fit(const LrConfig& c);

double lr_loss(const Dataset& d, const std::vector<double>& w);

// w <- w + (lr/n) sum_i g(z_i . w) z_i with z_i = y_i x_i and g the polynomial fit of sigma(-t).
// Returns the weights after every iteration (entry 0 = w0).
std::vector<std::vector<double>> lr_train_plain(const Dataset& d, const LrConfig& c, std::vector<double> w0 = {},
                                                bool exact_sigmoid = false);

struct LrState {
    Ciphertext w;  // slot i*d + j holds w_j for every sample block i
    Ciphertext z;  // slot i*d + j holds z_ij
    double lr = 1.0;
    std::size_t n_samples = 0, d = 0;
    int iteration = 0;
    int bootstrap_period = 3;
    int bootstraps = 0;
};

class EncryptedLr {
public:
    // n_samples and d must be powers of two with n_samples*d dividing the slot count
    EncryptedLr(const Evaluator& ev, const Bootstrapper& bs, const KeySet& keys, LrConfig cfg);

    static std::vector<int> rotations(std::size_t n_samples, std::size_t d);
    static int iteration_depth() { return 5; }

    // z packed at the top level; initial weights at level `w_level` (default 0, so the first step bootstraps)
    LrState init(const Dataset& data, const SecretKey& sk, Evaluator& enc_ev, std::vector<double> w0 = {},
                 int w_level = 0) const;
    // one update; throws when the weight ciphertext has fewer levels than an iteration needs
    LrState iteration(const LrState& s) const;
    // bootstraps first when the remaining level is below one iteration's depth
    LrState step(const LrState& s) const;
    std::vector<double> weights(const LrState& s, const SecretKey& sk) const;

private:
    const Evaluator& ev_;
    const Bootstrapper& bs_;
    const KeySet& keys_;
    LrConfig cfg_;
    Chebyshev g_;  // sigmoid fit on the masked domain [-1, 1], coefficients scaled by lr/n at init
    const SwitchingKey& key(int rotation) const;
    Ciphertext rotate_sum(const Ciphertext& c, int stride, std::size_t count, bool left) const;
};

}  // namespace fhelab
