#pragma once

#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "fhelab/ckks.hpp"

namespace fhelab {

// Chebyshev series on [a, b].
struct Chebyshev {
    double a = -1, b = 1;
    std::vector<double> c;  // c[0] is the plain constant term

    std::size_t degree() const { return c.empty() ? 0 : c.size() - 1; }
    double operator()(double x) const;
    // interpolation at the degree+1 Chebyshev nodes of the first kind
    static Chebyshev interpolate(const std::function<double(double)>& f, int degree, double a = -1, double b = 1);
    // least squares fit on `samples` uniform points, Chebyshev basis
    static Chebyshev fit(const std::function<double(double)>& f, int degree, double a, double b, int samples = 2001);
};

// Levels poly_eval consumes for a given degree (the affine map to [-1,1] adds one when the domain is not [-1,1]).
int chebyshev_depth(int degree);
int poly_eval_depth(const Chebyshev& p);

// sin(2 pi x) for |x| <= K + margin: a Chebyshev interpolant of cos((2 pi R t - pi/2) / 2^r) on t = x/R
// followed by r double-angle steps c <- 2c^2 - 1.
struct SinePoly {
    int degree = 63;
    int doublings = 2;
    double K = 12;      // bound on the integer part picked up by the modulus raise
    double R = 13.25;   // evaluation interval [-R, R] in units of q0
    Chebyshev cheb;
    double max_error = 0;  // max |approx - sin(2 pi x)| over [-R, R], numeric sweep

    static SinePoly make(int degree, int doublings, double K, double margin = 1.25);
    double eval(double x) const;  // plaintext model of the homomorphic evaluation
    int depth() const { return chebyshev_depth(degree) + doublings; }
};

// y[j] = sum_d diags[d][j] * x[(j + d) mod n]
struct LinearTransform {
    std::size_t n = 0;
    std::map<std::size_t, std::vector<cplx>> diags;

    static LinearTransform from_dense(const std::vector<std::vector<cplx>>& m, double drop_below = 0);
    std::vector<std::vector<cplx>> dense() const;
    std::vector<cplx> apply(const std::vector<cplx>& x) const;
    // this applied after `first`
    LinearTransform after(const LinearTransform& first) const;
    // right-rotation amounts whose keys a homomorphic evaluation needs
    std::vector<int> rotations() const;
};

enum class DftDirection { coeff_to_slot, slot_to_coeff };

// Factors the slot embedding into radix stages. coeff_to_slot maps slots z to
// bit-reversed w with z = special_fft(w); slot_to_coeff is its inverse map.
struct DftPlan {
    DftDirection direction = DftDirection::coeff_to_slot;
    std::size_t n = 0;
    std::vector<int> radices;              // in application order
    std::vector<LinearTransform> stages;   // stages[0] is applied first

    static DftPlan make(const Encoder& enc, DftDirection dir, const std::vector<int>& radices);
    std::vector<cplx> apply(const std::vector<cplx>& x) const;
    LinearTransform product() const;
    std::vector<int> rotations() const;
};

// Homomorphic M*x with one hoisted ModUp, per-diagonal Automorph + KSKInnerProd,
// diagonals applied on the raised basis and a single ModDown by P*q_l. Consumes one level.
// `factor` scales every diagonal.
Ciphertext pt_mat_vec_mult(const Evaluator& ev, const Ciphertext& ct, const LinearTransform& m, const KeySet& keys,
                           cplx factor = 1.0);

// Chebyshev BSGS evaluation.
Ciphertext poly_eval(const Evaluator& ev, const Ciphertext& ct, const Chebyshev& p, const SwitchingKey& relin);

struct BootstrapParams {
    std::vector<int> radices;  // CtS stages in order; StC runs the same radices
    int sine_degree = 63;
    int doublings = 2;
    double K = 12;

    // N=2^12 toy: three DFT stages, degree-31 sine, three doublings
    static BootstrapParams toy();
};

class Bootstrapper {
public:
    Bootstrapper(std::shared_ptr<const Context> ctx, BootstrapParams p);

    const BootstrapParams& params() const { return p_; }
    const DftPlan& cts_plan() const { return cts_; }
    const DftPlan& stc_plan() const { return stc_; }
    const SinePoly& sine() const { return sine_; }
    std::vector<int> rotations() const;
    int depth() const;
    int level_out() const { return ctx_->params().L - depth(); }

    // lift the level-0 residues to the top of the chain: decrypts to m + q0*I
    Ciphertext mod_raise(const Ciphertext& ct) const;
    // slots of the result hold (t_lo + i t_hi) / (2 q0 R) in bit-reversed order; s_in is the scale of the input
    Ciphertext coeff_to_slot(const Evaluator& ev, const Ciphertext& raised, double s_in, const KeySet& keys) const;
    // real and imaginary parts through the sine, recombined
    Ciphertext eval_mod(const Evaluator& ev, const Ciphertext& u, const KeySet& keys) const;
    Ciphertext slot_to_coeff(const Evaluator& ev, const Ciphertext& v, double s_in, const KeySet& keys) const;
    Ciphertext bootstrap(const Evaluator& ev, const Ciphertext& ct, const KeySet& keys) const;

private:
    std::shared_ptr<const Context> ctx_;
    BootstrapParams p_;
    DftPlan cts_, stc_;
    SinePoly sine_;
};

}  // namespace fhelab
