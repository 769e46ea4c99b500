#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fhelab/ckks.hpp"

namespace fhelab {

namespace {

void bit_reverse(std::vector<cplx>& v) {
    const std::size_t n = v.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(v[i], v[j]);
    }
}

}  // namespace

Encoder::Encoder(std::size_t n) : slots_(n / 2) {
    if (n < 4 || (n & (n - 1))) throw std::invalid_argument("Encoder: ring degree must be a power of two >= 4");
    const std::size_t m = 2 * n;
    rot_group_.resize(slots_);
    std::uint64_t g = 1;
    for (std::size_t j = 0; j < slots_; ++j) {
        rot_group_[j] = g;
        g = g * 5 % m;
    }
    ksi_.resize(m + 1);
    for (std::size_t k = 0; k <= m; ++k) {
        double ang = 2.0 * std::numbers::pi * double(k) / double(m);
        ksi_[k] = {std::cos(ang), std::sin(ang)};
    }
}

// v holds w (length slots); on return v holds z_j = sum_k w'_k zeta^(k 5^j)
void Encoder::special_fft(std::vector<cplx>& v) const {
    const std::size_t n = slots_, m = 4 * n;
    if (v.size() != n) throw std::invalid_argument("special_fft: size mismatch");
    bit_reverse(v);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t lenh = len >> 1, lenq = len << 2;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t j = 0; j < lenh; ++j) {
                std::size_t idx = (rot_group_[j] % lenq) * (m / lenq);
                cplx u = v[i + j];
                cplx t = v[i + j + lenh] * ksi_[idx];
                v[i + j] = u + t;
                v[i + j + lenh] = u - t;
            }
        }
    }
}

void Encoder::special_ifft(std::vector<cplx>& v) const {
    const std::size_t n = slots_, m = 4 * n;
    if (v.size() != n) throw std::invalid_argument("special_ifft: size mismatch");
    for (std::size_t len = n; len >= 2; len >>= 1) {
        const std::size_t lenh = len >> 1, lenq = len << 2;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t j = 0; j < lenh; ++j) {
                std::size_t idx = (lenq - rot_group_[j] % lenq) * (m / lenq);
                cplx u = v[i + j] + v[i + j + lenh];
                cplx t = (v[i + j] - v[i + j + lenh]) * ksi_[idx];
                v[i + j] = u;
                v[i + j + lenh] = t;
            }
        }
    }
    bit_reverse(v);
    for (auto& x : v) x /= double(n);
}

std::vector<double> Encoder::embed_inverse(const std::vector<cplx>& z) const {
    std::vector<cplx> w = z;
    special_ifft(w);
    std::vector<double> c(2 * slots_);
    for (std::size_t k = 0; k < slots_; ++k) {
        c[k] = w[k].real();
        c[k + slots_] = w[k].imag();
    }
    return c;
}

std::vector<cplx> Encoder::embed(const std::vector<double>& coeffs) const {
    if (coeffs.size() != 2 * slots_) throw std::invalid_argument("embed: size mismatch");
    std::vector<cplx> w(slots_);
    for (std::size_t k = 0; k < slots_; ++k) w[k] = {coeffs[k], coeffs[k + slots_]};
    special_fft(w);
    return w;
}

}  // namespace fhelab
