#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>

namespace shaqlab {

// Float transcendentals on the training path use a polynomial exp the
// compiler can vectorize; the double (test/verification) path keeps libm
// accuracy. fexp(0) == 1 exactly, so sigmoid(0) == 0.5 and tanh(0) == 0.

inline float fexp(float x) {
    // e^x = 2^n * e^r with r in [-ln2/2, ln2/2]; degree-5 polynomial for e^r.
    // Relative error ~1e-7. Input clamped so 1/(1+e^x) stays finite.
    const float kLog2e = 1.442695040888963f;
    const float kLn2Hi = 0.693145751953125f;
    const float kLn2Lo = 1.42860677e-06f;
    x = std::min(88.0f, std::max(-87.0f, x));
    const float n = std::floor(x * kLog2e + 0.5f);
    const float r = (x - n * kLn2Hi) - n * kLn2Lo;
    float p = 1.9875691500e-4f;
    p = p * r + 1.3981999507e-3f;
    p = p * r + 8.3334519073e-3f;
    p = p * r + 4.1665795894e-2f;
    p = p * r + 1.6666665459e-1f;
    p = p * r + 5.0000001201e-1f;
    p = p * r * r + r + 1.0f;
    int32_t bits;
    std::memcpy(&bits, &p, 4);
    bits += static_cast<int32_t>(n) << 23;
    float out;
    std::memcpy(&out, &bits, 4);
    return out;
}

inline double fexp(double x) { return std::exp(x); }

inline float fsigmoid(float x) { return 1.0f / (1.0f + fexp(-x)); }

inline double fsigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

inline float ftanh(float x) {
    const float e = fexp(2.0f * x);
    return (e - 1.0f) / (e + 1.0f);
}

inline double ftanh(double x) { return std::tanh(x); }

}  // namespace shaqlab
