// AVX2+FMA variants of the rod inner loops. One quaternion occupies one
// 4-lane register; B_k products are signed lane permutations. Compiled with
// -mavx2 -mfma and reached only after the runtime CPU check in dispatch.cpp.
#include "cathrod/kernels/rod_kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <stdexcept>

namespace cathrod::kernels::detail {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sw = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sw));
}

inline __m256d signs(double a, double b, double c, double d) { return _mm256_set_pd(d, c, b, a); }

// B1 q = ( q4,  q3, -q2, -q1)
inline __m256d b1(__m256d q) {
    return _mm256_xor_pd(_mm256_permute4x64_pd(q, 0x1B), signs(0.0, 0.0, -0.0, -0.0));
}
// B2 q = (-q3,  q4,  q1, -q2)
inline __m256d b2(__m256d q) {
    return _mm256_xor_pd(_mm256_permute4x64_pd(q, 0x4E), signs(-0.0, 0.0, 0.0, -0.0));
}
// B3 q = ( q2, -q1,  q4, -q3)
inline __m256d b3(__m256d q) {
    return _mm256_xor_pd(_mm256_permute4x64_pd(q, 0xB1), signs(0.0, -0.0, 0.0, -0.0));
}

inline __m256d bk(int k, __m256d q) { return k == 0 ? b1(q) : (k == 1 ? b2(q) : b3(q)); }

double bend_avx2(const double* quats, const double* rest_len, int n_elem,
                 const double* kdiag, const double* uhat, bool tail_start, bool tail_end,
                 double* grad_quats) {
    double energy = 0.0;
    for (int j = 0; j + 1 < n_elem; ++j) {
        const __m256d qa = _mm256_loadu_pd(quats + 4 * j);
        const __m256d qb = _mm256_loadu_pd(quats + 4 * (j + 1));
        const double lbar = 0.5 * (rest_len[j] + rest_len[j + 1]);
        // Boundary junctions absorb the outer half-elements (see scalar kernel).
        double w = lbar;
        if (j == 0 && tail_start) w += 0.5 * rest_len[0];
        if (j + 2 == n_elem && tail_end) w += 0.5 * rest_len[n_elem - 1];
        const __m256d qbar = _mm256_mul_pd(_mm256_set1_pd(0.5), _mm256_add_pd(qa, qb));
        const __m256d qp = _mm256_mul_pd(_mm256_set1_pd(1.0 / lbar), _mm256_sub_pd(qb, qa));
        const double s = hsum(_mm256_mul_pd(qbar, qbar));
        const double inv_s = 1.0 / s;

        __m256d ga = _mm256_setzero_pd();
        __m256d gb = _mm256_setzero_pd();
        for (int k = 0; k < 3; ++k) {
            const __m256d bq = bk(k, qbar);
            const double u = 2.0 * inv_s * hsum(_mm256_mul_pd(bq, qp));
            const double err = u - uhat[k];
            energy += 0.5 * w * kdiag[k] * err * err;
            if (grad_quats) {
                const __m256d bqp = bk(k, qp);
                const double coef = w * kdiag[k] * err;
                // common = -(1/s) Bk(q') - (u/s) qbar; band = (2/(s*lbar)) Bk(qbar)
                __m256d common = _mm256_mul_pd(_mm256_set1_pd(-inv_s), bqp);
                common = _mm256_fnmadd_pd(_mm256_set1_pd(u * inv_s), qbar, common);
                const __m256d band = _mm256_mul_pd(_mm256_set1_pd(2.0 * inv_s / lbar), bq);
                const __m256d cs = _mm256_set1_pd(coef);
                ga = _mm256_fmadd_pd(cs, _mm256_sub_pd(common, band), ga);
                gb = _mm256_fmadd_pd(cs, _mm256_add_pd(common, band), gb);
            }
        }
        if (grad_quats) {
            double* pa = grad_quats + 4 * j;
            double* pb = grad_quats + 4 * (j + 1);
            _mm256_storeu_pd(pa, _mm256_add_pd(_mm256_loadu_pd(pa), ga));
            _mm256_storeu_pd(pb, _mm256_add_pd(_mm256_loadu_pd(pb), gb));
        }
    }
    return energy;
}

double penalty_avx2(const double* pts, const double* quats, const double* rest_len,
                    int n_elem, double kp, double* grad_pts, double* grad_quats) {
    double energy = 0.0;
    for (int e = 0; e < n_elem; ++e) {
        const double* a = pts + 3 * e;
        const double* b = pts + 3 * (e + 1);
        const double dx = b[0] - a[0], dy = b[1] - a[1], dz = b[2] - a[2];
        const double len = std::sqrt(dx * dx + dy * dy + dz * dz);
        if (!(len > 1e-12))
            throw std::runtime_error("degenerate rod geometry: coincident consecutive points");
        const double tx = dx / len, ty = dy / len, tz = dz / len;

        const __m256d q = _mm256_loadu_pd(quats + 4 * e);
        const double s = hsum(_mm256_mul_pd(q, q));
        const double inv = 1.0 / s;
        const double q1 = quats[4 * e], q2 = quats[4 * e + 1], q3 = quats[4 * e + 2], q4 = quats[4 * e + 3];
        const double d3x = 2.0 * (q1 * q3 + q2 * q4) * inv;
        const double d3y = 2.0 * (q2 * q3 - q1 * q4) * inv;
        const double d3z = (-q1 * q1 - q2 * q2 + q3 * q3 + q4 * q4) * inv;

        const double cx = tx - d3x, cy = ty - d3y, cz = tz - d3z;
        const double l0 = rest_len[e];
        energy += 0.5 * kp * l0 * (cx * cx + cy * cy + cz * cz);

        if (grad_pts) {
            const double ct = cx * tx + cy * ty + cz * tz;
            const double w = kp * l0 / len;
            const double gx = w * (cx - ct * tx);
            const double gy = w * (cy - ct * ty);
            const double gz = w * (cz - ct * tz);
            double* ga = grad_pts + 3 * e;
            double* gb = grad_pts + 3 * (e + 1);
            gb[0] += gx; gb[1] += gy; gb[2] += gz;
            ga[0] -= gx; ga[1] -= gy; ga[2] -= gz;
        }
        if (grad_quats) {
            // grad_q = -kp*l0/s * (dv/dq . c - 2 (d3.c) q) with dv/dq columns as
            // lane permutations: 2*[(q3,q4,q1,q2) cx + (-q4,q3,q2,-q1) cy + (-q1,-q2,q3,q4) cz]
            const __m256d colx = _mm256_permute4x64_pd(q, 0x4E);
            const __m256d coly = _mm256_xor_pd(_mm256_permute4x64_pd(q, 0x1B), signs(-0.0, 0.0, 0.0, -0.0));
            const __m256d colz = _mm256_xor_pd(q, signs(-0.0, -0.0, 0.0, 0.0));
            __m256d gvc = _mm256_mul_pd(colx, _mm256_set1_pd(cx));
            gvc = _mm256_fmadd_pd(coly, _mm256_set1_pd(cy), gvc);
            gvc = _mm256_fmadd_pd(colz, _mm256_set1_pd(cz), gvc);
            const double d3c = d3x * cx + d3y * cy + d3z * cz;
            __m256d gq = _mm256_fnmadd_pd(_mm256_set1_pd(d3c), q, gvc);
            gq = _mm256_mul_pd(gq, _mm256_set1_pd(-2.0 * kp * l0 * inv));
            double* out = grad_quats + 4 * e;
            _mm256_storeu_pd(out, _mm256_add_pd(_mm256_loadu_pd(out), gq));
        }
    }
    return energy;
}

}  // namespace

const RodKernels& avx2_impl() {
    static const RodKernels k = {"avx2", scalar_kernels().stretch_energy_grad, &penalty_avx2, &bend_avx2};
    return k;
}

}  // namespace cathrod::kernels::detail

#endif  // x86_64
