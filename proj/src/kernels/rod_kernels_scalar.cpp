#include "cathrod/kernels/rod_kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace cathrod::kernels {
namespace {

double stretch_scalar(const double* pts, const double* rest_len, int n_elem,
                      double ks, double* grad_pts) {
    double energy = 0.0;
    for (int e = 0; e < n_elem; ++e) {
        const double* a = pts + 3 * e;
        const double* b = pts + 3 * (e + 1);
        const double dx = b[0] - a[0], dy = b[1] - a[1], dz = b[2] - a[2];
        const double len = std::sqrt(dx * dx + dy * dy + dz * dz);
        const double l0 = rest_len[e];
        const double strain = len / l0 - 1.0;
        energy += 0.5 * ks * l0 * strain * strain;
        if (grad_pts) {
            // dE/db = ks * strain * unit(b-a)
            const double c = ks * strain / len;
            double* ga = grad_pts + 3 * e;
            double* gb = grad_pts + 3 * (e + 1);
            gb[0] += c * dx; gb[1] += c * dy; gb[2] += c * dz;
            ga[0] -= c * dx; ga[1] -= c * dy; ga[2] -= c * dz;
        }
    }
    return energy;
}

double penalty_scalar(const double* pts, const double* quats, const double* rest_len,
                      int n_elem, double kp, double* grad_pts, double* grad_quats) {
    double energy = 0.0;
    for (int e = 0; e < n_elem; ++e) {
        const double* a = pts + 3 * e;
        const double* b = pts + 3 * (e + 1);
        const double dx = b[0] - a[0], dy = b[1] - a[1], dz = b[2] - a[2];
        const double len2 = dx * dx + dy * dy + dz * dz;
        const double len = std::sqrt(len2);
        if (!(len > 1e-12))
            throw std::runtime_error("degenerate rod geometry: coincident consecutive points");
        const double tx = dx / len, ty = dy / len, tz = dz / len;

        const double* q = quats + 4 * e;
        const double q1 = q[0], q2 = q[1], q3 = q[2], q4 = q[3];
        const double s = q1 * q1 + q2 * q2 + q3 * q3 + q4 * q4;
        const double inv = 1.0 / s;
        const double v0 = 2.0 * (q1 * q3 + q2 * q4);
        const double v1 = 2.0 * (q2 * q3 - q1 * q4);
        const double v2 = -q1 * q1 - q2 * q2 + q3 * q3 + q4 * q4;
        const double d3x = v0 * inv, d3y = v1 * inv, d3z = v2 * inv;

        const double cx = tx - d3x, cy = ty - d3y, cz = tz - d3z;
        const double l0 = rest_len[e];
        energy += 0.5 * kp * l0 * (cx * cx + cy * cy + cz * cz);

        if (grad_pts) {
            // dE/dd = kp*l0/len * (c - (c.t)t); c.d(tangent) through (I - t t^T)/len
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
            // d(d3)/dq_k = (dv/dq_k - 2 q_k d3)/s, contracted with -kp*l0*c
            const double d3c = d3x * cx + d3y * cy + d3z * cz;
            const double w = -kp * l0 * inv;
            double* gq = grad_quats + 4 * e;
            gq[0] += w * ((2.0 * q3) * cx + (-2.0 * q4) * cy + (-2.0 * q1) * cz - 2.0 * q1 * d3c);
            gq[1] += w * ((2.0 * q4) * cx + (2.0 * q3) * cy + (-2.0 * q2) * cz - 2.0 * q2 * d3c);
            gq[2] += w * ((2.0 * q1) * cx + (2.0 * q2) * cy + (2.0 * q3) * cz - 2.0 * q3 * d3c);
            gq[3] += w * ((2.0 * q2) * cx + (-2.0 * q1) * cy + (2.0 * q4) * cz - 2.0 * q4 * d3c);
        }
    }
    return energy;
}

inline void bk_apply(int k, const double* q, double* out) {
    switch (k) {
        case 0: out[0] = q[3]; out[1] = q[2]; out[2] = -q[1]; out[3] = -q[0]; break;
        case 1: out[0] = -q[2]; out[1] = q[3]; out[2] = q[0]; out[3] = -q[1]; break;
        default: out[0] = q[1]; out[1] = -q[0]; out[2] = q[3]; out[3] = -q[2]; break;
    }
}

double bend_scalar(const double* quats, const double* rest_len, int n_elem,
                   const double* kdiag, const double* uhat, bool tail_start, bool tail_end,
                   double* grad_quats) {
    double energy = 0.0;
    for (int j = 0; j + 1 < n_elem; ++j) {
        const double* qa = quats + 4 * j;
        const double* qb = quats + 4 * (j + 1);
        const double lbar = 0.5 * (rest_len[j] + rest_len[j + 1]);
        // Quadrature weight extends over the boundary half-elements so the
        // junction sum integrates the whole rod length.
        double w = lbar;
        if (j == 0 && tail_start) w += 0.5 * rest_len[0];
        if (j + 2 == n_elem && tail_end) w += 0.5 * rest_len[n_elem - 1];
        double qbar[4], qp[4];
        for (int i = 0; i < 4; ++i) {
            qbar[i] = 0.5 * (qa[i] + qb[i]);
            qp[i] = (qb[i] - qa[i]) / lbar;
        }
        const double s = qbar[0] * qbar[0] + qbar[1] * qbar[1] + qbar[2] * qbar[2] + qbar[3] * qbar[3];
        const double two_inv_s = 2.0 / s;

        for (int k = 0; k < 3; ++k) {
            double bq[4], bqp[4];
            bk_apply(k, qbar, bq);
            const double u = two_inv_s * (bq[0] * qp[0] + bq[1] * qp[1] + bq[2] * qp[2] + bq[3] * qp[3]);
            const double err = u - uhat[k];
            energy += 0.5 * w * kdiag[k] * err * err;
            if (grad_quats) {
                bk_apply(k, qp, bqp);
                const double coef = w * kdiag[k] * err;
                const double us = u / s;
                double* ga = grad_quats + 4 * j;
                double* gb = grad_quats + 4 * (j + 1);
                for (int i = 0; i < 4; ++i) {
                    const double common = -two_inv_s * 0.5 * bqp[i] - us * qbar[i];
                    const double band = two_inv_s * bq[i] / lbar;
                    ga[i] += coef * (common - band);
                    gb[i] += coef * (common + band);
                }
            }
        }
    }
    return energy;
}

}  // namespace

const RodKernels& scalar_kernels() {
    static const RodKernels k = {"scalar", &stretch_scalar, &penalty_scalar, &bend_scalar};
    return k;
}

}  // namespace cathrod::kernels
