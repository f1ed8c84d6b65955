#ifndef CATHROD_ROD_KERNELS_HPP
#define CATHROD_ROD_KERNELS_HPP

namespace cathrod::kernels {

// Hot inner loops of rod energy/force assembly, operating on flat arrays so
// they can be swapped between the scalar reference and SIMD variants.
// Layouts: pts = xyz per point (3*(n_elem+1) doubles), quats = q1..q4 per
// element (4*n_elem doubles), rest_len = one length per element.
// Gradient buffers are accumulated into (callers zero them); pass nullptr
// for an energy-only evaluation. All functions return the energy term.
struct RodKernels {
    const char* name;

    double (*stretch_energy_grad)(const double* pts, const double* rest_len, int n_elem,
                                  double ks, double* grad_pts);

    double (*penalty_energy_grad)(const double* pts, const double* quats, const double* rest_len,
                                  int n_elem, double kp, double* grad_pts, double* grad_quats);

    // Bending/twist over interior junctions between elements j and j+1;
    // kdiag = (K11,K22,K33), uhat = intrinsic strain rates. tail_start /
    // tail_end extend the boundary junction weights over the outer
    // half-elements (dropped at a clamped end, where a wall junction owns
    // that half-element).
    double (*bend_energy_grad)(const double* quats, const double* rest_len, int n_elem,
                               const double* kdiag, const double* uhat, bool tail_start,
                               bool tail_end, double* grad_quats);
};

const RodKernels& scalar_kernels();

bool avx2_available();
// Valid only when avx2_available(); bend/penalty use AVX2+FMA, stretch shares
// the scalar path (three-wide arithmetic gains nothing from 4-lane registers).
const RodKernels& avx2_kernels();

// Runtime-dispatched kernel set: AVX2 when the CPU supports it, unless the
// CATHROD_KERNELS environment variable ("scalar" | "avx2") overrides.
const RodKernels& active_kernels();

}  // namespace cathrod::kernels

#endif
