//! Exact closed-loop-compatible data used by tests and benchmarks.

use crate::kernels::KernelSet;
use num_complex::Complex64 as C64;

/// A profile phi(tau) = sum a sin(omega tau) together with the actuator state
/// it would see if its boundary value had been fed back unchanged, i.e.
/// theta(s) = sum a sin(omega) e^{Dhat (lambda' - n^2 - omega^2) s}.
/// Such pairs keep every transform smooth up to s = 0.
pub fn compatible_pair(ks: &KernelSet, n: i32, terms: &[(f64, f64)]) -> (Vec<C64>, Vec<C64>) {
    let g = ks.grid();
    let mu0 = ks.series.lambda_prime() - (n * n) as f64;
    let mut phi = vec![C64::new(0.0, 0.0); g.m];
    let mut theta = phi.clone();
    for &(a, om) in terms {
        for k in 0..g.m {
            let s = g.s(k);
            phi[k] += a * (om * s).sin();
            theta[k] += a * om.sin() * (ks.dhat * (mu0 - om * om) * s).exp();
        }
    }
    (phi, theta)
}
