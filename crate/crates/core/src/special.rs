use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// phi1(y) = sum_m y^m / (2^{2m+1} m! (m+1)!), i.e. I_1(sqrt y)/sqrt y
/// continued to complex y. Returns the value and its first two derivatives.
pub fn phi1_derivs(y: C64) -> [C64; 3] {
    let mut a = [C64::new(0.0, 0.0); 3];
    // term_m = y^m / (2^{2m+1} m! (m+1)!)
    let mut coef = 0.5; // 1 / (2^{2m+1} m! (m+1)!) at m = 0
    let mut ypow = C64::new(1.0, 0.0); // y^m
    let mut ypow1 = C64::new(0.0, 0.0); // y^{m-1}
    let mut ypow2 = C64::new(0.0, 0.0); // y^{m-2}
    for m in 0..400usize {
        let mf = m as f64;
        let t0 = ypow * coef;
        a[0] += t0;
        if m >= 1 {
            a[1] += ypow1 * (coef * mf);
        }
        if m >= 2 {
            a[2] += ypow2 * (coef * mf * (mf - 1.0));
        }
        if m > 4 && t0.norm() <= 1e-17 * a[0].norm() && (ypow1 * (coef * mf)).norm() <= 1e-17 * a[1].norm().max(1e-300) {
            break;
        }
        ypow2 = ypow1;
        ypow1 = ypow;
        ypow *= y;
        coef /= 4.0 * (mf + 1.0) * (mf + 2.0);
    }
    a
}

pub fn phi1(y: C64) -> C64 {
    phi1_derivs(y)[0]
}

/// sum_{i >= 1} exp(-i^2 y) and its derivative for y > 0, switching to the
/// Poisson-summed form of the Jacobi theta function for small y.
pub fn theta_tail(y: f64) -> (f64, f64) {
    debug_assert!(y > 0.0);
    if y >= 1.0 {
        let mut v = 0.0;
        let mut d = 0.0;
        let mut i = 1.0f64;
        loop {
            let e = (-i * i * y).exp();
            v += e;
            d -= i * i * e;
            if i * i * y > 745.0 || e < 1e-18 * v {
                break;
            }
            i += 1.0;
        }
        (v, d)
    } else {
        // theta3(y) = sqrt(pi/y) (1 + 2 sum_m exp(-pi^2 m^2 / y))
        let r = (PI / y).sqrt();
        let mut s = 1.0;
        let mut ds = 0.0;
        let mut m = 1.0f64;
        loop {
            let q = PI * PI * m * m / y;
            if q > 745.0 {
                break;
            }
            let e = (-q).exp();
            s += 2.0 * e;
            ds += 2.0 * e * q / y;
            if e < 1e-18 {
                break;
            }
            m += 1.0;
        }
        let theta = r * s;
        let dtheta = -0.5 * r / y * s + r * ds;
        (0.5 * (theta - 1.0), 0.5 * dtheta)
    }
}

/// sum_{i >= 1} exp(-i^2 y) / i^2 for y >= 0. Its derivative is -theta_tail(y).
pub fn theta_tail_inv2(y: f64) -> f64 {
    debug_assert!(y >= 0.0);
    if y >= 0.1 {
        let mut v = 0.0;
        let mut i = 1.0f64;
        loop {
            let e = (-i * i * y).exp();
            v += e / (i * i);
            if e < 1e-18 {
                break;
            }
            i += 1.0;
        }
        v
    } else {
        // integrate the small-y form of theta_tail; the dropped terms are below e^{-98}
        PI * PI / 6.0 - (PI * y).sqrt() + 0.5 * y
    }
}
