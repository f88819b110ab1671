//! Reference integrators used as oracles by the test suites.
//!
//! These are deliberately independent of the production quadrature paths:
//! adaptive Simpson subdivision instead of fixed Gauss panels, so agreement
//! between the two is meaningful evidence rather than a tautology.

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_quad<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, m, fa, flm, fm);
        let right = simpson(m, b, fm, frm, fb);
        if depth == 0 {
            return left + right;
        }
        if (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }

    // Seed with uniform panels so narrow features cannot slip between the
    // first few sample points.
    const PANELS: usize = 16;
    let mut total = 0.0;
    for i in 0..PANELS {
        let a = lo + (hi - lo) * i as f64 / PANELS as f64;
        let b = lo + (hi - lo) * (i + 1) as f64 / PANELS as f64;
        let fa = f(a);
        let fb = f(b);
        let fm = f(0.5 * (a + b));
        let whole = simpson(a, b, fa, fm, fb);
        total += recurse(&f, a, b, fa, fm, fb, whole, tol / PANELS as f64, 44);
    }
    total
}

/// Adaptive quadrature of a complex-valued integrand, component by component.
pub fn adaptive_quad_complex<F: Fn(f64) -> crate::C>(f: F, lo: f64, hi: f64, tol: f64) -> crate::C {
    let re = adaptive_quad(|t| f(t).re, lo, hi, tol);
    let im = adaptive_quad(|t| f(t).im, lo, hi, tol);
    crate::C::new(re, im)
}
