//! Adaptive Simpson quadrature.

/// Integrates `f` over `[a, b]` to relative tolerance `rel_tol`.
///
/// The tolerance is applied against a coarse estimate of the integral's
/// magnitude, so integrands that cancel to zero terminate instead of
/// chasing an unreachable relative error. Tolerances below 1e-14 are
/// raised to 1e-14.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    // Seed on a uniform panel grid so narrow features are not missed by the
    // first Simpson estimate.
    const PANELS: usize = 16;
    let h = (b - a) / PANELS as f64;
    let mut scale = 0.0;
    let mut panels = Vec::with_capacity(PANELS);
    for k in 0..PANELS {
        let x0 = a + h * k as f64;
        let x1 = if k + 1 == PANELS { b } else { x0 + h };
        let xm = 0.5 * (x0 + x1);
        let (f0, fm, f1) = (f(x0), f(xm), f(x1));
        let s = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
        scale += ((x1 - x0) / 6.0 * (f0.abs() + 4.0 * fm.abs() + f1.abs())).abs();
        panels.push((x0, x1, f0, fm, f1, s));
    }
    let abs_tol = (rel_tol.max(1e-14) * scale).max(f64::MIN_POSITIVE);
    let per_panel = abs_tol / PANELS as f64;
    panels
        .into_iter()
        .map(|(x0, x1, f0, fm, f1, s)| refine(&f, x0, x1, f0, fm, f1, s, per_panel, 40))
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
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
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
