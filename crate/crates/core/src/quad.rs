//! Composite Simpson quadrature for piecewise-smooth integrands.

/// Integrates `f` over `[a, b]` with composite Simpson, using an even number
/// of panels no wider than `max_h`. The integrand is called as `f(t, left)`,
/// where `left` asks for the left limit at `t`; only the right endpoint is
/// evaluated that way, so jumps at the interval ends are handled exactly.
pub fn simpson<F>(mut f: F, a: f64, b: f64, max_h: f64) -> f64
where
    F: FnMut(f64, bool) -> f64,
{
    if b <= a {
        return 0.0;
    }
    let mut m = ((b - a) / max_h).ceil() as usize;
    m = m.max(2);
    if m % 2 == 1 {
        m += 1;
    }
    let h = (b - a) / m as f64;
    let mut sum = f(a, false) + f(b, true);
    for k in 1..m {
        let t = a + k as f64 * h;
        sum += if k % 2 == 1 { 4.0 } else { 2.0 } * f(t, false);
    }
    sum * h / 3.0
}

/// Simpson over `[a, b]` split at the given interior breakpoints.
pub fn simpson_piecewise<F>(mut f: F, a: f64, b: f64, breaks: &[f64], max_h: f64) -> f64
where
    F: FnMut(f64, bool) -> f64,
{
    let mut total = 0.0;
    let mut lo = a;
    for &bp in breaks.iter().filter(|&&bp| bp > a && bp < b) {
        total += simpson(&mut f, lo, bp, max_h);
        lo = bp;
    }
    total + simpson(&mut f, lo, b, max_h)
}

/// Single Simpson panel over one integrator step.
pub fn simpson_step(fa: f64, fmid: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fmid + fb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_cubic_exactly() {
        let v = simpson(|t, _| t * t * t - 2.0 * t, 0.0, 2.0, 1.0);
        assert!((v - 0.0).abs() < 1e-14);
    }

    #[test]
    fn handles_jumps_at_breakpoints() {
        let step = |t: f64, left: bool| {
            if t > 1.0 || (t == 1.0 && !left) {
                1.0
            } else {
                0.0
            }
        };
        let v = simpson_piecewise(step, 0.0, 3.0, &[1.0], 0.1);
        assert!((v - 2.0).abs() < 1e-14);
    }
}
