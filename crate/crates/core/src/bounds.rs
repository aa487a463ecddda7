//! Closed-form bound arithmetic relating the game values to the optimal
//! stretching factor `v*`.
//!
//! With `h = g + m*sqrt(g) + 1` the enlarged bin size is `g' = h + sqrt(h)`.
//! An upper-game value `u` at granularity `g` implies
//! `v* >= (u - (m*sqrt(g) + 2)/g) * g/g'`, and a lower-game value `l` at
//! granularity `ceil(g')` pins `l <= v* <= (l + (m*sqrt(g) + 2)/ceil(g')) * ceil(g')/g`.
//!
//! Everything here is `f64`, which carries the required 12+ significant
//! digits at these magnitudes. Human output uses 4 decimals; Rust's float
//! formatting rounds exact ties to even.

use num_rational::Ratio;

use crate::lifting::compute_g_prime_int;

/// Which enlarged bin size the implied lower bound divides by.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum GPrime {
    /// The un-ceiled real value.
    #[default]
    Real,
    /// `ceil(g')`, for comparison.
    Ceiled,
}

/// `g(1 + m/sqrt(g) + 1/g) + sqrt(g(1 + m/sqrt(g) + 1/g))`.
pub fn g_prime_real(g: u32, m: u32) -> f64 {
    let (g, m) = (g as f64, m as f64);
    let h = g + m * g.sqrt() + 1.0;
    h + h.sqrt()
}

/// `m*sqrt(g) + 2`.
pub fn slack(g: u32, m: u32) -> f64 {
    m as f64 * (g as f64).sqrt() + 2.0
}

fn ratio_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Lower bound on `v*` implied by an upper-game value `u` at granularity
/// `g`. May be negative, which is valid but vacuous.
pub fn lower_bound_from_upper(u: Ratio<u64>, g: u32, m: u32, mode: GPrime) -> f64 {
    let gp = match mode {
        GPrime::Real => g_prime_real(g, m),
        GPrime::Ceiled => compute_g_prime_int(g, m) as f64,
    };
    (ratio_f64(u) - slack(g, m) / g as f64) * (g as f64 / gp)
}

/// Interval `(lo, hi)` containing `v*`, from the lower-game value `l`
/// solved at granularity `compute_g_prime_int(g, m)`.
pub fn sandwich_interval(l: Ratio<u64>, g: u32, m: u32) -> (f64, f64) {
    let gp = compute_g_prime_int(g, m) as f64;
    let lo = ratio_f64(l);
    let hi = (lo + slack(g, m) / gp) * (gp / g as f64);
    (lo, hi)
}

pub fn render(x: f64) -> String {
    format!("{x:.4}")
}

/// Inputs and outputs of one bound evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub m: u32,
    pub g: u32,
    pub input: Ratio<u64>,
    pub g_prime_real: f64,
    pub g_prime_int: u32,
    pub derived_lo: Option<f64>,
    pub derived_hi: Option<f64>,
}

impl BoundReport {
    pub fn from_upper(u: Ratio<u64>, g: u32, m: u32, mode: GPrime) -> Self {
        Self {
            m,
            g,
            input: u,
            g_prime_real: g_prime_real(g, m),
            g_prime_int: compute_g_prime_int(g, m),
            derived_lo: Some(lower_bound_from_upper(u, g, m, mode)),
            derived_hi: None,
        }
    }

    pub fn from_lower(l: Ratio<u64>, g: u32, m: u32) -> Self {
        let (lo, hi) = sandwich_interval(l, g, m);
        Self {
            m,
            g,
            input: l,
            g_prime_real: g_prime_real(g, m),
            g_prime_int: compute_g_prime_int(g, m),
            derived_lo: Some(lo),
            derived_hi: Some(hi),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: u64, d: u64) -> Ratio<u64> {
        Ratio::new(n, d)
    }

    #[test]
    fn g_prime_real_examples() {
        assert_eq!(g_prime_real(4, 2), 12.0);
        assert!((g_prime_real(1, 1) - (3.0 + 3f64.sqrt())).abs() < 1e-12);
        assert!((g_prime_real(22, 4) - 48.22).abs() < 0.01);
    }

    #[test]
    fn implied_lower_bound_examples() {
        let v = lower_bound_from_upper(r(31, 22), 22, 4, GPrime::Real);
        assert!((v - 0.212).abs() <= 0.001, "{v}");
        assert_eq!(format!("{v:.3}"), "0.212");
        let v = lower_bound_from_upper(r(4, 3), 3, 2, GPrime::Real);
        assert!((v - (-0.144)).abs() < 0.001, "{v}");
    }

    #[test]
    fn zero_numerator_gives_zero() {
        // u = (m*sqrt(g) + 2)/g is rational when g is a perfect square
        for (g, m) in [(4, 2), (9, 3), (16, 1)] {
            let s = (m as f64 * (g as f64).sqrt() + 2.0) as u64;
            let v = lower_bound_from_upper(r(s, g as u64), g, m, GPrime::Real);
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn interval_examples() {
        let (lo, hi) = sandwich_interval(r(0, 1), 4, 2);
        assert_eq!((lo, hi), (0.0, 6.0 / 4.0));
        let (lo, hi) = sandwich_interval(r(1, 1), 4, 2);
        assert_eq!((lo, hi), (1.0, 4.5));
        let (lo, hi) = sandwich_interval(r(4, 3), 4, 2);
        assert_eq!(lo, 4.0 / 3.0);
        assert!((hi - 5.5).abs() < 1e-12);
    }

    #[test]
    fn interval_width_shrinks_with_granularity() {
        let widths: Vec<f64> = [4, 16, 64, 256]
            .iter()
            .map(|&g| {
                let (lo, hi) = sandwich_interval(r(4, 3), g, 2);
                assert!(lo <= hi);
                hi - lo
            })
            .collect();
        assert!(widths.windows(2).all(|w| w[1] < w[0]), "{widths:?}");
    }

    #[test]
    fn implied_bound_never_exceeds_input() {
        for g in 1..40 {
            for m in 1..6 {
                for (n, d) in [(0, 1), (1, 1), (4, 3), (31, 22), (2, 1)] {
                    assert!(lower_bound_from_upper(r(n, d), g, m, GPrime::Real) <= n as f64 / d as f64);
                    assert!(lower_bound_from_upper(r(n, d), g, m, GPrime::Ceiled) <= n as f64 / d as f64);
                }
            }
        }
    }

    #[test]
    fn report_renders_four_places() {
        let rep = BoundReport::from_upper(r(31, 22), 22, 4, GPrime::Real);
        assert_eq!(render(rep.derived_lo.unwrap()), "0.2123");
        assert_eq!(rep.g_prime_int, 49);
    }
}
