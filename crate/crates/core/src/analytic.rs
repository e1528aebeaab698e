//! Closed-form stationary distributions and payoffs for the pairings that
//! explain why `{C, L}` wins at high introspection strength, plus the
//! critical strengths at which it overtakes `{D}` and `{D, L}`.
//!
//! Exponentials are evaluated in rescaled form (numerator and denominator
//! divided by the largest term) so that large `w` saturates cleanly.

use serde::{Deserialize, Serialize};

use crate::error::{HypergameError, Result};
use crate::game::GameParams;
use crate::introspection::{ExpectedPayoffPair, IntrospectionConfig, StationaryDistribution};

/// Bracket searched for every threshold, in units of `w`.
pub const W_BRACKET: (f64, f64) = (1e-6, 1e3);
const BISECTION_ITERS: usize = 200;
/// Agreement required between the two routes to the `{D}` threshold.
pub const THRESHOLD_AGREEMENT: f64 = 1e-6;
const DL_TOL: f64 = 1e-8;

/// Stationary distribution of `{C,L}` against itself over states
/// `(C,C), (C,L), (L,C), (L,L)`.
///
/// With `E = exp(w (b - c - delta))`:
/// `v_CC = (3E^2 + E) / (3E^2 + 10E + 3)` and the other three states share
/// `(3E + 1) / (3E^2 + 10E + 3)`.
pub fn cl_self_stationary(p: &GameParams, cfg: &IntrospectionConfig) -> StationaryDistribution {
    let x = cfg.w() * p.cooperation_surplus();
    let (v_cc, v_other) = if x > 0.0 {
        // divide through by E^2, u = 1/E
        let u = (-x).exp();
        let den = 3.0 + 10.0 * u + 3.0 * u * u;
        ((3.0 + u) / den, (3.0 * u + u * u) / den)
    } else {
        let e = x.exp();
        let den = 3.0 * e * e + 10.0 * e + 3.0;
        ((3.0 * e * e + e) / den, (3.0 * e + 1.0) / den)
    };
    StationaryDistribution::from_probabilities(vec![v_cc, v_other, v_other, v_other])
}

/// `pi_{CL:CL} = v_CC (b - c - delta) + delta`.
pub fn cl_self_payoff(p: &GameParams, cfg: &IntrospectionConfig) -> f64 {
    let v_cc = cl_self_stationary(p, cfg).probabilities()[0];
    v_cc * p.cooperation_surplus() + p.delta()
}

/// Stationary `(v_CD, v_LD)` of `{C,L}` facing an unconditional defector.
///
/// `v_CD = (e^{-y} + 1) / (e^{-y} + e^{y} + 2)` with `y = w (c + delta)`.
pub fn d_vs_cl_stationary(p: &GameParams, cfg: &IntrospectionConfig) -> (f64, f64) {
    let y = cfg.w() * (p.c() + p.delta());
    let v_cd = if y >= 0.0 {
        let u = (-y).exp();
        (u * u + u) / (u * u + 1.0 + 2.0 * u)
    } else {
        let e = y.exp();
        (1.0 / e + 1.0) / (1.0 / e + e + 2.0)
    };
    (v_cd, 1.0 - v_cd)
}

/// Payoff of `{D}` against `{C,L}`: `v_CD b + v_LD delta`.
pub fn d_vs_cl_payoff(p: &GameParams, cfg: &IntrospectionConfig) -> f64 {
    let (v_cd, v_ld) = d_vs_cl_stationary(p, cfg);
    v_cd * p.b() + v_ld * p.delta()
}

/// Stationary distribution of `{C,L}` (player 1) against `{D,L}` over states
/// `(C,D), (C,L), (L,D), (L,L)`.
///
/// With `e1 = exp(-w(c + delta))`, `e2 = exp(w(b - delta))` and
/// `e3 = exp(w(b - c - 2 delta)) = e1 e2`, the common denominator is
/// `10 e1 + 10 e2 + 6 e3 + 6` and the numerators are
/// `e1 + e2 + 6 e3`, `5 e1 + e2 + 2`, `e1 + 5 e2 + 2`, `3 e1 + 3 e2 + 2`.
pub fn dl_vs_cl_stationary(p: &GameParams, cfg: &IntrospectionConfig) -> StationaryDistribution {
    let w = cfg.w();
    let a1 = -w * (p.c() + p.delta());
    let a2 = w * (p.b() - p.delta());
    let a3 = a1 + a2;
    let scale = a1.max(a2).max(a3).max(0.0);
    let e1 = (a1 - scale).exp();
    let e2 = (a2 - scale).exp();
    let e3 = (a3 - scale).exp();
    let one = (-scale).exp();

    let den = 10.0 * e1 + 10.0 * e2 + 6.0 * e3 + 6.0 * one;
    let v = [
        e1 + e2 + 6.0 * e3,
        5.0 * e1 + e2 + 2.0 * one,
        e1 + 5.0 * e2 + 2.0 * one,
        3.0 * e1 + 3.0 * e2 + 2.0 * one,
    ];
    StationaryDistribution::from_probabilities(v.iter().map(|x| x / den).collect())
}

/// Payoffs of `{D,L}` against `{C,L}`.
///
/// `pi_12` is the `{D,L}` side (`v_CD b + (1 - v_CD) delta`), `pi_21` the
/// `{C,L}` side (`-v_CD c + (1 - v_CD) delta`).
pub fn dl_vs_cl_payoffs(p: &GameParams, cfg: &IntrospectionConfig) -> ExpectedPayoffPair {
    let v = dl_vs_cl_stationary(p, cfg);
    let v_cd = v.probabilities()[0];
    let loner_mass: f64 = v.probabilities()[1..].iter().sum();
    ExpectedPayoffPair {
        pi_12: v_cd * p.b() + loner_mass * p.delta(),
        pi_21: -v_cd * p.c() + loner_mass * p.delta(),
    }
}

/// Critical introspection strength above which `{C,L}` earns at least as
/// much against itself as `{D}` earns against it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectorThreshold {
    /// `x* / (b - c - delta)` from the scaled transcendental equation.
    pub transcendental: f64,
    /// Sign change of `pi_{CL:CL}(w) - pi_{D,CL}(w)` found by bisection in `w`.
    pub bisection: f64,
    /// Root of the variant that credits the defector with `b` instead of
    /// `b - delta` (i.e. `beta = 1 + alpha`). Kept for comparison only.
    pub uncorrected: f64,
}

/// Threshold of `{C,L}` against `{D}`.
///
/// With `x = w (b - c - delta)`, `alpha = (c + delta) / (b - c - delta)` and
/// `beta = (b - delta) / (b - c - delta)`, equality of the two payoffs reduces
/// to `e^{(1 + alpha) x} - (beta - 1) e^x - 3 beta = 0`. The root is found by
/// bisection and cross-checked against direct bisection on the payoff
/// difference; the two must agree to [`THRESHOLD_AGREEMENT`].
pub fn critical_w_vs_d(p: &GameParams) -> Result<DefectorThreshold> {
    let surplus = require_surplus(p)?;
    let alpha = (p.c() + p.delta()) / surplus;
    let beta = (p.b() - p.delta()) / surplus;

    let (lo, hi) = W_BRACKET;
    let x_lo = lo * surplus;
    let x_hi = hi * surplus;

    // f(x) / e^x keeps the evaluation finite over the whole bracket.
    let scaled =
        |beta: f64| move |x: f64| (alpha * x).exp() - (beta - 1.0) - 3.0 * beta * (-x).exp();

    let x_star = bisect(scaled(beta), x_lo, x_hi, BISECTION_ITERS, 0.0).ok_or(
        HypergameError::NoBracket {
            what: "the transcendental threshold equation",
            lo: x_lo,
            hi: x_hi,
        },
    )?;
    let x_uncorrected = bisect(scaled(1.0 + alpha), x_lo, x_hi, BISECTION_ITERS, 0.0).ok_or(
        HypergameError::NoBracket {
            what: "the uncorrected threshold equation",
            lo: x_lo,
            hi: x_hi,
        },
    )?;

    let gap = |w: f64| {
        let cfg = IntrospectionConfig::new(w).expect("bracket is nonnegative");
        cl_self_payoff(p, &cfg) - d_vs_cl_payoff(p, &cfg)
    };
    let bisection = bisect(gap, lo, hi, BISECTION_ITERS, 0.0).ok_or(HypergameError::NoBracket {
        what: "pi_CL:CL - pi_D:CL",
        lo,
        hi,
    })?;

    let transcendental = x_star / surplus;
    if (transcendental - bisection).abs() >= THRESHOLD_AGREEMENT {
        return Err(HypergameError::ThresholdMismatch {
            transcendental,
            bisection,
        });
    }
    Ok(DefectorThreshold {
        transcendental,
        bisection,
        uncorrected: x_uncorrected / surplus,
    })
}

/// Threshold of `{C,L}` against `{D,L}`: root of
/// `pi_{CL:CL}(w) - pi_{DL:CL}(w)` by bisection over [`W_BRACKET`].
pub fn critical_w_vs_dl(p: &GameParams) -> Result<f64> {
    require_surplus(p)?;
    let gap = |w: f64| {
        let cfg = IntrospectionConfig::new(w).expect("bracket is nonnegative");
        cl_self_payoff(p, &cfg) - dl_vs_cl_payoffs(p, &cfg).pi_12
    };
    let (lo, hi) = W_BRACKET;
    bisect(gap, lo, hi, BISECTION_ITERS, DL_TOL).ok_or(HypergameError::NoBracket {
        what: "pi_CL:CL - pi_DL:CL",
        lo,
        hi,
    })
}

fn require_surplus(p: &GameParams) -> Result<f64> {
    let surplus = p.cooperation_surplus();
    if surplus > 0.0 {
        Ok(surplus)
    } else {
        Err(HypergameError::InvalidParams(format!(
            "b - c - delta = {surplus} must be positive for a threshold to exist"
        )))
    }
}

/// Bracketed bisection. Returns `None` when `f` has the same sign at both
/// ends. Stops after `iters` halvings or once the bracket is narrower than
/// `tol`.
pub(crate) fn bisect<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    iters: usize,
    tol: f64,
) -> Option<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo.is_nan() || f_hi.is_nan() || f_lo.signum() == f_hi.signum() {
        return None;
    }
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= tol {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Some(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::introspection::{
        build_transition_matrix, expected_payoffs, stationary_distribution,
    };

    fn params(b: f64) -> GameParams {
        GameParams::new(b, 1.0, 0.25).unwrap()
    }

    fn cfg(w: f64) -> IntrospectionConfig {
        IntrospectionConfig::new(w).unwrap()
    }

    fn set(s: &str) -> crate::game::StrategySet {
        s.parse().unwrap()
    }

    #[test]
    fn cl_self_stationary_values() {
        let v = cl_self_stationary(&params(3.0), &cfg(0.0));
        assert_eq!(v.probabilities(), &[0.25; 4]);

        let v = cl_self_stationary(&params(3.0), &cfg(1.0));
        let generic = stationary_distribution(&build_transition_matrix(
            set("CL"),
            set("CL"),
            &params(3.0),
            &cfg(1.0),
        ))
        .unwrap();
        for (a, b) in v.probabilities().iter().zip(generic.probabilities()) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!((v.probabilities()[0] - 0.6572).abs() < 2e-4);

        let v = cl_self_stationary(&params(3.0), &cfg(50.0));
        assert!(v.probabilities()[0] > 1.0 - 1e-10);
    }

    #[test]
    fn cl_self_payoff_values() {
        assert!((cl_self_payoff(&params(2.0), &cfg(10.0)) - 0.9988).abs() < 1e-3);
        assert!((cl_self_payoff(&params(3.0), &cfg(0.0)) - 0.6875).abs() < 1e-15);
        assert!((cl_self_payoff(&params(3.0), &cfg(50.0)) - 2.0).abs() < 1e-3);
    }

    #[test]
    fn d_vs_cl_values() {
        let p = params(1.7);
        assert!((d_vs_cl_payoff(&p, &cfg(0.0)) - (1.7 + 0.25) / 2.0).abs() < 1e-15);
        assert!((d_vs_cl_payoff(&p, &cfg(10.0)) - 0.25).abs() < 1e-4);
        let generic = expected_payoffs(set("D"), set("CL"), &p, &cfg(1.0)).unwrap();
        assert!((d_vs_cl_payoff(&p, &cfg(1.0)) - generic.pi_12).abs() < 1e-10);
    }

    #[test]
    fn dl_vs_cl_values() {
        let p = params(1.9);
        let uniform = dl_vs_cl_payoffs(&p, &cfg(0.0));
        assert!((uniform.pi_12 - (1.9 + 3.0 * 0.25) / 4.0).abs() < 1e-15);

        for (b, w) in [(1.9, 2.0), (1.5, 20.0)] {
            let p = params(b);
            let closed = dl_vs_cl_payoffs(&p, &cfg(w));
            let generic = expected_payoffs(set("CL"), set("DL"), &p, &cfg(w)).unwrap();
            assert!((closed.pi_12 - generic.pi_21).abs() < 1e-10);
            assert!((closed.pi_21 - generic.pi_12).abs() < 1e-10);
        }
        // strong introspection pushes {D,L} towards the loner payoff
        let strong = dl_vs_cl_payoffs(&params(1.5), &cfg(20.0));
        assert!(
            (strong.pi_12 - 0.25).abs()
                < (dl_vs_cl_payoffs(&params(1.5), &cfg(1.0)).pi_12 - 0.25).abs()
        );
    }

    #[test]
    fn defector_threshold_two_routes_agree() {
        for b in [1.5, 1.7, 1.9, 3.0] {
            let t = critical_w_vs_d(&params(b)).unwrap();
            assert!(
                (t.transcendental - t.bisection).abs() < THRESHOLD_AGREEMENT,
                "b = {b}"
            );
        }
        let t = critical_w_vs_d(&params(1.7)).unwrap();
        assert!((t.bisection - 1.56).abs() < 0.01);
        let t = critical_w_vs_d(&params(1.9)).unwrap();
        assert!((t.bisection - 1.27).abs() < 0.01);
    }

    #[test]
    fn payoffs_cross_at_defector_threshold() {
        let p = params(1.9);
        let w = critical_w_vs_d(&p).unwrap().bisection;
        let below = cfg(w * 0.99);
        let above = cfg(w * 1.01);
        assert!(cl_self_payoff(&p, &below) < d_vs_cl_payoff(&p, &below));
        assert!(cl_self_payoff(&p, &above) > d_vs_cl_payoff(&p, &above));
    }

    #[test]
    fn dl_threshold_values() {
        for (b, expected) in [(1.5, 4.53), (1.7, 1.97), (1.9, 1.37)] {
            let w = critical_w_vs_dl(&params(b)).unwrap();
            assert!((w - expected).abs() < 0.01, "b = {b}: {w}");
        }
    }

    #[test]
    fn threshold_requires_surplus() {
        let p = GameParams::exploratory(1.2, 1.0, 0.25).unwrap();
        assert!(critical_w_vs_d(&p).is_err());
        assert!(critical_w_vs_dl(&p).is_err());
    }

    #[test]
    fn bisect_reports_missing_bracket() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 100, 0.0).is_none());
        let root = bisect(|x| x - 0.3, 0.0, 1.0, 200, 0.0).unwrap();
        assert!((root - 0.3).abs() < 1e-15);
    }
}
