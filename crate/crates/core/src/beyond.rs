//! Exact law of `sup_{j>J} c·a_j·|R_j|` for `a_j = K (ln j)^{-e}` and `R_j` i.i.d.
//! sums of `N` random signs.
//!
//! The coefficients decay so slowly that the supremum is typically attained at
//! astronomically large indices, so it is sampled as a record process over the
//! lattice of values of `|R|`: walking down from `|R| = N`, the first index
//! reaching each level is geometric given that no earlier index reached the
//! level above. Indices are carried as `ln j`.

use crate::rng::RandomStream;

/// `ln(e^a + e^b)`.
fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(1 - e^x)` for `x ≤ 0`.
fn log_one_minus_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// `ln G` for `G ~ Geometric(p)` on `{1, 2, ...}`, with `p = e^{log_p}` possibly underflowing.
fn log_geometric(log_p: f64, s: &mut RandomStream) -> f64 {
    if log_p >= 0.0 {
        return 0.0;
    }
    // G = ⌈E / λ⌉ with E standard exponential and λ = -ln(1 - p)
    let log_lambda = if log_p < -30.0 {
        log_p
    } else {
        (-(-log_p.exp()).ln_1p()).ln()
    };
    let log_ratio = s.exponential().ln() - log_lambda;
    if log_ratio > 34.0 {
        log_ratio
    } else {
        log_ratio.exp().ceil().max(1.0).ln()
    }
}

/// One draw of `sup_{j>cap} c·a_j·|R_j|` where `R_j` sums `n_signs` signs.
pub fn sample_beyond_cap_sup(
    k_const: f64,
    e: f64,
    cap: usize,
    n_signs: usize,
    c: f64,
    s: &mut RandomStream,
) -> f64 {
    if n_signs == 0 || c == 0.0 {
        return 0.0;
    }
    let coef = |ln_j: f64| k_const * ln_j.powf(-e);
    let ln_cap = (cap as f64).ln();
    let first = coef(((cap + 1).max(2) as f64).ln());
    let nf = n_signs as f64;
    let log_half_n = -nf * std::f64::consts::LN_2;

    let mut best = 0.0f64;
    let mut ln_j = f64::INFINITY;
    // ln P(|R| ≥ level above the current one)
    let mut log_ge_above = f64::NEG_INFINITY;
    let mut log_binom = 0.0f64;
    for t in 0..=n_signs / 2 {
        let r = (n_signs - 2 * t) as f64;
        if c * r * first <= best {
            break;
        }
        let log_eq = log_binom + log_half_n + if r > 0.0 { std::f64::consts::LN_2 } else { 0.0 };
        let log_p = log_eq - log_one_minus_exp(log_ge_above);
        let ln_g = log_geometric(log_p.min(0.0), s);
        // keep small indices exact integers
        let cand = if ln_g < 34.0 {
            (cap as f64 + ln_g.exp().round()).ln()
        } else {
            log_add(ln_cap, ln_g)
        };
        ln_j = ln_j.min(cand);
        best = best.max(c * r * coef(ln_j));
        log_ge_above = log_add(log_ge_above, log_eq).min(0.0);
        log_binom += ((nf - t as f64) / (t as f64 + 1.0)).ln();
    }
    best
}
