use clt_core::spectral::{estimate_spectral, limit_variance, pilot_threshold};
use clt_core::trunc::exceed_prob;
use clt_core::{Functional, NormKind, RandomStream, SeqVec, TailModelSpec};

#[test]
fn symmetric_pareto_splits_evenly() {
    let model = TailModelSpec::ScalarPareto {
        alpha: 1.3,
        x_m: 1.0,
    }
    .build()
    .unwrap();
    let root = RandomStream::new(31);
    // P(|H| > t) = t^{-α}; aim for about 10⁴ exceedances out of 10⁶ draws
    let t = 0.01f64.powf(-1.0 / 1.3);
    let sp = estimate_spectral(&model, t, 1_000_000, &root).unwrap();
    assert!((sp.total_mass() - 1.0).abs() < 1e-12);
    let se = (0.25 / sp.n_exceed as f64).sqrt();
    let plus = sp.mass_at(&SeqVec::basis(1, 1).unwrap());
    let minus = sp.mass_at(&SeqVec::basis(1, 1).unwrap().neg());
    assert!(
        (plus - 0.5).abs() < 3.0 * se && (minus - 0.5).abs() < 3.0 * se,
        "{plus} {minus}"
    );
    assert!((plus + minus - 1.0).abs() < 1e-12);
    let v = limit_variance(&Functional::coordinate(1, NormKind::Sup), &sp, 1.3).unwrap();
    assert!((v.variance - 2.0 / 0.7).abs() < 1e-9);
}

#[test]
fn threshold_stability() {
    let model = TailModelSpec::ScalarPareto {
        alpha: 1.0,
        x_m: 1.0,
    }
    .build()
    .unwrap();
    let root = RandomStream::new(32);
    let e1 = SeqVec::basis(1, 1).unwrap();
    let a = estimate_spectral(&model, 100.0, 2_000_000, &root.split(0)).unwrap();
    let b = estimate_spectral(&model, 200.0, 2_000_000, &root.split(1)).unwrap();
    let tv = (a.mass_at(&e1) - b.mass_at(&e1)).abs();
    let se = (0.25 / a.n_exceed as f64 + 0.25 / b.n_exceed as f64).sqrt();
    assert!(tv < 3.0 * se, "{tv} vs {se}");
}

fn axis_ratio(alpha: f64, cap: usize, reps: usize, seed: u64) -> (f64, usize) {
    let model = TailModelSpec::StableSeries {
        alpha,
        coeff_c: 1.0,
        coeff_r: 2.0,
        cap,
        norm: NormKind::Sup,
        tail_constant: None,
    }
    .build()
    .unwrap();
    let root = RandomStream::new(seed);
    let t = pilot_threshold(&model, 0.99, 100_000, &root.split(0));
    let sp = estimate_spectral(&model, t, reps, &root.split(1)).unwrap();
    (sp.axis_mass(1) / sp.axis_mass(2), sp.n_exceed)
}

#[test]
fn axis_mass_follows_coefficients() {
    let alpha = 1.2;
    let target = 2f64.powf(2.0 * alpha);
    // two coordinates first, where the claim is easiest to see
    let (r2, _) = axis_ratio(alpha, 2, 1_000_000, 33);
    assert!((r2 / target - 1.0).abs() < 0.25, "{r2} vs {target}");
    let (r, n_exceed) = axis_ratio(alpha, 50, 1_000_000, 34);
    assert!(n_exceed >= 10_000 - 500);
    assert!((r / target - 1.0).abs() < 0.25, "{r} vs {target}");
}

#[test]
fn scaled_exceedance_is_flat_for_pareto() {
    let model = TailModelSpec::ScalarPareto {
        alpha: 1.5,
        x_m: 1.0,
    }
    .build()
    .unwrap();
    let s = RandomStream::new(35);
    for m in [2.0, 20.0, 200.0] {
        let p = exceed_prob(&model, m, &s, 0).unwrap();
        assert!((m.powf(1.5) * p.estimate - 1.0).abs() < 1e-12);
        assert_eq!(p.ci_halfwidth, 0.0);
    }
}
