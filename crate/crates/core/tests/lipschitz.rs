mod common;

use std::f64::consts::LN_2;

use cellfree_apg::objective::{conservative_lipschitz_bound, grad_objective, PenaltyParams};
use cellfree_apg::solver::adaptive_xi0;
use cellfree_apg::ThetaVector;
use common::{problem, random_feasible};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn sampled_ratios_never_exceed_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for (i, &(m, k, n, tau_p)) in [(8, 4, 1, 2), (16, 8, 2, 4), (6, 3, 1, 1)].iter().enumerate() {
        let pd = problem(m, k, n, tau_p, 1.0, 40 + i as u64);
        let xi0 = adaptive_xi0(&ThetaVector::uniform_full_power(m, k, n), &pd);
        for xi in [0.0, 1e3, xi0] {
            let pp = PenaltyParams::new(xi);
            let l = conservative_lipschitz_bound(&pd, &pp).total();
            assert!(l.is_finite() && l > 0.0);
            let mut worst = 0.0f64;
            for _ in 0..1000 {
                let x = random_feasible(m, k, n, &mut rng, 0.0, 1.0);
                // mix far-apart and nearby pairs
                let y = if rng.gen::<bool>() {
                    random_feasible(m, k, n, &mut rng, 0.0, 1.0)
                } else {
                    let v: Vec<f64> =
                        x.values().iter().map(|t| (t * (1.0 + 1e-3 * rng.gen::<f64>())).min(t + 1e-4)).collect();
                    cellfree_apg::projection::project(&v, &cellfree_apg::FeasibleSetSpec::new(m, k, n))
                };
                let d = dist(x.values(), y.values());
                if d == 0.0 {
                    continue;
                }
                let gx = grad_objective(&x, &pd, &pp);
                let gy = grad_objective(&y, &pd, &pp);
                worst = worst.max(dist(&gx, &gy) / d);
            }
            assert!(worst <= l, "ratio {worst:e} exceeds bound {l:e}");
        }
    }
}

#[test]
fn scalar_instance_matches_hand_chain() {
    let pd = problem(1, 1, 2, 1, 1.0, 5);
    let xi = 1e4;
    let got = conservative_lipschitz_bound(&pd, &PenaltyParams::new(xi));

    let n: f64 = 2.0;
    let rho = pd.rho_d;
    let gamma = pd.pairs[0].coeffs[0].powi(2);
    let beta = pd.beta.get(0, 0);
    let r = (1.0 / n).sqrt();
    let pre = pd.prelog();
    let a = pd.qos_threshold[0];

    let lam_n = 2.0 * rho * n * n * gamma;
    let lam_d = 2.0 * rho * n * beta;
    let n_max = rho * n * gamma;
    let d_max = rho * beta + 1.0;
    let lip_t1 = lam_n + lam_n * r * (lam_n + lam_d) * r;
    let lip_p = n_max * lam_d + lam_d * r * lam_n * r;
    let lip_q = d_max * (lam_n + lam_d) * r + (n_max + d_max) * lam_d * r;
    let lip_t2 = lip_p + n_max * lam_d * r * lip_q;
    let lip_grad_u = pre / LN_2 * (lip_t1 + lip_t2);
    let bound_grad_u = pre / LN_2 * (lam_n * r + n_max.min(1.0) * lam_d * r);
    let bound_u = pre * (1.0 + n_max).log2();

    let lam_v = 2.0 * pd.transmit_scale() / pd.amplifier_efficiency[0];
    let pf = pd.p_fix;
    let b = pd.bandwidth_hz;
    let l1 = b * lip_grad_u / pf;
    let l2 = b
        * (2.0 * bound_grad_u * lam_v * r / pf.powi(2)
            + bound_u * lam_v / pf.powi(2)
            + 2.0 * bound_u * (lam_v * r).powi(2) / pf.powi(3));
    let zeta_g = a * d_max.sqrt();
    let zeta_grad_g = a * lam_d * r / 2.0 + gamma.sqrt();
    let lip_grad_g = a * (lam_d / 2.0 + lam_d * lam_d * r * r / 4.0);
    let l3 = 2.0 * xi * (zeta_g * lip_grad_g + zeta_grad_g * zeta_grad_g);

    for (name, hand, code) in [("L1", l1, got.l1), ("L2", l2, got.l2), ("L3", l3, got.l3)] {
        assert!((hand - code).abs() <= 1e-12 * hand.abs(), "{name}: hand {hand:e} code {code:e}");
    }
}

#[test]
fn bound_monotone_in_xi() {
    let pd = problem(8, 4, 1, 2, 1.0, 2);
    let mut last = 0.0;
    for xi in [0.0, 1.0, 10.0, 1e6, 1e12] {
        let l = conservative_lipschitz_bound(&pd, &PenaltyParams::new(xi)).total();
        assert!(l >= last);
        last = l;
    }
}
