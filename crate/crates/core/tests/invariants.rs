mod common;

use gecsr::gecsr::{
    align_phase, damp, extrinsic, gaussian_product, module_a, module_b, module_c, nmse_db, Direction, GaussianMessage,
    LayerRecord, SolverTrace, V_MAX, V_MIN,
};
use gecsr::hypernets::{
    attention_head, attention_weights, gru_step, hypernet_forward, AttentionHead, Checkpoint, HyperGruParams,
    HyperNetParams, Weights,
};
use gecsr::model::{DatasetManifest, MatrixClass, SignalPrior, TransformMatrix};
use gecsr::training::{sample_loss, Controller, ControllerSpec, Variant};
use gecsr::{CVector, Complex64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{denoiser_oracle, lmmse_oracle, phase_posterior_oracle, rel_err, rel_err_c};

fn cvec(parts: &[(f64, f64)]) -> CVector {
    CVector::from_iterator(parts.len(), parts.iter().map(|(a, b)| Complex64::new(*a, *b)))
}

fn complex_vec(len: usize) -> impl Strategy<Value = CVector> {
    prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), len).prop_map(|p| cvec(&p))
}

fn log_variance() -> impl Strategy<Value = f64> {
    (-14.0..14.0f64).prop_map(|e| 10f64.powf(e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn message_variances_are_clamped(mean in complex_vec(4), v in log_variance()) {
        let m = GaussianMessage::new(mean.clone(), v);
        prop_assert!((V_MIN..=V_MAX).contains(&m.variance));
        let other = GaussianMessage::new(mean, 1.0);
        let e = extrinsic(&m, &other).unwrap();
        prop_assert!((V_MIN..=V_MAX).contains(&e.variance));
    }

    #[test]
    fn extrinsic_inverts_product(a in complex_vec(5), b in complex_vec(5), va in -3.0..3.0f64, vb in -3.0..3.0f64) {
        let a = GaussianMessage::new(a, 10f64.powf(va));
        let b = GaussianMessage::new(b, 10f64.powf(vb));
        let post = gaussian_product(&a, &b);
        let back = extrinsic(&post, &b).unwrap();
        prop_assert!(rel_err(back.variance, a.variance) < 1e-8);
        let scale = a.mean.norm().max(1.0) * (1.0 + a.variance / b.variance);
        prop_assert!((&back.mean - &a.mean).norm() < 1e-8 * scale);
    }

    #[test]
    fn damping_endpoints(cur in complex_vec(3), prev in complex_vec(3), vc in log_variance(), vp in log_variance()) {
        let cur = GaussianMessage::new(cur, vc);
        let prev = GaussianMessage::new(prev, vp);
        prop_assert_eq!(damp(&cur, &prev, 0.0), cur.clone());
        prop_assert_eq!(damp(&cur, &prev, 1.0), prev.clone());
        let mid = damp(&cur, &prev, 0.5);
        prop_assert!(mid.variance >= vc.min(vp).clamp(V_MIN, V_MAX) * (1.0 - 1e-12));
        prop_assert!(mid.variance <= vc.max(vp).clamp(V_MIN, V_MAX) * (1.0 + 1e-12));
    }

    #[test]
    fn align_phase_beats_every_grid_rotation(x in complex_vec(6), est in complex_vec(6)) {
        prop_assume!(x.norm() > 1e-3);
        let best = nmse_db(&x, &align_phase(&x, &est).unwrap()).unwrap();
        for k in 0..720 {
            let rot = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 720.0);
            let other = nmse_db(&x, &(&est * rot)).unwrap();
            prop_assert!(best <= other + 1e-9, "grid rotation {k} gives {other} < {best}");
        }
    }

    #[test]
    fn attention_rows_are_stochastic(s in prop::collection::vec(-20.0..20.0f64, 1..12), seed in any::<u64>(), scale in 0.01..5.0f64) {
        let head = AttentionHead::new(s.len(), scale, &mut ChaCha8Rng::seed_from_u64(seed));
        for row in attention_weights(&s, &head).unwrap() {
            prop_assert!(row.iter().all(|a| *a >= 0.0 && a.is_finite()));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let out = attention_head(&s, &head).unwrap();
        let (lo, hi) = s.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
        prop_assert!(out.iter().all(|v| *v >= lo - 1e-9 && *v <= hi + 1e-9));
    }

    #[test]
    fn attention_is_permutation_equivariant(s in prop::collection::vec(-3.0..3.0f64, 2..8), seed in any::<u64>(), rot in 1usize..7) {
        let d = s.len();
        let head = AttentionHead::new(d, 1.0, &mut ChaCha8Rng::seed_from_u64(seed));
        let perm: Vec<usize> = (0..d).map(|i| (i + rot) % d).collect();
        let permute = |w: &Weights| {
            let mut out = Weights::zeros(d, d);
            for i in 0..d {
                for j in 0..d {
                    out.set(i, j, w.get(perm[i], perm[j]));
                }
            }
            out
        };
        let permuted = AttentionHead { w_b: permute(&head.w_b), w_c: permute(&head.w_c) };
        let ps: Vec<f64> = perm.iter().map(|&i| s[i]).collect();
        let out = attention_head(&s, &head).unwrap();
        let pout = attention_head(&ps, &permuted).unwrap();
        for i in 0..d {
            prop_assert!((pout[i] - out[perm[i]]).abs() < 1e-12);
        }
    }

    #[test]
    fn gru_outputs_stay_in_range(seed in any::<u64>(), n in 1usize..6, steps in 1usize..8, big in 0.0..50.0f64) {
        let params = HyperGruParams::new(n, 6, seed % 2 == 0, true, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut h = vec![0.0; 6];
        for _ in 0..steps {
            let s: Vec<f64> = (0..params.input_dim()).map(|_| rand::Rng::random_range(&mut rng, -big..=big)).collect();
            let (next, beta) = gru_step(&h, &s, &params).unwrap();
            prop_assert!(next.iter().all(|v| v.abs() <= 1.0));
            prop_assert!((0.0..=1.0).contains(&beta));
            h = next;
        }
    }

    #[test]
    fn hypernet_betas_are_sigmoid_range(seed in any::<u64>(), n in 1usize..8, layers in 1usize..12, mag in 0.0..100.0f64) {
        let params = HyperNetParams::new(n, 5, layers, (seed % 3) as usize, seed % 2 == 1, seed);
        let s: Vec<f64> = (0..=n).map(|i| mag * ((i as f64) - 2.0)).collect();
        let betas = hypernet_forward(&s, &params).unwrap();
        prop_assert_eq!(betas.len(), layers);
        prop_assert!(betas.iter().all(|b| (0.0..=1.0).contains(b)));
    }

    #[test]
    fn loss_ignores_global_phase(x in complex_vec(5), est in complex_vec(5), phi in 0.0..6.3f64, psi in 0.0..6.3f64) {
        let trace = |e: CVector| SolverTrace {
            init_estimate: e.clone(),
            init_nmse_db: 0.0,
            layers: vec![LayerRecord { t: 1, x_hat: e, nmse_db: 0.0, beta_z: 0.5, beta_x: 0.5, v2z: 1.0, v2x: 1.0 }],
            diverged: false,
            beta_clamps: 0,
        };
        let base = sample_loss(&x, &trace(est.clone()), 1).unwrap()[0];
        let rotated_est = sample_loss(&x, &trace(&est * Complex64::from_polar(1.0, phi)), 1).unwrap()[0];
        let rotated_x = sample_loss(&(&x * Complex64::from_polar(1.0, psi)), &trace(est), 1).unwrap()[0];
        prop_assert!((rotated_est - base).abs() <= 1e-9 * base.max(1.0));
        prop_assert!((rotated_x - base).abs() <= 1e-9 * base.max(1.0));
    }

    #[test]
    fn flatten_round_trip(variant in 0usize..5, seed in any::<u64>(), layers in 1usize..6) {
        let spec = ControllerSpec::new(Variant::ALL[variant], 6, layers, seed);
        let c = Controller::new(spec).unwrap();
        let values = c.values();
        prop_assert_eq!(values.len(), c.param_count());
        let shifted: Vec<f64> = values.iter().enumerate().map(|(i, v)| v + i as f64 * 0.25).collect();
        let moved = c.with_values(&shifted).unwrap();
        prop_assert_eq!(moved.values(), shifted);
        prop_assert!(c.with_values(&values[1..]).is_err());
    }

    #[test]
    fn checkpoint_round_trip(variant in 0usize..5, seed in any::<u64>(), layers in 1usize..6, tied in any::<bool>()) {
        let mut spec = ControllerSpec::new(Variant::ALL[variant], 7, layers, seed);
        spec.tied = tied;
        let c = Controller::new(spec).unwrap();
        let noisy: Vec<f64> = c.values().iter().map(|v| v * 1.000_000_1 + 1e-17).collect();
        let c = c.with_values(&noisy).unwrap();
        let text = c.to_checkpoint().to_json().unwrap();
        let back = Controller::from_checkpoint(&Checkpoint::from_json(&text).unwrap()).unwrap();
        prop_assert_eq!(back.values(), c.values());
        prop_assert_eq!(back.spec(), c.spec());
    }

    #[test]
    fn manifests_regenerate_identically(seed in any::<u64>(), index in 0u64..6, class in 0usize..3) {
        let class = [MatrixClass::Gaussian, MatrixClass::Geometric(vec![0.9]), MatrixClass::Binary][class].clone();
        let m = DatasetManifest::fixed(seed, 6, 12, 4, class, 20.0, 0.5);
        let again = DatasetManifest::from_json(&serde_json::to_string(&m).unwrap()).unwrap();
        prop_assert_eq!(m.hash(), again.hash());
        let (a, b) = (m.sample(index).unwrap(), again.sample(index).unwrap());
        prop_assert_eq!(a.x, b.x);
        prop_assert_eq!(a.y, b.y);
        prop_assert_eq!(a.matrix.to_dense(), b.matrix.to_dense());
        let mut reseeded = m.clone();
        reseeded.seed = seed.wrapping_add(1);
        prop_assert_ne!(m.hash(), reseeded.hash());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn phase_reconstructor_matches_quadrature(re in -6.0..6.0f64, im in -6.0..6.0f64, y in 0.0..15.0f64, lv in -2.0..1.5f64) {
        let mu = Complex64::new(re, im);
        let v = 10f64.powf(lv);
        let got = module_a(&GaussianMessage::new(CVector::from_element(1, mu), v), &[y]).unwrap();
        let (mean, var) = phase_posterior_oracle(mu, v, y);
        prop_assert!(rel_err_c(got.mean[0], mean, var.sqrt()) < 1e-6);
        prop_assert!(rel_err(got.variance, var) < 1e-6);
    }

    #[test]
    fn denoiser_matches_quadrature(re in -8.0..8.0f64, im in -8.0..8.0f64, lv in -2.0..1.0f64, rho in 0.05..1.0f64) {
        let r = Complex64::new(re, im);
        let v = 10f64.powf(lv);
        let got = module_c(&GaussianMessage::new(CVector::from_element(1, r), v), &SignalPrior::new(rho).unwrap()).unwrap();
        let (mean, var) = denoiser_oracle(r, v, rho);
        prop_assert!(rel_err_c(got.mean[0], mean, var.sqrt()) < 1e-6);
        prop_assert!(rel_err(got.variance, var) < 1e-6);
    }

    #[test]
    fn linear_reconstructor_matches_dense(seed in any::<u64>(), m in 2usize..10, n in 2usize..10, lz in -2.0..2.0f64, lx in -2.0..2.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = m.min(n);
        let singulars: Vec<f64> = (0..k).rev().map(|i| 0.3 + i as f64).collect();
        let a = TransformMatrix::haar(m, n, singulars, &mut rng).unwrap();
        let mz = CVector::from_fn(m, |i, _| Complex64::new(i as f64 - 1.0, 0.5));
        let mx = CVector::from_fn(n, |i, _| Complex64::new(0.2, 1.0 - i as f64));
        let (vz, vx) = (10f64.powf(lz), 10f64.powf(lx));
        let (ox, ovx, oz, ovz) = lmmse_oracle(&a, &mz, vz, &mx, vx);
        let bx = module_b(&GaussianMessage::new(mz.clone(), vz), &GaussianMessage::new(mx.clone(), vx), &a, Direction::X).unwrap();
        let bz = module_b(&GaussianMessage::new(mz, vz), &GaussianMessage::new(mx, vx), &a, Direction::Z).unwrap();
        prop_assert!((&bx.mean - &ox).norm() <= 1e-9 * ox.norm().max(1.0));
        prop_assert!((&bz.mean - &oz).norm() <= 1e-9 * oz.norm().max(1.0));
        prop_assert!(rel_err(bx.variance, ovx) < 1e-9);
        prop_assert!(rel_err(bz.variance, ovz) < 1e-9);
    }
}
