use std::sync::Arc;

use nalgebra::DMatrix;
use proptest::prelude::*;
use tvpar::frame::{discrete_gradient, tv_norm};
use tvpar::metrics::{add_awgn, measured_snr_db, snr_db};
use tvpar::operators::{gradient_data_term, lipschitz_constant, sample_gaussian_operator};
use tvpar::prox::{prox_shifted_haar, prox_tv_dual, soft_threshold, ProxParams};
use tvpar::solvers::{self, ProblemInstance, SolverConfig, Variant};
use tvpar::{
    DenseOperator, Execution, IdentityOperator, LinearOperator, SeededRng, ShiftedHaarFrame,
    SignalGrid,
};

const SHAPES: [&[usize]; 7] = [&[2], &[4], &[10], &[4, 4], &[2, 6], &[8, 6], &[4, 2, 4]];

fn shape() -> impl Strategy<Value = &'static [usize]> {
    prop::sample::select(&SHAPES[..])
}

fn grid_pair() -> impl Strategy<Value = (SignalGrid, SignalGrid)> {
    shape().prop_flat_map(|dims| {
        let n: usize = dims.iter().product();
        (
            prop::collection::vec(-5.0..5.0f64, n),
            prop::collection::vec(-5.0..5.0f64, n),
        )
            .prop_map(move |(a, b)| {
                (
                    SignalGrid::from_vec(dims, a).unwrap(),
                    SignalGrid::from_vec(dims, b).unwrap(),
                )
            })
    })
}

fn dist(a: &SignalGrid, b: &SignalGrid) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn combine(a: f64, x: &SignalGrid, b: f64, z: &SignalGrid) -> SignalGrid {
    x.clone_with(x.data().iter().zip(z.data()).map(|(u, v)| a * u + b * v).collect())
}

trait CloneWith {
    fn clone_with(&self, data: Vec<f64>) -> SignalGrid;
}

impl CloneWith for SignalGrid {
    fn clone_with(&self, data: Vec<f64>) -> SignalGrid {
        SignalGrid::from_vec(self.dims(), data).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frame_is_tight_and_invertible((x, _) in grid_pair()) {
        let frame = ShiftedHaarFrame::new(x.dims()).unwrap();
        let coeffs = frame.analyze(&x).unwrap();
        let back = frame.pseudo_inverse(&coeffs).unwrap();
        for (a, b) in back.data().iter().zip(x.data()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        let xn = x.norm();
        let mut energy = 0.0;
        for c in &coeffs {
            let cn = c.grid.norm();
            prop_assert!((cn - xn).abs() <= 1e-12 * xn.max(1.0), "each W_k is an isometry");
            energy += cn * cn;
        }
        let want = frame.k() as f64 * xn * xn;
        prop_assert!((energy - want).abs() <= 1e-10 * want.max(1e-300));
    }

    #[test]
    fn tv_matches_frame_details((x, _) in grid_pair(), lambda in 0.0..3.0f64) {
        let frame = ShiftedHaarFrame::new(x.dims()).unwrap();
        let direct = tv_norm(&x, lambda).unwrap();
        let via = frame.tv_via_frame(&x, lambda).unwrap();
        prop_assert!((direct - via).abs() <= 1e-10 * direct.max(1e-12));
    }

    #[test]
    fn transforms_are_linear((x, z) in grid_pair(), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let frame = ShiftedHaarFrame::new(x.dims()).unwrap();
        let mix = combine(a, &x, b, &z);
        for k in 0..frame.k() {
            let lhs = frame.forward(k, &mix).unwrap();
            let fx = frame.forward(k, &x).unwrap();
            let fz = frame.forward(k, &z).unwrap();
            let rhs = combine(a, &fx.grid, b, &fz.grid);
            prop_assert!(dist(&lhs.grid, &rhs) <= 1e-12 * (1.0 + rhs.norm()));
            let inv = frame.inverse(k, &lhs).unwrap();
            prop_assert!(dist(&inv, &mix) <= 1e-12 * (1.0 + mix.norm()));
        }
        for d in 0..x.ndim() {
            let lhs = discrete_gradient(&mix, d).unwrap();
            let rhs = combine(a, &discrete_gradient(&x, d).unwrap(), b, &discrete_gradient(&z, d).unwrap());
            prop_assert!(dist(&lhs, &rhs) <= 1e-12 * (1.0 + rhs.norm()));
        }
    }

    #[test]
    fn shifted_haar_prox_is_nonexpansive((z1, z2) in grid_pair(), gamma in 0.01..2.0f64, lambda in 0.0..1.0f64) {
        let frame = ShiftedHaarFrame::new(z1.dims()).unwrap();
        let params = ProxParams::new(gamma, lambda, frame.k()).unwrap();
        for k in 0..frame.k() {
            let p1 = prox_shifted_haar(&frame, k, &z1, &params).unwrap();
            let p2 = prox_shifted_haar(&frame, k, &z2, &params).unwrap();
            prop_assert!(dist(&p1, &p2) <= dist(&z1, &z2) * (1.0 + 1e-12) + 1e-12);
        }
    }

    #[test]
    fn shifted_haar_prox_minimizes_its_objective(
        (z, _) in grid_pair(),
        gamma in 0.01..2.0f64,
        lambda in 0.0..1.0f64,
        seed in any::<u64>(),
    ) {
        let frame = ShiftedHaarFrame::new(z.dims()).unwrap();
        let params = ProxParams::new(gamma, lambda, frame.k()).unwrap();
        let mut rng = SeededRng::new(seed);
        for k in 0..frame.k() {
            let mask = frame.detail_mask(k).unwrap();
            let r_k = |x: &SignalGrid| -> f64 {
                let c = frame.forward(k, x).unwrap();
                params.split_weight() * c.grid.data().iter().zip(mask).filter(|(_, &m)| m).map(|(v, _)| v.abs()).sum::<f64>()
            };
            let objective = |x: &SignalGrid| 0.5 * dist(x, &z).powi(2) + gamma * r_k(x);
            let best = prox_shifted_haar(&frame, k, &z, &params).unwrap();
            let f_best = objective(&best);
            prop_assert!(f_best <= gamma * r_k(&z) + 1e-12);
            for _ in 0..100 {
                let scale = 10f64.powf(-4.0 * rng.uniform());
                let delta = rng.normal_vec(z.len());
                let trial = best.clone_with(best.data().iter().zip(&delta).map(|(a, d)| a + scale * d).collect());
                prop_assert!(f_best <= objective(&trial) + 1e-12);
            }
        }
    }

    #[test]
    fn nested_tv_prox_is_nonexpansive((z1, z2) in grid_pair(), tau in 0.0..1.0f64) {
        let p1 = prox_tv_dual(&z1, tau, 5000, 1e-12).unwrap();
        let p2 = prox_tv_dual(&z2, tau, 5000, 1e-12).unwrap();
        // Inexact inner solves: allow the solver's accuracy on top.
        prop_assert!(dist(&p1.x, &p2.x) <= dist(&z1, &z2) + 1e-6);
    }

    #[test]
    fn soft_threshold_shrinks_toward_zero(y in -10.0..10.0f64, tau in 0.0..5.0f64) {
        let s = soft_threshold(y, tau).unwrap();
        prop_assert!(s.abs() <= y.abs());
        prop_assert!((y - s).abs() <= tau + 1e-15);
        if y.abs() <= tau { prop_assert_eq!(s, 0.0); }
        prop_assert!(s == 0.0 || s.signum() == y.signum());
    }

    #[test]
    fn awgn_is_deterministic_and_exact(
        y in prop::collection::vec(-3.0..3.0f64, 1..64),
        snr in -10.0..60.0f64,
        seed in any::<u64>(),
    ) {
        prop_assume!(y.iter().any(|v| v.abs() > 1e-6));
        let (a, na) = add_awgn(&y, snr, &mut SeededRng::new(seed)).unwrap();
        let (b, nb) = add_awgn(&y, snr, &mut SeededRng::new(seed)).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(&na, &nb);
        prop_assert!((measured_snr_db(&y, &na) - snr).abs() <= 1e-10);
    }

    #[test]
    fn snr_falls_as_error_grows((x, e) in grid_pair(), s1 in 0.01..1.0f64, grow in 1.01..10.0f64) {
        prop_assume!(e.norm() > 1e-6 && x.norm() > 1e-6);
        let near = snr_db(&x, &combine(1.0, &x, s1, &e)).unwrap();
        let far = snr_db(&x, &combine(1.0, &x, s1 * grow, &e)).unwrap();
        prop_assert!(far < near);
    }

    #[test]
    fn dense_adjoint_is_consistent(m in 1usize..12, n in 1usize..12, seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let h = DenseOperator::from_row_major(m, n, rng.normal_vec(m * n)).unwrap();
        for _ in 0..10 {
            let x = rng.normal_vec(n);
            let u = rng.normal_vec(m);
            let hx = h.apply(&x).unwrap();
            let htu = h.apply_adjoint(&u).unwrap();
            let lhs: f64 = hx.iter().zip(&u).map(|(a, b)| a * b).sum();
            let rhs: f64 = x.iter().zip(&htu).map(|(a, b)| a * b).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn identity_adjoint_is_consistent(x in prop::collection::vec(-5.0..5.0f64, 1..20)) {
        let id = IdentityOperator::new(x.len()).unwrap();
        prop_assert_eq!(id.apply(&x).unwrap(), x.clone());
        prop_assert_eq!(id.apply_adjoint(&x).unwrap(), x);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lipschitz_estimate_is_tight(m in 2usize..20, n in 2usize..20, seed in any::<u64>()) {
        let tol = 1e-8;
        let mut rng = SeededRng::new(seed);
        let h = sample_gaussian_operator(m, n, &mut rng).unwrap();
        let hm = DMatrix::from_row_slice(m, n, h.entries());
        let top = (hm.transpose() * &hm).symmetric_eigenvalues().iter().copied().fold(0.0, f64::max);
        let estimates: Vec<f64> = (0..5)
            .map(|s| lipschitz_constant(&h, tol, 100_000, &mut SeededRng::new(seed ^ s)).unwrap().value)
            .collect();
        for &e in &estimates {
            prop_assert!(e <= top * (1.0 + tol), "{e} vs {top}");
        }
        let (lo, hi) = estimates.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &e| (a.min(e), b.max(e)));
        prop_assert!(hi - lo <= 10.0 * tol * hi, "spread {lo}..{hi}");

        // ∇D is L̂-Lipschitz on random pairs.
        let y = rng.normal_vec(m);
        for _ in 0..10 {
            let x = rng.normal_vec(n);
            let z = rng.normal_vec(n);
            let gx = gradient_data_term(&h, &y, &x).unwrap();
            let gz = gradient_data_term(&h, &y, &z).unwrap();
            let dg: f64 = gx.iter().zip(&gz).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let dx: f64 = x.iter().zip(&z).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            prop_assert!(dg <= (hi + tol) * dx);
        }
    }

    #[test]
    fn runs_are_bitwise_reproducible(seed in any::<u64>(), variant_ix in 0usize..4) {
        let mut rng = SeededRng::new(seed);
        let h = sample_gaussian_operator(6, 8, &mut rng).unwrap();
        let op: Arc<dyn LinearOperator> = Arc::new(h);
        let inst = ProblemInstance::new(op, rng.normal_vec(6), 0.05, ShiftedHaarFrame::new(&[2, 4]).unwrap()).unwrap();
        let variant = Variant::ALL[variant_ix];
        let x0 = SignalGrid::zeros(&[2, 4]).unwrap();
        let mut outs = Vec::new();
        for execution in [Execution::Serial, Execution::Parallel, Execution::Serial] {
            let mut cfg = SolverConfig::new(variant, 0.1, 25);
            cfg.execution = execution;
            let out = solvers::run(&inst, &cfg, x0.clone(), None).unwrap();
            outs.push((out.state.x.data().to_vec(), out.records.iter().map(|r| r.cost.to_bits()).collect::<Vec<_>>()));
        }
        prop_assert_eq!(&outs[0], &outs[1]);
        prop_assert_eq!(&outs[0], &outs[2]);
    }
}
