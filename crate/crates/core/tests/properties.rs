use epd_gossip::engine::{run_second_order, run_simple};
use epd_gossip::lattice::{convolve, LatticeFilter, ScalarField, Vertex};
use epd_gossip::oracle::{Covariance, EpdSolution, HeatSolution};
use epd_gossip::schedule::jacobi_general_schedule;
use epd_gossip::specfun::{jacobi_normalized, JacobiParams};
use epd_gossip::spectral::{field_fourier, plancherel_l2};
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Symmetric filters: a positive center weight, both unit axes and a few
/// random extra offsets, each paired with its mirror image.
fn symmetric_filter() -> impl Strategy<Value = LatticeFilter> {
    (1usize..=2)
        .prop_flat_map(|dim| {
            (
                Just(dim),
                0.05f64..1.0,
                prop::collection::vec(0.05f64..1.0, dim),
                prop::collection::vec((prop::collection::vec(-2i64..=2, dim), 0.01f64..1.0), 0..3),
            )
        })
        .prop_map(|(dim, center, axes, extra)| {
            let mut raw: Vec<(Vertex, f64)> = vec![(vec![0; dim], center)];
            for (i, w) in axes.into_iter().enumerate() {
                let mut e = vec![0; dim];
                e[i] = 1;
                raw.push((e, w));
            }
            for (v, w) in extra {
                if v.iter().all(|&c| c == 0) || raw.iter().any(|(u, _)| *u == v || u.iter().zip(&v).all(|(a, b)| *a == -b)) {
                    continue;
                }
                raw.push((v, w));
            }
            let mut entries = Vec::new();
            for (v, w) in raw {
                if v.iter().all(|&c| c == 0) {
                    entries.push((v, w));
                } else {
                    let mirror: Vertex = v.iter().map(|c| -c).collect();
                    entries.push((v, w / 2.0));
                    entries.push((mirror, w / 2.0));
                }
            }
            let total: f64 = entries.iter().map(|e| e.1).sum();
            for e in &mut entries {
                e.1 /= total;
            }
            LatticeFilter::new(dim, entries).expect("valid by construction")
        })
}

fn field(dim: usize) -> impl Strategy<Value = ScalarField> {
    (0usize..=4).prop_flat_map(move |m| {
        let cells = (2 * m + 1).pow(dim as u32);
        prop::collection::vec(-1.0f64..1.0, cells)
            .prop_map(move |values| ScalarField::from_values(dim, m, values).unwrap())
    })
}

fn spd2() -> impl Strategy<Value = Covariance> {
    prop::array::uniform4(-1.0f64..1.0).prop_map(|a| {
        let m = DMatrix::from_row_slice(2, 2, &a);
        Covariance::new(&m * m.transpose() + DMatrix::identity(2, 2) * 0.1).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mass_is_conserved(
        f in symmetric_filter(),
        alpha in -0.5f64..3.0,
        beta in -0.5f64..1.0,
        rounds in 1usize..40,
    ) {
        let beta = beta.min(alpha);
        let s = jacobi_general_schedule(alpha, beta).unwrap();
        for trace in [run_simple(&f, rounds, &[]).unwrap(), run_second_order(&f, &s, rounds, &[]).unwrap()] {
            for m in &trace.metrics {
                prop_assert!((m.mass - 1.0).abs() < 1e-10, "mass {} at round {}", m.mass, m.n);
            }
        }
    }

    #[test]
    fn iterate_transform_is_the_jacobi_polynomial(
        f in symmetric_filter(),
        alpha in 0.0f64..2.0,
        rounds in 1usize..25,
        seed in prop::collection::vec(-3.0f64..3.0, 2),
    ) {
        let s = jacobi_general_schedule(alpha, 0.0).unwrap();
        let trace = run_second_order(&f, &s, rounds, &[rounds]).unwrap();
        let xi = &seed[..f.dim()];
        let lhs = field_fourier(trace.snapshot(rounds).unwrap(), xi);
        let lambda = f.fourier(xi).re;
        let rhs = jacobi_normalized(rounds, JacobiParams::new(alpha, 0.0).unwrap(), lambda);
        prop_assert!((lhs.re - rhs).abs() < 1e-10 && lhs.im.abs() < 1e-10);
    }

    #[test]
    fn plancherel_is_exact(x in (1usize..=2).prop_flat_map(field), extra in 0usize..3) {
        let exact = x.l2_sq();
        let quad = plancherel_l2(&x, 2 * x.box_radius() + 1 + extra).unwrap();
        prop_assert!((quad - exact).abs() <= 1e-10 * exact.max(1.0));
    }

    #[test]
    fn plancherel_rejects_coarse_grids(x in field(1)) {
        prop_assume!(x.box_radius() > 0);
        prop_assert!(plancherel_l2(&x, 2 * x.box_radius()).is_err());
    }

    #[test]
    fn fourier_turns_convolution_into_product(
        f in symmetric_filter(),
        seed in prop::collection::vec(-1.0f64..1.0, 81),
        xi in prop::collection::vec(-4.0f64..4.0, 2),
    ) {
        let dim = f.dim();
        let m: usize = if dim == 1 { 4 } else { 2 };
        let cells = (2 * m + 1).pow(dim as u32);
        let x = ScalarField::from_values(dim, m, seed[..cells].to_vec()).unwrap();
        let y = convolve(&f, &x).unwrap();
        let lhs = field_fourier(&y, &xi[..dim]);
        let rhs = f.fourier(&xi[..dim]) * field_fourier(&x, &xi[..dim]);
        prop_assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn anisotropic_solutions_are_pullbacks(
        cov in spd2(),
        t in 0.3f64..5.0,
        alpha in 0.1f64..3.0,
        w in prop::collection::vec(-1.2f64..1.2, 2),
    ) {
        let y = cov.apply_sqrt(&[w[0] * t, w[1] * t]);
        let z = cov.apply_inv_sqrt(&y);
        let factor = cov.det().sqrt().recip();
        let heat_q = HeatSolution::new(cov.clone(), t).unwrap().eval(&y).unwrap();
        let heat_i = HeatSolution::new(Covariance::identity(2), t).unwrap().eval(&z).unwrap();
        prop_assert!((heat_q - factor * heat_i).abs() <= 1e-10 * heat_q.abs().max(1e-300));
        let epd_q = EpdSolution::new(alpha, cov.clone(), t).unwrap().eval(&y).unwrap();
        let epd_i = EpdSolution::new(alpha, Covariance::identity(2), t).unwrap().eval(&z).unwrap();
        prop_assert!((epd_q - factor * epd_i).abs() <= 1e-10 * epd_q.abs().max(1e-300));
    }

    #[test]
    fn epd_transform_is_one_at_the_origin(cov in spd2(), t in 0.1f64..20.0, alpha in 1e-6f64..4.0) {
        let u = EpdSolution::new(alpha, cov, t).unwrap();
        prop_assert!((u.fourier(&[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-14);
    }
}
