use proptest::prelude::*;

use semiclassical::coherent::quantize_antiwick;
use semiclassical::harness::results::ResultTable;
use semiclassical::harness::{raster, ExperimentConfig};
use semiclassical::moyal::{ck_term, moyal_exact};
use semiclassical::numerics::{h_fourier, integrate, norm, Direction, NormKind};
use semiclassical::weyl::{quantize_weyl, symbol_weyl};
use semiclassical::{fit_loglog_slope, Complex64, PhaseGrid, SpaceGrid, SymbolField};

const H: f64 = 0.25;

fn dual(points: usize) -> PhaseGrid {
    PhaseGrid::dual(SpaceGrid::new(6.0, points).unwrap(), H).unwrap()
}

#[derive(Clone, Copy, Debug)]
struct Gauss {
    x0: f64,
    xi0: f64,
    a: f64,
    b: f64,
    amp: f64,
}

fn gauss() -> impl Strategy<Value = Gauss> {
    (-1.5..1.5f64, -1.0..1.0f64, 0.6..1.5f64, 0.6..1.5f64, 0.2..2.0f64)
        .prop_map(|(x0, xi0, a, b, amp)| Gauss { x0, xi0, a, b, amp })
}

fn field(g: PhaseGrid, p: Gauss) -> SymbolField {
    SymbolField::from_real_fn(g, |x, xi| p.amp * (-(x - p.x0).powi(2) / p.a - (xi - p.xi0).powi(2) / p.b).exp())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weyl_round_trip_and_hermiticity(p in gauss()) {
        let f = field(dual(96), p);
        let a = quantize_weyl(&f, H).unwrap();
        prop_assert!(a.hermiticity_defect() < 1e-10);
        let back = symbol_weyl(&a).unwrap();
        prop_assert!(back.sub(&f).unwrap().sup() < 1e-8);
    }

    #[test]
    fn integrate_is_linear_and_bounded(p in gauss(), q in gauss(), s in -3.0..3.0f64) {
        let g = dual(64);
        let (f1, f2) = (field(g, p), field(g, q));
        let lhs = integrate(&f1.axpy(Complex64::new(s, 0.0), &f2).unwrap()).unwrap();
        let rhs = integrate(&f1).unwrap() + integrate(&f2).unwrap() * s;
        prop_assert!((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.norm()));
        prop_assert!(integrate(&f1).unwrap().norm() <= norm(&f1, NormKind::L1).unwrap() * (1.0 + 1e-14));
    }

    #[test]
    fn h_fourier_is_unitary(values in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 64)) {
        let grid = SpaceGrid::new(5.0, 64).unwrap();
        let f: Vec<Complex64> = values.iter().map(|&(r, i)| Complex64::new(r, i)).collect();
        let g = h_fourier(&f, &grid, H, Direction::Forward).unwrap();
        let back = h_fourier(&g, &grid, H, Direction::Inverse).unwrap();
        let err = f.iter().zip(&back).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12);
    }

    #[test]
    fn slope_fit_is_exact_on_power_laws(c in 0.01..100.0f64, s in -1.0..4.0f64, n in 3usize..7) {
        let pairs: Vec<(f64, f64)> = (0..n).map(|k| {
            let h = 0.4 / 2f64.powi(k as i32);
            (h, c * h.powf(s))
        }).collect();
        let fit = fit_loglog_slope(&pairs).unwrap();
        prop_assert!((fit.slope - s).abs() < 1e-10);
        prop_assert!((fit.constant() / c - 1.0).abs() < 1e-9);
        prop_assert!(fit.residual < 1e-10);
    }

    #[test]
    fn moyal_antisymmetry_and_even_orders(p in gauss(), q in gauss()) {
        let g = dual(64);
        let (f1, f2) = (field(g, p), field(g, q));
        let m = moyal_exact(&f1, &f2, H).unwrap().add(&moyal_exact(&f2, &f1, H).unwrap()).unwrap();
        prop_assert!(m.sup() < 1e-12 * (1.0 + p.amp * q.amp));
        for k in 1..=3 {
            let s = ck_term(&f1, &f2, k).unwrap().add(&ck_term(&f2, &f1, k).unwrap()).unwrap();
            prop_assert!(s.sup() < 1e-12);
        }
        prop_assert!(ck_term(&f1, &f2, 2).unwrap().sup() < 1e-12);
    }

    #[test]
    fn antiwick_of_nonnegative_symbol_is_positive(p in gauss()) {
        let g = dual(48);
        let f = field(g, p);
        let a = quantize_antiwick(&f, H).unwrap();
        prop_assert!(a.min_eigenvalue().unwrap() >= -1e-8);
    }

    #[test]
    fn raster_round_trip_is_bit_exact(
        m in 1usize..6, mx in 1usize..6, h in 0.01..1.0f64, complex in any::<bool>(),
        seed in prop::collection::vec(-1e3..1e3f64, 72),
    ) {
        let g = PhaseGrid::new(SpaceGrid::new(3.0, 2 * m).unwrap(), SpaceGrid::new(2.0, 2 * mx).unwrap());
        let f = SymbolField::from_fn(g, |x, xi| {
            let k = ((x + 3.0) * 7.0 + (xi + 2.0) * 3.0) as usize % seed.len();
            Complex64::new(seed[k], if complex { seed[(k + 1) % seed.len()] } else { 0.0 })
        });
        let bytes = raster::encode(&f, h, complex);
        prop_assert_eq!(&bytes[..4], b"MSF1");
        let (back, h2) = raster::decode(&bytes).unwrap();
        prop_assert_eq!(h2.to_bits(), h.to_bits());
        prop_assert_eq!(back.values(), f.values());
    }

    #[test]
    fn ladder_must_decrease_strictly(mut hs in prop::collection::vec(0.01..1.0f64, 1..6)) {
        let ok = hs.windows(2).all(|w| w[1] < w[0]);
        prop_assert_eq!(ExperimentConfig::default().with_ladder(hs.clone()).is_ok(), ok);
        hs.sort_by(|a, b| b.partial_cmp(a).unwrap());
        hs.dedup();
        prop_assert!(ExperimentConfig::default().with_ladder(hs).is_ok());
    }

    #[test]
    fn csv_is_independent_of_push_order(
        cells in prop::collection::btree_map((0usize..3, 0usize..4, 0usize..3), -1.0..1.0f64, 1..20),
    ) {
        let rows: Vec<_> = cells.into_iter().map(|((e, h, k), v)| (e, h, k, v)).collect();
        let push = |order: &[(usize, usize, usize, f64)]| {
            let mut t = ResultTable::new();
            for &(e, h, k, v) in order {
                let exp = ["a", "b", "c"][e];
                let metric = ["mass", "slope", "symbol_l1"][k];
                t.push(exp, 0.4 / (1 << h) as f64, 1.0, metric, v);
            }
            t.to_csv().unwrap()
        };
        let mut rev = rows.clone();
        rev.reverse();
        prop_assert_eq!(push(&rows), push(&rev));
    }
}
