use dioph::angles::{g_index, phi, principal_sines, PrecisionContext, SubspaceRealization};
use dioph::arith;
use dioph::constructions::{predicted_last_exponent, predicted_line_exponent};
use dioph::estimation::{enumerate_line_vectors, minkowski_check, records, Candidate, FixedTarget};
use dioph::lattice::*;
use dioph::series::{rat, BetaSchedule};
use num_bigint::BigInt;
use num_traits::{One, Pow};
use proptest::prelude::*;

fn subspace_strategy(max_n: usize) -> impl Strategy<Value = RationalSubspace> {
    (2..=max_n)
        .prop_flat_map(|n| (Just(n), 1..n))
        .prop_flat_map(|(n, e)| prop::collection::vec(prop::collection::vec(-6i64..=6, n), e))
        .prop_filter_map("degenerate", |rows| {
            let rows: Vec<IntegerVector> = rows.iter().map(|r| int_vec(r)).collect();
            RationalSubspace::from_integer_rows(&rows).ok()
        })
}

fn pair_strategy(max_n: usize) -> impl Strategy<Value = (RationalSubspace, RationalSubspace)> {
    (3..=max_n)
        .prop_flat_map(|n| (Just(n), 1..n, 1..n))
        .prop_flat_map(|(n, d, e)| (prop::collection::vec(prop::collection::vec(-5i64..=5, n), d), prop::collection::vec(prop::collection::vec(-5i64..=5, n), e)))
        .prop_filter_map("degenerate", |(a, b)| {
            let a: Vec<IntegerVector> = a.iter().map(|r| int_vec(r)).collect();
            let b: Vec<IntegerVector> = b.iter().map(|r| int_vec(r)).collect();
            Some((RationalSubspace::from_integer_rows(&a).ok()?, RationalSubspace::from_integer_rows(&b).ok()?))
        })
}

fn embed(b: &RationalSubspace, n: usize, offset: usize) -> RationalSubspace {
    let rows: Vec<IntegerVector> = b
        .zbasis()
        .iter()
        .map(|r| {
            let mut v = vec![BigInt::from(0); n];
            for (i, x) in r.iter().enumerate() {
                v[offset + i] = x.clone();
            }
            v
        })
        .collect();
    RationalSubspace::from_integer_rows(&rows).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn complement_preserves_height(b in subspace_strategy(6)) {
        let c = orthogonal_complement(&b).unwrap();
        prop_assert_eq!(c.dim(), b.n() - b.dim());
        prop_assert_eq!(c.height_sq(), b.height_sq());
        let cc = orthogonal_complement(&c).unwrap();
        prop_assert_eq!(cc.pluecker(), b.pluecker());
    }

    #[test]
    fn pluecker_is_primitive(b in subspace_strategy(6)) {
        prop_assert!(arith::gcd_all(&b.pluecker().coords).is_one());
        prop_assert_eq!(&arith::norm_sq(&b.pluecker().coords), b.height_sq());
    }

    #[test]
    fn zbasis_spans_the_integer_points(b in subspace_strategy(5), coeffs in prop::collection::vec(-3i64..=3, 5)) {
        let n = b.n();
        let v: IntegerVector = (0..n).map(|i| b.zbasis().iter().zip(&coeffs).map(|(r, c)| &r[i] * c).sum()).collect();
        prop_assert!(contains(&v, &b).unwrap());
    }

    #[test]
    fn disjoint_sum_multiplies_heights(b in subspace_strategy(3), c in subspace_strategy(3)) {
        let n = b.n() + c.n();
        let bb = embed(&b, n, 0);
        let cc = embed(&c, n, b.n());
        let s = block_direct_sum(&bb, &cc, b.n()).unwrap();
        prop_assert_eq!(s.dim(), b.dim() + c.dim());
        prop_assert_eq!(s.height_sq().clone(), b.height_sq() * c.height_sq());
        let direct = RationalSubspace::from_integer_rows(&[bb.zbasis(), cc.zbasis()].concat()).unwrap();
        prop_assert_eq!(direct.pluecker(), s.pluecker());
    }

    #[test]
    fn projection_heights_bound_height(b in subspace_strategy(5), mask in 1u32..31) {
        let idx: Vec<usize> = (0..b.n()).filter(|i| mask & (1 << i) != 0).collect();
        let (k, p) = coordinate_projection_heights(&b, &idx).unwrap();
        prop_assert!(&k * &p <= *b.height_sq());
    }

    #[test]
    fn projection_identity_for_split_subspaces(b in subspace_strategy(3), c in subspace_strategy(3)) {
        let n = b.n() + c.n();
        let s = block_direct_sum(&embed(&b, n, 0), &embed(&c, n, b.n()), b.n()).unwrap();
        let idx: Vec<usize> = (0..b.n()).collect();
        let (k, p) = coordinate_projection_heights(&s, &idx).unwrap();
        prop_assert_eq!(k * p, s.height_sq().clone());
    }

    #[test]
    fn laplace_expansion(m in (2usize..=6).prop_flat_map(|n| prop::collection::vec(prop::collection::vec(-9i64..=9, n), n)), r in 1usize..5) {
        let n = m.len();
        let cols: Vec<IntegerVector> = m.iter().map(|c| int_vec(c)).collect();
        let mat = RationalMatrix::from_int_columns(&cols).unwrap();
        let r = r.min(n - 1);
        let j: Vec<usize> = (0..r).map(|i| (i * 2) % n).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        prop_assert!(laplace_identity_check(&mat, &j).unwrap());
    }

    #[test]
    fn phi_is_product_of_sines((a, b) in pair_strategy(5)) {
        prop_assume!(a.dim() + b.dim() <= a.n());
        let ctx = PrecisionContext::new(128);
        let ra = SubspaceRealization::<f64>::from_subspace(&a, &ctx).unwrap();
        let rb = SubspaceRealization::<f64>::from_subspace(&b, &ctx).unwrap();
        let spec = principal_sines(&ra, &rb, &ctx).unwrap();
        let prod: f64 = spec.sines.iter().product();
        let f = phi(&ra, &rb, &ctx).unwrap();
        prop_assert!((f - prod).abs() <= 1e-9);
    }

    #[test]
    fn psi_is_self_dual((a, b) in pair_strategy(5)) {
        let ctx = PrecisionContext::new(128);
        let ac = orthogonal_complement(&a).unwrap();
        let bc = orthogonal_complement(&b).unwrap();
        let t = a.dim().min(b.dim()) - g_index(a.dim(), b.dim(), a.n());
        for j in 1..=t {
            let x = principal_sines(&SubspaceRealization::<f64>::from_subspace(&a, &ctx).unwrap(), &SubspaceRealization::<f64>::from_subspace(&b, &ctx).unwrap(), &ctx).unwrap().psi(j).unwrap();
            let y = principal_sines(&SubspaceRealization::<f64>::from_subspace(&ac, &ctx).unwrap(), &SubspaceRealization::<f64>::from_subspace(&bc, &ctx).unwrap(), &ctx).unwrap().psi(j).unwrap();
            prop_assert!((x - y).abs() <= 1e-9, "j={} {} vs {}", j, x, y);
        }
    }

    #[test]
    fn minkowski_bound_holds(b in subspace_strategy(5)) {
        prop_assert!(minkowski_check(&b).unwrap().passed);
    }

    #[test]
    fn fast_multiplication_agrees(a in any::<i64>(), e in 0u64..3000, b in any::<i64>()) {
        let x = BigInt::from(a) * arith::pow(7, e);
        let y = BigInt::from(b) * arith::pow(3, e * 2);
        prop_assert_eq!(arith::mul(&x, &y), &x * &y);
        prop_assert_eq!(arith::pow(7, e), BigInt::from(7).pow(e as u32));
    }

    #[test]
    fn last_angle_reduces_to_line_for_d1(alpha in 2i64..40, e in 1usize..5) {
        let s = BetaSchedule::constant(rat(alpha, 1)).unwrap();
        prop_assert_eq!(predicted_last_exponent(1, e, &rat(alpha, 1), e).unwrap(), predicted_line_exponent(&s, e));
    }

    #[test]
    fn records_strictly_improve(x in 1i64..50, y in 1i64..50, bound in 10u64..400) {
        prop_assume!(((y as f64).sqrt().round() as i64).pow(2) != y);
        let ctx = PrecisionContext::new(128);
        let bits = ctx.working();
        use dioph::{MpFloat, Field, Real};
        let a = FixedTarget::real(vec![vec![MpFloat::from_i64(x, bits), MpFloat::from_i64(y, bits).sqrt()]]).unwrap();
        let cands: Vec<Candidate> = dioph::estimation::enumerate_lines(2, bound).into_iter().map(|b| Candidate::new("", b)).collect();
        let seq = records(&a, cands, 1, &ctx, "", "").unwrap();
        for w in seq.records.windows(2) {
            prop_assert!(w[1].psi.value < w[0].psi.value);
            prop_assert!(w[1].height_sq > w[0].height_sq);
        }
    }
}

#[test]
fn line_enumeration_matches_brute_force() {
    for n in 2..=3usize {
        for bound in [1u64, 2, 5, 13, 30] {
            let r = (bound as f64).sqrt() as i64 + 1;
            let mut count = 0;
            let mut stack = vec![vec![]];
            while let Some(v) = stack.pop() {
                if v.len() == n {
                    let nn: i64 = v.iter().map(|x: &i64| x * x).sum();
                    let g = v.iter().fold(0i64, |g, &x| num_integer::gcd(g, x));
                    if nn > 0 && nn as u64 <= bound && g == 1 {
                        count += 1;
                    }
                    continue;
                }
                for x in -r..=r {
                    let mut w = v.clone();
                    w.push(x);
                    stack.push(w);
                }
            }
            assert_eq!(enumerate_line_vectors(n, bound).len() * 2, count, "n={n} bound={bound}");
        }
    }
}

#[test]
fn projection_identity_counterexample() {
    let b = RationalSubspace::from_integer_rows(&[int_vec(&[1, 0, 1]), int_vec(&[0, 1, 1])]).unwrap();
    let (k, p) = coordinate_projection_heights(&b, &[0, 1]).unwrap();
    assert_eq!((k.clone(), p.clone()), (BigInt::one(), BigInt::one()));
    assert_eq!(b.height_sq(), &BigInt::from(3));
}
