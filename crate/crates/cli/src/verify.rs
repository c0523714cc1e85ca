//! Seeded invariant suites behind `dioph verify`.

use dioph::angles::{g_index, line_angle_exact, phi, principal_sines, PrecisionContext, SubspaceRealization};
use dioph::arith;
use dioph::estimation::minkowski_check;
use dioph::lattice::{block_direct_sum, coordinate_projection_heights, laplace_identity_check, orthogonal_complement, IntegerVector, RationalMatrix, RationalSubspace};
use dioph::{Field, MpFloat, Real};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const SUITES: [&str; 3] = ["exact", "angles", "minkowski"];

pub const PHI_TOL: f64 = 1e-25;
pub const DUALITY_TOL: f64 = 1e-20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    pub passed: bool,
    /// The first few failing cases.
    pub examples: Vec<String>,
}

struct Tally {
    suite: &'static str,
    name: &'static str,
    cases: usize,
    failures: usize,
    examples: Vec<String>,
}

impl Tally {
    fn new(suite: &'static str, name: &'static str) -> Self {
        Tally { suite, name, cases: 0, failures: 0, examples: Vec::new() }
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.examples.len() < 3 {
                self.examples.push(what());
            }
        }
    }

    fn finish(self) -> Check {
        Check { suite: self.suite.into(), name: self.name.into(), cases: self.cases, failures: self.failures, passed: self.failures == 0 && self.cases > 0, examples: self.examples }
    }
}

fn rng_for(seed: u64, suite: &str) -> ChaCha8Rng {
    let salt = suite.bytes().fold(0u64, |h, b| h.wrapping_mul(131).wrapping_add(b as u64));
    ChaCha8Rng::seed_from_u64(seed ^ salt)
}

/// A saturated subspace of ℚⁿ of dimension e spanned by small random integer rows.
pub fn random_subspace(rng: &mut impl Rng, n: usize, e: usize) -> RationalSubspace {
    loop {
        let rows: Vec<IntegerVector> = (0..e).map(|_| (0..n).map(|_| BigInt::from(rng.gen_range(-6i64..=6))).collect()).collect();
        if let Ok(b) = RationalSubspace::from_integer_rows(&rows) {
            if b.dim() == e {
                return b;
            }
        }
    }
}

fn random_dims(rng: &mut impl Rng, lo: usize, hi: usize) -> (usize, usize) {
    let n = rng.gen_range(lo..=hi);
    (n, rng.gen_range(1..n))
}

fn embed(b: &RationalSubspace, n: usize, offset: usize) -> RationalSubspace {
    let rows: Vec<IntegerVector> = b
        .zbasis()
        .iter()
        .map(|r| {
            let mut v = vec![BigInt::zero(); n];
            for (i, x) in r.iter().enumerate() {
                v[offset + i] = x.clone();
            }
            v
        })
        .collect();
    RationalSubspace::from_integer_rows(&rows).expect("embedding keeps independence")
}

fn show(b: &RationalSubspace) -> String {
    format!("{:?}", b.zbasis().iter().map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>())
}

pub fn exact_suite(seed: u64, cases: usize) -> Vec<Check> {
    let mut rng = rng_for(seed, "exact");
    let mut comp = Tally::new("exact", "complement_height");
    let mut twice = Tally::new("exact", "double_complement");
    let mut gcd = Tally::new("exact", "pluecker_primitive");
    let mut sum = Tally::new("exact", "disjoint_sum_product");
    let mut bound = Tally::new("exact", "projection_product_bound");
    let mut split = Tally::new("exact", "projection_identity_split");
    let mut lap = Tally::new("exact", "laplace_expansion");
    for _ in 0..cases {
        let (n, e) = random_dims(&mut rng, 2, 6);
        let b = random_subspace(&mut rng, n, e);
        let c = orthogonal_complement(&b).expect("proper subspace");
        comp.record(c.height_sq() == b.height_sq(), || show(&b));
        let cc = orthogonal_complement(&c).expect("proper subspace");
        twice.record(cc.pluecker() == b.pluecker(), || show(&b));
        let coords = &b.pluecker().coords;
        gcd.record(arith::gcd_all(coords).is_one() && &arith::norm_sq(coords) == b.height_sq(), || show(&b));

        let mask: u32 = rng.gen_range(1..(1u32 << n));
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let (k, p) = coordinate_projection_heights(&b, &idx).expect("valid index set");
        bound.record(&k * &p <= *b.height_sq(), || format!("{} on {idx:?}", show(&b)));

        let (n1, e1) = random_dims(&mut rng, 2, 3);
        let (n2, e2) = random_dims(&mut rng, 2, 3);
        let b1 = random_subspace(&mut rng, n1, e1);
        let b2 = random_subspace(&mut rng, n2, e2);
        let s = block_direct_sum(&embed(&b1, n1 + n2, 0), &embed(&b2, n1 + n2, n1), n1).expect("disjoint blocks");
        sum.record(s.height_sq() == &(b1.height_sq() * b2.height_sq()), || format!("{} ⊕ {}", show(&b1), show(&b2)));
        let (k, p) = coordinate_projection_heights(&s, &(0..n1).collect::<Vec<_>>()).expect("valid index set");
        split.record(k * p == *s.height_sq(), || format!("{} ⊕ {}", show(&b1), show(&b2)));

        let m = rng.gen_range(2..=6usize);
        let cols: Vec<IntegerVector> = (0..m).map(|_| (0..m).map(|_| BigInt::from(rng.gen_range(-9i64..=9))).collect()).collect();
        let mat = RationalMatrix::from_int_columns(&cols).expect("square matrix");
        let r = rng.gen_range(1..m);
        let mut j: Vec<usize> = (0..m).collect();
        for i in (1..m).rev() {
            j.swap(i, rng.gen_range(0..=i));
        }
        let mut j = j[..r].to_vec();
        j.sort_unstable();
        lap.record(laplace_identity_check(&mat, &j).unwrap_or(false), || format!("{m}×{m} along {j:?}"));
    }
    [comp, twice, gcd, sum, bound, split, lap].into_iter().map(Tally::finish).collect()
}

fn abs_diff(a: &MpFloat, b: &MpFloat) -> f64 {
    (a.clone() - b.clone()).abs().to_f64()
}

pub fn angle_suite(seed: u64, cases: usize, bits: u32) -> Vec<Check> {
    let mut rng = rng_for(seed, "angles");
    let ctx = PrecisionContext::new(bits);
    let real = |b: &RationalSubspace| SubspaceRealization::<MpFloat>::from_subspace(b, &ctx).expect("realizable");
    let mut prod = Tally::new("angles", "phi_is_product_of_sines");
    let mut dual = Tally::new("angles", "psi_duality");
    let mut line = Tally::new("angles", "line_angle_exact_agrees");
    while prod.cases < cases || dual.cases < cases {
        let n = rng.gen_range(3..=6usize);
        let d = rng.gen_range(1..n);
        let e = rng.gen_range(1..n);
        let a = random_subspace(&mut rng, n, d);
        let b = random_subspace(&mut rng, n, e);
        let (ra, rb) = (real(&a), real(&b));
        let spec = principal_sines(&ra, &rb, &ctx).expect("same ambient space");
        if d + e <= n && prod.cases < cases {
            let f = phi(&ra, &rb, &ctx).expect("d + e ≤ n");
            let p = spec.sines.iter().fold(MpFloat::from_i64(1, ctx.working()), |acc, s| acc * s.clone());
            let diff = abs_diff(&f, &p);
            prod.record(diff <= PHI_TOL, || format!("{} vs {}: |Δ| = {diff:e}", show(&a), show(&b)));
        }
        if dual.cases < cases {
            let (ac, bc) = (orthogonal_complement(&a).expect("proper"), orthogonal_complement(&b).expect("proper"));
            let dspec = principal_sines(&real(&ac), &real(&bc), &ctx).expect("same ambient space");
            let top = d.min(e) - g_index(d, e, n);
            let worst = (1..=top).map(|j| abs_diff(&spec.psi(j).unwrap(), &dspec.psi(j).unwrap())).fold(0.0, f64::max);
            dual.record(worst <= DUALITY_TOL, || format!("{} vs {}: |Δ| = {worst:e}", show(&a), show(&b)));
        }
        if e < n && line.cases < cases {
            let x = random_subspace(&mut rng, n, 1);
            let exact = line_angle_exact(&x.zbasis()[0], &b, &ctx).expect("nonzero line");
            let s = principal_sines(&real(&x), &rb, &ctx).expect("same ambient space");
            let tol = s.error_radius.to_f64() + 2f64.powi(-(bits as i32) + 8);
            let diff = abs_diff(&exact, &s.psi(1).unwrap());
            line.record(diff <= tol, || format!("{} vs {}: |Δ| = {diff:e}", show(&x), show(&b)));
        }
    }
    [prod, dual, line].into_iter().map(Tally::finish).collect()
}

pub fn minkowski_suite(seed: u64, cases: usize) -> Vec<Check> {
    let mut rng = rng_for(seed, "minkowski");
    let mut t = Tally::new("minkowski", "minkowski_bound");
    for _ in 0..cases {
        let (n, e) = random_dims(&mut rng, 2, 5);
        let b = random_subspace(&mut rng, n, e);
        let ok = minkowski_check(&b).map(|r| r.passed).unwrap_or(false);
        t.record(ok, || show(&b));
    }
    vec![t.finish()]
}

pub fn run_suite(name: &str, seed: u64, cases: usize, bits: u32) -> Vec<Check> {
    match name {
        "exact" => exact_suite(seed, cases),
        "angles" => angle_suite(seed, cases.div_ceil(2), bits),
        _ => minkowski_suite(seed, cases * 2),
    }
}
