//! Principal angles between subspaces at a chosen precision.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::arith;
use crate::error::{Error, Result};
use crate::lattice::{IntegerVector, RationalSubspace};
use crate::scalar::{cmp_real, Field, MpFloat, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrecisionContext {
    pub bits: u32,
    pub guard_bits: u32,
}

impl PrecisionContext {
    pub fn new(bits: u32) -> Self {
        PrecisionContext { bits: bits.max(64), guard_bits: 32 }
    }

    pub fn working(&self) -> u32 {
        self.bits + self.guard_bits
    }
}

impl Default for PrecisionContext {
    fn default() -> Self {
        PrecisionContext::new(256)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    Exact,
    Truncated { depth: usize, tail_log2: f64 },
}

/// Generators of a subspace lifted to a working scalar type.
#[derive(Clone, Debug)]
pub struct SubspaceRealization<T> {
    pub n: usize,
    pub generators: Vec<Vec<T>>,
    pub provenance: Provenance,
}

impl<T: Real> SubspaceRealization<T> {
    pub fn new(generators: Vec<Vec<T>>, provenance: Provenance) -> Result<Self> {
        let n = generators.first().map(|g| g.len()).ok_or(Error::DegenerateBasis)?;
        if let Some(g) = generators.iter().find(|g| g.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: g.len() });
        }
        Ok(SubspaceRealization { n, generators, provenance })
    }

    pub fn from_int_rows(rows: &[IntegerVector], ctx: &PrecisionContext) -> Result<Self> {
        let b = ctx.working();
        Self::new(rows.iter().map(|r| r.iter().map(|x| T::from_int(x, b)).collect()).collect(), Provenance::Exact)
    }

    pub fn from_rational_rows(rows: &[Vec<BigRational>], ctx: &PrecisionContext) -> Result<Self> {
        let b = ctx.working();
        Self::new(rows.iter().map(|r| r.iter().map(|x| T::from_ratio(x, b)).collect()).collect(), Provenance::Exact)
    }

    pub fn from_subspace(s: &RationalSubspace, ctx: &PrecisionContext) -> Result<Self> {
        Self::from_int_rows(s.zbasis(), ctx)
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }
}

/// Ascending principal sines with the forced-intersection count g.
#[derive(Clone, Debug)]
pub struct AngleSpectrum<T> {
    pub t: usize,
    pub g: usize,
    pub sines: Vec<T>,
    pub error_radius: T,
}

impl<T: Real> AngleSpectrum<T> {
    /// ψ_j = ω_{j+g}, 1-based.
    pub fn psi(&self, j: usize) -> Result<T> {
        let max = self.t.saturating_sub(self.g);
        if j == 0 || j > max {
            return Err(Error::IndexOutOfRange { j, max });
        }
        Ok(self.sines[j + self.g - 1].clone())
    }
}

pub fn g_index(d: usize, e: usize, n: usize) -> usize {
    (d + e).saturating_sub(n)
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

fn axpy<T: Real>(y: &mut [T], a: &T, x: &[T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = yi.clone() - a.clone() * xi.clone();
    }
}

/// Orthonormal basis by modified Gram–Schmidt with one reorthogonalization pass.
/// Returns the basis and log₂ of a condition estimate.
pub fn orthonormalize<T: Real>(vs: &[Vec<T>], bits: u32) -> Result<(Vec<Vec<T>>, f64)> {
    let mant = T::mantissa_bits(bits);
    let mut q: Vec<Vec<T>> = Vec::with_capacity(vs.len());
    let mut max_norm = f64::NEG_INFINITY;
    let mut min_ratio = f64::INFINITY;
    for v in vs {
        let orig = norm(v).log2_abs();
        max_norm = max_norm.max(orig);
        let mut w = v.clone();
        for _ in 0..2 {
            for qi in &q {
                let c = dot(qi, &w);
                axpy(&mut w, &c, qi);
            }
        }
        let nw = norm(&w);
        let ratio = nw.log2_abs() - orig;
        if !(ratio > -(mant as f64) + 8.0) {
            return Err(Error::Precision { suggested_bits: (2 * bits).max(128) });
        }
        min_ratio = min_ratio.min(nw.log2_abs());
        let inv = T::from_i64(1, bits) / nw;
        q.push(w.into_iter().map(|x| x * inv.clone()).collect());
    }
    Ok((q, (max_norm - min_ratio).max(0.0)))
}

/// Singular values of the matrix with the given columns, by one-sided Jacobi.
pub fn singular_values<T: Real>(mut cols: Vec<Vec<T>>, bits: u32) -> Vec<T> {
    let k = cols.len();
    let tol_log2 = -(T::mantissa_bits(bits) as f64) + 2.0;
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..k {
            for r in p + 1..k {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[r], &cols[r]);
                let gamma = dot(&cols[p], &cols[r]);
                if gamma.is_zero() {
                    continue;
                }
                let lg = gamma.log2_abs();
                if lg - 0.5 * (alpha.log2_abs() + beta.log2_abs()) <= tol_log2 {
                    continue;
                }
                rotated = true;
                let two = T::from_i64(2, bits);
                let zeta = (beta - alpha) / (two * gamma);
                let one = T::from_i64(1, bits);
                let sgn = if zeta >= T::zero() { one.clone() } else { -one.clone() };
                let t = sgn / (zeta.abs() + (one.clone() + zeta.clone() * zeta).sqrt());
                let c = one.clone() / (one + t.clone() * t.clone()).sqrt();
                let s = c.clone() * t;
                let (a, b) = (cols[p].clone(), cols[r].clone());
                for i in 0..a.len() {
                    cols[p][i] = c.clone() * a[i].clone() - s.clone() * b[i].clone();
                    cols[r][i] = s.clone() * a[i].clone() + c.clone() * b[i].clone();
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = cols.iter().map(|c| norm(c)).collect();
    sv.sort_by(cmp_real);
    sv
}

fn project_out<T: Real>(qb: &[Vec<T>], v: &[T]) -> Vec<T> {
    let mut w = v.to_vec();
    for _ in 0..2 {
        for q in qb {
            let c = dot(q, &w);
            axpy(&mut w, &c, q);
        }
    }
    w
}

pub fn error_radius<T: Real>(cond_log2: f64, bits: u32) -> T {
    let e = -(T::mantissa_bits(bits) as i64) + cond_log2.ceil() as i64 + 10;
    T::pow2(e.min(0), bits)
}

pub fn principal_sines<T: Real>(a: &SubspaceRealization<T>, b: &SubspaceRealization<T>, ctx: &PrecisionContext) -> Result<AngleSpectrum<T>> {
    if a.n != b.n {
        return Err(Error::DimensionMismatch { expected: a.n, got: b.n });
    }
    let (d, e, n) = (a.dim(), b.dim(), a.n);
    if d == 0 || e == 0 {
        return Err(Error::Invalid("subspaces must be nonzero".into()));
    }
    let bits = ctx.working();
    let (qa, ca) = orthonormalize(&a.generators, bits)?;
    let (qb, cb) = orthonormalize(&b.generators, bits)?;
    let resid: Vec<Vec<T>> = qa.iter().map(|v| project_out(&qb, v)).collect();
    let sv = singular_values(resid, bits);
    let t = d.min(e);
    let mut sines: Vec<T> = sv.into_iter().take(t).map(|s| if s > T::from_i64(1, bits) { T::from_i64(1, bits) } else { s }).collect();
    sines.sort_by(cmp_real);
    Ok(AngleSpectrum { t, g: g_index(d, e, n), sines, error_radius: error_radius(ca.max(cb), bits) })
}

pub fn psi<T: Real>(a: &SubspaceRealization<T>, b: &SubspaceRealization<T>, j: usize, ctx: &PrecisionContext) -> Result<T> {
    let t = a.dim().min(b.dim());
    let g = g_index(a.dim(), b.dim(), a.n);
    if j == 0 || j + g > t {
        return Err(Error::IndexOutOfRange { j, max: t.saturating_sub(g) });
    }
    principal_sines(a, b, ctx)?.psi(j)
}

/// ‖X ∧ Y‖ / (‖X‖‖Y‖), the wedge norm taken from its 2×2 minors.
pub fn omega_pair<T: Real>(x: &[T], y: &[T], ctx: &PrecisionContext) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    let nx = norm(x);
    let ny = norm(y);
    if nx.is_zero() || ny.is_zero() {
        return Err(Error::ZeroVector);
    }
    let mut w = T::zero();
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let m = x[i].clone() * y[j].clone() - x[j].clone() * y[i].clone();
            w = w + m.clone() * m;
        }
    }
    let _ = ctx;
    Ok(w.sqrt() / (nx * ny))
}

/// Determinant of the Gram matrix of the given vectors, by elimination without pivoting
/// (Gram matrices of independent vectors are positive definite).
pub fn gram_det<T: Field>(vs: &[Vec<T>]) -> T {
    let k = vs.len();
    let mut g: Vec<Vec<T>> = (0..k)
        .map(|i| (0..k).map(|j| vs[i].iter().zip(&vs[j]).fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())).collect())
        .collect();
    let mut det = T::one();
    for p in 0..k {
        let piv = g[p][p].clone();
        if piv.is_zero() {
            return T::zero();
        }
        det = det * piv.clone();
        for i in p + 1..k {
            let f = g[i][p].clone() / piv.clone();
            for j in p..k {
                let v = g[i][j].clone() - f.clone() * g[p][j].clone();
                g[i][j] = v;
            }
        }
    }
    det
}

/// φ(A,B)² = det G(A ∪ B) / (det G(A) · det G(B)); exact for exact scalars.
pub fn phi_sq<T: Field>(a: &[Vec<T>], b: &[Vec<T>]) -> Result<T> {
    let n = a.first().or(b.first()).map(|v| v.len()).unwrap_or(0);
    if a.len() + b.len() > n {
        return Err(Error::PhiUndefined(a.len() + b.len(), n));
    }
    let mut both = a.to_vec();
    both.extend_from_slice(b);
    Ok(gram_det(&both) / (gram_det(a) * gram_det(b)))
}

pub fn phi<T: Real>(a: &SubspaceRealization<T>, b: &SubspaceRealization<T>, ctx: &PrecisionContext) -> Result<T> {
    let _ = ctx;
    let v = phi_sq(&a.generators, &b.generators)?;
    Ok(if v < T::zero() { T::zero() } else { v.sqrt() })
}

/// ω₁(Vect(X), C) = ‖X ∧ Z₁ ∧ … ∧ Z_e‖ / (‖X‖ H(C)) with exact integer numerator and denominator.
pub fn line_angle_exact_sq(x: &[BigInt], c: &RationalSubspace) -> Result<BigRational> {
    let w = c.wedge_with(x)?;
    let num = arith::norm_sq(&w);
    let den = arith::norm_sq(x) * c.height_sq();
    if den.is_zero() {
        return Err(Error::ZeroVector);
    }
    Ok(BigRational::new(num, den))
}

pub fn line_angle_exact(x: &[BigInt], c: &RationalSubspace, ctx: &PrecisionContext) -> Result<MpFloat> {
    if c.dim() == c.n() {
        return Ok(MpFloat::from_i64(0, ctx.working()));
    }
    let q = line_angle_exact_sq(x, c)?;
    Ok(MpFloat::from_ratio(&q, ctx.working()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{int_vec, RationalMatrix};

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(128)
    }

    fn real(rows: &[&[i64]]) -> SubspaceRealization<MpFloat> {
        let rows: Vec<IntegerVector> = rows.iter().map(|r| int_vec(r)).collect();
        SubspaceRealization::from_int_rows(&rows, &ctx()).unwrap()
    }

    fn close(a: &MpFloat, b: f64, tol: f64) -> bool {
        (a.to_f64() - b).abs() < tol
    }

    #[test]
    fn omega_examples() {
        let c = ctx();
        let b = c.working();
        let v = |xs: &[i64]| xs.iter().map(|&x| MpFloat::from_i64(x, b)).collect::<Vec<_>>();
        assert!(close(&omega_pair(&v(&[1, 0]), &v(&[0, 1]), &c).unwrap(), 1.0, 1e-30));
        assert!(close(&omega_pair(&v(&[1, 0]), &v(&[1, 1]), &c).unwrap(), 0.5f64.sqrt(), 1e-15));
        let s2 = MpFloat::from_i64(2, b).sqrt();
        let w = omega_pair(&v(&[2, 3]), &[MpFloat::from_i64(1, b), s2], &c).unwrap();
        let expect = (3.0 - 2.0 * 2f64.sqrt()) / (13f64.sqrt() * 3f64.sqrt());
        assert!(close(&w, expect, 1e-15));
        assert!((w.to_f64() - 0.02750).abs() < 5e-5);
        assert!(omega_pair(&v(&[0, 0]), &v(&[1, 0]), &c).is_err());
    }

    #[test]
    fn sines_examples() {
        let c = ctx();
        let s = principal_sines(&real(&[&[1, 0, 0], &[0, 1, 0]]), &real(&[&[1, 0, 0], &[0, 1, 0]]), &c).unwrap();
        assert!(s.sines.iter().all(|x| x.log2_abs() < -100.0));
        let s = principal_sines(&real(&[&[1, 0, 0], &[0, 1, 0]]), &real(&[&[0, 1, 0], &[0, 0, 1]]), &c).unwrap();
        assert_eq!(s.g, 1);
        assert!(s.sines[0].log2_abs() < -100.0);
        assert!(close(&s.sines[1], 1.0, 1e-30));
        assert!(close(&s.psi(1).unwrap(), 1.0, 1e-30));
        assert!(s.psi(2).is_err());
        let s = principal_sines(&real(&[&[1, 0]]), &real(&[&[1, 1]]), &c).unwrap();
        assert!(close(&s.sines[0], 0.5f64.sqrt(), 1e-15));
    }

    #[test]
    fn psi_sqrt2_example() {
        let c = ctx();
        let b = c.working();
        let a = SubspaceRealization::new(vec![vec![MpFloat::from_i64(1, b), MpFloat::from_i64(2, b).sqrt()]], Provenance::Exact).unwrap();
        let p = psi(&a, &real(&[&[2, 3]]), 1, &c).unwrap();
        assert!((p.to_f64() - 0.027500).abs() < 5e-5);
    }

    #[test]
    fn phi_examples() {
        let c = ctx();
        assert!(close(&phi(&real(&[&[1, 0]]), &real(&[&[0, 1]]), &c).unwrap(), 1.0, 1e-30));
        assert!(phi(&real(&[&[1, 0, 0]]), &real(&[&[1, 0, 0], &[0, 1, 0]]), &c).unwrap().log2_abs() < -100.0);
        assert!(close(&phi(&real(&[&[1, 0, 0]]), &real(&[&[1, 1, 0]]), &c).unwrap(), 0.5f64.sqrt(), 1e-30));
        assert!(matches!(phi(&real(&[&[1, 0]]), &real(&[&[1, 1], &[0, 1]]), &c), Err(Error::PhiUndefined(3, 2))));
    }

    #[test]
    fn phi_exact_rational() {
        let q = |x: i64| BigRational::from_integer(x.into());
        let a = vec![vec![q(1), q(0), q(0)]];
        let b = vec![vec![q(1), q(1), q(0)]];
        assert_eq!(phi_sq(&a, &b).unwrap(), BigRational::new(1.into(), 2.into()));
    }

    #[test]
    fn line_angle_examples() {
        let c = ctx();
        let plane = RationalSubspace::from_integer_rows(&[int_vec(&[1, 0, 0]), int_vec(&[0, 1, 0])]).unwrap();
        assert!(close(&line_angle_exact(&int_vec(&[0, 0, 1]), &plane, &c).unwrap(), 1.0, 1e-30));
        let b = crate::lattice::saturate(&RationalMatrix::from_i64_columns(&[&[1, 0, 1], &[0, 1, 1]]).unwrap()).unwrap();
        assert!(line_angle_exact(&int_vec(&[1, 1, 2]), &b, &c).unwrap().is_zero());
        let l = RationalSubspace::from_integer_rows(&[int_vec(&[1, 1, 0])]).unwrap();
        assert!(close(&line_angle_exact(&int_vec(&[1, 0, 0]), &l, &c).unwrap(), 0.5f64.sqrt(), 1e-30));
    }

    #[test]
    fn generic_over_f64_and_f32() {
        let c = ctx();
        let rows = vec![int_vec(&[1, 2, 0]), int_vec(&[0, 1, 1])];
        let other = vec![int_vec(&[1, 0, 0])];
        let a64 = SubspaceRealization::<f64>::from_int_rows(&rows, &c).unwrap();
        let b64 = SubspaceRealization::<f64>::from_int_rows(&other, &c).unwrap();
        let a32 = SubspaceRealization::<f32>::from_int_rows(&rows, &c).unwrap();
        let b32 = SubspaceRealization::<f32>::from_int_rows(&other, &c).unwrap();
        let s64 = psi(&a64, &b64, 1, &c).unwrap();
        let s32 = psi(&a32, &b32, 1, &c).unwrap();
        assert!((s64 - s32 as f64).abs() < 1e-5);
    }
}
