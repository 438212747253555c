//! Exact algebra and integration for multivariate polynomials multiplied by
//! centered Gaussian weights.
//!
//! Every matrix element of the Harmonium pipeline reduces to integrals of the
//! form `∫ P(x) exp(-xᵀQx) dx`. Polynomial expansion (Slater determinants,
//! Hermite recurrences) is carried out in exact rational arithmetic where the
//! inputs are rational; conversion to floating point happens only when the
//! Gaussian moments are assembled. Moments are evaluated by the Isserlis/Wick
//! recurrence on exponents rather than by enumerating pair partitions.
//!
//! ```
//! use harmonium::polygauss::{QuadForm, MomentTable, Monomial};
//!
//! // ∫ x² e^{-x²} dx = √π / 2.
//! let table = MomentTable::new(&QuadForm::from_diagonal(&[1.0])).unwrap();
//! let m2 = table.moment(&Monomial::var(0, 2));
//! assert!((m2 - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-14);
//! ```

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num::{BigRational, ToPrimitive, Zero};
use thiserror::Error;

/// Index of a variable within a [`MultiPoly`] or [`QuadForm`].
pub type VarId = usize;

/// Default cap on the size of determinants expanded by [`det_expand`].
pub const DEFAULT_DET_LIMIT: usize = 6;

/// Relative tolerance on the smallest eigenvalue in positive-definiteness
/// checks.
pub const PD_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum PolyGaussError {
    #[error("quadratic form is not positive definite (min eigenvalue {min_eig:e})")]
    NotPositiveDefinite { min_eig: f64 },
    #[error("determinant size {size} exceeds the configured limit {limit}")]
    DeterminantTooLarge { size: usize, limit: usize },
    #[error("determinant matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("quadratic form sub-block on the integrated variables is singular")]
    SingularSubBlock,
    #[error("matrix is not symmetric (max asymmetry {asym:e})")]
    Asymmetric { asym: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// A power product of variables, stored as a dense exponent vector with
/// trailing zeros trimmed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial {
    exps: Vec<u32>,
}

impl Monomial {
    /// The empty product, `1`.
    pub fn unit() -> Self {
        Self { exps: Vec::new() }
    }

    /// `x_v^e`.
    pub fn var(v: VarId, e: u32) -> Self {
        let mut exps = vec![0; v + 1];
        exps[v] = e;
        let mut m = Self { exps };
        m.trim();
        m
    }

    pub fn from_exps(exps: Vec<u32>) -> Self {
        let mut m = Self { exps };
        m.trim();
        m
    }

    fn trim(&mut self) {
        while self.exps.last() == Some(&0) {
            self.exps.pop();
        }
    }

    pub fn exp(&self, v: VarId) -> u32 {
        self.exps.get(v).copied().unwrap_or(0)
    }

    pub fn exps(&self) -> &[u32] {
        &self.exps
    }

    pub fn total_degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    /// Number of variable slots touched (one past the highest used id).
    pub fn span(&self) -> usize {
        self.exps.len()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.exps.len().max(other.exps.len());
        let mut exps = vec![0u32; n];
        for (i, e) in exps.iter_mut().enumerate() {
            *e = self.exp(i) + other.exp(i);
        }
        Self { exps }
    }

    /// Relabel variables through `map[old] = new`.
    pub fn relabel(&self, map: &[Option<VarId>]) -> Self {
        let mut exps = Vec::new();
        for (v, &e) in self.exps.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let new = map[v].expect("relabel map must cover all used variables");
            if exps.len() <= new {
                exps.resize(new + 1, 0);
            }
            exps[new] += e;
        }
        let mut m = Self { exps };
        m.trim();
        m
    }
}

/// Coefficient types usable in a [`MultiPoly`].
pub trait Coeff:
    Clone
    + PartialEq
    + Zero
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + ToPrimitive
{
    fn from_i64(v: i64) -> Self;
}

impl Coeff for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }
}

impl Coeff for BigRational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(v.into())
    }
}

/// A sparse multivariate polynomial. No zero coefficients are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiPoly<C: Coeff> {
    terms: BTreeMap<Monomial, C>,
}

/// Polynomial with exact rational coefficients; used through all structural
/// expansions.
pub type RatPoly = MultiPoly<BigRational>;
/// Polynomial with floating point coefficients; the carrier at moment
/// assembly time.
pub type RealPoly = MultiPoly<f64>;

impl<C: Coeff> MultiPoly<C> {
    pub fn zero() -> Self {
        Self {
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: C) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::unit(), c);
        p
    }

    pub fn one() -> Self {
        Self::constant(C::from_i64(1))
    }

    /// The polynomial `x_v`.
    pub fn var(v: VarId) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::var(v, 1), C::from_i64(1));
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().clone() + c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::total_degree).max().unwrap_or(0)
    }

    /// One past the highest variable id used anywhere in the polynomial.
    pub fn span(&self) -> usize {
        self.terms.keys().map(Monomial::span).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in other.terms.iter() {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in other.terms.iter() {
            out.add_term(m.clone(), c.clone().neg());
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = Self::zero();
        for (m, c) in self.terms.iter() {
            out.add_term(m.clone(), c.clone().neg());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (ma, ca) in self.terms.iter() {
            for (mb, cb) in other.terms.iter() {
                out.add_term(ma.mul(mb), ca.clone() * cb.clone());
            }
        }
        out
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut out = Self::zero();
        for (m, k) in self.terms.iter() {
            out.add_term(m.clone(), k.clone() * c.clone());
        }
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Relabel variables through `map[old] = new`.
    pub fn relabel(&self, map: &[Option<VarId>]) -> Self {
        let mut out = Self::zero();
        for (m, c) in self.terms.iter() {
            out.add_term(m.relabel(map), c.clone());
        }
        out
    }

    /// Convert coefficients to floating point.
    pub fn to_real(&self) -> RealPoly {
        let mut out = RealPoly::zero();
        for (m, c) in self.terms.iter() {
            out.add_term(m.clone(), c.to_f64().expect("coefficient not representable"));
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = NeumaierSum::new();
        for (m, c) in self.terms.iter() {
            let mut v = c.to_f64().expect("coefficient not representable");
            for (i, &e) in m.exps().iter().enumerate() {
                v *= x[i].powi(e as i32);
            }
            acc.add(v);
        }
        acc.value()
    }
}

/// Leibniz expansion of a determinant of polynomials. Limited to `k ≤ limit`
/// because of factorial term growth.
pub fn det_expand_with_limit<C: Coeff>(
    entries: &[Vec<MultiPoly<C>>],
    limit: usize,
) -> Result<MultiPoly<C>, PolyGaussError> {
    let k = entries.len();
    if k > limit {
        return Err(PolyGaussError::DeterminantTooLarge { size: k, limit });
    }
    for (row, r) in entries.iter().enumerate() {
        if r.len() != k {
            return Err(PolyGaussError::NotSquare {
                row,
                len: r.len(),
                expected: k,
            });
        }
    }
    if k == 0 {
        return Ok(MultiPoly::one());
    }
    let mut out = MultiPoly::zero();
    let mut perm: Vec<usize> = (0..k).collect();
    loop {
        let sign = permutation_parity(&perm);
        let mut prod = MultiPoly::one();
        for (row, &col) in perm.iter().enumerate() {
            prod = prod.mul(&entries[row][col]);
        }
        out = if sign { out.sub(&prod) } else { out.add(&prod) };
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(out)
}

/// [`det_expand_with_limit`] with the default cap of 6.
pub fn det_expand<C: Coeff>(entries: &[Vec<MultiPoly<C>>]) -> Result<MultiPoly<C>, PolyGaussError> {
    det_expand_with_limit(entries, DEFAULT_DET_LIMIT)
}

fn permutation_parity(perm: &[usize]) -> bool {
    let mut inversions = 0usize;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                inversions += 1;
            }
        }
    }
    inversions % 2 == 1
}

fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// A symmetric, positive definite quadratic form. The represented weight is
/// `exp(-xᵀ·M·x)`; all Harmonium states are centered, so no linear term is
/// carried.
#[derive(Clone, Debug)]
pub struct QuadForm {
    m: DMatrix<f64>,
}

impl QuadForm {
    /// Builds a quadratic form, symmetrizing the input. Gross asymmetry is
    /// rejected.
    pub fn new(m: DMatrix<f64>) -> Result<Self, PolyGaussError> {
        if !m.is_square() {
            return Err(PolyGaussError::DimensionMismatch(format!(
                "{}x{} quadratic form",
                m.nrows(),
                m.ncols()
            )));
        }
        let asym = (&m - m.transpose()).abs().max();
        let scale = m.abs().max().max(1.0);
        if asym > 1e-9 * scale {
            return Err(PolyGaussError::Asymmetric { asym });
        }
        let sym = (&m + m.transpose()) * 0.5;
        Ok(Self { m: sym })
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self {
            m: DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(d)),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    /// Smallest eigenvalue must exceed `PD_TOLERANCE` times the largest.
    pub fn check_positive_definite(&self) -> Result<(), PolyGaussError> {
        if self.dim() == 0 {
            return Ok(());
        }
        let eigs = self.m.clone().symmetric_eigenvalues();
        let max = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        if min <= PD_TOLERANCE * max.max(0.0) || !min.is_finite() {
            return Err(PolyGaussError::NotPositiveDefinite { min_eig: min });
        }
        Ok(())
    }

    /// Gaussian covariance `Σ = M⁻¹/2`.
    pub fn covariance(&self) -> Result<DMatrix<f64>, PolyGaussError> {
        self.check_positive_definite()?;
        let chol = self
            .m
            .clone()
            .cholesky()
            .ok_or(PolyGaussError::NotPositiveDefinite { min_eig: f64::NAN })?;
        Ok(chol.inverse() * 0.5)
    }

    /// `∫ exp(-xᵀMx) dx = π^{d/2} / sqrt(det M)`.
    pub fn gaussian_normalization(&self) -> Result<f64, PolyGaussError> {
        self.check_positive_definite()?;
        let chol = self
            .m
            .clone()
            .cholesky()
            .ok_or(PolyGaussError::NotPositiveDefinite { min_eig: f64::NAN })?;
        let mut logdet = 0.0;
        for i in 0..self.dim() {
            logdet += chol.l_dirty()[(i, i)].ln();
        }
        Ok((0.5 * self.dim() as f64 * std::f64::consts::PI.ln() - logdet).exp())
    }

    /// Sub-block on the given (sorted) variable ids.
    pub fn sub_block(&self, vars: &[VarId]) -> DMatrix<f64> {
        DMatrix::from_fn(vars.len(), vars.len(), |i, j| self.m[(vars[i], vars[j])])
    }
}

/// Compensated (Neumaier) summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Memoized Gaussian moment evaluator for a fixed quadratic form.
///
/// Moments are computed through the Wick recurrence
/// `E[x_i · x^β] = Σ_j Σ_{ij} β_j E[x^{β-e_j}]` with covariance `Σ = Q⁻¹/2`,
/// so the cost is polynomial in the degree instead of factorial in the number
/// of pairings.
pub struct MomentTable {
    cov: DMatrix<f64>,
    z0: f64,
    memo: RefCell<HashMap<Monomial, f64>>,
}

impl MomentTable {
    pub fn new(quad: &QuadForm) -> Result<Self, PolyGaussError> {
        let cov = quad.covariance()?;
        let z0 = quad.gaussian_normalization()?;
        Ok(Self {
            cov,
            z0,
            memo: RefCell::new(HashMap::new()),
        })
    }

    /// `∫ x^mono exp(-xᵀQx) dx`. Odd total degree vanishes exactly.
    pub fn moment(&self, mono: &Monomial) -> f64 {
        if mono.total_degree() % 2 == 1 {
            return 0.0;
        }
        self.z0 * self.expectation(mono)
    }

    fn expectation(&self, mono: &Monomial) -> f64 {
        if mono.total_degree() == 0 {
            return 1.0;
        }
        if let Some(&v) = self.memo.borrow().get(mono) {
            return v;
        }
        // Reduce on the first variable with a nonzero exponent.
        let i = mono
            .exps()
            .iter()
            .position(|&e| e > 0)
            .expect("nonzero degree");
        let mut beta = mono.exps().to_vec();
        beta[i] -= 1;
        let mut acc = NeumaierSum::new();
        for j in 0..beta.len() {
            if beta[j] == 0 {
                continue;
            }
            let s = self.cov[(i, j)];
            if s == 0.0 {
                continue;
            }
            let mut reduced = beta.clone();
            reduced[j] -= 1;
            acc.add(s * beta[j] as f64 * self.expectation(&Monomial::from_exps(reduced)));
        }
        let v = acc.value();
        self.memo.borrow_mut().insert(mono.clone(), v);
        v
    }
}

/// `∫ x^mono exp(-xᵀQx) dx` over all of ℝⁿ.
pub fn gaussian_moment(quad: &QuadForm, mono: &Monomial) -> Result<f64, PolyGaussError> {
    if mono.span() > quad.dim() {
        return Err(PolyGaussError::DimensionMismatch(format!(
            "monomial uses variable {} but the form has dimension {}",
            mono.span() - 1,
            quad.dim()
        )));
    }
    Ok(MomentTable::new(quad)?.moment(mono))
}

/// Label attaching a variable id to a (particle, spatial axis) pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VarLabel {
    pub particle: usize,
    pub axis: usize,
}

/// `f(x) = poly(x) · exp(-xᵀ·quad·x)`.
#[derive(Clone, Debug)]
pub struct GaussPolyFunction {
    pub poly: RealPoly,
    pub quad: QuadForm,
    pub labels: Vec<VarLabel>,
}

impl GaussPolyFunction {
    pub fn new(poly: RealPoly, quad: QuadForm, labels: Vec<VarLabel>) -> Result<Self, PolyGaussError> {
        if poly.span() > quad.dim() {
            return Err(PolyGaussError::DimensionMismatch(format!(
                "polynomial spans {} variables, quadratic form {}",
                poly.span(),
                quad.dim()
            )));
        }
        if !labels.is_empty() && labels.len() != quad.dim() {
            return Err(PolyGaussError::DimensionMismatch(format!(
                "{} labels for a {}-dimensional form",
                labels.len(),
                quad.dim()
            )));
        }
        Ok(Self { poly, quad, labels })
    }

    pub fn dim(&self) -> usize {
        self.quad.dim()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut q = 0.0;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                q += x[i] * self.quad.entry(i, j) * x[j];
            }
        }
        self.poly.eval(x) * (-q).exp()
    }

    /// Pointwise product of two functions over the same variable set:
    /// polynomials multiply, quadratic forms add.
    pub fn product(&self, other: &Self) -> Result<Self, PolyGaussError> {
        if self.dim() != other.dim() {
            return Err(PolyGaussError::DimensionMismatch(format!(
                "product of {}- and {}-dimensional functions",
                self.dim(),
                other.dim()
            )));
        }
        Self::new(
            self.poly.mul(&other.poly),
            QuadForm::new(self.quad.matrix() + other.quad.matrix())?,
            self.labels.clone(),
        )
    }
}

/// `∫ f(x) dx` over all variables.
pub fn integrate_all(f: &GaussPolyFunction) -> Result<f64, PolyGaussError> {
    let table = MomentTable::new(&f.quad)?;
    let mut acc = NeumaierSum::new();
    for (m, &c) in f.poly.terms() {
        acc.add(c * table.moment(m));
    }
    Ok(acc.value())
}

/// Marginalizes `f` over the variables in `vars`, returning a
/// `GaussPolyFunction` in the remaining variables (relabeled compactly in
/// their original order).
///
/// The Gaussian part follows from the Schur complement of the integrated
/// block; the polynomial part substitutes each integrated variable by its
/// linear conditional mean plus a fluctuation, which is then integrated term
/// by term.
pub fn integrate_subset(
    f: &GaussPolyFunction,
    vars: &BTreeSet<VarId>,
) -> Result<GaussPolyFunction, PolyGaussError> {
    let n = f.dim();
    for &v in vars {
        if v >= n {
            return Err(PolyGaussError::DimensionMismatch(format!(
                "variable {v} out of range for dimension {n}"
            )));
        }
    }
    let v_ids: Vec<VarId> = vars.iter().copied().collect();
    let u_ids: Vec<VarId> = (0..n).filter(|v| !vars.contains(v)).collect();
    let nu = u_ids.len();
    let nv = v_ids.len();
    if nv == 0 {
        return Ok(f.clone());
    }

    let q_vv = f.quad.sub_block(&v_ids);
    let q_uu = f.quad.sub_block(&u_ids);
    let mut q_uv = DMatrix::zeros(nu, nv);
    for (ui, &u) in u_ids.iter().enumerate() {
        for (vi, &v) in v_ids.iter().enumerate() {
            q_uv[(ui, vi)] = f.quad.entry(u, v);
        }
    }
    let vv_form = QuadForm::new(q_vv.clone())?;
    vv_form
        .check_positive_definite()
        .map_err(|_| PolyGaussError::SingularSubBlock)?;
    let chol = q_vv.cholesky().ok_or(PolyGaussError::SingularSubBlock)?;
    let vv_inv = chol.inverse();
    // Schur complement of the integrated block.
    let schur = &q_uu - &q_uv * &vv_inv * q_uv.transpose();
    // Conditional mean of x_V given x_U: m = -Q_VV⁻¹ Q_VU x_U.
    let mean = -(&vv_inv * q_uv.transpose());

    // Relabel map: remaining variables to 0.., integrated fluctuations to nu...
    let mut map = vec![None; n];
    for (new, &old) in u_ids.iter().enumerate() {
        map[old] = Some(new);
    }
    let fluct_id = |vi: usize| nu + vi;

    let table = MomentTable::new(&vv_form)?;
    let mut out = RealPoly::zero();
    for (mono, &coeff) in f.poly.terms() {
        // Substitute x_v -> m_v(x_U) + u_v and expand into the extended
        // variable set [remaining | fluctuations].
        let mut expanded = RealPoly::constant(coeff);
        let mut base = Monomial::unit();
        for (v, &e) in mono.exps().iter().enumerate() {
            if e == 0 {
                continue;
            }
            if let Some(new) = map[v] {
                base = base.mul(&Monomial::var(new, e));
            } else {
                let vi = v_ids.iter().position(|&x| x == v).unwrap();
                let mut lin = RealPoly::var(fluct_id(vi));
                for (ui, _) in u_ids.iter().enumerate() {
                    let c = mean[(vi, ui)];
                    if c != 0.0 {
                        let mut t = RealPoly::zero();
                        t.add_term(Monomial::var(ui, 1), c);
                        lin = lin.add(&t);
                    }
                }
                expanded = expanded.mul(&lin.pow(e));
            }
        }
        // Integrate the fluctuation part of every expanded term.
        for (m, &c) in expanded.terms() {
            let mut u_part = vec![0u32; nu];
            let mut v_part = vec![0u32; nv];
            for (i, &e) in m.exps().iter().enumerate() {
                if i < nu {
                    u_part[i] = e;
                } else {
                    v_part[i - nu] = e;
                }
            }
            let weight = table.moment(&Monomial::from_exps(v_part));
            if weight != 0.0 {
                out.add_term(base.mul(&Monomial::from_exps(u_part)), c * weight);
            }
        }
    }

    let labels = if f.labels.is_empty() {
        Vec::new()
    } else {
        u_ids.iter().map(|&u| f.labels[u]).collect()
    };
    GaussPolyFunction::new(out, QuadForm::new(schur)?, labels)
}
