//! Entropic correlation measures, super-selection-rule projections and the
//! PPT-constrained closest-separable-state minimizer.
//!
//! All logarithms are natural, so every measure is in nats. Single-mode
//! measures come in closed form from the Schmidt weights of the mode RDM;
//! two-mode measures need the relative entropy of entanglement
//! `E(ρ) = min_σ S(ρ‖σ)`, minimized here over the PPT set by projected
//! first-order descent. Super-selection rules (parity or particle number)
//! restrict the physically accessible part of both correlation and
//! entanglement; dephasing the state into the corresponding local sectors
//! and adding up per-block contributions gives `I^{P/N}` and `E^{P/N}`.
//!
//! ```
//! use harmonium::model::{HarmoniumSpec, Statistics, FieldRegime};
//! use harmonium::rdm::fermion_mode_occupations;
//! use harmonium::entanglement::spinful_mode_measures;
//!
//! let spec = HarmoniumSpec::one_dimensional(3, 5.0, Statistics::Fermion, FieldRegime::WeakField);
//! let state = spec.build_ground_state().unwrap();
//! let q = fermion_mode_occupations(&state, 0).unwrap();
//! let m = spinful_mode_measures(&q);
//! assert!(0.0 <= m.e_number && m.e_number <= m.e_parity && m.e_parity <= m.e);
//! ```

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::rdm::{DensityMatrix, SchmidtCoefficients};

/// Eigenvalues in `[-PSD_TOLERANCE, 0)` are clipped to zero; anything more
/// negative is a hard error.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Fixed seed of the deterministic multi-start optimizer.
pub const OPTIMIZER_SEED: u64 = 0;

#[derive(Debug, Error)]
pub enum EntanglementError {
    #[error("matrix is not positive semidefinite: eigenvalue {min_eig}")]
    PsdViolation { min_eig: f64 },
    #[error("dimension {dim} does not factor as {da}x{db}")]
    BadSplit { dim: usize, da: usize, db: usize },
    #[error("marginals inconsistent with the joint state: deviation {dev}")]
    InconsistentMarginals { dev: f64 },
    #[error("optimizer failed to converge within {iterations} iterations (residual {residual})")]
    NoConvergence { iterations: usize, residual: f64 },
}

/// Super-selection rule applied to the local mode algebras.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SSRKind {
    None,
    Parity,
    Number,
}

/// Product structure of a two-mode basis: local dimensions and the local
/// particle number carried by each local basis vector.
#[derive(Clone, Debug)]
pub struct ProductSplit {
    pub da: usize,
    pub db: usize,
    pub numbers_a: Vec<u32>,
    pub numbers_b: Vec<u32>,
}

impl ProductSplit {
    /// Spin-ful fermionic pair of modes: 4⊗4 with local occupations
    /// (↑, ↓) as bits.
    pub fn fermion_spinful() -> Self {
        let numbers = vec![0u32, 1, 1, 2];
        Self {
            da: 4,
            db: 4,
            numbers_a: numbers.clone(),
            numbers_b: numbers,
        }
    }

    /// Spin-less fermionic pair of modes: 2⊗2.
    pub fn fermion_spinless() -> Self {
        Self {
            da: 2,
            db: 2,
            numbers_a: vec![0, 1],
            numbers_b: vec![0, 1],
        }
    }

    /// Bosonic pair of modes for an N-particle state: (N+1)⊗(N+1) with the
    /// local number equal to the basis index.
    pub fn boson(n: usize) -> Self {
        let numbers: Vec<u32> = (0..=n as u32).collect();
        Self {
            da: n + 1,
            db: n + 1,
            numbers_a: numbers.clone(),
            numbers_b: numbers,
        }
    }

    fn check(&self, dim: usize) -> Result<(), EntanglementError> {
        if self.da * self.db != dim
            || self.numbers_a.len() != self.da
            || self.numbers_b.len() != self.db
        {
            Err(EntanglementError::BadSplit {
                dim,
                da: self.da,
                db: self.db,
            })
        } else {
            Ok(())
        }
    }
}

/// Clipped eigenvalues of a symmetric matrix; error below `-PSD_TOLERANCE`.
fn clipped_spectrum(m: &DMatrix<f64>) -> Result<Vec<f64>, EntanglementError> {
    let eig = m.clone().symmetric_eigen();
    let mut out = Vec::with_capacity(eig.eigenvalues.len());
    for &l in eig.eigenvalues.iter() {
        if l < -PSD_TOLERANCE {
            return Err(EntanglementError::PsdViolation { min_eig: l });
        }
        out.push(l.max(0.0));
    }
    Ok(out)
}

/// `S(ρ) = -tr ρ ln ρ` with `0·ln 0 = 0`.
pub fn von_neumann_entropy(rho: &DMatrix<f64>) -> Result<f64, EntanglementError> {
    let spec = clipped_spectrum(rho)?;
    Ok(-spec.iter().filter(|&&l| l > 0.0).map(|&l| l * l.ln()).sum::<f64>())
}

/// `S(ρ‖σ) = tr ρ(ln ρ - ln σ)`; `+∞` when the support of `ρ` leaves the
/// support of `σ`.
pub fn relative_entropy(rho: &DMatrix<f64>, sigma: &DMatrix<f64>) -> Result<f64, EntanglementError> {
    let spec_r = clipped_spectrum(rho)?;
    let tr_rho_ln_rho: f64 = spec_r
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| l * l.ln())
        .sum();
    let eig_s = sigma.clone().symmetric_eigen();
    let mut tr_rho_ln_sigma = 0.0;
    for j in 0..sigma.nrows() {
        let mu = eig_s.eigenvalues[j];
        if mu < -PSD_TOLERANCE {
            return Err(EntanglementError::PsdViolation { min_eig: mu });
        }
        let v = eig_s.eigenvectors.column(j);
        let weight = (rho * v).dot(&v);
        if mu <= 1e-300 {
            if weight > 1e-12 {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        tr_rho_ln_sigma += weight * mu.ln();
    }
    Ok((tr_rho_ln_rho - tr_rho_ln_sigma).max(0.0))
}

/// Partial trace over the second (`keep_first = true`) or first factor.
pub fn partial_trace(
    rho: &DMatrix<f64>,
    da: usize,
    db: usize,
    keep_first: bool,
) -> DMatrix<f64> {
    if keep_first {
        let mut out = DMatrix::zeros(da, da);
        for a in 0..da {
            for ap in 0..da {
                let mut s = 0.0;
                for b in 0..db {
                    s += rho[(a * db + b, ap * db + b)];
                }
                out[(a, ap)] = s;
            }
        }
        out
    } else {
        let mut out = DMatrix::zeros(db, db);
        for b in 0..db {
            for bp in 0..db {
                let mut s = 0.0;
                for a in 0..da {
                    s += rho[(a * db + b, a * db + bp)];
                }
                out[(b, bp)] = s;
            }
        }
        out
    }
}

/// `I(ρ_AB) = S(ρ_A) + S(ρ_B) - S(ρ_AB)`, with the supplied marginals
/// checked against the joint state to 1e-8.
pub fn mutual_information(
    rho_ab: &DMatrix<f64>,
    rho_a: &DMatrix<f64>,
    rho_b: &DMatrix<f64>,
    da: usize,
    db: usize,
) -> Result<f64, EntanglementError> {
    let ta = partial_trace(rho_ab, da, db, true);
    let tb = partial_trace(rho_ab, da, db, false);
    let dev_a = (&ta - rho_a).abs().max();
    let dev_b = (&tb - rho_b).abs().max();
    let dev = dev_a.max(dev_b);
    if dev > 1e-8 {
        return Err(EntanglementError::InconsistentMarginals { dev });
    }
    Ok(von_neumann_entropy(rho_a)? + von_neumann_entropy(rho_b)? - von_neumann_entropy(rho_ab)?)
}

fn local_label(number: u32, kind: SSRKind) -> u32 {
    match kind {
        SSRKind::None => 0,
        SSRKind::Parity => number % 2,
        SSRKind::Number => number,
    }
}

/// Pinches the state into the local super-selection sectors: coherences
/// between different local parity (or particle number) on either side are
/// zeroed. Trace-preserving and idempotent.
pub fn ssr_dephase(
    rho: &DMatrix<f64>,
    split: &ProductSplit,
    kind: SSRKind,
) -> Result<DMatrix<f64>, EntanglementError> {
    split.check(rho.nrows())?;
    if kind == SSRKind::None {
        return Ok(rho.clone());
    }
    let mut out = rho.clone();
    for r in 0..rho.nrows() {
        let (ar, br) = (r / split.db, r % split.db);
        for c in 0..rho.ncols() {
            let (ac, bc) = (c / split.db, c % split.db);
            if local_label(split.numbers_a[ar], kind) != local_label(split.numbers_a[ac], kind)
                || local_label(split.numbers_b[br], kind)
                    != local_label(split.numbers_b[bc], kind)
            {
                out[(r, c)] = 0.0;
            }
        }
    }
    Ok(out)
}

/// Transposes the second tensor factor.
pub fn partial_transpose(rho: &DMatrix<f64>, da: usize, db: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(da * db, da * db);
    for a in 0..da {
        for ap in 0..da {
            for b in 0..db {
                for bp in 0..db {
                    out[(a * db + b, ap * db + bp)] = rho[(a * db + bp, ap * db + b)];
                }
            }
        }
    }
    out
}

/// PPT test: `(is_ppt, minimal eigenvalue of the partial transpose)`.
pub fn ppt_check(rho: &DMatrix<f64>, da: usize, db: usize) -> (bool, f64) {
    let pt = partial_transpose(rho, da, db);
    let eig = pt.symmetric_eigen();
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    (min >= -PSD_TOLERANCE, min)
}

/// Result of the closest-separable-state search.
#[derive(Clone, Debug)]
pub struct SeparableResult {
    pub sigma: DMatrix<f64>,
    pub value: f64,
    /// True when PPT is equivalent to separability for these local
    /// dimensions (2⊗2 or 2⊗3), so the value is the exact relative entropy
    /// of entanglement rather than a lower bound.
    pub exact: bool,
}

fn project_block_mask(m: &mut DMatrix<f64>, mask: &DMatrix<bool>) {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if !mask[(r, c)] {
                m[(r, c)] = 0.0;
            }
        }
    }
}

fn clip_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for j in 0..m.nrows() {
        let l = eig.eigenvalues[j].max(0.0);
        if l > 0.0 {
            let v = eig.eigenvectors.column(j);
            out += l * v * v.transpose();
        }
    }
    out
}

/// Projects onto {symmetric, block-masked, PSD, PPT, unit trace} by
/// alternating eigenvalue clipping of the matrix and its partial transpose.
fn project_feasible(
    m: &DMatrix<f64>,
    da: usize,
    db: usize,
    mask: &DMatrix<bool>,
) -> DMatrix<f64> {
    let mut s = (m + m.transpose()) * 0.5;
    for _ in 0..200 {
        project_block_mask(&mut s, mask);
        s = clip_psd(&s);
        let tr = s.trace();
        if tr > 1e-300 {
            s /= tr;
        }
        let (ppt, min_pt) = ppt_check(&s, da, db);
        let min_own = s
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if ppt && min_own >= -1e-12 {
            break;
        }
        let pt = partial_transpose(&s, da, db);
        let clipped = clip_psd(&pt);
        s = partial_transpose(&clipped, da, db);
        s = (&s + s.transpose()) * 0.5;
        let _ = min_pt;
    }
    project_block_mask(&mut s, mask);
    let tr = s.trace();
    if tr > 1e-300 {
        s /= tr;
    }
    s
}

fn objective(rho: &DMatrix<f64>, tr_rho_ln_rho: f64, sigma: &DMatrix<f64>) -> f64 {
    let d = sigma.nrows() as f64;
    let safe = sigma * (1.0 - 1e-12) + DMatrix::identity(sigma.nrows(), sigma.ncols()) * (1e-12 / d);
    let eig = safe.symmetric_eigen();
    let mut tr_rho_ln_sigma = 0.0;
    for j in 0..sigma.nrows() {
        let mu = eig.eigenvalues[j].max(1e-300);
        let v = eig.eigenvectors.column(j);
        tr_rho_ln_sigma += (rho * v).dot(&v) * mu.ln();
    }
    (tr_rho_ln_rho - tr_rho_ln_sigma).max(0.0)
}

/// Euclidean gradient of `-tr ρ ln σ` with respect to `σ` (the variable part
/// of `S(ρ‖σ)`), via the first divided differences of `ln` on σ's spectrum.
fn gradient(rho: &DMatrix<f64>, sigma: &DMatrix<f64>) -> DMatrix<f64> {
    let d = sigma.nrows();
    let safe = sigma * (1.0 - 1e-12) + DMatrix::identity(d, d) * (1e-12 / d as f64);
    let eig = safe.symmetric_eigen();
    let u = &eig.eigenvectors;
    let rho_t = u.transpose() * rho * u;
    let mut core = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let (li, lj) = (eig.eigenvalues[i].max(1e-300), eig.eigenvalues[j].max(1e-300));
            let k = if (li - lj).abs() < 1e-12 * li.max(lj) {
                1.0 / li
            } else {
                (li.ln() - lj.ln()) / (li - lj)
            };
            core[(i, j)] = k * rho_t[(i, j)];
        }
    }
    // Fréchet derivative of tr ρ ln σ; descent on S(ρ‖σ) moves along +G.
    u * core * u.transpose()
}

fn random_separable(
    rng: &mut ChaCha8Rng,
    da: usize,
    db: usize,
    mask: &DMatrix<bool>,
) -> DMatrix<f64> {
    let dim = da * db;
    let mut m = DMatrix::zeros(dim, dim);
    for _ in 0..dim {
        let mut a = DVector::from_fn(da, |_, _| rng.gen::<f64>() - 0.5);
        let mut b = DVector::from_fn(db, |_, _| rng.gen::<f64>() - 0.5);
        if a.norm() < 1e-12 || b.norm() < 1e-12 {
            continue;
        }
        a /= a.norm();
        b /= b.norm();
        let mut prod = DVector::zeros(dim);
        for i in 0..da {
            for j in 0..db {
                prod[i * db + j] = a[i] * b[j];
            }
        }
        m += rng.gen::<f64>() * &prod * prod.transpose();
    }
    let mut s = m;
    project_block_mask(&mut s, mask);
    s = clip_psd(&s);
    let tr = s.trace();
    if tr > 1e-300 {
        s /= tr;
    }
    s
}

/// `E(ρ) = min_{σ ∈ PPT ∩ symmetry} S(ρ‖σ)` by projected first-order
/// descent with 8 deterministic multi-starts (seed 0). Exact for 2⊗2 and
/// 2⊗3, a lower-bound estimate otherwise.
pub fn closest_separable(
    rho: &DMatrix<f64>,
    da: usize,
    db: usize,
) -> Result<SeparableResult, EntanglementError> {
    closest_separable_seeded(rho, da, db, OPTIMIZER_SEED)
}

/// [`closest_separable`] with an explicit multi-start seed.
pub fn closest_separable_seeded(
    rho: &DMatrix<f64>,
    da: usize,
    db: usize,
    seed: u64,
) -> Result<SeparableResult, EntanglementError> {
    let dim = da * db;
    if dim != rho.nrows() {
        return Err(EntanglementError::BadSplit {
            dim: rho.nrows(),
            da,
            db,
        });
    }
    let exact = {
        let (lo, hi) = (da.min(db), da.max(db));
        lo == 1 || (lo == 2 && hi <= 3)
    };
    if da == 1 || db == 1 {
        return Ok(SeparableResult {
            sigma: rho.clone(),
            value: 0.0,
            exact,
        });
    }
    let spec_r = clipped_spectrum(rho)?;
    let tr_rho_ln_rho: f64 = spec_r
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| l * l.ln())
        .sum();

    // Symmetry commutant: σ keeps ρ's zero pattern (diagonal always free).
    let mut mask = DMatrix::from_element(dim, dim, false);
    for r in 0..dim {
        for c in 0..dim {
            mask[(r, c)] = r == c || rho[(r, c)].abs() > 1e-12 || rho[(c, r)].abs() > 1e-12;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<DMatrix<f64>> = Vec::new();
    // Dephased ρ (separable), maximally mixed, PPT projection of ρ itself,
    // then random separable mixtures.
    let mut dephased = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        dephased[(i, i)] = rho[(i, i)].max(0.0);
    }
    starts.push(project_feasible(&dephased, da, db, &mask));
    starts.push(DMatrix::identity(dim, dim) / dim as f64);
    starts.push(project_feasible(rho, da, db, &mask));
    while starts.len() < 8 {
        starts.push(random_separable(&mut rng, da, db, &mask));
    }

    let mut best: Option<(f64, DMatrix<f64>)> = None;
    for start in starts {
        let mut sigma = start;
        let mut f = objective(rho, tr_rho_ln_rho, &sigma);
        let mut window_best = f;
        let mut since_progress = 0usize;
        let mut step = 0.1;
        for _ in 0..100_000usize {
            let g = gradient(rho, &sigma);
            let mut accepted = false;
            let mut t = step;
            for _ in 0..40 {
                let cand = project_feasible(&(&sigma + &g * t), da, db, &mask);
                let fc = objective(rho, tr_rho_ln_rho, &cand);
                if fc < f {
                    sigma = cand;
                    f = fc;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if accepted {
                step = (t * 2.0).min(1.0);
            } else {
                break;
            }
            if window_best - f > 1e-10 {
                window_best = f;
                since_progress = 0;
            } else {
                since_progress += 1;
                if since_progress >= 50 {
                    break;
                }
            }
        }
        if best.as_ref().map_or(true, |(bf, _)| f < *bf) {
            best = Some((f, sigma));
        }
    }
    let (value, sigma) = best.unwrap();
    Ok(SeparableResult {
        sigma,
        value,
        exact,
    })
}

/// Entanglement of the SSR-pinched state, exploiting block additivity: after
/// local pinching the state is block-diagonal over pairs of local sectors,
/// and each block is a small product-structured problem of its own.
pub fn ssr_block_entanglement(
    rho: &DMatrix<f64>,
    split: &ProductSplit,
    kind: SSRKind,
) -> Result<(f64, bool), EntanglementError> {
    ssr_block_entanglement_seeded(rho, split, kind, OPTIMIZER_SEED)
}

/// [`ssr_block_entanglement`] with an explicit multi-start seed.
pub fn ssr_block_entanglement_seeded(
    rho: &DMatrix<f64>,
    split: &ProductSplit,
    kind: SSRKind,
    seed: u64,
) -> Result<(f64, bool), EntanglementError> {
    split.check(rho.nrows())?;
    if kind == SSRKind::None {
        let r = closest_separable_seeded(rho, split.da, split.db, seed)?;
        return Ok((r.value, r.exact));
    }
    let pinched = ssr_dephase(rho, split, kind)?;
    let labels_a: Vec<u32> = split
        .numbers_a
        .iter()
        .map(|&n| local_label(n, kind))
        .collect();
    let labels_b: Vec<u32> = split
        .numbers_b
        .iter()
        .map(|&n| local_label(n, kind))
        .collect();
    let mut dist_a = labels_a.clone();
    dist_a.sort_unstable();
    dist_a.dedup();
    let mut dist_b = labels_b.clone();
    dist_b.sort_unstable();
    dist_b.dedup();
    let mut total = 0.0;
    let mut all_exact = true;
    for &la in &dist_a {
        let idx_a: Vec<usize> = (0..split.da).filter(|&a| labels_a[a] == la).collect();
        for &lb in &dist_b {
            let idx_b: Vec<usize> = (0..split.db).filter(|&b| labels_b[b] == lb).collect();
            let (ba, bb) = (idx_a.len(), idx_b.len());
            let mut block = DMatrix::zeros(ba * bb, ba * bb);
            for (r, &a) in idx_a.iter().enumerate() {
                for (rp, &ap) in idx_a.iter().enumerate() {
                    for (c, &b) in idx_b.iter().enumerate() {
                        for (cp, &bp) in idx_b.iter().enumerate() {
                            block[(r * bb + c, rp * bb + cp)] =
                                pinched[(a * split.db + b, ap * split.db + bp)];
                        }
                    }
                }
            }
            let w = block.trace();
            if w < 1e-14 {
                continue;
            }
            let normalized = &block / w;
            let res = closest_separable_seeded(&normalized, ba, bb, seed)?;
            total += w * res.value;
            all_exact &= res.exact;
        }
    }
    Ok((total, all_exact))
}

/// Correlation and entanglement of a fermionic 16-dimensional two-mode RDM
/// under the given super-selection rule, following the sector reduction:
/// the number rule leaves the singly-occupied 2⊗2 sector, the parity rule
/// adds the even 2⊗2 sector.
pub fn two_mode_ssr_entanglement(
    rho: &DensityMatrix,
    kind: SSRKind,
) -> Result<f64, EntanglementError> {
    let split = ProductSplit::fermion_spinful();
    Ok(ssr_block_entanglement(&rho.matrix, &split, kind)?.0)
}

/// `C = S(σ*‖ρ_A ⊗ ρ_B)`: classical correlation left in the closest
/// separable state.
pub fn classical_correlation(
    sigma_star: &DMatrix<f64>,
    rho_a: &DMatrix<f64>,
    rho_b: &DMatrix<f64>,
) -> Result<f64, EntanglementError> {
    let product = rho_a.kronecker(rho_b);
    relative_entropy(sigma_star, &product)
}

/// The six single-mode measures: total and accessible mutual information and
/// entanglement.
#[derive(Clone, Copy, Debug)]
pub struct ModeMeasures {
    pub i: f64,
    pub e: f64,
    pub i_parity: f64,
    pub i_number: f64,
    pub e_parity: f64,
    pub e_number: f64,
}

fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Pinching correction `Σ_blocks W ln W` for Schmidt weights grouped by the
/// given per-weight labels.
fn block_correction(weights: &[f64], labels: &[u32]) -> f64 {
    let mut sums: std::collections::BTreeMap<u32, f64> = std::collections::BTreeMap::new();
    for (&w, &l) in weights.iter().zip(labels) {
        *sums.entry(l).or_insert(0.0) += w.max(0.0);
    }
    sums.values().map(|&w| xlnx(w)).sum()
}

fn schmidt_measures(weights: &[f64], numbers: &[u32]) -> ModeMeasures {
    let e: f64 = -weights.iter().map(|&w| xlnx(w.max(0.0))).sum::<f64>();
    let parities: Vec<u32> = numbers.iter().map(|&n| n % 2).collect();
    let par = block_correction(weights, &parities);
    let num = block_correction(weights, numbers);
    ModeMeasures {
        i: 2.0 * e,
        e,
        i_parity: 2.0 * e + par,
        i_number: 2.0 * e + num,
        e_parity: e + par,
        e_number: e + num,
    }
}

/// Closed-form measures of a spin-ful fermionic mode with Schmidt weights
/// `(q₀, q₁, q₂, q₃)` over `{Ω, m↑, m↓, m↑m↓}` (local numbers 0, 1, 1, 2).
pub fn spinful_mode_measures(q: &SchmidtCoefficients) -> ModeMeasures {
    schmidt_measures(&q.weights, &[0, 1, 1, 2])
}

/// Measures of a bosonic mode with number distribution `(p₀..p_N)`. The mode
/// RDM is already diagonal in particle number, so `E^N = 0` identically.
pub fn boson_mode_entanglement(p: &SchmidtCoefficients) -> ModeMeasures {
    let numbers: Vec<u32> = (0..p.weights.len() as u32).collect();
    schmidt_measures(&p.weights, &numbers)
}

/// Correlation and entanglement content of a two-mode RDM.
#[derive(Clone, Debug)]
pub struct EntanglementReport {
    pub mutual_information: f64,
    pub entanglement: f64,
    /// True when the entanglement value is exact rather than a PPT lower
    /// bound.
    pub exact: bool,
    pub e_parity: f64,
    pub e_number: f64,
    pub classical_correlation: f64,
}

/// Assembles the full report for a two-mode RDM with the given product
/// structure.
pub fn two_mode_report(
    rho: &DMatrix<f64>,
    split: &ProductSplit,
) -> Result<EntanglementReport, EntanglementError> {
    two_mode_report_seeded(rho, split, OPTIMIZER_SEED)
}

/// [`two_mode_report`] with an explicit multi-start seed.
pub fn two_mode_report_seeded(
    rho: &DMatrix<f64>,
    split: &ProductSplit,
    seed: u64,
) -> Result<EntanglementReport, EntanglementError> {
    split.check(rho.nrows())?;
    let rho_a = partial_trace(rho, split.da, split.db, true);
    let rho_b = partial_trace(rho, split.da, split.db, false);
    let i = mutual_information(rho, &rho_a, &rho_b, split.da, split.db)?;
    let full = closest_separable_seeded(rho, split.da, split.db, seed)?;
    let (e_parity, _) = ssr_block_entanglement_seeded(rho, split, SSRKind::Parity, seed)?;
    let (e_number, _) = ssr_block_entanglement_seeded(rho, split, SSRKind::Number, seed)?;
    let c = classical_correlation(&full.sigma, &rho_a, &rho_b)?;
    Ok(EntanglementReport {
        mutual_information: i,
        entanglement: full.value,
        exact: full.exact,
        e_parity,
        e_number,
        classical_correlation: c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const LN2: f64 = std::f64::consts::LN_2;

    fn mat(d: usize, f: impl Fn(usize, usize) -> f64) -> DMatrix<f64> {
        DMatrix::from_fn(d, d, f)
    }

    fn pure(v: &[f64]) -> DMatrix<f64> {
        let x = DVector::from_row_slice(v);
        let n = x.norm();
        let x = x / n;
        &x * x.transpose()
    }

    #[test]
    fn entropy_basics() {
        let pure4 = mat(4, |r, c| if r == 0 && c == 0 { 1.0 } else { 0.0 });
        assert_relative_eq!(von_neumann_entropy(&pure4).unwrap(), 0.0);
        let mixed = DMatrix::identity(4, 4) / 4.0;
        assert_relative_eq!(von_neumann_entropy(&mixed).unwrap(), 4f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn entropy_rejects_indefinite() {
        let bad = mat(2, |r, c| if r == c { if r == 0 { 1.1 } else { -0.1 } } else { 0.0 });
        assert!(matches!(
            von_neumann_entropy(&bad),
            Err(EntanglementError::PsdViolation { .. })
        ));
    }

    #[test]
    fn relative_entropy_basics() {
        let rho = mat(2, |r, c| if r == 0 && c == 0 { 1.0 } else { 0.0 });
        assert_relative_eq!(relative_entropy(&rho, &rho).unwrap(), 0.0, epsilon = 1e-12);
        let half = DMatrix::identity(2, 2) / 2.0;
        assert_relative_eq!(relative_entropy(&rho, &half).unwrap(), LN2, epsilon = 1e-12);
        // Support violation.
        let sigma = mat(2, |r, c| if r == 1 && c == 1 { 1.0 } else { 0.0 });
        assert!(relative_entropy(&rho, &sigma).unwrap().is_infinite());
    }

    #[test]
    fn relative_entropy_spectral_cross_check() {
        // Commuting pair: S(ρ‖σ) = Σ p (ln p - ln q).
        let p = [0.5, 0.3, 0.15, 0.05];
        let q = [0.25, 0.25, 0.25, 0.25];
        let rho = mat(4, |r, c| if r == c { p[r] } else { 0.0 });
        let sigma = mat(4, |r, c| if r == c { q[r] } else { 0.0 });
        let expect: f64 = p.iter().zip(q).map(|(&a, b)| a * (a.ln() - b.ln())).sum();
        assert_relative_eq!(
            relative_entropy(&rho, &sigma).unwrap(),
            expect,
            epsilon = 1e-12
        );
    }

    #[test]
    fn mutual_information_pure_state() {
        // Bell pair: I = 2 ln 2.
        let rho = pure(&[1.0, 0.0, 0.0, 1.0]);
        let a = partial_trace(&rho, 2, 2, true);
        let b = partial_trace(&rho, 2, 2, false);
        let i = mutual_information(&rho, &a, &b, 2, 2).unwrap();
        assert_relative_eq!(i, 2.0 * LN2, epsilon = 1e-10);
        assert_relative_eq!(a[(0, 0)], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn mutual_information_product_state() {
        let a = mat(2, |r, c| if r == c { if r == 0 { 0.7 } else { 0.3 } } else { 0.0 });
        let rho = a.kronecker(&a);
        let i = mutual_information(&rho, &a, &a, 2, 2).unwrap();
        assert!(i.abs() < 1e-12);
    }

    #[test]
    fn dephasing_is_idempotent_and_trace_preserving() {
        let split = ProductSplit::fermion_spinless();
        let rho = pure(&[0.6, 0.2, 0.2, 0.75]);
        let once = ssr_dephase(&rho, &split, SSRKind::Number).unwrap();
        let twice = ssr_dephase(&once, &split, SSRKind::Number).unwrap();
        assert_relative_eq!(once.trace(), 1.0, epsilon = 1e-12);
        assert!((&once - &twice).abs().max() < 1e-15);
    }

    #[test]
    fn partial_transpose_bell_eigenvalue() {
        let rho = pure(&[1.0, 0.0, 0.0, 1.0]);
        let (ppt, min) = ppt_check(&rho, 2, 2);
        assert!(!ppt);
        assert_relative_eq!(min, -0.5, epsilon = 1e-12);
    }

    #[test]
    fn ppt_accepts_product_state() {
        let a = mat(2, |r, c| if r == c { 0.5 } else { 0.0 });
        let rho = a.kronecker(&a);
        let (ppt, _) = ppt_check(&rho, 2, 2);
        assert!(ppt);
    }

    #[test]
    fn spinful_measures_printed_forms() {
        // Direct comparison with the printed closed forms.
        let q = SchmidtCoefficients {
            weights: vec![0.1, 0.25, 0.3, 0.35],
        };
        let w = &q.weights;
        let m = spinful_mode_measures(&q);
        let e: f64 = -w.iter().map(|&x| x * x.ln()).sum::<f64>();
        let ep = e + (w[1] + w[2]) * (w[1] + w[2]).ln() + (w[0] + w[3]) * (w[0] + w[3]).ln();
        let en = (w[1] + w[2]) * (w[1] + w[2]).ln() - w[1] * w[1].ln() - w[2] * w[2].ln();
        let ip = 2.0 * e + (w[1] + w[2]) * (w[1] + w[2]).ln() + (w[0] + w[3]) * (w[0] + w[3]).ln();
        let inum = 2.0 * e
            + (w[1] + w[2]) * (w[1] + w[2]).ln()
            + w[0] * w[0].ln()
            + w[3] * w[3].ln();
        assert_relative_eq!(m.e, e, epsilon = 1e-14);
        assert_relative_eq!(m.e_parity, ep, epsilon = 1e-14);
        assert_relative_eq!(m.e_number, en, epsilon = 1e-14);
        assert_relative_eq!(m.i_parity, ip, epsilon = 1e-14);
        assert_relative_eq!(m.i_number, inum, epsilon = 1e-14);
    }

    #[test]
    fn spinful_measures_reference_points() {
        let pure_occ = SchmidtCoefficients {
            weights: vec![0.0, 0.0, 0.0, 1.0],
        };
        let m = spinful_mode_measures(&pure_occ);
        for v in [m.i, m.e, m.i_parity, m.i_number, m.e_parity, m.e_number] {
            assert_relative_eq!(v, 0.0, epsilon = 1e-14);
        }
        let flat = SchmidtCoefficients {
            weights: vec![0.25; 4],
        };
        let m = spinful_mode_measures(&flat);
        assert_relative_eq!(m.e, 4f64.ln(), epsilon = 1e-14);
        assert_relative_eq!(m.e_parity, LN2, epsilon = 1e-14);
        assert_relative_eq!(m.e_number, LN2 / 2.0, epsilon = 1e-14);
        assert!(m.e_number <= m.e_parity && m.e_parity <= m.e);
    }

    #[test]
    fn boson_measures() {
        let p = SchmidtCoefficients {
            weights: vec![0.5, 0.0, 0.0, 0.5],
        };
        let m = boson_mode_entanglement(&p);
        assert_relative_eq!(m.e, LN2, epsilon = 1e-14);
        assert_relative_eq!(m.i, 2.0 * LN2, epsilon = 1e-14);
        assert_relative_eq!(m.e_number, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn optimizer_on_separable_state() {
        let a = mat(2, |r, c| if r == c { if r == 0 { 0.8 } else { 0.2 } } else { 0.0 });
        let rho = a.kronecker(&a);
        let res = closest_separable(&rho, 2, 2).unwrap();
        assert!(res.exact);
        assert!(res.value < 1e-8, "value {}", res.value);
    }

    #[test]
    fn optimizer_on_pure_state_matches_schmidt_entropy() {
        // |ψ⟩ = √0.7|00⟩ + √0.3|11⟩: E = -0.7 ln 0.7 - 0.3 ln 0.3.
        let rho = pure(&[0.7f64.sqrt(), 0.0, 0.0, 0.3f64.sqrt()]);
        let res = closest_separable(&rho, 2, 2).unwrap();
        let expect = -(0.7 * 0.7f64.ln() + 0.3 * 0.3f64.ln());
        assert!(res.exact);
        assert!(
            (res.value - expect).abs() < 1e-6,
            "optimizer {} vs entropy {}",
            res.value,
            expect
        );
        // Soundness: σ* is PPT with unit trace.
        let (ppt, _) = ppt_check(&res.sigma, 2, 2);
        assert!(ppt);
        assert_relative_eq!(res.sigma.trace(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn optimizer_dual_path_on_pinched_schmidt_state() {
        // Pure state Σ √q_k |k⟩|k⟩ with local numbers (0,1,1,2): the pinched
        // entanglements must match the closed forms.
        let q = SchmidtCoefficients {
            weights: vec![0.15, 0.3, 0.35, 0.2],
        };
        let mut v = vec![0.0; 16];
        for k in 0..4 {
            v[k * 4 + k] = q.weights[k].sqrt();
        }
        let rho = pure(&v);
        let split = ProductSplit::fermion_spinful();
        let closed = spinful_mode_measures(&q);
        let (en, exact_n) = ssr_block_entanglement(&rho, &split, SSRKind::Number).unwrap();
        let (ep, exact_p) = ssr_block_entanglement(&rho, &split, SSRKind::Parity).unwrap();
        assert!(exact_n && exact_p);
        assert!(
            (en - closed.e_number).abs() < 1e-6,
            "E^N optimizer {en} vs closed {}",
            closed.e_number
        );
        assert!(
            (ep - closed.e_parity).abs() < 1e-6,
            "E^P optimizer {ep} vs closed {}",
            closed.e_parity
        );
    }

    #[test]
    fn pinching_cannot_increase_entanglement() {
        let rho = pure(&[0.5, 0.4, 0.3, 0.7]);
        let split = ProductSplit::fermion_spinless();
        let full = closest_separable(&rho, 2, 2).unwrap().value;
        let (pn, _) = ssr_block_entanglement(&rho, &split, SSRKind::Number).unwrap();
        let (pp, _) = ssr_block_entanglement(&rho, &split, SSRKind::Parity).unwrap();
        assert!(pn <= full + 1e-8);
        assert!(pp <= full + 1e-8);
    }

    #[test]
    fn classical_correlation_of_product_sigma() {
        let a = mat(2, |r, c| if r == c { 0.5 } else { 0.0 });
        let sigma = a.kronecker(&a);
        let c = classical_correlation(&sigma, &a, &a).unwrap();
        assert!(c.abs() < 1e-12);
    }

    #[test]
    fn classical_correlation_diagonal_case() {
        // Classically correlated diagonal state: C equals its mutual
        // information.
        let mut sigma = DMatrix::zeros(4, 4);
        sigma[(0, 0)] = 0.5;
        sigma[(3, 3)] = 0.5;
        let a = partial_trace(&sigma, 2, 2, true);
        let b = partial_trace(&sigma, 2, 2, false);
        let c = classical_correlation(&sigma, &a, &b).unwrap();
        let i = mutual_information(&sigma, &a, &b, 2, 2).unwrap();
        assert_relative_eq!(c, i, epsilon = 1e-10);
    }
}
