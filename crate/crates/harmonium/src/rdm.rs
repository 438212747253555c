//! Mode and mode-mode reduced density matrices from ladder-operator
//! expectation values.
//!
//! Every matrix element reduces to a normal-ordered expectation
//! `⟨f†_{i₁}…f†_{i_p} f_{k₁}…f_{k_p}⟩` in the ground state, which in turn is
//! a Gaussian moment integral: the p-particle reduction introduces `p` ket
//! and `p` bra projection coordinates plus `N-p` shared tail coordinates, and
//! the Hermite-mode projections only add polynomial factors and diagonal
//! Gaussian weight. [`ExpectationEngine`] assembles that composite integral
//! and memoizes the underlying moments per reduction order.
//!
//! ```
//! use harmonium::model::{HarmoniumSpec, Statistics, FieldRegime, ModeLabel, Spin};
//! use harmonium::rdm::ExpectationEngine;
//!
//! let spec = HarmoniumSpec::one_dimensional(3, 2.0, Statistics::Fermion, FieldRegime::WeakField);
//! let state = spec.build_ground_state().unwrap();
//! let engine = ExpectationEngine::new(&state);
//!
//! // Occupations over all modes sum to the particle number.
//! let total: f64 = (0..12)
//!     .map(|m| engine.occupation(&ModeLabel::with_spin(vec![m], Spin::Down)).unwrap()
//!            + engine.occupation(&ModeLabel::with_spin(vec![m], Spin::Up)).unwrap())
//!     .sum();
//! assert!((total - 3.0).abs() < 1e-8);
//! ```

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::model::{
    hermite_norm_factor, hermite_polynomial, GroundState, ModeLabel, ModelError, Spin,
};
use crate::polygauss::{
    integrate_subset, GaussPolyFunction, MomentTable, NeumaierSum, PolyGaussError, QuadForm,
    RatPoly, VarLabel,
};

#[derive(Debug, Error)]
pub enum RdmError {
    #[error("operation requires a spin-ful fermionic state")]
    SpinfulRequired,
    #[error("operation requires a single-sector (bosonic or spin-aligned) state")]
    SingleSectorRequired,
    #[error("operation requires a bosonic state")]
    BosonRequired,
    #[error("mode indices must differ")]
    IndexCollision,
    #[error("reduction order {p} out of range 1..={n}")]
    OrderOutOfRange { p: usize, n: usize },
    #[error("mode index is one-dimensional; state has {0} axes")]
    OneDimensionalIndex(usize),
    #[error("closed form undefined at kappa = {kappa}: negative square-root argument")]
    ClosedFormDomain { kappa: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    PolyGauss(#[from] PolyGaussError),
}

/// Ordered occupation-number basis over a declared mode list.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupationBasis {
    /// Modes in strict label order; occupation tuples index into this list.
    pub modes: Vec<ModeLabel>,
    pub entries: Vec<Vec<u32>>,
}

/// A real symmetric density matrix over an occupation basis, annotated with
/// the (local particle number, local parity) of each basis entry.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    pub matrix: DMatrix<f64>,
    pub basis: OccupationBasis,
    pub blocks: Vec<(u32, u8)>,
}

impl DensityMatrix {
    pub(crate) fn new(matrix: DMatrix<f64>, basis: OccupationBasis) -> Self {
        let blocks = basis
            .entries
            .iter()
            .map(|occ| {
                let n: u32 = occ.iter().sum();
                (n, (n % 2) as u8)
            })
            .collect();
        let sym = (&matrix + matrix.transpose()) * 0.5;
        Self {
            matrix: sym,
            basis,
            blocks,
        }
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    pub fn entry_by_occupation(&self, row: &[u32], col: &[u32]) -> Option<f64> {
        let r = self.basis.entries.iter().position(|e| e == row)?;
        let c = self.basis.entries.iter().position(|e| e == col)?;
        Some(self.matrix[(r, c)])
    }
}

/// Non-negative Schmidt weights of a diagonal mode RDM: `(q₀..q₃)` for a
/// spin-ful fermionic mode, `(p₀..p_N)` for a bosonic mode.
#[derive(Clone, Debug)]
pub struct SchmidtCoefficients {
    pub weights: Vec<f64>,
}

impl SchmidtCoefficients {
    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Evaluates normal-ordered ladder-operator expectations in a fixed ground
/// state, caching the composite moment table per reduction order.
pub struct ExpectationEngine<'a> {
    state: &'a GroundState,
    tables: RefCell<HashMap<usize, Rc<MomentTable>>>,
}

impl<'a> ExpectationEngine<'a> {
    pub fn new(state: &'a GroundState) -> Self {
        Self {
            state,
            tables: RefCell::new(HashMap::new()),
        }
    }

    pub fn state(&self) -> &GroundState {
        self.state
    }

    /// Composite Gaussian for reduction order `p`: variables are `p` ket
    /// slots, `p` bra slots, then `N-p` shared tail slots (each `dims` axes
    /// wide). The ground-state quadratic form enters once on (ket, tail) and
    /// once on (bra, tail); every projection variable gets an extra `1/2` on
    /// the diagonal from its Hermite-function weight.
    fn table(&self, p: usize) -> Result<Rc<MomentTable>, RdmError> {
        if let Some(t) = self.tables.borrow().get(&p) {
            return Ok(t.clone());
        }
        let n = self.state.particle_count();
        let d = self.state.dims();
        let dim = (n + p) * d;
        let q = self.state.quad().matrix();
        let mut qc = DMatrix::zeros(dim, dim);
        let ket = |slot: usize| if slot < p { slot } else { slot + p };
        let bra = |slot: usize| slot + p;
        for a in 0..n {
            for b in 0..n {
                for ax in 0..d {
                    for bx in 0..d {
                        let v = q[(a * d + ax, b * d + bx)];
                        qc[(ket(a) * d + ax, ket(b) * d + bx)] += v;
                        qc[(bra(a) * d + ax, bra(b) * d + bx)] += v;
                    }
                }
            }
        }
        for v in 0..2 * p * d {
            qc[(v, v)] += 0.5;
        }
        let table = Rc::new(MomentTable::new(&QuadForm::new(qc)?)?);
        self.tables.borrow_mut().insert(p, table.clone());
        Ok(table)
    }

    /// `⟨ c†_{cre₁}…c†_{cre_p} c_{ann₁}…c_{ann_p} ⟩` for fermionic or bosonic
    /// ladder operators in the mode basis of renormalized Hermite functions.
    /// Mismatched operator counts or `p > N` give zero by number
    /// conservation.
    pub fn ladder(&self, cre: &[ModeLabel], ann: &[ModeLabel]) -> Result<f64, RdmError> {
        let p = cre.len();
        if p != ann.len() {
            return Ok(0.0);
        }
        let n = self.state.particle_count();
        if p == 0 {
            return Ok(1.0);
        }
        if p > n {
            return Ok(0.0);
        }
        let d = self.state.dims();
        let ket_var = |slot: usize, ax: usize| {
            if slot < p {
                slot * d + ax
            } else {
                (slot + p) * d + ax
            }
        };
        let bra_var = |slot: usize, ax: usize| (slot + p) * d + ax;

        // Ket slot s carries the annihilator that acts first from the right,
        // bra slot s the s-th creation operator.
        let ket_modes: Vec<&ModeLabel> = (0..p).map(|s| &ann[p - 1 - s]).collect();
        let bra_modes: Vec<&ModeLabel> = (0..p).map(|s| &cre[s]).collect();

        let mut proj = RatPoly::one();
        for s in 0..p {
            for ax in 0..d {
                proj = proj.mul(&hermite_polynomial(ket_modes[s].mu[ax], ket_var(s, ax)));
                proj = proj.mul(&hermite_polynomial(bra_modes[s].mu[ax], bra_var(s, ax)));
            }
        }
        let ket_map: Vec<Option<usize>> = (0..n * d)
            .map(|v| Some(ket_var(v / d, v % d)))
            .collect();
        let bra_map: Vec<Option<usize>> = (0..n * d)
            .map(|v| Some(bra_var(v / d, v % d)))
            .collect();

        let table = self.table(p)?;
        let mut acc = NeumaierSum::new();
        for ks in self.state.sectors() {
            if !(0..p).all(|s| ks.spins[s] == ket_modes[s].spin) {
                continue;
            }
            for bs in self.state.sectors() {
                if !(0..p).all(|s| bs.spins[s] == bra_modes[s].spin) {
                    continue;
                }
                if ks.spins[p..] != bs.spins[p..] {
                    continue;
                }
                let poly = ks
                    .poly
                    .relabel(&ket_map)
                    .mul(&bs.poly.relabel(&bra_map))
                    .mul(&proj)
                    .to_real();
                for (m, &c) in poly.terms() {
                    acc.add(c * table.moment(m));
                }
            }
        }

        let mut pref = 1.0f64;
        for mode in cre.iter().chain(ann.iter()) {
            for &mu in &mode.mu {
                pref *= hermite_norm_factor(mu);
            }
        }
        let mut falling = 1.0f64;
        for k in (n - p + 1)..=n {
            falling *= k as f64;
        }
        Ok(falling * pref / self.state.scaled_norm_sq() * acc.value())
    }

    /// `⟨n_mode⟩` for a single (possibly spin-labeled) mode.
    pub fn occupation(&self, mode: &ModeLabel) -> Result<f64, RdmError> {
        self.ladder(std::slice::from_ref(mode), std::slice::from_ref(mode))
    }

    /// Schmidt weights `(q₀, q₁, q₂, q₃)` of the spin-ful mode RDM over
    /// `{Ω, m↑, m↓, m↑m↓}` for the spatial mode `mu`.
    pub fn mode_weights(&self, mu: &[u32]) -> Result<SchmidtCoefficients, RdmError> {
        if !self.state.is_spinful() {
            return Err(RdmError::SpinfulRequired);
        }
        let up = ModeLabel::with_spin(mu.to_vec(), Spin::Up);
        let dn = ModeLabel::with_spin(mu.to_vec(), Spin::Down);
        let p1 = self.occupation(&up)?;
        let p2 = self.occupation(&dn)?;
        let p3 = self.ladder(&[up.clone(), dn.clone()], &[dn, up])?;
        Ok(SchmidtCoefficients {
            weights: vec![1.0 - p1 - p2 + p3, p1 - p3, p2 - p3, p3],
        })
    }

    /// Occupation-basis projector expectation
    /// `⟨ C(col) Π_{a∉supp} (1-n_a) A(row) ⟩` over the given orbital list,
    /// expanded by inclusion-exclusion into normal-ordered ladder strings
    /// with the fermionic reordering sign.
    fn occupation_projector(
        &self,
        orbitals: &[ModeLabel],
        row: &[u32],
        col: &[u32],
    ) -> Result<f64, RdmError> {
        let k = orbitals.len();
        let comp: Vec<usize> = (0..k).filter(|&a| row[a] == 0 && col[a] == 0).collect();
        let col_orbs: Vec<ModeLabel> = (0..k)
            .filter(|&a| col[a] == 1)
            .map(|a| orbitals[a].clone())
            .collect();
        let row_orbs_desc: Vec<ModeLabel> = (0..k)
            .rev()
            .filter(|&a| row[a] == 1)
            .map(|a| orbitals[a].clone())
            .collect();
        let mut acc = NeumaierSum::new();
        for subset in crate::model::combinations(comp.len(), 0)
            .into_iter()
            .chain((1..=comp.len()).flat_map(|m| crate::model::combinations(comp.len(), m)))
        {
            let s: Vec<ModeLabel> = subset.iter().map(|&i| orbitals[comp[i]].clone()).collect();
            let m = s.len();
            let sign = if (m + m * m.saturating_sub(1) / 2) % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            let mut cre = col_orbs.clone();
            cre.extend(s.iter().cloned());
            let mut ann = s.clone();
            ann.extend(row_orbs_desc.iter().cloned());
            acc.add(sign * self.ladder(&cre, &ann)?);
        }
        Ok(acc.value())
    }

    /// Two-mode RDM over the given ordered orbital list (4 spin-orbitals for
    /// the spin-ful case, 2 for spin-less). Entries connecting different
    /// local particle numbers are hard zeros by global number conservation.
    fn occupation_rdm(&self, orbitals: &[ModeLabel]) -> Result<DensityMatrix, RdmError> {
        let k = orbitals.len();
        let dim = 1usize << k;
        let occ = |idx: usize| -> Vec<u32> {
            (0..k).map(|a| ((idx >> (k - 1 - a)) & 1) as u32).collect()
        };
        let entries: Vec<Vec<u32>> = (0..dim).map(occ).collect();
        let mut m = DMatrix::zeros(dim, dim);
        for r in 0..dim {
            for c in r..dim {
                let nr: u32 = entries[r].iter().sum();
                let nc: u32 = entries[c].iter().sum();
                if nr != nc {
                    continue;
                }
                let v = self.occupation_projector(orbitals, &entries[r], &entries[c])?;
                m[(r, c)] = v;
                m[(c, r)] = v;
            }
        }
        Ok(DensityMatrix::new(
            m,
            OccupationBasis {
                modes: orbitals.to_vec(),
                entries,
            },
        ))
    }
}

fn require_1d(state: &GroundState) -> Result<(), RdmError> {
    if state.dims() == 1 {
        Ok(())
    } else {
        Err(RdmError::OneDimensionalIndex(state.dims()))
    }
}

/// Schmidt weights `(q₀, q₁, q₂, q₃)` of the RDM of spatial mode `m` in a
/// one-dimensional spin-ful fermionic state.
pub fn fermion_mode_occupations(
    state: &GroundState,
    m: usize,
) -> Result<SchmidtCoefficients, RdmError> {
    require_1d(state)?;
    ExpectationEngine::new(state).mode_weights(&[m as u32])
}

/// The p-particle reduced kernel `ρ^(p)(x₁..x_p; x₁'..x_p')` of a
/// single-sector state, normalized to `tr ρ^(p) = 1`. Variables are the `p`
/// unprimed slots followed by the `p` primed slots.
pub fn particle_rdm_kernel(state: &GroundState, p: usize) -> Result<GaussPolyFunction, RdmError> {
    let n = state.particle_count();
    if p == 0 || p > n {
        return Err(RdmError::OrderOutOfRange { p, n });
    }
    let d = state.dims();
    let wf = state
        .wavefunction()
        .map_err(|_| RdmError::SingleSectorRequired)?;
    let dim = (n + p) * d;
    let ket_map: Vec<Option<usize>> = (0..n * d).map(Some).collect();
    let bra_map: Vec<Option<usize>> = (0..n * d)
        .map(|v| {
            let (slot, ax) = (v / d, v % d);
            Some(if slot < p { (n + slot) * d + ax } else { v })
        })
        .collect();
    let poly = wf.poly.relabel(&ket_map).mul(&wf.poly.relabel(&bra_map));
    let mut qc = DMatrix::zeros(dim, dim);
    for a in 0..n * d {
        for b in 0..n * d {
            let v = wf.quad.entry(a, b);
            qc[(ket_map[a].unwrap(), ket_map[b].unwrap())] += v;
            qc[(bra_map[a].unwrap(), bra_map[b].unwrap())] += v;
        }
    }
    let labels = (0..n + p)
        .flat_map(|slot| (0..d).map(move |axis| VarLabel { particle: slot, axis }))
        .collect();
    let joint = GaussPolyFunction::new(poly, QuadForm::new(qc)?, labels)?;
    let tail: BTreeSet<usize> = (p * d..n * d).collect();
    Ok(integrate_subset(&joint, &tail)?)
}

/// Full 16-dimensional two-mode RDM of spatial modes `i` and `j` of a
/// one-dimensional spin-ful fermionic state, over the occupation basis of the
/// orbitals `(i↑, i↓, j↑, j↓)` in that order.
pub fn fermion_two_mode_rdm(
    state: &GroundState,
    i: usize,
    j: usize,
) -> Result<DensityMatrix, RdmError> {
    require_1d(state)?;
    if i == j {
        return Err(RdmError::IndexCollision);
    }
    if !state.is_spinful() {
        return Err(RdmError::SpinfulRequired);
    }
    let orbitals = vec![
        ModeLabel::with_spin(vec![i as u32], Spin::Up),
        ModeLabel::with_spin(vec![i as u32], Spin::Down),
        ModeLabel::with_spin(vec![j as u32], Spin::Up),
        ModeLabel::with_spin(vec![j as u32], Spin::Down),
    ];
    ExpectationEngine::new(state).occupation_rdm(&orbitals)
}

/// 4-dimensional two-mode RDM of spatial modes `i` and `j` of a spin-less
/// (strong-field) one-dimensional fermionic state, over `(n_i, n_j)`.
pub fn fermion_two_mode_rdm_spinless(
    state: &GroundState,
    i: usize,
    j: usize,
) -> Result<DensityMatrix, RdmError> {
    require_1d(state)?;
    if i == j {
        return Err(RdmError::IndexCollision);
    }
    if state.is_spinful() {
        return Err(RdmError::SingleSectorRequired);
    }
    let orbitals = vec![
        ModeLabel::spatial_1d(i as u32),
        ModeLabel::spatial_1d(j as u32),
    ];
    ExpectationEngine::new(state).occupation_rdm(&orbitals)
}

/// Diagonal weights `(p₀..p_N)` of the bosonic mode RDM: `p_k` is the
/// probability of finding exactly `k` bosons in spatial mode `m`. Uses the
/// normal-ordered vacuum-projector expansion
/// `|k⟩⟨k| = Σ_j (-1)^j/(k!j!) (b†)^{k+j} b^{k+j}`.
pub fn boson_mode_rdm(state: &GroundState, m: usize) -> Result<SchmidtCoefficients, RdmError> {
    require_1d(state)?;
    if state.spec().statistics != crate::model::Statistics::Boson {
        return Err(RdmError::BosonRequired);
    }
    let n = state.particle_count();
    let engine = ExpectationEngine::new(state);
    let mode = ModeLabel::spatial_1d(m as u32);
    let mut moments = vec![1.0f64];
    for q in 1..=n {
        let ops = vec![mode.clone(); q];
        moments.push(engine.ladder(&ops, &ops)?);
    }
    let mut weights = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let mut acc = NeumaierSum::new();
        for j in 0..=(n - k) {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc.add(sign / (factorial(k) * factorial(j)) * moments[k + j]);
        }
        weights.push(acc.value());
    }
    Ok(SchmidtCoefficients { weights })
}

/// Two-mode RDM of bosonic spatial modes `m` and `n` over the product basis
/// `|i⟩_m ⊗ |j⟩_n` with `i, j ∈ 0..=N` (entries with `i+j > N` have no
/// support). Basis index is `i·(N+1) + j`.
pub fn boson_two_mode_rdm(
    state: &GroundState,
    m: usize,
    n: usize,
) -> Result<DensityMatrix, RdmError> {
    require_1d(state)?;
    if m == n {
        return Err(RdmError::IndexCollision);
    }
    if state.spec().statistics != crate::model::Statistics::Boson {
        return Err(RdmError::BosonRequired);
    }
    let np = state.particle_count();
    let engine = ExpectationEngine::new(state);
    let mode_m = ModeLabel::spatial_1d(m as u32);
    let mode_n = ModeLabel::spatial_1d(n as u32);
    let side = np + 1;
    let dim = side * side;
    let entries: Vec<Vec<u32>> = (0..dim)
        .map(|idx| vec![(idx / side) as u32, (idx % side) as u32])
        .collect();
    let ladder_string = |cm: usize, cn: usize, am: usize, an: usize| -> Result<f64, RdmError> {
        let mut cre = vec![mode_m.clone(); cm];
        cre.extend(vec![mode_n.clone(); cn]);
        let mut ann = vec![mode_n.clone(); an];
        ann.extend(vec![mode_m.clone(); am]);
        engine.ladder(&cre, &ann)
    };
    let mut mat = DMatrix::zeros(dim, dim);
    for r in 0..dim {
        let (ip, jp) = (r / side, r % side);
        if ip + jp > np {
            continue;
        }
        for c in r..dim {
            let (i, j) = (c / side, c % side);
            if i + j > np || i + j != ip + jp {
                continue;
            }
            let norm = (factorial(i) * factorial(j) * factorial(ip) * factorial(jp)).sqrt();
            let mut acc = NeumaierSum::new();
            for u in 0..=(np.saturating_sub((ip + jp).max(i + j))) {
                for v in 0..=(np.saturating_sub((ip + jp).max(i + j) + u)) {
                    let sign = if (u + v) % 2 == 0 { 1.0 } else { -1.0 };
                    acc.add(
                        sign / (factorial(u) * factorial(v))
                            * ladder_string(ip + u, jp + v, i + u, j + v)?,
                    );
                }
            }
            let v = acc.value() / norm;
            mat[(r, c)] = v;
            mat[(c, r)] = v;
        }
    }
    let modes = vec![mode_m, mode_n];
    Ok(DensityMatrix::new(
        mat,
        OccupationBasis { modes, entries },
    ))
}

/// Closed-form Schmidt weights of mode 0 for the three-fermion weak-field
/// state in one dimension. The algebraic expressions give the occupation
/// expectations `⟨n↑⟩`, `⟨n↓⟩` and `⟨n↑n↓⟩` in terms of
/// `a = 1/(2l̃²)`, `b = -(1/l² - 1/l̃²)/6`; the Schmidt weights follow by the
/// same subtraction used for the computed RDM.
pub fn qi_closed_form_n3_mode0(kappa: f64) -> Result<SchmidtCoefficients, RdmError> {
    if kappa <= -1.0 {
        return Err(RdmError::ClosedFormDomain { kappa });
    }
    // l = 1, so 1/l̃² = √(1+κ).
    let inv_lt2 = (1.0 + kappa).sqrt();
    let a = 0.5 * inv_lt2;
    let b = -(1.0 - inv_lt2) / 6.0;
    let sq = |x: f64| -> Result<f64, RdmError> {
        if x < 0.0 {
            Err(RdmError::ClosedFormDomain { kappa })
        } else {
            Ok(x.sqrt())
        }
    };
    let p1 = 2.0 * sq(a)? * sq(a * (a - 3.0 * b) / (a - 2.0 * b))?
        / (sq((2.0 * a * a - 5.0 * a * b + b * b) / (a - 2.0 * b))?
            * sq(a * (4.0 * a * a - 12.0 * a * b + 5.0 * b * b)
                / (2.0 * a * a - 5.0 * a * b + b * b))?);
    let p2 = 2.0
        * sq(a)?.powi(3)
        * sq(a * (a - 3.0 * b) / (a - 2.0 * b))?
        * (4.0 * a * a - 12.0 * a * b + 7.0 * b * b)
        / ((a - 2.0 * b)
            * sq((2.0 * a * a - 5.0 * a * b + b * b) / (a - 2.0 * b))?.powi(3)
            * sq(a * (4.0 * a * a - 12.0 * a * b + 5.0 * b * b)
                / (2.0 * a * a - 5.0 * a * b + b * b))?
            .powi(3));
    let p3 = sq(a - 3.0 * b)?
        * (2.0 * a - 3.0 * b).powi(2)
        * sq((4.0 * a * a - 6.0 * a * b + b * b) / (a - b))?
        * sq(a * (2.0 * a * a - 4.0 * a * b + b * b) / (4.0 * a * a - 6.0 * a * b + b * b))?
        * sq(a * (a * a - 3.0 * a * b + 2.0 * b * b) / (4.0 * a * a - 10.0 * a * b + 5.0 * b * b))?
        * sq(a * (4.0 * a * a - 10.0 * a * b + 5.0 * b * b)
            / (2.0 * a * a - 4.0 * a * b + b * b))?
        / (4.0 * a * (a - 2.0 * b).powi(2) * sq(a - b)?.powi(3));
    Ok(SchmidtCoefficients {
        weights: vec![1.0 - p1 - p2 + p3, p1 - p3, p2 - p3, p3],
    })
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|x| x as f64).product()
}
