//! The Harmonium model: coupling parametrization, occupied-mode selection and
//! explicit construction of the bosonic and fermionic ground states.
//!
//! Harmonium confines `N` particles of mass `m` in a harmonic trap with
//! frequencies `ω^(α)` per spatial axis and couples every pair harmonically.
//! The interaction only renormalizes the length scales,
//! `l̃ = l·(1+κ)^(-1/4)` with the dimensionless coupling
//! `κ = (l/l̃)⁴ - 1`, and adds a centre-of-mass Gaussian factor to the ground
//! state. Bound states require `κ > -1`.
//!
//! Internally all wavefunctions are kept in scaled coordinates `y = x/l̃`
//! (per axis), so the Slater-determinant polynomial part has exact integer
//! coefficients and the Gaussian part is a small dense quadratic form.

use num::BigRational;
use thiserror::Error;

use crate::polygauss::{
    det_expand_with_limit, GaussPolyFunction, MomentTable, PolyGaussError, QuadForm,
    RatPoly, RealPoly, VarLabel,
};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("no bound state: kappa = {kappa} on axis {axis} must exceed -1")]
    NoBoundState { kappa: f64, axis: usize },
    #[error("unsupported spatial dimension {0}; only 1 and 2 are implemented")]
    UnsupportedDims(usize),
    #[error("particle count must be at least 1")]
    NoParticles,
    #[error("degenerate filling at the Fermi level between modes {first:?} and {second:?}")]
    DegenerateFilling { first: ModeLabel, second: ModeLabel },
    #[error("duplicate occupied mode {0:?} violates the exclusion principle")]
    DuplicateMode(ModeLabel),
    #[error("weak-field configurations are tabulated only for N <= 5 in one dimension")]
    WeakFieldUnsupported,
    #[error("explicit mode list must contain exactly {expected} modes, got {got}")]
    ModeCountMismatch { expected: usize, got: usize },
    #[error(transparent)]
    PolyGauss(#[from] PolyGaussError),
}

/// Particle statistics of the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Fermion,
    Boson,
}

impl std::str::FromStr for Statistics {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fermion" => Ok(Statistics::Fermion),
            "boson" => Ok(Statistics::Boson),
            other => Err(format!(
                "unknown statistics '{other}' (expected fermion or boson)"
            )),
        }
    }
}

/// Spin projection carried by a mode. Spin-less configurations use `None`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spin {
    Up,
    Down,
    None,
}

/// External-field regime selecting the ground-state spin configuration.
///
/// The Zeeman field magnitude itself is not a numeric input: regime
/// thresholds lie at `|B| ∈ (k, k+1)·(ħ/c_s)·ω·√(1+κ)` and the caller picks
/// the regime directly.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldRegime {
    /// All spins aligned; equivalent to spin-less particles.
    StrongField,
    /// Explicit spin configuration; fills the spin-down ladder first, then
    /// spin-up, matching the tabulated weak-field ground states.
    WeakField,
    /// User-supplied occupied mode list (checked against exclusion).
    Explicit(Vec<ModeLabel>),
}

/// Whether 2D mode filling orders single-particle energies by the
/// interaction-renormalized frequencies `ω̃` or the bare trap frequencies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FillOrdering {
    #[default]
    Renormalized,
    Bare,
}

/// A single-particle mode: Hermite degrees per axis plus a spin label.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeLabel {
    pub mu: Vec<u32>,
    pub spin: Spin,
}

impl ModeLabel {
    pub fn spatial_1d(mu: u32) -> Self {
        Self {
            mu: vec![mu],
            spin: Spin::None,
        }
    }

    pub fn with_spin(mu: Vec<u32>, spin: Spin) -> Self {
        Self { mu, spin }
    }
}

/// Model parameters.
#[derive(Clone, Debug)]
pub struct HarmoniumSpec {
    pub particle_count: usize,
    pub dims: usize,
    /// Trap frequencies per axis in units of `ω^(1)` (so `omegas[0] = 1`).
    pub omegas: Vec<f64>,
    /// Dimensionless couplings per axis; each must exceed -1.
    pub kappas: Vec<f64>,
    pub statistics: Statistics,
    pub regime: FieldRegime,
    pub fill_ordering: FillOrdering,
}

impl HarmoniumSpec {
    /// One-dimensional model with a single coupling.
    pub fn one_dimensional(
        particle_count: usize,
        kappa: f64,
        statistics: Statistics,
        regime: FieldRegime,
    ) -> Self {
        Self {
            particle_count,
            dims: 1,
            omegas: vec![1.0],
            kappas: vec![kappa],
            statistics,
            regime,
            fill_ordering: FillOrdering::default(),
        }
    }

    /// Two-dimensional model with detuning `ω_y/ω_x` and the same coupling on
    /// both axes.
    pub fn two_dimensional(
        particle_count: usize,
        omega_ratio: f64,
        kappa: f64,
        statistics: Statistics,
        regime: FieldRegime,
    ) -> Self {
        Self {
            particle_count,
            dims: 2,
            omegas: vec![1.0, omega_ratio],
            kappas: vec![kappa, kappa],
            statistics,
            regime,
            fill_ordering: FillOrdering::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.particle_count == 0 {
            return Err(ModelError::NoParticles);
        }
        if !(1..=2).contains(&self.dims) {
            return Err(ModelError::UnsupportedDims(self.dims));
        }
        for (axis, &k) in self.kappas.iter().enumerate() {
            if k <= -1.0 {
                return Err(ModelError::NoBoundState { kappa: k, axis });
            }
        }
        Ok(())
    }

    pub fn build_ground_state(&self) -> Result<GroundState, ModelError> {
        GroundState::build(self)
    }
}

/// Natural and interaction-renormalized length scales per axis.
#[derive(Clone, Debug)]
pub struct LengthScales {
    pub l: Vec<f64>,
    pub l_tilde: Vec<f64>,
    pub omega_tilde: Vec<f64>,
}

/// `l̃ = l·(1+κ)^(-1/4)`, `ω̃ = ω·√(1+κ)` per axis.
pub fn kappa_to_scales(spec: &HarmoniumSpec) -> Result<LengthScales, ModelError> {
    spec.validate()?;
    let mut l = Vec::new();
    let mut l_tilde = Vec::new();
    let mut omega_tilde = Vec::new();
    for axis in 0..spec.dims {
        let om = spec.omegas[axis];
        let kap = spec.kappas[axis];
        let la = om.powf(-0.5);
        l.push(la);
        l_tilde.push(la * (1.0 + kap).powf(-0.25));
        omega_tilde.push(om * (1.0 + kap).sqrt());
    }
    Ok(LengthScales {
        l,
        l_tilde,
        omega_tilde,
    })
}

/// Physicists' Hermite polynomial `H_ν` in variable `var`, built from the
/// recurrence `H_{ν+1} = 2x·H_ν - 2ν·H_{ν-1}` with exact coefficients.
pub fn hermite_polynomial(nu: u32, var: usize) -> RatPoly {
    let two_x = RatPoly::var(var).scale(&BigRational::from_integer(2.into()));
    let mut prev = RatPoly::one();
    if nu == 0 {
        return prev;
    }
    let mut cur = two_x.clone();
    for n in 1..nu {
        let next = two_x
            .mul(&cur)
            .sub(&prev.scale(&BigRational::from_integer((2 * n as i64).into())));
        prev = cur;
        cur = next;
    }
    cur
}

/// The ν-th normalized Hermite function
/// `φ_ν(x) = (2^ν ν! √π l)^{-1/2} H_ν(x/l) exp(-x²/2l²)` as a one-variable
/// [`GaussPolyFunction`].
pub fn hermite_function(nu: u32, l: f64) -> GaussPolyFunction {
    assert!(l > 0.0, "length scale must be positive");
    let norm = hermite_norm_factor(nu) / l.sqrt();
    let mut poly = RealPoly::zero();
    for (m, c) in hermite_polynomial(nu, 0).to_real().terms() {
        let k = m.exp(0);
        poly.add_term(m.clone(), c * norm / l.powi(k as i32));
    }
    let quad = QuadForm::from_diagonal(&[0.5 / (l * l)]);
    GaussPolyFunction::new(poly, quad, vec![VarLabel { particle: 0, axis: 0 }]).unwrap()
}

/// `(2^ν ν! √π)^{-1/2}`: the scale-free part of the Hermite normalization.
pub fn hermite_norm_factor(nu: u32) -> f64 {
    let mut fact = 1.0f64;
    for k in 1..=nu {
        fact *= k as f64;
    }
    (2f64.powi(nu as i32) * fact * std::f64::consts::PI.sqrt()).powf(-0.5)
}

/// Occupied modes of the fermionic ground state.
///
/// Strong field fills the `N` lowest distinct spatial modes by
/// single-particle energy `Σ_α ω̃^(α)(μ^(α)+1/2)`; an energy tie at the Fermi
/// level is reported as an error rather than broken silently, since the
/// ground state changes character at the degeneracy. The weak-field table
/// fills the spin-down ladder `0..N-2` and the spin-up ladder `{0}`.
pub fn select_fermion_modes(spec: &HarmoniumSpec) -> Result<Vec<ModeLabel>, ModelError> {
    spec.validate()?;
    let n = spec.particle_count;
    let scales = kappa_to_scales(spec)?;
    match &spec.regime {
        FieldRegime::Explicit(modes) => {
            if modes.len() != n {
                return Err(ModelError::ModeCountMismatch {
                    expected: n,
                    got: modes.len(),
                });
            }
            let mut seen = std::collections::BTreeSet::new();
            for m in modes {
                if !seen.insert(m.clone()) {
                    return Err(ModelError::DuplicateMode(m.clone()));
                }
            }
            Ok(modes.clone())
        }
        FieldRegime::WeakField => {
            if spec.dims != 1 || n > 5 {
                return Err(ModelError::WeakFieldUnsupported);
            }
            // Minimal net polarization: an infinitesimal field splits the
            // spin species but does not pay for orbital promotion, so the
            // ladder fills pairwise with the odd particle spin-down.
            let n_down = n.div_ceil(2);
            let mut modes = Vec::new();
            for mu in 0..n_down {
                modes.push(ModeLabel::with_spin(vec![mu as u32], Spin::Down));
            }
            for mu in 0..n - n_down {
                modes.push(ModeLabel::with_spin(vec![mu as u32], Spin::Up));
            }
            Ok(modes)
        }
        FieldRegime::StrongField => {
            let freqs: Vec<f64> = match spec.fill_ordering {
                FillOrdering::Renormalized => scales.omega_tilde.clone(),
                FillOrdering::Bare => spec.omegas.clone(),
            };
            let energy = |mu: &[u32]| -> f64 {
                mu.iter()
                    .zip(freqs.iter())
                    .map(|(&m, &w)| w * (m as f64 + 0.5))
                    .sum()
            };
            // Candidate box large enough that the N lowest modes are inside.
            let cap = (n as u32) + 2;
            let mut candidates: Vec<ModeLabel> = Vec::new();
            match spec.dims {
                1 => {
                    for mu in 0..=cap {
                        candidates.push(ModeLabel::spatial_1d(mu));
                    }
                }
                2 => {
                    let ratio = freqs[1].max(freqs[0]) / freqs[0].min(freqs[1]);
                    let span = cap * (1 + ratio.ceil() as u32);
                    for mx in 0..=span {
                        for my in 0..=span {
                            candidates.push(ModeLabel::with_spin(vec![mx, my], Spin::None));
                        }
                    }
                }
                d => return Err(ModelError::UnsupportedDims(d)),
            }
            candidates.sort_by(|a, b| {
                energy(&a.mu)
                    .partial_cmp(&energy(&b.mu))
                    .unwrap()
                    .then_with(|| a.mu.cmp(&b.mu))
            });
            let e_last = energy(&candidates[n - 1].mu);
            let e_next = energy(&candidates[n].mu);
            let tol = 1e-9 * e_next.abs().max(1.0);
            if (e_next - e_last).abs() <= tol {
                return Err(ModelError::DegenerateFilling {
                    first: candidates[n - 1].clone(),
                    second: candidates[n].clone(),
                });
            }
            Ok(candidates[..n].to_vec())
        }
    }
}

/// One spin-assignment sector of the ground state: which spin sits on each
/// particle slot, and the polynomial factor of the wavefunction for that
/// assignment.
#[derive(Clone, Debug)]
pub struct Sector {
    pub spins: Vec<Spin>,
    pub poly: RatPoly,
}

/// The constructed N-particle ground state.
///
/// The wavefunction is `Ψ(x) ∝ Σ_σ P_σ(y)·exp(-yᵀQy) ⊗ |σ⟩` in scaled
/// coordinates `y_{i,α} = x_{i,α}/l̃^(α)`; bosonic and spin-aligned states
/// have a single sector. `z` is the squared norm of the scaled-coordinate
/// profile, `Σ_σ ∫ P_σ² exp(-2yᵀQy) dy`.
#[derive(Clone, Debug)]
pub struct GroundState {
    spec: HarmoniumSpec,
    scales: LengthScales,
    occupied: Vec<ModeLabel>,
    quad: QuadForm,
    sectors: Vec<Sector>,
    z: f64,
    norm_constant: f64,
}

impl GroundState {
    fn build(spec: &HarmoniumSpec) -> Result<Self, ModelError> {
        spec.validate()?;
        let scales = kappa_to_scales(spec)?;
        let n = spec.particle_count;
        let d = spec.dims;

        // Gaussian part in scaled coordinates: 1/2 on each diagonal entry
        // minus the centre-of-mass coupling per axis.
        let mut q = nalgebra::DMatrix::zeros(n * d, n * d);
        for i in 0..n * d {
            q[(i, i)] = 0.5;
        }
        for axis in 0..d {
            let ratio = scales.l_tilde[axis] / scales.l[axis];
            let coupling = (n as f64 / 2.0) * (1.0 - ratio * ratio) / (n * n) as f64;
            for i in 0..n {
                for j in 0..n {
                    q[(i * d + axis, j * d + axis)] -= coupling;
                }
            }
        }
        let quad = QuadForm::new(q)?;
        quad.check_positive_definite()?;

        let (occupied, sectors) = match spec.statistics {
            Statistics::Boson => {
                let occupied = vec![ModeLabel {
                    mu: vec![0; d],
                    spin: Spin::None,
                }];
                let sectors = vec![Sector {
                    spins: vec![Spin::None; n],
                    poly: RatPoly::one(),
                }];
                (occupied, sectors)
            }
            Statistics::Fermion => {
                let modes = select_fermion_modes(spec)?;
                let sectors = slater_sectors(&modes, n, d)?;
                (modes, sectors)
            }
        };

        // Squared norm of the scaled profile.
        let double = QuadForm::new(quad.matrix() * 2.0)?;
        let table = MomentTable::new(&double)?;
        let mut z = crate::polygauss::NeumaierSum::new();
        for s in &sectors {
            let sq = s.poly.mul(&s.poly).to_real();
            for (m, &c) in sq.terms() {
                z.add(c * table.moment(m));
            }
        }
        let z = z.value();

        // Physical normalization constant of the raw (determinant of
        // normalized Hermite functions times the centre-of-mass factor)
        // wavefunction.
        let mut raw_sq = z;
        for axis in 0..d {
            raw_sq *= scales.l_tilde[axis].powi(n as i32);
        }
        for mode in &occupied {
            for (axis, &mu) in mode.mu.iter().enumerate() {
                if spec.statistics == Statistics::Fermion {
                    let c = hermite_norm_factor(mu) / scales.l_tilde[axis].sqrt();
                    raw_sq *= c * c;
                }
            }
        }
        let norm_constant = raw_sq.powf(-0.5);

        Ok(Self {
            spec: spec.clone(),
            scales,
            occupied,
            quad,
            sectors,
            z,
            norm_constant,
        })
    }

    pub fn spec(&self) -> &HarmoniumSpec {
        &self.spec
    }

    pub fn scales(&self) -> &LengthScales {
        &self.scales
    }

    pub fn occupied_modes(&self) -> &[ModeLabel] {
        &self.occupied
    }

    pub fn particle_count(&self) -> usize {
        self.spec.particle_count
    }

    pub fn dims(&self) -> usize {
        self.spec.dims
    }

    /// Scaled-coordinate Gaussian form of the wavefunction.
    pub fn quad(&self) -> &QuadForm {
        &self.quad
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    /// Polynomial factor for a given slot-spin assignment, if the assignment
    /// occurs in the state.
    pub fn sector_poly(&self, spins: &[Spin]) -> Option<&RatPoly> {
        self.sectors
            .iter()
            .find(|s| s.spins == spins)
            .map(|s| &s.poly)
    }

    /// Number of spin-up and spin-down modes in the occupied configuration.
    pub fn spin_counts(&self) -> (usize, usize) {
        let up = self
            .occupied
            .iter()
            .filter(|m| m.spin == Spin::Up)
            .count();
        let down = self
            .occupied
            .iter()
            .filter(|m| m.spin == Spin::Down)
            .count();
        match self.spec.statistics {
            Statistics::Boson => (0, 0),
            Statistics::Fermion if up + down == 0 => (0, 0),
            Statistics::Fermion => (up, down),
        }
    }

    pub fn is_spinful(&self) -> bool {
        self.occupied.iter().any(|m| m.spin != Spin::None)
    }

    /// Squared norm of the scaled-coordinate profile.
    pub fn scaled_norm_sq(&self) -> f64 {
        self.z
    }

    /// `𝒩 = (∫|Ψ_raw|²)^{-1/2}` for the raw (unnormalized) physical state.
    pub fn norm_constant(&self) -> f64 {
        self.norm_constant
    }

    /// The normalized physical-coordinate wavefunction, available for states
    /// with a single spin sector (bosonic or spin-aligned fermionic).
    pub fn wavefunction(&self) -> Result<GaussPolyFunction, ModelError> {
        if self.sectors.len() != 1 {
            return Err(ModelError::WeakFieldUnsupported);
        }
        let n = self.particle_count();
        let d = self.dims();
        // Rescale y -> x/l̃ and fold the overall normalization into the
        // polynomial part.
        let overall = (self.z
            * self
                .scales
                .l_tilde
                .iter()
                .map(|l| l.powi(n as i32))
                .product::<f64>())
        .powf(-0.5);
        let mut poly = RealPoly::zero();
        for (m, c) in self.sectors[0].poly.to_real().terms() {
            let mut scale = overall;
            for (v, &e) in m.exps().iter().enumerate() {
                let axis = v % d;
                scale /= self.scales.l_tilde[axis].powi(e as i32);
            }
            poly.add_term(m.clone(), c * scale);
        }
        let mut q = self.quad.matrix().clone();
        for i in 0..n * d {
            for j in 0..n * d {
                q[(i, j)] /= self.scales.l_tilde[i % d] * self.scales.l_tilde[j % d];
            }
        }
        let labels = (0..n * d)
            .map(|v| VarLabel {
                particle: v / d,
                axis: v % d,
            })
            .collect();
        Ok(GaussPolyFunction::new(poly, QuadForm::new(q)?, labels)?)
    }
}

/// Expands the spin-orbital Slater determinant into one polynomial per
/// slot-spin assignment. Spin-less configurations yield a single sector.
fn slater_sectors(modes: &[ModeLabel], n: usize, d: usize) -> Result<Vec<Sector>, ModelError> {
    let spinful = modes.iter().any(|m| m.spin != Spin::None);
    let orbital_poly = |mode: &ModeLabel, particle: usize| -> RatPoly {
        let mut p = RatPoly::one();
        for (axis, &mu) in mode.mu.iter().enumerate() {
            p = p.mul(&hermite_polynomial(mu, particle * d + axis));
        }
        p
    };
    if !spinful {
        let matrix: Vec<Vec<RatPoly>> = modes
            .iter()
            .map(|mode| (0..n).map(|i| orbital_poly(mode, i)).collect())
            .collect();
        let poly = det_expand_with_limit(&matrix, n.max(crate::polygauss::DEFAULT_DET_LIMIT))?;
        return Ok(vec![Sector {
            spins: vec![Spin::None; n],
            poly,
        }]);
    }
    let n_up = modes.iter().filter(|m| m.spin == Spin::Up).count();
    let mut sectors = Vec::new();
    for up_slots in combinations(n, n_up) {
        let spins: Vec<Spin> = (0..n)
            .map(|i| {
                if up_slots.contains(&i) {
                    Spin::Up
                } else {
                    Spin::Down
                }
            })
            .collect();
        let matrix: Vec<Vec<RatPoly>> = modes
            .iter()
            .map(|mode| {
                (0..n)
                    .map(|i| {
                        if spins[i] == mode.spin {
                            orbital_poly(mode, i)
                        } else {
                            RatPoly::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        let poly = det_expand_with_limit(&matrix, n.max(crate::polygauss::DEFAULT_DET_LIMIT))?;
        if !poly.is_zero() {
            sectors.push(Sector { spins, poly });
        }
    }
    Ok(sectors)
}

/// All k-element subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polygauss::{integrate_all, integrate_subset};
    use approx::assert_relative_eq;
    use std::collections::BTreeSet;

    #[test]
    fn kappa_zero_leaves_scales_unchanged() {
        let spec = HarmoniumSpec::one_dimensional(2, 0.0, Statistics::Boson, FieldRegime::StrongField);
        let s = kappa_to_scales(&spec).unwrap();
        assert_relative_eq!(s.l_tilde[0], 1.0);
    }

    #[test]
    fn kappa_fifteen_halves_the_length() {
        let spec =
            HarmoniumSpec::one_dimensional(2, 15.0, Statistics::Boson, FieldRegime::StrongField);
        let s = kappa_to_scales(&spec).unwrap();
        assert_relative_eq!(s.l_tilde[0], 0.5, max_relative = 1e-14);
    }

    #[test]
    fn kappa_at_minus_one_is_rejected() {
        let spec =
            HarmoniumSpec::one_dimensional(2, -1.0, Statistics::Boson, FieldRegime::StrongField);
        assert!(matches!(
            kappa_to_scales(&spec),
            Err(ModelError::NoBoundState { .. })
        ));
    }

    #[test]
    fn hermite_polynomial_values() {
        // H_2(1) = 2, H_6(0) = -120
        let h2 = hermite_polynomial(2, 0).to_real();
        assert_relative_eq!(h2.eval(&[1.0]), 2.0);
        let h6 = hermite_polynomial(6, 0).to_real();
        assert_relative_eq!(h6.eval(&[0.0]), -120.0);
    }

    #[test]
    fn hermite_ground_mode_form() {
        let f = hermite_function(0, 1.0);
        // (√π)^{-1/2} e^{-x²/2}
        let c = std::f64::consts::PI.powf(-0.25);
        assert_relative_eq!(f.eval(&[0.0]), c, max_relative = 1e-14);
        assert_relative_eq!(f.quad.entry(0, 0), 0.5);
    }

    #[test]
    fn hermite_functions_are_orthonormal() {
        for l in [1.0, 0.63] {
            for nu in 0..=6u32 {
                for mu in 0..=6u32 {
                    let p = hermite_function(nu, l).product(&hermite_function(mu, l)).unwrap();
                    let overlap = integrate_all(&p).unwrap();
                    let expect = if nu == mu { 1.0 } else { 0.0 };
                    assert!(
                        (overlap - expect).abs() < 1e-10,
                        "⟨{nu}|{mu}⟩ at l={l} was {overlap}"
                    );
                }
            }
        }
    }

    #[test]
    fn strong_field_1d_fills_lowest_modes() {
        let spec =
            HarmoniumSpec::one_dimensional(3, 0.7, Statistics::Fermion, FieldRegime::StrongField);
        let modes = select_fermion_modes(&spec).unwrap();
        let mus: Vec<u32> = modes.iter().map(|m| m.mu[0]).collect();
        assert_eq!(mus, vec![0, 1, 2]);
    }

    #[test]
    fn weak_field_n3_table() {
        let spec =
            HarmoniumSpec::one_dimensional(3, 0.7, Statistics::Fermion, FieldRegime::WeakField);
        let modes = select_fermion_modes(&spec).unwrap();
        assert_eq!(
            modes,
            vec![
                ModeLabel::with_spin(vec![0], Spin::Down),
                ModeLabel::with_spin(vec![1], Spin::Down),
                ModeLabel::with_spin(vec![0], Spin::Up),
            ]
        );
    }

    #[test]
    fn two_dimensional_filling_matches_brute_force() {
        // N=4, ω_y/ω_x = 2: brute-force over all 4-subsets of candidate
        // modes picks {(0,0),(1,0),(2,0),(0,1)}.
        let spec = HarmoniumSpec::two_dimensional(
            4,
            2.0,
            0.3,
            Statistics::Fermion,
            FieldRegime::StrongField,
        );
        let modes = select_fermion_modes(&spec).unwrap();
        let got: BTreeSet<Vec<u32>> = modes.iter().map(|m| m.mu.clone()).collect();

        let scales = kappa_to_scales(&spec).unwrap();
        let energy = |mu: &[u32]| -> f64 {
            mu.iter()
                .zip(scales.omega_tilde.iter())
                .map(|(&m, &w)| w * (m as f64 + 0.5))
                .sum()
        };
        let mut candidates = Vec::new();
        for mx in 0..8u32 {
            for my in 0..8u32 {
                candidates.push(vec![mx, my]);
            }
        }
        let mut best: Option<(f64, BTreeSet<Vec<u32>>)> = None;
        for pick in combinations(candidates.len(), 4) {
            let subset: Vec<&Vec<u32>> = pick.iter().map(|&i| &candidates[i]).collect();
            let e: f64 = subset.iter().map(|mu| energy(mu)).sum();
            if best.as_ref().map_or(true, |(be, _)| e < *be) {
                best = Some((e, subset.into_iter().cloned().collect()));
            }
        }
        assert_eq!(got, best.unwrap().1);
        assert_eq!(
            got,
            BTreeSet::from([vec![0, 0], vec![1, 0], vec![2, 0], vec![0, 1]])
        );
    }

    #[test]
    fn degenerate_filling_is_an_error() {
        let spec = HarmoniumSpec::two_dimensional(
            4,
            3.0,
            0.0,
            Statistics::Fermion,
            FieldRegime::StrongField,
        );
        assert!(matches!(
            select_fermion_modes(&spec),
            Err(ModelError::DegenerateFilling { .. })
        ));
    }

    #[test]
    fn boson_ground_state_is_normalized_gaussian() {
        let spec = HarmoniumSpec::one_dimensional(2, 0.0, Statistics::Boson, FieldRegime::StrongField);
        let gs = spec.build_ground_state().unwrap();
        let wf = gs.wavefunction().unwrap();
        // κ=0: product state, diagonal quad, Ψ ∝ exp(-(x1²+x2²)/2).
        assert_relative_eq!(wf.quad.entry(0, 0), 0.5, max_relative = 1e-12);
        assert!(wf.quad.entry(0, 1).abs() < 1e-14);
        let norm = integrate_all(&wf.product(&wf).unwrap()).unwrap();
        assert_relative_eq!(norm, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn fermion_two_particle_vandermonde() {
        let spec =
            HarmoniumSpec::one_dimensional(2, 0.0, Statistics::Fermion, FieldRegime::StrongField);
        let gs = spec.build_ground_state().unwrap();
        let wf = gs.wavefunction().unwrap();
        // Ψ ∝ (x2 - x1)·exp(-(x1²+x2²)/2): antisymmetric, normalized.
        let norm = integrate_all(&wf.product(&wf).unwrap()).unwrap();
        assert_relative_eq!(norm, 1.0, max_relative = 1e-12);
        let v = wf.eval(&[0.3, 0.9]);
        let vs = wf.eval(&[0.9, 0.3]);
        assert_relative_eq!(v, -vs, max_relative = 1e-12);
        assert!(v != 0.0);
    }

    #[test]
    fn interacting_fermion_state_is_normalized() {
        let spec =
            HarmoniumSpec::one_dimensional(3, 10.0, Statistics::Fermion, FieldRegime::StrongField);
        let gs = spec.build_ground_state().unwrap();
        let wf = gs.wavefunction().unwrap();
        let norm = integrate_all(&wf.product(&wf).unwrap()).unwrap();
        assert_relative_eq!(norm, 1.0, max_relative = 1e-10);
        // Marginalization consistency on the squared state.
        let sq = wf.product(&wf).unwrap();
        let partial = integrate_subset(&sq, &BTreeSet::from([2])).unwrap();
        assert_relative_eq!(integrate_all(&partial).unwrap(), 1.0, max_relative = 1e-10);
    }

    #[test]
    fn kappa_zero_quad_is_block_diagonal() {
        let spec =
            HarmoniumSpec::one_dimensional(3, 0.0, Statistics::Fermion, FieldRegime::StrongField);
        let gs = spec.build_ground_state().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 0.5 } else { 0.0 };
                assert_relative_eq!(gs.quad().entry(i, j), expect, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn normalization_constant_gaussian() {
        // 1D single-particle Gaussian exp(-x²/2) has 𝒩 = π^{-1/4}.
        let spec = HarmoniumSpec::one_dimensional(1, 0.0, Statistics::Boson, FieldRegime::StrongField);
        let gs = spec.build_ground_state().unwrap();
        assert_relative_eq!(
            gs.norm_constant(),
            std::f64::consts::PI.powf(-0.25),
            max_relative = 1e-12
        );
    }

    #[test]
    fn boson_norm_constant_factorizes_at_kappa_zero() {
        let spec = HarmoniumSpec::one_dimensional(3, 0.0, Statistics::Boson, FieldRegime::StrongField);
        let gs = spec.build_ground_state().unwrap();
        let one = std::f64::consts::PI.powf(-0.25);
        assert_relative_eq!(gs.norm_constant(), one.powi(3), max_relative = 1e-12);
    }

    #[test]
    fn weak_field_sectors_cover_spin_assignments() {
        let spec =
            HarmoniumSpec::one_dimensional(3, 1.0, Statistics::Fermion, FieldRegime::WeakField);
        let gs = spec.build_ground_state().unwrap();
        // One spin-up among three slots: three sectors.
        assert_eq!(gs.sectors().len(), 3);
        assert_eq!(gs.spin_counts(), (1, 2));
    }

    #[test]
    fn exchange_symmetry_of_sector_polynomials() {
        // Spin-aligned fermions: swapping two particle variables negates the
        // polynomial part.
        let spec =
            HarmoniumSpec::one_dimensional(3, 2.0, Statistics::Fermion, FieldRegime::StrongField);
        let gs = spec.build_ground_state().unwrap();
        let p = gs.sectors()[0].poly.to_real();
        let a = p.eval(&[0.2, -0.7, 1.1]);
        let b = p.eval(&[-0.7, 0.2, 1.1]);
        assert_relative_eq!(a, -b, max_relative = 1e-12);
    }
}
