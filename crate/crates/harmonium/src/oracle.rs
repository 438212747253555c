//! Independent brute-force verifiers used by the test suite.
//!
//! Two oracles live here: tensor-product Gauss-Hermite quadrature for
//! Gaussian-polynomial integrals, and a truncated-Fock-space expansion of the
//! ground state with an explicit partial trace. Neither runs on the
//! production path; they exist so that every analytic result can be checked
//! against an independent computation.
//!
//! ```
//! use harmonium::polygauss::{QuadForm, MomentTable, Monomial};
//! use harmonium::oracle::quadrature_monomial;
//!
//! let q = QuadForm::from_diagonal(&[0.7, 1.3]);
//! let m = Monomial::from_exps(vec![4, 2]);
//! let analytic = MomentTable::new(&q).unwrap().moment(&m);
//! let numeric = quadrature_monomial(&q, &m).unwrap();
//! assert!((analytic - numeric).abs() < 1e-10 * analytic.abs());
//! ```

use std::collections::HashMap;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::model::{
    hermite_norm_factor, hermite_polynomial, GroundState, ModeLabel, Spin, Statistics,
};
use crate::polygauss::{
    MomentTable, Monomial, NeumaierSum, PolyGaussError, QuadForm, RealPoly,
};
use crate::rdm::{factorial, DensityMatrix, OccupationBasis};

/// Dimension cap for tensor-product quadrature grids.
pub const QUADRATURE_DIM_LIMIT: usize = 6;

/// Cap on the number of Fock configurations an expansion may enumerate.
pub const CONFIGURATION_CAP: usize = 200_000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("dimension {dim} exceeds the quadrature limit {limit}")]
    DimensionLimit { dim: usize, limit: usize },
    #[error("Fock cutoff {cutoff} below particle number {n}")]
    CutoffTooSmall { cutoff: usize, n: usize },
    #[error("configuration count {count} exceeds the cap {cap}")]
    CombinatorialBlowup { count: usize, cap: usize },
    #[error(transparent)]
    PolyGauss(#[from] PolyGaussError),
    #[error("oracle unsupported for this state: {0}")]
    Unsupported(String),
}

/// Nodes and weights of `order`-point Gauss-Hermite quadrature for the
/// weight `exp(-x²)`, via the Golub-Welsch eigenvalue method.
pub fn gauss_hermite(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let mut jacobi = DMatrix::zeros(order, order);
    for k in 1..order {
        let b = (k as f64 / 2.0).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..order)
        .map(|i| {
            let node = eig.eigenvalues[i];
            let v0 = eig.eigenvectors[(0, i)];
            (node, std::f64::consts::PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs.into_iter().unzip()
}

/// `∫ poly(x) exp(-xᵀQx) dx` by tensor-product Gauss-Hermite quadrature.
///
/// The form is diagonalized, `x = U D^{-1/2} u`, and the per-axis order is
/// chosen at least `max_degree + 20`, far beyond polynomial exactness.
pub fn quadrature_moment(quad: &QuadForm, poly: &RealPoly) -> Result<f64, OracleError> {
    let dim = quad.dim();
    if dim > QUADRATURE_DIM_LIMIT {
        return Err(OracleError::DimensionLimit {
            dim,
            limit: QUADRATURE_DIM_LIMIT,
        });
    }
    quad.check_positive_definite()?;
    if dim == 0 {
        return Ok(poly.eval(&[]));
    }
    let eig = quad.matrix().clone().symmetric_eigen();
    // x = U D^{-1/2} u maps the form to the unit weight; the Jacobian is
    // det(D)^{-1/2}.
    let mut jac = 1.0;
    for i in 0..dim {
        jac /= eig.eigenvalues[i].sqrt();
    }
    let order = (poly.total_degree() as usize + 21).max(25);
    let (nodes, weights) = gauss_hermite(order);

    let mut idx = vec![0usize; dim];
    let mut total = crate::polygauss::NeumaierSum::new();
    let mut x = vec![0.0; dim];
    loop {
        let mut w = jac;
        for &k in idx.iter() {
            w *= weights[k];
        }
        for i in 0..dim {
            let mut xi = 0.0;
            for (axis, &k) in idx.iter().enumerate() {
                xi += eig.eigenvectors[(i, axis)] * nodes[k] / eig.eigenvalues[axis].sqrt();
            }
            x[i] = xi;
        }
        total.add(w * poly.eval(&x));
        // Odometer over the tensor grid.
        let mut carry = true;
        for d in idx.iter_mut() {
            *d += 1;
            if *d < order {
                carry = false;
                break;
            }
            *d = 0;
        }
        if carry {
            break;
        }
    }
    Ok(total.value())
}

/// Convenience: quadrature of a single monomial.
pub fn quadrature_monomial(quad: &QuadForm, mono: &Monomial) -> Result<f64, OracleError> {
    let mut p = RealPoly::zero();
    p.add_term(mono.clone(), 1.0);
    quadrature_moment(quad, &p)
}

/// Truncated expansion of the ground state over Fock configurations of the
/// lowest `cutoff` renormalized Hermite modes.
///
/// Orbitals are ordered spatial-label-major with spin-↑ before spin-↓; each
/// amplitude is the overlap of the corresponding Slater determinant
/// (permanent for bosons) with the ground state, evaluated as a Gaussian
/// moment. `residual = 1 - Σ amplitude²` measures the truncation loss.
#[derive(Clone, Debug)]
pub struct FockExpansion {
    pub statistics: Statistics,
    pub particle_count: usize,
    pub cutoff: usize,
    /// Global ordered orbital list; occupation tuples index into it.
    pub orbitals: Vec<ModeLabel>,
    pub amplitudes: HashMap<Vec<u32>, f64>,
    pub residual: f64,
}

/// Expands a one-dimensional ground state over the lowest `cutoff` spatial
/// modes.
pub fn fock_expand(state: &GroundState, cutoff: usize) -> Result<FockExpansion, OracleError> {
    let n = state.particle_count();
    if state.dims() != 1 {
        return Err(OracleError::Unsupported(
            "Fock expansion is implemented for one spatial dimension".into(),
        ));
    }
    if cutoff < n {
        return Err(OracleError::CutoffTooSmall { cutoff, n });
    }
    let spinful = state.is_spinful();
    let statistics = state.spec().statistics;
    let mut orbitals = Vec::new();
    for m in 0..cutoff as u32 {
        match (statistics, spinful) {
            (Statistics::Fermion, true) => {
                orbitals.push(ModeLabel::with_spin(vec![m], Spin::Up));
                orbitals.push(ModeLabel::with_spin(vec![m], Spin::Down));
            }
            _ => orbitals.push(ModeLabel::spatial_1d(m)),
        }
    }

    // Shared composite Gaussian: ground-state form plus the Hermite weight of
    // each projected coordinate.
    let mut q = state.quad().matrix().clone();
    for i in 0..n {
        q[(i, i)] += 0.5;
    }
    let table = MomentTable::new(&QuadForm::new(q)?)?;

    // Slot assignments: for each configuration, orbital list in config order
    // maps onto particle slots 0..N.
    let configs: Vec<Vec<usize>> = match statistics {
        Statistics::Fermion => {
            let count = binomial(orbitals.len(), n);
            if count > CONFIGURATION_CAP {
                return Err(OracleError::CombinatorialBlowup {
                    count,
                    cap: CONFIGURATION_CAP,
                });
            }
            crate::model::combinations(orbitals.len(), n)
        }
        Statistics::Boson => {
            let count = binomial(orbitals.len() + n - 1, n);
            if count > CONFIGURATION_CAP {
                return Err(OracleError::CombinatorialBlowup {
                    count,
                    cap: CONFIGURATION_CAP,
                });
            }
            multisets(orbitals.len(), n)
        }
    };

    let sqrt_nfact = factorial(n).sqrt();
    let mut amplitudes = HashMap::new();
    let mut norm = NeumaierSum::new();
    for config in configs {
        // Spin sector fixed by the slot assignment; absent sector means a
        // vanishing amplitude.
        let spins: Vec<Spin> = config.iter().map(|&a| orbitals[a].spin).collect();
        let sector = match state.sector_poly(&spins) {
            Some(p) => p,
            None => continue,
        };
        let mut poly = sector.clone();
        let mut pref = sqrt_nfact / state.scaled_norm_sq().sqrt();
        for (slot, &a) in config.iter().enumerate() {
            let mu = orbitals[a].mu[0];
            poly = poly.mul(&hermite_polynomial(mu, slot));
            pref *= hermite_norm_factor(mu);
        }
        if statistics == Statistics::Boson {
            // Permanent normalization √(N!/Πn_k!) instead of √N!.
            let mut counts: HashMap<usize, usize> = HashMap::new();
            for &a in &config {
                *counts.entry(a).or_insert(0) += 1;
            }
            for (_, c) in counts {
                pref /= factorial(c).sqrt();
            }
        }
        let mut acc = NeumaierSum::new();
        for (m, &c) in poly.to_real().terms() {
            acc.add(c * table.moment(m));
        }
        let amp = pref * acc.value();
        if amp.abs() > 0.0 {
            let mut occ = vec![0u32; orbitals.len()];
            for &a in &config {
                occ[a] += 1;
            }
            norm.add(amp * amp);
            amplitudes.insert(occ, amp);
        }
    }
    Ok(FockExpansion {
        statistics,
        particle_count: n,
        cutoff,
        orbitals,
        amplitudes,
        residual: 1.0 - norm.value(),
    })
}

/// Explicit partial trace of the expanded state onto the orbitals at the
/// given positions (which must be in increasing global order), with
/// fermionic separation signs from the strict orbital ordering.
pub fn brute_force_mode_rdm(
    exp: &FockExpansion,
    subset: &[usize],
) -> Result<DensityMatrix, OracleError> {
    for w in subset.windows(2) {
        if w[1] <= w[0] {
            return Err(OracleError::Unsupported(
                "subset positions must be strictly increasing".into(),
            ));
        }
    }
    let k = subset.len();
    let in_subset: Vec<bool> = {
        let mut v = vec![false; exp.orbitals.len()];
        for &s in subset {
            v[s] = true;
        }
        v
    };
    let max_local: u32 = match exp.statistics {
        Statistics::Fermion => 1,
        Statistics::Boson => exp.particle_count as u32,
    };
    let side = (max_local + 1) as usize;
    let dim = side.pow(k as u32);
    let entries: Vec<Vec<u32>> = (0..dim)
        .map(|mut idx| {
            let mut occ = vec![0u32; k];
            for a in (0..k).rev() {
                occ[a] = (idx % side) as u32;
                idx /= side;
            }
            occ
        })
        .collect();
    let sys_index = |occ: &[u32]| -> usize {
        occ.iter().fold(0usize, |acc, &o| acc * side + o as usize)
    };

    // Group signed amplitudes by environment configuration.
    let mut by_env: HashMap<Vec<u32>, Vec<(usize, f64)>> = HashMap::new();
    for (occ, &amp) in &exp.amplitudes {
        let mut sys = Vec::with_capacity(k);
        let mut env = Vec::with_capacity(occ.len() - k);
        // Separation sign: count occupied (env, sys) pairs out of order.
        let mut sign = 1.0f64;
        let mut env_before: u32 = 0;
        for (a, &o) in occ.iter().enumerate() {
            if in_subset[a] {
                sys.push(o);
                if exp.statistics == Statistics::Fermion && o == 1 && env_before % 2 == 1 {
                    sign = -sign;
                }
            } else {
                env.push(o);
                env_before += o;
            }
        }
        by_env.entry(env).or_default().push((sys_index(&sys), sign * amp));
    }
    let mut m = DMatrix::zeros(dim, dim);
    for (_, members) in by_env {
        for &(r, ar) in &members {
            for &(c, ac) in &members {
                m[(r, c)] += ar * ac;
            }
        }
    }
    let modes: Vec<ModeLabel> = subset.iter().map(|&s| exp.orbitals[s].clone()).collect();
    Ok(DensityMatrix::new(m, OccupationBasis { modes, entries }))
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut acc: usize = 1;
    for i in 0..k.min(n - k) {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// All multisets of size `k` from `0..n`, as non-decreasing index vectors.
fn multisets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const SQRT_PI: f64 = 1.7724538509055159;

    #[test]
    fn quadrature_x4() {
        let q = QuadForm::from_diagonal(&[1.0]);
        let mut p = RealPoly::zero();
        p.add_term(Monomial::var(0, 4), 1.0);
        let v = quadrature_moment(&q, &p).unwrap();
        assert_relative_eq!(v, 3.0 * SQRT_PI / 4.0, max_relative = 1e-12);
    }

    #[test]
    fn quadrature_odd_moment_is_tiny() {
        let q = QuadForm::from_diagonal(&[1.0, 0.7]);
        let mut p = RealPoly::zero();
        p.add_term(Monomial::from_exps(vec![3, 0]), 1.0);
        let v = quadrature_moment(&q, &p).unwrap();
        assert!(v.abs() < 1e-12, "odd moment was {v}");
    }

    #[test]
    fn quadrature_dimension_cap() {
        let q = QuadForm::from_diagonal(&[1.0; 7]);
        assert!(matches!(
            quadrature_moment(&q, &RealPoly::one()),
            Err(OracleError::DimensionLimit { dim: 7, limit: 6 })
        ));
    }

    use crate::model::{FieldRegime, HarmoniumSpec};

    fn state(
        n: usize,
        kappa: f64,
        statistics: Statistics,
        regime: FieldRegime,
    ) -> GroundState {
        HarmoniumSpec::one_dimensional(n, kappa, statistics, regime)
            .build_ground_state()
            .unwrap()
    }

    #[test]
    fn fock_expand_noninteracting_fermion() {
        let s = state(2, 0.0, Statistics::Fermion, FieldRegime::StrongField);
        let exp = fock_expand(&s, 6).unwrap();
        let mut det = vec![0u32; 6];
        det[0] = 1;
        det[1] = 1;
        assert_relative_eq!(exp.amplitudes[&det].abs(), 1.0, epsilon = 1e-10);
        assert!(exp.residual.abs() < 1e-10);
    }

    #[test]
    fn fock_expand_noninteracting_boson() {
        let s = state(3, 0.0, Statistics::Boson, FieldRegime::StrongField);
        let exp = fock_expand(&s, 5).unwrap();
        let mut cond = vec![0u32; 5];
        cond[0] = 3;
        assert_relative_eq!(exp.amplitudes[&cond], 1.0, epsilon = 1e-10);
        assert!(exp.residual.abs() < 1e-10);
    }

    #[test]
    fn fock_residual_shrinks_with_cutoff() {
        let s = state(2, 3.0, Statistics::Fermion, FieldRegime::StrongField);
        let r8 = fock_expand(&s, 8).unwrap().residual;
        let r10 = fock_expand(&s, 10).unwrap().residual;
        let r12 = fock_expand(&s, 12).unwrap().residual;
        assert!(r8 >= r10 - 1e-14 && r10 >= r12 - 1e-14);
        assert!(r12 >= -1e-10);
        assert!(r12 < 1e-4, "residual at cutoff 12 was {r12}");
    }

    #[test]
    fn fock_expand_spinful_matches_mode_weights() {
        let s = state(3, 2.0, Statistics::Fermion, FieldRegime::WeakField);
        let exp = fock_expand(&s, 10).unwrap();
        assert!(exp.residual < 1e-4, "residual {}", exp.residual);
        // Mode 0 occupations from the expansion vs the analytic engine.
        let q = crate::rdm::fermion_mode_occupations(&s, 0).unwrap().weights;
        let rho = brute_force_mode_rdm(&exp, &[0, 1]).unwrap();
        // basis over (0↑, 0↓): q order is (Ω, ↑, ↓, ↑↓) = indices 0,2,1,3
        let got = [
            rho.entry_by_occupation(&[0, 0], &[0, 0]).unwrap(),
            rho.entry_by_occupation(&[1, 0], &[1, 0]).unwrap(),
            rho.entry_by_occupation(&[0, 1], &[0, 1]).unwrap(),
            rho.entry_by_occupation(&[1, 1], &[1, 1]).unwrap(),
        ];
        for k in 0..4 {
            assert!(
                (got[k] - q[k]).abs() < 1e-5,
                "oracle {:?} vs engine {:?}",
                got,
                q
            );
        }
    }

    #[test]
    fn brute_force_two_mode_matches_rdm_module() {
        let s = state(2, 3.0, Statistics::Fermion, FieldRegime::WeakField);
        let exp = fock_expand(&s, 12).unwrap();
        // Spatial modes 0 and 1: orbital positions (0↑,0↓,1↑,1↓).
        let oracle = brute_force_mode_rdm(&exp, &[0, 1, 2, 3]).unwrap();
        let exact = crate::rdm::fermion_two_mode_rdm(&s, 0, 1).unwrap();
        assert_eq!(oracle.basis.entries, exact.basis.entries);
        let mut max_err = 0.0f64;
        for r in 0..16 {
            for c in 0..16 {
                max_err = max_err.max((oracle.matrix[(r, c)] - exact.matrix[(r, c)]).abs());
            }
        }
        assert!(max_err < 1e-6, "max entrywise error {max_err}");
    }

    #[test]
    fn brute_force_boson_two_mode_matches_rdm_module() {
        let s = state(2, 3.0, Statistics::Boson, FieldRegime::StrongField);
        let exp = fock_expand(&s, 12).unwrap();
        let oracle = brute_force_mode_rdm(&exp, &[0, 1]).unwrap();
        let exact = crate::rdm::boson_two_mode_rdm(&s, 0, 1).unwrap();
        assert_eq!(oracle.basis.entries, exact.basis.entries);
        let mut max_err = 0.0f64;
        for r in 0..9 {
            for c in 0..9 {
                max_err = max_err.max((oracle.matrix[(r, c)] - exact.matrix[(r, c)]).abs());
            }
        }
        assert!(max_err < 1e-6, "max entrywise error {max_err}");
    }

    #[test]
    fn separation_sign_convention() {
        // Hand-built expansion: |Ψ⟩ = (|a₀ a₂⟩ + |a₁ a₃⟩)/√2 over 4 fermionic
        // orbitals; tracing onto {a₁, a₂} leaves the middle orbitals with
        // opposite separation signs against their environments.
        let orbitals: Vec<ModeLabel> = (0..4).map(ModeLabel::spatial_1d).collect();
        let mut amplitudes = HashMap::new();
        amplitudes.insert(vec![1, 0, 1, 0], 1.0 / 2f64.sqrt());
        amplitudes.insert(vec![0, 1, 0, 1], 1.0 / 2f64.sqrt());
        let exp = FockExpansion {
            statistics: Statistics::Fermion,
            particle_count: 2,
            cutoff: 4,
            orbitals,
            amplitudes,
            residual: 0.0,
        };
        let rho = brute_force_mode_rdm(&exp, &[1, 2]).unwrap();
        assert_relative_eq!(
            rho.entry_by_occupation(&[0, 1], &[0, 1]).unwrap(),
            0.5,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            rho.entry_by_occupation(&[1, 0], &[1, 0]).unwrap(),
            0.5,
            epsilon = 1e-14
        );
        // Different environments: no coherence between the two branches.
        assert_relative_eq!(
            rho.entry_by_occupation(&[0, 1], &[1, 0]).unwrap(),
            0.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn cutoff_guard() {
        let s = state(2, 0.0, Statistics::Fermion, FieldRegime::StrongField);
        assert!(matches!(
            fock_expand(&s, 1),
            Err(OracleError::CutoffTooSmall { cutoff: 1, n: 2 })
        ));
    }
}
