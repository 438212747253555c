//! Mode and mode-mode entanglement in the exactly solvable N-Harmonium model.
//!
//! Harmonium describes `N` particles in a harmonic trap with pairwise harmonic
//! interactions. Its ground state is a polynomial times a centered Gaussian,
//! so every reduced density matrix element reduces to Gaussian moment
//! integrals that can be evaluated in closed form. This crate builds that
//! pipeline end to end:
//!
//! * [`polygauss`] — exact algebra and integration for multivariate
//!   polynomials with centered Gaussian weights,
//! * [`model`] — the Harmonium Hamiltonian, its coupling parametrization and
//!   the explicit bosonic and fermionic ground states,
//! * [`rdm`] — mode and mode-mode reduced density matrices obtained from
//!   ladder-operator expectation values,
//! * [`entanglement`] — entropic measures, super-selection-rule projections
//!   and the PPT-constrained closest-separable-state minimizer,
//! * [`oracle`] — independent brute-force verifiers (quadrature and
//!   truncated Fock expansion) used by the test suite,
//! * [`sweep`] — deterministic coupling sweeps with CSV/JSON emission.
//!
//! ```
//! use harmonium::model::{HarmoniumSpec, Statistics, FieldRegime};
//! use harmonium::rdm::fermion_mode_occupations;
//! use harmonium::entanglement::spinful_mode_measures;
//!
//! let spec = HarmoniumSpec::one_dimensional(3, 1.0, Statistics::Fermion, FieldRegime::WeakField);
//! let state = spec.build_ground_state().unwrap();
//! let q = fermion_mode_occupations(&state, 0).unwrap();
//! let m = spinful_mode_measures(&q);
//! assert!(m.e_number <= m.e_parity + 1e-12 && m.e_parity <= m.e + 1e-12);
//! ```

pub mod entanglement;
pub mod model;
pub mod oracle;
pub mod polygauss;
pub mod rdm;
pub mod sweep;
