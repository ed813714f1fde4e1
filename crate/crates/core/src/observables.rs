//! Reported quantities: ground-state population, fidelity, effective
//! temperature, phonon-number distributions, purity, entanglement.
//!
//! Column names are fixed: `pop_<level>_m<m>` (two modes: `pop_<level>_m<m1>_<m2>`),
//! `pop_<level>`, `p0`, `n_mean`, `pn_m<m>`, `fidelity`, `purity`, `t_eff_k`.
//! On two-mode spaces the per-mode names carry a 1-based mode suffix, e.g.
//! `p0_mode2`, `pn2_m1`.

use nalgebra::{ DMatrix, DVector };
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::{
    hilbert::{ hermitian_eigenvalues, CompositeSpace, DensityMatrix, Factor, HilbertError, ReducedState, StateVector },
    physmodel::consts::{ HBAR, K_B },
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObservableError {
    #[error("effective temperature undefined for P0 = {0} (needs 0 < P0 < 1)")]
    DegeneratePopulation(f64),
    #[error("mechanical frequency must be positive")]
    BadFrequency,
    #[error("concurrence needs two modes with cutoff ≥ 2")]
    NotTwoMode,
    #[error("observable `{0}` is not linear in ρ")]
    NotLinear(String),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}

pub type ObsResult<T> = Result<T, ObservableError>;

/// Population of `|0⟩` of `mode` after tracing out everything else.
pub fn ground_state_population(rho: &DensityMatrix, mode: usize) -> ObsResult<f64> {
    Ok(number_distribution(rho, mode)?[0])
}

/// Diagonal of the reduced state of `mode`.
pub fn number_distribution(rho: &DensityMatrix, mode: usize) -> ObsResult<Vec<f64>> {
    let space = rho.space();
    space.check_mode(mode)?;
    let mut p = vec![0.0; space.phonon_cutoffs()[mode]];
    for i in 0..space.total_dim() {
        let (_, occ) = space.decompose(i);
        p[occ[mode]] += rho.data()[(i, i)].re;
    }
    Ok(p)
}

pub fn mean_phonon_number(rho: &DensityMatrix, mode: usize) -> ObsResult<f64> {
    Ok(number_distribution(rho, mode)?.iter().enumerate().map(|(m, p)| m as f64 * p).sum())
}

/// `⟨ψ|ρ|ψ⟩`, clamped to [0, 1].
pub fn fidelity(rho: &DensityMatrix, target: &StateVector) -> ObsResult<f64> {
    if rho.space() != target.space() {
        return Err(HilbertError::SpaceMismatch.into());
    }
    let psi = target.data();
    Ok(psi.dotc(&(rho.data() * psi)).re.clamp(0.0, 1.0))
}

pub fn purity(rho: &DensityMatrix) -> f64 { rho.purity() }

/// `T_eff = (ħω/k_B) / (−ln(1 − P₀))`.
pub fn effective_temperature(p0: f64, omega: f64) -> ObsResult<f64> {
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(ObservableError::DegeneratePopulation(p0));
    }
    effective_temperature_from_excited(1.0 - p0, omega)
}

/// Same as [`effective_temperature`] but from the excited weight `1 − P₀`,
/// which keeps full precision when `P₀` is within rounding of 1.
pub fn effective_temperature_from_excited(excited: f64, omega: f64) -> ObsResult<f64> {
    if !(excited > 0.0 && excited < 1.0) {
        return Err(ObservableError::DegeneratePopulation(1.0 - excited));
    }
    if !(omega > 0.0) {
        return Err(ObservableError::BadFrequency);
    }
    Ok(HBAR * omega / K_B / -excited.ln())
}

/// Ground-state population of a thermal oscillator at temperature `t`.
pub fn thermal_ground_population(omega: f64, t: f64) -> f64 {
    if t == 0.0 { 1.0 } else { -(-HBAR * omega / (K_B * t)).exp_m1() }
}

/// Rate `Γ` of an exponential approach `x(t) → x∞`, from a least-squares fit
/// of `ln|x∞ − x(t)|` over the stretch where the gap lies between 80% and 2%
/// of its initial value.
pub fn fit_relaxation_rate(times: &[f64], values: &[f64], asymptote: f64) -> Option<f64> {
    let gap0 = (asymptote - *values.first()?).abs();
    if gap0 == 0.0 {
        return None;
    }
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .map(|(&t, &x)| (t, (asymptote - x).abs() / gap0))
        .filter(|&(_, r)| (0.02..=0.8).contains(&r))
        .map(|(t, r)| (t, r.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t, b + y));
    let (mt, my) = (st / n, sy / n);
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + (t - mt) * (y - my), b + (t - mt).powi(2)));
    (sxx > 0.0).then(|| -sxy / sxx)
}

/// Wootters concurrence of the two-mode state projected on the single-phonon
/// qubit block `{|0⟩, |1⟩}⊗{|0⟩, |1⟩}`.
pub fn single_phonon_concurrence(modes: &ReducedState) -> ObsResult<f64> {
    if modes.factors().len() != 2 || modes.dims().iter().any(|&d| d < 2) {
        return Err(ObservableError::NotTwoMode);
    }
    let n2 = modes.dims()[1];
    let idx = [0, 1, n2, n2 + 1];
    let rho = DMatrix::from_fn(4, 4, |i, j| modes.data()[(idx[i], idx[j])]);
    Ok(concurrence(&rho))
}

/// Wootters concurrence of a 4×4 two-qubit density matrix.
pub fn concurrence(rho: &DMatrix<C64>) -> f64 {
    let yy = DMatrix::from_row_slice(
        4,
        4,
        &[0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0],
    )
    .map(|x| C64::new(x, 0.0));
    let tilde = &yy * rho.conjugate() * &yy;
    // eigenvalues of √(√ρ ρ̃ √ρ) are the λ_i of the Wootters formula
    let sqrt_rho = hermitian_sqrt(rho);
    let r = &sqrt_rho * tilde * &sqrt_rho;
    let mut lam: Vec<f64> = hermitian_eigenvalues(&r).into_iter().map(|x| x.max(0.0).sqrt()).collect();
    lam.sort_by(|a, b| b.total_cmp(a));
    (lam[0] - lam[1] - lam[2] - lam[3]).max(0.0)
}

fn hermitian_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(herm);
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| C64::new(x.max(0.0).sqrt(), 0.0)));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// What to record along a trajectory.
#[derive(Clone, Debug)]
pub enum ObservableKind {
    /// `|level, m…⟩⟨level, m…|`.
    Population { level: String, occupations: Vec<usize> },
    /// Atomic level population, phonons traced out.
    LevelPopulation { level: String },
    /// Probability of `m` phonons in `mode`.
    PhononNumber { mode: usize, m: usize },
    GroundState { mode: usize },
    /// `1 − P₀` summed over `m ≥ 1`.
    Excited { mode: usize },
    MeanPhonon { mode: usize },
    Fidelity { target: StateVector },
    Purity,
    /// From the ground-state population of `mode` at angular frequency `omega`.
    EffectiveTemperature { mode: usize, omega: f64 },
}

#[derive(Clone, Debug)]
pub struct ObservableSpec {
    pub name: String,
    pub kind: ObservableKind,
}

fn occ_suffix(occupations: &[usize]) -> String {
    occupations.iter().map(|m| m.to_string()).collect::<Vec<_>>().join("_")
}

fn mode_suffix(space: &CompositeSpace, mode: usize) -> String {
    if space.mode_count() > 1 { format!("_mode{}", mode + 1) } else { String::new() }
}

impl ObservableSpec {
    pub fn population(level: &str, occupations: &[usize]) -> Self {
        Self {
            name: format!("pop_{level}_m{}", occ_suffix(occupations)),
            kind: ObservableKind::Population { level: level.into(), occupations: occupations.to_vec() },
        }
    }

    pub fn level_population(level: &str) -> Self {
        Self { name: format!("pop_{level}"), kind: ObservableKind::LevelPopulation { level: level.into() } }
    }

    pub fn phonon_number(space: &CompositeSpace, mode: usize, m: usize) -> Self {
        let name = if space.mode_count() > 1 { format!("pn{}_m{m}", mode + 1) } else { format!("pn_m{m}") };
        Self { name, kind: ObservableKind::PhononNumber { mode, m } }
    }

    pub fn ground_state(space: &CompositeSpace, mode: usize) -> Self {
        Self { name: format!("p0{}", mode_suffix(space, mode)), kind: ObservableKind::GroundState { mode } }
    }

    pub fn excited(space: &CompositeSpace, mode: usize) -> Self {
        Self { name: format!("p_exc{}", mode_suffix(space, mode)), kind: ObservableKind::Excited { mode } }
    }

    pub fn mean_phonon(space: &CompositeSpace, mode: usize) -> Self {
        Self { name: format!("n_mean{}", mode_suffix(space, mode)), kind: ObservableKind::MeanPhonon { mode } }
    }

    pub fn fidelity(target: StateVector) -> Self {
        Self { name: "fidelity".into(), kind: ObservableKind::Fidelity { target } }
    }

    pub fn purity() -> Self { Self { name: "purity".into(), kind: ObservableKind::Purity } }

    pub fn effective_temperature(space: &CompositeSpace, mode: usize, omega: f64) -> Self {
        Self {
            name: format!("t_eff_k{}", mode_suffix(space, mode)),
            kind: ObservableKind::EffectiveTemperature { mode, omega },
        }
    }

    /// Checks labels, modes and targets against `space`.
    pub fn validate(&self, space: &CompositeSpace) -> ObsResult<()> {
        match &self.kind {
            ObservableKind::Population { level, occupations } => {
                space.level_index(level)?;
                if occupations.len() != space.mode_count() {
                    return Err(HilbertError::OccupationCount { expected: space.mode_count(), got: occupations.len() }.into());
                }
                for (mode, (&m, &n)) in occupations.iter().zip(space.phonon_cutoffs()).enumerate() {
                    if m >= n {
                        return Err(HilbertError::OccupationTooLarge { mode, occupation: m, cutoff: n }.into());
                    }
                }
            }
            ObservableKind::LevelPopulation { level } => {
                space.level_index(level)?;
            }
            ObservableKind::PhononNumber { mode, m } => {
                space.check_mode(*mode)?;
                let n = space.phonon_cutoffs()[*mode];
                if *m >= n {
                    return Err(HilbertError::OccupationTooLarge { mode: *mode, occupation: *m, cutoff: n }.into());
                }
            }
            ObservableKind::GroundState { mode }
            | ObservableKind::Excited { mode }
            | ObservableKind::MeanPhonon { mode } => space.check_mode(*mode)?,
            ObservableKind::EffectiveTemperature { mode, omega } => {
                space.check_mode(*mode)?;
                if !(*omega > 0.0) {
                    return Err(ObservableError::BadFrequency);
                }
            }
            ObservableKind::Fidelity { target } => {
                if target.space().as_ref() != space {
                    return Err(HilbertError::SpaceMismatch.into());
                }
            }
            ObservableKind::Purity => {}
        }
        Ok(())
    }

    /// Weights `w_ij` with value `Re Σ w_ij ρ_ij` when the observable is
    /// linear in ρ; `None` for purity and effective temperature.
    pub fn linear_weights(&self, space: &CompositeSpace) -> Option<Vec<(usize, usize, C64)>> {
        let one = C64::new(1.0, 0.0);
        let diag = |pred: &dyn Fn(usize, &[usize]) -> Option<f64>| -> Vec<(usize, usize, C64)> {
            (0..space.total_dim())
                .filter_map(|i| {
                    let (a, occ) = space.decompose(i);
                    pred(a, &occ).map(|w| (i, i, C64::new(w, 0.0)))
                })
                .collect()
        };
        match &self.kind {
            ObservableKind::Population { level, occupations } => {
                let a = space.level_index(level).ok()?;
                Some(vec![{
                    let i = space.index(a, occupations);
                    (i, i, one)
                }])
            }
            ObservableKind::LevelPopulation { level } => {
                let a0 = space.level_index(level).ok()?;
                Some(diag(&|a, _| (a == a0).then_some(1.0)))
            }
            ObservableKind::PhononNumber { mode, m } => Some(diag(&|_, occ| (occ[*mode] == *m).then_some(1.0))),
            ObservableKind::GroundState { mode } => Some(diag(&|_, occ| (occ[*mode] == 0).then_some(1.0))),
            ObservableKind::Excited { mode } => Some(diag(&|_, occ| (occ[*mode] > 0).then_some(1.0))),
            ObservableKind::MeanPhonon { mode } => {
                Some(diag(&|_, occ| (occ[*mode] > 0).then_some(occ[*mode] as f64)))
            }
            ObservableKind::Fidelity { target } => {
                let psi: &DVector<C64> = target.data();
                let nz: Vec<(usize, C64)> =
                    psi.iter().copied().enumerate().filter(|(_, z)| z.norm() > 0.0).collect();
                Some(
                    nz.iter()
                        .flat_map(|&(i, zi)| nz.iter().map(move |&(j, zj)| (i, j, zi.conj() * zj)))
                        .collect(),
                )
            }
            ObservableKind::Purity | ObservableKind::EffectiveTemperature { .. } => None,
        }
    }

    /// Evaluates on a full density matrix.
    pub fn evaluate(&self, rho: &DensityMatrix) -> ObsResult<f64> {
        match &self.kind {
            ObservableKind::Purity => Ok(purity(rho)),
            ObservableKind::EffectiveTemperature { mode, omega } => {
                let excited = number_distribution(rho, *mode)?[1..].iter().sum();
                effective_temperature_from_excited(excited, *omega)
            }
            ObservableKind::Fidelity { target } => fidelity(rho, target),
            _ => {
                self.validate(rho.space())?;
                let w = self.linear_weights(rho.space()).expect("linear observable");
                Ok(w.into_iter().map(|(i, j, w)| w * rho.data()[(i, j)]).sum::<C64>().re)
            }
        }
    }
}

/// Reduced state of all phonon modes.
pub fn phonon_state(rho: &DensityMatrix) -> ObsResult<ReducedState> {
    let modes: Vec<Factor> = (0..rho.space().mode_count()).map(Factor::Mode).collect();
    Ok(rho.partial_trace(&modes)?)
}
