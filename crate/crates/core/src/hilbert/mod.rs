//! Composite atom ⊗ phonon Hilbert spaces, lifted operators, and states.
//!
//! Factor ordering is fixed: the atomic factor first, then the phonon modes in
//! index order. A basis index therefore reads `atom · ∏N + m₁ · (N₂…) + …`,
//! i.e. the atom is the slowest-varying digit. Kets written `|m₁, a, m₂⟩`
//! elsewhere are always mapped onto this order through label-based accessors.

pub mod sparse;

use std::{
    fmt,
    ops::{ Add, Mul, Sub },
    sync::Arc,
};

use nalgebra::{ DMatrix, DVector, SymmetricEigen };
use num_complex::Complex64 as C64;
use thiserror::Error;

pub use sparse::CsrMatrix;

/// Largest truncated-tail weight accepted when building thermal states.
pub const THERMAL_TAIL_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HilbertError {
    #[error("atomic factor needs at least two levels, got {0}")]
    DegenerateAtom(usize),
    #[error("duplicate atomic level label `{0}`")]
    DuplicateLevel(String),
    #[error("phonon mode {mode} has cutoff {cutoff}; each mode needs at least 2 Fock states")]
    DegenerateMode { mode: usize, cutoff: usize },
    #[error("unknown atomic level `{0}`")]
    UnknownLevel(String),
    #[error("mode index {index} out of range for a space with {modes} mode(s)")]
    BadMode { index: usize, modes: usize },
    #[error("expected {expected} occupation number(s), got {got}")]
    OccupationCount { expected: usize, got: usize },
    #[error("occupation {occupation} exceeds cutoff {cutoff} of mode {mode}")]
    OccupationTooLarge { mode: usize, occupation: usize, cutoff: usize },
    #[error("negative thermal occupation {0}")]
    NegativeOccupation(f64),
    #[error(
        "thermal tail weight {tail:.3e} on mode {mode} exceeds {tol:e}; cutoff {cutoff} too small, \
         need at least {required}"
    )]
    ThermalTail { mode: usize, cutoff: usize, tail: f64, tol: f64, required: usize },
    #[error("operands live on different spaces")]
    SpaceMismatch,
    #[error("zero-norm state")]
    ZeroNorm,
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
}

pub type HilbertResult<T> = Result<T, HilbertError>;

/// One tensor factor of a [`CompositeSpace`].
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Factor {
    Atom,
    Mode(usize),
}

/// Tensor product of an atomic level set and truncated phonon modes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompositeSpace {
    atom_levels: Vec<String>,
    phonon_cutoffs: Vec<usize>,
    total_dim: usize,
}

impl CompositeSpace {
    pub fn new<S: AsRef<str>>(atom_levels: &[S], phonon_cutoffs: &[usize]) -> HilbertResult<Self> {
        if atom_levels.len() < 2 {
            return Err(HilbertError::DegenerateAtom(atom_levels.len()));
        }
        let mut labels: Vec<String> = Vec::with_capacity(atom_levels.len());
        for l in atom_levels {
            let l = l.as_ref().to_string();
            if labels.contains(&l) {
                return Err(HilbertError::DuplicateLevel(l));
            }
            labels.push(l);
        }
        if let Some((mode, &cutoff)) = phonon_cutoffs.iter().enumerate().find(|(_, &n)| n < 2) {
            return Err(HilbertError::DegenerateMode { mode, cutoff });
        }
        let total_dim = labels.len() * phonon_cutoffs.iter().product::<usize>();
        Ok(Self { atom_levels: labels, phonon_cutoffs: phonon_cutoffs.to_vec(), total_dim })
    }

    pub fn shared<S: AsRef<str>>(atom_levels: &[S], phonon_cutoffs: &[usize]) -> HilbertResult<Arc<Self>> {
        Self::new(atom_levels, phonon_cutoffs).map(Arc::new)
    }

    pub fn total_dim(&self) -> usize { self.total_dim }
    pub fn atom_levels(&self) -> &[String] { &self.atom_levels }
    pub fn atom_dim(&self) -> usize { self.atom_levels.len() }
    pub fn phonon_cutoffs(&self) -> &[usize] { &self.phonon_cutoffs }
    pub fn mode_count(&self) -> usize { self.phonon_cutoffs.len() }

    pub fn level_index(&self, label: &str) -> HilbertResult<usize> {
        self.atom_levels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| HilbertError::UnknownLevel(label.to_string()))
    }

    pub fn check_mode(&self, mode: usize) -> HilbertResult<()> {
        if mode < self.mode_count() {
            Ok(())
        } else {
            Err(HilbertError::BadMode { index: mode, modes: self.mode_count() })
        }
    }

    pub fn factor_dim(&self, factor: Factor) -> usize {
        match factor {
            Factor::Atom => self.atom_dim(),
            Factor::Mode(k) => self.phonon_cutoffs[k],
        }
    }

    /// Factors in storage order.
    pub fn factors(&self) -> Vec<Factor> {
        std::iter::once(Factor::Atom).chain((0..self.mode_count()).map(Factor::Mode)).collect()
    }

    pub fn factor_dims(&self) -> Vec<usize> {
        self.factors().into_iter().map(|f| self.factor_dim(f)).collect()
    }

    /// Basis index of `|atom, m₁, m₂, …⟩`.
    pub fn index(&self, atom: usize, occupations: &[usize]) -> usize {
        debug_assert_eq!(occupations.len(), self.mode_count());
        occupations
            .iter()
            .zip(&self.phonon_cutoffs)
            .fold(atom, |acc, (&m, &n)| acc * n + m)
    }

    /// Inverse of [`index`](Self::index).
    pub fn decompose(&self, mut idx: usize) -> (usize, Vec<usize>) {
        let mut occ = vec![0; self.mode_count()];
        for (k, &n) in self.phonon_cutoffs.iter().enumerate().rev() {
            occ[k] = idx % n;
            idx /= n;
        }
        (idx, occ)
    }

    fn validate_occupations(&self, occupations: &[usize]) -> HilbertResult<()> {
        if occupations.len() != self.mode_count() {
            return Err(HilbertError::OccupationCount {
                expected: self.mode_count(),
                got: occupations.len(),
            });
        }
        for (mode, (&m, &n)) in occupations.iter().zip(&self.phonon_cutoffs).enumerate() {
            if m >= n {
                return Err(HilbertError::OccupationTooLarge { mode, occupation: m, cutoff: n });
            }
        }
        Ok(())
    }

    /// Human-readable ket label, e.g. `|p,0⟩` or `|s,1,0⟩`.
    pub fn ket_label(&self, idx: usize) -> String {
        let (a, occ) = self.decompose(idx);
        let mut s = format!("|{}", self.atom_levels[a]);
        for m in occ {
            s.push_str(&format!(",{m}"));
        }
        s.push('⟩');
        s
    }
}

/// Ladder matrix `b` on a single truncated mode.
fn local_annihilation(cutoff: usize) -> CsrMatrix {
    CsrMatrix::from_triplets(
        cutoff,
        (1..cutoff).map(|m| (m - 1, m, C64::new((m as f64).sqrt(), 0.0))),
    )
}

/// A linear operator on a [`CompositeSpace`].
#[derive(Clone, Debug)]
pub struct Operator {
    space: Arc<CompositeSpace>,
    matrix: CsrMatrix,
}

impl Operator {
    pub fn from_matrix(space: &Arc<CompositeSpace>, matrix: CsrMatrix) -> Self {
        assert_eq!(matrix.dim(), space.total_dim(), "matrix does not match space dimension");
        Self { space: Arc::clone(space), matrix }
    }

    pub fn zero(space: &Arc<CompositeSpace>) -> Self {
        Self::from_matrix(space, CsrMatrix::zeros(space.total_dim()))
    }

    pub fn identity(space: &Arc<CompositeSpace>) -> Self {
        Self::from_matrix(space, CsrMatrix::identity(space.total_dim()))
    }

    /// Lifts an operator acting on one factor to the full space,
    /// `I ⊗ … ⊗ local ⊗ … ⊗ I`.
    pub fn lift(space: &Arc<CompositeSpace>, factor: Factor, local: &CsrMatrix) -> HilbertResult<Self> {
        if let Factor::Mode(k) = factor {
            space.check_mode(k)?;
        }
        assert_eq!(local.dim(), space.factor_dim(factor), "local operator has wrong dimension");
        let matrix = space
            .factors()
            .into_iter()
            .map(|f| if f == factor { local.clone() } else { CsrMatrix::identity(space.factor_dim(f)) })
            .reduce(|acc, m| acc.kron(&m))
            .expect("space has an atomic factor");
        Ok(Self::from_matrix(space, matrix))
    }

    /// Phonon annihilation operator `b` of `mode`, with `⟨m−1|b|m⟩ = √m`.
    pub fn annihilation(space: &Arc<CompositeSpace>, mode: usize) -> HilbertResult<Self> {
        space.check_mode(mode)?;
        Self::lift(space, Factor::Mode(mode), &local_annihilation(space.phonon_cutoffs()[mode]))
    }

    pub fn creation(space: &Arc<CompositeSpace>, mode: usize) -> HilbertResult<Self> {
        Ok(Self::annihilation(space, mode)?.dagger())
    }

    pub fn number(space: &Arc<CompositeSpace>, mode: usize) -> HilbertResult<Self> {
        let b = Self::annihilation(space, mode)?;
        Ok(&b.dagger() * &b)
    }

    /// Atomic transition operator `σ_ab = |a⟩⟨b|` lifted over the modes.
    pub fn transition(space: &Arc<CompositeSpace>, a: &str, b: &str) -> HilbertResult<Self> {
        let (ia, ib) = (space.level_index(a)?, space.level_index(b)?);
        let local = CsrMatrix::from_triplets(space.atom_dim(), [(ia, ib, C64::new(1.0, 0.0))]);
        Self::lift(space, Factor::Atom, &local)
    }

    /// Projector onto the Fock state `|m⟩` of one mode.
    pub fn fock_projector(space: &Arc<CompositeSpace>, mode: usize, m: usize) -> HilbertResult<Self> {
        space.check_mode(mode)?;
        let n = space.phonon_cutoffs()[mode];
        if m >= n {
            return Err(HilbertError::OccupationTooLarge { mode, occupation: m, cutoff: n });
        }
        Self::lift(space, Factor::Mode(mode), &CsrMatrix::from_triplets(n, [(m, m, C64::new(1.0, 0.0))]))
    }

    pub fn space(&self) -> &Arc<CompositeSpace> { &self.space }
    pub fn matrix(&self) -> &CsrMatrix { &self.matrix }
    pub fn dim(&self) -> usize { self.matrix.dim() }
    pub fn to_dense(&self) -> DMatrix<C64> { self.matrix.to_dense() }

    pub fn dagger(&self) -> Self {
        Self { space: Arc::clone(&self.space), matrix: self.matrix.adjoint() }
    }

    pub fn scale(&self, a: impl Into<C64>) -> Self {
        Self { space: Arc::clone(&self.space), matrix: self.matrix.scale(a.into()) }
    }

    pub fn commutator(&self, rhs: &Self) -> Self { &(self * rhs) - &(rhs * self) }

    pub fn hermiticity_error(&self) -> f64 { self.matrix.hermiticity_error() }

    pub fn is_hermitian(&self, tol: f64) -> bool { self.hermiticity_error() < tol }

    pub fn apply(&self, psi: &StateVector) -> HilbertResult<StateVector> {
        same_space(&self.space, &psi.space)?;
        let data = DVector::from_vec(self.matrix.mul_vec(psi.data.as_slice()));
        Ok(StateVector { space: Arc::clone(&self.space), data })
    }

    fn assert_same_space(&self, rhs: &Self) {
        assert!(
            Arc::ptr_eq(&self.space, &rhs.space) || self.space == rhs.space,
            "operator algebra across different spaces"
        );
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.assert_same_space(rhs);
        Operator { space: Arc::clone(&self.space), matrix: self.matrix.add(&rhs.matrix) }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.assert_same_space(rhs);
        Operator {
            space: Arc::clone(&self.space),
            matrix: self.matrix.add(&rhs.matrix.scale(C64::new(-1.0, 0.0))),
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.assert_same_space(rhs);
        Operator { space: Arc::clone(&self.space), matrix: self.matrix.matmul(&rhs.matrix) }
    }
}

fn same_space(a: &Arc<CompositeSpace>, b: &Arc<CompositeSpace>) -> HilbertResult<()> {
    if Arc::ptr_eq(a, b) || a == b { Ok(()) } else { Err(HilbertError::SpaceMismatch) }
}

/// Pure state on a [`CompositeSpace`].
#[derive(Clone, Debug)]
pub struct StateVector {
    space: Arc<CompositeSpace>,
    data: DVector<C64>,
}

impl StateVector {
    /// `|atom_label, m₁, m₂, …⟩`.
    pub fn fock(space: &Arc<CompositeSpace>, atom_label: &str, occupations: &[usize]) -> HilbertResult<Self> {
        let a = space.level_index(atom_label)?;
        space.validate_occupations(occupations)?;
        let mut data = DVector::zeros(space.total_dim());
        data[space.index(a, occupations)] = C64::new(1.0, 0.0);
        Ok(Self { space: Arc::clone(space), data })
    }

    /// Normalized superposition `Σ cₖ |aₖ, mₖ⟩`.
    pub fn superposition(
        space: &Arc<CompositeSpace>,
        terms: &[(C64, &str, &[usize])],
    ) -> HilbertResult<Self> {
        let mut data = DVector::zeros(space.total_dim());
        for &(c, label, occ) in terms {
            let a = space.level_index(label)?;
            space.validate_occupations(occ)?;
            data[space.index(a, occ)] += c;
        }
        Self::from_vector(space, data)
    }

    /// Normalizes `data`; errors on the zero vector.
    pub fn from_vector(space: &Arc<CompositeSpace>, data: DVector<C64>) -> HilbertResult<Self> {
        assert_eq!(data.len(), space.total_dim());
        let n = data.norm();
        if n == 0.0 {
            return Err(HilbertError::ZeroNorm);
        }
        Ok(Self { space: Arc::clone(space), data: data / C64::new(n, 0.0) })
    }

    pub fn space(&self) -> &Arc<CompositeSpace> { &self.space }
    pub fn data(&self) -> &DVector<C64> { &self.data }
    pub fn norm(&self) -> f64 { self.data.norm() }

    pub fn inner(&self, rhs: &Self) -> HilbertResult<C64> {
        same_space(&self.space, &rhs.space)?;
        Ok(self.data.dotc(&rhs.data))
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix { space: Arc::clone(&self.space), data: &self.data * self.data.adjoint() }
    }
}

/// Mixed state on a [`CompositeSpace`].
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    space: Arc<CompositeSpace>,
    data: DMatrix<C64>,
}

/// Truncated Bose–Einstein weights `p_m ∝ (n/(n+1))^m`, m = 0..cutoff−1.
pub fn thermal_distribution(n_th: f64, cutoff: usize) -> Vec<f64> {
    if n_th == 0.0 {
        let mut p = vec![0.0; cutoff];
        p[0] = 1.0;
        return p;
    }
    let r = n_th / (n_th + 1.0);
    let raw: Vec<f64> = (0..cutoff).map(|m| r.powi(m as i32)).collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / z).collect()
}

/// Weight the untruncated thermal distribution puts on `m ≥ cutoff`.
pub fn thermal_tail_weight(n_th: f64, cutoff: usize) -> f64 {
    if n_th == 0.0 { 0.0 } else { (n_th / (n_th + 1.0)).powi(cutoff as i32) }
}

/// Smallest cutoff whose thermal tail weight is below `tol`.
pub fn required_cutoff(n_th: f64, tol: f64) -> usize {
    if n_th == 0.0 {
        return 2;
    }
    let r = n_th / (n_th + 1.0);
    ((tol.ln() / r.ln()).floor() as usize + 1).max(2)
}

impl DensityMatrix {
    pub fn from_matrix(space: &Arc<CompositeSpace>, data: DMatrix<C64>) -> Self {
        assert_eq!(data.nrows(), space.total_dim());
        assert_eq!(data.ncols(), space.total_dim());
        Self { space: Arc::clone(space), data }
    }

    /// Atom in `|atom_label⟩`, every mode in its truncated thermal state.
    pub fn thermal(space: &Arc<CompositeSpace>, atom_label: &str, n_th_per_mode: &[f64]) -> HilbertResult<Self> {
        let a = space.level_index(atom_label)?;
        if n_th_per_mode.len() != space.mode_count() {
            return Err(HilbertError::OccupationCount {
                expected: space.mode_count(),
                got: n_th_per_mode.len(),
            });
        }
        let mut dists = Vec::with_capacity(space.mode_count());
        for (mode, (&n, &cutoff)) in n_th_per_mode.iter().zip(space.phonon_cutoffs()).enumerate() {
            if !(n >= 0.0) {
                return Err(HilbertError::NegativeOccupation(n));
            }
            let tail = thermal_tail_weight(n, cutoff);
            if tail >= THERMAL_TAIL_TOL {
                return Err(HilbertError::ThermalTail {
                    mode,
                    cutoff,
                    tail,
                    tol: THERMAL_TAIL_TOL,
                    required: required_cutoff(n, THERMAL_TAIL_TOL),
                });
            }
            dists.push(thermal_distribution(n, cutoff));
        }
        let dim = space.total_dim();
        let mut data = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            let (ai, occ) = space.decompose(i);
            if ai != a {
                continue;
            }
            let p: f64 = occ.iter().zip(&dists).map(|(&m, d)| d[m]).product();
            data[(i, i)] = C64::new(p, 0.0);
        }
        Ok(Self { space: Arc::clone(space), data })
    }

    pub fn space(&self) -> &Arc<CompositeSpace> { &self.space }
    pub fn data(&self) -> &DMatrix<C64> { &self.data }
    pub fn into_data(self) -> DMatrix<C64> { self.data }

    pub fn trace(&self) -> C64 { self.data.trace() }

    pub fn purity(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.data.nrows();
        let mut err: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                err = err.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        err
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.data)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Checks trace, Hermiticity and the positivity floor.
    pub fn validate(&self) -> HilbertResult<()> {
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-8 {
            return Err(HilbertError::InvalidDensity(format!("trace {tr}")));
        }
        let h = self.hermiticity_error();
        if h > 1e-10 {
            return Err(HilbertError::InvalidDensity(format!("hermiticity error {h:.3e}")));
        }
        let lo = self.min_eigenvalue();
        if lo < -1e-6 {
            return Err(HilbertError::InvalidDensity(format!("eigenvalue {lo:.3e} below -1e-6")));
        }
        Ok(())
    }

    /// Reduced state on `keep`, listed in any order; the result stores the
    /// kept factors in storage order.
    pub fn partial_trace(&self, keep: &[Factor]) -> HilbertResult<ReducedState> {
        for f in keep {
            if let Factor::Mode(k) = *f {
                self.space.check_mode(k)?;
            }
        }
        let factors: Vec<Factor> = self.space.factors().into_iter().filter(|f| keep.contains(f)).collect();
        let dims = self.space.factor_dims();
        let all = self.space.factors();
        Ok(ReducedState::from_parent(&self.data, &all, &dims, &factors))
    }
}

/// Eigenvalues (ascending) of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = SymmetricEigen::new(herm).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Density matrix on a subset of factors, produced by partial trace.
#[derive(Clone, Debug)]
pub struct ReducedState {
    factors: Vec<Factor>,
    dims: Vec<usize>,
    data: DMatrix<C64>,
}

fn digits(mut idx: usize, dims: &[usize]) -> Vec<usize> {
    let mut d = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        d[k] = idx % dims[k];
        idx /= dims[k];
    }
    d
}

fn compose(d: &[usize], dims: &[usize]) -> usize {
    d.iter().zip(dims).fold(0, |acc, (&x, &n)| acc * n + x)
}

impl ReducedState {
    fn from_parent(data: &DMatrix<C64>, all: &[Factor], dims: &[usize], keep: &[Factor]) -> Self {
        let kept_pos: Vec<usize> = all.iter().enumerate().filter(|(_, f)| keep.contains(f)).map(|(i, _)| i).collect();
        let traced_pos: Vec<usize> = (0..all.len()).filter(|i| !kept_pos.contains(i)).collect();
        let kept_dims: Vec<usize> = kept_pos.iter().map(|&i| dims[i]).collect();
        let traced_dims: Vec<usize> = traced_pos.iter().map(|&i| dims[i]).collect();
        let kd: usize = kept_dims.iter().product();
        let td: usize = traced_dims.iter().product();
        let full_index = |k: usize, t: usize| {
            let kdig = digits(k, &kept_dims);
            let tdig = digits(t, &traced_dims);
            let mut d = vec![0; all.len()];
            kept_pos.iter().zip(&kdig).for_each(|(&p, &x)| d[p] = x);
            traced_pos.iter().zip(&tdig).for_each(|(&p, &x)| d[p] = x);
            compose(&d, dims)
        };
        let index: Vec<Vec<usize>> = (0..kd).map(|k| (0..td).map(|t| full_index(k, t)).collect()).collect();
        let mut out = DMatrix::zeros(kd, kd);
        for i in 0..kd {
            for j in 0..kd {
                out[(i, j)] = (0..td).map(|t| data[(index[i][t], index[j][t])]).sum();
            }
        }
        Self { factors: keep.to_vec(), dims: kept_dims, data: out }
    }

    pub fn factors(&self) -> &[Factor] { &self.factors }
    pub fn dims(&self) -> &[usize] { &self.dims }
    pub fn data(&self) -> &DMatrix<C64> { &self.data }
    pub fn trace(&self) -> C64 { self.data.trace() }
    pub fn purity(&self) -> f64 { self.data.iter().map(|z| z.norm_sqr()).sum() }
    pub fn eigenvalues(&self) -> Vec<f64> { hermitian_eigenvalues(&self.data) }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.data - self.data.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Traces out further factors of an already-reduced state.
    pub fn partial_trace(&self, keep: &[Factor]) -> ReducedState {
        let keep: Vec<Factor> = self.factors.iter().copied().filter(|f| keep.contains(f)).collect();
        Self::from_parent(&self.data, &self.factors, &self.dims, &keep)
    }

    /// Von Neumann entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.eigenvalues().into_iter().filter(|&p| p > 1e-14).map(|p| -p * p.ln()).sum()
    }

    /// `⟨ψ|ρ|ψ⟩` for a pure vector given in this state's basis.
    pub fn overlap(&self, psi: &DVector<C64>) -> f64 {
        psi.dotc(&(&self.data * psi)).re
    }
}

impl fmt::Display for CompositeSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.atom_levels.join(","))?;
        for n in &self.phonon_cutoffs {
            write!(f, " ⊗ F({n})")?;
        }
        Ok(())
    }
}

/// `tr(Aρ)` or `⟨ψ|A|ψ⟩`.
pub trait Expectation {
    fn expectation(&self, op: &Operator) -> HilbertResult<C64>;
}

impl Expectation for StateVector {
    fn expectation(&self, op: &Operator) -> HilbertResult<C64> {
        let a_psi = op.apply(self)?;
        self.inner(&a_psi)
    }
}

impl Expectation for DensityMatrix {
    fn expectation(&self, op: &Operator) -> HilbertResult<C64> {
        same_space(op.space(), &self.space)?;
        Ok(op.matrix().triplets().map(|(r, c, v)| v * self.data[(c, r)]).sum())
    }
}

#[cfg(test)]
mod tests;
