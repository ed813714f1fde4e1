//! Vectorised Lindblad generator restricted to the entries of ρ that can
//! ever become nonzero.
//!
//! Starting from the nonzero entries of ρ₀, the support is closed under
//! every segment's generator. Entries outside it stay exactly zero, so the
//! integration runs on the support alone. Excitation-conserving couplings
//! make the support block-sparse and much smaller than `dim²`.

use std::{ collections::VecDeque, sync::Arc };

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{
    assemble_hamiltonian, effective_hamiltonian, integrator::{ Dopri5, StepStats }, DynResult, DynamicsError,
    HamiltonianSegment, LindbladChannel, SolverOptions,
};
use crate::{
    hilbert::{ CompositeSpace, CsrMatrix, DensityMatrix },
    observables::{ effective_temperature_from_excited, ObservableKind, ObservableSpec },
};

const ABSENT: u32 = u32::MAX;

/// Index map between density-matrix entries `(i, j)` and vector slots.
#[derive(Clone, Debug)]
pub struct Support {
    dim: usize,
    entries: Vec<(usize, usize)>,
    slot: Vec<u32>,
}

impl Support {
    pub fn len(&self) -> usize { self.entries.len() }
    pub fn is_empty(&self) -> bool { self.entries.is_empty() }
    pub fn entries(&self) -> &[(usize, usize)] { &self.entries }

    pub fn slot(&self, i: usize, j: usize) -> Option<usize> {
        match self.slot[i * self.dim + j] {
            ABSENT => None,
            s => Some(s as usize),
        }
    }

    fn insert(&mut self, i: usize, j: usize) -> bool {
        let k = i * self.dim + j;
        if self.slot[k] != ABSENT {
            return false;
        }
        self.slot[k] = self.entries.len() as u32;
        self.entries.push((i, j));
        true
    }
}

/// Per-segment sparse generators for one initial state.
struct Generator {
    /// Transpose of `H_eff`: row `k` lists `(i, H_eff[i,k])`.
    heff_t: CsrMatrix,
    /// Transposes of the jump operators with their rates.
    jumps_t: Vec<(CsrMatrix, f64)>,
}

impl Generator {
    fn new(h: &CsrMatrix, channels: &[&LindbladChannel]) -> Self {
        Self {
            heff_t: effective_hamiltonian(h, channels).transpose(),
            jumps_t: channels.iter().filter(|c| c.rate > 0.0).map(|c| (c.jump.matrix().transpose(), c.rate)).collect(),
        }
    }

    /// Calls `f(i, j, coefficient)` for every image of the basis element `|k⟩⟨l|`.
    fn images(&self, k: usize, l: usize, mut f: impl FnMut(usize, usize, C64)) {
        let mi = C64::new(0.0, -1.0);
        for (i, h) in self.heff_t.row(k) {
            f(i, l, mi * h);
        }
        for (j, h) in self.heff_t.row(l) {
            f(k, j, -mi * h.conj());
        }
        for (lt, rate) in &self.jumps_t {
            for (i, a) in lt.row(k) {
                for (j, b) in lt.row(l) {
                    f(i, j, a * b.conj() * *rate);
                }
            }
        }
    }

    fn restricted(&self, support: &Support) -> CsrMatrix {
        let mut trips = Vec::new();
        for (col, &(k, l)) in support.entries().iter().enumerate() {
            self.images(k, l, |i, j, v| {
                let row = support.slot(i, j).expect("support is closed under the generator");
                trips.push((row, col, v));
            });
        }
        CsrMatrix::from_triplets(support.len(), trips)
    }
}

/// Integrates the vectorised state through a fixed list of segments.
pub struct Propagator {
    space: Arc<CompositeSpace>,
    support: Support,
    generators: Vec<CsrMatrix>,
    current: usize,
    state: Vec<C64>,
    stepper: Dopri5,
}

impl Propagator {
    pub fn new(
        rho0: &DensityMatrix,
        segments: &[HamiltonianSegment],
        channels: &[LindbladChannel],
        opts: &SolverOptions,
    ) -> DynResult<Self> {
        let space = rho0.space().clone();
        let dim = space.total_dim();
        for ch in channels.iter().chain(segments.iter().flat_map(|s| &s.channels)) {
            if ch.jump.space().as_ref() != space.as_ref() {
                return Err(DynamicsError::DimensionMismatch { expected: dim, got: ch.jump.dim() });
            }
            if !(ch.rate >= 0.0) {
                return Err(DynamicsError::NegativeRate { channel: ch.label.clone(), rate: ch.rate });
            }
        }
        let mut gens = Vec::with_capacity(segments.len());
        for seg in segments {
            let h = assemble_hamiltonian(&space, seg)?;
            let chans: Vec<&LindbladChannel> = channels.iter().chain(&seg.channels).collect();
            gens.push(Generator::new(h.matrix(), &chans));
        }

        let mut support = Support { dim, entries: Vec::new(), slot: vec![ABSENT; dim * dim] };
        let mut queue = VecDeque::new();
        for i in 0..dim {
            for j in 0..dim {
                if rho0.data()[(i, j)] != C64::new(0.0, 0.0) && support.insert(i, j) {
                    queue.push_back((i, j));
                }
            }
        }
        while let Some((k, l)) = queue.pop_front() {
            for g in &gens {
                g.images(k, l, |i, j, _| {
                    if support.insert(i, j) {
                        queue.push_back((i, j));
                    }
                });
            }
        }
        let generators = gens.iter().map(|g| g.restricted(&support)).collect();
        let state = support.entries().iter().map(|&(i, j)| rho0.data()[(i, j)]).collect();
        let stepper = Dopri5::new(support.len(), opts.rtol, opts.atol, opts.max_steps);
        Ok(Self { space, support, generators, current: 0, state, stepper })
    }

    pub fn support(&self) -> &Support { &self.support }

    pub fn stats(&self) -> &StepStats { &self.stepper.stats }

    /// Switches to segment `index`.
    pub fn select(&mut self, index: usize) {
        assert!(index < self.generators.len(), "segment {index} out of range");
        self.current = index;
        self.stepper.reset_rhs();
    }

    pub fn advance(&mut self, span: f64) -> DynResult<()> {
        let gen = &self.generators[self.current];
        let mut rhs = |y: &[C64], out: &mut [C64]| gen.mul_vec_into(y, out);
        self.stepper.integrate(&mut self.state, span, &mut rhs)
    }

    pub fn trace(&self) -> f64 {
        self.support.entries().iter().zip(&self.state).filter(|((i, j), _)| i == j).map(|(_, z)| z.re).sum()
    }

    pub fn density(&self) -> DensityMatrix {
        let dim = self.space.total_dim();
        let mut m = DMatrix::zeros(dim, dim);
        for (&(i, j), z) in self.support.entries().iter().zip(&self.state) {
            m[(i, j)] = *z;
        }
        DensityMatrix::from_matrix(&self.space, m)
    }

    fn linear(&self, spec: &ObservableSpec, v: &[C64]) -> Option<f64> {
        let w = spec.linear_weights(&self.space)?;
        // Re tr(Oρ) with O_ji = w_ij, i.e. Σ w_ij ρ_ij
        Some(
            w.into_iter()
                .filter_map(|(i, j, w)| self.support.slot(i, j).map(|s| w * v[s]))
                .sum::<C64>()
                .re,
        )
    }

    pub fn evaluate(&self, spec: &ObservableSpec) -> DynResult<f64> {
        if let Some(x) = self.linear(spec, &self.state) {
            return Ok(x);
        }
        Ok(match &spec.kind {
            ObservableKind::Purity => self.state.iter().map(|z| z.norm_sqr()).sum(),
            ObservableKind::EffectiveTemperature { mode, omega } => {
                let excited = self.linear(&ObservableSpec::excited(&self.space, *mode), &self.state).unwrap_or(0.0);
                effective_temperature_from_excited(excited, *omega)?
            }
            _ => unreachable!("linear observables handled above"),
        })
    }

    /// Time derivative of a linear observable under the current segment.
    pub fn derivative(&self, spec: &ObservableSpec) -> DynResult<f64> {
        let mut d = vec![C64::new(0.0, 0.0); self.state.len()];
        self.generators[self.current].mul_vec_into(&self.state, &mut d);
        self.linear(spec, &d).ok_or_else(|| {
            DynamicsError::Observable(crate::observables::ObservableError::NotLinear(spec.name.clone()))
        })
    }
}
