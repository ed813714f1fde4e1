//! Dormand–Prince 5(4) with embedded error control, for autonomous linear
//! systems `y' = f(y)` over complex vectors.

use num_complex::Complex64 as C64;

use super::DynamicsError;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order weights minus fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// Adaptive stepper state. The proposed step size carries over between
/// calls, so consecutive intervals reuse what the controller learned.
#[derive(Clone, Debug)]
pub struct Dopri5 {
    rtol: f64,
    atol: f64,
    max_steps: usize,
    h: Option<f64>,
    k: [Vec<C64>; 7],
    y_stage: Vec<C64>,
    y_new: Vec<C64>,
    fsal_valid: bool,
    pub stats: StepStats,
}

impl Dopri5 {
    pub fn new(dim: usize, rtol: f64, atol: f64, max_steps: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); dim];
        Self {
            rtol,
            atol,
            max_steps,
            h: None,
            k: std::array::from_fn(|_| z.clone()),
            y_stage: z.clone(),
            y_new: z,
            fsal_valid: false,
            stats: StepStats::default(),
        }
    }

    /// Forget the cached derivative; call when the right-hand side changes.
    pub fn reset_rhs(&mut self) { self.fsal_valid = false; }

    fn err_scale(&self, a: C64, b: C64) -> f64 { self.atol + self.rtol * a.norm().max(b.norm()) }

    fn initial_step<F>(&mut self, y: &[C64], rhs: &mut F, span: f64) -> f64
    where F: FnMut(&[C64], &mut [C64])
    {
        // Hairer–Nørsett–Wanner starting-step heuristic
        let n = y.len() as f64;
        let (d0, d1) = y.iter().zip(&self.k[0]).fold((0.0, 0.0), |(a, b), (yi, fi)| {
            let sc = self.atol + self.rtol * yi.norm();
            (a + (yi.norm() / sc).powi(2), b + (fi.norm() / sc).powi(2))
        });
        let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 * span } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        for ((ys, yi), fi) in self.y_stage.iter_mut().zip(y).zip(&self.k[0]) {
            *ys = yi + fi * h0;
        }
        let (head, tail) = self.k.split_at_mut(1);
        rhs(&self.y_stage, &mut tail[0]);
        self.stats.rhs_evals += 1;
        let d2 = head[0]
            .iter()
            .zip(&tail[0])
            .zip(y)
            .map(|((f0, f1), yi)| ((f1 - f0).norm() / (self.atol + self.rtol * yi.norm())).powi(2))
            .sum::<f64>();
        let d2 = (d2 / n).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6 * span)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span)
    }

    /// Advances `y` by `span` under `rhs`.
    pub fn integrate<F>(&mut self, y: &mut [C64], span: f64, rhs: &mut F) -> Result<(), DynamicsError>
    where F: FnMut(&[C64], &mut [C64])
    {
        if span <= 0.0 {
            return Ok(());
        }
        if !self.fsal_valid {
            rhs(y, &mut self.k[0]);
            self.stats.rhs_evals += 1;
            self.fsal_valid = true;
        }
        let mut h = match self.h {
            Some(h) => h,
            None => self.initial_step(y, rhs, span),
        };
        let mut t = 0.0;
        let mut steps = 0usize;
        while t < span {
            if steps >= self.max_steps {
                return Err(DynamicsError::ToleranceFailure { steps, time: t });
            }
            steps += 1;
            let remaining = span - t;
            let last = h >= remaining * (1.0 - 1e-12);
            let h_step = if last { remaining } else { h };
            if h_step <= f64::EPSILON * 16.0 * span.max(t) {
                return Err(DynamicsError::StepUnderflow { step: h_step, time: t });
            }
            let err = self.step(y, h_step, rhs);
            if err <= 1.0 {
                y.copy_from_slice(&self.y_new);
                self.k.swap(0, 6);
                t = if last { span } else { t + h_step };
                self.stats.accepted += 1;
                let fac = if err == 0.0 { MAX_FACTOR } else { (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR) };
                // a clipped final step says little about the natural step size
                if !last || h_step >= 0.5 * h {
                    h = h_step * fac;
                }
            } else {
                self.stats.rejected += 1;
                h = h_step * (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
            }
        }
        self.h = Some(h);
        Ok(())
    }

    fn step<F>(&mut self, y: &[C64], h: f64, rhs: &mut F) -> f64
    where F: FnMut(&[C64], &mut [C64])
    {
        let n = y.len();
        macro_rules! stage {
            ($dst:expr, $( ($a:expr, $ki:expr) ),+ ) => {{
                for i in 0..n {
                    let mut acc = y[i];
                    $( acc += self.k[$ki][i] * ($a * h); )+
                    self.y_stage[i] = acc;
                }
                let (ys, k) = (&self.y_stage, &mut self.k);
                rhs(ys, &mut k[$dst]);
            }};
        }
        stage!(1, (A21, 0));
        stage!(2, (A31, 0), (A32, 1));
        stage!(3, (A41, 0), (A42, 1), (A43, 2));
        stage!(4, (A51, 0), (A52, 1), (A53, 2), (A54, 3));
        stage!(5, (A61, 0), (A62, 1), (A63, 2), (A64, 3), (A65, 4));
        for i in 0..n {
            self.y_new[i] = y[i]
                + (self.k[0][i] * A71
                    + self.k[2][i] * A73
                    + self.k[3][i] * A74
                    + self.k[4][i] * A75
                    + self.k[5][i] * A76)
                    * h;
        }
        rhs(&self.y_new, &mut self.k[6]);
        self.stats.rhs_evals += 6;
        let mut sum = 0.0;
        for i in 0..n {
            let e = (self.k[0][i] * E1
                + self.k[2][i] * E3
                + self.k[3][i] * E4
                + self.k[4][i] * E5
                + self.k[5][i] * E6
                + self.k[6][i] * E7)
                * h;
            sum += (e.norm() / self.err_scale(y[i], self.y_new[i])).powi(2);
        }
        (sum / n as f64).sqrt()
    }
}
