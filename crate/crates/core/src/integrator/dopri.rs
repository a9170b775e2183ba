//! Dormand-Prince 5(4) stepper with PI step-size control and the
//! standard fourth-order continuous extension. The right-hand side is
//! autonomous, so stage times are not tracked.

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

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const BETA: f64 = 0.04;

/// Continuous extension over one accepted step.
#[derive(Debug, Clone)]
pub struct DenseStep {
    pub t_start: f64,
    pub h: f64,
    cont: [Vec<f64>; 5],
}

impl DenseStep {
    pub fn t_end(&self) -> f64 {
        self.t_start + self.h
    }

    pub fn eval(&self, t: f64, out: &mut [f64]) {
        let theta = (t - self.t_start) / self.h;
        let theta1 = 1.0 - theta;
        let [c0, c1, c2, c3, c4] = &self.cont;
        for i in 0..out.len() {
            out[i] = c0[i] + theta * (c1[i] + theta1 * (c2[i] + theta * (c3[i] + theta1 * c4[i])));
        }
    }

    pub fn eval_component(&self, t: f64, i: usize) -> f64 {
        let theta = (t - self.t_start) / self.h;
        let theta1 = 1.0 - theta;
        let [c0, c1, c2, c3, c4] = &self.cont;
        c0[i] + theta * (c1[i] + theta1 * (c2[i] + theta * (c3[i] + theta1 * c4[i])))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepError {
    StepSizeUnderflow { t: f64, h: f64 },
    TooManySteps(usize),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

pub struct Dopri5<F> {
    f: F,
    t: f64,
    y: Vec<f64>,
    h: f64,
    rtol: f64,
    atol: f64,
    h_max: f64,
    max_steps: usize,
    fac_old: f64,
    last_rejected: bool,
    k: [Vec<f64>; 7],
    y_new: Vec<f64>,
    y_stage: Vec<f64>,
    dense: DenseStep,
    pub stats: StepStats,
}

impl<F: FnMut(&[f64], &mut [f64])> Dopri5<F> {
    pub fn new(mut f: F, t0: f64, y0: Vec<f64>, rtol: f64, atol: f64, h_max: f64, max_steps: usize) -> Self {
        let n = y0.len();
        let zeros = || vec![0.0; n];
        let mut k = [zeros(), zeros(), zeros(), zeros(), zeros(), zeros(), zeros()];
        f(&y0, &mut k[0]);
        let mut stepper = Self {
            f,
            t: t0,
            y: y0,
            h: 0.0,
            rtol,
            atol,
            h_max,
            max_steps,
            fac_old: 1e-4,
            last_rejected: false,
            k,
            y_new: zeros(),
            y_stage: zeros(),
            dense: DenseStep {
                t_start: t0,
                h: 0.0,
                cont: [zeros(), zeros(), zeros(), zeros(), zeros()],
            },
            stats: StepStats {
                evaluations: 1,
                ..StepStats::default()
            },
        };
        stepper.h = stepper.initial_step();
        stepper
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.atol + self.rtol * a.abs().max(b.abs())
    }

    // Starting step from the second-derivative estimate of Hairer & Wanner.
    fn initial_step(&mut self) -> f64 {
        let n = self.y.len();
        let mut dnf = 0.0;
        let mut dny = 0.0;
        for i in 0..n {
            let sk = self.scale(self.y[i], self.y[i]);
            dnf += (self.k[0][i] / sk).powi(2);
            dny += (self.y[i] / sk).powi(2);
        }
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
            1e-6
        } else {
            0.01 * (dny / dnf).sqrt()
        };
        h = h.min(self.h_max);
        for i in 0..n {
            self.y_stage[i] = self.y[i] + h * self.k[0][i];
        }
        let (ys, k1) = (&self.y_stage, &mut self.k[1]);
        (self.f)(ys, k1);
        self.stats.evaluations += 1;
        let mut der2 = 0.0;
        for i in 0..n {
            let sk = self.scale(self.y[i], self.y[i]);
            der2 += ((self.k[1][i] - self.k[0][i]) / sk).powi(2);
        }
        let der2 = (der2 / n as f64).sqrt() / h;
        let der12 = der2.max((dnf / n as f64).sqrt());
        let h1 = if der12 <= 1e-15 {
            (h * 1e-3).max(1e-6)
        } else {
            (0.01 / der12).powf(0.2)
        };
        (100.0 * h).min(h1).min(self.h_max)
    }

    /// Advances by one accepted step, never past `t_limit`.
    pub fn step(&mut self, t_limit: f64) -> Result<&DenseStep, StepError> {
        let n = self.y.len();
        let expo = 0.2 - BETA * 0.75;
        loop {
            if self.stats.accepted + self.stats.rejected >= self.max_steps {
                return Err(StepError::TooManySteps(self.max_steps));
            }
            let mut h = self.h.min(self.h_max);
            let remaining = t_limit - self.t;
            let lands_on_limit = h >= remaining;
            if lands_on_limit {
                h = remaining;
            }
            if h <= f64::EPSILON * self.t.abs().max(1.0) * 10.0 {
                return Err(StepError::StepSizeUnderflow { t: self.t, h });
            }
            self.stages(h);
            self.stats.evaluations += 6;

            let mut err = 0.0;
            for i in 0..n {
                let e = h
                    * (E1 * self.k[0][i]
                        + E3 * self.k[2][i]
                        + E4 * self.k[3][i]
                        + E5 * self.k[4][i]
                        + E6 * self.k[5][i]
                        + E7 * self.k[6][i]);
                let sk = self.scale(self.y[i], self.y_new[i]);
                err += (e / sk).powi(2);
            }
            let err = (err / n as f64).sqrt();

            if !err.is_finite() {
                self.stats.rejected += 1;
                self.last_rejected = true;
                self.h = h * MIN_FACTOR;
                continue;
            }

            let fac11 = err.powf(expo);
            if err <= 1.0 {
                let mut fac = fac11 / self.fac_old.powf(BETA);
                fac = (1.0 / MAX_FACTOR).max((1.0 / MIN_FACTOR).min(fac / SAFETY));
                let mut h_new = h / fac;
                if self.last_rejected {
                    h_new = h_new.min(h);
                }
                self.fac_old = err.max(1e-4);
                self.build_dense(h);
                self.t = if lands_on_limit { t_limit } else { self.t + h };
                std::mem::swap(&mut self.y, &mut self.y_new);
                self.k.swap(0, 6);
                self.h = h_new.min(self.h_max);
                self.last_rejected = false;
                self.stats.accepted += 1;
                return Ok(&self.dense);
            }
            self.h = h / (1.0 / MIN_FACTOR).min(fac11 / SAFETY);
            self.last_rejected = true;
            self.stats.rejected += 1;
        }
    }

    fn stages(&mut self, h: f64) {
        let n = self.y.len();
        let y = &self.y;
        let ys = &mut self.y_stage;
        let k = &mut self.k;

        for i in 0..n {
            ys[i] = y[i] + h * A21 * k[0][i];
        }
        (self.f)(ys, &mut k[1]);
        for i in 0..n {
            ys[i] = y[i] + h * (A31 * k[0][i] + A32 * k[1][i]);
        }
        (self.f)(ys, &mut k[2]);
        for i in 0..n {
            ys[i] = y[i] + h * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
        }
        (self.f)(ys, &mut k[3]);
        for i in 0..n {
            ys[i] = y[i] + h * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
        }
        (self.f)(ys, &mut k[4]);
        for i in 0..n {
            ys[i] = y[i] + h * (A61 * k[0][i] + A62 * k[1][i] + A63 * k[2][i] + A64 * k[3][i] + A65 * k[4][i]);
        }
        (self.f)(ys, &mut k[5]);
        for i in 0..n {
            self.y_new[i] = y[i] + h * (A71 * k[0][i] + A73 * k[2][i] + A74 * k[3][i] + A75 * k[4][i] + A76 * k[5][i]);
        }
        (self.f)(&self.y_new, &mut k[6]);
    }

    fn build_dense(&mut self, h: f64) {
        let n = self.y.len();
        let k = &self.k;
        let [c0, c1, c2, c3, c4] = &mut self.dense.cont;
        for i in 0..n {
            let ydiff = self.y_new[i] - self.y[i];
            let bspl = h * k[0][i] - ydiff;
            c0[i] = self.y[i];
            c1[i] = ydiff;
            c2[i] = bspl;
            c3[i] = ydiff - h * k[6][i] - bspl;
            c4[i] = h * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
        }
        self.dense.t_start = self.t;
        self.dense.h = h;
    }
}
