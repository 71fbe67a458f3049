//! Classical fixed-step fourth-order Runge–Kutta.

/// Right-hand side `dy/dt = f(t, y)` written into `out`.
pub trait Rhs {
    fn eval(&self, t: f64, y: &[f64], out: &mut [f64]);
}

impl<F> Rhs for F
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    fn eval(&self, t: f64, y: &[f64], out: &mut [f64]) {
        self(t, y, out)
    }
}

/// Scratch buffers for [`Rk4::step`]; reused across steps to avoid allocation.
#[derive(Clone, Debug)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    /// Advances `y` from `t` to `t + h` in place.
    pub fn step(&mut self, f: &impl Rhs, t: f64, y: &mut [f64], h: f64) {
        let n = y.len();
        f.eval(t, y, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * self.k1[i];
        }
        f.eval(t + 0.5 * h, &self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * self.k2[i];
        }
        f.eval(t + 0.5 * h, &self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = y[i] + h * self.k3[i];
        }
        f.eval(t + h, &self.tmp, &mut self.k4);
        for i in 0..n {
            y[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// Number of equal steps of size at most `h` covering `[0, span]`.
pub fn step_count(span: f64, h: f64) -> usize {
    if span <= 0.0 {
        return 0;
    }
    // Guard against 1.0/1e-3 = 999.9999... style rounding.
    ((span / h) - 1e-9).ceil().max(1.0) as usize
}

/// Integrates from `t0` over `span` with equal steps not exceeding `h`,
/// returning the end time.
pub fn integrate(f: &impl Rhs, t0: f64, y: &mut [f64], span: f64, h: f64) -> f64 {
    let steps = step_count(span, h);
    if steps == 0 {
        return t0;
    }
    let dt = span / steps as f64;
    let mut rk = Rk4::new(y.len());
    for i in 0..steps {
        rk.step(f, t0 + i as f64 * dt, y, dt);
    }
    t0 + span
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_fourth_order() {
        let f = |_t: f64, y: &[f64], out: &mut [f64]| out[0] = -y[0];
        let err = |h: f64| {
            let mut y = [1.0];
            integrate(&f, 0.0, &mut y, 1.0, h);
            (y[0] - (-1.0f64).exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn step_count_lands_on_endpoint() {
        assert_eq!(step_count(1.0, 1e-3), 1000);
        assert_eq!(step_count(0.0, 1e-3), 0);
        assert_eq!(step_count(0.25, 0.1), 3);
    }

    #[test]
    fn time_dependent_rhs() {
        // y' = t has y(1) = 1/2 exactly under RK4.
        let f = |t: f64, _y: &[f64], out: &mut [f64]| out[0] = t;
        let mut y = [0.0];
        integrate(&f, 0.0, &mut y, 1.0, 0.3);
        assert!((y[0] - 0.5).abs() < 1e-15);
    }
}
