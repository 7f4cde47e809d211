//! Classical fixed-step fourth-order Runge–Kutta.

use crate::matrix::ComplexMatrix;

/// A state vector the integrator can combine linearly.
pub trait OdeState: Clone {
    /// `self += a * x`
    fn axpy(&mut self, a: f64, x: &Self);
    /// Overwrites `self` with `base + a * x`.
    fn assign_axpy(&mut self, base: &Self, a: f64, x: &Self);
}

impl OdeState for Vec<f64> {
    fn axpy(&mut self, a: f64, x: &Self) {
        for (y, xv) in self.iter_mut().zip(x) {
            *y += a * xv;
        }
    }

    fn assign_axpy(&mut self, base: &Self, a: f64, x: &Self) {
        for ((y, b), xv) in self.iter_mut().zip(base).zip(x) {
            *y = b + a * xv;
        }
    }
}

impl OdeState for ComplexMatrix {
    fn axpy(&mut self, a: f64, x: &Self) {
        ComplexMatrix::axpy(self, a, x);
    }

    fn assign_axpy(&mut self, base: &Self, a: f64, x: &Self) {
        for ((y, b), xv) in self.as_mut_slice().iter_mut().zip(base.as_slice()).zip(x.as_slice()) {
            *y = b + xv * a;
        }
    }
}

/// One RK4 step of `dy/dt = f(y)`.
pub fn rk4_step<S, F>(mut f: F, state: &S, dt: f64) -> S
where
    S: OdeState,
    F: FnMut(&S) -> S,
{
    let k1 = f(state);
    let mut tmp = state.clone();
    tmp.assign_axpy(state, 0.5 * dt, &k1);
    let k2 = f(&tmp);
    tmp.assign_axpy(state, 0.5 * dt, &k2);
    let k3 = f(&tmp);
    tmp.assign_axpy(state, dt, &k3);
    let k4 = f(&tmp);

    let mut next = state.clone();
    next.axpy(dt / 6.0, &k1);
    next.axpy(dt / 3.0, &k2);
    next.axpy(dt / 3.0, &k3);
    next.axpy(dt / 6.0, &k4);
    next
}

/// Preallocated RK4 stepper for hot loops where `f` writes into an output buffer.
pub struct Rk4<S> {
    k: [S; 4],
    tmp: S,
}

impl<S: OdeState> Rk4<S> {
    /// `template` fixes the shape of the work buffers; its contents are irrelevant.
    pub fn new(template: &S) -> Self {
        Self {
            k: [template.clone(), template.clone(), template.clone(), template.clone()],
            tmp: template.clone(),
        }
    }

    /// Advances `state` in place by `dt`. `f(y, out)` must fully overwrite `out`
    /// with the derivative at `y` (entries it never touches must stay valid,
    /// e.g. zero, across calls).
    pub fn step<F>(&mut self, mut f: F, state: &mut S, dt: f64)
    where
        F: FnMut(&S, &mut S),
    {
        let [k1, k2, k3, k4] = &mut self.k;
        f(state, k1);
        self.tmp.assign_axpy(state, 0.5 * dt, k1);
        f(&self.tmp, k2);
        self.tmp.assign_axpy(state, 0.5 * dt, k2);
        f(&self.tmp, k3);
        self.tmp.assign_axpy(state, dt, k3);
        f(&self.tmp, k4);
        state.axpy(dt / 6.0, k1);
        state.axpy(dt / 3.0, k2);
        state.axpy(dt / 3.0, k3);
        state.axpy(dt / 6.0, k4);
    }
}
