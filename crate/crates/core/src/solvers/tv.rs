//! Shared total-variation building blocks: forward-difference gradients,
//! their adjoint, the anisotropic TV value, soft shrinkage, and a projected
//! dual-ascent TV proximal operator with warm-startable dual state.
//!
//! The discrete gradient uses forward differences with a reflective
//! boundary: the difference at the last column (horizontal) or last row
//! (vertical) is structurally zero. The operator norm of the stacked
//! gradient satisfies ||D^T D|| <= 8, which fixes the dual step below.

/// Forward-difference gradient. `dh` and `dv` must hold `h * w` samples;
/// the last column of `dh` and last row of `dv` stay zero.
pub(crate) fn gradient(x: &[f64], h: usize, w: usize, dh: &mut [f64], dv: &mut [f64]) {
    for y in 0..h {
        let row = y * w;
        for i in 0..w - 1 {
            dh[row + i] = x[row + i + 1] - x[row + i];
        }
        dh[row + w - 1] = 0.0;
    }
    for y in 0..h - 1 {
        let row = y * w;
        for i in 0..w {
            dv[row + i] = x[row + w + i] - x[row + i];
        }
    }
    dv[(h - 1) * w..h * w].fill(0.0);
}

/// Adjoint of [`gradient`]: `out = Dh^T dh + Dv^T dv` (the negative
/// discrete divergence).
pub(crate) fn gradient_adjoint(dh: &[f64], dv: &[f64], h: usize, w: usize, out: &mut [f64]) {
    for y in 0..h {
        let row = y * w;
        for x in 0..w {
            let i = row + x;
            let mut acc = 0.0;
            if x + 1 < w {
                acc -= dh[i];
            }
            if x > 0 {
                acc += dh[i - 1];
            }
            if y + 1 < h {
                acc -= dv[i];
            }
            if y > 0 {
                acc += dv[i - w];
            }
            out[i] = acc;
        }
    }
}

/// Anisotropic total variation: the l1 norm of both forward differences.
pub(crate) fn tv_value(x: &[f64], h: usize, w: usize) -> f64 {
    let mut total = 0.0;
    for y in 0..h {
        let row = y * w;
        for i in 0..w - 1 {
            total += (x[row + i + 1] - x[row + i]).abs();
        }
        if y + 1 < h {
            for i in 0..w {
                total += (x[row + w + i] - x[row + i]).abs();
            }
        }
    }
    total
}

/// Soft-threshold toward zero.
pub(crate) fn shrink(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Proximal operator of `weight * TV` with persistent dual variables.
///
/// Solves `min_x  0.5 ||x - v||^2 + weight * TV(x)` by projected gradient
/// ascent on the dual: `x = v - D^T p` with `p` box-constrained to
/// `[-weight, weight]` per component and step `1/8`. Keeping the duals
/// alive across calls lets an outer iterative solver refine the same
/// subproblem cheaply (warm start); callers that need a pure map construct
/// a fresh instance per call.
pub(crate) struct TvProx {
    h: usize,
    w: usize,
    p: Vec<f64>,
    q: Vec<f64>,
    scratch_x: Vec<f64>,
    scratch_h: Vec<f64>,
    scratch_v: Vec<f64>,
}

impl TvProx {
    pub fn new(h: usize, w: usize) -> Self {
        let n = h * w;
        TvProx {
            h,
            w,
            p: vec![0.0; n],
            q: vec![0.0; n],
            scratch_x: vec![0.0; n],
            scratch_h: vec![0.0; n],
            scratch_v: vec![0.0; n],
        }
    }

    /// Run `iters` dual steps for the subproblem at `v` and return the
    /// primal iterate `v - D^T p`.
    pub fn apply(&mut self, v: &[f64], weight: f64, iters: usize) -> Vec<f64> {
        let n = self.h * self.w;
        debug_assert_eq!(v.len(), n);
        if weight <= 0.0 {
            self.p.fill(0.0);
            self.q.fill(0.0);
            return v.to_vec();
        }
        // The feasible box may have shrunk since the previous call.
        for d in self.p.iter_mut().chain(self.q.iter_mut()) {
            *d = d.clamp(-weight, weight);
        }
        const STEP: f64 = 0.125;
        for _ in 0..iters {
            gradient_adjoint(&self.p, &self.q, self.h, self.w, &mut self.scratch_x);
            for i in 0..n {
                self.scratch_x[i] = v[i] - self.scratch_x[i];
            }
            gradient(
                &self.scratch_x,
                self.h,
                self.w,
                &mut self.scratch_h,
                &mut self.scratch_v,
            );
            for i in 0..n {
                self.p[i] = (self.p[i] + STEP * self.scratch_h[i]).clamp(-weight, weight);
                self.q[i] = (self.q[i] + STEP * self.scratch_v[i]).clamp(-weight, weight);
            }
        }
        gradient_adjoint(&self.p, &self.q, self.h, self.w, &mut self.scratch_x);
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(v[i] - self.scratch_x[i]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn gradient_of_a_constant_is_zero() {
        let x = vec![0.4; 35];
        let mut dh = vec![1.0; 35];
        let mut dv = vec![1.0; 35];
        gradient(&x, 5, 7, &mut dh, &mut dv);
        assert!(dh.iter().chain(&dv).all(|&v| v == 0.0));
        assert_eq!(tv_value(&x, 5, 7), 0.0);
    }

    #[test]
    fn boundary_differences_are_structurally_zero() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..48).map(|_| rng.gen::<f64>()).collect();
        let (h, w) = (6, 8);
        let mut dh = vec![9.0; 48];
        let mut dv = vec![9.0; 48];
        gradient(&x, h, w, &mut dh, &mut dv);
        for y in 0..h {
            assert_eq!(dh[y * w + w - 1], 0.0);
        }
        for i in 0..w {
            assert_eq!(dv[(h - 1) * w + i], 0.0);
        }
    }

    #[test]
    fn adjoint_satisfies_the_inner_product_identity() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let (h, w) = (7, 9);
        let n = h * w;
        let x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        let q: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        let mut dh = vec![0.0; n];
        let mut dv = vec![0.0; n];
        gradient(&x, h, w, &mut dh, &mut dv);
        // <Dx, (p,q)> must equal <x, D^T(p,q)>.
        let lhs: f64 = dh.iter().zip(&p).chain(dv.iter().zip(&q)).map(|(a, b)| a * b).sum();
        let mut adj = vec![0.0; n];
        gradient_adjoint(&p, &q, h, w, &mut adj);
        let rhs: f64 = x.iter().zip(&adj).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn tv_of_a_single_step_edge_counts_its_length() {
        // 4x6 image, left half 0, right half 1: three horizontal jumps per
        // row at the column boundary.
        let (h, w) = (4, 6);
        let mut x = vec![0.0; h * w];
        for y in 0..h {
            for i in 3..w {
                x[y * w + i] = 1.0;
            }
        }
        assert_eq!(tv_value(&x, h, w), h as f64);
    }

    #[test]
    fn shrink_matches_its_closed_form() {
        assert_eq!(shrink(3.0, 1.0), 2.0);
        assert_eq!(shrink(-3.0, 1.0), -2.0);
        assert_eq!(shrink(0.5, 1.0), 0.0);
        assert_eq!(shrink(-0.5, 1.0), 0.0);
    }

    #[test]
    fn tv_prox_with_zero_weight_is_the_identity() {
        let v: Vec<f64> = (0..30).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut prox = TvProx::new(5, 6);
        assert_eq!(prox.apply(&v, 0.0, 25), v);
    }

    #[test]
    fn tv_prox_reduces_the_prox_objective_versus_staying_put() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let (h, w) = (12, 12);
        let v: Vec<f64> = (0..h * w).map(|_| rng.gen::<f64>()).collect();
        let weight = 0.2;
        let mut prox = TvProx::new(h, w);
        let x = prox.apply(&v, weight, 40);
        let q = |u: &[f64]| -> f64 {
            let fit: f64 = u.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() * 0.5;
            fit + weight * tv_value(u, h, w)
        };
        assert!(q(&x) < q(&v), "{} !< {}", q(&x), q(&v));
    }

    #[test]
    fn tv_prox_converges_to_the_five_point_analytic_solution() {
        // 1x5 signal with a single unit spike. The optimality conditions
        // solve in closed form: the center drops by 2*weight (one jump on
        // each side pulls with the full weight), while the four outer
        // samples rise together to weight/2, where the subgradient of the
        // zero-jump between the two outer samples (1/2) balances their data
        // pull against the inner jump.
        let v = vec![0.0, 0.0, 1.0, 0.0, 0.0];
        let weight = 0.1;
        let mut prox = TvProx::new(1, 5);
        let x = prox.apply(&v, weight, 4000);
        let expected = [0.05, 0.05, 0.8, 0.05, 0.05];
        for (got, want) in x.iter().zip(expected) {
            assert!((got - want).abs() < 1e-3, "{x:?} vs {expected:?}");
        }
    }

    #[test]
    fn warm_started_prox_refines_the_same_subproblem() {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let (h, w) = (10, 10);
        let v: Vec<f64> = (0..h * w).map(|_| rng.gen::<f64>()).collect();
        let weight = 0.15;
        let q = |u: &[f64]| -> f64 {
            let fit: f64 = u.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() * 0.5;
            fit + weight * tv_value(u, h, w)
        };
        let mut warm = TvProx::new(h, w);
        let first = warm.apply(&v, weight, 10);
        let second = warm.apply(&v, weight, 10);
        let mut cold = TvProx::new(h, w);
        let reference = cold.apply(&v, weight, 800);
        let err = |u: &[f64]| (q(u) - q(&reference)).abs();
        assert!(
            err(&second) < err(&first),
            "warm start failed to refine: {} !< {}",
            err(&second),
            err(&first)
        );
    }
}
