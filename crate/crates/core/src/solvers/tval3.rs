//! Augmented-Lagrangian TV reconstruction with variable splitting and
//! continuation on the penalty weights.

use crate::error::{Error, Result};
use crate::sensing::SensingMatrix;

use super::tv::{gradient, gradient_adjoint, shrink, tv_value};
use super::{ChannelSolve, Diagnostics, SolverConfig};

/// Recover one channel by (approximately) minimizing `TV(x)` subject to
/// `Ax = y`, through the augmented Lagrangian of the split problem
/// `min TV(w) s.t. w = Dx, Ax = y`.
///
/// Each outer iteration alternates three updates:
///
/// 1. shrinkage on the splitting variable, `w = shrink(Dx - nu/beta, 1/beta)`;
/// 2. a quadratic solve for `x` from the normal equations
///    `(beta D^T D + mu A^T A) x = D^T (beta w + nu) + A^T (mu y + lambda)`,
///    approximated by a handful of warm-started conjugate-gradient steps;
/// 3. gradient ascent on both multipliers, `nu -= beta (Dx - w)` and
///    `lambda -= mu (Ax - y)`.
///
/// Continuation doubles `beta` (and `mu` with it) whenever the iterate
/// stalls at the current penalty level or the per-stage iteration cap is
/// hit, sweeping from loose to tight constraint enforcement. The iteration
/// budget is global across stages.
///
/// Knobs read from `specifics`: `beta` (initial penalty, default 32),
/// `beta_max` (final penalty, default 32768), `mu_factor` (data penalty as
/// a multiple of `beta`, default 8), `cg_iterations` (CG steps per outer
/// iteration, default 8), `stage_iterations` (per-stage cap, default 20).
pub fn tval3_reconstruct(
    y: &[f64],
    matrix: &SensingMatrix,
    height: usize,
    width: usize,
    cfg: &SolverConfig,
) -> Result<ChannelSolve> {
    cfg.validate()?;
    let n = matrix.n();
    if height * width != n {
        return Err(Error::Precondition(format!(
            "geometry {height}x{width} does not match operator width {n}"
        )));
    }
    if y.len() != matrix.m() {
        return Err(Error::Precondition(format!(
            "measurement vector of length {} does not match m = {}",
            y.len(),
            matrix.m()
        )));
    }
    let beta0 = cfg.specifics.f64_or("beta", 32.0)?;
    let beta_max = cfg.specifics.f64_or("beta_max", 32768.0)?;
    let mu_factor = cfg.specifics.f64_or("mu_factor", 8.0)?;
    if !(beta0 > 0.0) || !(beta_max >= beta0) || !(mu_factor > 0.0) {
        return Err(Error::Config(format!(
            "penalty schedule must satisfy 0 < beta ({beta0}) <= beta_max ({beta_max}) with positive mu_factor ({mu_factor})"
        )));
    }
    let cg_iterations = cfg.specifics.usize_or("cg_iterations", 8)?.max(1);
    let stage_cap = cfg.specifics.usize_or("stage_iterations", 20)?.max(1);

    let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();

    let mut x = matrix.apply_transpose(y);
    let mut wh = vec![0.0; n];
    let mut wv = vec![0.0; n];
    let mut nuh = vec![0.0; n];
    let mut nuv = vec![0.0; n];
    let mut lambda = vec![0.0; matrix.m()];
    let mut beta = beta0;
    let mut mu = mu_factor * beta;

    let mut dh = vec![0.0; n];
    let mut dv = vec![0.0; n];
    let mut diag = Diagnostics::default();
    let mut iterations = 0;
    let mut stage_iters = 0;

    for it in 1..=cfg.max_iterations {
        iterations = it;

        // Splitting variable: soft shrinkage around the shifted gradient.
        gradient(&x, height, width, &mut dh, &mut dv);
        let inv_beta = 1.0 / beta;
        for i in 0..n {
            wh[i] = shrink(dh[i] - nuh[i] * inv_beta, inv_beta);
            wv[i] = shrink(dv[i] - nuv[i] * inv_beta, inv_beta);
        }

        // Quadratic x-update by warm-started CG on the normal equations.
        let mut rhs = vec![0.0; n];
        let th: Vec<f64> = wh.iter().zip(&nuh).map(|(w, u)| beta * w + u).collect();
        let tv: Vec<f64> = wv.iter().zip(&nuv).map(|(w, u)| beta * w + u).collect();
        gradient_adjoint(&th, &tv, height, width, &mut rhs);
        let ty: Vec<f64> = y.iter().zip(&lambda).map(|(yi, li)| mu * yi + li).collect();
        for (r, a) in rhs.iter_mut().zip(matrix.apply_transpose(&ty)) {
            *r += a;
        }
        let prev_x = x.clone();
        cg(&mut x, &rhs, cg_iterations, {
            let mut scratch_h = vec![0.0; n];
            let mut scratch_v = vec![0.0; n];
            move |v: &[f64], out: &mut Vec<f64>| {
                gradient(v, height, width, &mut scratch_h, &mut scratch_v);
                gradient_adjoint(&scratch_h, &scratch_v, height, width, out);
                for o in out.iter_mut() {
                    *o *= beta;
                }
                let ata = matrix.apply_transpose(&matrix.apply(v));
                for (o, a) in out.iter_mut().zip(ata) {
                    *o += mu * a;
                }
            }
        });

        // Multiplier ascent.
        gradient(&x, height, width, &mut dh, &mut dv);
        for i in 0..n {
            nuh[i] -= beta * (dh[i] - wh[i]);
            nuv[i] -= beta * (dv[i] - wv[i]);
        }
        let mut residual = matrix.apply(&x);
        for (r, yi) in residual.iter_mut().zip(y) {
            *r -= yi;
        }
        for (l, r) in lambda.iter_mut().zip(&residual) {
            *l -= mu * r;
        }

        let res_norm = residual.iter().map(|v| v * v).sum::<f64>().sqrt();
        let tv_now = tv_value(&x, height, width);
        if !tv_now.is_finite() || !res_norm.is_finite() {
            return Err(Error::Divergence {
                iteration: it,
                reason: "TV or residual became non-finite".into(),
            });
        }
        diag.objective.push(tv_now);
        diag.residual.push(if y_norm > 0.0 { res_norm / y_norm } else { 0.0 });

        let change: f64 = x
            .iter()
            .zip(&prev_x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let scale = prev_x.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        stage_iters += 1;
        if change / scale < cfg.tolerance || stage_iters >= stage_cap {
            if beta < beta_max {
                beta = (beta * 2.0).min(beta_max);
                mu = mu_factor * beta;
                stage_iters = 0;
            } else if change / scale < cfg.tolerance {
                break;
            }
        }
    }

    gradient(&x, height, width, &mut dh, &mut dv);
    let gap: f64 = dh
        .iter()
        .zip(&wh)
        .chain(dv.iter().zip(&wv))
        .map(|(d, w)| (d - w) * (d - w))
        .sum::<f64>()
        .sqrt();
    diag.primal_residual = Some(gap);

    Ok(ChannelSolve {
        signal: x,
        iterations,
        diagnostics: diag,
    })
}

/// A fixed number of conjugate-gradient steps on `Op x = b`, warm-started
/// from the incoming `x`. Exits early once the residual is at round-off.
fn cg(x: &mut Vec<f64>, b: &[f64], iters: usize, mut op: impl FnMut(&[f64], &mut Vec<f64>)) {
    let n = b.len();
    let mut opx = vec![0.0; n];
    op(x, &mut opx);
    let mut r: Vec<f64> = b.iter().zip(&opx).map(|(bi, oi)| bi - oi).collect();
    let mut p = r.clone();
    let mut rs: f64 = r.iter().map(|v| v * v).sum();
    let mut opp = vec![0.0; n];
    for _ in 0..iters {
        if rs <= 1e-28 {
            break;
        }
        op(&p, &mut opp);
        let pop: f64 = p.iter().zip(&opp).map(|(a, b)| a * b).sum();
        if pop <= 0.0 {
            break;
        }
        let alpha = rs / pop;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * opp[i];
        }
        let rs_new: f64 = r.iter().map(|v| v * v).sum();
        let ratio = rs_new / rs;
        rs = rs_new;
        for i in 0..n {
            p[i] = r[i] + ratio * p[i];
        }
    }
}
