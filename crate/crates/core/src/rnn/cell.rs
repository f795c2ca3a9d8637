//! Forward and backward passes of the three cell kinds plus the shared
//! output layer.

use super::{CellKind, RnnParams};
use crate::numerics::{gemv_acc, gemv_t_acc, outer_acc, sigmoid, ParamSet};

pub(crate) const C0: usize = 0;
pub(crate) const W_OUT: usize = 1;
pub(crate) const B_OUT: usize = 2;
// LSTM
const L_WX: usize = 3;
const L_WH: usize = 4;
const L_B: usize = 5;
// GRU
const G_WX_ZR: usize = 3;
const G_WH_ZR: usize = 4;
const G_B_ZR: usize = 5;
const G_WX_N: usize = 6;
const G_WH_N: usize = 7;
const G_B_N: usize = 8;
// MTRNN
const M_W_FX: usize = 3;
const M_W_FF: usize = 4;
const M_W_FS: usize = 5;
const M_B_F: usize = 6;
const M_W_SF: usize = 7;
const M_W_SS: usize = 8;
const M_B_S: usize = 9;

/// Everything one step needs for its backward pass.
#[derive(Debug, Clone)]
pub(crate) struct Trace {
    pub x: Vec<f64>,
    pub prev: Vec<f64>,
    /// Kind-specific intermediate activations.
    pub acts: Vec<f64>,
    pub state: Vec<f64>,
    pub ctx: Vec<f64>,
    pub out: Vec<f64>,
}

fn affine(bp: &ParamSet, b: usize, terms: &[(usize, &[f64])]) -> Vec<f64> {
    let mut z = bp.get(b).as_slice().to_vec();
    for &(w, x) in terms {
        gemv_acc(&mut z, bp.get(w), x);
    }
    z
}

pub(crate) fn forward(p: &RnnParams, prev: &[f64], x: &[f64]) -> Trace {
    let bp = &p.backbone;
    let (acts, state, ctx) = match p.config.kind {
        CellKind::Lstm => {
            let h = p.config.hidden;
            let (hp, cp) = prev.split_at(h);
            let z = affine(bp, L_B, &[(L_WX, x), (L_WH, hp)]);
            let mut acts = vec![0.0; 5 * h];
            let mut state = vec![0.0; 2 * h];
            for j in 0..h {
                let i = sigmoid(z[j]);
                let f = sigmoid(z[h + j]);
                let g = z[2 * h + j].tanh();
                let o = sigmoid(z[3 * h + j]);
                let c = f * cp[j] + i * g;
                let tc = c.tanh();
                acts[j] = i;
                acts[h + j] = f;
                acts[2 * h + j] = g;
                acts[3 * h + j] = o;
                acts[4 * h + j] = tc;
                state[j] = o * tc;
                state[h + j] = c;
            }
            let ctx = state[..h].to_vec();
            (acts, state, ctx)
        }
        CellKind::Gru => {
            let h = p.config.hidden;
            let zr = affine(bp, G_B_ZR, &[(G_WX_ZR, x), (G_WH_ZR, prev)]);
            let mut acts = vec![0.0; 4 * h];
            for j in 0..h {
                acts[j] = sigmoid(zr[j]);
                let r = sigmoid(zr[h + j]);
                acts[h + j] = r;
                acts[3 * h + j] = r * prev[j];
            }
            let n = affine(bp, G_B_N, &[(G_WX_N, x), (G_WH_N, &acts[3 * h..])]);
            let mut state = vec![0.0; h];
            for j in 0..h {
                let nj = n[j].tanh();
                acts[2 * h + j] = nj;
                let z = acts[j];
                state[j] = z * prev[j] + (1.0 - z) * nj;
            }
            let ctx = state.clone();
            (acts, state, ctx)
        }
        CellKind::Mtrnn => {
            let (nf, ns) = (p.config.fast, p.config.slow);
            let (af, as_) = (1.0 / p.config.fast_tau, 1.0 / p.config.slow_tau);
            let (uf, us) = prev.split_at(nf);
            let mut acts: Vec<f64> = uf.iter().map(|v| v.tanh()).collect();
            acts.extend(us.iter().map(|v| v.tanh()));
            let (yf, ys) = acts.split_at(nf);
            let pf = affine(bp, M_B_F, &[(M_W_FX, x), (M_W_FF, yf), (M_W_FS, ys)]);
            let ps = affine(bp, M_B_S, &[(M_W_SF, yf), (M_W_SS, ys)]);
            let mut state = Vec::with_capacity(nf + ns);
            state.extend(uf.iter().zip(&pf).map(|(u, q)| (1.0 - af) * u + af * q));
            state.extend(us.iter().zip(&ps).map(|(u, q)| (1.0 - as_) * u + as_ * q));
            let ctx = state[..nf].iter().map(|v| v.tanh()).collect();
            (acts, state, ctx)
        }
    };
    let mut out = bp.get(B_OUT).as_slice().to_vec();
    gemv_acc(&mut out, bp.get(W_OUT), &ctx);
    for v in &mut out {
        *v = v.tanh();
    }
    Trace {
        x: x.to_vec(),
        prev: prev.to_vec(),
        acts,
        state,
        ctx,
        out,
    }
}

/// Output-layer backward: accumulates into `grads` and returns dL/dctx.
pub(crate) fn output_backward(p: &RnnParams, tr: &Trace, d_out: &[f64], grads: &mut ParamSet) -> Vec<f64> {
    let dz: Vec<f64> = d_out.iter().zip(&tr.out).map(|(d, o)| d * (1.0 - o * o)).collect();
    outer_acc(grads.get_mut(W_OUT), &dz, &tr.ctx);
    add_into(grads.get_mut(B_OUT).as_mut_slice(), &dz);
    let mut d_ctx = vec![0.0; tr.ctx.len()];
    gemv_t_acc(&mut d_ctx, p.backbone.get(W_OUT), &dz);
    d_ctx
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (a, b) in dst.iter_mut().zip(src) {
        *a += b;
    }
}

/// Cell backward. `d_state` holds dL/d(new state) on entry and dL/d(previous
/// state) on exit. `d_ctx` is dL/d(context) from everything reading it.
/// `d_x`, when given, receives dL/d(input).
pub(crate) fn backward(
    p: &RnnParams,
    tr: &Trace,
    d_state: &mut Vec<f64>,
    d_ctx: &[f64],
    grads: &mut ParamSet,
    d_x: Option<&mut [f64]>,
) {
    let bp = &p.backbone;
    let mut dx_local = vec![0.0; tr.x.len()];
    match p.config.kind {
        CellKind::Lstm => {
            let h = p.config.hidden;
            let (i, f, g, o, tc) = (
                &tr.acts[..h],
                &tr.acts[h..2 * h],
                &tr.acts[2 * h..3 * h],
                &tr.acts[3 * h..4 * h],
                &tr.acts[4 * h..],
            );
            let cp = &tr.prev[h..];
            let mut dz = vec![0.0; 4 * h];
            let mut d_cprev = vec![0.0; h];
            for j in 0..h {
                let dh = d_state[j] + d_ctx[j];
                let dc = d_state[h + j] + dh * o[j] * (1.0 - tc[j] * tc[j]);
                dz[j] = dc * g[j] * i[j] * (1.0 - i[j]);
                dz[h + j] = dc * cp[j] * f[j] * (1.0 - f[j]);
                dz[2 * h + j] = dc * i[j] * (1.0 - g[j] * g[j]);
                dz[3 * h + j] = dh * tc[j] * o[j] * (1.0 - o[j]);
                d_cprev[j] = dc * f[j];
            }
            let hp = &tr.prev[..h];
            outer_acc(grads.get_mut(L_WX), &dz, &tr.x);
            outer_acc(grads.get_mut(L_WH), &dz, hp);
            add_into(grads.get_mut(L_B).as_mut_slice(), &dz);
            gemv_t_acc(&mut dx_local, bp.get(L_WX), &dz);
            let mut d_hprev = vec![0.0; h];
            gemv_t_acc(&mut d_hprev, bp.get(L_WH), &dz);
            d_state[..h].copy_from_slice(&d_hprev);
            d_state[h..].copy_from_slice(&d_cprev);
        }
        CellKind::Gru => {
            let h = p.config.hidden;
            let (z, r, n, rh) = (&tr.acts[..h], &tr.acts[h..2 * h], &tr.acts[2 * h..3 * h], &tr.acts[3 * h..]);
            let hp = &tr.prev;
            let mut d_hprev = vec![0.0; h];
            let mut dan = vec![0.0; h];
            let mut dzr = vec![0.0; 2 * h];
            for j in 0..h {
                let dh = d_state[j] + d_ctx[j];
                d_hprev[j] = dh * z[j];
                dan[j] = dh * (1.0 - z[j]) * (1.0 - n[j] * n[j]);
                dzr[j] = dh * (hp[j] - n[j]) * z[j] * (1.0 - z[j]);
            }
            outer_acc(grads.get_mut(G_WX_N), &dan, &tr.x);
            outer_acc(grads.get_mut(G_WH_N), &dan, rh);
            add_into(grads.get_mut(G_B_N).as_mut_slice(), &dan);
            gemv_t_acc(&mut dx_local, bp.get(G_WX_N), &dan);
            let mut d_rh = vec![0.0; h];
            gemv_t_acc(&mut d_rh, bp.get(G_WH_N), &dan);
            for j in 0..h {
                d_hprev[j] += d_rh[j] * r[j];
                dzr[h + j] = d_rh[j] * hp[j] * r[j] * (1.0 - r[j]);
            }
            outer_acc(grads.get_mut(G_WX_ZR), &dzr, &tr.x);
            outer_acc(grads.get_mut(G_WH_ZR), &dzr, hp);
            add_into(grads.get_mut(G_B_ZR).as_mut_slice(), &dzr);
            gemv_t_acc(&mut dx_local, bp.get(G_WX_ZR), &dzr);
            gemv_t_acc(&mut d_hprev, bp.get(G_WH_ZR), &dzr);
            d_state.copy_from_slice(&d_hprev);
        }
        CellKind::Mtrnn => {
            let nf = p.config.fast;
            let (af, as_) = (1.0 / p.config.fast_tau, 1.0 / p.config.slow_tau);
            let (yf, ys) = tr.acts.split_at(nf);
            let mut duf: Vec<f64> = (0..nf)
                .map(|j| d_state[j] + d_ctx[j] * (1.0 - tr.ctx[j] * tr.ctx[j]))
                .collect();
            let dus = d_state[nf..].to_vec();
            let dpf: Vec<f64> = duf.iter().map(|d| af * d).collect();
            let dps: Vec<f64> = dus.iter().map(|d| as_ * d).collect();
            outer_acc(grads.get_mut(M_W_FX), &dpf, &tr.x);
            outer_acc(grads.get_mut(M_W_FF), &dpf, yf);
            outer_acc(grads.get_mut(M_W_FS), &dpf, ys);
            add_into(grads.get_mut(M_B_F).as_mut_slice(), &dpf);
            outer_acc(grads.get_mut(M_W_SF), &dps, yf);
            outer_acc(grads.get_mut(M_W_SS), &dps, ys);
            add_into(grads.get_mut(M_B_S).as_mut_slice(), &dps);
            gemv_t_acc(&mut dx_local, bp.get(M_W_FX), &dpf);
            let mut dyf = vec![0.0; nf];
            let mut dys = vec![0.0; ys.len()];
            gemv_t_acc(&mut dyf, bp.get(M_W_FF), &dpf);
            gemv_t_acc(&mut dyf, bp.get(M_W_SF), &dps);
            gemv_t_acc(&mut dys, bp.get(M_W_FS), &dpf);
            gemv_t_acc(&mut dys, bp.get(M_W_SS), &dps);
            for j in 0..nf {
                duf[j] = (1.0 - af) * duf[j] + dyf[j] * (1.0 - yf[j] * yf[j]);
            }
            for (j, d) in dus.iter().enumerate() {
                d_state[nf + j] = (1.0 - as_) * d + dys[j] * (1.0 - ys[j] * ys[j]);
            }
            d_state[..nf].copy_from_slice(&duf);
        }
    }
    if let Some(dx) = d_x {
        add_into(dx, &dx_local);
    }
}

/// Appends the kind-specific blocks with seeded uniform weights.
pub(crate) fn push_cell_blocks(p: &mut ParamSet, cfg: &super::RnnConfig, rng: &mut crate::numerics::SeededRng) -> crate::Result<()> {
    use crate::numerics::Matrix;
    let io = cfg.io();
    let mut uniform = |rows: usize, cols: usize, fan_in: usize| {
        let a = 1.0 / (fan_in as f64).sqrt();
        Matrix::from_fn(rows, cols, |_, _| rng.uniform_range(-a, a))
    };
    match cfg.kind {
        CellKind::Lstm => {
            let h = cfg.hidden;
            p.push("wx", uniform(4 * h, io, io + h)?);
            p.push("wh", uniform(4 * h, h, io + h)?);
            let mut b = Matrix::zeros(4 * h, 1)?;
            for j in h..2 * h {
                b.set(j, 0, 1.0);
            }
            p.push("b", b);
        }
        CellKind::Gru => {
            let h = cfg.hidden;
            p.push("wx_zr", uniform(2 * h, io, io + h)?);
            p.push("wh_zr", uniform(2 * h, h, io + h)?);
            p.push("b_zr", Matrix::zeros(2 * h, 1)?);
            p.push("wx_n", uniform(h, io, io + h)?);
            p.push("wh_n", uniform(h, h, io + h)?);
            p.push("b_n", Matrix::zeros(h, 1)?);
        }
        CellKind::Mtrnn => {
            let (nf, ns) = (cfg.fast, cfg.slow);
            p.push("w_fx", uniform(nf, io, io + nf + ns)?);
            p.push("w_ff", uniform(nf, nf, io + nf + ns)?);
            p.push("w_fs", uniform(nf, ns, io + nf + ns)?);
            p.push("b_f", Matrix::zeros(nf, 1)?);
            p.push("w_sf", uniform(ns, nf, nf + ns)?);
            p.push("w_ss", uniform(ns, ns, nf + ns)?);
            p.push("b_s", Matrix::zeros(ns, 1)?);
        }
    }
    Ok(())
}
