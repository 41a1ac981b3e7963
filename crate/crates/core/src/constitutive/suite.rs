//! Randomised sampling of the equivalence ratios of the `(p, δ)` calculus.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{NFunction, PDeltaParams, StressModel};
use crate::error::{Error, Result};
use crate::tensor::{frob_inner_unchecked, SymTensor};

/// Sampling options for [`equivalence_suite_with`].
#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub samples: usize,
    pub seed: u64,
    pub dim: usize,
    /// Magnitudes are drawn log-uniformly from this range.
    pub magnitude_range: (f64, f64),
    /// Shift values at which the windows are computed. `δ₀` and the model's
    /// own `δ` are always added.
    pub delta_grid: Vec<f64>,
}

impl SuiteOptions {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            seed,
            dim: 3,
            magnitude_range: (1e-6, 1e6),
            delta_grid: vec![0.0, 1e-3, 1e-2, 1e-1, 1.0],
        }
    }
}

/// Observed window of one ratio at one shift.
#[derive(Clone, Debug, Serialize)]
pub struct RatioWindow {
    pub delta: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

/// Observed range of one ratio over all shifts.
#[derive(Clone, Debug, Serialize)]
pub struct RatioReport {
    pub quantity: String,
    pub p: f64,
    pub mu: f64,
    pub dim: usize,
    pub seed: u64,
    pub samples: usize,
    pub min: f64,
    pub max: f64,
    pub per_delta: Vec<RatioWindow>,
    /// Largest relative deviation of any window from the `δ₀` window; for
    /// `δ = 0` only the excess beyond it counts.
    pub drift: f64,
    /// Window implied by the exponent alone, where one is known.
    pub exact_window: Option<(f64, f64)>,
}

impl RatioReport {
    /// Whether `value` lies in `[min, max]` up to relative slack `rel`.
    pub fn contains(&self, value: f64, rel: f64) -> bool {
        value >= self.min * (1.0 - rel) && value <= self.max * (1.0 + rel)
    }

    /// Whether every window stays inside the exact one, up to relative slack.
    pub fn within_exact(&self, rel: f64) -> Option<bool> {
        self.exact_window.map(|(lo, hi)| self.min >= lo * (1.0 - rel) && self.max <= hi * (1.0 + rel))
    }
}

pub const QUANTITIES: [&str; 15] = [
    "phi_second_ratio",
    "phi_prime_ratio",
    "power_vs_phi",
    "shifted_doubling",
    "monotone_vs_F",
    "monotone_vs_shifted_phi",
    "monotone_vs_phi_second",
    "stress_diff_vs_shifted_phi_prime",
    "work_vs_F",
    "F_vs_phi",
    "work_vs_phi",
    "P_vs_phi_second_grad",
    "P_vs_grad_F",
    "phi_second_grad_vs_grad_F",
    "P_vs_grad_S",
];

fn exact_window(name: &str, p: f64) -> Option<(f64, f64)> {
    match name {
        "phi_second_ratio" => Some((p - 1.0, 1.0)),
        "phi_prime_ratio" => Some((p, 2.0)),
        "shifted_doubling" => Some((2f64.powf(p), 4.0)),
        _ => None,
    }
}

struct Draw {
    p: SymTensor,
    r: SymTensor,
    dq: SymTensor,
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    // Box–Muller; the second variate is discarded to keep draws aligned.
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn random_direction<R: Rng>(rng: &mut R, dim: usize) -> SymTensor {
    let mut t = SymTensor::zeros(dim).expect("dimension checked by caller");
    loop {
        for i in 0..dim {
            for j in i..dim {
                let g = normal(rng);
                t.set(i, j, if i == j { g } else { g * std::f64::consts::FRAC_1_SQRT_2 });
            }
        }
        let n = t.norm();
        if n > 1e-8 {
            return t.scale(1.0 / n);
        }
    }
}

/// Unit tensor at angle `theta` from the unit tensor `e`.
fn rotate_towards<R: Rng>(rng: &mut R, e: &SymTensor, theta: f64) -> SymTensor {
    let dim = e.dim();
    loop {
        let w = random_direction(rng, dim);
        let perp = w.axpby(1.0, e, -frob_inner_unchecked(&w, e));
        let n = perp.norm();
        if n > 1e-8 {
            return e.axpby(theta.cos(), &perp, theta.sin() / n);
        }
    }
}

fn draw<R: Rng>(rng: &mut R, dim: usize, range: (f64, f64), index: usize) -> Draw {
    let (lo, hi) = (range.0.log10(), range.1.log10());
    let mag = |rng: &mut R| 10f64.powf(lo + (hi - lo) * rng.random::<f64>());
    let (a, b) = (mag(rng), mag(rng));
    let e = random_direction(rng, dim);
    // Every eighth pair is exactly (anti-)colinear and every eighth gradient
    // exactly aligned or orthogonal, so the extremal configurations are hit.
    let theta_r = match index % 8 {
        0 => 0.0,
        4 => std::f64::consts::PI,
        _ => std::f64::consts::PI * rng.random::<f64>(),
    };
    let theta_d = match index % 8 {
        1 => 0.0,
        5 => std::f64::consts::FRAC_PI_2,
        _ => std::f64::consts::PI * rng.random::<f64>(),
    };
    let r = rotate_towards(rng, &e, theta_r).scale(b);
    let c = mag(rng);
    let dq = rotate_towards(rng, &e, theta_d).scale(c);
    Draw { p: e.scale(a), r, dq }
}

struct Ratios([f64; 15]);

fn ratios(model: &StressModel, d: &Draw) -> Result<Ratios> {
    let n: NFunction = model.nfunction();
    let mu = model.mu();
    let pp = model.p();
    let delta = model.shift();
    let p = &d.p;
    let q = p.add(&d.r);
    let tp = p.norm();
    let tq = q.norm();
    let diff = p.sub(&q);
    let td = diff.norm();

    let phi_q = n.phi(tq)?;
    let phi1_q = n.phi_prime(tq)?;
    let phi2_q = n.phi_second(tq)?;

    let sp = model.stress(p);
    let sq = model.stress(&q);
    let mono = frob_inner_unchecked(&sp.sub(&sq), &diff);
    let f_diff = model.f_map(p).sub(&model.f_map(&q)).norm_sq();
    let shifted = n.phi_shifted(tp, td)?;
    let shifted_prime = n.phi_shifted_prime(tp, td)?;
    let doubling = n.phi_shifted(tp, 2.0 * td)? / shifted;

    let work = frob_inner_unchecked(&sq, &q);
    let fq = model.f_map(&q).norm_sq();

    let dq = &d.dq;
    let pi = model.p_quantity(&q, dq)?;
    let grad_f = model.f_map_derivative(&q, dq)?.norm_sq();
    let grad_s = model.stress_derivative(&q, dq)?.norm_sq();
    let phi2_grad = mu * phi2_q * dq.norm_sq();

    let dp = delta.powf(pp);
    Ok(Ratios([
        phi2_q * tq / phi1_q,
        phi1_q * tq / phi_q,
        (tq.powf(pp) + dp) / (phi_q + dp),
        doubling,
        mono / f_diff,
        mono / shifted,
        mono / (n.phi_second(tp + td)? * td * td),
        sp.sub(&sq).norm() / shifted_prime,
        work / fq,
        fq / phi_q,
        work / phi_q,
        pi / phi2_grad,
        pi / grad_f,
        phi2_grad / grad_f,
        pi * mu * phi2_q / grad_s,
    ]))
}

/// Samples every equivalence ratio with the default options in `d = 3`.
pub fn equivalence_suite(params: &PDeltaParams, n_samples: usize, seed: u64) -> Result<Vec<RatioReport>> {
    equivalence_suite_with(params, &SuiteOptions::new(n_samples, seed))
}

/// Samples every equivalence ratio on the shift grid of `opts`. The same
/// random draws are reused for every shift.
pub fn equivalence_suite_with(params: &PDeltaParams, opts: &SuiteOptions) -> Result<Vec<RatioReport>> {
    params.validate()?;
    if opts.dim != 2 && opts.dim != 3 {
        return Err(Error::UnsupportedDimension(opts.dim));
    }
    if opts.samples == 0 {
        return Err(Error::InvalidParameter("samples must be positive".into()));
    }
    let mut grid = opts.delta_grid.clone();
    grid.push(params.delta);
    grid.push(params.delta0);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let reference = grid.len() - 1;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let draws: Vec<Draw> = (0..opts.samples)
        .map(|i| draw(&mut rng, opts.dim, opts.magnitude_range, i))
        .collect();

    // windows[quantity][delta] = (min, max)
    let mut windows = vec![vec![(f64::INFINITY, f64::NEG_INFINITY); grid.len()]; QUANTITIES.len()];
    for (k, &delta) in grid.iter().enumerate() {
        let base = PDeltaParams { delta, ..*params };
        let model = StressModel::canonical(base);
        for d in &draws {
            let r = ratios(&model, d)?;
            for (j, v) in r.0.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "non-finite {} at delta = {delta}",
                        QUANTITIES[j]
                    )));
                }
                let w = &mut windows[j][k];
                w.0 = w.0.min(*v);
                w.1 = w.1.max(*v);
            }
        }
    }

    let reports = QUANTITIES
        .iter()
        .zip(windows)
        .map(|(name, w)| {
            let (rmin, rmax) = w[reference];
            let mut drift: f64 = 0.0;
            for (k, &(lo, hi)) in w.iter().enumerate() {
                let (dl, dh) = ((lo - rmin) / rmin, (hi - rmax) / rmax);
                drift = drift.max(if grid[k] == 0.0 {
                    (-dl).max(dh).max(0.0)
                } else {
                    dl.abs().max(dh.abs())
                });
            }
            RatioReport {
                quantity: name.to_string(),
                p: params.p,
                mu: params.mu,
                dim: opts.dim,
                seed: opts.seed,
                samples: opts.samples,
                min: w.iter().map(|x| x.0).fold(f64::INFINITY, f64::min),
                max: w.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max),
                per_delta: grid
                    .iter()
                    .zip(&w)
                    .map(|(&delta, &(min, max))| RatioWindow { delta, min, max, count: opts.samples })
                    .collect(),
                drift,
                exact_window: exact_window(name, params.p),
            }
        })
        .collect();
    Ok(reports)
}

/// Writes one row per (quantity, shift) window.
pub fn write_reports_csv<W: Write>(out: W, header: &str, reports: &[RatioReport]) -> Result<()> {
    let mut out = out;
    writeln!(out, "{header}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["quantity", "p", "mu", "dim", "seed", "samples", "delta", "min", "max"])?;
    for r in reports {
        for win in &r.per_delta {
            w.write_record([
                r.quantity.clone(),
                r.p.to_string(),
                r.mu.to_string(),
                r.dim.to_string(),
                r.seed.to_string(),
                r.samples.to_string(),
                win.delta.to_string(),
                win.min.to_string(),
                win.max.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes the reports as pretty JSON.
pub fn write_reports_json(path: &Path, reports: &[RatioReport]) -> Result<()> {
    let f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(f, reports)?;
    Ok(())
}
