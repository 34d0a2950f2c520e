//! Monte-Carlo mean values in the field's own coordinates.
//!
//! Time is parametrized as in the tensor engine (`τ̃ = r e^{−v²}`, stratified
//! in `v`), but space is sampled uniformly in the cube around each physical
//! slice and filtered with the ball's membership test, and the kernel is
//! evaluated directly. Nothing is shared with the tensor path except the
//! time parametrization, so the two routes check each other.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

use super::engine::Frame;
use super::MvConfig;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::HeatBall;
use crate::kernels::KernelSpec;
use crate::point::SpaceTimePoint;
use crate::stats::mean_and_se;

const SHARDS: usize = 64;
const STRATA: usize = 64;
const V_MC: f64 = 7.0;
/// Samples closer than this (in time) to the top point are dropped.
const MIN_GAP: f64 = 1e-13;

pub(crate) struct McOutcome {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

struct Shard {
    rng: ChaCha8Rng,
    sum: f64,
    count: usize,
}

fn one_sample(
    rng: &mut ChaCha8Rng,
    idx: usize,
    f: &ScalarField,
    ball: &HeatBall,
    kernel: &KernelSpec,
    frame: &Frame,
    v_hi: f64,
) -> Result<f64> {
    let n = frame.n;
    let big_n = (n + frame.m) as f64;
    let stratum = idx % STRATA;
    let v = v_hi * (stratum as f64 + rng.gen::<f64>()) / STRATA as f64;
    let tau = frame.r * (-v * v).exp();
    let gap = frame.physical_gap(tau);
    // the cube coordinates are drawn even for dropped samples to keep streams aligned
    let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    if !(gap >= MIN_GAP) {
        return Ok(0.0);
    }
    let s = frame.t0 - gap;
    let rho_cl = (2.0 * big_n * tau * v * v).sqrt();
    // slice centre and radius, and ds/dv
    let (centre, rho, dsdv): (Vec<f64>, f64, f64) = if frame.pulled_back {
        let shrink = (-2.0 * gap).exp();
        let scale = (2.0 * s).exp();
        (
            frame.x0.iter().map(|c| c * shrink).collect(),
            rho_cl * scale,
            scale * scale * 2.0 * v * tau,
        )
    } else {
        (frame.x0.clone(), rho_cl, 2.0 * v * tau)
    };
    let p = SpaceTimePoint { x: centre.iter().zip(&u).map(|(c, u)| c + rho * u).collect(), t: s };
    if !ball.contains(&p) {
        return Ok(0.0);
    }
    let k = match kernel.eval(&p) {
        Ok(k) => k,
        Err(Error::OutsideBall(_)) | Err(Error::NearAnchor(_)) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let cube = (2.0 * rho).powi(n as i32);
    Ok(f.eval(&p)? * k * dsdv * cube * v_hi)
}

pub(crate) fn monte_carlo(f: &ScalarField, ball: &HeatBall, kernel: &KernelSpec, cfg: &MvConfig) -> Result<McOutcome> {
    let frame = Frame::new(ball, kernel);
    let n = frame.n;
    let norm = (4.0 * PI * frame.r).powf(-0.5 * n as f64);
    let v_hi = V_MC;
    let mut shards: Vec<Shard> = (0..SHARDS)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            Shard { rng, sum: 0.0, count: 0 }
        })
        .collect();
    let mut batch = (cfg.mc_min_samples / SHARDS).max(STRATA).next_multiple_of(STRATA);
    loop {
        let results: Vec<Result<()>> = shards
            .par_iter_mut()
            .map(|sh| {
                for j in 0..batch {
                    let val = one_sample(&mut sh.rng, sh.count + j, f, ball, kernel, &frame, v_hi)?;
                    sh.sum += val;
                }
                sh.count += batch;
                Ok(())
            })
            .collect();
        results.into_iter().collect::<Result<Vec<()>>>()?;
        let means: Vec<f64> = shards.iter().map(|s| norm * s.sum / s.count as f64).collect();
        let (value, se) = mean_and_se(&means);
        let samples = shards.iter().map(|s| s.count).sum::<usize>();
        if se <= cfg.mc_target_se || samples >= cfg.mc_max_samples {
            return Ok(McOutcome { value, std_error: se, samples });
        }
        let remaining = (cfg.mc_max_samples - samples) / SHARDS;
        batch = (2 * batch).min(remaining.max(STRATA)).next_multiple_of(STRATA);
    }
}
