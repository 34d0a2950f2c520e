use std::collections::VecDeque;

use super::DomainBox;
use crate::error::{Error, Result};
use crate::point::SpaceTimePoint;

/// Raster resolution used when a domain carries no mask of its own.
pub const DEFAULT_CELLS_PER_UNIT: f64 = 64.0;

/// A rasterized space-time set: `n` spatial axes plus time (last axis).
///
/// Cell `(i_1..i_n, k)` covers `[lo + i·h, lo + (i+1)·h)` per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    n: usize,
    origin: Vec<f64>,
    /// Cell size per axis, time last.
    pub(crate) steps: Vec<f64>,
    counts: Vec<usize>,
    inside: Vec<bool>,
    /// Largest cell size, used for conservative dilation.
    pub cell: f64,
}

impl Raster {
    pub fn from_predicate<F>(domain: &DomainBox, cells_per_unit: f64, pred: F) -> Self
    where
        F: Fn(&[f64], f64) -> bool,
    {
        let n = domain.dim();
        let mut origin = domain.x_lo.clone();
        origin.push(domain.t_lo);
        let mut extent: Vec<f64> = domain.x_lo.iter().zip(&domain.x_hi).map(|(a, b)| b - a).collect();
        extent.push(domain.t_hi - domain.t_lo);
        let counts: Vec<usize> = extent.iter().map(|e| ((e * cells_per_unit).ceil() as usize).max(1)).collect();
        let steps: Vec<f64> = extent.iter().zip(&counts).map(|(e, c)| e / *c as f64).collect();
        let total: usize = counts.iter().product();
        let mut inside = vec![false; total];
        let mut centre = vec![0.0; n + 1];
        for (idx, cell) in inside.iter_mut().enumerate() {
            let mut rem = idx;
            for a in 0..=n {
                let c = rem % counts[a];
                rem /= counts[a];
                centre[a] = origin[a] + (c as f64 + 0.5) * steps[a];
            }
            *cell = pred(&centre[..n], centre[n]);
        }
        let cell = steps.iter().cloned().fold(0.0, f64::max);
        Self { n, origin, steps, counts, inside, cell }
    }

    /// Builds a raster from explicit node flags (layout: first spatial axis
    /// fastest, time slowest). Nodes sit at cell centres.
    pub fn from_cells(origin: Vec<f64>, steps: Vec<f64>, counts: Vec<usize>, inside: Vec<bool>) -> Result<Self> {
        if origin.len() < 2 || origin.len() != steps.len() || steps.len() != counts.len() {
            return Err(Error::InvalidArgument("raster axes disagree".into()));
        }
        if counts.iter().product::<usize>() != inside.len() {
            return Err(Error::InvalidArgument("raster flag count mismatch".into()));
        }
        let cell = steps.iter().cloned().fold(0.0, f64::max);
        Ok(Self { n: origin.len() - 1, origin, steps, counts, inside, cell })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn layers(&self) -> usize {
        self.counts[self.n]
    }

    fn slice_len(&self) -> usize {
        self.counts[..self.n].iter().product()
    }

    fn axis_index(&self, a: usize, v: f64) -> Option<usize> {
        let f = (v - self.origin[a]) / self.steps[a];
        if !(f >= 0.0) {
            return None;
        }
        let i = f.floor() as usize;
        // the closed upper face belongs to the last cell
        if i < self.counts[a] {
            Some(i)
        } else if i == self.counts[a] && f == self.counts[a] as f64 {
            Some(i - 1)
        } else {
            None
        }
    }

    /// `(spatial index, layer)` of the cell containing `(x, t)`.
    pub fn locate(&self, x: &[f64], t: f64) -> Option<(usize, usize)> {
        if x.len() != self.n {
            return None;
        }
        let mut s = 0;
        let mut stride = 1;
        for (a, v) in x.iter().enumerate() {
            s += self.axis_index(a, *v)? * stride;
            stride *= self.counts[a];
        }
        Some((s, self.axis_index(self.n, t)?))
    }

    pub fn inside_xt(&self, x: &[f64], t: f64) -> bool {
        self.locate(x, t).map_or(false, |(s, k)| self.inside[k * self.slice_len() + s])
    }

    pub fn inside_cell(&self, spatial: usize, layer: usize) -> bool {
        self.inside[layer * self.slice_len() + spatial]
    }

    /// True when every cell overlapping `b` is inside.
    pub(crate) fn box_inside(&self, b: &DomainBox) -> bool {
        let mut lo = Vec::with_capacity(self.n + 1);
        let mut hi = Vec::with_capacity(self.n + 1);
        for a in 0..=self.n {
            let (bl, bh) = if a < self.n { (b.x_lo[a], b.x_hi[a]) } else { (b.t_lo, b.t_hi) };
            let Some(l) = self.axis_index(a, bl) else { return false };
            let Some(h) = self.axis_index(a, bh) else { return false };
            lo.push(l);
            hi.push(h);
        }
        let mut idx = lo.clone();
        loop {
            let mut flat = 0;
            let mut stride = 1;
            for a in 0..=self.n {
                flat += idx[a] * stride;
                stride *= self.counts[a];
            }
            if !self.inside[flat] {
                return false;
            }
            let mut a = 0;
            loop {
                if a > self.n {
                    return true;
                }
                if idx[a] < hi[a] {
                    idx[a] += 1;
                    break;
                }
                idx[a] = lo[a];
                a += 1;
            }
        }
    }

    fn spatial_coords(&self, s: usize) -> Vec<usize> {
        let mut rem = s;
        (0..self.n)
            .map(|a| {
                let c = rem % self.counts[a];
                rem /= self.counts[a];
                c
            })
            .collect()
    }

    /// Spatial neighbours (all `3ⁿ − 1` offsets, so 8 in the plane).
    fn neighbours(&self, s: usize, out: &mut Vec<usize>) {
        out.clear();
        let c = self.spatial_coords(s);
        let total = 3usize.pow(self.n as u32);
        for code in 0..total {
            let mut rem = code;
            let mut flat = 0;
            let mut stride = 1;
            let mut ok = true;
            let mut is_self = true;
            for a in 0..self.n {
                let d = (rem % 3) as isize - 1;
                rem /= 3;
                if d != 0 {
                    is_self = false;
                }
                let v = c[a] as isize + d;
                if v < 0 || v >= self.counts[a] as isize {
                    ok = false;
                    break;
                }
                flat += v as usize * stride;
                stride *= self.counts[a];
            }
            if ok && !is_self {
                out.push(flat);
            }
        }
    }

    /// Cells reachable from the cell of `(x, t)` along strictly decreasing
    /// time, as one flag vector per layer (layers above the start are empty).
    ///
    /// Within a layer, movement is an 8-connected flood fill (the layer stands
    /// for a thin slab of time); between layers a path may step to the same
    /// or any neighbouring spatial cell of the next lower layer.
    pub fn lambda_set(&self, x: &[f64], t: f64) -> Result<Vec<Vec<bool>>> {
        let (s0, k0) = self
            .locate(x, t)
            .filter(|(s, k)| self.inside_cell(*s, *k))
            .ok_or_else(|| Error::Precondition("start point outside the rasterized domain".into()))?;
        let len = self.slice_len();
        let mut reach = vec![vec![false; len]; self.layers()];
        let mut queue = VecDeque::new();
        let mut nb = Vec::new();
        reach[k0][s0] = true;
        queue.push_back(s0);
        self.flood(k0, &mut reach[k0], &mut queue, &mut nb);
        for k in (0..k0).rev() {
            let (lower, upper) = reach.split_at_mut(k + 1);
            let above = &upper[0];
            let layer = &mut lower[k];
            for s in 0..len {
                if !above[s] {
                    continue;
                }
                self.neighbours(s, &mut nb);
                nb.push(s);
                for &q in &nb {
                    if !layer[q] && self.inside_cell(q, k) {
                        layer[q] = true;
                        queue.push_back(q);
                    }
                }
            }
            self.flood(k, layer, &mut queue, &mut nb);
        }
        Ok(reach)
    }

    fn flood(&self, k: usize, layer: &mut [bool], queue: &mut VecDeque<usize>, nb: &mut Vec<usize>) {
        while let Some(s) = queue.pop_front() {
            self.neighbours(s, nb);
            for &q in nb.iter() {
                if !layer[q] && self.inside_cell(q, k) {
                    layer[q] = true;
                    queue.push_back(q);
                }
            }
        }
    }
}

/// Whether `to` lies in `Λ(from, E)`: reachable from `from` inside the
/// rasterized `E` by a path with strictly decreasing time.
///
/// Errors when either point is outside `E`. Points that share a raster layer
/// are judged by in-layer connectivity, so the raster can only err toward
/// reporting points as unreachable.
pub fn lambda_reachable(raster: &Raster, from: &SpaceTimePoint, to: &SpaceTimePoint) -> Result<bool> {
    let (st, kt) = raster
        .locate(&to.x, to.t)
        .filter(|(s, k)| raster.inside_cell(*s, *k))
        .ok_or_else(|| Error::Precondition(format!("target {to} outside the domain")))?;
    let reach = raster.lambda_set(&from.x, from.t)?;
    if !(to.t < from.t) {
        return Ok(false);
    }
    Ok(reach[kt][st])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, t: f64) -> SpaceTimePoint {
        SpaceTimePoint::scalar(x, t)
    }

    fn two_chambers() -> Raster {
        // two vertical chambers x ∈ (0.1,0.4) and (0.6,0.9), joined by a bridge only for t > 0.8
        let dom = DomainBox::cube(1, 1.0, 0.0, 1.0);
        Raster::from_predicate(&dom, 64.0, |x, t| {
            let a = x[0] > 0.1 && x[0] < 0.4;
            let b = x[0] > 0.6 && x[0] < 0.9;
            a || b || (t > 0.8 && x[0] > 0.1 && x[0] < 0.9)
        })
    }

    #[test]
    fn band_domain_reaches_everything_below() {
        let r = DomainBox::cube(1, 1.0, 0.0, 1.0).raster(DEFAULT_CELLS_PER_UNIT);
        assert!(lambda_reachable(&r, &pt(-0.8, 0.9), &pt(0.9, 0.1)).unwrap());
        assert!(!lambda_reachable(&r, &pt(0.0, 0.5), &pt(0.0, 0.6)).unwrap());
        assert!(!lambda_reachable(&r, &pt(0.0, 0.5), &pt(0.3, 0.5)).unwrap());
    }

    #[test]
    fn chambers_joined_above_are_separate_below() {
        let r = two_chambers();
        // from inside chamber A below the bridge: chamber B unreachable
        assert!(!lambda_reachable(&r, &pt(0.25, 0.7), &pt(0.75, 0.2)).unwrap());
        assert!(lambda_reachable(&r, &pt(0.25, 0.7), &pt(0.3, 0.2)).unwrap());
        // from the bridge both chambers are reachable
        assert!(lambda_reachable(&r, &pt(0.5, 0.9), &pt(0.75, 0.2)).unwrap());
        assert!(lambda_reachable(&r, &pt(0.5, 0.9), &pt(0.25, 0.2)).unwrap());
    }

    #[test]
    fn exhaustive_oracle_on_small_raster() {
        // brute force: the set of (cell, layer) pairs joined by monotone chains
        let r = two_chambers();
        let len = r.slice_len();
        let start = r.locate(&[0.25], 0.9).unwrap();
        let reach = r.lambda_set(&[0.25], 0.9).unwrap();
        // oracle: iterate "one move" relaxation to a fixed point
        let mut oracle = vec![vec![false; len]; r.layers()];
        oracle[start.1][start.0] = true;
        let mut changed = true;
        let mut nb = Vec::new();
        while changed {
            changed = false;
            for k in 0..=start.1 {
                for s in 0..len {
                    if !oracle[k][s] {
                        continue;
                    }
                    r.neighbours(s, &mut nb);
                    let mut moves: Vec<(usize, usize)> = nb.iter().map(|&q| (q, k)).collect();
                    if k > 0 {
                        moves.extend(nb.iter().map(|&q| (q, k - 1)));
                        moves.push((s, k - 1));
                    }
                    for (q, kk) in moves {
                        if r.inside_cell(q, kk) && !oracle[kk][q] {
                            oracle[kk][q] = true;
                            changed = true;
                        }
                    }
                }
            }
        }
        assert_eq!(reach, oracle);
    }

    #[test]
    fn rejects_points_outside() {
        let r = two_chambers();
        assert!(lambda_reachable(&r, &pt(0.5, 0.5), &pt(0.25, 0.1)).is_err());
        assert!(lambda_reachable(&r, &pt(0.25, 0.5), &pt(0.5, 0.1)).is_err());
    }

    #[test]
    fn planar_raster_uses_diagonal_moves() {
        let dom = DomainBox::cube(2, 1.0, 0.0, 1.0);
        // a diagonal corridor of single cells only connects through corners
        let r = Raster::from_predicate(&dom, 8.0, |x, _| {
            let i = ((x[0] + 1.0) * 8.0).floor();
            let j = ((x[1] + 1.0) * 8.0).floor();
            i == j
        });
        let a = SpaceTimePoint::new(vec![-0.95, -0.95], 0.95).unwrap();
        let b = SpaceTimePoint::new(vec![0.95, 0.95], 0.05).unwrap();
        assert!(lambda_reachable(&r, &a, &b).unwrap());
    }
}
