//! Sampled scalar fields on uniform grids, O(1) box sums via prefix tables,
//! and weighted L^p norms.
//!
//! Snapping convention: a cell belongs to a box iff its midpoint lies in the
//! half-open box `[lower, upper)`. Adjacent boxes sharing a wall therefore
//! tile without double counting.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{pairwise_sum, pow_abs, root, Scalar};

/// Uniform axis-aligned grid: `dims[j]` cells of side `h` starting at `origin[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec<S> {
    origin: Vec<S>,
    h: S,
    dims: Vec<usize>,
}

impl<S: Scalar> GridSpec<S> {
    pub fn new(origin: Vec<S>, h: S, dims: Vec<usize>) -> Result<Self> {
        if !(h > S::zero()) || !h.is_finite() {
            return Err(Error::InvalidParam("grid spacing h must be positive".into()));
        }
        if origin.is_empty() || origin.len() != dims.len() {
            return Err(Error::InvalidParam(
                "grid origin and dims must have equal nonzero length".into(),
            ));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidParam("grid dims must all be >= 1".into()));
        }
        if origin.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParam("grid origin must be finite".into()));
        }
        Ok(GridSpec { origin, h, dims })
    }

    /// Square grid over `[origin, origin + h*cells]^dim`.
    pub fn square(origin: S, h: S, cells: usize, dim: usize) -> Result<Self> {
        GridSpec::new(vec![origin; dim], h, vec![cells; dim])
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn origin(&self) -> &[S] {
        &self.origin
    }

    pub fn h(&self) -> S {
        self.h
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Measure of one cell, `h^dim`.
    pub fn cell_measure(&self) -> S {
        let mut m = S::one();
        for _ in 0..self.dim() {
            m = m * self.h;
        }
        m
    }

    pub fn upper(&self) -> Vec<S> {
        self.origin
            .iter()
            .zip(&self.dims)
            .map(|(&o, &d)| o + self.h * S::of_usize(d))
            .collect()
    }

    pub fn covered(&self) -> AxisBox<S> {
        AxisBox::new(self.origin.clone(), self.upper()).expect("covered box is valid")
    }

    /// Flat index with axis 0 fastest (row-major in the CSV sense).
    pub fn flat(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dim());
        let mut f = 0usize;
        for j in (0..self.dim()).rev() {
            debug_assert!(idx[j] < self.dims[j]);
            f = f * self.dims[j] + idx[j];
        }
        f
    }

    pub fn unflat(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0usize; self.dim()];
        for j in 0..self.dim() {
            idx[j] = flat % self.dims[j];
            flat /= self.dims[j];
        }
        idx
    }

    pub fn midpoint(&self, idx: &[usize]) -> Vec<S> {
        idx.iter()
            .enumerate()
            .map(|(j, &i)| self.origin[j] + self.h * (S::of_usize(i) + S::half()))
            .collect()
    }

    /// Index of the cell containing `x` (half-open cells), if any.
    pub fn cell_of(&self, x: &[S]) -> Option<Vec<usize>> {
        let mut idx = Vec::with_capacity(self.dim());
        for j in 0..self.dim() {
            let t = ((x[j] - self.origin[j]) / self.h).floor().to64();
            if t < 0.0 || t >= self.dims[j] as f64 {
                return None;
            }
            idx.push(t as usize);
        }
        Some(idx)
    }

    /// Snap a box to the half-open cell range whose midpoints it contains.
    ///
    /// Near-integer index coordinates are rounded so that boxes with corners
    /// on the grid lattice snap exactly despite floating-point noise.
    pub fn snap_box(&self, b: &AxisBox<S>) -> Option<IndexBox> {
        let mut lo = Vec::with_capacity(self.dim());
        let mut hi = Vec::with_capacity(self.dim());
        for j in 0..self.dim() {
            let tl = (b.lower()[j] - self.origin[j]) / self.h - S::half();
            let tu = (b.upper()[j] - self.origin[j]) / self.h - S::half();
            let l = ceil_snapped(tl).max(0);
            let u = ceil_snapped(tu).min(self.dims[j] as i64);
            if l >= u {
                return None;
            }
            lo.push(l as usize);
            hi.push(u as usize);
        }
        Some(IndexBox { lo, hi })
    }

    /// Snapped measure of a box: cell count times `h^dim`.
    pub fn snapped_measure(&self, b: &AxisBox<S>) -> S {
        match self.snap_box(b) {
            Some(ib) => S::of_usize(ib.count()) * self.cell_measure(),
            None => S::zero(),
        }
    }
}

/// Smallest integer `>= t`, with near-integer `t` rounded to the integer.
fn ceil_snapped<S: Scalar>(t: S) -> i64 {
    let r = t.round();
    let tol = S::of(1e-6) * (S::one() + t.abs());
    if (t - r).abs() <= tol {
        r.to64() as i64
    } else {
        t.ceil().to64() as i64
    }
}

/// Half-open cell-index range per axis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexBox {
    pub lo: Vec<usize>,
    pub hi: Vec<usize>,
}

impl IndexBox {
    pub fn count(&self) -> usize {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&l, &h)| h - l)
            .product()
    }

    pub fn intersect(&self, other: &IndexBox) -> Option<IndexBox> {
        let mut lo = Vec::with_capacity(self.lo.len());
        let mut hi = Vec::with_capacity(self.lo.len());
        for j in 0..self.lo.len() {
            let l = self.lo[j].max(other.lo[j]);
            let h = self.hi[j].min(other.hi[j]);
            if l >= h {
                return None;
            }
            lo.push(l);
            hi.push(h);
        }
        Some(IndexBox { lo, hi })
    }

    /// Visit cells in row-major order (axis 0 fastest).
    pub fn for_each(&self, mut f: impl FnMut(&[usize])) {
        let n = self.lo.len();
        let mut idx = self.lo.clone();
        loop {
            f(&idx);
            let mut j = 0;
            loop {
                idx[j] += 1;
                if idx[j] < self.hi[j] {
                    break;
                }
                idx[j] = self.lo[j];
                j += 1;
                if j == n {
                    return;
                }
            }
        }
    }
}

/// Axis-aligned box given by lower and upper corners.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisBox<S> {
    lower: Vec<S>,
    upper: Vec<S>,
}

impl<S: Scalar> AxisBox<S> {
    pub fn new(lower: Vec<S>, upper: Vec<S>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::InvalidParam("box corners must have equal nonzero length".into()));
        }
        for j in 0..lower.len() {
            if !(lower[j] <= upper[j]) {
                return Err(Error::InvalidParam(format!(
                    "box has lower > upper on axis {j}"
                )));
            }
        }
        Ok(AxisBox { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[S] {
        &self.lower
    }

    pub fn upper(&self) -> &[S] {
        &self.upper
    }

    pub fn measure(&self) -> S {
        let mut m = S::one();
        for j in 0..self.dim() {
            m = m * (self.upper[j] - self.lower[j]);
        }
        m
    }

    pub fn contains_box(&self, other: &AxisBox<S>) -> bool {
        (0..self.dim())
            .all(|j| self.lower[j] <= other.lower[j] && other.upper[j] <= self.upper[j])
    }

    /// Half-open membership `[lower, upper)`.
    pub fn contains_point(&self, x: &[S]) -> bool {
        (0..self.dim()).all(|j| self.lower[j] <= x[j] && x[j] < self.upper[j])
    }

    pub fn intersect(&self, other: &AxisBox<S>) -> Option<AxisBox<S>> {
        let mut lower = Vec::with_capacity(self.dim());
        let mut upper = Vec::with_capacity(self.dim());
        for j in 0..self.dim() {
            let l = self.lower[j].max(other.lower[j]);
            let u = self.upper[j].min(other.upper[j]);
            if !(l < u) {
                return None;
            }
            lower.push(l);
            upper.push(u);
        }
        Some(AxisBox { lower, upper })
    }

    /// Cube with the given center and half-side.
    pub fn cube(center: &[S], half_side: S) -> Result<Self> {
        AxisBox::new(
            center.iter().map(|&c| c - half_side).collect(),
            center.iter().map(|&c| c + half_side).collect(),
        )
    }
}

/// Scalar values sampled at cell midpoints of a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledField<S> {
    spec: GridSpec<S>,
    values: Vec<S>,
}

impl<S: Scalar> SampledField<S> {
    pub fn new(spec: GridSpec<S>, values: Vec<S>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::LengthMismatch(format!(
                "grid has {} cells but {} values were given",
                spec.len(),
                values.len()
            )));
        }
        if let Some(flat) = values.iter().position(|v| !v.is_finite()) {
            let idx = spec.unflat(flat);
            let coords = spec.midpoint(&idx).iter().map(|c| c.to64()).collect();
            return Err(Error::NonFiniteSample { coords });
        }
        Ok(SampledField { spec, values })
    }

    /// Sample `f` at every cell midpoint. Rejects non-finite samples, naming
    /// the first offending coordinate in row-major order.
    pub fn from_sampler(spec: GridSpec<S>, f: impl Fn(&[S]) -> S + Sync) -> Result<Self> {
        let values: Vec<S> = (0..spec.len())
            .into_par_iter()
            .map(|flat| f(&spec.midpoint(&spec.unflat(flat))))
            .collect();
        SampledField::new(spec, values)
    }

    pub fn constant(spec: GridSpec<S>, c: S) -> Result<Self> {
        let n = spec.len();
        SampledField::new(spec, vec![c; n])
    }

    pub fn spec(&self) -> &GridSpec<S> {
        &self.spec
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [S] {
        &mut self.values
    }

    pub fn value(&self, flat: usize) -> S {
        self.values[flat]
    }

    pub fn max_value(&self) -> S {
        self.values.iter().copied().fold(S::neg_infinity(), S::max)
    }

    pub fn min_value(&self) -> S {
        self.values.iter().copied().fold(S::infinity(), S::min)
    }

    /// Pointwise map onto the same grid.
    pub fn map(&self, f: impl Fn(S) -> S + Sync) -> Result<Self> {
        let values: Vec<S> = self.values.par_iter().map(|&v| f(v)).collect();
        SampledField::new(self.spec.clone(), values)
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(S, S) -> S + Sync) -> Result<Self> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch);
        }
        let values: Vec<S> = self
            .values
            .par_iter()
            .zip(other.values.par_iter())
            .map(|(&a, &b)| f(a, b))
            .collect();
        SampledField::new(self.spec.clone(), values)
    }

    /// Set `value` on every cell of the snapped box.
    pub fn fill_box(&mut self, b: &AxisBox<S>, value: S) {
        if let Some(ib) = self.spec.snap_box(b) {
            let spec = self.spec.clone();
            ib.for_each(|idx| {
                self.values[spec.flat(idx)] = value;
            });
        }
    }

    /// Write the grid CSV format: a `# origin=.. h=.. dims=..` header line
    /// followed by row-major values, one grid row per line.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        let origin = join(self.spec.origin.iter());
        let dims = join(self.spec.dims.iter());
        writeln!(w, "# origin={} h={} dims={}", origin, self.spec.h, dims)?;
        let row = self.spec.dims[0];
        for chunk in self.values.chunks(row) {
            writeln!(w, "{}", join(chunk.iter()))?;
        }
        Ok(())
    }

    pub fn read_csv(r: &mut impl BufRead) -> Result<Self> {
        let mut header = String::new();
        r.read_line(&mut header)?;
        let header = header.trim();
        let rest = header
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse("missing # header line".into()))?;
        let mut origin = None;
        let mut h = None;
        let mut dims = None;
        for part in rest.split_whitespace() {
            if let Some(v) = part.strip_prefix("origin=") {
                origin = Some(parse_list::<S>(v)?);
            } else if let Some(v) = part.strip_prefix("h=") {
                h = Some(v.parse::<S>().map_err(|e| Error::Parse(e.to_string()))?);
            } else if let Some(v) = part.strip_prefix("dims=") {
                let d: Vec<usize> = v
                    .split(',')
                    .map(|x| x.parse::<usize>().map_err(|e| Error::Parse(e.to_string())))
                    .collect::<Result<_>>()?;
                dims = Some(d);
            }
        }
        let (origin, h, dims) = match (origin, h, dims) {
            (Some(o), Some(h), Some(d)) => (o, h, d),
            _ => return Err(Error::Parse("header must define origin, h, dims".into())),
        };
        let spec = GridSpec::new(origin, h, dims)?;
        let mut values = Vec::with_capacity(spec.len());
        for line in r.lines() {
            let line = line?;
            for tok in line.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                values.push(tok.parse::<S>().map_err(|e| Error::Parse(e.to_string()))?);
            }
        }
        SampledField::new(spec, values)
    }
}

fn join<T: std::fmt::Display>(it: impl Iterator<Item = T>) -> String {
    it.map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_list<S: Scalar>(s: &str) -> Result<Vec<S>> {
    s.split(',')
        .map(|x| x.trim().parse::<S>().map_err(|e| Error::Parse(e.to_string())))
        .collect()
}

/// Cumulative sums over all lower-left sub-boxes; box sums by
/// inclusion-exclusion in O(2^dim).
#[derive(Clone, Debug)]
pub struct PrefixTable<S> {
    spec: GridSpec<S>,
    cum: Vec<S>,
    cdims: Vec<usize>,
}

impl<S: Scalar> PrefixTable<S> {
    pub fn new(field: &SampledField<S>) -> Self {
        let spec = field.spec().clone();
        let n = spec.dim();
        let cdims: Vec<usize> = spec.dims().iter().map(|&d| d + 1).collect();
        let clen: usize = cdims.iter().product();
        let mut cum = vec![S::zero(); clen];

        // Scatter values to index+1, then prefix-sum along each axis in a
        // fixed order so the result is independent of thread count.
        for flat in 0..spec.len() {
            let idx = spec.unflat(flat);
            let mut cidx = Vec::with_capacity(n);
            for &i in &idx {
                cidx.push(i + 1);
            }
            let cflat = flat_in(&cidx, &cdims);
            cum[cflat] = field.value(flat);
        }
        let mut strides = vec![1usize; n];
        for j in 1..n {
            strides[j] = strides[j - 1] * cdims[j - 1];
        }
        for axis in 0..n {
            let stride = strides[axis];
            let len_axis = cdims[axis];
            let outer: usize = clen / len_axis;
            for o in 0..outer {
                // Base offset of this 1-D lane.
                let mut rem = o;
                let mut base = 0usize;
                for j in 0..n {
                    if j == axis {
                        continue;
                    }
                    let d = cdims[j];
                    base += (rem % d) * strides[j];
                    rem /= d;
                }
                let mut acc = S::zero();
                for i in 0..len_axis {
                    let pos = base + i * stride;
                    acc += cum[pos];
                    cum[pos] = acc;
                }
            }
        }
        PrefixTable { spec, cum, cdims }
    }

    pub fn spec(&self) -> &GridSpec<S> {
        &self.spec
    }

    /// Raw sum of cell values over the half-open index box (no `h^n` factor).
    pub fn raw_sum(&self, ib: &IndexBox) -> S {
        let n = self.spec.dim();
        let mut total = S::zero();
        for mask in 0..(1usize << n) {
            let mut cidx = Vec::with_capacity(n);
            let mut sign_neg = false;
            for j in 0..n {
                if mask & (1 << j) == 0 {
                    cidx.push(ib.hi[j]);
                } else {
                    cidx.push(ib.lo[j]);
                    sign_neg = !sign_neg;
                }
            }
            let v = self.cum[flat_in(&cidx, &self.cdims)];
            if sign_neg {
                total -= v;
            } else {
                total += v;
            }
        }
        total
    }

    /// `h^n` times the sum of values over cells whose midpoints lie in `b`.
    /// Empty snapped intersection yields 0 (see [`GridSpec::snap_box`]).
    pub fn box_sum(&self, b: &AxisBox<S>) -> S {
        match self.spec.snap_box(b) {
            Some(ib) => self.raw_sum(&ib) * self.spec.cell_measure(),
            None => S::zero(),
        }
    }

    pub fn box_cell_count(&self, b: &AxisBox<S>) -> usize {
        self.spec.snap_box(b).map_or(0, |ib| ib.count())
    }

    /// Box sum divided by the snapped measure.
    pub fn box_average(&self, b: &AxisBox<S>) -> Result<S> {
        let ib = self.spec.snap_box(b).ok_or(Error::DegenerateBox)?;
        Ok(self.raw_sum(&ib) / S::of_usize(ib.count()))
    }

    /// Average over the snapped intersection, or 0 when it is empty.
    pub fn box_average_or_zero(&self, b: &AxisBox<S>) -> S {
        match self.spec.snap_box(b) {
            Some(ib) => self.raw_sum(&ib) / S::of_usize(ib.count()),
            None => S::zero(),
        }
    }

    /// Sum and cell count over the union of the snapped boxes, by
    /// inclusion-exclusion on the index ranges. Counts are exact.
    pub fn union_sum(&self, boxes: &[AxisBox<S>]) -> (S, usize) {
        let snapped: Vec<IndexBox> = boxes
            .iter()
            .filter_map(|b| self.spec.snap_box(b))
            .collect();
        let nb = snapped.len();
        let mut total = S::zero();
        let mut cells: i64 = 0;
        for mask in 1usize..(1 << nb) {
            let mut inter: Option<IndexBox> = None;
            let mut ok = true;
            for (j, ib) in snapped.iter().enumerate() {
                if mask & (1 << j) != 0 {
                    inter = match inter {
                        None => Some(ib.clone()),
                        Some(cur) => match cur.intersect(ib) {
                            Some(x) => Some(x),
                            None => {
                                ok = false;
                                break;
                            }
                        },
                    };
                }
            }
            if !ok {
                continue;
            }
            let inter = inter.expect("mask >= 1 selects at least one box");
            let sign_pos = mask.count_ones() % 2 == 1;
            let s = self.raw_sum(&inter);
            let c = inter.count() as i64;
            if sign_pos {
                total += s;
                cells += c;
            } else {
                total -= s;
                cells -= c;
            }
        }
        (total * self.spec.cell_measure(), cells.max(0) as usize)
    }
}

fn flat_in(idx: &[usize], dims: &[usize]) -> usize {
    let mut f = 0usize;
    for j in (0..dims.len()).rev() {
        f = f * dims[j] + idx[j];
    }
    f
}

/// Weighted L^p norm over a region: `(sum |f|^p w h^n)^{1/p}` with a fixed
/// row-major pairwise summation order.
pub fn lp_norm<S: Scalar>(
    f: &SampledField<S>,
    w: &SampledField<S>,
    p: S,
    region: &AxisBox<S>,
) -> Result<S> {
    if f.spec() != w.spec() {
        return Err(Error::SpecMismatch);
    }
    if !(p >= S::one()) {
        return Err(Error::InvalidParam(format!("lp_norm requires p >= 1, got {p}")));
    }
    let spec = f.spec();
    let ib = match spec.snap_box(region) {
        Some(ib) => ib,
        None => return Ok(S::zero()),
    };
    let mut terms = Vec::with_capacity(ib.count());
    ib.for_each(|idx| {
        let flat = spec.flat(idx);
        terms.push(pow_abs(f.value(flat), p) * w.value(flat));
    });
    let total = pairwise_sum(&terms) * spec.cell_measure();
    Ok(root(total, p))
}

/// Analytic sampler descriptors for building fields from configuration.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum SamplerSpec {
    Constant { value: f64 },
    Coordinate { axis: usize },
    AbsPower { alpha: f64 },
    BoxIndicator { lower: Vec<f64>, upper: Vec<f64> },
    /// Uniform values on a dyadic grid in `[lo, hi)`; exact summation-friendly.
    RandomDyadic { seed: u64, lo: f64, hi: f64 },
}

impl SamplerSpec {
    pub fn build<S: Scalar>(&self, spec: GridSpec<S>) -> Result<SampledField<S>> {
        match self {
            SamplerSpec::Constant { value } => SampledField::constant(spec, S::of(*value)),
            SamplerSpec::Coordinate { axis } => {
                let axis = *axis;
                if axis >= spec.dim() {
                    return Err(Error::InvalidParam(format!(
                        "coordinate axis {axis} out of range"
                    )));
                }
                SampledField::from_sampler(spec, |x| x[axis])
            }
            SamplerSpec::AbsPower { alpha } => {
                let a = S::of(*alpha);
                SampledField::from_sampler(spec, |x| {
                    let r2: S = x.iter().map(|&c| c * c).sum();
                    r2.sqrt().powf(a)
                })
            }
            SamplerSpec::BoxIndicator { lower, upper } => {
                let b = AxisBox::new(
                    lower.iter().map(|&c| S::of(c)).collect(),
                    upper.iter().map(|&c| S::of(c)).collect(),
                )?;
                SampledField::from_sampler(spec, |x| {
                    if b.contains_point(x) {
                        S::one()
                    } else {
                        S::zero()
                    }
                })
            }
            SamplerSpec::RandomDyadic { seed, lo, hi } => {
                random_dyadic_field(spec, *seed, S::of(*lo), S::of(*hi))
            }
        }
    }
}

/// Field of random dyadic values in `[lo, hi)` with 2^-20 granularity.
/// Generated sequentially from the seed, so the field is reproducible.
pub fn random_dyadic_field<S: Scalar>(
    spec: GridSpec<S>,
    seed: u64,
    lo: S,
    hi: S,
) -> Result<SampledField<S>> {
    if !(hi > lo) {
        return Err(Error::InvalidParam("random field needs hi > lo".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = (hi - lo) / S::of_usize(1 << 20);
    let values: Vec<S> = (0..spec.len())
        .map(|_| lo + scale * S::of_usize(rng.gen_range(0..(1usize << 20))))
        .collect();
    SampledField::new(spec, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn unit_square(h: f64, cells: usize) -> GridSpec<f64> {
        GridSpec::square(0.0, h, cells, 2).unwrap()
    }

    #[test]
    fn constant_sampler_on_unit_square() {
        let f = SampledField::from_sampler(unit_square(0.25, 4), |_| 1.0).unwrap();
        assert_eq!(f.values().len(), 16);
        assert!(f.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn coordinate_sampler_midpoints() {
        let spec = GridSpec::new(vec![0.0, 0.0], 0.5, vec![2, 2]).unwrap();
        let f = SampledField::from_sampler(spec, |x| x[0]).unwrap();
        assert_eq!(f.values(), &[0.25, 0.75, 0.25, 0.75]);
    }

    #[test]
    fn abs_sampler_matches_enumeration() {
        // |x| on [-1,1]^2 with h = 1/2; oracle enumerates midpoints directly.
        let spec = GridSpec::square(-1.0, 0.5, 4, 2).unwrap();
        let f = SampledField::from_sampler(spec.clone(), |x| {
            (x[0] * x[0] + x[1] * x[1]).sqrt()
        })
        .unwrap();
        for iy in 0..4 {
            for ix in 0..4 {
                let mx = -1.0 + 0.5 * (ix as f64 + 0.5);
                let my = -1.0 + 0.5 * (iy as f64 + 0.5);
                let expect = (mx * mx + my * my).sqrt();
                assert_eq!(f.value(spec.flat(&[ix, iy])), expect);
            }
        }
        // innermost cells have |midpoint| = 0.25 * sqrt(2)
        assert_eq!(f.value(spec.flat(&[1, 1])), 0.125f64.sqrt());
    }

    #[test]
    fn non_finite_sample_is_rejected_with_coordinate() {
        let spec = GridSpec::square(0.0, 0.5, 2, 2).unwrap();
        let err = SampledField::from_sampler(spec, |x| {
            if x[0] > 0.5 && x[1] > 0.5 {
                f64::NAN
            } else {
                1.0
            }
        })
        .unwrap_err();
        match err {
            Error::NonFiniteSample { coords } => assert_eq!(coords, vec![0.75, 0.75]),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn box_sum_of_ones() {
        let f = SampledField::constant(unit_square(0.25, 4), 1.0).unwrap();
        let t = PrefixTable::new(&f);
        let whole = AxisBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(t.box_sum(&whole), 1.0);
        let part = AxisBox::new(vec![0.0, 0.0], vec![0.5, 0.25]).unwrap();
        assert_eq!(t.box_sum(&part), 0.125);
    }

    #[test]
    fn box_sum_outside_domain_is_zero() {
        let f = SampledField::constant(unit_square(0.25, 4), 1.0).unwrap();
        let t = PrefixTable::new(&f);
        let b = AxisBox::new(vec![2.0, 2.0], vec![3.0, 3.0]).unwrap();
        assert_eq!(t.box_sum(&b), 0.0);
        assert_eq!(t.box_cell_count(&b), 0);
        assert!(t.box_average(&b).is_err());
    }

    fn random_dyadic(h: f64, cells: usize, seed: u64) -> SampledField<f64> {
        random_dyadic_field(unit_square(h, cells), seed, 0.0, 1.0).unwrap()
    }

    fn brute_box_sum(f: &SampledField<f64>, ib: &IndexBox) -> f64 {
        // independent nested loop oracle in the same row-major order
        let mut total = 0.0;
        ib.for_each(|idx| total += f.value(f.spec().flat(idx)));
        total * f.spec().cell_measure()
    }

    #[test]
    fn box_sum_matches_nested_loop_exactly_on_dyadic_fields() {
        let f = random_dyadic(1.0 / 32.0, 32, 7);
        let t = PrefixTable::new(&f);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let ix = rng.gen_range(0..32usize);
            let iy = rng.gen_range(0..32usize);
            let wx = rng.gen_range(1..=(32 - ix));
            let wy = rng.gen_range(1..=(32 - iy));
            let b = AxisBox::new(
                vec![ix as f64 / 32.0, iy as f64 / 32.0],
                vec![(ix + wx) as f64 / 32.0, (iy + wy) as f64 / 32.0],
            )
            .unwrap();
            let ib = f.spec().snap_box(&b).unwrap();
            assert_eq!(ib.count(), wx * wy);
            assert_eq!(t.box_sum(&b), brute_box_sum(&f, &ib), "box {b:?}");
        }
    }

    #[test]
    fn box_sum_is_additive_across_partitions() {
        let f = random_dyadic(1.0 / 16.0, 16, 3);
        let t = PrefixTable::new(&f);
        let whole = AxisBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        // split into four quadrants along x = y = 0.5
        let quads = [
            AxisBox::new(vec![0.0, 0.0], vec![0.5, 0.5]).unwrap(),
            AxisBox::new(vec![0.5, 0.0], vec![1.0, 0.5]).unwrap(),
            AxisBox::new(vec![0.0, 0.5], vec![0.5, 1.0]).unwrap(),
            AxisBox::new(vec![0.5, 0.5], vec![1.0, 1.0]).unwrap(),
        ];
        let sum: f64 = quads.iter().map(|q| t.box_sum(q)).sum();
        assert_eq!(sum, t.box_sum(&whole));
        let counts: usize = quads.iter().map(|q| t.box_cell_count(q)).sum();
        assert_eq!(counts, 256);
    }

    #[test]
    fn box_average_examples() {
        let spec = unit_square(1.0 / 8.0, 8);
        let c = SampledField::constant(spec.clone(), 3.5).unwrap();
        let t = PrefixTable::new(&c);
        let b = AxisBox::new(vec![0.25, 0.5], vec![0.75, 1.0]).unwrap();
        assert_eq!(t.box_average(&b).unwrap(), 3.5);

        // f(x,y) = x over the unit square: midpoint rule is exact for linear
        let f = SampledField::from_sampler(spec.clone(), |x| x[0]).unwrap();
        let t = PrefixTable::new(&f);
        let whole = AxisBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert!((t.box_average(&whole).unwrap() - 0.5).abs() < 1e-15);

        // one-cell box returns that cell's value
        let one = AxisBox::new(vec![0.0, 0.0], vec![0.125, 0.125]).unwrap();
        assert_eq!(t.box_average(&one).unwrap(), f.value(0));
    }

    #[test]
    fn union_sum_matches_direct_enumeration() {
        let f = random_dyadic(1.0 / 16.0, 16, 9);
        let t = PrefixTable::new(&f);
        let boxes = [
            AxisBox::new(vec![0.0, 0.0], vec![0.5, 0.5]).unwrap(),
            AxisBox::new(vec![0.25, 0.25], vec![0.75, 0.75]).unwrap(),
            AxisBox::new(vec![0.5, 0.0], vec![1.0, 0.25]).unwrap(),
        ];
        let (sum, cells) = t.union_sum(&boxes);
        // oracle: mark cells
        let spec = f.spec();
        let mut marked = vec![false; spec.len()];
        for b in &boxes {
            if let Some(ib) = spec.snap_box(b) {
                ib.for_each(|idx| marked[spec.flat(idx)] = true);
            }
        }
        let direct: f64 = marked
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| f.value(i))
            .sum();
        let count = marked.iter().filter(|&&m| m).count();
        assert_eq!(cells, count);
        assert!((sum - direct * spec.cell_measure()).abs() < 1e-12);
    }

    #[test]
    fn lp_norm_trivial_cases() {
        let spec = unit_square(0.25, 4);
        let one = SampledField::constant(spec.clone(), 1.0).unwrap();
        let two = SampledField::constant(spec.clone(), 2.0).unwrap();
        let region = AxisBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        for p in [1.0, 1.5, 2.0, 3.0] {
            assert!((lp_norm(&one, &one, p, &region).unwrap() - 1.0).abs() < 1e-15);
        }
        assert!((lp_norm(&two, &one, 2.0, &region).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn lp_norm_matches_loop_oracle() {
        let spec = unit_square(1.0 / 8.0, 8);
        let f = random_dyadic_field(spec.clone(), 21, 0.0, 1.0).unwrap();
        let w = random_dyadic_field(spec.clone(), 22, 0.5, 2.0).unwrap();
        let region = AxisBox::new(vec![0.25, 0.0], vec![1.0, 0.75]).unwrap();
        let p = 1.5;
        let got = lp_norm(&f, &w, p, &region).unwrap();
        let mut total = 0.0;
        let ib = spec.snap_box(&region).unwrap();
        ib.for_each(|idx| {
            let flat = spec.flat(idx);
            total += f.value(flat).abs().powf(p) * w.value(flat);
        });
        let expect = (total * spec.cell_measure()).powf(1.0 / p);
        assert!((got - expect).abs() <= 1e-14 * expect.abs());
    }

    #[test]
    fn lp_norm_rejects_mismatched_specs() {
        let f = SampledField::constant(unit_square(0.25, 4), 1.0).unwrap();
        let w = SampledField::constant(unit_square(0.5, 2), 1.0).unwrap();
        let region = AxisBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            lp_norm(&f, &w, 2.0, &region),
            Err(Error::SpecMismatch)
        ));
    }

    #[test]
    fn csv_round_trip_is_identity() {
        let spec = GridSpec::new(vec![-2.125, -2.125], 1.0 / 32.0, vec![17, 5]).unwrap();
        let f = random_dyadic_field(spec, 5, 0.0, 1.0).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let g = SampledField::<f64>::read_csv(&mut buf.as_slice()).unwrap();
        assert_eq!(f, g);
        // writing again yields identical bytes
        let mut buf2 = Vec::new();
        g.write_csv(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn f32_smoke() {
        let spec = GridSpec::<f32>::square(0.0, 0.25, 4, 2).unwrap();
        let f = SampledField::constant(spec, 1.0f32).unwrap();
        let t = PrefixTable::new(&f);
        let b = AxisBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert!((t.box_sum(&b) - 1.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn lp_norm_is_monotone_and_homogeneous(seed in 0u64..50, lam in 0.01f64..10.0) {
            let spec = unit_square(1.0 / 8.0, 8);
            let f = random_dyadic_field(spec.clone(), seed, 0.0, 1.0).unwrap();
            let w = random_dyadic_field(spec.clone(), seed + 1000, 0.5, 2.0).unwrap();
            let g = f.map(|v| v + 0.25).unwrap(); // g >= f pointwise
            let region = AxisBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
            let p = 1.5;
            let nf = lp_norm(&f, &w, p, &region).unwrap();
            let ng = lp_norm(&g, &w, p, &region).unwrap();
            prop_assert!(nf <= ng * (1.0 + 1e-12));
            let fl = f.map(|v| lam * v).unwrap();
            let nl = lp_norm(&fl, &w, p, &region).unwrap();
            prop_assert!((nl - lam * nf).abs() <= 1e-12 * (nl.abs() + 1.0));
        }
    }
}
