//! Grids on `[0, 1]`, sampled functions, piecewise potentials and finite Radon measures.
//!
//! Every integral in the crate goes through the rules defined here. On the uniform grid the
//! rule is composite Simpson (a 3/8 panel closes an odd cell count), so an `L^p` norm of a
//! sampled function is a fixed weighted sum of `|f_k|^p`. Sub-intervals whose endpoints fall
//! between nodes get 4-point Gauss-Legendre on the local cubic interpolant for the partial
//! cells. Both pieces are fourth-order accurate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_GRID_N: usize = 4096;

/// Distance below which a point is treated as coinciding with a grid node.
const NODE_SNAP: f64 = 1e-13;

const GAUSS4_X: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GAUSS4_W: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// Uniform grid `t_k = k / n`, `k = 0..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UnitGrid {
    n: usize,
}

impl UnitGrid {
    pub const MIN_CELLS: usize = 16;

    pub fn new(n: usize) -> Result<Self> {
        if n < Self::MIN_CELLS {
            return Err(Error::invalid(format!(
                "grid needs at least {} cells, got {n}",
                Self::MIN_CELLS
            )));
        }
        Ok(Self { n })
    }

    /// Number of cells.
    pub fn cells(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        k as f64 / self.n as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n).map(move |k| self.node(k))
    }

    /// Index of the node nearest to `t` (clamped to the grid).
    pub fn nearest(&self, t: f64) -> usize {
        ((t * self.n as f64).round().max(0.0) as usize).min(self.n)
    }

    /// Composite Newton-Cotes weights over all nodes.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.n + 1];
        add_composite_weights(&mut w, 0, self.n, self.step());
        w
    }
}

impl Default for UnitGrid {
    fn default() -> Self {
        Self { n: DEFAULT_GRID_N }
    }
}

/// Adds composite Simpson weights for `cells` cells starting at node `first`.
/// An odd cell count closes with a 3/8 panel; one cell falls back to the trapezoid.
fn add_composite_weights(w: &mut [f64], first: usize, cells: usize, h: f64) {
    match cells {
        0 => {}
        1 => {
            w[first] += h / 2.0;
            w[first + 1] += h / 2.0;
        }
        _ => {
            let (simpson_cells, tail) = if cells.is_multiple_of(2) {
                (cells, false)
            } else {
                (cells - 3, true)
            };
            let mut k = first;
            while k < first + simpson_cells {
                w[k] += h / 3.0;
                w[k + 1] += 4.0 * h / 3.0;
                w[k + 2] += h / 3.0;
                k += 2;
            }
            if tail {
                let c = 3.0 * h / 8.0;
                w[k] += c;
                w[k + 1] += 3.0 * c;
                w[k + 2] += 3.0 * c;
                w[k + 3] += c;
            }
        }
    }
}

/// A quadrature node. `node` records the grid index when the point is a grid node, so that
/// sampled functions on the same grid are read exactly instead of interpolated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint {
    pub t: f64,
    pub w: f64,
    node: Option<(usize, usize)>,
}

fn snapped_node(grid: &UnitGrid, t: f64) -> Option<usize> {
    let k = grid.nearest(t);
    ((t - grid.node(k)).abs() <= NODE_SNAP).then_some(k)
}

fn push_gauss(points: &mut Vec<QuadPoint>, s: f64, e: f64) {
    if e <= s {
        return;
    }
    let mid = 0.5 * (s + e);
    let half = 0.5 * (e - s);
    for (x, w) in GAUSS4_X.iter().zip(GAUSS4_W.iter()) {
        points.push(QuadPoint {
            t: mid + half * x,
            w: half * w,
            node: None,
        });
    }
}

/// Quadrature rule for `[s, e]` aligned with `grid`.
pub fn quad_points(grid: &UnitGrid, s: f64, e: f64) -> Vec<QuadPoint> {
    let mut points = Vec::new();
    if e <= s {
        return points;
    }
    let n = grid.cells();
    let first = snapped_node(grid, s).unwrap_or_else(|| ((s * n as f64).ceil() as usize).min(n));
    let last = snapped_node(grid, e).unwrap_or_else(|| (e * n as f64).floor() as usize);
    if first > last || grid.node(first) > e + NODE_SNAP {
        push_gauss(&mut points, s, e);
        return points;
    }
    let (t_first, t_last) = (grid.node(first), grid.node(last));
    if t_first - s > NODE_SNAP {
        push_gauss(&mut points, s, t_first);
    }
    let cells = last - first;
    if cells == 1 {
        push_gauss(&mut points, t_first, t_last);
    } else if cells >= 2 {
        let mut w = vec![0.0; cells + 1];
        add_composite_weights(&mut w, 0, cells, grid.step());
        for (j, wj) in w.into_iter().enumerate() {
            points.push(QuadPoint {
                t: grid.node(first + j),
                w: wj,
                node: Some((n, first + j)),
            });
        }
    }
    if e - t_last > NODE_SNAP {
        push_gauss(&mut points, t_last, e);
    }
    points
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::invalid(format!("norm exponent must be >= 1, got {p}")));
    }
    Ok(())
}

/// Functions on `[0, 1]` that carry `L^p` norms.
pub trait LpNorm {
    /// `(int |f|^p)^(1/p)`; `p = f64::INFINITY` gives the maximum absolute sample.
    fn lp_norm(&self, p: f64) -> Result<f64>;
}

/// Real samples on a [`UnitGrid`]. [`SampledFunction::eval`] interpolates linearly;
/// quadrature and the ODE integrators use the local cubic interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: UnitGrid,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: UnitGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at index {k}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: UnitGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().map(f).collect())
    }

    pub fn constant(grid: UnitGrid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.len()])
    }

    pub fn grid(&self) -> &UnitGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    fn cell(&self, t: f64) -> (usize, f64) {
        let n = self.grid.cells();
        let x = (t.clamp(0.0, 1.0)) * n as f64;
        let k = (x.floor() as usize).min(n - 1);
        (k, x - k as f64)
    }

    /// Piecewise-linear evaluation.
    pub fn eval(&self, t: f64) -> f64 {
        let (k, s) = self.cell(t);
        self.values[k] + s * (self.values[k + 1] - self.values[k])
    }

    /// Four-point Lagrange interpolation around the cell containing `t`.
    pub fn eval_cubic(&self, t: f64) -> f64 {
        let n = self.grid.cells();
        let (k, s) = self.cell(t);
        if s == 0.0 {
            return self.values[k];
        }
        let start = k.saturating_sub(1).min(n - 3);
        let x = s + (k - start) as f64;
        let v = &self.values[start..start + 4];
        let (x0, x1, x2, x3) = (x, x - 1.0, x - 2.0, x - 3.0);
        -v[0] * x1 * x2 * x3 / 6.0 + v[1] * x0 * x2 * x3 / 2.0 - v[2] * x0 * x1 * x3 / 2.0
            + v[3] * x0 * x1 * x2 / 6.0
    }

    /// Value at a quadrature point: exact when the point is one of our nodes.
    pub fn at(&self, p: &QuadPoint) -> f64 {
        match p.node {
            Some((n, k)) if n == self.grid.cells() => self.values[k],
            _ => self.eval_cubic(p.t),
        }
    }

    pub fn integral(&self) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v)
            .sum()
    }

    /// Integral of `g(f(t))` over `[s, e]`.
    pub fn integrate_over(&self, s: f64, e: f64, g: impl Fn(f64) -> f64) -> f64 {
        quad_points(&self.grid, s, e)
            .iter()
            .map(|p| p.w * g(self.at(p)))
            .sum()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::invalid("sampled functions live on different grids"));
        }
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// `int f g` on the common grid.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        Ok(self.zip_with(other, |a, b| a * b)?.integral())
    }

    /// First derivative by centered differences inside and second-order one-sided
    /// differences at the two endpoints.
    pub fn derivative(&self) -> Self {
        let n = self.grid.cells();
        let h = self.grid.step();
        let v = &self.values;
        let mut d = vec![0.0; n + 1];
        d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
        d[n] = (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * h);
        for k in 1..n {
            d[k] = (v[k + 1] - v[k - 1]) / (2.0 * h);
        }
        Self {
            grid: self.grid,
            values: d,
        }
    }

    /// Three-point second difference at interior node `k`.
    pub fn second_difference(&self, k: usize) -> f64 {
        let h = self.grid.step();
        (self.values[k + 1] - 2.0 * self.values[k] + self.values[k - 1]) / (h * h)
    }

    /// Interior sign changes of consecutive samples `f_1..f_{n-1}`; exact zeros are skipped.
    pub fn sign_changes(&self) -> usize {
        count_sign_changes(&self.values[1..self.values.len() - 1])
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn count_sign_changes(values: &[f64]) -> usize {
    let mut count = 0;
    let mut last = 0.0_f64;
    for &v in values {
        if v != 0.0 {
            if last != 0.0 && (v > 0.0) != (last > 0.0) {
                count += 1;
            }
            last = v;
        }
    }
    count
}

impl LpNorm for SampledFunction {
    fn lp_norm(&self, p: f64) -> Result<f64> {
        check_exponent(p)?;
        if p.is_infinite() {
            return Ok(self.max_abs());
        }
        let s: f64 = self
            .grid
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v.abs().powf(p))
            .sum();
        Ok(s.powf(1.0 / p))
    }
}

/// What a potential looks like on one segment.
#[derive(Debug, Clone, PartialEq)]
pub enum SegmentKind {
    Zero,
    Constant(f64),
    /// Values read from the sampled function restricted to the segment. Samples outside the
    /// segment only feed the interpolation stencil near its ends.
    Smooth(SampledFunction),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub kind: SegmentKind,
}

impl Segment {
    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            SegmentKind::Zero => 0.0,
            SegmentKind::Constant(c) => *c,
            SegmentKind::Smooth(f) => f.eval_cubic(t),
        }
    }

    fn value_at(&self, p: &QuadPoint) -> f64 {
        match &self.kind {
            SegmentKind::Zero => 0.0,
            SegmentKind::Constant(c) => *c,
            SegmentKind::Smooth(f) => f.at(p),
        }
    }

    fn length(&self) -> f64 {
        self.end - self.start
    }
}

/// An integrable potential on `[0, 1]` made of consecutive segments.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePotential {
    segments: Vec<Segment>,
}

impl PiecewisePotential {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| Error::invalid("potential needs at least one segment"))?;
        if first.start != 0.0 {
            return Err(Error::invalid("first segment must start at 0"));
        }
        if segments.last().map(|s| s.end) != Some(1.0) {
            return Err(Error::invalid("last segment must end at 1"));
        }
        for (i, seg) in segments.iter().enumerate() {
            if !(seg.start < seg.end) {
                return Err(Error::invalid(format!("segment {i} is empty or reversed")));
            }
            if i > 0 && segments[i - 1].end != seg.start {
                return Err(Error::invalid(format!(
                    "segment {i} does not start where segment {} ends",
                    i - 1
                )));
            }
            if let SegmentKind::Constant(c) = seg.kind {
                if !c.is_finite() {
                    return Err(Error::invalid(format!("segment {i} has a non-finite value")));
                }
            }
        }
        Ok(Self { segments })
    }

    pub fn zero() -> Self {
        Self {
            segments: vec![Segment {
                start: 0.0,
                end: 1.0,
                kind: SegmentKind::Zero,
            }],
        }
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(vec![Segment {
            start: 0.0,
            end: 1.0,
            kind: SegmentKind::Constant(c),
        }])
    }

    pub fn sampled(f: SampledFunction) -> Self {
        Self {
            segments: vec![Segment {
                start: 0.0,
                end: 1.0,
                kind: SegmentKind::Smooth(f),
            }],
        }
    }

    /// Piecewise-constant potential with breakpoints `edges` (including 0 and 1).
    pub fn steps(edges: &[f64], values: &[f64]) -> Result<Self> {
        if edges.len() != values.len() + 1 {
            return Err(Error::invalid("need one more edge than step value"));
        }
        Self::new(
            edges
                .windows(2)
                .zip(values)
                .map(|(e, &v)| Segment {
                    start: e[0],
                    end: e[1],
                    kind: if v == 0.0 {
                        SegmentKind::Zero
                    } else {
                        SegmentKind::Constant(v)
                    },
                })
                .collect(),
        )
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Interior segment boundaries.
    pub fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments.iter().skip(1).map(|s| s.start)
    }

    /// Index of the segment containing `t` (right-continuous, the last segment owns `t = 1`).
    pub fn segment_index(&self, t: f64) -> usize {
        self.segments
            .iter()
            .position(|s| t < s.end)
            .unwrap_or(self.segments.len() - 1)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.segments[self.segment_index(t)].eval(t)
    }

    /// `int F(point, q(point)) dt` using each segment's own quadrature rule.
    /// `grid` is used for segments that carry no samples of their own.
    pub fn integrate_with(&self, grid: &UnitGrid, f: impl Fn(&QuadPoint, f64) -> f64) -> f64 {
        self.segments
            .iter()
            .map(|seg| {
                let g = match &seg.kind {
                    SegmentKind::Smooth(sf) => *sf.grid(),
                    _ => *grid,
                };
                quad_points(&g, seg.start, seg.end)
                    .iter()
                    .map(|p| p.w * f(p, seg.value_at(p)))
                    .sum::<f64>()
            })
            .sum()
    }

    /// `int q u` for a sampled `u`.
    pub fn integrate_against(&self, u: &SampledFunction) -> f64 {
        self.integrate_with(u.grid(), |p, q| q * u.at(p))
    }

    pub fn integral(&self) -> f64 {
        self.segments
            .iter()
            .map(|seg| match &seg.kind {
                SegmentKind::Zero => 0.0,
                SegmentKind::Constant(c) => c * seg.length(),
                SegmentKind::Smooth(f) => f.integrate_over(seg.start, seg.end, |v| v),
            })
            .sum()
    }

    /// `q + c`.
    pub fn shifted(&self, c: f64) -> Self {
        self.map_values(|v| v + c)
    }

    /// `s * q`.
    pub fn scaled(&self, s: f64) -> Self {
        self.map_values(|v| s * v)
    }

    fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        let segments = self
            .segments
            .iter()
            .map(|seg| {
                let kind = match &seg.kind {
                    SegmentKind::Zero => {
                        let v = f(0.0);
                        if v == 0.0 {
                            SegmentKind::Zero
                        } else {
                            SegmentKind::Constant(v)
                        }
                    }
                    SegmentKind::Constant(c) => SegmentKind::Constant(f(*c)),
                    SegmentKind::Smooth(sf) => SegmentKind::Smooth(sf.map(&f)),
                };
                Segment {
                    start: seg.start,
                    end: seg.end,
                    kind,
                }
            })
            .collect();
        Self { segments }
    }

    /// Largest value over segment samples and segment endpoints.
    pub fn sup(&self) -> f64 {
        self.extreme(f64::max, f64::NEG_INFINITY)
    }

    pub fn inf(&self) -> f64 {
        self.extreme(f64::min, f64::INFINITY)
    }

    fn extreme(&self, pick: fn(f64, f64) -> f64, init: f64) -> f64 {
        let mut m = init;
        for seg in &self.segments {
            match &seg.kind {
                SegmentKind::Zero => m = pick(m, 0.0),
                SegmentKind::Constant(c) => m = pick(m, *c),
                SegmentKind::Smooth(f) => {
                    m = pick(m, f.eval_cubic(seg.start));
                    m = pick(m, f.eval_cubic(seg.end));
                    for (t, v) in f.grid().nodes().zip(f.values()) {
                        if t > seg.start && t < seg.end {
                            m = pick(m, *v);
                        }
                    }
                }
            }
        }
        m
    }

    /// Upper bound on `|q|` used to size eigenvalue brackets.
    pub(crate) fn max_abs(&self) -> f64 {
        self.sup().abs().max(self.inf().abs())
    }
}

impl LpNorm for PiecewisePotential {
    fn lp_norm(&self, p: f64) -> Result<f64> {
        check_exponent(p)?;
        if p.is_infinite() {
            return Ok(self.max_abs());
        }
        let s: f64 = self
            .segments
            .iter()
            .map(|seg| match &seg.kind {
                SegmentKind::Zero => 0.0,
                SegmentKind::Constant(c) => c.abs().powf(p) * seg.length(),
                SegmentKind::Smooth(f) => f.integrate_over(seg.start, seg.end, |v| v.abs().powf(p)),
            })
            .sum();
        Ok(s.powf(1.0 / p))
    }
}

/// A point mass `mass * delta_pos`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub pos: f64,
    pub mass: f64,
}

/// Finite signed measure on `[0, 1]`: integrable density plus finitely many atoms.
///
/// As a function of bounded variation, `mu(t) = int_[0,t] dmu`, so an atom at `t` is already
/// counted in `mu(t)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RadonMeasure {
    density: Option<PiecewisePotential>,
    atoms: Vec<Atom>,
}

impl RadonMeasure {
    pub fn new(density: Option<PiecewisePotential>, mut atoms: Vec<Atom>) -> Result<Self> {
        for a in &atoms {
            if !(0.0..=1.0).contains(&a.pos) {
                return Err(Error::invalid(format!("atom position {} outside [0, 1]", a.pos)));
            }
            if !a.mass.is_finite() || a.mass == 0.0 {
                return Err(Error::invalid(format!("atom mass must be finite and nonzero, got {}", a.mass)));
            }
        }
        atoms.sort_by(|x, y| x.pos.total_cmp(&y.pos));
        if atoms.windows(2).any(|w| w[0].pos == w[1].pos) {
            return Err(Error::invalid("atom positions must be distinct"));
        }
        Ok(Self { density, atoms })
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_density(q: PiecewisePotential) -> Self {
        Self {
            density: Some(q),
            atoms: Vec::new(),
        }
    }

    pub fn dirac(pos: f64, mass: f64) -> Result<Self> {
        Self::new(None, vec![Atom { pos, mass }])
    }

    pub fn density(&self) -> Option<&PiecewisePotential> {
        self.density.as_ref()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// `||density||_1 + sum |mass_i|`.
    pub fn total_variation(&self) -> f64 {
        let ac = self
            .density
            .as_ref()
            .map(|q| q.lp_norm(1.0).unwrap_or(f64::INFINITY))
            .unwrap_or(0.0);
        ac + self.atoms.iter().map(|a| a.mass.abs()).sum::<f64>()
    }

    /// `int u dmu`.
    pub fn pair_against(&self, u: &SampledFunction) -> f64 {
        let ac = self
            .density
            .as_ref()
            .map(|q| q.integrate_against(u))
            .unwrap_or(0.0);
        ac + self.atoms.iter().map(|a| a.mass * u.eval(a.pos)).sum::<f64>()
    }
}

/// JSON form of a potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PotentialSpec {
    Constant { value: f64 },
    Sampled { n: usize, values: Vec<f64> },
    Piecewise { segments: Vec<SegmentSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub start: f64,
    pub end: f64,
    #[serde(flatten)]
    pub body: SegmentBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SegmentBody {
    Zero,
    Constant { value: f64 },
    Sampled { n: usize, values: Vec<f64> },
}

fn sampled_from_spec(n: usize, values: Vec<f64>) -> Result<SampledFunction> {
    SampledFunction::new(UnitGrid::new(n)?, values)
}

impl TryFrom<PotentialSpec> for PiecewisePotential {
    type Error = Error;

    fn try_from(spec: PotentialSpec) -> Result<Self> {
        match spec {
            PotentialSpec::Constant { value } => PiecewisePotential::constant(value),
            PotentialSpec::Sampled { n, values } => {
                Ok(PiecewisePotential::sampled(sampled_from_spec(n, values)?))
            }
            PotentialSpec::Piecewise { segments } => PiecewisePotential::new(
                segments
                    .into_iter()
                    .map(|s| {
                        let kind = match s.body {
                            SegmentBody::Zero => SegmentKind::Zero,
                            SegmentBody::Constant { value } => SegmentKind::Constant(value),
                            SegmentBody::Sampled { n, values } => {
                                SegmentKind::Smooth(sampled_from_spec(n, values)?)
                            }
                        };
                        Ok(Segment {
                            start: s.start,
                            end: s.end,
                            kind,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
        }
    }
}

impl From<&PiecewisePotential> for PotentialSpec {
    fn from(q: &PiecewisePotential) -> Self {
        let body = |kind: &SegmentKind| match kind {
            SegmentKind::Zero => SegmentBody::Zero,
            SegmentKind::Constant(c) => SegmentBody::Constant { value: *c },
            SegmentKind::Smooth(f) => SegmentBody::Sampled {
                n: f.grid().cells(),
                values: f.values().to_vec(),
            },
        };
        PotentialSpec::Piecewise {
            segments: q
                .segments()
                .iter()
                .map(|s| SegmentSpec {
                    start: s.start,
                    end: s.end,
                    body: body(&s.kind),
                })
                .collect(),
        }
    }
}

/// JSON form of a measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub density: Option<PotentialSpec>,
    #[serde(default)]
    pub atoms: Vec<Atom>,
}

impl TryFrom<MeasureSpec> for RadonMeasure {
    type Error = Error;

    fn try_from(spec: MeasureSpec) -> Result<Self> {
        let density = spec.density.map(PiecewisePotential::try_from).transpose()?;
        RadonMeasure::new(density, spec.atoms)
    }
}
